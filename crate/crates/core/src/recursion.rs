//! Powers of a companion matrix via the scalar recurrence
//! `a_n = tau a_{n-1} - sigma a_{n-2} + delta a_{n-3}`.
//!
//! Every entry of `A^n` is a combination of five consecutive terms of the
//! sequence, so the recurrence yields `A^n` in O(1) per step. The affine orbit
//! `P_n = A^n P_0 + mu S_n C` uses the geometric sum `S_n = I + A + ... + A^(n-1)`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::map::{offset_column, PwlParams, Side, SideParams, State3};

/// Sliding window `(a_n, a_{n-1}, a_{n-2}, a_{n-3}, a_{n-4})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionState {
    pub window: [f64; 5],
    pub n: usize,
    pub params: SideParams,
}

impl RecursionState {
    /// `a_0 = 1, a_-1 = a_-2 = 0, a_-3 = 1/delta`, and `a_-4 = sigma/delta^2`
    /// obtained by running the recurrence one step backwards.
    pub fn new(params: SideParams) -> Result<Self> {
        let d = params.delta;
        if d == 0.0 {
            return Err(Error::SingularMatrix);
        }
        Ok(Self {
            window: [1.0, 0.0, 0.0, 1.0 / d, params.sigma / (d * d)],
            n: 0,
            params,
        })
    }

    pub fn advance(&self) -> Self {
        let [a0, a1, a2, a3, _] = self.window;
        let p = self.params;
        let next = p.tau * a0 - p.sigma * a1 + p.delta * a2;
        Self {
            window: [next, a0, a1, a2, a3],
            n: self.n + 1,
            params: p,
        }
    }

    pub fn head(&self) -> f64 {
        self.window[0]
    }

    /// `A^n` assembled from the window.
    pub fn matrix(&self) -> Matrix3<f64> {
        let [a0, a1, a2, a3, a4] = self.window;
        let SideParams { sigma, delta, .. } = self.params;
        Matrix3::new(
            a0,
            a1,
            a2,
            delta * a2 - sigma * a1,
            delta * a3 - sigma * a2,
            delta * a4 - sigma * a3,
            delta * a1,
            delta * a2,
            delta * a3,
        )
    }
}

fn finite(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::OverflowDetected)
    }
}

pub fn matrix_power(params: &SideParams, n: usize) -> Result<Matrix3<f64>> {
    if params.delta == 0.0 {
        return Err(Error::SingularMatrix);
    }
    if n == 0 {
        // the window form of A^0 is only identity up to rounding
        return Ok(Matrix3::identity());
    }
    let mut state = RecursionState::new(*params)?;
    for _ in 0..n {
        state = state.advance();
    }
    let m = state.matrix();
    finite(&m)?;
    Ok(m)
}

/// `S_n = I + A + ... + A^(n-1)`; `S_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomSumState {
    pub sum: Matrix3<f64>,
    pub n: usize,
}

impl Default for GeomSumState {
    fn default() -> Self {
        Self {
            sum: Matrix3::zeros(),
            n: 0,
        }
    }
}

impl GeomSumState {
    /// `S_{n+1} = A S_n + I`.
    pub fn advance(&self, a: &Matrix3<f64>) -> Self {
        Self {
            sum: a * self.sum + Matrix3::identity(),
            n: self.n + 1,
        }
    }
}

/// Successive points `P_1, P_2, ...` of the affine orbit `A^n P_0 + mu S_n C`
/// of one side's branch, driven by the recurrence.
#[derive(Debug, Clone)]
pub struct AffineOrbit {
    start: State3,
    mu: f64,
    matrix: Matrix3<f64>,
    power: RecursionState,
    sum: GeomSumState,
}

impl AffineOrbit {
    pub fn new(params: &PwlParams, side: Side, start: State3) -> Result<Self> {
        let sp = params.side(side);
        Ok(Self {
            start,
            mu: params.mu,
            matrix: sp.companion(),
            power: RecursionState::new(sp)?,
            sum: GeomSumState::default(),
        })
    }

    pub fn index(&self) -> usize {
        self.power.n
    }

    pub fn current(&self) -> State3 {
        self.power.matrix() * self.start + self.mu * self.sum.sum * offset_column()
    }

    /// Advances one step and returns the new point.
    pub fn next_point(&mut self) -> Result<State3> {
        self.power = self.power.advance();
        self.sum = self.sum.advance(&self.matrix);
        let p = self.current();
        if p.iter().all(|v| v.is_finite()) {
            Ok(p)
        } else {
            Err(Error::OverflowDetected)
        }
    }
}

/// `P_n` assuming every intermediate iterate stays on `side`.
pub fn orbit_point(params: &PwlParams, side: Side, p0: &State3, n: usize) -> Result<State3> {
    let mut orbit = AffineOrbit::new(params, side, *p0)?;
    let mut p = *p0;
    for _ in 0..n {
        p = orbit.next_point()?;
    }
    Ok(p)
}

/// `(A - I)^-1 (A^n - I) C`, the explicit form of `S_n C` (test oracle).
pub fn geometric_sum_explicit(a: &Matrix3<f64>, a_n: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let inv = (a - Matrix3::identity()).try_inverse()?;
    Some(inv * (a_n - Matrix3::identity()) * offset_column())
}
