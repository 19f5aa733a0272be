//! The piecewise-affine normal-form map
//!
//! ```text
//! X' = A_l X + mu C   if x <= 0
//! X' = A_r X + mu C   if x >= 0
//! ```
//!
//! with `C = (1, 0, 0)` and companion matrices built from trace, second trace
//! and determinant of each side. The two branches agree on the border `x = 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// A point of phase space.
pub type State3 = Vector3<f64>;

/// The constant column `C = (1, 0, 0)`.
pub fn offset_column() -> State3 {
    Vector3::new(1.0, 0.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Closed-region membership: the border belongs to both sides.
    pub fn contains(self, x: &State3) -> bool {
        match self {
            Side::Left => x.x <= 0.0,
            Side::Right => x.x >= 0.0,
        }
    }

    /// Open-region membership.
    pub fn contains_strictly(self, x: &State3) -> bool {
        match self {
            Side::Left => x.x < 0.0,
            Side::Right => x.x > 0.0,
        }
    }

    /// Side of a point, with the border assigned to the left branch.
    pub fn of(x: &State3) -> Side {
        if x.x <= 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// Trace, second trace and determinant of one side's matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideParams {
    pub tau: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl SideParams {
    pub fn new(tau: f64, sigma: f64, delta: f64) -> Self {
        Self { tau, sigma, delta }
    }

    /// Companion matrix with rows `(tau, 1, 0)`, `(-sigma, 0, 1)`, `(delta, 0, 0)`.
    pub fn companion(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.tau, 1.0, 0.0, //
            -self.sigma, 0.0, 1.0, //
            self.delta, 0.0, 0.0,
        )
    }

    /// `det(I - A) = 1 - tau + sigma - delta`; zero iff 1 is an eigenvalue.
    pub fn unit_gap(&self) -> f64 {
        1.0 - self.tau + self.sigma - self.delta
    }

    /// Inverse of the companion matrix in closed form.
    pub fn companion_inverse(&self) -> Result<Matrix3<f64>> {
        let d = self.delta;
        if d == 0.0 {
            return Err(Error::SingularMatrix);
        }
        Ok(Matrix3::new(
            0.0,
            0.0,
            1.0 / d,
            1.0,
            0.0,
            -self.tau / d,
            0.0,
            1.0,
            self.sigma / d,
        ))
    }
}

/// The seven parameters of the normal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwlParams {
    pub tau_l: f64,
    pub sigma_l: f64,
    pub delta_l: f64,
    pub tau_r: f64,
    pub sigma_r: f64,
    pub delta_r: f64,
    pub mu: f64,
}

/// Names of the seven parameters, used for sweeps and configuration keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamName {
    TauL,
    SigmaL,
    DeltaL,
    TauR,
    SigmaR,
    DeltaR,
    Mu,
}

impl ParamName {
    pub const ALL: [ParamName; 7] = [
        ParamName::TauL,
        ParamName::SigmaL,
        ParamName::DeltaL,
        ParamName::TauR,
        ParamName::SigmaR,
        ParamName::DeltaR,
        ParamName::Mu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::TauL => "tau_l",
            ParamName::SigmaL => "sigma_l",
            ParamName::DeltaL => "delta_l",
            ParamName::TauR => "tau_r",
            ParamName::SigmaR => "sigma_r",
            ParamName::DeltaR => "delta_r",
            ParamName::Mu => "mu",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown parameter name `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointInfo {
    pub location: State3,
    pub side: Side,
    pub admissible: bool,
}

impl PwlParams {
    pub fn new(
        tau_l: f64,
        sigma_l: f64,
        delta_l: f64,
        tau_r: f64,
        sigma_r: f64,
        delta_r: f64,
        mu: f64,
    ) -> Result<Self> {
        let p = Self {
            tau_l,
            sigma_l,
            delta_l,
            tau_r,
            sigma_r,
            delta_r,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// The motivating parameter set: a saddle-focus on the left, a flip
    /// saddle on the right, and a chaotic attractor at `tau_r = 0.58`.
    pub fn shilnikov_example() -> Self {
        Self {
            tau_l: 1.0,
            sigma_l: -0.25,
            delta_l: 0.3,
            tau_r: 0.58,
            sigma_r: 0.38,
            delta_r: -1.27,
            mu: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for name in ParamName::ALL {
            let v = self.get(name);
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.delta_l == 0.0 || self.delta_r == 0.0 {
            return Err(Error::InvalidParams(
                "delta_l and delta_r must be non-zero".into(),
            ));
        }
        if self.mu == 0.0 {
            return Err(Error::InvalidParams("mu must be non-zero".into()));
        }
        Ok(())
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::TauL => self.tau_l,
            ParamName::SigmaL => self.sigma_l,
            ParamName::DeltaL => self.delta_l,
            ParamName::TauR => self.tau_r,
            ParamName::SigmaR => self.sigma_r,
            ParamName::DeltaR => self.delta_r,
            ParamName::Mu => self.mu,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        match name {
            ParamName::TauL => self.tau_l = value,
            ParamName::SigmaL => self.sigma_l = value,
            ParamName::DeltaL => self.delta_l = value,
            ParamName::TauR => self.tau_r = value,
            ParamName::SigmaR => self.sigma_r = value,
            ParamName::DeltaR => self.delta_r = value,
            ParamName::Mu => self.mu = value,
        }
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn side(&self, side: Side) -> SideParams {
        match side {
            Side::Left => SideParams::new(self.tau_l, self.sigma_l, self.delta_l),
            Side::Right => SideParams::new(self.tau_r, self.sigma_r, self.delta_r),
        }
    }

    /// `(A_l, A_r)`.
    pub fn matrices(&self) -> (Matrix3<f64>, Matrix3<f64>) {
        (
            self.side(Side::Left).companion(),
            self.side(Side::Right).companion(),
        )
    }

    /// Applies the affine branch of `side` regardless of where `x` lies.
    pub fn apply_branch(&self, side: Side, x: &State3) -> State3 {
        let s = self.side(side);
        // Companion structure: (tau x + y + mu, -sigma x + z, delta x).
        Vector3::new(s.tau * x.x + x.y + self.mu, -s.sigma * x.x + x.z, s.delta * x.x)
    }

    /// Inverse of the affine branch of `side`.
    pub fn invert_branch(&self, side: Side, x: &State3) -> Result<State3> {
        let s = self.side(side);
        if s.delta == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let w = x - self.mu * offset_column();
        let px = w.z / s.delta;
        Ok(Vector3::new(px, w.x - s.tau * px, w.y + s.sigma * px))
    }

    /// One application of the map. On the border both branches coincide.
    pub fn step(&self, x: &State3) -> State3 {
        self.apply_branch(Side::of(x), x)
    }

    /// Every consistent preimage of `x`: the candidate of each branch is kept
    /// iff it lies in that branch's closed region.
    pub fn inverse_step(&self, x: &State3) -> Result<Vec<State3>> {
        let mut out = Vec::with_capacity(2);
        for side in [Side::Left, Side::Right] {
            let y = self.invert_branch(side, x)?;
            if side.contains(&y) {
                // A border preimage is shared by both branches.
                if !out.iter().any(|p: &State3| *p == y) {
                    out.push(y);
                }
            }
        }
        Ok(out)
    }

    /// Fixed point of one side's affine map, whether admissible or virtual.
    pub fn fixed_point(&self, side: Side) -> Result<FixedPointInfo> {
        let s = self.side(side);
        let den = s.unit_gap();
        if den == 0.0 {
            return Err(Error::DegenerateFixedPoint(side));
        }
        let k = self.mu / den;
        let location = Vector3::new(k, k * (s.delta - s.sigma), k * s.delta);
        Ok(FixedPointInfo {
            location,
            side,
            admissible: side.contains(&location),
        })
    }

    /// `(L*, R*)`.
    pub fn fixed_points(&self) -> Result<(FixedPointInfo, FixedPointInfo)> {
        Ok((self.fixed_point(Side::Left)?, self.fixed_point(Side::Right)?))
    }

    /// Iterates `n` steps from `x`, failing on non-finite values.
    pub fn iterate(&self, x: &State3, n: usize) -> Result<State3> {
        let mut p = *x;
        for i in 0..n {
            p = self.step(&p);
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::DivergentOrbit(i + 1));
            }
        }
        Ok(p)
    }

    /// `x0, F(x0), ..., F^n(x0)`.
    pub fn orbit(&self, x0: &State3, n: usize) -> Vec<State3> {
        let mut out = Vec::with_capacity(n + 1);
        let mut p = *x0;
        out.push(p);
        for _ in 0..n {
            p = self.step(&p);
            out.push(p);
        }
        out
    }
}
