use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::map::{PwlParams, Side, State3};

/// Tangent frame propagated by the piecewise-constant Jacobian and
/// re-orthonormalised by QR after every step.
#[derive(Debug, Clone)]
pub struct LyapunovAccumulator {
    frame: Matrix3<f64>,
    sums: [f64; 3],
    steps: usize,
}

impl Default for LyapunovAccumulator {
    fn default() -> Self {
        Self {
            frame: Matrix3::identity(),
            sums: [0.0; 3],
            steps: 0,
        }
    }
}

impl LyapunovAccumulator {
    /// Accounts for one step taken from `x`. Border points use the left matrix.
    pub fn push(&mut self, params: &PwlParams, x: &State3) {
        let side = Side::of(x);
        let a = params.side(side).companion();
        let qr = (a * self.frame).qr();
        let r = qr.r();
        for i in 0..3 {
            self.sums[i] += r[(i, i)].abs().ln();
        }
        self.frame = qr.q();
        self.steps += 1;
    }

    /// Exponents sorted in descending order.
    pub fn exponents(&self) -> [f64; 3] {
        let n = self.steps.max(1) as f64;
        let mut out = self.sums.map(|s| s / n);
        out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        out
    }
}

pub fn lyapunov_spectrum(
    params: &PwlParams,
    x0: &State3,
    n_iter: usize,
    n_transient: usize,
) -> Result<[f64; 3]> {
    if n_iter == 0 {
        return Err(Error::InvalidParams("n_iter must be positive".into()));
    }
    let mut x = params.iterate(x0, n_transient)?;
    let mut acc = LyapunovAccumulator::default();
    for i in 0..n_iter {
        acc.push(params, &x);
        x = params.step(&x);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::DivergentOrbit(n_transient + i + 1));
        }
    }
    Ok(acc.exponents())
}
