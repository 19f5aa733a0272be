//! Complex interpolation of the discrete map.
//!
//! For a non-singular matrix with distinct eigenvalues, `A^t = P D^t P^-1`
//! with `D^t = diag(exp(t ln l_i))` on the principal logarithm. The companion
//! orbit of `X0` on `t in [0, 1]` is
//! `A_s^t X0 + mu (A_s - I)^-1 (A_s^t - I) C`, with the side `s` picked by
//! the border tie chain in [`resolve_side`]. Longer times compose
//! `floor(t)` real steps with one fractional piece.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::map::{offset_column, PwlParams, Side, State3};
use crate::spectral::SpectralData;

pub type ComplexState3 = Vector3<Complex64>;

pub fn real_part(z: &ComplexState3) -> State3 {
    z.map(|c| c.re)
}

pub fn imag_part(z: &ComplexState3) -> State3 {
    z.map(|c| c.im)
}

/// Eigen-data of one side plus principal logarithms of its eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPower {
    pub spectral: SpectralData,
    pub log_eigenvalues: [Complex64; 3],
}

impl DiagonalPower {
    pub fn new(spectral: SpectralData) -> Result<Self> {
        if spectral.eigenvalues.iter().any(|l| l.norm() == 0.0) {
            return Err(Error::SingularMatrix);
        }
        // Complex64::ln is the principal branch: arg in (-pi, pi].
        let log_eigenvalues = spectral.eigenvalues.map(|l| l.ln());
        Ok(Self {
            spectral,
            log_eigenvalues,
        })
    }

    pub fn for_side(params: &PwlParams, side: Side) -> Result<Self> {
        Self::new(SpectralData::of_side(&params.side(side))?)
    }

    /// `exp(t ln l_i)`.
    pub fn diagonal(&self, t: f64) -> [Complex64; 3] {
        self.log_eigenvalues.map(|g| (g * t).exp())
    }

    fn conjugate(&self, diag: [Complex64; 3]) -> Matrix3<Complex64> {
        let s = &self.spectral;
        s.base_change * Matrix3::from_diagonal(&Vector3::from(diag)) * s.inverse_base_change
    }

    pub fn matrix_power_t(&self, t: f64) -> Matrix3<Complex64> {
        self.conjugate(self.diagonal(t))
    }

    /// `(A - I)^-1 (A^t - I)`, evaluated in the eigenbasis.
    pub fn geometric_factor(&self, t: f64) -> Result<Matrix3<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        let mut diag = [Complex64::new(0.0, 0.0); 3];
        for (i, slot) in diag.iter_mut().enumerate() {
            let l = self.spectral.eigenvalues[i];
            if (l - one).norm() == 0.0 {
                return Err(Error::UnitEigenvalue);
            }
            *slot = ((self.log_eigenvalues[i] * t).exp() - one) / (l - one);
        }
        Ok(self.conjugate(diag))
    }
}

/// Side used for interpolating from `x0`: the sign of the first non-zero of
/// `x0`, `y0 + mu`, `z0 + mu`, `mu`. Each term is the x-coordinate of the
/// next iterate while the previous ones sit on the border.
pub fn resolve_side(mu: f64, x0: &State3) -> Result<Side> {
    for v in [x0.x, x0.y + mu, x0.z + mu, mu] {
        if v < 0.0 {
            return Ok(Side::Left);
        }
        if v > 0.0 {
            return Ok(Side::Right);
        }
    }
    Err(Error::UnresolvableSide)
}

fn complexify(x: &State3) -> ComplexState3 {
    x.map(|v| Complex64::new(v, 0.0))
}

/// Immutable interpolator holding both sides' diagonalisations.
#[derive(Debug, Clone)]
pub struct Interpolator {
    params: PwlParams,
    left: DiagonalPower,
    right: DiagonalPower,
}

impl Interpolator {
    pub fn new(params: &PwlParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            left: DiagonalPower::for_side(params, Side::Left)?,
            right: DiagonalPower::for_side(params, Side::Right)?,
        })
    }

    pub fn params(&self) -> &PwlParams {
        &self.params
    }

    pub fn power(&self, side: Side) -> &DiagonalPower {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Companion orbit on one piece, `t` in `[0, 1]`.
    pub fn companion_orbit(&self, x0: &State3, t: f64) -> Result<ComplexState3> {
        let side = resolve_side(self.params.mu, x0)?;
        let dp = self.power(side);
        let at = dp.matrix_power_t(t);
        let g = dp.geometric_factor(t)?;
        let c = complexify(&offset_column());
        Ok(at * complexify(x0) + g * c * Complex64::new(self.params.mu, 0.0))
    }

    /// `floor(t)` steps of the map followed by the fractional remainder.
    pub fn companion_orbit_extended(&self, x0: &State3, t: f64) -> Result<ComplexState3> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParams(format!("negative time {t}")));
        }
        let whole = t.floor();
        let frac = t - whole;
        let base = self.params.iterate(x0, whole as usize)?;
        if frac == 0.0 {
            return Ok(complexify(&base));
        }
        self.companion_orbit(&base, frac)
    }

    /// Samples `X(t)` on `0, dt, 2 dt, ..., t_end` (end included).
    pub fn sample_curve(&self, x0: &State3, t_end: f64, dt: f64) -> Result<Vec<CurvePoint>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams("sampling step must be positive".into()));
        }
        let steps = (t_end / dt).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            // integer multiples avoid accumulated drift at integer times
            let t = if k == steps { t_end } else { k as f64 * dt };
            let value = self.companion_orbit_extended(x0, t)?;
            out.push(CurvePoint { t, value });
        }
        Ok(out)
    }
}

pub const DEFAULT_CURVE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub value: ComplexState3,
}

pub fn companion_orbit(params: &PwlParams, x0: &State3, t: f64) -> Result<ComplexState3> {
    Interpolator::new(params)?.companion_orbit(x0, t)
}

pub fn companion_orbit_extended(params: &PwlParams, x0: &State3, t: f64) -> Result<ComplexState3> {
    Interpolator::new(params)?.companion_orbit_extended(x0, t)
}

/// CSV with columns `t, re_x, re_y, re_z, im_x, im_y, im_z`.
pub fn write_curve_csv<W: Write>(mut w: W, curve: &[CurvePoint]) -> io::Result<()> {
    writeln!(w, "t,re_x,re_y,re_z,im_x,im_y,im_z")?;
    for p in curve {
        let re = real_part(&p.value);
        let im = imag_part(&p.value);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            g12(p.t),
            g12(re.x),
            g12(re.y),
            g12(re.z),
            g12(im.x),
            g12(im.y),
            g12(im.z)
        )?;
    }
    Ok(())
}
