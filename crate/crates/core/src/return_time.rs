//! Border-return time of an orbit launched from the border.
//!
//! In the eigenbasis of the governing matrix the interpolated x-coordinate is
//!
//! ```text
//! f(t) = Re( c_1 l_1^t + c_2 l_2^t + c_3 l_3^t ) + x*
//! ```
//!
//! with `x*` the x-coordinate of that side's fixed point. Its least positive
//! root locates the first return to the border. With one real eigenvalue
//! `l_1 > 0` and a complex pair `r0 e^{+-i theta0}` this reduces to
//!
//! ```text
//! f(t) = a1 l_1^t + 2 a2 r0^t cos(theta0 t + phase) + a3
//! ```
//!
//! which is squeezed between two exponential polynomials `f+-`. Root counts
//! and exclusion bounds for those come from a Descartes-type rule.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::map::{PwlParams, Side, State3};
use crate::spectral::SpectralData;

/// Smallest admissible root; excludes the trivial root at `t = 0`.
pub const ROOT_EPSILON: f64 = 1e-6;
pub const ROOT_TOLERANCE: f64 = 1e-10;
pub const MAX_SCAN_STEP: f64 = 0.25;
/// Cap used when no analytic horizon is available.
pub const FALLBACK_HORIZON: usize = 10_000;

/// The oscillatory closed form `a1 l1^t + 2 a2 r0^t cos(theta0 t + phase) + a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleFocusForm {
    pub alpha1: f64,
    /// Non-negative amplitude of the oscillating term.
    pub alpha2: f64,
    pub alpha3: f64,
    pub phase: f64,
    pub lambda1: f64,
    pub r0: f64,
    pub theta0: f64,
}

impl SaddleFocusForm {
    pub fn eval(&self, t: f64) -> f64 {
        self.alpha1 * self.lambda1.powf(t)
            + 2.0 * self.alpha2 * (self.theta0 * t + self.phase).cos() * self.r0.powf(t)
            + self.alpha3
    }

    /// True when the real exponential grows and the oscillation decays.
    pub fn real_term_dominates(&self) -> bool {
        self.lambda1 > 1.0 && self.r0 < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTimeModel {
    pub eigenvalues: [Complex64; 3],
    pub log_eigenvalues: [Complex64; 3],
    /// `c_i = p_1i (P^-1 (X0 - X*))_i`.
    pub coefficients: [Complex64; 3],
    /// x-coordinate of the governing fixed point.
    pub constant: f64,
    pub start: State3,
    pub canonical: Option<SaddleFocusForm>,
}

impl ReturnTimeModel {
    /// Model for the affine map with linear part `spec` and fixed point
    /// `fixed_point`, started at `x0` (not necessarily on the border).
    pub fn from_affine(spec: &SpectralData, fixed_point: &State3, x0: &State3) -> Self {
        let shifted = (x0 - fixed_point).map(|v| Complex64::new(v, 0.0));
        let xi = spec.inverse_base_change * shifted;
        let mut coefficients = [Complex64::new(0.0, 0.0); 3];
        for (i, c) in coefficients.iter_mut().enumerate() {
            *c = spec.base_change[(0, i)] * xi[i];
        }
        let eigenvalues = spec.eigenvalues;
        let canonical = if spec.has_complex_pair() && eigenvalues[0].re > 0.0 {
            let pair = eigenvalues[1];
            Some(SaddleFocusForm {
                alpha1: coefficients[0].re,
                alpha2: coefficients[1].norm(),
                alpha3: fixed_point.x,
                phase: coefficients[1].arg(),
                lambda1: eigenvalues[0].re,
                r0: pair.norm(),
                theta0: pair.arg(),
            })
        } else {
            None
        };
        Self {
            eigenvalues,
            log_eigenvalues: eigenvalues.map(|l| l.ln()),
            coefficients,
            constant: fixed_point.x,
            start: *x0,
            canonical,
        }
    }

    /// Model for the forward branch of `side` from an arbitrary start point.
    pub fn from_point(params: &PwlParams, side: Side, x0: &State3) -> Result<Self> {
        let spec = SpectralData::of_side(&params.side(side))?;
        let fp = params.fixed_point(side)?;
        Ok(Self::from_affine(&spec, &fp.location, x0))
    }

    /// Model for the inverse of `side`'s branch: reciprocal eigenvalues,
    /// same eigenvectors and fixed point.
    pub fn from_point_inverse(params: &PwlParams, side: Side, x0: &State3) -> Result<Self> {
        let spec = SpectralData::of_side(&params.side(side))?.inverted();
        let fp = params.fixed_point(side)?;
        Ok(Self::from_affine(&spec, &fp.location, x0))
    }

    /// Model for a border point whose orbit is governed by `side`'s branch.
    pub fn build(params: &PwlParams, side: Side, x0: &State3) -> Result<Self> {
        if x0.x.abs() > 1e-12 * (1.0 + x0.norm()) {
            return Err(Error::NotOnBorder(x0.x));
        }
        Self::from_point(params, side, x0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            acc += (self.coefficients[i] * (self.log_eigenvalues[i] * t).exp()).re;
        }
        acc + self.constant
    }

    pub fn saddle_focus(&self) -> Result<&SaddleFocusForm> {
        self.canonical.as_ref().ok_or_else(|| {
            Error::WrongSpectralType(
                "need one positive real eigenvalue and a complex pair".into(),
            )
        })
    }

    /// Upper and lower enveloping curves `(f+, f-)`.
    pub fn envelopes(&self) -> Result<(ExpPolynomial, ExpPolynomial)> {
        envelopes(self.saddle_focus()?)
    }

    /// Step that cannot skip a half-oscillation of any term.
    pub fn default_scan_step(&self) -> f64 {
        let theta = self
            .log_eigenvalues
            .iter()
            .map(|g| g.im.abs())
            .fold(0.0, f64::max);
        if theta > 0.0 {
            MAX_SCAN_STEP.min(PI / (8.0 * theta))
        } else {
            MAX_SCAN_STEP
        }
    }

    /// A time beyond which the least positive root cannot lie.
    pub fn horizon(&self) -> Horizon {
        match self.canonical {
            Some(form) if form.real_term_dominates() => {
                let t0 = theorem_t0(&form);
                Horizon {
                    t_max: t0,
                    analytic: true,
                }
            }
            Some(form) if form.r0 > 1.0 && form.lambda1 < 1.0 && form.alpha2 > 0.0 => {
                // growing oscillation: once its amplitude beats the rest, a
                // full period contains a sign change
                let ratio = (form.alpha1.abs() + form.alpha3.abs()) / (2.0 * form.alpha2);
                let t1 = (ratio.ln() / form.r0.ln()).max(0.0);
                Horizon {
                    t_max: t1 + 2.0 * PI / form.theta0.abs(),
                    analytic: true,
                }
            }
            _ => Horizon {
                t_max: FALLBACK_HORIZON as f64,
                analytic: false,
            },
        }
    }

    /// CSV rows `(t, f, f+, f-)` on `n + 1` points of `[0, t_end]`.
    pub fn write_diagnostics_csv<W: Write>(&self, mut w: W, t_end: f64, n: usize) -> io::Result<()> {
        let env = self.envelopes().ok();
        writeln!(w, "t,f,f_plus,f_minus")?;
        for k in 0..=n {
            let t = t_end * k as f64 / n.max(1) as f64;
            let (up, lo) = match &env {
                Some((p, m)) => (g12(p.eval(t)), g12(m.eval(t))),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{},{},{},{}", g12(t), g12(self.eval(t)), up, lo)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t_max: f64,
    /// False when the horizon is the hard cap rather than a derived bound.
    pub analytic: bool,
}

/// `ln((2|a2| + |a3|)/|a1|) / ln(l1)`: no root of `f` beyond this time.
pub fn theorem_t0(form: &SaddleFocusForm) -> f64 {
    let num = 2.0 * form.alpha2.abs() + form.alpha3.abs();
    if form.alpha1 == 0.0 {
        return f64::INFINITY;
    }
    (num / form.alpha1.abs()).ln() / form.lambda1.ln()
}

/// `g(t) = a1 k1^t + a2 k2^t + a3` with `k1 > 1 > k2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPolynomial {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl ExpPolynomial {
    pub fn new(a1: f64, a2: f64, a3: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        if !(kappa1 > 1.0 && kappa2 > 0.0 && kappa2 < 1.0) {
            return Err(Error::InvalidParams(format!(
                "exponential bases must satisfy k1 > 1 > k2 > 0, got ({kappa1}, {kappa2})"
            )));
        }
        Ok(Self {
            a1,
            a2,
            a3,
            kappa1,
            kappa2,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a1 * self.kappa1.powf(t) + self.a2 * self.kappa2.powf(t) + self.a3
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.a1 * self.kappa1.ln() * self.kappa1.powf(t)
            + self.a2 * self.kappa2.ln() * self.kappa2.powf(t)
    }
}

/// `(f+, f-)`. The growing exponential becomes `a1`; when the oscillation is
/// the growing term the roles of the two exponentials swap.
pub fn envelopes(form: &SaddleFocusForm) -> Result<(ExpPolynomial, ExpPolynomial)> {
    let amp = 2.0 * form.alpha2.abs();
    if form.real_term_dominates() {
        Ok((
            ExpPolynomial::new(form.alpha1, amp, form.alpha3, form.lambda1, form.r0)?,
            ExpPolynomial::new(form.alpha1, -amp, form.alpha3, form.lambda1, form.r0)?,
        ))
    } else if form.r0 > 1.0 && form.lambda1 < 1.0 {
        Ok((
            ExpPolynomial::new(amp, form.alpha1, form.alpha3, form.r0, form.lambda1)?,
            ExpPolynomial::new(-amp, form.alpha1, form.alpha3, form.r0, form.lambda1)?,
        ))
    } else {
        Err(Error::WrongSpectralType(
            "one exponential must grow and the other decay".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub t_lower: f64,
    pub t_upper: f64,
    /// Sign changes of `(a1, a3, a2)`, ordered by decreasing exponent.
    pub sign_changes: usize,
    /// Sign changes of `(a1, a2, a3)` as literally listed, for diagnostics.
    pub sign_changes_listed: usize,
    pub max_roots: usize,
}

fn count_sign_changes(seq: &[f64]) -> usize {
    let signs: Vec<f64> = seq.iter().filter(|v| **v != 0.0).map(|v| v.signum()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn descartes_bound(g: &ExpPolynomial) -> RootBracket {
    let sign_changes = count_sign_changes(&[g.a1, g.a3, g.a2]);
    let sign_changes_listed = count_sign_changes(&[g.a1, g.a2, g.a3]);
    let t_upper = upper_bound_t0(g);
    let t_lower = match extremum_t_star(g) {
        Some(t) if sign_changes == 1 && t > 0.0 => t.min(t_upper.max(0.0)),
        _ => 0.0,
    };
    RootBracket {
        t_lower,
        t_upper,
        sign_changes,
        sign_changes_listed,
        max_roots: sign_changes,
    }
}

/// `ln((|a2| + |a3|)/|a1|) / ln(k1)`; no root of `g` lies at `t >= max(t0, 0)`.
pub fn upper_bound_t0(g: &ExpPolynomial) -> f64 {
    if g.a1 == 0.0 {
        return f64::INFINITY;
    }
    ((g.a2.abs() + g.a3.abs()) / g.a1.abs()).ln() / g.kappa1.ln()
}

/// The stationary point of `g`, if `g'` vanishes anywhere on the real line.
pub fn extremum_t_star(g: &ExpPolynomial) -> Option<f64> {
    if g.a1 == 0.0 || g.a2 == 0.0 {
        return None;
    }
    let arg = -g.a2 * g.kappa2.ln() / (g.a1 * g.kappa1.ln());
    if arg > 0.0 {
        Some(arg.ln() / (g.kappa1 / g.kappa2).ln())
    } else {
        None
    }
}

/// Smallest root of `f` in `(t_start, t_max]`: uniform scan with `step`,
/// then bisection to [`ROOT_TOLERANCE`].
pub fn first_root<F: Fn(f64) -> f64>(f: F, t_start: f64, t_max: f64, step: f64) -> Option<f64> {
    if !(t_max > t_start) || !(step > 0.0) {
        return None;
    }
    let mut a = t_start;
    let mut fa = f(a);
    if fa == 0.0 {
        return Some(a);
    }
    let n = ((t_max - t_start) / step).ceil() as usize;
    for k in 1..=n {
        let b = (t_start + k as f64 * step).min(t_max);
        let fb = f(b);
        if fb == 0.0 {
            return Some(b);
        }
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > ROOT_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    return Some(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Least root of the model's `f` in `(ROOT_EPSILON, t_max]`.
pub fn least_positive_root(model: &ReturnTimeModel, t_max: f64) -> Option<f64> {
    least_positive_root_with_step(model, t_max, model.default_scan_step())
}

pub fn least_positive_root_with_step(model: &ReturnTimeModel, t_max: f64, step: f64) -> Option<f64> {
    first_root(|t| model.eval(t), ROOT_EPSILON, t_max, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::orbit_point;

    fn g(a1: f64, a2: f64, a3: f64) -> ExpPolynomial {
        ExpPolynomial::new(a1, a2, a3, 2.0, 0.5).unwrap()
    }

    #[test]
    fn no_sign_change_no_root() {
        let b = descartes_bound(&g(1.0, 1.0, 1.0));
        assert_eq!(b.sign_changes, 0);
        assert_eq!(b.max_roots, 0);
    }

    #[test]
    fn two_sign_changes_one_positive_root() {
        let gg = g(2.0, 1.0, -8.0);
        let b = descartes_bound(&gg);
        assert_eq!(b.sign_changes, 2);
        let root = first_root(|t| gg.eval(t), 1e-6, 40.0, 0.01).unwrap();
        // 2u + 1/u = 8 with u = 2^t: u = (8 + sqrt(56))/4.
        assert!((root - 1.952642).abs() < 1e-6, "{root}");
        assert!(first_root(|t| gg.eval(t), root + 1e-6, 40.0, 0.01).is_none());
        let t0 = upper_bound_t0(&gg);
        assert!((t0 - 4.5f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert!((t0 - 2.1699).abs() < 1e-4);
        assert!(root < t0);
    }

    #[test]
    fn monotone_case() {
        let gg = g(1.0, -3.0, 1.0);
        let b = descartes_bound(&gg);
        assert_eq!(b.sign_changes, 1);
        assert_eq!(b.sign_changes_listed, 2);
        assert_eq!(extremum_t_star(&gg), None);
        for k in 0..200 {
            assert!(gg.derivative(-5.0 + 0.1 * k as f64) > 0.0);
        }
    }

    #[test]
    fn extremum_point() {
        let gg = g(1.0, 3.0, -8.0);
        let t = extremum_t_star(&gg).unwrap();
        assert!((t - 3f64.ln() / 4f64.ln()).abs() < 1e-12);
        assert!((t - 0.7925).abs() < 1e-4);
        assert!(gg.derivative(t).abs() < 1e-12);
        assert_eq!(extremum_t_star(&g(1.0, 0.0, -8.0)), None);
    }

    #[test]
    fn degenerate_t0() {
        let gg = g(3.0, 1.0, -2.0);
        assert_eq!(upper_bound_t0(&gg), 0.0);
        let gg = g(1.0, 1.0, -1.0);
        assert!((upper_bound_t0(&gg) - 1.0).abs() < 1e-15);
        assert!(first_root(|t| gg.eval(t), 1.0 + 1e-9, 60.0, 0.01).is_none());
    }

    #[test]
    fn invalid_bases_rejected() {
        assert!(ExpPolynomial::new(1.0, 1.0, 1.0, 0.9, 0.5).is_err());
        assert!(ExpPolynomial::new(1.0, 1.0, 1.0, 2.0, 1.5).is_err());
    }

    fn form(alpha2: f64) -> SaddleFocusForm {
        SaddleFocusForm {
            alpha1: 0.5,
            alpha2,
            alpha3: -2.0,
            phase: 0.4,
            lambda1: 1.5,
            r0: 0.6,
            theta0: 2.0,
        }
    }

    #[test]
    fn envelope_without_oscillation() {
        let (p, m) = envelopes(&form(0.0)).unwrap();
        assert_eq!(p, m);
        for k in 0..50 {
            let t = 0.2 * k as f64;
            assert!((p.eval(t) - form(0.0).eval(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_gap() {
        let f = form(0.7);
        let (p, m) = envelopes(&f).unwrap();
        for k in 0..50 {
            let t = 0.2 * k as f64;
            let gap = p.eval(t) - m.eval(t);
            assert!((gap - 4.0 * 0.7 * 0.6f64.powf(t)).abs() < 1e-12);
            assert!(m.eval(t) <= f.eval(t) + 1e-12 && f.eval(t) <= p.eval(t) + 1e-12);
        }
    }

    #[test]
    fn pure_exponential_root() {
        let f = form(0.0);
        let model = ReturnTimeModel {
            eigenvalues: [Complex64::new(1.5, 0.0), Complex64::new(0.3, 0.2), Complex64::new(0.3, -0.2)],
            log_eigenvalues: [Complex64::new(1.5, 0.0).ln(), Complex64::new(0.3, 0.2).ln(), Complex64::new(0.3, -0.2).ln()],
            coefficients: [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            constant: -2.0,
            start: State3::zeros(),
            canonical: Some(f),
        };
        let root = least_positive_root(&model, 20.0).unwrap();
        let want = (2.0f64 / 0.5).ln() / 1.5f64.ln();
        assert!((root - want).abs() < 1e-9);
        assert!(least_positive_root(&model, want - 0.1).is_none());
    }

    #[test]
    fn all_positive_has_no_root() {
        assert!(first_root(|t| 1.0 + t * t, 1e-6, 10.0, 0.1).is_none());
    }

    /// Saddle-focus on the right, launched from a border point whose first
    /// iterate is on the right.
    fn right_saddle_focus() -> PwlParams {
        // right eigenvalues 1.2 and 0.5 e^{+-0.9i}
        let (l1, r, th) = (1.2f64, 0.5f64, 0.9f64);
        let tau = l1 + 2.0 * r * th.cos();
        let sigma = 2.0 * l1 * r * th.cos() + r * r;
        let delta = l1 * r * r;
        PwlParams::new(1.0, -0.25, 0.3, tau, sigma, delta, 1.0).unwrap()
    }

    #[test]
    fn model_vanishes_at_start_and_tracks_iterates() {
        let p = right_saddle_focus();
        let x0 = State3::new(0.0, -0.2, 0.7);
        let model = ReturnTimeModel::build(&p, Side::Right, &x0).unwrap();
        assert!(model.eval(0.0).abs() < 1e-9);
        let form = model.saddle_focus().unwrap();
        assert!((form.alpha1 + 2.0 * form.alpha2 * form.phase.cos() + form.alpha3).abs() < 1e-9);
        for k in 1..12 {
            let pk = orbit_point(&p, Side::Right, &x0, k).unwrap();
            assert!((model.eval(k as f64) - pk.x).abs() < 1e-9 * (1.0 + pk.x.abs()));
            assert!((form.eval(k as f64) - pk.x).abs() < 1e-9 * (1.0 + pk.x.abs()));
        }
    }

    #[test]
    fn not_on_border() {
        let p = right_saddle_focus();
        assert!(matches!(
            ReturnTimeModel::build(&p, Side::Right, &State3::new(0.1, 0.0, 0.0)),
            Err(Error::NotOnBorder(_))
        ));
    }

    #[test]
    fn real_diagonal_coefficients() {
        // diagonal matrix diag(2, 0.5, 0.25): P = I, so c_i = (X0 - X*)_i for i = 1 only
        let mut spec = crate::spectral::eigen3(2.75, 1.625, 0.25).unwrap();
        spec.eigenvalues = [2.0, 0.5, 0.25].map(|v| Complex64::new(v, 0.0));
        spec.base_change = nalgebra::Matrix3::identity();
        spec.inverse_base_change = nalgebra::Matrix3::identity();
        let fixed = State3::new(-1.0, 0.5, 2.0);
        let x0 = State3::new(0.0, 3.0, -1.0);
        let m = ReturnTimeModel::from_affine(&spec, &fixed, &x0);
        // x(t) = 2^t (0 - (-1)) + (-1) = 2^t - 1
        assert!((m.coefficients[0].re - 1.0).abs() < 1e-15);
        assert_eq!(m.coefficients[1], Complex64::new(0.0, 0.0));
        assert_eq!(m.coefficients[2], Complex64::new(0.0, 0.0));
        assert_eq!(m.constant, -1.0);
        assert!((m.eval(3.0) - 7.0).abs() < 1e-12);
        assert!(m.canonical.is_none());
    }
}
