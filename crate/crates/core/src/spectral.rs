//! Eigenstructure of the companion matrices.
//!
//! The characteristic polynomial of a companion matrix is
//! `l^3 - tau l^2 + sigma l - delta`, solved here in closed form and polished
//! with one Newton step. Eigenvectors come straight from the companion
//! structure: `(1, l - tau, l^2 - tau l + sigma)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::map::{SideParams, State3};

/// Roots closer than this (relative to `max(1, |l|)`) count as repeated.
pub const REPEATED_ROOT_TOL: f64 = 1e-8;

const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Real root(s) first; a conjugate pair is stored adjacently with the
    /// positive imaginary part first.
    pub eigenvalues: [Complex64; 3],
    /// Unit-norm eigenvectors, columns of `base_change`.
    pub eigenvectors: [Vector3<Complex64>; 3],
    pub base_change: Matrix3<Complex64>,
    pub inverse_base_change: Matrix3<Complex64>,
}

fn poly(tau: f64, sigma: f64, delta: f64, l: Complex64) -> Complex64 {
    ((l - tau) * l + sigma) * l - delta
}

fn poly_deriv(tau: f64, sigma: f64, l: Complex64) -> Complex64 {
    (3.0 * l - 2.0 * tau) * l + sigma
}

/// A double root only resolves to about `sqrt(eps)` in the roots themselves,
/// so it is detected on the discriminant instead.
fn nearly_repeated(tau: f64, sigma: f64, delta: f64) -> bool {
    let p = sigma - tau * tau / 3.0;
    let q = -2.0 * tau.powi(3) / 27.0 + tau * sigma / 3.0 - delta;
    let a = (q / 2.0).powi(2);
    let b = (p / 3.0).powi(3);
    (a + b).abs() <= 1e-12 * a.max(b.abs())
}

/// Raw roots of `l^3 - tau l^2 + sigma l - delta` (unpolished, unordered).
fn cubic_roots(tau: f64, sigma: f64, delta: f64) -> [Complex64; 3] {
    // Depressed cubic u^3 + p u + q = 0 with l = u + tau/3.
    let shift = tau / 3.0;
    let p = sigma - tau * tau / 3.0;
    let q = -2.0 * tau.powi(3) / 27.0 + tau * sigma / 3.0 - delta;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    if disc > 0.0 {
        let h = -q / 2.0;
        let a = (h + h.signum() * disc.sqrt()).cbrt();
        let b = if a != 0.0 { -p / (3.0 * a) } else { 0.0 };
        let re = -(a + b) / 2.0 + shift;
        let im = (3.0f64).sqrt() / 2.0 * (a - b).abs();
        [
            Complex64::new(a + b + shift, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else if p == 0.0 {
        let r = Complex64::new(shift, 0.0);
        [r, r, r]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let u = m * (phi - 2.0 * PI * k as f64 / 3.0).cos();
            *slot = Complex64::new(u + shift, 0.0);
        }
        out
    }
}

/// Eigen-decomposition of the companion matrix with the given invariants.
pub fn eigen3(tau: f64, sigma: f64, delta: f64) -> Result<SpectralData> {
    if delta == 0.0 {
        return Err(Error::SingularMatrix);
    }
    if nearly_repeated(tau, sigma, delta) {
        return Err(Error::RepeatedEigenvalue);
    }
    let mut roots = cubic_roots(tau, sigma, delta);

    for r in roots.iter_mut() {
        let d = poly_deriv(tau, sigma, *r);
        if d.norm() > 0.0 {
            let polished = *r - poly(tau, sigma, delta, *r) / d;
            if polished.is_finite()
                && poly(tau, sigma, delta, polished).norm() <= poly(tau, sigma, delta, *r).norm()
            {
                *r = polished;
            }
        }
    }

    let complex_pair = roots[1].im != 0.0;
    if complex_pair {
        roots[0].im = 0.0;
        let top = if roots[1].im > 0.0 { roots[1] } else { roots[2] };
        let top = Complex64::new(top.re, top.im.abs());
        roots[1] = top;
        roots[2] = top.conj();
    } else {
        roots.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap()
                .then(b.re.partial_cmp(&a.re).unwrap())
        });
    }

    for i in 0..3 {
        for j in (i + 1)..3 {
            let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
            if (roots[i] - roots[j]).norm() < REPEATED_ROOT_TOL * scale {
                return Err(Error::RepeatedEigenvalue);
            }
        }
    }

    let eigenvectors = roots.map(|l| {
        let v = Vector3::new(
            Complex64::new(1.0, 0.0),
            l - tau,
            (l - tau) * l + sigma,
        );
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.map(|c| c / norm)
    });
    let base_change = Matrix3::from_columns(&eigenvectors);
    let inverse_base_change = base_change
        .try_inverse()
        .ok_or(Error::RepeatedEigenvalue)?;

    Ok(SpectralData {
        eigenvalues: roots,
        eigenvectors,
        base_change,
        inverse_base_change,
    })
}

impl SpectralData {
    pub fn of_side(side: &SideParams) -> Result<Self> {
        eigen3(side.tau, side.sigma, side.delta)
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.eigenvalues[i].im == 0.0
    }

    pub fn has_complex_pair(&self) -> bool {
        !self.is_real(1)
    }

    pub fn moduli(&self) -> [f64; 3] {
        self.eigenvalues.map(|l| l.norm())
    }

    pub fn unstable_count(&self) -> usize {
        self.moduli().iter().filter(|m| **m > 1.0).count()
    }

    /// Index of the eigenvalue whose stability differs from the other two.
    pub fn isolated_index(&self) -> Option<usize> {
        let m = self.moduli();
        match self.unstable_count() {
            1 => m.iter().position(|v| *v > 1.0),
            2 => m.iter().position(|v| *v < 1.0),
            _ => None,
        }
    }

    /// Indices of the eigenvalues in the requested stability class.
    pub fn indices(&self, which: Stability) -> Vec<usize> {
        let m = self.moduli();
        (0..3)
            .filter(|&i| match which {
                Stability::Stable => m[i] < 1.0,
                Stability::Unstable => m[i] > 1.0,
            })
            .collect()
    }

    /// Real part of the `i`-th eigenvector (exact for real eigenvalues).
    pub fn real_eigenvector(&self, i: usize) -> State3 {
        self.eigenvectors[i].map(|c| c.re)
    }

    /// Spectral data of the inverse matrix: same eigenvectors, reciprocal
    /// eigenvalues.
    pub fn inverted(&self) -> SpectralData {
        SpectralData {
            eigenvalues: self.eigenvalues.map(|l| l.inv()),
            ..self.clone()
        }
    }

    /// `P diag(l) P^-1`, which reproduces the matrix.
    pub fn reconstruct(&self) -> Matrix3<Complex64> {
        let d = Matrix3::from_diagonal(&Vector3::from(self.eigenvalues));
        self.base_change * d * self.inverse_base_change
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpKind {
    /// Real eigenvalue above 1 with a contracting complex pair.
    SaddleFocusUnstableReal,
    /// Isolated real eigenvalue is negative (stable or unstable).
    FlipSaddle,
    /// Mixed stability with all eigenvalues real and positive isolated one.
    RegularSaddle,
    Attractor,
    Repeller,
    Other,
}

impl fmt::Display for FpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FpKind::SaddleFocusUnstableReal => "saddle-focus (unstable real)",
            FpKind::FlipSaddle => "flip saddle",
            FpKind::RegularSaddle => "regular saddle",
            FpKind::Attractor => "attractor",
            FpKind::Repeller => "repeller",
            FpKind::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpClass {
    pub kind: FpKind,
    /// Number of eigenvalues with modulus above 1.
    pub unstable_dim: usize,
}

pub fn classify(spec: &SpectralData) -> FpClass {
    let m = spec.moduli();
    let unstable_dim = spec.unstable_count();
    let kind = if m.iter().any(|v| (v - 1.0).abs() < UNIT_MODULUS_TOL) {
        FpKind::Other
    } else {
        match unstable_dim {
            0 => FpKind::Attractor,
            3 => FpKind::Repeller,
            _ => {
                // the isolated eigenvalue is always real for a real 3x3 matrix
                let iso = spec.isolated_index().expect("mixed stability");
                let l = spec.eigenvalues[iso].re;
                if l < 0.0 {
                    FpKind::FlipSaddle
                } else if spec.has_complex_pair() {
                    if unstable_dim == 1 {
                        FpKind::SaddleFocusUnstableReal
                    } else {
                        FpKind::Other
                    }
                } else {
                    FpKind::RegularSaddle
                }
            }
        }
    };
    FpClass { kind, unstable_dim }
}

/// Plane `normal . X + offset = 0` through a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPlane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub base_point: State3,
}

impl EigenPlane {
    /// Plane through `base` spanned by two real directions.
    pub fn from_directions(a: &Vector3<f64>, b: &Vector3<f64>, base: &State3) -> Result<Self> {
        let n = a.cross(b);
        let scale = a.norm() * b.norm();
        if scale == 0.0 || n.norm() <= 1e-12 * scale {
            return Err(Error::DegeneratePlane);
        }
        let mut normal = n / n.norm();
        if let Some(first) = normal.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                normal = -normal;
            }
        }
        Ok(Self {
            normal,
            offset: -normal.dot(base),
            base_point: *base,
        })
    }

    /// Signed distance of `x` from the plane.
    pub fn eval(&self, x: &State3) -> f64 {
        self.normal.dot(x) + self.offset
    }

    /// Intersection parameter `s` of the line `a + s (b - a)` with the plane.
    pub fn segment_parameter(&self, a: &State3, b: &State3) -> Option<f64> {
        let ea = self.eval(a);
        let eb = self.eval(b);
        let den = ea - eb;
        if den == 0.0 {
            None
        } else {
            Some(ea / den)
        }
    }
}

/// The invariant plane of the stable or unstable two-dimensional eigenspace,
/// placed through `base`.
pub fn invariant_plane(spec: &SpectralData, base: &State3, which: Stability) -> Result<EigenPlane> {
    let idx = spec.indices(which);
    if idx.len() != 2 {
        return Err(Error::NoInvariantPlane(which.label()));
    }
    let (i, j) = (idx[0], idx[1]);
    if spec.is_real(i) && spec.is_real(j) {
        EigenPlane::from_directions(&spec.real_eigenvector(i), &spec.real_eigenvector(j), base)
    } else {
        // V x conj(V) is purely imaginary; Re V x Im V spans the same normal.
        let v = spec.eigenvectors[i];
        let re = v.map(|c| c.re);
        let im = v.map(|c| c.im);
        EigenPlane::from_directions(&re, &im, base)
    }
}
