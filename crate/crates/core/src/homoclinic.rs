//! Detection of transverse homoclinic intersections on first return.
//!
//! A fixed point's one-dimensional eigendirection is followed to the border
//! (`P0`), the orbit of `P0` is iterated through the opposite region until it
//! comes back, and the last outside iterate `P_n` and the first returned
//! iterate `P_{n+1}` are tested against the fixed point's two-dimensional
//! eigenplane. A crossing whose intersection lies in the fixed point's own
//! region, where the plane is the local invariant manifold, is reported as an
//! intersection. Backward detection runs the same procedure on the inverse
//! map with stable and unstable roles exchanged.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::format::g12;
use crate::interpolation::resolve_side;
use crate::map::{FixedPointInfo, PwlParams, Side, State3};
use crate::return_time::{descartes_bound, theorem_t0, ReturnTimeModel, FALLBACK_HORIZON};
use crate::spectral::{invariant_plane, EigenPlane, SpectralData, Stability};

/// Points with `|x|` below this are treated as landing on the border.
pub const BORDER_TOL: f64 = 1e-12;
/// Relative threshold on the straddle product that rejects grazing contact.
pub const TRANSVERSALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    IntersectionFound,
    NoCrossingWithinBound,
    CrossedButNoIntersection,
    WrongRegionIntersection,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::IntersectionFound => "IntersectionFound",
            Verdict::NoCrossingWithinBound => "NoCrossingWithinBound",
            Verdict::CrossedButNoIntersection => "CrossedButNoIntersection",
            Verdict::WrongRegionIntersection => "WrongRegionIntersection",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// How backward iterates are chosen when the map is not invertible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Always apply the inverse of the far side's branch.
    FarSide,
    /// Require a unique consistent preimage at every step.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Side of the fixed point whose manifolds are tested.
    pub home: Side,
    pub direction: Direction,
    /// Skip the first two iterates, which stay in the home region when the
    /// one-dimensional eigenvalue is negative.
    pub flip: bool,
    /// Largest iterate index computed; `None` derives it from the return model.
    pub n_cap: Option<usize>,
    pub policy: BranchPolicy,
}

impl DetectorConfig {
    pub fn new(home: Side, direction: Direction) -> Self {
        Self {
            home,
            direction,
            flip: false,
            n_cap: None,
            policy: BranchPolicy::FarSide,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicTrace {
    pub home: Side,
    pub direction: Direction,
    pub flip: bool,
    pub fixed_point: State3,
    pub eigenvalue: f64,
    pub p0: State3,
    pub first_fold: Option<State3>,
    /// Index of the last iterate outside the home region.
    pub crossing_index: usize,
    pub p_n: Option<State3>,
    pub p_n_plus_1: Option<State3>,
    pub plane: EigenPlane,
    pub side_products: (f64, f64),
    pub intersection_point: Option<State3>,
    pub verdict: Verdict,
    pub n_cap: usize,
    /// `P0, P1, ...` up to the first returned iterate (or the cap).
    pub iterates: Vec<State3>,
    /// Whether each backward step produced a genuine preimage under the map.
    pub genuine_preimage: Vec<bool>,
}

impl HomoclinicTrace {
    pub fn write_report<W: Write>(&self, mut w: W) -> io::Result<()> {
        let v = |p: &State3| format!("{} {} {}", g12(p.x), g12(p.y), g12(p.z));
        let opt = |p: &Option<State3>| p.as_ref().map(v).unwrap_or_else(|| "none".into());
        writeln!(w, "direction: {}", self.direction)?;
        writeln!(w, "home_side: {}", self.home)?;
        writeln!(w, "flip: {}", self.flip)?;
        writeln!(w, "fixed_point: {}", v(&self.fixed_point))?;
        writeln!(w, "eigenvalue: {}", g12(self.eigenvalue))?;
        writeln!(w, "p0: {}", v(&self.p0))?;
        writeln!(w, "first_fold: {}", opt(&self.first_fold))?;
        writeln!(w, "n_cap: {}", self.n_cap)?;
        writeln!(w, "crossing_index: {}", self.crossing_index)?;
        writeln!(w, "p_n: {}", opt(&self.p_n))?;
        writeln!(w, "p_n_plus_1: {}", opt(&self.p_n_plus_1))?;
        writeln!(
            w,
            "plane_normal: {}",
            v(&self.plane.normal)
        )?;
        writeln!(w, "plane_offset: {}", g12(self.plane.offset))?;
        writeln!(
            w,
            "side_products: {} {}",
            g12(self.side_products.0),
            g12(self.side_products.1)
        )?;
        writeln!(w, "intersection_point: {}", opt(&self.intersection_point))?;
        if self.direction == Direction::Backward {
            let fake = self.genuine_preimage.iter().filter(|g| !**g).count();
            writeln!(w, "non_genuine_preimages: {fake}")?;
        }
        writeln!(w, "verdict: {}", self.verdict)
    }

    /// One row per iterate: index, coordinates, signed plane distance.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,x,y,z,plane_eval")?;
        for (k, p) in self.iterates.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                k,
                g12(p.x),
                g12(p.y),
                g12(p.z),
                g12(self.plane.eval(p))
            )?;
        }
        Ok(())
    }
}

/// Where the line through `fp` along `v` meets the border.
pub fn border_touch(fp: &FixedPointInfo, v: &State3) -> Result<State3> {
    if v.x.abs() <= 1e-12 * v.norm() {
        return Err(Error::ParallelToBorder);
    }
    let f = fp.location;
    Ok(State3::new(0.0, f.y - v.y / v.x * f.x, f.z - v.z / v.x * f.x))
}

/// Side used to judge an iterate; border landings go to the tie chain.
fn judged_side(mu: f64, p: &State3) -> Result<Side> {
    if p.x.abs() < BORDER_TOL * (1.0 + p.norm()) {
        resolve_side(mu, &State3::new(0.0, p.y, p.z))
    } else {
        Ok(Side::of(p))
    }
}

struct Setup {
    fp: FixedPointInfo,
    eigenvalue: f64,
    p0: State3,
    plane: EigenPlane,
}

fn setup(params: &PwlParams, home: Side, direction: Direction) -> Result<Setup> {
    let fp = params.fixed_point(home)?;
    if !fp.admissible {
        return Err(Error::InadmissibleFixedPoint(home));
    }
    let spec = SpectralData::of_side(&params.side(home))?;
    let (line_dim, plane_kind) = match direction {
        Direction::Forward => (1, Stability::Stable),
        Direction::Backward => (2, Stability::Unstable),
    };
    if spec.unstable_count() != line_dim || spec.moduli().iter().any(|m| *m == 1.0) {
        return Err(Error::WrongSpectralType(format!(
            "{} detection needs a one-dimensional {} direction at the {home} fixed point",
            direction,
            if direction == Direction::Forward { "unstable" } else { "stable" }
        )));
    }
    let iso = spec.isolated_index().expect("mixed stability");
    let v = spec.real_eigenvector(iso);
    let p0 = border_touch(&fp, &v)?;
    let plane = invariant_plane(&spec, &fp.location, plane_kind)?;
    Ok(Setup {
        fp,
        eigenvalue: spec.eigenvalues[iso].re,
        p0,
        plane,
    })
}

fn default_cap(params: &PwlParams, far: Side, direction: Direction, p0: &State3) -> usize {
    let model = match direction {
        Direction::Forward => ReturnTimeModel::from_point(params, far, p0),
        Direction::Backward => ReturnTimeModel::from_point_inverse(params, far, p0),
    };
    match model.map(|m| m.horizon()) {
        Ok(h) if h.analytic && h.t_max.is_finite() => (h.t_max.max(0.0).ceil() as usize + 2).min(FALLBACK_HORIZON),
        _ => FALLBACK_HORIZON,
    }
}

/// Runs the detection procedure with explicit orientation.
pub fn detect(params: &PwlParams, cfg: &DetectorConfig) -> Result<HomoclinicTrace> {
    let home = cfg.home;
    let far = home.opposite();
    let s = setup(params, home, cfg.direction)?;
    let n_cap = cfg
        .n_cap
        .unwrap_or_else(|| default_cap(params, far, cfg.direction, &s.p0));

    let advance = |p: &State3, k: usize| -> Result<(State3, bool)> {
        let next = match cfg.direction {
            Direction::Forward => (params.step(p), true),
            Direction::Backward => {
                // inside the flip exemption the orbit still follows the home branch
                let branch = if cfg.flip && k < 2 { home } else { far };
                let cand = params.invert_branch(branch, p)?;
                let pre = params.inverse_step(p)?;
                let genuine = pre.iter().any(|q| (q - cand).norm() <= 1e-12 * (1.0 + q.norm()));
                if cfg.policy == BranchPolicy::Strict && pre.len() != 1 {
                    return Err(Error::AmbiguousPreimage(pre.len()));
                }
                let chosen = if cfg.policy == BranchPolicy::Strict { pre[0] } else { cand };
                (chosen, genuine)
            }
        };
        if next.0.iter().all(|v| v.is_finite()) {
            Ok(next)
        } else {
            Err(Error::OverflowDetected)
        }
    };

    let skip = if cfg.flip { 2 } else { 1 };
    let mut iterates = vec![s.p0];
    let mut genuine = Vec::new();
    let mut returned = None;
    let mut p = s.p0;
    for k in 1..=n_cap {
        let (q, g) = advance(&p, k - 1)?;
        iterates.push(q);
        genuine.push(g);
        p = q;
        let side = judged_side(params.mu, &q)?;
        if k < skip {
            continue;
        }
        if k == skip {
            if side != far {
                return Err(Error::UnexpectedSide {
                    index: k,
                    expected: far,
                    found: side,
                });
            }
            continue;
        }
        if side == home {
            returned = Some(k);
            break;
        }
    }

    let base = HomoclinicTrace {
        home,
        direction: cfg.direction,
        flip: cfg.flip,
        fixed_point: s.fp.location,
        eigenvalue: s.eigenvalue,
        p0: s.p0,
        first_fold: iterates.get(1).copied(),
        crossing_index: 0,
        p_n: None,
        p_n_plus_1: None,
        plane: s.plane,
        side_products: (0.0, 0.0),
        intersection_point: None,
        verdict: Verdict::NoCrossingWithinBound,
        n_cap,
        iterates,
        genuine_preimage: genuine,
    };
    let Some(k) = returned else {
        return Ok(base);
    };
    let (pn, pn1) = (base.iterates[k - 1], base.iterates[k]);
    let en = s.plane.eval(&pn);
    let en1 = s.plane.eval(&pn1);
    let (verdict, intersection) = classify_crossing(&s.plane, &pn, &pn1, home);
    Ok(HomoclinicTrace {
        crossing_index: k - 1,
        p_n: Some(pn),
        p_n_plus_1: Some(pn1),
        side_products: (en, en1),
        intersection_point: intersection,
        verdict,
        ..base
    })
}

/// Steps (4) and (5): straddle test and region test of the intersection.
pub fn classify_crossing(
    plane: &EigenPlane,
    pn: &State3,
    pn1: &State3,
    home: Side,
) -> (Verdict, Option<State3>) {
    let en = plane.eval(pn);
    let en1 = plane.eval(pn1);
    let scale = en.abs().max(en1.abs());
    if en * en1 >= -TRANSVERSALITY_TOL * scale * scale {
        return (Verdict::CrossedButNoIntersection, None);
    }
    let s = en / (en - en1);
    let point = pn + s * (pn1 - pn);
    let verdict = if home.contains(&point) {
        Verdict::IntersectionFound
    } else {
        Verdict::WrongRegionIntersection
    };
    (verdict, Some(point))
}

/// First side (left before right) whose fixed point passes `accept`.
fn pick_side<F: Fn(&PwlParams, Side) -> bool>(params: &PwlParams, order: [Side; 2], accept: F) -> Result<Side> {
    order
        .into_iter()
        .find(|s| accept(params, *s))
        .ok_or_else(|| Error::WrongSpectralType("no admissible fixed point has the required eigen-structure".into()))
}

fn isolated_sign(params: &PwlParams, side: Side, unstable_dim: usize) -> Option<f64> {
    let fp = params.fixed_point(side).ok()?;
    if !fp.admissible {
        return None;
    }
    let spec = SpectralData::of_side(&params.side(side)).ok()?;
    if spec.unstable_count() != unstable_dim {
        return None;
    }
    spec.isolated_index().map(|i| spec.eigenvalues[i].re.signum())
}

/// Forward detection from the admissible fixed point with a positive
/// one-dimensional unstable eigenvalue.
pub fn detect_forward(params: &PwlParams, n_cap: Option<usize>) -> Result<HomoclinicTrace> {
    let home = pick_side(params, [Side::Left, Side::Right], |p, s| isolated_sign(p, s, 1) == Some(1.0))?;
    detect_forward_from(params, home, n_cap)
}

pub fn detect_forward_from(params: &PwlParams, home: Side, n_cap: Option<usize>) -> Result<HomoclinicTrace> {
    let cfg = DetectorConfig {
        n_cap,
        ..DetectorConfig::new(home, Direction::Forward)
    };
    detect(params, &cfg)
}

/// Forward detection from a fixed point with a negative unstable eigenvalue.
pub fn detect_flip_forward(params: &PwlParams, n_cap: Option<usize>) -> Result<HomoclinicTrace> {
    let home = pick_side(params, [Side::Right, Side::Left], |p, s| isolated_sign(p, s, 1) == Some(-1.0))?;
    let cfg = DetectorConfig {
        flip: true,
        n_cap,
        ..DetectorConfig::new(home, Direction::Forward)
    };
    detect(params, &cfg)
}

/// Backward detection from the admissible fixed point with a
/// one-dimensional stable direction, preferring the right side.
pub fn detect_backward(params: &PwlParams, n_cap: Option<usize>) -> Result<HomoclinicTrace> {
    let home = pick_side(params, [Side::Right, Side::Left], |p, s| isolated_sign(p, s, 2).is_some())?;
    let cfg = DetectorConfig {
        n_cap,
        ..DetectorConfig::new(home, Direction::Backward)
    };
    detect(params, &cfg)
}

pub fn detect_flip_backward(params: &PwlParams, n_cap: Option<usize>) -> Result<HomoclinicTrace> {
    let home = pick_side(params, [Side::Right, Side::Left], |p, s| isolated_sign(p, s, 2) == Some(-1.0))?;
    let cfg = DetectorConfig {
        flip: true,
        n_cap,
        ..DetectorConfig::new(home, Direction::Backward)
    };
    detect(params, &cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessaryCondition {
    pub holds: bool,
    pub k_bound: usize,
    pub k_witness: Option<usize>,
    /// False when `k_bound` is the fallback cap.
    pub analytic_bound: bool,
    pub direction: Direction,
    pub t0: Option<f64>,
}

/// Sign-change test of the orbit of the border point of the right fixed
/// point's one-dimensional manifold against its two-dimensional eigenplane,
/// over the index range bounded by the return-time estimate.
///
/// With a flip-unstable right fixed point the forward orbit is used; with a
/// flip-stable one the backward orbit under the left branch's inverse.
pub fn necessary_condition(params: &PwlParams) -> Result<NecessaryCondition> {
    let right = params.fixed_point(Side::Right)?;
    if !right.admissible {
        return Err(Error::InadmissibleFixedPoint(Side::Right));
    }
    let spec = SpectralData::of_side(&params.side(Side::Right))?;
    let iso = spec
        .isolated_index()
        .filter(|i| spec.eigenvalues[*i].re < 0.0)
        .ok_or_else(|| Error::WrongSpectralType("right fixed point must be a flip saddle".into()))?;
    let direction = match spec.unstable_count() {
        1 => Direction::Forward,
        _ => Direction::Backward,
    };
    let plane_kind = match direction {
        Direction::Forward => Stability::Stable,
        Direction::Backward => Stability::Unstable,
    };
    let plane = invariant_plane(&spec, &right.location, plane_kind)?;
    let p0 = border_touch(&right, &spec.real_eigenvector(iso))?;

    let advance = |p: &State3| -> Result<State3> {
        match direction {
            Direction::Forward => Ok(params.step(p)),
            Direction::Backward => params.invert_branch(Side::Left, p),
        }
    };

    // return model on the left side, anchored at the first left iterate
    let (model, origin) = match direction {
        Direction::Forward => {
            let p1 = advance(&p0)?;
            let p2 = advance(&p1)?;
            (ReturnTimeModel::from_point(params, Side::Left, &p2)?, 2usize)
        }
        Direction::Backward => (ReturnTimeModel::from_point_inverse(params, Side::Left, &p0)?, 0usize),
    };
    let form = *model.saddle_focus()?;
    let (fp, fm) = model.envelopes()?;
    if descartes_bound(&fp).sign_changes == 0 && descartes_bound(&fm).sign_changes == 0 {
        return Ok(NecessaryCondition {
            holds: false,
            k_bound: FALLBACK_HORIZON,
            k_witness: None,
            analytic_bound: false,
            direction,
            t0: None,
        });
    }
    let t0 = if form.real_term_dominates() {
        theorem_t0(&form)
    } else {
        model.horizon().t_max
    };
    if t0 < 0.0 {
        return Ok(NecessaryCondition {
            holds: false,
            k_bound: 2,
            k_witness: None,
            analytic_bound: true,
            direction,
            t0: Some(t0),
        });
    }
    let k_bound = (t0.floor() as usize).saturating_add(origin.max(2)).min(FALLBACK_HORIZON);

    let mut p = p0;
    let mut prev = plane.eval(&p0);
    let mut witness = None;
    for k in 0..=k_bound {
        let q = advance(&p)?;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::OverflowDetected);
        }
        let e = plane.eval(&q);
        // indices below 2 are exempt: the flip keeps them near the fixed point
        if k >= 2 && prev * e < 0.0 {
            witness = Some(k);
            break;
        }
        prev = e;
        p = q;
    }
    Ok(NecessaryCondition {
        holds: witness.is_some(),
        k_bound,
        k_witness: witness,
        analytic_bound: true,
        direction,
        t0: Some(t0),
    })
}
