use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::format::g12;
use crate::homoclinic::border_touch;
use crate::interpolation::{CurvePoint, Interpolator};
use crate::map::{FixedPointInfo, PwlParams, Side, State3};
use crate::spectral::{SpectralData, Stability};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldOptions {
    /// Tracing stops once the accumulated arc length exceeds this.
    pub arc_budget: f64,
    /// Points in the seed segment.
    pub samples: usize,
    pub max_iterates: usize,
    /// Backward tracing can branch; cap on the number of live pieces.
    pub max_pieces: usize,
    /// Longer segments are subdivided before mapping; `None` means
    /// `arc_budget / 1000`.
    pub max_segment: Option<f64>,
}

impl ManifoldOptions {
    pub fn new(arc_budget: f64) -> Self {
        Self {
            arc_budget,
            samples: 1000,
            max_iterates: 500,
            max_pieces: 4096,
            max_segment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPiece {
    /// Number of map applications from the seed segment.
    pub iterate: usize,
    pub points: Vec<State3>,
}

impl ManifoldPiece {
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldTrace {
    pub fixed_point: State3,
    pub eigenvalue: f64,
    pub direction: Stability,
    pub pieces: Vec<ManifoldPiece>,
    pub arc_length: f64,
    /// True when a piece or iterate cap stopped tracing before the budget.
    pub truncated: bool,
}

impl ManifoldTrace {
    /// CSV with columns `piece, iterate, x, y, z`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "piece,iterate,x,y,z")?;
        for (k, piece) in self.pieces.iter().enumerate() {
            for p in &piece.points {
                writeln!(w, "{},{},{},{},{}", k, piece.iterate, g12(p.x), g12(p.y), g12(p.z))?;
            }
        }
        Ok(())
    }
}

/// Inserts the exact zero of `f` between consecutive points of opposite sign.
fn split_at<F: Fn(&State3) -> f64>(points: &[State3], f: F, set_zero: fn(&mut State3)) -> Vec<State3> {
    let mut out = Vec::with_capacity(points.len() + 4);
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            let a = points[k - 1];
            let (fa, fb) = (f(&a), f(p));
            if fa * fb < 0.0 {
                let mut c = a + (fa / (fa - fb)) * (p - a);
                set_zero(&mut c);
                out.push(c);
            }
        }
        out.push(*p);
    }
    out
}

fn split_border(points: &[State3]) -> Vec<State3> {
    split_at(points, |p| p.x, |p| p.x = 0.0)
}

fn subdivide(points: &[State3], max_len: f64) -> Vec<State3> {
    if !max_len.is_finite() || points.len() < 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let len = (w[1] - w[0]).norm();
        let parts = (len / max_len).ceil().max(1.0) as usize;
        for k in 1..parts {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / parts as f64));
        }
        out.push(w[1]);
    }
    out
}

fn finite(points: &[State3]) -> Result<()> {
    if points.iter().all(|p| p.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::OverflowDetected)
    }
}

fn map_forward(params: &PwlParams, points: &[State3]) -> Result<Vec<Vec<State3>>> {
    // segments never straddle the border, so vertex images are exact
    let image: Vec<State3> = split_border(points).iter().map(|p| params.step(p)).collect();
    finite(&image)?;
    Ok(vec![split_border(&image)])
}

/// Preimages along every branch. The branch of side `s` is consistent where
/// its preimage lies in `s`, i.e. where `z / delta_s` has the right sign, so
/// pieces are first split on `z = 0`.
fn map_backward(params: &PwlParams, points: &[State3]) -> Result<Vec<Vec<State3>>> {
    let pts = split_at(points, |p| p.z, |p| p.z = 0.0);
    let mut out = Vec::new();
    for side in [Side::Left, Side::Right] {
        let delta = params.side(side).delta;
        let valid = |p: &State3| side.contains(&State3::new(p.z / delta, 0.0, 0.0));
        let mut run: Vec<State3> = Vec::new();
        for p in &pts {
            if valid(p) {
                run.push(params.invert_branch(side, p)?);
            } else {
                if run.len() > 1 {
                    out.push(split_border(&run));
                }
                run.clear();
            }
        }
        if run.len() > 1 {
            out.push(split_border(&run));
        }
    }
    for piece in &out {
        finite(piece)?;
    }
    Ok(out)
}

/// Traces the one-dimensional stable or unstable manifold of `fp` from a
/// seed segment on its eigenline, using the inverse map for stable ones.
pub fn trace_manifold_1d(
    params: &PwlParams,
    fp: &FixedPointInfo,
    spec: &SpectralData,
    direction: Stability,
    opts: &ManifoldOptions,
) -> Result<ManifoldTrace> {
    let want_unstable = match direction {
        Stability::Unstable => 1,
        Stability::Stable => 2,
    };
    if spec.unstable_count() != want_unstable {
        return Err(Error::WrongSpectralType(format!(
            "no one-dimensional {} direction",
            direction.label()
        )));
    }
    let iso = spec.isolated_index().expect("mixed stability");
    let lambda = spec.eigenvalues[iso].re;
    let multiplier = match direction {
        Stability::Unstable => lambda,
        Stability::Stable => 1.0 / lambda,
    };
    let v = spec.real_eigenvector(iso).normalize();
    let f = fp.location;
    let eps = 1e-6 * (1.0 + f.norm());
    let n = opts.samples.max(2);
    let max_segment = opts.max_segment.unwrap_or(opts.arc_budget / 1000.0);

    // with a negative multiplier one half-branch maps onto the other
    let signs: &[f64] = if multiplier < 0.0 { &[1.0] } else { &[1.0, -1.0] };
    let mut pieces = Vec::new();
    let mut frontier = Vec::new();
    for s in signs {
        let points: Vec<State3> = (0..n)
            .map(|k| f + v * (s * eps * multiplier.abs().powf(k as f64 / (n - 1) as f64)))
            .collect();
        frontier.push(split_border(&points));
    }
    let mut arc: f64 = frontier
        .iter()
        .map(|p: &Vec<State3>| ManifoldPiece { iterate: 0, points: p.clone() }.arc_length())
        .sum();
    pieces.extend(frontier.iter().map(|p| ManifoldPiece {
        iterate: 0,
        points: p.clone(),
    }));

    let mut truncated = false;
    let mut iterate = 0;
    while arc <= opts.arc_budget && !frontier.is_empty() {
        if iterate == opts.max_iterates {
            truncated = true;
            break;
        }
        iterate += 1;
        let mut next = Vec::new();
        for piece in &frontier {
            let fine = subdivide(piece, max_segment);
            let images = match direction {
                Stability::Unstable => map_forward(params, &fine)?,
                Stability::Stable => map_backward(params, &fine)?,
            };
            next.extend(images);
        }
        for p in &next {
            let piece = ManifoldPiece {
                iterate,
                points: p.clone(),
            };
            arc += piece.arc_length();
            pieces.push(piece);
        }
        if next.len() > opts.max_pieces {
            truncated = true;
            break;
        }
        frontier = next;
    }
    Ok(ManifoldTrace {
        fixed_point: f,
        eigenvalue: lambda,
        direction,
        pieces,
        arc_length: arc,
        truncated,
    })
}

/// Real part of the interpolated orbit of the border point of `fp`'s
/// one-dimensional eigendirection, sampled on `t_grid`.
pub fn companion_manifold(
    params: &PwlParams,
    fp: &FixedPointInfo,
    spec: &SpectralData,
    t_grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let iso = spec
        .isolated_index()
        .ok_or_else(|| Error::WrongSpectralType("no one-dimensional eigendirection".into()))?;
    let p0 = border_touch(fp, &spec.real_eigenvector(iso))?;
    let interp = Interpolator::new(params)?;
    t_grid
        .iter()
        .map(|&t| {
            Ok(CurvePoint {
                t,
                value: interp.companion_orbit_extended(&p0, t)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolation::real_part;

    fn left_setup() -> (PwlParams, FixedPointInfo, SpectralData) {
        let p = PwlParams::shilnikov_example();
        let fp = p.fixed_point(Side::Left).unwrap();
        let spec = SpectralData::of_side(&p.side(Side::Left)).unwrap();
        (p, fp, spec)
    }

    fn dist_to_segment(p: &State3, a: &State3, b: &State3) -> f64 {
        let d = b - a;
        let len2 = d.norm_squared();
        let s = if len2 == 0.0 { 0.0 } else { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) };
        (a + s * d - p).norm()
    }

    fn dist_to_trace(p: &State3, t: &ManifoldTrace) -> f64 {
        t.pieces
            .iter()
            .flat_map(|pc| pc.points.windows(2).map(|w| dist_to_segment(p, &w[0], &w[1])))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn first_border_crossing_is_touch_point() {
        let (p, fp, spec) = left_setup();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Unstable, &ManifoldOptions::new(20.0)).unwrap();
        let p0 = border_touch(&fp, &spec.real_eigenvector(0)).unwrap();
        let first = t
            .pieces
            .iter()
            .flat_map(|pc| pc.points.iter())
            .find(|q| q.x == 0.0)
            .unwrap();
        assert!((first - p0).norm() < 1e-9);
    }

    #[test]
    fn half_branch_away_from_border_is_straight() {
        let (p, fp, spec) = left_setup();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Unstable, &ManifoldOptions::new(20.0)).unwrap();
        let v = spec.real_eigenvector(0).normalize();
        let p0 = border_touch(&fp, &v).unwrap();
        let toward = (p0 - fp.location).dot(&v).signum();
        let mut checked = 0;
        for pc in &t.pieces {
            for q in &pc.points {
                let d = q - fp.location;
                if d.dot(&v) * toward < 0.0 {
                    assert!(d.cross(&v).norm() <= 1e-9 * (1.0 + d.norm()));
                    assert!(q.x < 0.0);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn loops_through_right_and_returns() {
        let (p, fp, spec) = left_setup();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Unstable, &ManifoldOptions::new(40.0)).unwrap();
        let all: Vec<&State3> = t.pieces.iter().flat_map(|pc| pc.points.iter()).collect();
        assert!(all.iter().any(|q| q.x > 0.1));
        // some piece starts on the right and comes back left
        assert!(t.pieces.iter().any(|pc| pc.points.first().unwrap().x > 0.0 && pc.points.iter().any(|q| q.x < 0.0)));
    }

    #[test]
    fn no_segment_jumps_the_border() {
        let (p, fp, spec) = left_setup();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Unstable, &ManifoldOptions::new(40.0)).unwrap();
        for pc in &t.pieces {
            for w in pc.points.windows(2) {
                assert!(w[0].x * w[1].x >= 0.0);
            }
        }
    }

    #[test]
    fn integer_companion_points_lie_on_trace() {
        let (p, fp, spec) = left_setup();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Unstable, &ManifoldOptions::new(60.0)).unwrap();
        let curve = companion_manifold(&p, &fp, &spec, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let p0 = border_touch(&fp, &spec.real_eigenvector(0)).unwrap();
        assert!((real_part(&curve[0].value) - p0).norm() < 1e-15);
        for c in &curve[1..] {
            assert!(dist_to_trace(&real_part(&c.value), &t) < 1e-9);
        }
    }

    #[test]
    fn stable_trace_branches_backward() {
        let p = PwlParams::shilnikov_example();
        let fp = p.fixed_point(Side::Right).unwrap();
        let spec = SpectralData::of_side(&p.side(Side::Right)).unwrap();
        let t = trace_manifold_1d(&p, &fp, &spec, Stability::Stable, &ManifoldOptions::new(30.0)).unwrap();
        assert!(t.pieces.len() > 1);
        // every later piece maps forward onto an earlier one
        for pc in t.pieces.iter().filter(|pc| pc.iterate > 0).take(5) {
            let q = pc.points[pc.points.len() / 2];
            assert!(dist_to_trace(&p.step(&q), &t) < 1e-8 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn wrong_direction_rejected() {
        let (p, fp, spec) = left_setup();
        assert!(trace_manifold_1d(&p, &fp, &spec, Stability::Stable, &ManifoldOptions::new(1.0)).is_err());
    }
}
