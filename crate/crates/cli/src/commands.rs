use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use shilnikov_core::analysis::{
    basin_raster, bifurcation_scan, companion_manifold, lyapunov_spectrum, trace_manifold_1d, BasinSpec,
    ManifoldOptions, OrbitSpec, Sweep,
};
use shilnikov_core::format::g12;
use shilnikov_core::homoclinic::{
    detect, detect_backward, detect_flip_backward, detect_flip_forward, detect_forward, necessary_condition,
    BranchPolicy, DetectorConfig, Direction,
};
use shilnikov_core::interpolation::{write_curve_csv, Interpolator};
use shilnikov_core::return_time::{
    descartes_bound, extremum_t_star, least_positive_root, theorem_t0, upper_bound_t0, ExpPolynomial,
    ReturnTimeModel,
};
use shilnikov_core::spectral::Stability;
use shilnikov_core::{classify, PwlParams, Side, SpectralData, State3};

use crate::{
    BasinArgs, BifurcationArgs, Command, DetectArgs, DetectMode, Failure, InterpolateArgs, LyapunovArgs, ManifoldArgs,
    ManifoldKind, OrbitArgs, ReturnTimeArgs,
};

/// Everything a run produces, held back until the computation succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    stdout: Vec<u8>,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn emit(&mut self, path: Option<&PathBuf>, bytes: Vec<u8>) {
        match path {
            Some(p) => self.files.push((p.clone(), bytes)),
            None => self.stdout.extend(bytes),
        }
    }

    fn emit_text(&mut self, path: Option<&PathBuf>, text: String) {
        self.emit(path, text.into_bytes());
    }

    pub fn commit(self) -> Result<(), Failure> {
        for (path, bytes) in &self.files {
            write_file(path, bytes)?;
        }
        let mut out = std::io::stdout().lock();
        out.write_all(&self.stdout)
            .and_then(|_| out.flush())
            .map_err(|e| Failure::Io(format!("stdout: {e}")))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn csv<F>(f: F) -> Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
    Ok(buf)
}

fn vec3(p: &State3) -> String {
    format!("({}, {}, {})", g12(p.x), g12(p.y), g12(p.z))
}

fn complex(c: &Complex64) -> String {
    if c.im == 0.0 {
        g12(c.re)
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        format!("{}{}{}i", g12(c.re), sign, g12(c.im.abs()))
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
    }
}

pub fn execute(params: &PwlParams, command: &Command) -> Result<Outputs, Failure> {
    let mut out = Outputs::default();
    match command {
        Command::FixedPoints(a) => out.emit_text(a.out.as_ref(), fixed_points(params)?),
        Command::Eigen(a) => out.emit_text(a.out.as_ref(), eigen(params)?),
        Command::Detect(a) => run_detect(params, a, &mut out)?,
        Command::NecessaryCondition(a) => out.emit_text(a.out.as_ref(), necessary(params)?),
        Command::ReturnTime(a) => return_time(params, a, &mut out)?,
        Command::Orbit(a) => orbit(params, a, &mut out)?,
        Command::Interpolate(a) => interpolate(params, a, &mut out)?,
        Command::Lyapunov(a) => lyapunov(params, a, &mut out)?,
        Command::Bifurcation(a) => bifurcation(params, a, &mut out)?,
        Command::Basin(a) => basin(params, a, &mut out)?,
        Command::Manifold(a) => manifold(params, a, &mut out)?,
    }
    Ok(out)
}

fn fixed_points(params: &PwlParams) -> Result<String, Failure> {
    let mut s = String::new();
    for (label, side) in [("L*", Side::Left), ("R*", Side::Right)] {
        let fp = params.fixed_point(side)?;
        let status = if fp.admissible { "admissible" } else { "virtual" };
        let _ = writeln!(s, "{label} = {}, {status}", vec3(&fp.location));
    }
    Ok(s)
}

fn eigen(params: &PwlParams) -> Result<String, Failure> {
    let mut s = String::new();
    for side in [Side::Left, Side::Right] {
        let sp = params.side(side);
        let spec = SpectralData::of_side(&sp)?;
        let class = classify(&spec);
        let vals: Vec<String> = spec.eigenvalues.iter().map(complex).collect();
        let mods: Vec<String> = spec.moduli().iter().map(|m| g12(*m)).collect();
        let _ = writeln!(
            s,
            "{}: tau = {}, sigma = {}, delta = {}",
            side_name(side),
            g12(sp.tau),
            g12(sp.sigma),
            g12(sp.delta)
        );
        let _ = writeln!(s, "  eigenvalues: {}", vals.join(", "));
        let _ = writeln!(s, "  moduli: {}", mods.join(", "));
        let _ = writeln!(s, "  class: {}", class.kind);
        let _ = writeln!(s, "  unstable_dim: {}", class.unstable_dim);
    }
    Ok(s)
}

fn run_detect(params: &PwlParams, a: &DetectArgs, out: &mut Outputs) -> Result<(), Failure> {
    let custom = a.home.is_some() || a.strict_preimages;
    let trace = if custom {
        let (direction, flip) = match a.mode {
            DetectMode::Forward => (Direction::Forward, false),
            DetectMode::Backward => (Direction::Backward, false),
            DetectMode::FlipForward => (Direction::Forward, true),
            DetectMode::FlipBackward => (Direction::Backward, true),
        };
        let home = match a.home {
            Some(h) => h.into(),
            None => auto_home(params, a.mode)?,
        };
        let cfg = DetectorConfig {
            flip,
            n_cap: a.n_cap,
            policy: if a.strict_preimages {
                BranchPolicy::Strict
            } else {
                BranchPolicy::FarSide
            },
            ..DetectorConfig::new(home, direction)
        };
        detect(params, &cfg)?
    } else {
        match a.mode {
            DetectMode::Forward => detect_forward(params, a.n_cap)?,
            DetectMode::Backward => detect_backward(params, a.n_cap)?,
            DetectMode::FlipForward => detect_flip_forward(params, a.n_cap)?,
            DetectMode::FlipBackward => detect_flip_backward(params, a.n_cap)?,
        }
    };
    if let Some(path) = &a.csv {
        out.emit(Some(path), csv(|w| trace.write_csv(w))?);
    }
    out.emit(a.out.as_ref(), csv(|w| trace.write_report(w))?);
    Ok(())
}

/// Home side the automatic detectors would pick.
fn auto_home(params: &PwlParams, mode: DetectMode) -> Result<Side, Failure> {
    let trace = match mode {
        DetectMode::Forward => detect_forward(params, Some(2))?,
        DetectMode::Backward => detect_backward(params, Some(2))?,
        DetectMode::FlipForward => detect_flip_forward(params, Some(2))?,
        DetectMode::FlipBackward => detect_flip_backward(params, Some(2))?,
    };
    Ok(trace.home)
}

fn necessary(params: &PwlParams) -> Result<String, Failure> {
    let nc = necessary_condition(params)?;
    let mut s = String::new();
    let _ = writeln!(s, "holds: {}", nc.holds);
    let _ = writeln!(s, "direction: {}", nc.direction);
    let _ = writeln!(s, "k_bound: {}", nc.k_bound);
    let _ = writeln!(s, "analytic_bound: {}", nc.analytic_bound);
    let _ = writeln!(
        s,
        "k_witness: {}",
        nc.k_witness.map(|k| k.to_string()).unwrap_or_else(|| "none".into())
    );
    let _ = writeln!(s, "t0: {}", nc.t0.map(g12).unwrap_or_else(|| "none".into()));
    Ok(s)
}

fn envelope_line(s: &mut String, label: &str, g: &ExpPolynomial) {
    let b = descartes_bound(g);
    let _ = writeln!(
        s,
        "{label}: a1 = {}, a2 = {}, a3 = {}, kappa1 = {}, kappa2 = {}",
        g12(g.a1),
        g12(g.a2),
        g12(g.a3),
        g12(g.kappa1),
        g12(g.kappa2)
    );
    let _ = writeln!(s, "  sign_changes: {} (as listed: {})", b.sign_changes, b.sign_changes_listed);
    let _ = writeln!(s, "  max_roots: {}", b.max_roots);
    let _ = writeln!(s, "  t0: {}", g12(upper_bound_t0(g)));
    let _ = writeln!(
        s,
        "  t_star: {}",
        extremum_t_star(g).map(g12).unwrap_or_else(|| "none".into())
    );
    let _ = writeln!(s, "  root_bracket: {} {}", g12(b.t_lower), g12(b.t_upper));
}

fn return_time(params: &PwlParams, a: &ReturnTimeArgs, out: &mut Outputs) -> Result<(), Failure> {
    let (side, start) = match (a.start, a.side) {
        (Some(p), Some(side)) => (side.into(), p.0),
        (Some(_), None) => return Err(Failure::Usage("--start needs --side".into())),
        (None, side) => {
            let trace = detect_forward(params, Some(2))?;
            let far = side.map(Side::from).unwrap_or(trace.home.opposite());
            (far, trace.p0)
        }
    };
    let model = ReturnTimeModel::build(params, side, &start)?;
    let horizon = model.horizon();
    let t_max = a.t_max.unwrap_or(horizon.t_max);
    let mut s = String::new();
    let _ = writeln!(s, "side: {}", side_name(side));
    let _ = writeln!(s, "start: {}", vec3(&start));
    let evs: Vec<String> = model.eigenvalues.iter().map(complex).collect();
    let cs: Vec<String> = model.coefficients.iter().map(complex).collect();
    let _ = writeln!(s, "eigenvalues: {}", evs.join(", "));
    let _ = writeln!(s, "coefficients: {}", cs.join(", "));
    let _ = writeln!(s, "constant: {}", g12(model.constant));
    let _ = writeln!(
        s,
        "horizon: {} ({})",
        g12(horizon.t_max),
        if horizon.analytic { "analytic" } else { "fallback" }
    );
    let root = least_positive_root(&model, t_max);
    let _ = writeln!(s, "least_positive_root: {}", root.map(g12).unwrap_or_else(|| "none".into()));
    match model.saddle_focus() {
        Ok(form) => {
            let _ = writeln!(
                s,
                "canonical: alpha1 = {}, alpha2 = {}, alpha3 = {}, phase = {}, lambda1 = {}, r0 = {}, theta0 = {}",
                g12(form.alpha1),
                g12(form.alpha2),
                g12(form.alpha3),
                g12(form.phase),
                g12(form.lambda1),
                g12(form.r0),
                g12(form.theta0)
            );
            if form.real_term_dominates() {
                let _ = writeln!(s, "theorem_t0: {}", g12(theorem_t0(form)));
            }
            match model.envelopes() {
                Ok((plus, minus)) => {
                    envelope_line(&mut s, "f_plus", &plus);
                    envelope_line(&mut s, "f_minus", &minus);
                }
                Err(e) => {
                    let _ = writeln!(s, "envelopes: none ({e})");
                }
            }
        }
        Err(e) => {
            let _ = writeln!(s, "canonical: none ({e})");
        }
    }
    if let Some(path) = &a.csv {
        out.emit(Some(path), csv(|w| model.write_diagnostics_csv(w, a.csv_t_end, a.csv_samples))?);
    }
    out.emit_text(a.out.as_ref(), s);
    Ok(())
}

fn orbit(params: &PwlParams, a: &OrbitArgs, out: &mut Outputs) -> Result<(), Failure> {
    let points = params.orbit(&a.x0.0, a.steps);
    let bytes = csv(|w| {
        writeln!(w, "index,x,y,z")?;
        for (k, p) in points.iter().enumerate() {
            writeln!(w, "{},{},{},{}", k, g12(p.x), g12(p.y), g12(p.z))?;
        }
        Ok(())
    })?;
    out.emit(a.out.as_ref(), bytes);
    Ok(())
}

fn interpolate(params: &PwlParams, a: &InterpolateArgs, out: &mut Outputs) -> Result<(), Failure> {
    let curve = Interpolator::new(params)?.sample_curve(&a.x0.0, a.t_end, a.dt)?;
    out.emit(a.out.as_ref(), csv(|w| write_curve_csv(w, &curve))?);
    Ok(())
}

fn lyapunov(params: &PwlParams, a: &LyapunovArgs, out: &mut Outputs) -> Result<(), Failure> {
    let ex = lyapunov_spectrum(params, &a.x0.0, a.iters, a.transient)?;
    let mut s = String::new();
    let _ = writeln!(s, "exponents: {}, {}, {}", g12(ex[0]), g12(ex[1]), g12(ex[2]));
    let _ = writeln!(s, "sum: {}", g12(ex.iter().sum()));
    out.emit_text(a.out.as_ref(), s);
    Ok(())
}

fn bifurcation(params: &PwlParams, a: &BifurcationArgs, out: &mut Outputs) -> Result<(), Failure> {
    if a.steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    let sweep = Sweep {
        name: a.param,
        from: a.from,
        to: a.to,
        steps: a.steps,
    };
    let spec = OrbitSpec {
        x0: a.x0.0,
        n_transient: a.transient,
        n_sample: a.samples,
        escape_radius: a.escape_radius,
        detect: !a.no_detect,
    };
    let result = bifurcation_scan(params, &sweep, &spec);
    if let Some(path) = &a.summary {
        out.emit(Some(path), csv(|w| result.write_summary_csv(w))?);
    }
    out.emit(a.out.as_ref(), csv(|w| result.write_samples_csv(w))?);
    Ok(())
}

fn basin(params: &PwlParams, a: &BasinArgs, out: &mut Outputs) -> Result<(), Failure> {
    if a.resolution < 2 {
        return Err(Failure::Usage("--resolution must be at least 2".into()));
    }
    let spec = BasinSpec {
        n_iter: a.iters,
        ceiling: a.ceiling,
        x_range: (a.x_min, a.x_max),
        y_range: (a.y_min, a.y_max),
        ..BasinSpec::new(a.z, a.resolution)
    };
    let raster = basin_raster(params, &spec)?;
    out.emit(a.out.as_ref(), csv(|w| raster.write(w))?);
    Ok(())
}

fn manifold(params: &PwlParams, a: &ManifoldArgs, out: &mut Outputs) -> Result<(), Failure> {
    let side: Side = a.side.into();
    let fp = params.fixed_point(side)?;
    let spec = SpectralData::of_side(&params.side(side))?;
    let bytes = match a.kind {
        ManifoldKind::Companion => {
            if !(a.dt > 0.0) {
                return Err(Failure::Usage("--dt must be positive".into()));
            }
            let n = (a.t_end / a.dt).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|k| if k == n { a.t_end } else { k as f64 * a.dt }).collect();
            let curve = companion_manifold(params, &fp, &spec, &grid)?;
            csv(|w| write_curve_csv(w, &curve))?
        }
        kind => {
            let stability = if kind == ManifoldKind::Stable {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            let opts = ManifoldOptions {
                samples: a.samples,
                max_iterates: a.max_iterates,
                ..ManifoldOptions::new(a.arc_budget)
            };
            let trace = trace_manifold_1d(params, &fp, &spec, stability, &opts)?;
            csv(|w| trace.write_csv(w))?
        }
    };
    out.emit(a.out.as_ref(), bytes);
    Ok(())
}
