use std::io::{self, Write};

use rayon::prelude::*;

use crate::analysis::lyapunov::LyapunovAccumulator;
use crate::error::Error;
use crate::format::g12;
use crate::homoclinic::{detect_backward, detect_forward, Verdict};
use crate::map::{ParamName, PwlParams, State3};

/// Orbits whose norm exceeds this are counted as escaped.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub name: ParamName,
    pub from: f64,
    pub to: f64,
    /// Number of swept values, ends included.
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 || self.from == self.to {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k == self.steps - 1 {
                    self.to
                } else {
                    self.from + (self.to - self.from) * k as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSpec {
    pub x0: State3,
    pub n_transient: usize,
    pub n_sample: usize,
    pub escape_radius: f64,
    pub detect: bool,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            x0: State3::new(0.3, -0.5, -0.5),
            n_transient: 1000,
            n_sample: 200,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
            detect: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanColumn {
    pub value: f64,
    /// x-coordinates after the transient; empty if the orbit escaped first.
    pub samples: Vec<f64>,
    /// Largest exponent over the sampled stretch.
    pub largest_lyapunov: Option<f64>,
    /// Iteration at which the orbit escaped.
    pub diverged_at: Option<usize>,
    pub forward_verdict: Option<Verdict>,
    pub backward_verdict: Option<Verdict>,
    /// Reason a column is incomplete (invalid parameters, etc.).
    pub error: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub name: ParamName,
    pub values: Vec<f64>,
    pub columns: Vec<ScanColumn>,
}

fn run_column(base: &PwlParams, name: ParamName, value: f64, orbit: &OrbitSpec) -> ScanColumn {
    let params = base.with(name, value);
    let mut col = ScanColumn {
        value,
        samples: Vec::new(),
        largest_lyapunov: None,
        diverged_at: None,
        forward_verdict: None,
        backward_verdict: None,
        error: None,
    };
    if let Err(e) = params.validate() {
        col.error = Some(e);
        return col;
    }
    if orbit.detect {
        col.forward_verdict = detect_forward(&params, None).ok().map(|t| t.verdict);
        col.backward_verdict = detect_backward(&params, None).ok().map(|t| t.verdict);
    }
    let mut x = orbit.x0;
    let mut acc = LyapunovAccumulator::default();
    let total = orbit.n_transient + orbit.n_sample;
    let mut samples = Vec::with_capacity(orbit.n_sample);
    for i in 0..total {
        if i >= orbit.n_transient {
            samples.push(x.x);
            acc.push(&params, &x);
        }
        x = params.step(&x);
        if !(x.norm() <= orbit.escape_radius) {
            col.diverged_at = Some(i + 1);
            col.samples = samples;
            return col;
        }
    }
    col.samples = samples;
    if orbit.n_sample > 0 {
        col.largest_lyapunov = Some(acc.exponents()[0]);
    }
    col
}

/// Sweeps one parameter; columns are computed in parallel and returned in
/// sweep order.
pub fn bifurcation_scan(params: &PwlParams, sweep: &Sweep, orbit: &OrbitSpec) -> ScanResult {
    let values = sweep.values();
    let columns = values
        .par_iter()
        .map(|v| run_column(params, sweep.name, *v, orbit))
        .collect();
    ScanResult {
        name: sweep.name,
        values,
        columns,
    }
}

impl ScanResult {
    /// Long format: one row per sampled x-coordinate.
    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{},sample,x", self.name)?;
        for c in &self.columns {
            for (k, x) in c.samples.iter().enumerate() {
                writeln!(w, "{},{},{}", g12(c.value), k, g12(*x))?;
            }
        }
        Ok(())
    }

    /// One row per swept value.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "{},largest_lyapunov,diverged_at,forward_verdict,backward_verdict",
            self.name
        )?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for c in &self.columns {
            writeln!(
                w,
                "{},{},{},{},{}",
                g12(c.value),
                opt(c.largest_lyapunov.map(g12)),
                opt(c.diverged_at.map(|d| d.to_string())),
                opt(c.forward_verdict.map(|v| v.to_string())),
                opt(c.backward_verdict.map(|v| v.to_string()))
            )?;
        }
        Ok(())
    }
}
