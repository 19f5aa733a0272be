use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::map::{PwlParams, State3};

pub const DEFAULT_RESOLUTION: usize = 500;
pub const DEFAULT_RASTER_ITERS: usize = 1000;
pub const DEFAULT_CEILING: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinSpec {
    pub z_level: f64,
    /// Grid points per axis, both ends included.
    pub resolution: usize,
    pub n_iter: usize,
    pub ceiling: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl BasinSpec {
    pub fn new(z_level: f64, resolution: usize) -> Self {
        Self {
            z_level,
            resolution,
            n_iter: DEFAULT_RASTER_ITERS,
            ceiling: DEFAULT_CEILING,
            x_range: (-1.0, 1.0),
            y_range: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinRaster {
    pub spec: BasinSpec,
    /// Row-major: row `j` is `y_j`, column `i` is `x_i`.
    pub cells: Vec<f64>,
}

fn grid(range: (f64, f64), n: usize, k: usize) -> f64 {
    if k == n - 1 {
        range.1
    } else {
        range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
    }
}

fn cell_value(params: &PwlParams, x0: State3, n_iter: usize, ceiling: f64) -> f64 {
    let mut x = x0;
    for _ in 0..n_iter {
        x = params.step(&x);
        if !x.iter().all(|v| v.is_finite()) {
            return ceiling;
        }
    }
    let n = x.norm();
    if n.is_finite() {
        n.min(ceiling)
    } else {
        ceiling
    }
}

/// Final orbit norm, capped at the ceiling, for every point of the grid on
/// the plane `z = z_level`. Rows are computed in parallel.
pub fn basin_raster(params: &PwlParams, spec: &BasinSpec) -> Result<BasinRaster> {
    if spec.resolution < 2 {
        return Err(Error::InvalidParams("raster resolution must be at least 2".into()));
    }
    if !(spec.ceiling > 0.0) {
        return Err(Error::InvalidParams("ceiling must be positive".into()));
    }
    let n = spec.resolution;
    let cells: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = grid(spec.y_range, n, j);
            (0..n).map(move |i| {
                let x = grid(spec.x_range, n, i);
                cell_value(params, State3::new(x, y, spec.z_level), spec.n_iter, spec.ceiling)
            })
        })
        .collect();
    Ok(BasinRaster { spec: *spec, cells })
}

impl BasinRaster {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[j * self.spec.resolution + i]
    }

    pub fn sub_ceiling_count(&self) -> usize {
        self.cells.iter().filter(|c| **c < self.spec.ceiling).count()
    }

    /// Text header of `# key: value` lines followed by the grid as CSV, one
    /// row per y value from `y_min` to `y_max`.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let s = &self.spec;
        writeln!(w, "# basin raster")?;
        writeln!(w, "# z_level: {}", g12(s.z_level))?;
        writeln!(w, "# x_range: {} {}", g12(s.x_range.0), g12(s.x_range.1))?;
        writeln!(w, "# y_range: {} {}", g12(s.y_range.0), g12(s.y_range.1))?;
        writeln!(w, "# resolution: {}", s.resolution)?;
        writeln!(w, "# n_iter: {}", s.n_iter)?;
        writeln!(w, "# ceiling: {}", g12(s.ceiling))?;
        for row in self.cells.chunks(s.resolution) {
            let line: Vec<String> = row.iter().map(|v| g12(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}
