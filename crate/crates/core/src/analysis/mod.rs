//! Simulation tools: Lyapunov spectra, parameter sweeps, basin rasters and
//! one-dimensional manifold traces.

mod basin;
mod lyapunov;
mod manifold;
mod scan;

pub use basin::{basin_raster, BasinRaster, BasinSpec, DEFAULT_CEILING, DEFAULT_RASTER_ITERS, DEFAULT_RESOLUTION};
pub use lyapunov::{lyapunov_spectrum, LyapunovAccumulator};
pub use manifold::{
    companion_manifold, trace_manifold_1d, ManifoldOptions, ManifoldPiece, ManifoldTrace,
};
pub use scan::{bifurcation_scan, OrbitSpec, ScanColumn, ScanResult, Sweep, DEFAULT_ESCAPE_RADIUS};
