//! Three-dimensional piecewise-linear border-collision normal form: spectra,
//! matrix-power recursion, complex interpolation, border-return times,
//! homoclinic detection and numerical analysis tools.

pub mod analysis;
pub mod error;
pub mod format;
pub mod homoclinic;
pub mod interpolation;
pub mod map;
pub mod recursion;
pub mod return_time;
pub mod spectral;

pub use error::{Error, Result};
pub use map::{FixedPointInfo, ParamName, PwlParams, Side, SideParams, State3};
pub use spectral::{classify, eigen3, FpClass, FpKind, SpectralData};
