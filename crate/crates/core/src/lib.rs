//! Simulation laboratory for the generalised alpha-Muskat interface
//! equation on the periodic torus: spectral operators, kernel quadratures,
//! named constants, time integration, diagnostics, and campaign drivers.

pub mod alpha;
pub mod artifacts;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod experiments;
pub mod special;
pub mod spectral;
pub mod stepper;

pub use alpha::AlphaParams;
pub use error::{CoreError, Result};
pub use grid::{GridSpec, ScalarField, SupNorms};
pub use kernel::{contour_normalization, RhsEvaluator, RhsMethod};
pub use spectral::SpectralField;
