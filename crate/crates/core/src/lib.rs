//! Periodic pseudo-spectral solver for the general Ericksen-Leslie system of
//! nematic liquid crystal flow with a Ginzburg-Landau penalty.

pub mod coeffs;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod physics;
pub mod solver;
pub mod spectral;

pub use coeffs::{LeslieCoefficients, RegimeReport};
pub use error::{Error, Result};
pub use physics::{ConstitutiveBundle, FieldState};
pub use spectral::{Field, Shape, SpectralGrid};
