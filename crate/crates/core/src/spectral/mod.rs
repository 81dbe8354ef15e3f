//! Periodic grids, fields and spectral operators.

mod field;
mod grid;
pub mod ops;
pub mod snapshot;

pub use field::{Field, Shape};
pub use grid::SpectralGrid;
pub use ops::{
    curl, dealias, divergence, gradient, inner, l2_norm, lambda_s, laplacian, leray_project,
    magnitude, resample, sobolev_norm, spectral_energy, strain_rate, sup_norm, sup_norm_refined,
    truncate_modes, vorticity_tensor,
};
