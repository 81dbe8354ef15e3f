//! Shared fixtures for the benchmarks.

use std::path::Path;

use nematic_core::io::config::InitialCondition;
use nematic_core::io::presets::build;
use nematic_core::{FieldState, LeslieCoefficients, SpectralGrid};

/// Rod-like coefficients with a perturbed director and a Taylor-Green flow.
pub fn sample_state(dim: usize, n: usize) -> FieldState {
    let grid = SpectralGrid::shared(dim, n).expect("valid grid");
    let coeffs = LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).expect("valid coefficients");
    let ic = InitialCondition::PerturbedDirector { amplitude: 0.1, modes: 4.min(grid.dealias_cutoff()), velocity_amplitude: 0.5 };
    build(&grid, coeffs, &ic, 1, Path::new(".")).expect("valid state")
}
