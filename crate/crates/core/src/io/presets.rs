//! Initial-condition presets.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{InitialCondition, RunConfig};
use crate::coeffs::LeslieCoefficients;
use crate::error::{Error, Result};
use crate::physics::FieldState;
use crate::spectral::{magnitude, snapshot, Field, Shape, SpectralGrid};

const TAU: f64 = 2.0 * PI;

/// `u = amp (sin x cos y, -cos x sin y)` with `x = 2 pi x1`, `y = 2 pi x2`,
/// independent of `x3` (and `u3 = 0`) in 3D.
pub fn taylor_green(grid: &Arc<SpectralGrid>, amplitude: f64) -> Field {
    Field::from_fn(grid, Shape::Vector(grid.dim()), |x, o| {
        let (a, b) = (TAU * x[0], TAU * x[1]);
        o[0] = amplitude * a.sin() * b.cos();
        o[1] = -amplitude * a.cos() * b.sin();
    })
}

pub fn uniform_director(grid: &Arc<SpectralGrid>) -> Field {
    Field::constant(grid, Shape::Vector(3), &[0.0, 0.0, 1.0])
}

/// Random three-component field built from modes with `0 < max_j |k_j| <= kmax`,
/// scaled so that its pointwise Euclidean maximum is 1.
pub fn band_limited_perturbation(grid: &Arc<SpectralGrid>, kmax: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let km = kmax as i64;
    let mut modes: Vec<([i64; 3], [f64; 3], [f64; 3])> = Vec::new();
    let range: Vec<i64> = (-km..=km).collect();
    let k3: &[i64] = if dim == 3 { &range } else { &[0] };
    for &k0 in &range {
        for &k1 in &range {
            for &k2 in k3 {
                if k0 == 0 && k1 == 0 && k2 == 0 {
                    continue;
                }
                let amp: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
                modes.push(([k0, k1, k2], amp, phase));
            }
        }
    }
    let p = Field::from_fn(grid, Shape::Vector(3), |x, o| {
        for (k, amp, phase) in &modes {
            let arg = TAU * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
            for c in 0..3 {
                o[c] += amp[c] * (arg + phase[c]).cos();
            }
        }
    });
    let sup = magnitude(&p).max_abs();
    if sup > 0.0 {
        p.scale(1.0 / sup)
    } else {
        p
    }
}

/// Builds the initial state described by `cfg`. Snapshot paths that are
/// relative are resolved against `base`.
pub fn initial_state(cfg: &RunConfig, base: &Path) -> Result<FieldState> {
    let grid = cfg.grid()?;
    let coeffs = cfg.coefficients()?;
    build(&grid, coeffs, &cfg.initial_condition, cfg.seed, base)
}

pub fn build(
    grid: &Arc<SpectralGrid>,
    coeffs: LeslieCoefficients,
    ic: &InitialCondition,
    seed: u64,
    base: &Path,
) -> Result<FieldState> {
    let dim = grid.dim();
    match ic {
        InitialCondition::Quiescent => Ok(FieldState::quiescent(grid, coeffs)),
        InitialCondition::TaylorGreenUniformDirector { amplitude } => {
            FieldState::new(0.0, taylor_green(grid, *amplitude), uniform_director(grid), coeffs)
        }
        InitialCondition::PerturbedDirector { amplitude, modes, velocity_amplitude } => {
            if *modes == 0 || *modes > grid.dealias_cutoff() {
                return Err(Error::Config(format!("perturbation modes must lie in 1..={}", grid.dealias_cutoff())));
            }
            let mut d = uniform_director(grid);
            d.axpy(*amplitude, &band_limited_perturbation(grid, *modes, seed));
            let u = if *velocity_amplitude != 0.0 {
                taylor_green(grid, *velocity_amplitude)
            } else {
                Field::zeros(grid, Shape::Vector(dim))
            };
            FieldState::new(0.0, u, d, coeffs)
        }
        InitialCondition::Snapshot { velocity, director } => {
            let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
            let (u, tu) = snapshot::load(&resolve(velocity), grid)?;
            let (d, td) = snapshot::load(&resolve(director), grid)?;
            if tu != td {
                return Err(Error::Snapshot(format!("velocity time {tu} differs from director time {td}")));
            }
            if u.ncomp() != dim || d.ncomp() != 3 {
                return Err(Error::Snapshot(format!(
                    "expected {dim} velocity and 3 director components, got {} and {}",
                    u.ncomp(),
                    d.ncomp()
                )));
            }
            FieldState::new(tu, u, d, coeffs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{divergence, truncate_modes};

    fn coeffs() -> LeslieCoefficients {
        LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn perturbation_is_normalized_band_limited_and_seeded() {
        let g = SpectralGrid::shared(2, 32).unwrap();
        let p = band_limited_perturbation(&g, 3, 9);
        assert!((magnitude(&p).max_abs() - 1.0).abs() < 1e-14);
        assert!((&truncate_modes(&p, 3).unwrap() - &p).max_abs() < 1e-13);
        assert_eq!(p.data(), band_limited_perturbation(&g, 3, 9).data());
        assert_ne!(p.data(), band_limited_perturbation(&g, 3, 10).data());
    }

    #[test]
    fn taylor_green_is_divergence_free_in_3d() {
        let g = SpectralGrid::shared(3, 16).unwrap();
        let u = taylor_green(&g, 1.0);
        assert!(divergence(&u).unwrap().max_abs() < 1e-12);
        assert_eq!(u.comp(2).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn snapshot_preset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpectralGrid::shared(2, 16).unwrap();
        let ic = InitialCondition::PerturbedDirector { amplitude: 0.2, modes: 2, velocity_amplitude: 0.5 };
        let s = build(&g, coeffs(), &ic, 1, dir.path()).unwrap();
        snapshot::save(&dir.path().join("u.snap"), &s.u, 0.0).unwrap();
        snapshot::save(&dir.path().join("d.snap"), &s.d, 0.0).unwrap();
        let snap = InitialCondition::Snapshot { velocity: "u.snap".into(), director: "d.snap".into() };
        let t = build(&g, coeffs(), &snap, 0, dir.path()).unwrap();
        assert_eq!(t.u.data(), s.u.data());
        assert_eq!(t.d.data(), s.d.data());
    }
}
