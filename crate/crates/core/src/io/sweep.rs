//! Families of runs that differ along one axis: time step, regularization
//! weight `M` or grid size.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::run::{execute, RunOptions};
use crate::error::{Error, Result};
use crate::physics::FieldState;
use crate::solver::{BlowupInfo, RegularizationConfig};
use crate::spectral::{l2_norm, resample, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Dt,
    M,
    N,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Dt => "dt",
            SweepAxis::M => "M",
            SweepAxis::N => "n",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(SweepAxis::Dt),
            "M" | "m" => Ok(SweepAxis::M),
            "n" | "N" => Ok(SweepAxis::N),
            _ => Err(Error::Parameter(format!("unknown sweep axis {s:?} (expected dt, M or n)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    /// Largest `|residual_case1|` over the audited steps.
    pub max_residual_case1: f64,
    pub max_residual_general: f64,
    /// Time integral of `|residual_case1|` over the run.
    pub l1_residual_case1: f64,
    pub l1_residual_general: f64,
    /// L2 distance of the final state to the previous row's final state,
    /// taken on the coarser of the two grids. NaN for the first row.
    pub diff_to_previous: f64,
    /// L2 distance of the final state to the unregularized run (M axis only).
    pub gap_to_plain: Option<f64>,
    pub blowup: Option<BlowupInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Log-log slopes against the axis value of the max and time-integrated
    /// residuals (dt axis only).
    pub residual_case1_order: Option<f64>,
    pub residual_general_order: Option<f64>,
    pub l1_residual_case1_order: Option<f64>,
    pub l1_residual_general_order: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Each member writes below `<root>/<axis>_<value>`; nothing is written
    /// when absent.
    pub output_root: Option<PathBuf>,
    pub cadence: Option<usize>,
    pub version: String,
}

/// Least-squares slope of `log err` against `log h`. Pairs with a
/// non-positive or non-finite entry are skipped; `None` with fewer than two
/// usable pairs.
pub fn fitted_order(h: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// `sqrt(||u - u'||^2 + ||d - d'||^2)` on the coarser of the two grids.
pub fn state_distance(a: &FieldState, b: &FieldState) -> Result<f64> {
    let coarse = if a.grid().n() <= b.grid().n() { a.grid() } else { b.grid() };
    let on = |f: &Field| resample(f, coarse);
    let du = &on(&a.u)? - &on(&b.u)?;
    let dd = &on(&a.d)? - &on(&b.d)?;
    Ok(l2_norm(&du).hypot(l2_norm(&dd)))
}

fn member_config(base: &RunConfig, axis: SweepAxis, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Dt => cfg.stepper.dt = value,
        SweepAxis::M => {
            let m = as_count(value, "M")?;
            let reg = cfg.regularization.get_or_insert_with(|| RegularizationConfig::new(m, 4.0));
            reg.enabled = true;
            reg.m = m;
        }
        SweepAxis::N => cfg.grid.n = as_count(value, "n")?,
    }
    Ok(cfg)
}

fn as_count(v: f64, name: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Parameter(format!("{name} must be a positive integer, got {v}")))
    }
}

fn nan_max(it: impl Iterator<Item = f64>) -> f64 {
    it.filter(|v| !v.is_nan()).fold(f64::NAN, |m, v| if m.is_nan() { v.abs() } else { m.max(v.abs()) })
}

struct Member {
    row: SweepRow,
    state: FieldState,
}

fn run_member(cfg: &RunConfig, base: &Path, out: Option<PathBuf>, opts: &SweepOptions, value: f64) -> Result<Member> {
    let ro = RunOptions { dry: out.is_none(), output_dir: out, cadence: opts.cadence, version: opts.version.clone() };
    let o = execute(cfg, base, &ro)?;
    let audited = || o.rows.iter().skip(1).map(|r| r.report);
    let mut l1 = [0.0; 2];
    let mut t_prev = o.rows.first().map(|r| r.report.time).unwrap_or(0.0);
    for r in audited() {
        let h = r.time - t_prev;
        t_prev = r.time;
        l1[0] += h * r.residual_case1.abs();
        l1[1] += h * r.residual_general.abs();
    }
    Ok(Member {
        row: SweepRow {
            value,
            steps: o.trajectory.steps,
            final_time: o.trajectory.final_state.time,
            final_energy: o.rows.last().map(|r| r.report.E_total).unwrap_or(f64::NAN),
            max_residual_case1: nan_max(audited().map(|r| r.residual_case1)),
            max_residual_general: nan_max(audited().map(|r| r.residual_general)),
            l1_residual_case1: l1[0],
            l1_residual_general: l1[1],
            diff_to_previous: f64::NAN,
            gap_to_plain: None,
            blowup: o.trajectory.blowup.clone(),
        },
        state: o.trajectory.final_state,
    })
}

/// Runs `base` once per value of `axis`, in parallel.
pub fn sweep(base_cfg: &RunConfig, base: &Path, axis: SweepAxis, values: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Parameter("sweep needs at least one value".into()));
    }
    let label = |v: f64| format!("{axis}={v}");
    let dir = |name: String| opts.output_root.as_ref().map(|r| r.join(name));
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| member_config(base_cfg, axis, v).map_err(|e| Error::Member { label: label(v), source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let members: Vec<Result<Member>> = configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(cfg, &v)| {
            run_member(cfg, base, dir(format!("{axis}_{v}")), opts, v)
                .map_err(|e| Error::Member { label: label(v), source: Box::new(e) })
        })
        .collect();
    let members: Vec<Member> = members.into_iter().collect::<Result<_>>()?;

    let plain = if axis == SweepAxis::M {
        let mut cfg = base_cfg.clone();
        cfg.regularization = None;
        Some(
            run_member(&cfg, base, dir("plain".into()), opts, f64::INFINITY)
                .map_err(|e| Error::Member { label: "plain".into(), source: Box::new(e) })?,
        )
    } else {
        None
    };

    let mut rows = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let mut row = m.row.clone();
        if i > 0 {
            row.diff_to_previous = state_distance(&members[i - 1].state, &m.state)?;
        }
        if let Some(p) = &plain {
            row.gap_to_plain = Some(state_distance(&p.state, &m.state)?);
        }
        rows.push(row);
    }
    let h: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let order = |f: fn(&SweepRow) -> f64| {
        if axis == SweepAxis::Dt {
            fitted_order(&h, &rows.iter().map(f).collect::<Vec<_>>())
        } else {
            None
        }
    };
    Ok(SweepReport {
        axis,
        residual_case1_order: order(|r| r.max_residual_case1),
        residual_general_order: order(|r| r.max_residual_general),
        l1_residual_case1_order: order(|r| r.l1_residual_case1),
        l1_residual_general_order: order(|r| r.l1_residual_general),
        rows,
    })
}

impl SweepReport {
    /// Plain-text table, one line per member.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>12} {:>7} {:>22} {:>22} {:>22} {:>22} {:>22} {:>22} {:>22}\n",
            self.axis,
            "steps",
            "E_final",
            "max|res_case1|",
            "max|res_general|",
            "int|res_case1|",
            "int|res_general|",
            "diff_prev",
            "gap_plain"
        );
        for r in &self.rows {
            let gap = r.gap_to_plain.map(|g| format!("{g:.15e}")).unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "{:>12} {:>7} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e} {:>22}",
                r.value,
                r.steps,
                r.final_energy,
                r.max_residual_case1,
                r.max_residual_general,
                r.l1_residual_case1,
                r.l1_residual_general,
                r.diff_to_previous,
                gap
            ));
            if let Some(b) = &r.blowup {
                s.push_str(&format!("  blow-up at step {}: {}", b.step, b.reason));
            }
            s.push('\n');
        }
        let orders = [
            ("max|res_case1|", self.residual_case1_order),
            ("max|res_general|", self.residual_general_order),
            ("int|res_case1|", self.l1_residual_case1_order),
            ("int|res_general|", self.l1_residual_general_order),
        ];
        for (name, p) in orders {
            if let Some(p) = p {
                s.push_str(&format!("fitted order of {name}: {p:.4}\n"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{CoefficientConfig, DiagnosticsConfig, GridConfig, InitialCondition};
    use crate::solver::{Scheme, TimeStepperConfig};

    fn base() -> RunConfig {
        RunConfig {
            seed: 2,
            grid: GridConfig { dim: 2, n: 16 },
            coefficients: CoefficientConfig::alpha(1.0, 1.0, 0.3),
            stepper: TimeStepperConfig::new(2e-3, 0.02, Scheme::SemiImplicitEuler),
            regularization: None,
            initial_condition: InitialCondition::PerturbedDirector { amplitude: 0.1, modes: 2, velocity_amplitude: 0.5 },
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    #[test]
    fn fitted_order_recovers_power_laws() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((fitted_order(&h, &e).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(fitted_order(&[0.1], &[1.0]), None);
        assert_eq!(fitted_order(&[0.1, 0.2], &[0.0, 1.0]), None);
    }

    #[test]
    fn empty_values_are_rejected() {
        let e = sweep(&base(), Path::new("."), SweepAxis::Dt, &[], &SweepOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Parameter(_)));
    }

    #[test]
    fn bad_member_is_annotated() {
        let e = sweep(&base(), Path::new("."), SweepAxis::M, &[4.0, 2.5], &SweepOptions::default()).unwrap_err();
        assert!(e.to_string().starts_with("M=2.5"), "{e}");
        assert!(matches!(e.root(), Error::Parameter(_)));
    }

    #[test]
    fn dt_sweep_fills_table() {
        let rep = sweep(&base(), Path::new("."), SweepAxis::Dt, &[2e-3, 1e-3], &SweepOptions::default()).unwrap();
        assert_eq!(rep.rows[0].steps, 10);
        assert_eq!(rep.rows[1].steps, 20);
        assert!(rep.rows[0].diff_to_previous.is_nan());
        assert!(rep.rows[1].diff_to_previous > 0.0);
        assert!(rep.residual_case1_order.is_some());
        assert!(rep.l1_residual_case1_order.is_some());
        assert_eq!(rep.table().lines().count(), 7);
    }

    #[test]
    fn m_sweep_reports_gap_to_plain() {
        let mut cfg = base();
        cfg.grid.n = 32;
        let rep = sweep(&cfg, Path::new("."), SweepAxis::M, &[4.0, 16.0], &SweepOptions::default()).unwrap();
        let g: Vec<f64> = rep.rows.iter().map(|r| r.gap_to_plain.unwrap()).collect();
        assert!(g[0] > g[1] && g[1] > 0.0, "{g:?}");
    }

    #[test]
    fn n_sweep_compares_on_the_coarse_grid() {
        let rep = sweep(&base(), Path::new("."), SweepAxis::N, &[16.0, 32.0], &SweepOptions::default()).unwrap();
        assert!(rep.rows[1].diff_to_previous.is_finite());
    }
}
