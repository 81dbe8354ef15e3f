//! Run orchestration: validation, stepping, and the files a run leaves behind.
//!
//! Output layout under the output directory:
//! `timeseries.csv`, `manifest.json`, `snapshots/{u,d}_<step>.snap` (when
//! requested), `checkpoint/` with the last state, `pressure.snap` (when
//! requested) and `monitor.json` after a blow-up.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::checkpoint::write_checkpoint;
use super::config::RunConfig;
use super::presets::initial_state;
use crate::coeffs::RegimeReport;
use crate::diagnostics::{BlowupMonitorState, DiagnosticRow, Recorder, RegularizationTerm};
use crate::error::{Error, Result};
use crate::physics::{ConstitutiveBundle, FieldState};
use crate::solver::{reconstruct_pressure, run, BlowupInfo, Observer, Trajectory};
use crate::spectral::snapshot;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `diagnostics.output_dir`.
    pub output_dir: Option<PathBuf>,
    /// Overrides `diagnostics.cadence`.
    pub cadence: Option<usize>,
    /// Version string recorded in the manifest.
    pub version: String,
    /// Keep everything in memory and write nothing.
    pub dry: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub config: String,
    pub seed: u64,
    pub regime: String,
    pub steps: usize,
    pub final_time: f64,
    pub wall_time_s: f64,
    pub blowup: Option<BlowupInfo>,
    pub energy_increase_steps: usize,
    pub negative_case1_channel_steps: usize,
    pub files: Vec<String>,
}

pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub rows: Vec<DiagnosticRow>,
    pub monitor: BlowupMonitorState,
    pub manifest: Manifest,
    pub energy_increases: Vec<f64>,
    pub negative_channel_steps: Vec<f64>,
}

struct RunObserver {
    recorder: Recorder,
    snapshot_every: Option<usize>,
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Observer for RunObserver {
    fn start(&mut self, initial: &FieldState) -> Result<()> {
        self.recorder.start(initial)
    }

    fn observe(&mut self, step: usize, prev: &FieldState, next: &FieldState, bundle: &ConstitutiveBundle, dt: f64) -> Result<()> {
        self.recorder.observe(step, prev, next, bundle, dt)?;
        if let (Some(every), Some(dir)) = (self.snapshot_every, &self.dir) {
            if step.is_multiple_of(every) {
                let sub = dir.join("snapshots");
                std::fs::create_dir_all(&sub)?;
                for (name, f) in [("u", &next.u), ("d", &next.d)] {
                    let file = format!("snapshots/{name}_{step:06}.snap");
                    snapshot::save(&dir.join(&file), f, next.time)?;
                    self.files.push(file);
                }
            }
        }
        Ok(())
    }
}

/// Fails with a regime error listing the violations unless the
/// coefficients are in Case 1 or Case 2.
pub fn require_admissible(report: &RegimeReport) -> Result<()> {
    if report.is_admissible() {
        return Ok(());
    }
    let mut parts: Vec<String> = report.violations.iter().map(|v| format!("{} (residual {:e})", v.name, v.residual)).collect();
    if parts.is_empty() {
        parts.push("neither the Case 1 nor the Case 2 inequality holds".into());
    }
    Err(Error::Regime(parts.join(", ")))
}

/// Validates `cfg`, runs it and writes its artifacts.
pub fn execute(cfg: &RunConfig, base: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.check_in(base)?;
    let regime = cfg.regime()?;
    require_admissible(&regime)?;
    let initial = initial_state(cfg, base)?;
    let cadence = opts.cadence.unwrap_or(cfg.diagnostics.cadence);
    if cadence == 0 {
        return Err(Error::Config("cadence must be positive".into()));
    }
    let dir = if opts.dry { None } else { Some(opts.output_dir.clone().unwrap_or_else(|| cfg.diagnostics.output_dir.clone())) };
    let reg = cfg.active_regularization();
    let monitor = BlowupMonitorState::new(&initial.coeffs).with_refinement(cfg.diagnostics.sup_refinement)?;
    let mut recorder = Recorder::new(monitor, RegularizationTerm::of(reg))
        .with_monotonicity_slack(cfg.diagnostics.monotonicity_slack)
        .checking_case1(regime.case1);
    let mut files = Vec::new();
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
        recorder = recorder.with_sink(Box::new(BufWriter::new(File::create(d.join("timeseries.csv"))?)));
        files.push("timeseries.csv".to_string());
    }
    let mut obs = RunObserver { recorder, snapshot_every: cfg.diagnostics.snapshot_every, dir: dir.clone(), files };

    let clock = Instant::now();
    let trajectory = run(&initial, &cfg.stepper, reg, cadence, &mut obs)?;
    let wall = clock.elapsed().as_secs_f64();
    obs.recorder.finish()?;
    let config_hash = cfg.hash()?;

    let mut files = std::mem::take(&mut obs.files);
    if let Some(d) = &dir {
        write_checkpoint(&d.join("checkpoint"), &trajectory.final_state, trajectory.steps, &config_hash)?;
        files.extend(["checkpoint/u.snap", "checkpoint/d.snap", "checkpoint/meta.json"].map(String::from));
        if cfg.stepper.reconstruct_pressure {
            let p = reconstruct_pressure(&trajectory.final_state)?;
            snapshot::save(&d.join("pressure.snap"), &p, trajectory.final_state.time)?;
            files.push("pressure.snap".into());
        }
        if trajectory.blowup.is_some() {
            let text = serde_json::to_string_pretty(obs.recorder.monitor()).map_err(|e| Error::Config(e.to_string()))?;
            std::fs::write(d.join("monitor.json"), text)?;
            files.push("monitor.json".into());
        }
        files.push("manifest.json".into());
    }
    let manifest = Manifest {
        version: opts.version.clone(),
        config_hash,
        config: cfg.to_toml_string()?,
        seed: cfg.seed,
        regime: regime.regime_label().to_string(),
        steps: trajectory.steps,
        final_time: trajectory.final_state.time,
        wall_time_s: wall,
        blowup: trajectory.blowup.clone(),
        energy_increase_steps: obs.recorder.energy_increases.len(),
        negative_case1_channel_steps: obs.recorder.negative_channel_steps.len(),
        files,
    };
    if let Some(d) = &dir {
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(d.join("manifest.json"), text)?;
    }
    Ok(RunOutcome {
        trajectory,
        rows: obs.recorder.rows().to_vec(),
        monitor: obs.recorder.monitor().clone(),
        energy_increases: std::mem::take(&mut obs.recorder.energy_increases),
        negative_channel_steps: std::mem::take(&mut obs.recorder.negative_channel_steps),
        manifest,
    })
}
