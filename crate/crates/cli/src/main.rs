//! `nematic`: validate, run, sweep and inspect nematic flow simulations.
//!
//! Exit codes: 0 success, 1 inadmissible coefficients, 2 blow-up detected,
//! 3 configuration or I/O error, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nematic_core::coeffs::dissipation_form;
use nematic_core::io::{execute, require_admissible, sweep, RunConfig, RunOptions, SweepAxis, SweepOptions};
use nematic_core::spectral::snapshot;
use nematic_core::spectral::{divergence, l2_norm, sup_norm, Shape, SpectralGrid};
use nematic_core::Error;

const VERSION: &str = env!("NEMATIC_VERSION");

/// Environment variable that overrides the output directory of a config.
const OUTPUT_ENV: &str = "NEMATIC_OUTPUT_DIR";

const EXIT_REGIME: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "nematic", version = VERSION, about = "Pseudo-spectral Ericksen-Leslie nematic flow solver")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    structured: bool,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Output directory; overrides NEMATIC_OUTPUT_DIR and the config.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    /// Diagnostics cadence in steps; overrides the config.
    #[arg(long, value_name = "STEPS")]
    cadence: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration and classify its coefficients.
    Validate {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Run a simulation and write its time series, snapshots and manifest.
    Run(RunArgs),
    /// Run a family of simulations along one axis and print a convergence table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,

        /// Axis to vary: dt, M or n.
        #[arg(long)]
        axis: String,

        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Print metadata and norms of snapshot files.
    Inspect {
        #[arg(required = true, value_name = "SNAPSHOT")]
        files: Vec<PathBuf>,
    },
}

/// A failed command: exit code plus message.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Regime(_) => EXIT_REGIME,
            Error::BlowupDetected { .. } => EXIT_BLOWUP,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let structured = cli.structured;
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if structured {
                println!("{}", json!({ "error": f.message, "exit_code": f.code }));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: EXIT_CONFIG, message: e.to_string() })?;
    }
    match cli.command {
        Command::Validate { config } => validate(&config, cli.structured),
        Command::Run(args) => run(&args, cli.structured),
        Command::Sweep { run, axis, values } => run_sweep(&run, &axis, &values, cli.structured),
        Command::Inspect { files } => inspect(&files, cli.structured),
    }
}

fn base_dir(config: &Path) -> &Path {
    config.parent().unwrap_or(Path::new("."))
}

fn output_dir(args: &RunArgs) -> Option<PathBuf> {
    args.output_dir.clone().or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
}

fn validate(path: &Path, structured: bool) -> Result<u8, Failure> {
    let cfg = RunConfig::load(path)?;
    cfg.check()?;
    let report = cfg.regime()?;
    let coeffs = cfg.coefficients()?;
    let verdict = require_admissible(&report);
    if structured {
        let out = json!({
            "config": path,
            "coefficients": coeffs,
            "regime": report.regime_label(),
            "report": report,
            "dissipation_form": dissipation_form(&coeffs),
            "admissible": verdict.is_ok(),
        });
        println!("{out:#}");
    } else {
        println!("config:  {}", path.display());
        println!(
            "coeffs:  lambda1 {} lambda2 {} mu {:?} epsilon {}",
            coeffs.lambda1,
            coeffs.lambda2,
            [coeffs.mu1, coeffs.mu2, coeffs.mu3, coeffs.mu4, coeffs.mu5, coeffs.mu6],
            coeffs.epsilon
        );
        for c in &report.base {
            println!("  {:<18} {}", c.name, if c.satisfied { "ok".to_string() } else { format!("violated by {:e}", c.residual) });
        }
        println!("  {:<18} {}", "Parodi", if report.parodi_holds { "holds" } else { "fails" });
        println!("  Case 1 margin      {:e}", report.case1_margin);
        println!("  Case 2 margin      {:e}", report.case2_margin);
        println!("regime:  {}", report.regime_label());
    }
    match verdict {
        Ok(()) => Ok(0),
        Err(e) if structured => Ok(Failure::from(e).code),
        Err(e) => Err(e.into()),
    }
}

fn run(args: &RunArgs, structured: bool) -> Result<u8, Failure> {
    let cfg = RunConfig::load(&args.config)?;
    let opts = RunOptions { output_dir: output_dir(args), cadence: args.cadence, version: VERSION.into(), dry: false };
    let out = execute(&cfg, base_dir(&args.config), &opts)?;
    let dir = opts.output_dir.unwrap_or_else(|| cfg.diagnostics.output_dir.clone());
    let m = &out.manifest;
    if structured {
        println!("{}", json!({ "output_dir": dir, "manifest": m }));
    } else {
        println!("regime {}, {} steps to t = {}, {:.2} s wall", m.regime, m.steps, m.final_time, m.wall_time_s);
        if let Some(last) = out.rows.last() {
            println!("E_total {:.10e} -> {:.10e}", out.rows[0].report.E_total, last.report.E_total);
        }
        if m.energy_increase_steps > 0 {
            println!("warning: energy increased beyond the slack at {} audited steps", m.energy_increase_steps);
        }
        if m.negative_case1_channel_steps > 0 {
            println!("warning: negative Case 1 channels at {} audited steps", m.negative_case1_channel_steps);
        }
        println!("output in {}", dir.display());
    }
    match &m.blowup {
        Some(b) => {
            if !structured {
                eprintln!("blow-up detected at step {} (t = {}): {}", b.step, b.time, b.reason);
            }
            Ok(EXIT_BLOWUP)
        }
        None => Ok(0),
    }
}

fn run_sweep(args: &RunArgs, axis: &str, values: &[f64], structured: bool) -> Result<u8, Failure> {
    let axis: SweepAxis = axis.parse().map_err(|e: Error| usage(e.to_string()))?;
    if values.is_empty() {
        return Err(usage("sweep needs at least one value in --values"));
    }
    let cfg = RunConfig::load(&args.config)?;
    let opts = SweepOptions { output_root: output_dir(args), cadence: args.cadence, version: VERSION.into() };
    let rep = sweep(&cfg, base_dir(&args.config), axis, values, &opts)?;
    if structured {
        println!("{}", json!(rep));
    } else {
        print!("{}", rep.table());
    }
    Ok(if rep.rows.iter().any(|r| r.blowup.is_some()) { EXIT_BLOWUP } else { 0 })
}

fn inspect(files: &[PathBuf], structured: bool) -> Result<u8, Failure> {
    let mut reports = Vec::new();
    for path in files {
        let header = snapshot::load_header(path)?;
        let grid = SpectralGrid::shared(header.dim as usize, header.n as usize)?;
        let (field, time) = snapshot::load(path, &grid)?;
        let mean = field.mean();
        let div = if field.shape() == Shape::Vector(grid.dim()) { Some(sup_norm(&divergence(&field)?)?) } else { None };
        let r = json!({
            "file": path,
            "version": header.version,
            "dim": header.dim,
            "n": header.n,
            "components": header.ncomp,
            "time": time,
            "l2_norm": l2_norm(&field),
            "sup_norm": sup_norm(&field)?,
            "mean": mean,
            "sup_divergence": div,
        });
        if !structured {
            println!("{}", path.display());
            println!("  dim {} n {} components {} time {}", header.dim, header.n, header.ncomp, time);
            println!("  L2 norm {:.10e}  sup norm {:.10e}", l2_norm(&field), sup_norm(&field)?);
            println!("  mean {:?}", mean);
            if let Some(d) = div {
                println!("  sup |div| {d:.3e}");
            }
        }
        reports.push(r);
    }
    if structured {
        println!("{}", json!(reports));
    }
    Ok(0)
}
