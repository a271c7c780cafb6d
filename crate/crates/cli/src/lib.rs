//! Command-line front end: configuration files, the five subcommands and
//! SVG output. The binary in `main.rs` is a thin wrapper over [`run`].

pub mod config;
pub mod oracles;
pub mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swipt_core::experiment::{noisy_received_metric, SweepError};
use swipt_core::io::{
    self, parse_constellation_csv, parse_records_csv, IoError, SweepManifest, SystemManifest,
};
use swipt_core::{
    classify_shape, estimate_ser, estimate_ser_at, rate_power_curve, run_sweep, train, EhError,
    TrainError,
};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::oracles::{run_oracles, OracleOptions};

/// Mixed into the run seed for the post-training SER estimate.
const SER_SEED_MASK: u64 = 0x5e4_5e4_5e4;

#[derive(Debug, Parser)]
#[command(
    name = "swipt",
    version,
    about = "Learned modulation for joint information and power transfer"
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    /// Sectioned key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one setting, e.g. `--set train.lambda=0.5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Constellation,
    RatePower,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check special functions and the rectenna model against references.
    CheckOracles {
        /// Quadrature points for the time-average check.
        #[arg(long, default_value_t = oracles::FULL_POINTS, value_parser = clap::value_parser!(u64).range(64..).map(|v| v as usize))]
        points: usize,
        /// Inject a relative error into the closed-form I0 reference.
        #[arg(long, default_value_t = 0.0)]
        perturb_i0: f64,
    },
    /// Train one system and write its manifest and constellation.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "swipt-train")]
        out: PathBuf,
        /// Test symbols for the SER estimate; defaults to `sweep.ser_samples`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
    },
    /// Run the lambda ladder with multi-seed restarts.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "swipt-sweep")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        parallel: usize,
    },
    /// Re-estimate SER and delivered power of a stored system.
    Eval {
        /// `manifest.json` or the directory holding it.
        manifest: PathBuf,
        /// Defaults to the training SNR.
        #[arg(long, allow_hyphen_values = true)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Seed of the evaluation noise.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte-Carlo draws for the noisy received-symbol metric.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        metric_samples: usize,
        /// Fail (exit 1) when the estimated SER exceeds this.
        #[arg(long)]
        ser_max: Option<f64>,
    },
    /// Render constellations or rate-power curves as SVG.
    Plot {
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Constellation CSVs, or sweep directories / `records.csv` files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read config: {0}")]
    ConfigFile(IoError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Eh(#[from] EhError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::ConfigFile(_) | CliError::Usage(_) => 2,
            CliError::Train(TrainError::Config(_)) => 2,
            CliError::Sweep(SweepError::Config(_) | SweepError::Train(TrainError::Config(_))) => 2,
            CliError::Io(_) | CliError::Train(_) | CliError::Sweep(_) | CliError::Eh(_) => 3,
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::parse(&io::read_to_string(path).map_err(CliError::ConfigFile)?)?,
        None => RunConfig::default(),
    };
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

/// Runs a parsed command, returning the text meant for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::CheckOracles { points, perturb_i0 } => cmd_check_oracles(*points, *perturb_i0),
        Command::Train {
            config,
            out,
            samples,
        } => cmd_train(&load_config(config)?, out, *samples),
        Command::Sweep {
            config,
            out,
            parallel,
        } => cmd_sweep(&load_config(config)?, out, *parallel),
        Command::Eval {
            manifest,
            snr_db,
            samples,
            seed,
            metric_samples,
            ser_max,
        } => cmd_eval(
            manifest,
            *snr_db,
            *samples,
            *seed,
            *metric_samples,
            *ser_max,
        ),
        Command::Plot {
            kind,
            inputs,
            out,
            title,
        } => cmd_plot(*kind, inputs, out.as_deref(), title.as_deref()),
    }
}

pub fn cmd_check_oracles(points: usize, perturb_i0: f64) -> Result<String, CliError> {
    let report = run_oracles(&OracleOptions { points, perturb_i0 }).map_err(CliError::Usage)?;
    let table = report.table();
    if report.all_passed() {
        Ok(table)
    } else {
        Err(CliError::Check(table))
    }
}

pub fn cmd_train(cfg: &RunConfig, out: &Path, samples: Option<u64>) -> Result<String, CliError> {
    let train_cfg = &cfg.sweep.base;
    let system = train(train_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed ^ SER_SEED_MASK);
    let ser = estimate_ser(&system, samples.unwrap_or(cfg.sweep.ser_samples), &mut rng)?;
    let p_del = system.p_del()?;
    let manifest = SystemManifest::new(&system, p_del, Some(ser));
    io::write_system(out, &manifest)?;
    Ok(format!(
        "final_loss {:.6}\nser {:.6e} +/- {:.2e} ({} symbols)\np_del {:.6}\nwrote {}\n",
        system.final_loss,
        ser.ser,
        ser.halfwidth,
        ser.samples,
        p_del,
        out.display()
    ))
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, parallel: usize) -> Result<String, CliError> {
    let outcome = run_sweep(&cfg.sweep, parallel)?;
    io::write_sweep(out, &cfg.sweep, &outcome)?;
    let mut text = format!(
        "M={} seeds {}..{} ({} runs, {} failed)\n",
        cfg.sweep.base.m_messages,
        cfg.sweep.base.seed,
        cfg.sweep.base.seed + cfg.sweep.num_seeds as u64 - 1,
        outcome.records.len(),
        outcome.failures.len()
    );
    let _ = writeln!(
        text,
        "{:>8} {:>6} {:>12} {:>10} {:>10} {:>12} {:>9}",
        "lambda", "seed", "ser", "ser_ci", "p_del", "amp_ratio", "near_zero"
    );
    for r in outcome.selected_records() {
        let shape = classify_shape(&r.constellation)?;
        let _ = writeln!(
            text,
            "{:>8} {:>6} {:>12.4e} {:>10.1e} {:>10.4} {:>12.3} {:>9}",
            r.lambda,
            r.seed,
            r.ser,
            r.ser_ci,
            r.p_del,
            shape.amplitude_ratio,
            shape.near_zero_count
        );
    }
    if let Some(l) = outcome.stopped_at {
        let _ = writeln!(
            text,
            "stopped at lambda={l}: no run met ser <= {}",
            cfg.sweep.ser_max
        );
    }
    let _ = writeln!(text, "wrote {}", out.display());
    Ok(text)
}

pub fn cmd_eval(
    manifest_path: &Path,
    snr_db: Option<f64>,
    samples: u64,
    seed: u64,
    metric_samples: usize,
    ser_max: Option<f64>,
) -> Result<String, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let path = if manifest_path.is_dir() {
        manifest_path.join("manifest.json")
    } else {
        manifest_path.to_path_buf()
    };
    let manifest = SystemManifest::from_json(&io::read_to_string(&path)?)?;
    let stored_p_del = manifest.p_del;
    let stored_ser = manifest.ser;
    let system = manifest.into_system()?;
    let snr = snr_db.unwrap_or(system.config.snr_db);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ser = estimate_ser_at(&system, snr, samples, &mut rng)?;
    let p_del = system.p_del()?;
    let noisy = noisy_received_metric(
        &system.constellation,
        snr,
        &system.config.rectenna,
        metric_samples,
        &mut rng,
    )?;

    let mut text = format!(
        "M={} lambda={} seed={}\n",
        system.config.m_messages, system.config.lambda, system.config.seed
    );
    let _ = writeln!(text, "snr_db {snr}");
    let _ = writeln!(
        text,
        "ser {:.6e} +/- {:.2e} ({} symbols)",
        ser.ser, ser.halfwidth, ser.samples
    );
    if let Some(s) = stored_ser {
        let _ = writeln!(text, "stored ser {:.6e} +/- {:.2e}", s.ser, s.halfwidth);
    }
    let _ = writeln!(text, "p_del {p_del:.6}");
    let _ = writeln!(
        text,
        "noisy received metric {noisy:.6} (diagnostic, {metric_samples} draws)"
    );

    let mut failures = Vec::new();
    if (p_del - stored_p_del).abs() > 1e-9 * stored_p_del.abs() {
        failures.push(format!(
            "p_del {p_del} disagrees with stored {stored_p_del}"
        ));
    }
    if let Some(gate) = ser_max {
        if ser.ser > gate {
            failures.push(format!("ser {:.6e} exceeds {gate}", ser.ser));
        }
    }
    if failures.is_empty() {
        Ok(text)
    } else {
        Err(CliError::Check(format!(
            "{text}FAIL: {}\n",
            failures.join("; ")
        )))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_plot(
    kind: PlotKind,
    inputs: &[PathBuf],
    out: Option<&Path>,
    title: Option<&str>,
) -> Result<String, CliError> {
    let svg = match kind {
        PlotKind::Constellation => {
            let mut series = Vec::new();
            for input in inputs {
                let path = if input.is_dir() {
                    input.join("constellation.csv")
                } else {
                    input.clone()
                };
                series.push((
                    stem(&path),
                    parse_constellation_csv(&io::read_to_string(&path)?)?,
                ));
            }
            plot::constellation_svg(title.unwrap_or("constellation"), &series)
        }
        PlotKind::RatePower => {
            let mut series = Vec::new();
            for input in inputs {
                let (dir, records) = if input.is_dir() {
                    (input.clone(), input.join("records.csv"))
                } else {
                    (
                        input.parent().map(Path::to_path_buf).unwrap_or_default(),
                        input.clone(),
                    )
                };
                let rows = parse_records_csv(&io::read_to_string(&records)?)?;
                let manifest = dir.join("sweep_manifest.json");
                let label = if manifest.exists() {
                    let m: SweepManifest = serde_json::from_str(&io::read_to_string(&manifest)?)
                        .map_err(IoError::from)?;
                    format!("M={}", m.config.base.m_messages)
                } else {
                    records.display().to_string()
                };
                series.push((label, rate_power_curve(&rows)));
            }
            plot::rate_power_svg(title.unwrap_or("delivered power vs 1 - SER"), &series)
        }
    };
    match out {
        Some(path) => {
            std::fs::write(path, &svg).map_err(|source| IoError::File {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(svg),
    }
}
