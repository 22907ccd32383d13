//! `cogatr` command line: argument parsing and command dispatch.
//!
//! ```text
//! cogatr <verb> --config <path> --out <dir> [--set section.key=value ...]
//! ```
//!
//! Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use cogatr_core::config::ExperimentConfig;
use cogatr_core::harness::{self, Harness, SweepRow};
use cogatr_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const THREADS_ENV: &str = "COGATR_THREADS";

pub const DATASET_FILE: &str = "dataset.ndjson";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BANK_DIR: &str = "banks";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    GenDataset,
    Train,
    Evaluate,
    SweepDtheta,
    SweepSnr,
    #[value(name = "baseline-2p")]
    Baseline2p,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliCommand {
    pub verb: Verb,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Parser)]
#[command(name = "cogatr", about = "Cognitive angular-diversity ATR experiments")]
struct Args {
    #[arg(value_enum)]
    verb: Verb,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override a config value, e.g. `policy.delta_theta_deg=3.6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    /// 0 for `--help`, otherwise [`EXIT_USAGE`].
    pub exit_code: i32,
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> UsageError {
    UsageError {
        message: message.into(),
        exit_code: EXIT_USAGE,
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<CliCommand, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        exit_code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
    })?;
    let overrides = args
        .set
        .iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            let k = k.trim();
            if !ExperimentConfig::is_known_key(k) {
                return Err(usage(format!("unknown config key `{k}`")));
            }
            Ok((k.to_string(), v.trim().to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(CliCommand {
        verb: args.verb,
        config_path: args.config,
        out_dir: args.out,
        overrides,
    })
}

fn threads_from_env() -> Result<Option<usize>, UsageError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs the command and returns the process exit status. Progress goes to
/// stdout, diagnostics to stderr.
pub fn execute(cmd: &CliCommand) -> i32 {
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code;
        }
    };
    match run(cmd, threads) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn run(cmd: &CliCommand, threads: Option<usize>) -> cogatr_core::Result<()> {
    let config = ExperimentConfig::load(&cmd.config_path, &cmd.overrides)?;
    let out = cmd.out_dir.as_path();
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;

    match cmd.verb {
        Verb::GenDataset => {
            let path = out.join(DATASET_FILE);
            let count = harness::generate_dataset(&config, &path)?;
            let manifest = serde_json::json!({
                "dataset": DATASET_FILE,
                "format": harness::DATASET_FORMAT,
                "records": count,
                "master_seed": config.experiment.master_seed,
                "config": config.to_toml_string(),
            });
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            harness::write_atomically(&out.join(MANIFEST_FILE), text.as_bytes())?;
            println!("wrote {count} looks to {}", path.display());
        }
        Verb::Train => {
            let path = out.join(DATASET_FILE);
            let (band, records) = harness::read_dataset(&path)?;
            if band != config.band()? {
                return Err(Error::Config {
                    key: "band".into(),
                    message: format!("{} was generated with a different band", path.display()),
                });
            }
            let model = harness::train_banks(band, &records)?;
            let bank_dir = out.join(BANK_DIR);
            std::fs::create_dir_all(&bank_dir).map_err(|e| io_error(&bank_dir, e))?;
            let written = harness::save_banks(&bank_dir, &model)?;
            println!(
                "trained {} bank(s) over {} elevation(s) from {} looks into {}",
                written.len(),
                model.len(),
                records.len(),
                bank_dir.display()
            );
        }
        Verb::Evaluate => {
            let h = harness_for(config, out, threads)?;
            emit(out, "evaluate", &h.evaluate()?, None)?;
        }
        Verb::SweepDtheta => {
            let h = harness_for(config, out, threads)?;
            let rows = h.run_sweep_dtheta()?;
            emit(
                out,
                "sweep_dtheta",
                &rows,
                Some((2, "delta theta (deg)", "Pcc vs azimuth step")),
            )?;
        }
        Verb::SweepSnr => {
            let h = harness_for(config, out, threads)?;
            let rows = h.run_sweep_snr()?;
            emit(out, "sweep_snr", &rows, Some((3, "SNR (dB)", "Pcc vs SNR")))?;
        }
        Verb::Baseline2p => {
            let dtheta = config.experiment.baseline_delta_theta_deg;
            let h = harness_for(config, out, threads)?;
            emit(out, "baseline_2p", &[h.fixed_two_perspective_baseline(dtheta)?], None)?;
        }
    }
    Ok(())
}

/// Uses banks saved by `train` when present, otherwise trains in memory.
fn harness_for(config: ExperimentConfig, out: &Path, threads: Option<usize>) -> cogatr_core::Result<Harness> {
    let bank_dir = out.join(BANK_DIR);
    if bank_dir.is_dir() {
        let model = harness::load_banks(&bank_dir, &config.experiment.elevations_deg)?;
        Harness::with_model(config, model, threads)
    } else {
        Harness::new(config, threads)
    }
}

fn emit(out: &Path, stem: &str, rows: &[SweepRow], plot: Option<(usize, &str, &str)>) -> cogatr_core::Result<()> {
    let csv_name = format!("{stem}.csv");
    harness::write_atomically(&out.join(&csv_name), harness::rows_to_csv(rows).as_bytes())?;
    if let Some((column, x_label, title)) = plot {
        let script = harness::plot_script(&csv_name, column, x_label, title);
        harness::write_atomically(&out.join(format!("{stem}.gp")), script.as_bytes())?;
    }
    for r in rows {
        println!("{}", r.summary());
    }
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
