//! Command-line front end: `synth`, `audit`, `proxy`, `decompose` and
//! `mitigate`.
//!
//! Configuration comes from an optional JSON file (`--config`) with flags
//! applied on top. Exit codes: 0 success, 1 operational or usage error,
//! 2 a disparity above `--fail-threshold`. Errors are written to stderr as
//! `{"error": {"kind", "message", "exit_code"}}`.

pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dataset::SynthConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use commands::{schema_path_for, write_file, LoadedData};
use config::{AuditConfig, BiasKind, DecomposeConfig, MitigateConfig, ProxyConfig, Strategy};
use report::{json_without_timestamps, sha256_hex};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BREACH: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fairaudit",
    version,
    about = "Intersectional multi-label fairness audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its schema.
    Synth(SynthArgs),
    /// Train, measure group metrics, disparities and the fairness tensor.
    Audit(AuditArgs),
    /// Test whether the features reveal protected attributes.
    Proxy(ProxyArgs),
    /// Regress a per-row bias on features, predictions and demographics.
    Decompose(DecomposeArgs),
    /// Apply a mitigation and compare before with after.
    Mitigate(MitigateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator configuration (JSON); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV to write; the schema goes next to it as `<stem>.schema.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column roles (JSON); `<data stem>.schema.json` when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving the JSON and CSV outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Protected attributes to use, comma separated.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
    /// Format of the standard output.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Metrics to tabulate, comma separated.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<MetricId>,
    /// Exit with code 2 when a disparity exceeds this value.
    #[arg(long)]
    fail_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct ProxyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    permutations: Option<usize>,
    /// Levels tested one-vs-rest, comma separated.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<String>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Label whose bias is decomposed.
    #[arg(long)]
    label: Option<String>,
    /// signed-error, error or residual.
    #[arg(long)]
    bias: Option<BiasKind>,
}

#[derive(Debug, Args)]
struct MitigateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Labels to mitigate, comma separated.
    #[arg(long, value_delimiter = ',')]
    label: Vec<String>,
    /// Constraint slack of the exponentiated-gradient reduction.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Tolerance of the threshold search.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<MetricId>,
    #[arg(long)]
    fail_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Thresholds,
    Egr,
}

/// Runs one command line (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            emit_error("usage", &e.to_string());
            return EXIT_ERROR;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            EXIT_ERROR
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    let body = serde_json::json!({
        "error": { "kind": kind, "message": message.trim_end(), "exit_code": EXIT_ERROR }
    });
    eprintln!("{body}");
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn load(args: &DataArgs) -> Result<LoadedData> {
    let schema = args
        .schema
        .clone()
        .unwrap_or_else(|| schema_path_for(&args.data));
    commands::load_data(&args.data, &schema)
}

fn print_out(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let written = out.write_all(text.as_bytes()).and_then(|_| {
        if text.ends_with('\n') {
            Ok(())
        } else {
            out.write_all(b"\n")
        }
    });
    match written {
        // a closed pipe (`| head`) is the reader's choice, not a failure
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

/// Writes `name.json` without timestamps plus `timestamps.json`, so that
/// re-running a command rewrites identical bytes everywhere else.
fn write_json_bundle<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_file(
        &dir.join(format!("{name}.json")),
        json_without_timestamps(value)?.as_bytes(),
    )?;
    let v = serde_json::to_value(value)?;
    if let Some(ts) = v.get("timestamps") {
        write_file(
            &dir.join("timestamps.json"),
            serde_json::to_string_pretty(ts)?.as_bytes(),
        )?;
    }
    Ok(())
}

fn apply_audit_flags(cfg: &mut AuditConfig, d: &DataArgs, metrics: &[MetricId], fail: Option<f64>) {
    if let Some(s) = d.seed {
        cfg.seed = s;
    }
    if !d.attrs.is_empty() {
        cfg.attrs = d.attrs.clone();
    }
    if !metrics.is_empty() {
        cfg.metrics = metrics.to_vec();
    }
    if fail.is_some() {
        cfg.fail_threshold = fail;
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Synth(a) => {
            let mut cfg: SynthConfig = read_config(a.config.as_deref())?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let (ds, schema) = commands::synth(&cfg, &a.out)?;
            let bytes = std::fs::read(&a.out).map_err(|e| Error::io(&a.out, e))?;
            let summary = serde_json::json!({
                "data": a.out,
                "schema": schema,
                "n_rows": ds.n_rows(),
                "seed": cfg.seed,
                "dataset_hash": sha256_hex(&bytes),
            });
            print_out(&serde_json::to_string_pretty(&summary)?)?;
            Ok(EXIT_OK)
        }
        Command::Audit(a) => {
            let mut cfg: AuditConfig = read_config(a.data.config.as_deref())?;
            apply_audit_flags(&mut cfg, &a.data, &a.metrics, a.fail_threshold);
            let data = load(&a.data)?;
            let report = commands::audit(&data.ds, Some(data.hash), &cfg)?;
            if let Some(dir) = &a.data.out {
                write_json_bundle(dir, "report", &report)?;
                write_file(&dir.join("cells.csv"), report.cells_csv()?.as_bytes())?;
                write_file(
                    &dir.join("disparities.csv"),
                    report.disparities_csv()?.as_bytes(),
                )?;
                if let Some(t) = &report.tensor {
                    write_file(&dir.join("tensor.csv"), t.tensor.to_csv()?.as_bytes())?;
                }
                let model = commands::audit_model(&data.ds, &cfg)?;
                write_file(&dir.join("model.json"), model.to_json()?.as_bytes())?;
            }
            print_out(&match a.data.format {
                Format::Json => report.to_json()?,
                Format::Csv => report.cells_csv()?,
            })?;
            Ok(if report.exceeds_threshold() {
                EXIT_BREACH
            } else {
                EXIT_OK
            })
        }
        Command::Proxy(a) => {
            let mut cfg: ProxyConfig = read_config(a.data.config.as_deref())?;
            if let Some(s) = a.data.seed {
                cfg.test.seed = s;
            }
            if let Some(b) = a.permutations {
                cfg.test.n_permutations = b;
            }
            if !a.levels.is_empty() {
                cfg.levels = a.levels.clone();
            }
            let data = load(&a.data)?;
            let report = commands::proxy(&data.ds, Some(data.hash), &a.data.attrs, &cfg)?;
            if let Some(dir) = &a.data.out {
                write_json_bundle(dir, "proxy", &report)?;
                write_file(&dir.join("proxy.csv"), report.to_csv()?.as_bytes())?;
            }
            print_out(&match a.data.format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Csv => report.to_csv()?,
            })?;
            Ok(EXIT_OK)
        }
        Command::Decompose(a) => {
            let mut cfg: DecomposeConfig = read_config(a.data.config.as_deref())?;
            if let Some(s) = a.data.seed {
                cfg.seed = s;
            }
            if !a.data.attrs.is_empty() {
                cfg.attrs = a.data.attrs.clone();
            }
            if a.label.is_some() {
                cfg.label = a.label.clone();
            }
            if let Some(b) = a.bias {
                cfg.bias = b;
            }
            let data = load(&a.data)?;
            let report = commands::decompose(&data.ds, Some(data.hash), &cfg)?;
            if let Some(dir) = &a.data.out {
                write_json_bundle(dir, "decomposition", &report)?;
                write_file(&dir.join("coefficients.csv"), report.to_csv()?.as_bytes())?;
            }
            print_out(&match a.data.format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Csv => report.to_csv()?,
            })?;
            Ok(EXIT_OK)
        }
        Command::Mitigate(a) => {
            let mut cfg: MitigateConfig = read_config(a.data.config.as_deref())?;
            apply_audit_flags(&mut cfg.audit, &a.data, &a.metrics, a.fail_threshold);
            if !a.label.is_empty() {
                cfg.labels = a.label.clone();
            }
            if let Some(e) = a.epsilon {
                cfg.egr.epsilon = e;
            }
            if let Some(t) = a.tol {
                cfg.tol = t;
            }
            let strategy = match a.strategy {
                StrategyArg::Thresholds => Strategy::Thresholds,
                StrategyArg::Egr => Strategy::Egr,
            };
            let data = load(&a.data)?;
            let report = commands::mitigate(&data.ds, Some(data.hash), strategy, &cfg)?;
            let tradeoff_csv = crate::mitigation::sweep_to_csv(&report.tradeoff)?;
            if let Some(dir) = &a.data.out {
                write_json_bundle(dir, "mitigation", &report)?;
                write_file(&dir.join("tradeoff.csv"), tradeoff_csv.as_bytes())?;
                write_file(
                    &dir.join("before_cells.csv"),
                    report.before.held_out.cells_csv()?.as_bytes(),
                )?;
                write_file(
                    &dir.join("after_cells.csv"),
                    report.after.held_out.cells_csv()?.as_bytes(),
                )?;
            }
            print_out(&match a.data.format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Csv => tradeoff_csv,
            })?;
            Ok(if report.exceeds_threshold() {
                EXIT_BREACH
            } else {
                EXIT_OK
            })
        }
    }
}
