//! `sel`: command-line front end to sel-core.
//!
//! Every subcommand writes its tables under `--output-dir` together with a
//! `manifest.json` listing each artifact and its SHA-256. Exit codes: 0 ok,
//! 1 usage, 2 validation, 3 numerical failure.

pub mod acceptance;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

pub use output::{Format, Output, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sel_core::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) | CliError::Io(_) | CliError::Failed(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sel", version, about = "Level-spacing statistics and information functionals")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "SEL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "sel-out")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// JSON file whose `seed`, `output_dir`, `format` and `params` override
    /// the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients and moments of every named spacing law.
    Catalog(commands::CatalogArgs),
    /// Closed-form versus quadrature entropies.
    EntropyTable(commands::EntropyTableArgs),
    /// Discrete entropy of a spacing law on refined grids.
    CoarseGrain(commands::CoarseGrainArgs),
    /// Maximum-entropy density from moment constraints.
    Maxent(commands::MaxentArgs),
    /// Minimum relative entropy under a ⟨T⟩ constraint.
    KlFit(commands::KlFitArgs),
    /// Random-matrix spacing histogram against its surmise.
    Spacing(commands::SpacingArgs),
    /// Dyson eigenvalue diffusion.
    Dyson(commands::DysonArgs),
    /// Bessel–Ornstein–Uhlenbeck paths against the stationary law.
    Bou(commands::BouArgs),
    /// Fokker–Planck relaxation with thermodynamic reports.
    FpThermo(commands::FpThermoArgs),
    /// Entropic uncertainty scan over Calogero levels.
    Calogero(commands::CalogeroArgs),
    /// Run the acceptance suite.
    Verify(commands::VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Catalog(_) => "catalog",
            Command::EntropyTable(_) => "entropy-table",
            Command::CoarseGrain(_) => "coarse-grain",
            Command::Maxent(_) => "maxent",
            Command::KlFit(_) => "kl-fit",
            Command::Spacing(_) => "spacing",
            Command::Dyson(_) => "dyson",
            Command::Bou(_) => "bou",
            Command::FpThermo(_) => "fp-thermo",
            Command::Calogero(_) => "calogero",
            Command::Verify(_) => "verify",
        }
    }
}

/// Replaces fields of `args` by those present in `params`.
fn overlay<T>(args: &T, params: Option<&Value>) -> Result<T, CliError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let mut v = serde_json::to_value(args).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(p) = params {
        let p = p.as_object().ok_or_else(|| CliError::Config("`params` must be an object".into()))?;
        let obj = v.as_object_mut().expect("argument structs serialize to objects");
        for (k, val) in p {
            if !obj.contains_key(k) {
                return Err(CliError::Config(format!("unknown parameter `{k}`")));
            }
            obj.insert(k.clone(), val.clone());
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn apply_config(cli: &mut Cli) -> Result<Option<Value>, CliError> {
    let Some(path) = &cli.config else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let obj = cfg.as_object().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    for k in obj.keys() {
        if !matches!(k.as_str(), "seed" | "output_dir" | "format" | "params" | "command") {
            return Err(CliError::Config(format!("unknown config key `{k}`")));
        }
    }
    if let Some(c) = obj.get("command").and_then(Value::as_str) {
        if c != cli.command.name() {
            return Err(CliError::Config(format!("config is for `{c}`, not `{}`", cli.command.name())));
        }
    }
    if let Some(s) = obj.get("seed") {
        cli.seed = s.as_u64().ok_or_else(|| CliError::Config("seed must be a nonnegative integer".into()))?;
    }
    if let Some(d) = obj.get("output_dir") {
        cli.output_dir = PathBuf::from(d.as_str().ok_or_else(|| CliError::Config("output_dir must be a string".into()))?);
    }
    if let Some(f) = obj.get("format") {
        cli.format = serde_json::from_value(f.clone()).map_err(|e| CliError::Config(format!("format: {e}")))?;
    }
    Ok(obj.get("params").cloned())
}

/// Runs a parsed command; returns the manifest.
pub fn execute(mut cli: Cli) -> Result<Value, CliError> {
    let params = apply_config(&mut cli)?;
    let p = params.as_ref();
    let mut out = Output::new(&cli.output_dir, cli.format)?;
    let seed = cli.seed;
    let name = cli.command.name();
    let (args, summary) = match &cli.command {
        Command::Catalog(a) => run_with(a, p, |a| commands::catalog(a, &mut out))?,
        Command::EntropyTable(a) => run_with(a, p, |a| commands::entropy_table(a, &mut out))?,
        Command::CoarseGrain(a) => run_with(a, p, |a| commands::coarse_grain(a, &mut out))?,
        Command::Maxent(a) => run_with(a, p, |a| commands::maxent(a, &mut out))?,
        Command::KlFit(a) => run_with(a, p, |a| commands::kl_fit(a, &mut out))?,
        Command::Spacing(a) => run_with(a, p, |a| commands::spacing(a, seed, &mut out))?,
        Command::Dyson(a) => run_with(a, p, |a| commands::dyson(a, seed, &mut out))?,
        Command::Bou(a) => run_with(a, p, |a| commands::bou(a, seed, &mut out))?,
        Command::FpThermo(a) => run_with(a, p, |a| commands::fp_thermo(a, &mut out))?,
        Command::Calogero(a) => run_with(a, p, |a| commands::calogero(a, &mut out))?,
        Command::Verify(a) => run_with(a, p, |a| commands::verify(a, seed, &mut out))?,
    };
    let failed = summary.get("failed").and_then(Value::as_array).filter(|f| !f.is_empty()).cloned();
    let manifest = out.finish(name, seed, &args, &summary)?;
    if let Some(f) = failed {
        return Err(CliError::Failed(format!("acceptance criteria failed: {}", Value::Array(f))));
    }
    Ok(manifest)
}

fn run_with<T, F>(args: &T, params: Option<&Value>, f: F) -> Result<(Value, Value), CliError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
    F: FnOnce(&T) -> Result<Value, CliError>,
{
    let merged = overlay(args, params)?;
    let summary = f(&merged)?;
    Ok((serde_json::to_value(&merged).expect("arguments serialize"), summary))
}

/// Parses `argv`, runs, prints errors, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
