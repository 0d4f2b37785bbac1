use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, SweepSpec};
use crate::config::{parse_config_str, RunConfig};
use crate::error::CliError;
use crate::manifest::{sha256_hex, timestamp, write_manifest, RunManifest, MANIFEST_FILE};

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "TRAMPOLINE_OUT";
/// Output directory used when neither flag, config nor environment name one.
pub const DEFAULT_OUT: &str = "trampoline-out";

#[derive(Debug, Parser)]
#[command(
    name = "trampoline",
    version,
    about = "Inelastic evanescent-wave mirror: fields, bounces, phase-space compression and scattering budgets",
    after_help = "The output directory is taken from --out, then [output].dir in the config, \
                  then the TRAMPOLINE_OUT environment variable, then ./trampoline-out."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed of the random streams (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Override a config value, e.g. --set mirror.delta1_gamma=120 (repeatable).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Polarization map of the evanescent field (field.csv, field_summary.json).
    Field,
    /// One traced bounce (bounce.csv, bounce_summary.json).
    Bounce,
    /// Monte Carlo ensemble (histogram.csv, report.json).
    Mc,
    /// Scattering budget (budget.json, budget_scan.csv).
    Budget,
    /// Scan one numeric config key (sweep.csv).
    Sweep(SweepArgs),
    /// Maximize the peak pump-event density (optimize.json).
    Optimize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Config key to vary, e.g. mirror.delta1_gamma.
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub start: f64,
    #[arg(long)]
    pub end: f64,
    /// Number of points, including both ends.
    #[arg(long)]
    pub steps: usize,
    /// Space the points geometrically.
    #[arg(long)]
    pub log: bool,
    /// Comma-separated outputs, e.g. pumped_fraction,peak_final.
    #[arg(long, value_delimiter = ',', default_value = "pumped_fraction,peak_final,compression_factor,smoothed_peak")]
    pub outputs: Vec<String>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::Bounce => "bounce",
            Command::Mc => "mc",
            Command::Budget => "budget",
            Command::Sweep(_) => "sweep",
            Command::Optimize => "optimize",
        }
    }
}

/// Loads the config text and applies overrides, with `--seed` last.
pub fn load(global: &GlobalArgs) -> Result<(RunConfig, String, Vec<String>), CliError> {
    let text = match &global.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let mut overrides = global.overrides.clone();
    if let Some(seed) = global.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = parse_config_str(&text, &overrides)?;
    Ok((cfg, text, overrides))
}

fn output_dir(global: &GlobalArgs, cfg: &RunConfig) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn dispatch(command: &Command, cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    match command {
        Command::Field => commands::run_field(cfg, dir),
        Command::Bounce => commands::run_bounce(cfg, dir),
        Command::Mc => commands::run_mc(cfg, dir),
        Command::Budget => commands::run_budget(cfg, dir),
        Command::Sweep(a) => commands::run_sweep(
            cfg,
            dir,
            &SweepSpec {
                key: a.param.clone(),
                start: a.start,
                end: a.end,
                steps: a.steps,
                log: a.log,
                outputs: a.outputs.clone(),
            },
        ),
        Command::Optimize => commands::run_optimize(cfg, dir),
    }
}

/// Runs one command end to end and returns the manifest it wrote.
pub fn execute(cli: &Cli) -> Result<RunManifest, CliError> {
    let started_at = timestamp();
    let (cfg, text, overrides) = load(&cli.global)?;
    let dir = output_dir(&cli.global, &cfg);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cli.global.threads)))?;
    let mut outputs = pool.install(|| dispatch(&cli.command, &cfg, &dir))?;
    outputs.push(MANIFEST_FILE.to_string());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        config_path: cli.global.config.as_ref().map(|p| p.display().to_string()),
        config_sha256: sha256_hex(&text),
        overrides,
        seed: cfg.seed,
        threads: pool.current_num_threads(),
        started_at,
        finished_at: timestamp(),
        outputs,
    };
    write_manifest(&dir, &manifest)?;
    Ok(manifest)
}
