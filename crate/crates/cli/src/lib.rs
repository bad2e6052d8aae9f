//! Command-line surface over the simulation toolkit: scenario
//! configuration, presets, and CSV artifacts for each pipeline.

mod commands;
pub mod config;
pub mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{geneva_preset, load_config, load_config_str, ScenarioConfig};
pub use table::{emit_table, format_number, Table};

/// Environment variable that overrides the configured default seed.
pub const SEED_ENV_VAR: &str = "SPOOKY_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] spooky_core::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(_) => 2,
            Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spooky",
    about = "Entanglement-based QKD simulation, CHSH analysis, and nonlocality timing bounds"
)]
pub struct Cli {
    /// Scenario configuration file (INI-style sections, or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed override (beats the SPOOKY_SEED variable and the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write the machine-readable result table (CSV) to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Exit with code 3 when a QKD session ends INSECURE.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Worker threads for parameter sweeps (derived per-index seeds).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a full key-distribution session: simulate, sift, estimate,
    /// reconcile, amplify, judge.
    Qkd(QkdArgs),
    /// Evaluate the CHSH combination and the QBER/visibility bridge.
    Bell(BellArgs),
    /// Compare the source-scheme ladder under one parameter set.
    Schemes,
    /// Lower bounds on the speed of the nonlocal influence per frame.
    SpookySpeed,
    /// Before-before feasibility: threshold, flag, and wheel windows.
    BeforeBefore(BeforeBeforeArgs),
    /// Run a pipeline under a named preset (e.g. `preset geneva qkd`).
    Preset(PresetArgs),
}

#[derive(Debug, Args, Default)]
pub struct QkdArgs {
    /// Number of source gates (default from config).
    #[arg(long)]
    pub gates: Option<u64>,
    /// Source visibility override.
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Write the per-gate session transcript (tab-separated) here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Sweep visibility over start:stop:steps instead of a single run.
    #[arg(long)]
    pub sweep_visibility: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct BellArgs {
    /// Two-photon interference visibility (default from config).
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Analyzer settings a,a',b,b' in degrees (default 0,90,45,135).
    #[arg(long)]
    pub angles_deg: Option<String>,
    /// Sweep visibility over start:stop:steps.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Check the one-photon/two-photon scheme equivalence over N seeded
    /// random unitary pairs and report the worst residual.
    #[arg(long)]
    pub equivalence_check: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct BeforeBeforeArgs {
    /// Timing alignment uncertainty in picoseconds.
    #[arg(long)]
    pub delta_t_ps: Option<f64>,
    /// Straight-line separation in kilometers.
    #[arg(long)]
    pub separation_km: Option<f64>,
    /// Absorber wheel tangential speed in m/s.
    #[arg(long)]
    pub wheel_speed: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// Preset name; `geneva` is the documented long-distance layout.
    pub name: String,
    /// Pipeline to run: qkd, bell, schemes, spooky-speed, before-before.
    pub pipeline: String,
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolved run context shared by all subcommands.
pub(crate) struct RunContext {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub threads: usize,
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    let env_seed = std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|s| s.parse::<u64>().ok());
    let seed = cli.seed.or(env_seed).unwrap_or(cfg.run.seed);
    let ctx = RunContext {
        cfg,
        seed,
        out: cli.out,
        strict: cli.strict,
        threads: cli.threads.max(1),
    };
    dispatch(&cli.command, ctx)
}

fn dispatch(command: &Command, ctx: RunContext) -> Result<i32, CliError> {
    match command {
        Command::Qkd(args) => commands::qkd(&ctx, args),
        Command::Bell(args) => commands::bell(&ctx, args),
        Command::Schemes => commands::schemes(&ctx),
        Command::SpookySpeed => commands::spooky_speed(&ctx),
        Command::BeforeBefore(args) => commands::before_before(&ctx, args),
        Command::Preset(args) => {
            if args.name != "geneva" {
                return Err(CliError::Config(vec![format!(
                    "unknown preset '{}'; available: geneva",
                    args.name
                )]));
            }
            let mut preset_ctx = ctx;
            let seed_overridden = preset_ctx.seed != preset_ctx.cfg.run.seed;
            preset_ctx.cfg = geneva_preset();
            if !seed_overridden {
                preset_ctx.seed = preset_ctx.cfg.run.seed;
            }
            let inner = match args.pipeline.as_str() {
                "qkd" => Command::Qkd(QkdArgs::default()),
                "bell" => Command::Bell(BellArgs::default()),
                "schemes" => Command::Schemes,
                "spooky-speed" => Command::SpookySpeed,
                "before-before" => Command::BeforeBefore(BeforeBeforeArgs::default()),
                other => {
                    return Err(CliError::Config(vec![format!(
                        "unknown pipeline '{other}'"
                    )]))
                }
            };
            dispatch(&inner, preset_ctx)
        }
    }
}
