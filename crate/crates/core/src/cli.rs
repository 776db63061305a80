//! Command-line front end.
//!
//! Every command writes machine-readable output next to `--out` and a JSON
//! metadata file carrying the crate version, the resolved configuration,
//! the seed, the block size used and the wall-clock time. Exit codes: 0 on
//! success, 1 for configuration errors, 2 for data errors, 3 for numerical
//! degeneracy.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::boot::{mv_select, BootstrapConfig, MvCandidates};
use crate::curves::{Grid, PanelSeries};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, Mode};
use crate::infer::{jscb, parallelism_test};
use crate::ingest::{build_panel, default_bandwidth, load_long_csv, SmoothConfig};
use crate::io;
use crate::simgen::{simulate_panel, ErrorDist, Model, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "panelband",
    version,
    about = "Simultaneous bands and parallelism tests for panels of functional time series"
)]
pub struct Cli {
    /// Worker threads. Results never depend on this.
    #[arg(long, global = true, env = "PANELBAND_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a PAR/PMA panel.
    Simulate(SimulateArgs),
    /// Joint simultaneous confidence bands for all mean curves.
    Jscb(InferArgs),
    /// Test that all mean curves are parallel.
    TestParallel(InferArgs),
    /// Minimum-volatility block size.
    MvSelect(MvArgs),
    /// Monte Carlo coverage of the bands.
    CoverageBench(BenchArgs),
    /// Monte Carlo size of the parallelism test.
    SizeBench(BenchArgs),
    /// Monte Carlo power curve of the parallelism test.
    PowerBench(BenchArgs),
    /// Smooth long-format records into a panel.
    Smooth(SmoothArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ModelArg {
    Par,
    Pma,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum DistArg {
    Normal,
    T6,
}

/// Model flags; each overrides the matching `--config` entry.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// SimConfig TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Temporal dependence coefficient.
    #[arg(long)]
    pub a: Option<f64>,
    /// Time points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Panels.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    /// Grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Panel file; `.csv` selects the text layout. Metadata goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BootArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Block size; skips minimum-volatility selection.
    #[arg(long)]
    pub block: Option<usize>,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    pub boot_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Panel file.
    pub input: PathBuf,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Comma-separated panel labels.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MvArgs {
    /// Panel file.
    pub input: PathBuf,
    /// Output JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fixed block size; skips minimum-volatility selection.
    #[arg(long)]
    pub block: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 500)]
    pub boot_reps: usize,
    /// Deviations for power-bench.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3")]
    pub b_grid: Vec<f64>,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Long-format CSV with header `unit,period,position,value`.
    pub input: PathBuf,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Kernel bandwidth; defaults to a rule of thumb.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub min_points: usize,
    /// Panel file; labels go to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", json!({ "error": kind(&e), "message": e.to_string(), "exit_code": code }));
            code
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) => EXIT_CONFIG,
        Error::DegenerateScale(_) => EXIT_DEGENERATE,
        Error::Cell { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

fn kind(err: &Error) -> &'static str {
    match exit_code(err) {
        EXIT_CONFIG => "config",
        EXIT_DEGENERATE => "degenerate",
        _ => "data",
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    let pool = match threads {
        Some(0) => return Err(Error::Config("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    let start = Instant::now();
    match command {
        Command::Simulate(args) => simulate(args, start),
        Command::Jscb(args) => bands(args, start),
        Command::TestParallel(args) => test_parallel(args, start),
        Command::MvSelect(args) => mv(args, start),
        Command::CoverageBench(args) => bench(args, Mode::Coverage, start),
        Command::SizeBench(args) => bench(args, Mode::TypeI, start),
        Command::PowerBench(args) => bench(args, Mode::Power, start),
        Command::Smooth(args) => smooth(args, start),
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidArgument(msg) => Error::Config(msg),
        other => other,
    }
}

fn resolve_sim(args: &ModelArgs) -> Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => io::read_sim_config(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
            other => other,
        })?,
        None => SimConfig::new(
            Model::Par,
            args.a.unwrap_or(0.0),
            args.n.ok_or_else(|| Error::Config("--n is required without --config".into()))?,
            args.r.ok_or_else(|| Error::Config("--r is required without --config".into()))?,
        ),
    };
    if let Some(m) = args.model {
        cfg.model = match m {
            ModelArg::Par => Model::Par,
            ModelArg::Pma => Model::Pma,
        };
    }
    if let Some(a) = args.a {
        cfg.a = a;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(d) = args.dist {
        cfg.dist = match d {
            DistArg::Normal => ErrorDist::Normal,
            DistArg::T6 => ErrorDist::ScaledT6,
        };
    }
    if let Some(g) = args.grid {
        cfg.grid_size = g;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn metadata(command: &str, config: Value, seed: u64, block: Option<usize>, start: Instant, result: Value) -> Value {
    json!({
        "version": crate::VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "block": block,
        "wall_time_secs": start.elapsed().as_secs_f64(),
        "result": result,
    })
}

fn simulate(args: SimulateArgs, start: Instant) -> Result<()> {
    let cfg = resolve_sim(&args.model)?;
    let panel = simulate_panel(&cfg)?;
    io::write_panel(&args.out, &panel)?;
    let result = json!({ "panel": args.out, "n": panel.n(), "r": panel.r(), "G": panel.grid_len() });
    let meta = metadata("simulate", serde_json::to_value(&cfg)?, cfg.seed, None, start, result);
    io::write_json(with_suffix(&args.out, ".json"), &meta)
}

/// Resolved bootstrap settings, plus where the block size came from.
fn resolve_boot(panel: &PanelSeries, args: &BootArgs) -> Result<(BootstrapConfig, &'static str)> {
    let (block, source) = match args.block {
        Some(m) => (m, "flag"),
        None => (mv_select(panel, &MvCandidates::default_for(panel.n())?)?, "minimum-volatility"),
    };
    let cfg = BootstrapConfig::new(block, args.boot_reps, args.alpha, args.seed);
    cfg.validate(panel.n()).map_err(config_err)?;
    Ok((cfg, source))
}

fn boot_config_json(input: &Path, panel: &PanelSeries, cfg: &BootstrapConfig, source: &str) -> Value {
    json!({
        "input": input,
        "n": panel.n(),
        "r": panel.r(),
        "G": panel.grid_len(),
        "alpha": cfg.alpha,
        "boot_reps": cfg.replicates,
        "block": cfg.block,
        "block_source": source,
        "seed": cfg.seed,
    })
}

fn bands(args: InferArgs, start: Instant) -> Result<()> {
    let panel = io::read_panel(&args.input)?;
    let (cfg, source) = resolve_boot(&panel, &args.boot)?;
    let result = jscb(&panel, &cfg)?;
    io::write_bands_csv(with_suffix(&args.out, ".csv"), &result, args.labels.as_deref())?;
    io::write_replicates_csv(with_suffix(&args.out, "_replicates.csv"), &result.replicates)?;
    let meta = metadata(
        "jscb",
        boot_config_json(&args.input, &panel, &cfg, source),
        cfg.seed,
        Some(cfg.block),
        start,
        serde_json::to_value(&result)?,
    );
    io::write_json(with_suffix(&args.out, ".json"), &meta)
}

fn test_parallel(args: InferArgs, start: Instant) -> Result<()> {
    let panel = io::read_panel(&args.input)?;
    let (cfg, source) = resolve_boot(&panel, &args.boot)?;
    let result = parallelism_test(&panel, &cfg)?;
    io::write_pvalues_csv(with_suffix(&args.out, "_pvalues.csv"), &result.pairwise_pvalues, args.labels.as_deref())?;
    io::write_replicates_csv(with_suffix(&args.out, "_replicates.csv"), &result.replicates)?;
    let meta = metadata(
        "test-parallel",
        boot_config_json(&args.input, &panel, &cfg, source),
        cfg.seed,
        Some(cfg.block),
        start,
        serde_json::to_value(io::TestSummary::from(&result))?,
    );
    io::write_json(with_suffix(&args.out, ".json"), &meta)
}

fn mv(args: MvArgs, start: Instant) -> Result<()> {
    let panel = io::read_panel(&args.input)?;
    let candidates = MvCandidates::default_for(panel.n())?;
    let block = mv_select(&panel, &candidates)?;
    let config = json!({ "input": args.input, "n": panel.n(), "r": panel.r(), "G": panel.grid_len(), "candidates": candidates.blocks() });
    let meta = metadata("mv-select", config, 0, Some(block), start, json!({ "block": block }));
    match &args.out {
        Some(path) => io::write_json(path, &meta),
        None => {
            println!("{}", serde_json::to_string_pretty(&meta)?);
            Ok(())
        }
    }
}

fn bench(args: BenchArgs, mode: Mode, start: Instant) -> Result<()> {
    let sim = resolve_sim(&args.model)?;
    let boot = BootstrapConfig::new(args.block.unwrap_or(1), args.boot_reps, args.alpha, 0);
    let mut cfg = ExperimentConfig::new(mode, sim, boot, args.reps);
    cfg.mv = args.block.is_none();
    if mode == Mode::Power {
        cfg.power_b_grid = args.b_grid.clone();
    }
    cfg.validate().map_err(config_err)?;
    let reports = experiments::run(&cfg)?;
    io::write_reports_csv(with_suffix(&args.out, ".csv"), &reports)?;
    if mode == Mode::Power {
        io::write_power_curve_csv(with_suffix(&args.out, "_power.csv"), &reports)?;
    }
    let name = match mode {
        Mode::Coverage => "coverage-bench",
        Mode::TypeI => "size-bench",
        Mode::Power => "power-bench",
    };
    let mean_block = reports.first().map(|r| r.mean_block.round() as usize);
    let meta =
        metadata(name, serde_json::to_value(&cfg)?, cfg.sim.seed, mean_block, start, serde_json::to_value(&reports)?);
    io::write_json(with_suffix(&args.out, ".json"), &meta)
}

fn smooth(args: SmoothArgs, start: Instant) -> Result<()> {
    let records = load_long_csv(&args.input)?;
    let grid = Grid::uniform(args.grid).map_err(config_err)?;
    let per_curve = {
        let first = records.first().ok_or_else(|| Error::Structural("no records".into()))?;
        records.iter().filter(|r| r.unit == first.unit && r.period == first.period).count()
    };
    let bandwidth = args.bandwidth.unwrap_or_else(|| default_bandwidth(per_curve));
    let mut cfg = SmoothConfig::new(bandwidth, grid);
    cfg.min_points = args.min_points;
    cfg.validate().map_err(config_err)?;
    let built = build_panel(&records, &cfg)?;
    io::write_panel(&args.out, &built.panel)?;
    let config = json!({
        "input": args.input,
        "G": args.grid,
        "bandwidth": bandwidth,
        "kernel": "epanechnikov",
        "min_points": cfg.min_points,
    });
    let result = json!({ "panel": args.out, "units": built.units, "periods": built.periods });
    io::write_json(with_suffix(&args.out, ".json"), &metadata("smooth", config, 0, None, start, result))
}
