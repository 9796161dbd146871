use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};

use ctxreduce::harness::{
    emit, load_traces, parse_seeds, run, run_grid, scaling_fit_traces, verify, write_scaling,
    Algorithm, Format, HarnessError, RunConfig,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ctxreduce", version, about = "Contextual linear bandits via linear-bandit reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, clap::Args)]
struct Opts {
    /// TOML run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    algo: Option<String>,
    /// Horizon. For `scale`, the largest horizon of a four-point doubling grid.
    #[arg(long = "T", global = true)]
    horizon: Option<u64>,
    /// Seed list (`1,2,3`) or count (`10` means seeds 0..10).
    #[arg(long, global = true)]
    seeds: Option<String>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// csv, json-lines or plotdata.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed and write traces to the output directory.
    Run,
    /// Run a horizon grid and fit the regret growth exponent.
    Scale,
    /// Check the structural invariants of the configured instance.
    Verify,
    /// Convert the saved traces of an earlier `run` into another format.
    Emit,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Verify,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn load_config(opts: &Opts) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Config)?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(a) = &opts.algo {
        cfg.algorithm = a.parse::<Algorithm>()?;
    }
    if let Some(t) = opts.horizon {
        cfg.horizon = t;
    }
    if let Some(s) = &opts.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if opts.workers.is_some() {
        cfg.workers = opts.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let opts = &cli.opts;
    let format: Format = opts.format.parse()?;
    match cli.command {
        Command::Run => {
            let cfg = load_config(opts)?;
            let traces = run(&cfg)?;
            // json-lines is the canonical record that `emit` reads back
            let saved = emit(&traces, Format::JsonLines, &opts.out)?;
            let written = emit(&traces, format, &opts.out)?;
            for t in &traces {
                println!(
                    "seed {:>6}  regret {:>12.3}  reduced {:>12.3}",
                    t.seed,
                    t.final_regret(),
                    t.final_reduced_regret()
                );
            }
            let mean = traces.iter().map(|t| t.final_regret()).sum::<f64>() / traces.len() as f64;
            println!("{} seeds, T = {}, mean regret {mean:.3}", traces.len(), cfg.horizon);
            println!("wrote {} and {}", saved.display(), written.display());
        }
        Command::Scale => {
            let cfg = load_config(opts)?;
            let horizons = if opts.horizon.is_some() || cfg.horizons.is_empty() {
                (0..4).rev().map(|k| (cfg.horizon >> k).max(2)).collect()
            } else {
                cfg.horizons.clone()
            };
            let groups = run_grid(&cfg, &horizons)?;
            let report = scaling_fit_traces(&groups, cfg.dim)?;
            fs::create_dir_all(&opts.out).map_err(|e| Failure::Runtime(e.into()))?;
            let path = opts.out.join("scaling.csv");
            let file = fs::File::create(&path).map_err(|e| Failure::Runtime(e.into()))?;
            write_scaling(&report, file)?;
            for r in &report.rows {
                println!(
                    "T {:>9}  mean {:>12.3}  std {:>10.3}  envelope {:>12.3}{}",
                    r.horizon,
                    r.mean,
                    r.std,
                    r.envelope,
                    if r.exceeds { "  EXCEEDS" } else { "" }
                );
            }
            println!("alpha = {:.4}  (c = {:.4})", report.alpha, report.envelope_constant);
            println!("wrote {}", path.display());
        }
        Command::Verify => {
            let cfg = load_config(opts)?;
            let report = verify(&cfg)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !report.all_passed() {
                return Err(Failure::Verify);
            }
        }
        Command::Emit => {
            let source = opts.out.join(Format::JsonLines.file_name());
            let traces = load_traces(&source)
                .map_err(|e| Failure::Runtime(anyhow::Error::new(e).context(format!("reading {}", source.display()))))?;
            let path = emit(&traces, format, &opts.out)?;
            println!("wrote {} ({} traces)", path.display(), traces.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
