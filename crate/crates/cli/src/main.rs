//! `oddm`: BER sweeps, iteration curves, operation counts and self-checks.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oddm_core::equalize::Filter;
use oddm_core::harness::{self, flops, Iterations, SimConfig};
use oddm_core::init::Initializer;
use oddm_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "oddm", version, about = "ZP-ODDM detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against SNR at the last iteration.
    Sweep(RunArgs),
    /// BER against iteration at a single SNR.
    Iters(RunArgs),
    /// Operation counts and their scaling when D or M' doubles.
    Flops(FlopArgs),
    /// Compare fast paths against reference implementations.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset name (desk-scale, paper-fullscale) or TOML path.
    #[arg(long, default_value = "desk-scale")]
    config: String,
    /// SNR points in dB, comma separated; `--snr=` for none.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    snr: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    detector: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<String>>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Path-gain NMSE in dB; `-inf` for perfect CSI.
    #[arg(long, allow_hyphen_values = true)]
    nmse: Option<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write zero in the `seconds` column.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct FlopArgs {
    #[arg(long, default_value_t = 64)]
    data_rows: usize,
    #[arg(long, default_value_t = 16)]
    blocks: usize,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>, Error> {
    items.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect()
}

fn build_config(args: &RunArgs) -> Result<SimConfig, Error> {
    let mut cfg = SimConfig::load(&args.config)?;
    if let Some(snr) = &args.snr {
        cfg.snr_db = snr
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid SNR '{s}'")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(d) = &args.detector {
        cfg.detector = parse_list::<Filter>(d)?;
    }
    if let Some(i) = &args.init {
        cfg.initializer = parse_list::<Initializer>(i)?;
    }
    if let Some(f) = args.frames {
        cfg.frames = f;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(i) = args.iters {
        cfg.max_iters = i;
    }
    if let Some(x) = args.nmse {
        cfg.nmse_db = if x == f64::NEG_INFINITY { None } else { Some(x) };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs, which: Iterations) -> Result<(), Error> {
    let cfg = build_config(args)?;
    if which == Iterations::All && cfg.snr_db.len() > 1 {
        return Err(Error::Config("iters takes exactly one SNR point".into()));
    }
    match &args.out {
        Some(path) => {
            harness::run_sweep_to(&cfg, which, !args.no_timing, path)?;
        }
        None => {
            let record = harness::run_sweep(&cfg, which, !args.no_timing)?;
            harness::write_csv(&record.rows, io::stdout().lock())?;
        }
    }
    Ok(())
}

fn run_flops(args: &FlopArgs) -> Result<(), Error> {
    let report = flops::count_flops(args.data_rows, args.blocks, args.depth, args.seed)?;
    match &args.out {
        Some(path) => flops::write_flops_csv(&report, std::fs::File::create(path)?)?,
        None => flops::write_flops_csv(&report, io::stdout().lock())?,
    }
    let mut err = io::stderr().lock();
    for r in &report.ratios {
        let verdict = if r.passes() { "ok" } else { "out of range" };
        let _ = writeln!(err, "{}: {:.3} (target {} ± {}) {verdict}", r.name, r.ratio, r.target, r.tolerance);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => run(a, Iterations::Final),
        Command::Iters(a) => run(a, Iterations::All),
        Command::Flops(a) => run_flops(a),
        Command::Selftest { seed } => {
            let outcomes = harness::run_selftest(*seed);
            let mut out = io::stdout().lock();
            for o in &outcomes {
                let _ = writeln!(out, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Error::Numerical("self-test failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
