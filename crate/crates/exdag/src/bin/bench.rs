//! Command-line benchmark driver. Runs one experiment configuration and
//! prints (or writes) a CSV record. Exit codes: 0 success, 2 runtime
//! failure, 64 usage error.

use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::Parser;
use exdag::bench::{self, BenchConfig, Experiment, Weights};
use exdag::{SepPolicy, Strategy};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Exact real arithmetic benchmark harness",
    long_about = "Builds an expression DAG (a binomial-coefficient chain or a random \
operation fold), optionally restructures it, evaluates it to a guaranteed \
absolute error of 2^q, and reports timings and structure counts as CSV."
)]
struct Cli {
    /// Experiment family: bincoeff or randops
    experiment: String,

    /// Problem size: chain length (bincoeff) or operation count (randops)
    #[arg(long, default_value_t = 1000)]
    n: u64,

    /// Target error exponent, negative; the result error is at most 2^q
    #[arg(long, default_value_t = -50000, allow_negative_numbers = true)]
    q: i64,

    /// Restructuring strategy: def, amb, mtr or mtr-k
    #[arg(long, default_value = "def")]
    strategy: String,

    /// Division split threshold, required with --strategy mtr-k
    #[arg(long)]
    threshold: Option<u64>,

    /// Evaluation worker threads; 0 runs serially
    #[arg(long, default_value_t = 4)]
    threads: usize,

    /// Relative weight of additions (randops)
    #[arg(long, default_value_t = 1)]
    fadd: u64,

    /// Relative weight of subtractions (randops)
    #[arg(long, default_value_t = 1)]
    fsub: u64,

    /// Relative weight of multiplications (randops)
    #[arg(long, default_value_t = 1)]
    fmul: u64,

    /// Relative weight of divisions (randops)
    #[arg(long, default_value_t = 1)]
    fdiv: u64,

    /// Generator seed; equal seeds reproduce the exact expression
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Timing repetitions per configuration
    #[arg(long, default_value_t = 25)]
    repeat: u64,

    /// Zero handling: bfmss (prove zeros) or assume-nonzero;
    /// defaults to bfmss for bincoeff and assume-nonzero for randops
    #[arg(long)]
    sep_policy: Option<String>,

    /// Write the CSV here instead of standard output
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    64
}

fn build_config(cli: &Cli) -> Result<BenchConfig, i32> {
    let experiment = match cli.experiment.as_str() {
        "bincoeff" => Experiment::Bincoeff,
        "randops" => Experiment::Randops,
        other => return Err(usage(&format!("unknown experiment `{other}`"))),
    };
    let strategy = match cli.strategy.as_str() {
        "def" | "amb" | "mtr" => {
            if cli.threshold.is_some() {
                return Err(usage("--threshold only applies to --strategy mtr-k"));
            }
            match cli.strategy.as_str() {
                "def" => Strategy::Def,
                "amb" => Strategy::Amb,
                _ => Strategy::Mtr,
            }
        }
        "mtr-k" => match cli.threshold {
            Some(k) => Strategy::MtrK(k),
            None => return Err(usage("--strategy mtr-k requires --threshold")),
        },
        other => return Err(usage(&format!("unknown strategy `{other}`"))),
    };
    let sep_policy = match cli.sep_policy.as_deref() {
        None => experiment.default_sep_policy(),
        Some("bfmss") => SepPolicy::Bfmss,
        Some("assume-nonzero") => SepPolicy::AssumeNonzero,
        Some(other) => return Err(usage(&format!("unknown separation policy `{other}`"))),
    };
    if cli.q >= 0 {
        return Err(usage("--q must be negative"));
    }
    if cli.repeat < 1 {
        return Err(usage("--repeat must be at least 1"));
    }
    let weights = Weights { add: cli.fadd, sub: cli.fsub, mul: cli.fmul, div: cli.fdiv };
    match experiment {
        Experiment::Bincoeff if cli.n < 1 => {
            return Err(usage("bincoeff needs --n at least 1"));
        }
        Experiment::Randops if weights.total() == 0 => {
            return Err(usage("randops needs a nonzero operation weight"));
        }
        _ => {}
    }
    Ok(BenchConfig {
        experiment,
        n: cli.n,
        q: cli.q,
        strategy,
        threads: cli.threads,
        weights,
        seed: cli.seed,
        repeat: cli.repeat,
        sep_policy,
    })
}

fn run_cli(cli: Cli) -> Result<(), i32> {
    let config = build_config(&cli)?;
    let record = bench::run(&config).map_err(|e| {
        eprintln!("error: {e}");
        2
    })?;
    let text = bench::emit_csv(std::slice::from_ref(&record));
    match &cli.csv {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            2
        })?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            exit(code);
        }
    };
    match run_cli(cli) {
        Ok(()) => {}
        Err(code) => exit(code),
    }
}
