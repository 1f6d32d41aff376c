//! Benchmark harness: deterministic expression generators, timed runs and
//! CSV records.
//!
//! Two experiment families are provided. `bincoeff` builds the generalized
//! binomial coefficient of sqrt(13) over n as two product chains joined by
//! one division. `randops` folds n randomly chosen operations, each with a
//! square-rooted exponentially distributed operand, into an accumulator.
//! Runs are reproducible: the generator is a fixed 64-bit shift-register
//! sequence seeded explicitly, never from entropy. Timing covers
//! restructuring, preparation and evaluation; building the expression is
//! excluded and each repeat rebuilds it from scratch.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::EvalError;
use crate::eval::{self, EvalConfig, EvalStats, SepPolicy};
use crate::node::{KindCounts, Real};
use crate::restructure::Strategy;

// ---------------------------------------------------------------------------
// Deterministic random numbers

/// 64-bit xorshift* generator. The raw sequence is identical on every
/// platform for a given seed.
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        // One scrambling round spreads low-entropy seeds and keeps the
        // shift register away from the all-zero fixed point.
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Rng { state: if z == 0 { 0x4d59_5df4_d0f3_3173 } else { z } }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state ^= self.state >> 12;
        self.state ^= self.state << 25;
        self.state ^= self.state >> 27;
        self.state.wrapping_mul(2685821657736338717)
    }

    /// Uniform double in (0, 1], 53 significant bits.
    pub fn unit(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Exponentially distributed double with mean one, strictly positive.
    pub fn exponential(&mut self) -> f64 {
        loop {
            let r = -self.unit().ln();
            if r > 0.0 {
                return r;
            }
        }
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }
}

// ---------------------------------------------------------------------------
// Experiment generators

/// Relative frequencies for the four binary operations in `randops`.
#[derive(Clone, Copy, Debug)]
pub struct Weights {
    pub add: u64,
    pub sub: u64,
    pub mul: u64,
    pub div: u64,
}

impl Weights {
    pub fn uniform() -> Weights {
        Weights { add: 1, sub: 1, mul: 1, div: 1 }
    }

    pub fn total(&self) -> u64 {
        self.add + self.sub + self.mul + self.div
    }
}

/// Generalized binomial coefficient of sqrt(13) over `n`, built iteratively:
/// numerator product of (sqrt(13) - i) for i in 0..n, denominator product
/// of (i + 1), joined by one division. Both chains have n operands.
pub fn build_bincoeff(n: u64) -> Real {
    assert!(n >= 1, "bincoeff needs n >= 1");
    let b = Real::from_i64(13).sqrt();
    let mut num = &b - &Real::from_i64(0);
    let mut den = Real::from_i64(1);
    for i in 1..n {
        num = num * (&b - &Real::from_i64(i as i64));
        den = den * Real::from_i64(i as i64 + 1);
    }
    num / den
}

/// Folds `n` random operations into an accumulator starting at 1. Each
/// operand is the square root of an exponential variate; the operation is
/// drawn by integer weights.
pub fn build_randops(n: u64, w: &Weights, rng: &mut Rng) -> Real {
    let total = w.total();
    assert!(total > 0, "randops needs a nonzero weight");
    let mut result = Real::from_i64(1);
    for _ in 0..n {
        let r = rng.exponential();
        let operand = Real::from_f64(r).expect("variate is finite").sqrt();
        let t = rng.below(total);
        result = if t < w.add {
            result + operand
        } else if t < w.add + w.sub {
            result - operand
        } else if t < w.add + w.sub + w.mul {
            result * operand
        } else {
            result / operand
        };
    }
    result
}

// ---------------------------------------------------------------------------
// Benchmark runs

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Experiment {
    Bincoeff,
    Randops,
}

impl Experiment {
    pub fn label(&self) -> &'static str {
        match self {
            Experiment::Bincoeff => "bincoeff",
            Experiment::Randops => "randops",
        }
    }

    /// Division by a random accumulator cannot be proven nonzero
    /// structurally, so `randops` trusts the generator; `bincoeff` divides
    /// by a positive integer product and can afford full proving.
    pub fn default_sep_policy(&self) -> SepPolicy {
        match self {
            Experiment::Bincoeff => SepPolicy::Bfmss,
            Experiment::Randops => SepPolicy::AssumeNonzero,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    pub experiment: Experiment,
    pub n: u64,
    /// Target error exponent; the run guarantees error at most 2^q.
    pub q: i64,
    pub strategy: Strategy,
    pub threads: usize,
    pub weights: Weights,
    pub seed: u64,
    pub repeat: u64,
    pub sep_policy: SepPolicy,
}

impl BenchConfig {
    pub fn new(experiment: Experiment, n: u64) -> BenchConfig {
        BenchConfig {
            experiment,
            n,
            q: -50000,
            strategy: Strategy::Def,
            threads: 4,
            weights: Weights::uniform(),
            seed: 42,
            repeat: 25,
            sep_policy: experiment.default_sep_policy(),
        }
    }
}

/// One measured configuration: config echo, wall-clock aggregates over the
/// repeats, per-phase means, and structure counts from the final repeat.
#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub config: BenchConfig,
    pub wall_ms_mean: f64,
    pub wall_ms_min: f64,
    pub wall_ms_max: f64,
    pub preprocess_ms: f64,
    pub restructure_ms: f64,
    pub execute_ms: f64,
    pub nodes_before: u64,
    pub nodes_after: u64,
    pub depth_before: u64,
    pub depth_after: u64,
    pub ops: KindCounts,
    pub tasks: u64,
    pub ready_peak: u64,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs one configuration `config.repeat` times on freshly built DAGs and
/// aggregates the measurements.
pub fn run(config: &BenchConfig) -> Result<BenchRecord, EvalError> {
    assert!(config.repeat >= 1);
    let eval_cfg = EvalConfig { sep_policy: config.sep_policy, threads: config.threads };
    let mut walls: Vec<f64> = Vec::new();
    let mut pre_sum = 0.0;
    let mut restr_sum = 0.0;
    let mut exec_sum = 0.0;
    let mut shape: Option<(u64, u64, u64, u64, KindCounts, u64, u64)> = None;
    for _ in 0..config.repeat {
        let dag = match config.experiment {
            Experiment::Bincoeff => build_bincoeff(config.n),
            Experiment::Randops => {
                let mut rng = Rng::new(config.seed);
                build_randops(config.n, &config.weights, &mut rng)
            }
        };
        let nodes_before = dag.node_count();
        let depth_before = dag.depth();

        let t = Instant::now();
        dag.restructure(config.strategy);
        let restr = ms(t.elapsed());

        let nodes_after = dag.node_count();
        let depth_after = dag.depth();
        let ops = dag.op_counts();

        let mut stats = EvalStats::default();
        let t = Instant::now();
        eval::prepare(&dag.node, &eval_cfg, &mut stats)?;
        let pre = ms(t.elapsed());

        let t = Instant::now();
        let (_, exec_stats) = dag.approximate_with(config.q, &eval_cfg)?;
        let exec = ms(t.elapsed());

        walls.push(restr + pre + exec);
        pre_sum += pre;
        restr_sum += restr;
        exec_sum += exec;
        shape = Some((
            nodes_before,
            nodes_after,
            depth_before,
            depth_after,
            ops,
            exec_stats.tasks,
            exec_stats.ready_peak,
        ));
    }
    let (nodes_before, nodes_after, depth_before, depth_after, ops, tasks, ready_peak) =
        shape.expect("at least one repeat ran");
    let reps = config.repeat as f64;
    let mean = walls.iter().sum::<f64>() / reps;
    let min = walls.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = walls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(BenchRecord {
        config: *config,
        wall_ms_mean: mean,
        wall_ms_min: min,
        wall_ms_max: max,
        preprocess_ms: pre_sum / reps,
        restructure_ms: restr_sum / reps,
        execute_ms: exec_sum / reps,
        nodes_before,
        nodes_after,
        depth_before,
        depth_after,
        ops,
        tasks,
        ready_peak,
    })
}

// ---------------------------------------------------------------------------
// CSV output

pub const CSV_HEADER: &str = "experiment,n,q,strategy,threshold,threads,seed,repeat,\
wall_ms_mean,wall_ms_min,wall_ms_max,preprocess_ms,restructure_ms,execute_ms,\
nodes_before,nodes_after,depth_before,depth_after,\
n_add,n_sub,n_mul,n_div,n_root,tasks,ready_peak";

pub fn strategy_label(s: Strategy) -> &'static str {
    match s {
        Strategy::Def => "def",
        Strategy::Amb => "amb",
        Strategy::Mtr => "mtr",
        Strategy::MtrK(_) => "mtr-k",
    }
}

/// Header line plus one line per record, LF separated.
pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let c = &r.config;
        let threshold = match c.strategy {
            Strategy::MtrK(k) => k.to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{},{},{},{},{},{},{},{},{},{},{}",
            c.experiment.label(),
            c.n,
            c.q,
            strategy_label(c.strategy),
            threshold,
            c.threads,
            c.seed,
            c.repeat,
            r.wall_ms_mean,
            r.wall_ms_min,
            r.wall_ms_max,
            r.preprocess_ms,
            r.restructure_ms,
            r.execute_ms,
            r.nodes_before,
            r.nodes_after,
            r.depth_before,
            r.depth_after,
            r.ops.add,
            r.ops.sub,
            r.ops.mul,
            r.ops.div,
            r.ops.root,
            r.tasks,
            r.ready_peak,
        );
    }
    out
}
