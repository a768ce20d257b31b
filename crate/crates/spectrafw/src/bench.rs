//! Command-line benchmark driver.
//!
//! Four subcommands share one flag set and one resolution pipeline
//! (CLI flags > config file > defaults):
//!
//! * `solve` — run one algorithm over `repeats` independently generated
//!   instances; write one CSV trace per repeat plus an averaged CSV.
//! * `compare` — run several algorithms over the *same* instances and
//!   reference solutions; write one wide CSV keyed by iteration, with each
//!   algorithm's cumulative rank-one-update count alongside its error so
//!   curves can be re-plotted against either axis.
//! * `verify` — run one algorithm under a full invariant audit (feasibility,
//!   monotone objective, drop budget, sublinear envelope, pseudo-inverse
//!   drift) and exit nonzero on any violation.
//! * `gen` — write a serialized instance and prove it round-trips bitwise.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 usage error, 3 I/O error.
//!
//! All CSV numbers are written with the shortest round-trip `Display`
//! format, so identical flags and seed produce byte-identical files except
//! for the wall-clock `elapsed_s` column.

use crate::baselines::{run_baseline, Algo, BaselineConfig};
use crate::linalg::{full_eigendecomposition, pseudo_inverse, SymMat};
use crate::rng::{derive_seed, stream_rng, STREAM_BETA_CHECK, STREAM_REPEAT};
use crate::sensing::{
    default_beta, generate_problem, measure_strict_complementarity, reference_solution,
    working_beta_holds, SensingOracle, SensingProblem,
};
use crate::solver::{SolverConfig, StepKind};
use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Iteration budget for reference solutions backing `error_vs_ref`.
pub const REFERENCE_BUDGET: usize = 3000;
/// Per-iterate feasibility tolerance on `|Tr(X) - 1|` and `-lambda_min(X)`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Relative slack allowed on objective monotonicity.
pub const MONOTONE_REL_SLACK: f64 = 1e-12;
/// Upper bound asserted on the sublinear-envelope ratio.
pub const ENVELOPE_LIMIT: f64 = 1.0 + 1e-6;
/// Frobenius tolerance between the maintained pseudo-inverse and a fresh
/// eigendecomposition-based one.
pub const PINV_DRIFT_TOL: f64 = 1e-8;
/// Errors below this are clamped before taking `log10` (the floating-point
/// noise floor of `f64` accumulation at benchmark scales).
pub const LOG_ERROR_FLOOR: f64 = 1e-16;

/// A fully resolved run request: one algorithm, one instance family, one
/// output path. `compare` uses one spec per algorithm, all sharing the
/// instance fields.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub algo: Algo,
    /// Matrix dimension.
    pub n: usize,
    /// Planted rank of the sensing ground truth.
    pub r_star: usize,
    /// Measurement count factor: `m = m_factor * n * r_star`.
    pub m_factor: usize,
    /// Signal scale of the measurements.
    pub tau: f64,
    /// Whether measurements carry additive noise.
    pub noise: bool,
    /// Base seed; repeat `k` uses a seed derived from `(seed, k)`.
    pub seed: u64,
    /// Independent instances to generate, run, and average.
    pub repeats: usize,
    pub max_iters: usize,
    /// Dual-gap early stop; `NEG_INFINITY` disables it.
    pub gap_tol: f64,
    /// Smoothness constant override; `None` means `n^2 / 2`.
    pub beta: Option<f64>,
    /// Block baseline rank override; `None` means `r_star`.
    pub block_r: Option<usize>,
    pub block_eta: f64,
    pub out: PathBuf,
}

impl RunSpec {
    /// Measurement count implied by the factor convention.
    pub fn m(&self) -> usize {
        self.m_factor * self.n * self.r_star
    }

    /// Working smoothness constant (the `n^2 / 2` default unless overridden).
    pub fn working_beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| default_beta(self.n))
    }

    /// Block baseline rank (defaults to the planted rank).
    pub fn resolved_block_r(&self) -> usize {
        self.block_r.unwrap_or(self.r_star)
    }

    /// Seed for repeat `k`, independent across repeats and distinct from
    /// every internal solver stream.
    pub fn repeat_seed(&self, k: usize) -> u64 {
        derive_seed(derive_seed(self.seed, STREAM_REPEAT), k as u64)
    }

    /// The solver/baseline configuration this spec describes.
    pub fn baseline_config(&self, run_seed: u64) -> BaselineConfig {
        let mut solver = SolverConfig::new(self.working_beta());
        solver.max_iters = self.max_iters;
        solver.gap_tol = self.gap_tol;
        solver.seed = run_seed;
        let mut cfg = BaselineConfig::new(self.algo, solver);
        cfg.block_r = self.resolved_block_r();
        cfg.block_eta = self.block_eta;
        cfg
    }

    /// Range-checks every field (the instance shape checks mirror the
    /// generator's own).
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("dimension n must be positive".into());
        }
        if self.r_star == 0 || self.r_star > self.n {
            return Err(format!("rank must be in [1, {}], got {}", self.n, self.r_star));
        }
        if self.m_factor == 0 {
            return Err("m-factor must be positive".into());
        }
        if !(self.tau > 0.0) {
            return Err(format!("tau must be positive, got {}", self.tau));
        }
        if self.repeats == 0 {
            return Err("repeats must be at least 1".into());
        }
        if self.max_iters == 0 {
            return Err("max-iters must be at least 1".into());
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(format!("beta must be positive, got {b}"));
            }
        }
        self.baseline_config(0).validate(self.n)
    }
}

/// One CSV trace row. Per-repeat files carry integer-valued `rank` and
/// `rank1_updates_cum`; averaged files carry their means, and use `-` for
/// the step kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub iter: usize,
    pub f_value: f64,
    /// `f_value` minus the reference objective value (may be slightly
    /// negative when a run out-converges the reference's gap certificate).
    pub error_vs_ref: f64,
    /// `log10(max(error_vs_ref, LOG_ERROR_FLOOR))`.
    pub log10_error: f64,
    pub dual_gap: f64,
    /// Step kind name, or `-` in averaged rows.
    pub step_kind: String,
    pub rank: f64,
    pub rank1_updates_cum: f64,
    pub elapsed_s: f64,
}

/// Column order of every trace CSV this module writes.
pub const CSV_HEADER: &str =
    "iter,f_value,error_vs_ref,log10_error,dual_gap,step_kind,rank,rank1_updates_cum,elapsed_s";

/// Everything recorded about one repeat of one algorithm.
#[derive(Debug, Clone)]
pub struct RepeatRun {
    pub rows: Vec<CsvRow>,
    /// Objective at the returned iterate (post-final-step).
    pub final_f: f64,
    /// Dual gap at the returned iterate.
    pub final_gap: f64,
    pub final_rank: usize,
    pub converged: bool,
    pub eig_failures: usize,
    /// Reference objective used for the error columns.
    pub ref_f: f64,
    pub ref_gap: f64,
    pub ref_trusted: bool,
}

impl RepeatRun {
    /// The stationary row used to extend this run past its recorded trace
    /// when averaging against longer runs: the returned iterate's values
    /// with no further step kind, updates, or time.
    fn terminal_row(&self, iter: usize) -> CsvRow {
        let (updates, elapsed) = match self.rows.last() {
            Some(last) => (last.rank1_updates_cum, last.elapsed_s),
            None => (0.0, 0.0),
        };
        let error = self.final_f - self.ref_f;
        CsvRow {
            iter,
            f_value: self.final_f,
            error_vs_ref: error,
            log10_error: floored_log10(error),
            dual_gap: self.final_gap,
            step_kind: "-".to_string(),
            rank: self.final_rank as f64,
            rank1_updates_cum: updates,
            elapsed_s: elapsed,
        }
    }

    /// Row `t` (1-based), extending stationarily past the recorded trace.
    pub fn row_at(&self, iter: usize) -> CsvRow {
        match self.rows.get(iter - 1) {
            Some(row) => row.clone(),
            None => self.terminal_row(iter),
        }
    }
}

/// `log10` with the documented error floor.
pub fn floored_log10(error: f64) -> f64 {
    error.max(LOG_ERROR_FLOOR).log10()
}

/// CLI failure modes, ordered by exit code meaning.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: a checked invariant failed.
    Invariant(String),
    /// Exit 2: bad flags, config, or parameter ranges.
    Usage(String),
    /// Exit 3: filesystem failures.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invariant(m) | CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

fn io_err(path: &Path, op: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{op} {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Flag surface and config-file resolution
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "spectrafw-bench",
    version,
    about = "Benchmark driver for rank-one Frank-Wolfe solvers over the spectrahedron"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run one algorithm; write per-repeat CSV traces plus an averaged one.
    Solve(CommonArgs),
    /// Run several algorithms on shared instances; write one wide CSV.
    Compare(CommonArgs),
    /// Audit solver invariants on one run; exit nonzero on violation.
    Verify(CommonArgs),
    /// Generate a serialized instance file and check its round-trip.
    Gen(CommonArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Algorithm: alg1|fw|blockfw|alg1-away|alg1-nodrop|alg1-det
    /// (comma-separated list for `compare`)
    #[arg(long)]
    algo: Option<String>,

    /// Matrix dimension
    #[arg(long)]
    n: Option<usize>,

    /// Planted rank of the sensing ground truth
    #[arg(long)]
    rank: Option<usize>,

    /// Measurement factor: m = m-factor * n * rank
    #[arg(long)]
    m_factor: Option<usize>,

    /// Measurement signal scale
    #[arg(long)]
    tau: Option<f64>,

    /// Generate noiseless measurements
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    no_noise: Option<bool>,

    /// Base seed for instance generation and solver randomness
    #[arg(long)]
    seed: Option<u64>,

    /// Independent repeats to run and average
    #[arg(long)]
    repeats: Option<usize>,

    /// Iteration budget per run
    #[arg(long)]
    max_iters: Option<usize>,

    /// Dual-gap early stop (use -inf to disable)
    #[arg(long, allow_hyphen_values = true)]
    gap_tol: Option<f64>,

    /// Smoothness constant (default: n^2 / 2)
    #[arg(long)]
    beta: Option<f64>,

    /// Block baseline: rank per update (default: rank)
    #[arg(long)]
    block_r: Option<usize>,

    /// Block baseline: fixed step size in (0, 1]
    #[arg(long)]
    block_eta: Option<f64>,

    /// Output path (CSV, or instance file for `gen`)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Flat key=value config file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Recognized config-file keys (the long flag names).
const CONFIG_KEYS: [&str; 14] = [
    "algo", "n", "rank", "m-factor", "tau", "no-noise", "seed", "repeats", "max-iters", "gap-tol",
    "beta", "block-r", "block-eta", "out",
];

/// Parses the flat `key=value` config format: one pair per line, `#`
/// comments, blank lines ignored, keys must be known flag names.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value, got {raw:?}", lineno + 1));
        };
        let key = key.trim();
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(format!("config line {}: unknown key {key:?}", lineno + 1));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(format!("config line {}: duplicate key {key:?}", lineno + 1));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Usage(format!("config value {key}={value}: {e}")))
}

/// The algorithm list plus the shared spec template, fully resolved from
/// flags, config file, and defaults.
struct Resolved {
    algos: Vec<Algo>,
    spec: RunSpec,
}

fn parse_algo_list(s: &str) -> Result<Vec<Algo>, CliError> {
    let mut algos = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let algo = Algo::parse(part).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown algorithm {part:?}; expected one of alg1, fw, blockfw, alg1-away, alg1-nodrop, alg1-det"
            ))
        })?;
        if algos.contains(&algo) {
            return Err(CliError::Usage(format!("algorithm {part:?} listed twice")));
        }
        algos.push(algo);
    }
    if algos.is_empty() {
        return Err(CliError::Usage("empty algorithm list".into()));
    }
    Ok(algos)
}

/// Merges CLI flags over the config file over defaults and range-checks the
/// result. `default_out` and `default_algos` differ per subcommand.
fn resolve(
    args: &CommonArgs,
    default_algos: &str,
    default_out: &str,
) -> Result<Resolved, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| io_err(path, "read config", e))?;
            parse_config_text(&text).map_err(CliError::Usage)?
        }
        None => BTreeMap::new(),
    };
    let get = |key: &str| file.get(key).map(String::as_str);

    let algo_text: String = match (&args.algo, get("algo")) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => s.to_string(),
        (None, None) => default_algos.to_string(),
    };
    let algos = parse_algo_list(&algo_text)?;

    macro_rules! field {
        ($cli:expr, $key:literal, $default:expr) => {
            match ($cli, get($key)) {
                (Some(v), _) => Some(v),
                (None, Some(text)) => Some(parse_value($key, text)?),
                (None, None) => $default,
            }
        };
    }

    let n = field!(args.n, "n", Some(60)).unwrap();
    let spec = RunSpec {
        algo: algos[0],
        n,
        r_star: field!(args.rank, "rank", Some(2)).unwrap(),
        m_factor: field!(args.m_factor, "m-factor", Some(15)).unwrap(),
        tau: field!(args.tau, "tau", Some(0.5)).unwrap(),
        noise: !field!(args.no_noise, "no-noise", Some(false)).unwrap(),
        seed: field!(args.seed, "seed", Some(0)).unwrap(),
        repeats: field!(args.repeats, "repeats", Some(1)).unwrap(),
        max_iters: field!(args.max_iters, "max-iters", Some(300)).unwrap(),
        gap_tol: field!(args.gap_tol, "gap-tol", Some(1e-10)).unwrap(),
        beta: field!(args.beta, "beta", None),
        block_r: field!(args.block_r, "block-r", None),
        block_eta: field!(args.block_eta, "block-eta", Some(0.3)).unwrap(),
        out: match (&args.out, get("out")) {
            (Some(p), _) => p.clone(),
            (None, Some(text)) => PathBuf::from(text),
            (None, None) => PathBuf::from(default_out),
        },
    };
    spec.validate().map_err(CliError::Usage)?;
    Ok(Resolved { algos, spec })
}

// ---------------------------------------------------------------------------
// Running and CSV emission
// ---------------------------------------------------------------------------

/// One generated instance with its reference solution, shared by every
/// algorithm that runs on repeat `k`.
pub struct PreparedInstance {
    pub problem: SensingProblem,
    pub ref_f: f64,
    pub ref_gap: f64,
    /// Gap-certified or stalled at the arithmetic floor (see
    /// [`crate::sensing::ReferenceSolution::trusted`]).
    pub ref_trusted: bool,
    pub ref_x: SymMat,
}

/// Generates repeat `k`'s instance and solves it to reference accuracy.
pub fn prepare_instance(spec: &RunSpec, k: usize) -> Result<PreparedInstance, CliError> {
    let problem =
        generate_problem(spec.n, spec.r_star, spec.m(), spec.tau, spec.noise, spec.repeat_seed(k))
            .map_err(|e| CliError::Usage(format!("instance generation: {e}")))?;
    let reference = reference_solution(&problem, spec.working_beta(), REFERENCE_BUDGET);
    Ok(PreparedInstance {
        problem,
        ref_f: reference.f,
        ref_gap: reference.gap,
        ref_trusted: reference.trusted(),
        ref_x: reference.x,
    })
}

/// Runs `algo` per `spec` on a prepared instance. `run_seed` feeds the
/// solver's random-direction stream; repeats pass their instance seed so
/// runs stay i.i.d. while remaining reproducible.
pub fn run_on_instance(
    spec: &RunSpec,
    algo: Algo,
    inst: &PreparedInstance,
    run_seed: u64,
) -> Result<RepeatRun, CliError> {
    let oracle = SensingOracle::with_beta(&inst.problem, spec.working_beta());
    let mut spec = spec.clone();
    spec.algo = algo;
    let cfg = spec.baseline_config(run_seed);
    let n = inst.problem.n;
    let x0 = SymMat::identity(n).scaled(1.0 / n as f64);
    let run = run_baseline(x0, &oracle, &cfg, |_, _| {})
        .map_err(|e| CliError::Invariant(format!("{} run: {e}", algo.name())))?;
    let rows = run
        .trace
        .iter()
        .map(|row| {
            let error = row.f_value - inst.ref_f;
            CsvRow {
                iter: row.iter,
                f_value: row.f_value,
                error_vs_ref: error,
                log10_error: floored_log10(error),
                dual_gap: row.dual_gap,
                step_kind: row.step_kind.name().to_string(),
                rank: row.rank as f64,
                rank1_updates_cum: row.rank1_updates as f64,
                elapsed_s: row.elapsed,
            }
        })
        .collect();
    Ok(RepeatRun {
        rows,
        final_f: run.final_f,
        final_gap: run.final_gap,
        final_rank: run.state.rank(),
        converged: run.converged,
        eig_failures: run.eig_failures,
        ref_f: inst.ref_f,
        ref_gap: inst.ref_gap,
        ref_trusted: inst.ref_trusted,
    })
}

/// Mean trace across repeats: row `t` averages each repeat's row `t`, with
/// finished runs extended stationarily at their returned iterate. The
/// averaged step kind is `-`.
pub fn average_runs(runs: &[RepeatRun]) -> Vec<CsvRow> {
    let len = runs.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let scale = 1.0 / runs.len() as f64;
    (1..=len)
        .map(|t| {
            let mut acc = CsvRow {
                iter: t,
                f_value: 0.0,
                error_vs_ref: 0.0,
                log10_error: 0.0,
                dual_gap: 0.0,
                step_kind: "-".to_string(),
                rank: 0.0,
                rank1_updates_cum: 0.0,
                elapsed_s: 0.0,
            };
            for run in runs {
                let row = run.row_at(t);
                acc.f_value += row.f_value * scale;
                acc.error_vs_ref += row.error_vs_ref * scale;
                acc.log10_error += row.log10_error * scale;
                acc.dual_gap += row.dual_gap * scale;
                acc.rank += row.rank * scale;
                acc.rank1_updates_cum += row.rank1_updates_cum * scale;
                acc.elapsed_s += row.elapsed_s * scale;
            }
            acc
        })
        .collect()
}

fn push_csv_row(buf: &mut String, row: &CsvRow) {
    let _ = writeln!(
        buf,
        "{},{},{},{},{},{},{},{},{}",
        row.iter,
        row.f_value,
        row.error_vs_ref,
        row.log10_error,
        row.dual_gap,
        row.step_kind,
        row.rank,
        row.rank1_updates_cum,
        row.elapsed_s
    );
}

/// Serializes rows under [`CSV_HEADER`].
pub fn trace_csv(rows: &[CsvRow]) -> String {
    let mut buf = String::with_capacity(64 * (rows.len() + 1));
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for row in rows {
        push_csv_row(&mut buf, row);
    }
    buf
}

/// Parses a CSV produced by [`trace_csv`] (also accepts averaged files).
pub fn parse_trace_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 9 {
            return Err(format!("row {}: expected 9 columns, got {}", i + 1, parts.len()));
        }
        let num = |j: usize| -> Result<f64, String> {
            parts[j].parse().map_err(|e| format!("row {}: column {}: {e}", i + 1, j + 1))
        };
        rows.push(CsvRow {
            iter: parts[0].parse().map_err(|e| format!("row {}: iter: {e}", i + 1))?,
            f_value: num(1)?,
            error_vs_ref: num(2)?,
            log10_error: num(3)?,
            dual_gap: num(4)?,
            step_kind: parts[5].to_string(),
            rank: num(6)?,
            rank1_updates_cum: num(7)?,
            elapsed_s: num(8)?,
        });
    }
    Ok(rows)
}

/// Per-repeat trace path: `trace.csv` becomes `trace.rep3.csv`.
pub fn repeat_path(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match out.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.rep{k}.{ext}"),
        None => format!("{stem}.rep{k}"),
    };
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, "create", e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, "write", e))
}

/// `solve`: run `spec.algo` over all repeats, write per-repeat CSVs plus the
/// averaged CSV at `spec.out`, and summarize to stdout.
pub fn cmd_solve(spec: &RunSpec) -> Result<(), CliError> {
    spec.validate().map_err(CliError::Usage)?;
    let runs: Vec<RepeatRun> = (0..spec.repeats)
        .into_par_iter()
        .map(|k| {
            let inst = prepare_instance(spec, k)?;
            run_on_instance(spec, spec.algo, &inst, spec.repeat_seed(k))
        })
        .collect::<Result<_, _>>()?;

    for (k, run) in runs.iter().enumerate() {
        let path = repeat_path(&spec.out, k);
        write_file(&path, &trace_csv(&run.rows))?;
        if !run.ref_trusted {
            eprintln!(
                "warning: repeat {k}: reference neither certified nor stalled (gap {:.3e}); error columns use best value found",
                run.ref_gap
            );
        }
        println!(
            "repeat {k}: {} iters, final f {:.6e}, error {:.3e}, gap {:.3e}, rank {}, {} -> {}",
            run.rows.len(),
            run.final_f,
            run.final_f - run.ref_f,
            run.final_gap,
            run.final_rank,
            if run.converged { "converged" } else { "budget" },
            path.display()
        );
    }
    let averaged = average_runs(&runs);
    write_file(&spec.out, &trace_csv(&averaged))?;
    println!(
        "averaged {} repeats over {} iterations -> {}",
        spec.repeats,
        averaged.len(),
        spec.out.display()
    );
    Ok(())
}

/// Error raised when `compare` is handed specs with differing instance
/// parameters or seed families.
pub fn check_shared_instances(specs: &[RunSpec]) -> Result<(), CliError> {
    let first = &specs[0];
    for s in &specs[1..] {
        let same = s.n == first.n
            && s.r_star == first.r_star
            && s.m_factor == first.m_factor
            && s.tau == first.tau
            && s.noise == first.noise
            && s.seed == first.seed
            && s.repeats == first.repeats
            && s.working_beta() == first.working_beta();
        if !same {
            return Err(CliError::Usage(format!(
                "mismatched instances: {} and {} must share n, rank, m-factor, tau, noise, seed, repeats, beta",
                first.algo.name(),
                s.algo.name()
            )));
        }
    }
    Ok(())
}

/// `compare`: run every spec's algorithm on shared per-repeat instances and
/// write one wide CSV at the first spec's `out`. Columns: `iter`, then per
/// algorithm its averaged `error_vs_ref`, `log10_error`, `dual_gap`,
/// `rank`, and `rank1_updates_cum` (prefixed by the algorithm name).
pub fn cmd_compare(specs: &[RunSpec]) -> Result<(), CliError> {
    if specs.is_empty() {
        return Err(CliError::Usage("compare needs at least one algorithm".into()));
    }
    for spec in specs {
        spec.validate().map_err(CliError::Usage)?;
    }
    check_shared_instances(specs)?;
    let base = &specs[0];

    let instances: Vec<PreparedInstance> =
        (0..base.repeats).into_par_iter().map(|k| prepare_instance(base, k)).collect::<Result<
            _,
            _,
        >>()?;
    for (k, inst) in instances.iter().enumerate() {
        if !inst.ref_trusted {
            eprintln!(
                "warning: repeat {k}: reference neither certified nor stalled (gap {:.3e}); error columns use best value found",
                inst.ref_gap
            );
        }
    }

    // Every (algorithm, repeat) pair is independent once instances exist.
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for a in 0..specs.len() {
        for k in 0..base.repeats {
            jobs.push((a, k));
        }
    }
    let mut runs: Vec<((usize, usize), RepeatRun)> = jobs
        .into_par_iter()
        .map(|(a, k)| {
            run_on_instance(&specs[a], specs[a].algo, &instances[k], base.repeat_seed(k))
                .map(|run| ((a, k), run))
        })
        .collect::<Result<_, _>>()?;
    runs.sort_by_key(|(key, _)| *key);

    let mut averaged: Vec<Vec<CsvRow>> = Vec::with_capacity(specs.len());
    for a in 0..specs.len() {
        let per_algo: Vec<RepeatRun> =
            runs.iter().filter(|((i, _), _)| *i == a).map(|(_, r)| r.clone()).collect();
        averaged.push(average_runs(&per_algo));
    }

    let mut header = String::from("iter");
    for spec in specs {
        let name = spec.algo.name();
        for col in ["error_vs_ref", "log10_error", "dual_gap", "rank", "rank1_updates_cum"] {
            let _ = write!(header, ",{name}_{col}");
        }
    }
    let len = averaged.iter().map(Vec::len).max().unwrap_or(0);
    let mut buf = header;
    buf.push('\n');
    for t in 1..=len {
        let _ = write!(buf, "{t}");
        for rows in &averaged {
            // Past a shorter curve's end, carry its last averaged row.
            let row = match rows.get(t - 1).or_else(|| rows.last()) {
                Some(r) => r.clone(),
                None => continue,
            };
            let _ = write!(
                buf,
                ",{},{},{},{},{}",
                row.error_vs_ref, row.log10_error, row.dual_gap, row.rank, row.rank1_updates_cum
            );
        }
        buf.push('\n');
    }
    write_file(&base.out, &buf)?;
    for (spec, rows) in specs.iter().zip(&averaged) {
        let last = rows.last();
        println!(
            "{}: {} averaged iterations, final mean log10 error {:.3}, mean rank-one updates {}",
            spec.algo.name(),
            rows.len(),
            last.map_or(f64::NAN, |r| r.log10_error),
            last.map_or(0.0, |r| r.rank1_updates_cum),
        );
    }
    println!("wrote {}", base.out.display());
    Ok(())
}

/// `gen`: write the instance for `spec.seed` (no repeat derivation) and
/// prove the file round-trips to bitwise-identical fields.
pub fn cmd_gen(spec: &RunSpec) -> Result<(), CliError> {
    spec.validate().map_err(CliError::Usage)?;
    let problem =
        generate_problem(spec.n, spec.r_star, spec.m(), spec.tau, spec.noise, spec.seed)
            .map_err(|e| CliError::Usage(format!("instance generation: {e}")))?;
    problem.write_to(&spec.out).map_err(|e| CliError::Io(format!("write instance: {e}")))?;
    let back = SensingProblem::read_from(&spec.out)
        .map_err(|e| CliError::Io(format!("re-read instance: {e}")))?;
    let identical = back.n == problem.n
        && back.m == problem.m
        && back.r_star == problem.r_star
        && back.tau.to_bits() == problem.tau.to_bits()
        && back.noise == problem.noise
        && back.seed == problem.seed
        && back.a.len() == problem.a.len()
        && back.a.iter().zip(&problem.a).all(|(x, y)| x.to_bits() == y.to_bits())
        && back.b.iter().zip(&problem.b).all(|(x, y)| x.to_bits() == y.to_bits())
        && back.x_sharp.as_slice().len() == problem.x_sharp.as_slice().len()
        && back
            .x_sharp
            .as_slice()
            .iter()
            .zip(problem.x_sharp.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits());
    if !identical {
        return Err(CliError::Invariant(format!(
            "round-trip mismatch for {}",
            spec.out.display()
        )));
    }
    println!(
        "wrote {} (n={}, m={}, rank={}, tau={}, noise={}, seed={}); round-trip bitwise-identical",
        spec.out.display(),
        problem.n,
        problem.m,
        problem.r_star,
        problem.tau,
        problem.noise,
        problem.seed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Invariant audits (pure, fault-injectable)
// ---------------------------------------------------------------------------

/// Feasibility of one iterate: `|Tr(X) - 1|` and `-lambda_min(X)` within
/// [`FEASIBILITY_TOL`]. Returns the violation description if any.
pub fn feasibility_violation(x: &SymMat) -> Option<String> {
    let trace_dev = (x.trace() - 1.0).abs();
    if trace_dev > FEASIBILITY_TOL {
        return Some(format!("|Tr(X) - 1| = {trace_dev:.3e}"));
    }
    let decomp = match full_eigendecomposition(x) {
        Ok(d) => d,
        Err(e) => return Some(format!("eigendecomposition failed: {e}")),
    };
    let min = decomp.values.last().copied().unwrap_or(0.0);
    if min < -FEASIBILITY_TOL {
        return Some(format!("lambda_min(X) = {min:.3e}"));
    }
    None
}

/// First objective increase beyond `rel_slack` in the chain `f_1, ..., f_T,`
/// `final_f`; returns `(one_based_step, excess)`.
pub fn monotonicity_violation(
    f_values: &[f64],
    final_f: f64,
    rel_slack: f64,
) -> Option<(usize, f64)> {
    let mut prev: Option<f64> = None;
    for (idx, &f) in f_values.iter().chain(std::iter::once(&final_f)).enumerate() {
        if let Some(p) = prev {
            let allowed = p + rel_slack * p.abs().max(1.0);
            if f > allowed {
                return Some((idx, f - allowed));
            }
        }
        prev = Some(f);
    }
    None
}

/// First executed-step count `s` whose cumulative drop steps exceed the
/// budget `(t + initial_rank - 2) / 2` at the beginning of iteration
/// `t = s + 1` (drops "up to the beginning of iteration t" are the drops
/// among the first `t - 1` steps).
pub fn drop_budget_violation(kinds: &[StepKind], initial_rank: usize) -> Option<usize> {
    let mut drops = 0usize;
    for (idx, kind) in kinds.iter().enumerate() {
        if *kind == StepKind::Drop {
            drops += 1;
        }
        let s = idx + 1;
        let budget = (s + 1 + initial_rank) as f64 / 2.0 - 1.0;
        if drops as f64 > budget {
            return Some(s);
        }
    }
    None
}

/// Max over `t >= initial_rank + 2` of
/// `(f_t - f_star) * (t - initial_rank + 4) / (8 beta)`; `0` when no row is
/// in range. The envelope holds when this is at most [`ENVELOPE_LIMIT`].
pub fn envelope_max(f_values: &[f64], f_star: f64, beta: f64, initial_rank: usize) -> f64 {
    let mut max = 0.0f64;
    for (idx, &f) in f_values.iter().enumerate() {
        let t = idx + 1;
        if t < initial_rank + 2 {
            continue;
        }
        let ratio = (f - f_star) * (t as f64 - initial_rank as f64 + 4.0) / (8.0 * beta);
        max = max.max(ratio);
    }
    max
}

/// One audit line of a `verify` report.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: &'static str,
    /// `None` means skipped (not applicable to the algorithm).
    pub passed: Option<bool>,
    pub detail: String,
}

/// Everything `verify` measured, before rendering.
pub struct VerifyReport {
    pub checks: Vec<CheckLine>,
    pub info: Vec<String>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    /// Renders the PASS/FAIL/SKIP lines followed by info lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let tag = match check.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "SKIP",
            };
            let _ = writeln!(out, "{tag} {}: {}", check.name, check.detail);
        }
        for line in &self.info {
            let _ = writeln!(out, "info {line}");
        }
        out
    }
}

/// `verify`: run `spec.algo` on repeat 0's instance under per-iterate
/// feasibility and pseudo-inverse audits, then apply the trace-level checks.
pub fn cmd_verify(spec: &RunSpec) -> Result<VerifyReport, CliError> {
    spec.validate().map_err(CliError::Usage)?;
    let inst = prepare_instance(spec, 0)?;
    let oracle = SensingOracle::with_beta(&inst.problem, spec.working_beta());
    let cfg = spec.baseline_config(spec.repeat_seed(0));
    let n = inst.problem.n;
    let x0 = SymMat::identity(n).scaled(1.0 / n as f64);
    let initial_rank = n;

    let mut feasibility_worst: Option<String> = None;
    let mut feasibility_iters = 0usize;
    let mut pinv_worst = 0.0f64;
    let mut pinv_checks = 0usize;
    let mut f_values = Vec::new();
    let mut kinds = Vec::new();
    let run = run_baseline(x0, &oracle, &cfg, |state, row| {
        // Audit the exactly recomputed objective, not the trace's cached
        // column: the cache re-syncs every few moves and the jump back to
        // the exact value (~1e-12 relative) would read as a spurious
        // ascent at this check's tolerance.
        f_values.push(oracle.value_exact(state.x()));
        kinds.push(row.step_kind);
        if let Some(v) = feasibility_violation(state.x()) {
            if feasibility_worst.is_none() {
                feasibility_worst = Some(format!("iteration {}: {v}", row.iter));
            }
        }
        feasibility_iters += 1;
        // The maintained pseudo-inverse is the engine's core data structure;
        // audit it against a fresh eigendecomposition periodically.
        if row.iter % 25 == 1 {
            if let Ok(fresh) = pseudo_inverse(state.x()) {
                pinv_worst = pinv_worst.max(fresh.sub(state.xpinv()).fro_norm());
                pinv_checks += 1;
            }
        }
    })
    .map_err(|e| CliError::Invariant(format!("{} run: {e}", spec.algo.name())))?;

    // Final iterate joins the feasibility audit.
    if feasibility_worst.is_none() {
        if let Some(v) = feasibility_violation(run.state.x()) {
            feasibility_worst = Some(format!("final iterate: {v}"));
        }
    }
    feasibility_iters += 1;

    let mut checks = Vec::new();
    checks.push(CheckLine {
        name: "feasibility",
        passed: Some(feasibility_worst.is_none()),
        detail: match &feasibility_worst {
            Some(v) => v.clone(),
            None => format!(
                "{feasibility_iters} iterates within |Tr - 1| <= {FEASIBILITY_TOL:.0e}, lambda_min >= -{FEASIBILITY_TOL:.0e}"
            ),
        },
    });

    let line_search_algo = spec.algo != Algo::BlockFw;
    checks.push(CheckLine {
        name: "monotonicity",
        passed: if line_search_algo {
            Some(monotonicity_violation(&f_values, run.final_f, MONOTONE_REL_SLACK).is_none())
        } else {
            None
        },
        detail: if line_search_algo {
            match monotonicity_violation(&f_values, run.final_f, MONOTONE_REL_SLACK) {
                Some((t, excess)) => {
                    format!("objective rose at step {t} by {excess:.3e} beyond slack")
                }
                None => format!(
                    "{} objective values non-increasing within {MONOTONE_REL_SLACK:.0e} relative slack",
                    f_values.len() + 1
                ),
            }
        } else {
            "fixed-step block updates are not line-searched".into()
        },
    });

    checks.push(CheckLine {
        name: "drop-budget",
        passed: Some(drop_budget_violation(&kinds, initial_rank).is_none()),
        detail: match drop_budget_violation(&kinds, initial_rank) {
            Some(s) => format!(
                "drop count after {s} steps exceeds the (t + rank(X1) - 2)/2 budget for iteration {}",
                s + 1
            ),
            None => {
                let drops = kinds.iter().filter(|k| **k == StepKind::Drop).count();
                format!("{drops} drop steps within budget over {} steps", kinds.len())
            }
        },
    });

    // The envelope guarantee covers the complete method; ablations that
    // remove branches and the baselines fall outside it.
    let envelope_applies = matches!(spec.algo, Algo::Alg1 | Algo::Alg1Det);
    let envelope_check = if envelope_applies {
        if !inst.ref_trusted {
            Some((
                false,
                format!(
                    "reference optimum untrusted (gap {:.3e}, not stalled); cannot bound f*",
                    inst.ref_gap
                ),
            ))
        } else {
            let mut rng = stream_rng(derive_seed(spec.seed, STREAM_BETA_CHECK), 0);
            let working = spec.working_beta();
            let beta_used = if working_beta_holds(&oracle, working, 64, &mut rng) {
                working
            } else {
                oracle.beta_bound()
            };
            let max = envelope_max(&f_values, inst.ref_f, beta_used, initial_rank);
            let note = if beta_used == working {
                format!("beta = {working}")
            } else {
                format!("beta = {beta_used} (certified bound; working constant violated on samples)")
            };
            Some((
                max <= ENVELOPE_LIMIT,
                format!(
                    "max over t of (f_t - f*)(t - rank(X1) + 4)/(8 beta) = {max:.6e} (limit {ENVELOPE_LIMIT}), {note}"
                ),
            ))
        }
    } else {
        None
    };
    checks.push(CheckLine {
        name: "envelope",
        passed: envelope_check.as_ref().map(|(ok, _)| *ok),
        detail: match &envelope_check {
            Some((_, detail)) => detail.clone(),
            None => "guarantee covers the complete method only".into(),
        },
    });

    checks.push(CheckLine {
        name: "pinv-drift",
        passed: Some(pinv_worst <= PINV_DRIFT_TOL),
        detail: format!(
            "max Frobenius gap to fresh pseudo-inverse {pinv_worst:.3e} over {pinv_checks} audits (tol {PINV_DRIFT_TOL:.0e})"
        ),
    });

    let mut info = Vec::new();
    info.push(format!(
        "run: {} on n={} rank={} m={} tau={} noise={} seed={}",
        spec.algo.name(),
        spec.n,
        spec.r_star,
        spec.m(),
        spec.tau,
        spec.noise,
        spec.seed
    ));
    info.push(format!(
        "{} steps, final f {:.6e}, final gap {:.3e}, final rank {}, {}",
        kinds.len(),
        run.final_f,
        run.final_gap,
        run.state.rank(),
        if run.converged { "gap-converged" } else { "budget exhausted" }
    ));
    info.push(format!(
        "reference: f {:.6e}, gap {:.3e}, trusted {}",
        inst.ref_f, inst.ref_gap, inst.ref_trusted
    ));
    let (delta, lambda_r) = measure_strict_complementarity(&inst.problem, &inst.ref_x, spec.r_star);
    info.push(format!(
        "strict complementarity diagnostics: gradient eigengap {delta:.3e}, lambda_r*(X_ref) {lambda_r:.3e}"
    ));
    if run.eig_failures > 0 {
        info.push(format!("{} eigensolves hit their budget before tolerance", run.eig_failures));
    }

    Ok(VerifyReport { checks, info })
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `argv` (including the program name), runs the subcommand, prints
/// results, and returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Solve(args) => resolve(args, "alg1", "trace.csv").and_then(|r| {
            if r.algos.len() != 1 {
                return Err(CliError::Usage(
                    "solve takes exactly one algorithm (use `compare` for several)".into(),
                ));
            }
            cmd_solve(&r.spec)
        }),
        Cmd::Compare(args) => resolve(args, "alg1,fw", "compare.csv").and_then(|r| {
            let specs: Vec<RunSpec> = r
                .algos
                .iter()
                .map(|&algo| {
                    let mut s = r.spec.clone();
                    s.algo = algo;
                    s
                })
                .collect();
            cmd_compare(&specs)
        }),
        Cmd::Verify(args) => resolve(args, "alg1", "trace.csv").and_then(|r| {
            if r.algos.len() != 1 {
                return Err(CliError::Usage("verify takes exactly one algorithm".into()));
            }
            let report = cmd_verify(&r.spec)?;
            print!("{}", report.render());
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Invariant("invariant violations reported above".into()))
            }
        }),
        Cmd::Gen(args) => resolve(args, "alg1", "instance.txt").and_then(|r| cmd_gen(&r.spec)),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
