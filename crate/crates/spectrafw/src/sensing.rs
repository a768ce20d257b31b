//! Matrix-sensing benchmark problems.
//!
//! The task is recovering an unknown low-rank matrix in the spectrahedron
//! from random quadratic measurements: given vectors `a_i` and observations
//! `b_i`, minimize
//!
//! ```text
//! f(X) = 1/2 * sum_i (a_i^T (tau X) a_i - b_i)^2.
//! ```
//!
//! This module generates seeded instances, implements the objective oracle
//! (with exact directional quadratics, so line searches are closed-form),
//! produces dual-gap-certified reference optima for error curves, and
//! measures the strict-complementarity margin of a solved instance.
//!
//! Two instance flavors exist:
//!
//! * **Noisy** (default): the ground truth has unit Frobenius norm and the
//!   observations carry additive noise of relative norm 1/2; the optimum
//!   does not interpolate, so the gradient at it is nonzero.
//! * **Noiseless** (`noise = false`): the ground truth is trace-normalized
//!   so it is itself feasible, and with `tau = 1` it attains `f = 0` with a
//!   vanishing gradient — the regime where strict complementarity fails.

use crate::linalg::{dot, full_eigendecomposition, norm, SymMat};
use crate::objective::{Objective, SegmentDir};
use crate::rng::{
    derive_seed, gaussian_vec, stream_rng, STREAM_BETA_POWER, STREAM_INSTANCE, STREAM_REFERENCE,
};
use crate::solver::{dual_gap, solve, SolverConfig};
use rayon::prelude::*;
use std::path::Path;
use std::sync::Mutex;

/// Measurement-cache refreshes: after this many incremental moves the cached
/// quadratic forms are recomputed from scratch to stop error accumulation.
/// Incremental updates drift by roughly one unit of relative rounding per
/// move, so this period keeps cached objective values accurate to about
/// `1e-14` relative — benchmark error columns stay meaningful down to
/// `1e-12 * f`, well below every fit or threshold used downstream.
pub const EXACT_RECOMPUTE_PERIOD: usize = 10;

/// Dual-gap tolerance that certifies a reference solution.
pub const REFERENCE_GAP_TOL: f64 = 1e-11;

/// Relative objective progress per reference chunk below which the run is
/// declared stalled at the arithmetic floor. On instances whose optimal
/// value is large (noisy measurements), `f` quantizes at `eps * f ~ 1e-13`
/// relative, line searches below that resolution are noise-driven, and the
/// dual gap plateaus around `sqrt(2 * beta * eps * f)` — no iteration budget
/// pushes a certificate to `1e-11` there. A stalled reference is still a
/// trustworthy `f*` proxy: its objective error is at the quantization floor,
/// orders of magnitude below every threshold used downstream.
pub const REFERENCE_STALL_REL: f64 = 1e-12;

/// Iterations per chunk between exact objective re-evaluations in
/// [`reference_solution`].
const REFERENCE_CHUNK: usize = 200;

/// The working smoothness constant used by the experiments: `n^2 / 2`.
pub fn default_beta(n: usize) -> f64 {
    (n as f64) * (n as f64) / 2.0
}

/// Errors from instance construction or (de)serialization.
#[derive(Debug, thiserror::Error)]
pub enum SensingError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A sensing instance: measurement vectors, observations, and the ground
/// truth they were taken from.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    /// Matrix dimension.
    pub n: usize,
    /// Number of measurements.
    pub m: usize,
    /// Rank of the ground truth.
    pub r_star: usize,
    /// Scaling applied to the iterate inside the residuals.
    pub tau: f64,
    /// Whether observations carry additive noise.
    pub noise: bool,
    /// Seed the instance was generated from.
    pub seed: u64,
    /// Measurement vectors, row-major `m x n`.
    pub a: Vec<f64>,
    /// Observations, length `m`.
    pub b: Vec<f64>,
    /// Ground-truth matrix (unit Frobenius norm when noisy, unit trace when
    /// noiseless).
    pub x_sharp: SymMat,
}

/// Generates a seeded instance.
///
/// The ground-truth factor is `n x r_star` standard Gaussian; the assembled
/// outer product is normalized to unit Frobenius norm (noisy mode) or unit
/// trace (noiseless mode, making it feasible and hence optimal at
/// `tau = 1`). Measurement vectors are i.i.d. standard Gaussian, and noisy
/// observations add `(||b_sharp|| / 2) v` for a uniformly random unit
/// vector `v`. The draw order (factor, then measurements, then noise) is
/// fixed so the ground truth can be regenerated from the seed alone.
pub fn generate_problem(
    n: usize,
    r_star: usize,
    m: usize,
    tau: f64,
    noise: bool,
    seed: u64,
) -> Result<SensingProblem, SensingError> {
    if r_star == 0 || r_star > n {
        return Err(SensingError::InvalidShape(format!(
            "need 1 <= r_star <= n, got r_star={r_star}, n={n}"
        )));
    }
    if m == 0 {
        return Err(SensingError::InvalidShape("need at least one measurement".into()));
    }
    let mut rng = stream_rng(seed, STREAM_INSTANCE);
    let x_sharp = ground_truth(n, r_star, noise, &mut rng);
    let a = gaussian_vec(&mut rng, m * n);
    let mut b: Vec<f64> = (0..m).map(|i| x_sharp.quad_form(&a[i * n..(i + 1) * n])).collect();
    if noise {
        let mut v = gaussian_vec(&mut rng, m);
        let s = norm(&v);
        for x in v.iter_mut() {
            *x /= s;
        }
        let level = norm(&b) / 2.0;
        for (bi, vi) in b.iter_mut().zip(&v) {
            *bi += level * vi;
        }
    }
    Ok(SensingProblem { n, m, r_star, tau, noise, seed, a, b, x_sharp })
}

/// Draws and normalizes the ground truth; factored out so deserialization
/// can replay exactly the same stream prefix.
fn ground_truth(n: usize, r_star: usize, noise: bool, rng: &mut crate::rng::SolverRng) -> SymMat {
    let u = gaussian_vec(rng, n * r_star);
    let mut x = SymMat::zeros(n);
    let mut col = vec![0.0; n];
    for k in 0..r_star {
        for i in 0..n {
            col[i] = u[i * r_star + k];
        }
        x.add_outer(1.0, &col);
    }
    let s = if noise { x.fro_norm() } else { x.trace() };
    x.scale_in_place(1.0 / s);
    x
}

impl SensingProblem {
    /// The `i`-th measurement vector.
    pub fn measurement(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// Serializes to a line-oriented text container. Floats are written in
    /// shortest-round-trip decimal form, so parsing recovers them exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("spectrafw-instance v1\n");
        out.push_str(&format!("n {}\n", self.n));
        out.push_str(&format!("m {}\n", self.m));
        out.push_str(&format!("r_star {}\n", self.r_star));
        out.push_str(&format!("tau {}\n", self.tau));
        out.push_str(&format!("noise {}\n", u8::from(self.noise)));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push('b');
        for v in &self.b {
            out.push(' ');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
        for i in 0..self.m {
            out.push('a');
            for v in self.measurement(i) {
                out.push(' ');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text container written by [`SensingProblem::to_text`].
    /// The ground truth is regenerated from the stored seed (the generator
    /// draws it before anything else, so the replay is exact).
    pub fn from_text(text: &str) -> Result<Self, SensingError> {
        let fail = |line: usize, msg: &str| SensingError::Parse { line, msg: msg.into() };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| fail(1, "empty input"))?;
        if header.trim() != "spectrafw-instance v1" {
            return Err(fail(1, "unrecognized header"));
        }
        let mut scalar = |name: &str| -> Result<(usize, String), SensingError> {
            let (idx, line) = lines.next().ok_or_else(|| fail(0, "truncated input"))?;
            let mut parts = line.split_whitespace();
            let key = parts.next().ok_or_else(|| fail(idx + 1, "blank line"))?;
            if key != name {
                return Err(fail(idx + 1, &format!("expected key '{name}', got '{key}'")));
            }
            let value = parts.next().ok_or_else(|| fail(idx + 1, "missing value"))?;
            Ok((idx + 1, value.to_string()))
        };
        let (ln, v) = scalar("n")?;
        let n: usize = v.parse().map_err(|_| fail(ln, "bad n"))?;
        let (ln, v) = scalar("m")?;
        let m: usize = v.parse().map_err(|_| fail(ln, "bad m"))?;
        let (ln, v) = scalar("r_star")?;
        let r_star: usize = v.parse().map_err(|_| fail(ln, "bad r_star"))?;
        let (ln, v) = scalar("tau")?;
        let tau: f64 = v.parse().map_err(|_| fail(ln, "bad tau"))?;
        let (ln, v) = scalar("noise")?;
        let noise = match v.as_str() {
            "0" => false,
            "1" => true,
            _ => return Err(fail(ln, "noise must be 0 or 1")),
        };
        let (ln, v) = scalar("seed")?;
        let seed: u64 = v.parse().map_err(|_| fail(ln, "bad seed"))?;
        if r_star == 0 || r_star > n || m == 0 {
            return Err(fail(ln, "inconsistent dimensions"));
        }

        let parse_row = |idx: usize, line: &str, key: &str, len: usize| -> Result<Vec<f64>, SensingError> {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(k) if k == key => {}
                _ => return Err(fail(idx + 1, &format!("expected '{key}' row"))),
            }
            let vals: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vals = vals.map_err(|_| fail(idx + 1, "bad float"))?;
            if vals.len() != len {
                return Err(fail(idx + 1, &format!("expected {len} values, got {}", vals.len())));
            }
            Ok(vals)
        };
        let (idx, line) = lines.next().ok_or_else(|| fail(0, "missing observations"))?;
        let b = parse_row(idx, line, "b", m)?;
        let mut a = Vec::with_capacity(m * n);
        for _ in 0..m {
            let (idx, line) = lines.next().ok_or_else(|| fail(0, "missing measurement row"))?;
            a.extend(parse_row(idx, line, "a", n)?);
        }
        let mut rng = stream_rng(seed, STREAM_INSTANCE);
        let x_sharp = ground_truth(n, r_star, noise, &mut rng);
        Ok(SensingProblem { n, m, r_star, tau, noise, seed, a, b, x_sharp })
    }

    /// Writes the text container to a file.
    pub fn write_to(&self, path: &Path) -> Result<(), SensingError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Reads an instance from a file written by [`SensingProblem::write_to`].
    pub fn read_from(path: &Path) -> Result<Self, SensingError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

/// Cached quadratic forms `a_i^T X a_i` for one evaluation point.
struct MeasCache {
    x: SymMat,
    meas: Vec<f64>,
    moves_since_exact: usize,
}

/// The sensing objective oracle.
///
/// The dominant cost of an evaluation is the `m` quadratic forms
/// `a_i^T X a_i`; they are computed once per point and shared between the
/// value, the gradient, and every directional quadratic at that point. When
/// the solver commits a rank-one move the cache advances incrementally in
/// `O(m n)` (the forms are affine along such segments), with a full
/// recompute every [`EXACT_RECOMPUTE_PERIOD`] moves.
pub struct SensingOracle<'a> {
    problem: &'a SensingProblem,
    beta: f64,
    cache: Mutex<Option<MeasCache>>,
}

impl<'a> SensingOracle<'a> {
    /// Oracle with the experiments' working smoothness constant `n^2 / 2`.
    pub fn new(problem: &'a SensingProblem) -> Self {
        Self::with_beta(problem, default_beta(problem.n))
    }

    /// Oracle with an explicit smoothness constant.
    pub fn with_beta(problem: &'a SensingProblem, beta: f64) -> Self {
        Self { problem, beta, cache: Mutex::new(None) }
    }

    pub fn problem(&self) -> &SensingProblem {
        self.problem
    }

    /// A certified smoothness bound: `tau^2 * sum_i ||a_i||^4`. Always valid,
    /// usually far looser than the working constant.
    pub fn beta_bound(&self) -> f64 {
        let p = self.problem;
        let sum: f64 = (0..p.m)
            .map(|i| {
                let s = dot(p.measurement(i), p.measurement(i));
                s * s
            })
            .sum();
        p.tau * p.tau * sum
    }

    /// Objective value recomputed from scratch, bypassing the incremental
    /// measurement cache entirely. Used where exactness outranks speed
    /// (reference objective values that every error column subtracts).
    pub fn value_exact(&self, x: &SymMat) -> f64 {
        let meas = self.compute_meas(x);
        let rho = self.residuals(&meas);
        0.5 * kahan_sum(rho.iter().map(|r| r * r))
    }

    /// Estimate of the sharp smoothness constant
    /// `max { sum_i tau^2 (a_i^T D a_i)^2 : ||D||_F = 1 }` by power iteration
    /// on the (PSD, self-adjoint) Hessian operator
    /// `D -> tau^2 sum_i (a_i^T D a_i) a_i a_i^T`. Sits between the working
    /// constant (an underestimate on desk-scale Gaussian instances) and
    /// [`Self::beta_bound`] (orders of magnitude too loose); converges from
    /// below, so callers protecting a step size may add a small safety
    /// factor. Deterministic for a given `seed`.
    pub fn estimate_beta(&self, iters: usize, seed: u64) -> f64 {
        let p = self.problem;
        let n = p.n;
        let mut rng = stream_rng(seed, STREAM_BETA_POWER);
        let mut d = {
            let g = gaussian_vec(&mut rng, n * n);
            SymMat::from_fn(n, |i, j| 0.5 * (g[i * n + j] + g[j * n + i]))
        };
        let norm = d.fro_norm();
        if norm == 0.0 || p.m == 0 {
            return 0.0;
        }
        d = d.scaled(1.0 / norm);
        let mut rayleigh = 0.0;
        for _ in 0..iters.max(1) {
            let coeff: Vec<f64> =
                (0..p.m).map(|i| p.tau * p.tau * d.quad_form(p.measurement(i))).collect();
            let hd = self.weighted_outer_sum(&coeff);
            rayleigh = d.inner(&hd);
            let hnorm = hd.fro_norm();
            if !hnorm.is_finite() || hnorm == 0.0 {
                break;
            }
            d = hd.scaled(1.0 / hnorm);
        }
        rayleigh
    }

    /// Quadratic forms `a_i^T x a_i` for all measurements, from cache when
    /// `x` is the cached point (exact byte comparison).
    fn measurements_at(&self, x: &SymMat) -> Vec<f64> {
        {
            let guard = self.cache.lock().unwrap();
            if let Some(c) = guard.as_ref() {
                if c.x.as_slice() == x.as_slice() {
                    return c.meas.clone();
                }
            }
        }
        let meas = self.compute_meas(x);
        let mut guard = self.cache.lock().unwrap();
        *guard = Some(MeasCache { x: x.clone(), meas: meas.clone(), moves_since_exact: 0 });
        meas
    }

    fn compute_meas(&self, x: &SymMat) -> Vec<f64> {
        let p = self.problem;
        (0..p.m).into_par_iter().map(|i| x.quad_form(p.measurement(i))).collect()
    }

    /// Residuals `tau * (a_i^T x a_i) - b_i` from a measurement vector.
    fn residuals(&self, meas: &[f64]) -> Vec<f64> {
        meas.iter().zip(&self.problem.b).map(|(m, b)| self.problem.tau * m - b).collect()
    }

    /// `sum_i coeff_i a_i a_i^T`. Rows are independent, and each row sums
    /// over measurements in a fixed order, so the result is bitwise
    /// deterministic regardless of thread count.
    fn weighted_outer_sum(&self, coeff: &[f64]) -> SymMat {
        let p = self.problem;
        let n = p.n;
        let mut flat = vec![0.0; n * n];
        flat.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for i in 0..p.m {
                let ai = p.measurement(i);
                let w = coeff[i] * ai[j];
                for k in j..n {
                    row[k] += w * ai[k];
                }
            }
        });
        SymMat::from_fn(n, |i, j| {
            let (lo, hi) = (i.min(j), i.max(j));
            flat[lo * n + hi]
        })
    }
}

/// Compensated (Kahan) sum; the objective aggregates up to tens of
/// thousands of squared residuals spanning many magnitudes.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

impl Objective for SensingOracle<'_> {
    fn value(&self, x: &SymMat) -> f64 {
        let meas = self.measurements_at(x);
        let rho = self.residuals(&meas);
        0.5 * kahan_sum(rho.iter().map(|r| r * r))
    }

    fn gradient(&self, x: &SymMat) -> SymMat {
        let p = self.problem;
        let meas = self.measurements_at(x);
        let rho = self.residuals(&meas);
        let coeff: Vec<f64> = rho.iter().map(|r| p.tau * r).collect();
        self.weighted_outer_sum(&coeff)
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn segment_quadratic(&self, base: &SymMat, dir: &SegmentDir) -> Option<[f64; 3]> {
        let p = self.problem;
        let meas = self.measurements_at(base);
        let rho = self.residuals(&meas);
        // Along X(theta) = base + theta * D each residual is affine:
        // rho_i(theta) = rho_i + theta * s_i with s_i = tau * a_i^T D a_i.
        let s: Vec<f64> = match dir {
            SegmentDir::Structured { x_coeff, terms } => {
                let dots: Vec<Vec<f64>> = terms
                    .iter()
                    .map(|(_, v)| (0..p.m).map(|i| dot(p.measurement(i), v)).collect())
                    .collect();
                (0..p.m)
                    .map(|i| {
                        let mut d = x_coeff * meas[i];
                        for ((c, _), dv) in terms.iter().zip(&dots) {
                            d += c * dv[i] * dv[i];
                        }
                        p.tau * d
                    })
                    .collect()
            }
            SegmentDir::Dense(d) => {
                (0..p.m).into_par_iter().map(|i| p.tau * d.quad_form(p.measurement(i))).collect()
            }
        };
        let a = 0.5 * kahan_sum(s.iter().map(|si| si * si));
        let b = kahan_sum(rho.iter().zip(&s).map(|(r, si)| r * si));
        let c = 0.5 * kahan_sum(rho.iter().map(|r| r * r));
        Some([a, b, c])
    }

    fn note_move(&self, base: &SymMat, dir: &SegmentDir, theta: f64, y: &SymMat) {
        let p = self.problem;
        let mut guard = self.cache.lock().unwrap();
        let incremental = match (guard.as_ref(), dir) {
            (Some(c), SegmentDir::Structured { x_coeff, terms })
                if c.x.as_slice() == base.as_slice()
                    && c.moves_since_exact + 1 < EXACT_RECOMPUTE_PERIOD =>
            {
                let mut meas = c.meas.clone();
                let scale = 1.0 + theta * x_coeff;
                for (_, v) in terms.iter() {
                    debug_assert_eq!(v.len(), p.n);
                }
                for (i, mi) in meas.iter_mut().enumerate() {
                    let mut add = 0.0;
                    for (cj, v) in terms.iter() {
                        let d = dot(p.measurement(i), v);
                        add += cj * d * d;
                    }
                    *mi = *mi * scale + theta * add;
                }
                Some(MeasCache {
                    x: y.clone(),
                    meas,
                    moves_since_exact: c.moves_since_exact + 1,
                })
            }
            _ => None,
        };
        *guard = Some(incremental.unwrap_or_else(|| MeasCache {
            x: y.clone(),
            meas: self.compute_meas(y),
            moves_since_exact: 0,
        }));
    }
}

/// A near-optimum of a sensing instance, used as the `f*` proxy for error
/// curves. Trust it when [`ReferenceSolution::trusted`] holds.
pub struct ReferenceSolution {
    /// The reference iterate.
    pub x: SymMat,
    /// Its objective value, recomputed from scratch (no incremental drift).
    pub f: f64,
    /// Certificate-grade (dense) dual gap at `x`.
    pub gap: f64,
    /// The gap reached [`REFERENCE_GAP_TOL`].
    pub certified: bool,
    /// The run's objective progress fell below [`REFERENCE_STALL_REL`]
    /// per chunk — it hit the floating-point resolution floor of `f`.
    pub stalled: bool,
}

impl ReferenceSolution {
    /// Whether `f` is a trustworthy optimal-value proxy: either the dual gap
    /// certifies it outright, or the run stalled at the arithmetic floor
    /// where no representable iterate improves meaningfully on it.
    pub fn trusted(&self) -> bool {
        self.certified || self.stalled
    }
}

/// Runs the complete method toward a dual gap of [`REFERENCE_GAP_TOL`] with
/// a seed derived from the instance seed (so reference runs are reproducible
/// and independent of benchmark seeds).
///
/// The run proceeds in chunks of [`REFERENCE_CHUNK`] iterations, between
/// which the objective is re-evaluated from scratch. It stops early when a
/// chunk certifies the gap (the engine confirms any crossing with a dense
/// eigendecomposition) or when a chunk improves the exact objective by less
/// than [`REFERENCE_STALL_REL`] relative — further iterations would only
/// wander the floating-point plateau. On noisy instances with a large
/// optimal value only the stall exit is reachable; see
/// [`REFERENCE_STALL_REL`] for why that is still a trustworthy reference.
pub fn reference_solution(
    problem: &SensingProblem,
    beta: f64,
    max_iters: usize,
) -> ReferenceSolution {
    let oracle = SensingOracle::with_beta(problem, beta);
    let ref_seed = derive_seed(problem.seed, STREAM_REFERENCE);
    let mut config = SolverConfig::new(beta);
    config.gap_tol = 0.1 * REFERENCE_GAP_TOL;
    let mut x = SymMat::identity(problem.n).scaled(1.0 / problem.n as f64);
    let mut f_prev = oracle.value_exact(&x);
    let mut used = 0usize;
    let mut chunk_idx = 0u64;
    let mut stalled = false;
    while used < max_iters {
        let chunk = REFERENCE_CHUNK.min(max_iters - used);
        config.max_iters = chunk;
        config.seed = derive_seed(ref_seed, chunk_idx);
        chunk_idx += 1;
        let run = solve(x, &oracle, &config).expect("feasible start");
        used += run.trace.len();
        x = run.state.x().clone();
        if run.converged {
            break;
        }
        let f_now = oracle.value_exact(&x);
        if f_prev - f_now <= REFERENCE_STALL_REL * f_now.abs().max(1.0) {
            stalled = true;
            break;
        }
        f_prev = f_now;
    }
    let f = oracle.value_exact(&x);
    let grad = oracle.gradient(&x);
    let gap = dual_gap(&x, &grad);
    let certified = gap <= REFERENCE_GAP_TOL;
    ReferenceSolution { x, f, gap, certified, stalled }
}

/// Measures the strict-complementarity margin at a near-optimal point:
/// returns `(delta, lambda_rstar)` where `delta` is the gradient eigengap
/// separating the `r_star` smallest eigenvalues from the rest, and
/// `lambda_rstar` is the `r_star`-th largest eigenvalue of the point itself.
/// Both are diagnostics — reported, never asserted.
pub fn measure_strict_complementarity(
    problem: &SensingProblem,
    x_ref: &SymMat,
    r_star: usize,
) -> (f64, f64) {
    let oracle = SensingOracle::new(problem);
    let grad = oracle.gradient(x_ref);
    let gd = full_eigendecomposition(&grad).expect("gradient decomposition");
    let xd = full_eigendecomposition(x_ref).expect("iterate decomposition");
    let n = problem.n;
    let delta = if r_star < n {
        // Descending order: position n - r_star (1-based) is values[n - r_star - 1].
        gd.values[n - r_star - 1] - gd.values[n - r_star]
    } else {
        0.0
    };
    (delta, xd.values[r_star - 1])
}

/// Empirically checks the working smoothness constant on random feasible
/// pairs: `f(Y) <= f(X) + <grad f(X), Y - X> + beta/2 ||Y - X||^2`. Returns
/// false if any sampled pair violates it (callers then fall back to
/// [`SensingOracle::beta_bound`]).
pub fn working_beta_holds(
    oracle: &SensingOracle<'_>,
    beta: f64,
    pairs: usize,
    rng: &mut crate::rng::SolverRng,
) -> bool {
    let n = oracle.problem().n;
    let random_feasible = |rng: &mut crate::rng::SolverRng| {
        // Random rank-3-ish feasible point: normalized convex combination
        // of random unit outer products.
        let mut x = SymMat::zeros(n);
        for _ in 0..3 {
            let mut v = gaussian_vec(rng, n);
            let s = norm(&v);
            for vi in v.iter_mut() {
                *vi /= s;
            }
            x.add_outer(1.0 / 3.0, &v);
        }
        x
    };
    for _ in 0..pairs {
        let x = random_feasible(rng);
        let y = random_feasible(rng);
        let fx = oracle.value(&x);
        let fy = oracle.value(&y);
        let grad = oracle.gradient(&x);
        let d = y.sub(&x);
        let bound = fx + grad.inner(&d) + 0.5 * beta * d.fro_norm().powi(2);
        if fy > bound * (1.0 + 1e-12) + 1e-12 {
            return false;
        }
    }
    true
}
