//! The rank-one conditional-gradient solver.
//!
//! Each iteration evaluates the gradient once, certifies progress with a
//! dual gap, then either *drops* the worst in-image spectral direction
//! outright (when doing so cannot hurt) or picks the best of three rank-one
//! candidates by exact line search:
//!
//! * the classic Frank-Wolfe blend toward the best vertex,
//! * an away shrink along the worst in-image direction,
//! * a pairwise swap moving the full mass of a *random* in-image direction
//!   onto the best direction for it (the randomization is what lets the
//!   method escape bad supports without increasing rank on average).
//!
//! All per-iteration linear algebra is O(n^2) matrix-vector work: the two
//! eigenvector subproblems run matrix-free, and the iterate's
//! pseudo-inverse/projector pair is maintained by rank-one updates (see
//! [`crate::state`]).
//!
//! [`StepPolicy`] switches candidate families on and off, which is how the
//! baseline ablations (no drops, no pairwise, derandomized pairwise) reuse
//! this engine unchanged.

use crate::linalg::{
    self, dot, full_eigendecomposition, lanczos, leading_eigenpair, leading_eigenpair_from,
    NegOp, SymMat, SymOp,
};
use crate::objective::{Objective, SegmentDir};
use crate::rng::{stream_rng, SolverRng, FIXED_EIG_BASE, STREAM_PAIR_DIRECTION};
use crate::state::{IterateState, StateError};
use std::time::Instant;

/// Drops and away segments run only when the removal leaves at least this
/// fraction of the mass. Both step kinds renormalize by `1 / (1 - lambda)`,
/// which amplifies rounding in the subtraction by that factor: removing all
/// but `1e-10` of the mass would scale `eps`-level noise to `~1e-6` and eject
/// the iterate from the feasible set in a single step. The margin bounds the
/// amplification at 100x (rounding impact ~1e-13, below every audit
/// tolerance); near-total removals are served by the renormalization-free
/// vertex and pairwise steps instead.
const DROP_LAMBDA_MARGIN: f64 = 1e-2;
/// Relative slack when testing that a drop does not increase the objective.
const DROP_ACCEPT_SLACK: f64 = 1e-14;
/// Away-step sizes within this relative margin of the removal limit are
/// taken as full drops; the margin keeps the pseudo-inverse update branch
/// decision far away from its own numerical threshold.
const AWAY_ENDPOINT_MARGIN: f64 = 1e-9;
/// Cap on the away reparametrization `theta = eta / (1 - eta)`, matching the
/// conditioning margin (`theta <= 99` means `eta <= 0.99`); redundant with
/// [`DROP_LAMBDA_MARGIN`] but keeps the line-search domain bounded on its
/// own terms.
const AWAY_THETA_CAP: f64 = 99.0;

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Smoothness (curvature) constant used by the pairwise subproblem.
    pub beta: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Stop once the dual gap falls to this value; `f64::NEG_INFINITY`
    /// disables the early stop entirely.
    pub gap_tol: f64,
    /// Spectral-shift multiplier in the constrained eigenvector operator;
    /// any positive value is valid.
    pub zeta: f64,
    /// Seed for the per-iteration random direction stream.
    pub seed: u64,
    /// Relative interval tolerance for derivative-free line searches.
    pub line_search_tol: f64,
    /// Steps between unconditional state refreshes.
    pub refresh_period: usize,
}

impl SolverConfig {
    /// Defaults for a given smoothness constant.
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            max_iters: 1000,
            gap_tol: 1e-10,
            zeta: 1.0,
            seed: 0,
            line_search_tol: 1e-12,
            refresh_period: crate::state::DEFAULT_REFRESH_PERIOD,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// The kind of step an iteration executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Full removal of an in-image direction (rank decreases).
    Drop,
    /// Convex blend toward the best vertex.
    Fw,
    /// Shrink along the worst in-image direction.
    Away,
    /// Full-mass swap of one in-image direction for a better one.
    Pairwise,
    /// Rank-r block update (produced only by the block baseline; costs the
    /// configured block rank in rank-one updates).
    Block,
}

impl StepKind {
    /// Stable lowercase name (used in CSV traces).
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Drop => "drop",
            StepKind::Fw => "fw",
            StepKind::Away => "away",
            StepKind::Pairwise => "pairwise",
            StepKind::Block => "block",
        }
    }

    /// Inverse of [`StepKind::name`].
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "drop" => StepKind::Drop,
            "fw" => StepKind::Fw,
            "away" => StepKind::Away,
            "pairwise" => StepKind::Pairwise,
            "block" => StepKind::Block,
            _ => return None,
        })
    }
}

/// One executed iteration, recorded *before* the step: `f_value`, `dual_gap`
/// and `rank` describe the iterate the step departed from, and
/// `rank1_updates` counts updates spent reaching it.
#[derive(Debug, Clone)]
pub struct TraceRow {
    /// 1-based iteration counter.
    pub iter: usize,
    /// Objective at the iterate.
    pub f_value: f64,
    /// Dual gap certificate at the iterate (nonnegative up to rounding).
    pub dual_gap: f64,
    /// Step taken from this iterate.
    pub step_kind: StepKind,
    /// Rank of the iterate.
    pub rank: usize,
    /// Cumulative rank-one updates spent before this iteration.
    pub rank1_updates: usize,
    /// Seconds since the run started (excluded from determinism guarantees).
    pub elapsed: f64,
    /// True if any eigensolve this iteration returned unconverged.
    pub eig_flagged: bool,
}

/// Candidate-family switches; [`StepPolicy::full`] is the complete method.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    /// Try the unconditional drop branch first.
    pub drop_steps: bool,
    /// Offer the away candidate.
    pub away_steps: bool,
    /// Offer the pairwise candidate.
    pub pairwise_steps: bool,
    /// Use the worst in-image direction instead of a random one in the
    /// pairwise candidate (makes the method fully deterministic).
    pub deterministic_pairwise: bool,
}

impl StepPolicy {
    /// The complete method: drop-first, then best of FW/away/pairwise.
    pub fn full() -> Self {
        Self { drop_steps: true, away_steps: true, pairwise_steps: true, deterministic_pairwise: false }
    }
    /// Plain Frank-Wolfe with line search.
    pub fn fw_only() -> Self {
        Self { drop_steps: false, away_steps: false, pairwise_steps: false, deterministic_pairwise: false }
    }
    /// FW + away candidates only (no drops, no pairwise).
    pub fn away_variant() -> Self {
        Self { drop_steps: false, away_steps: true, pairwise_steps: false, deterministic_pairwise: false }
    }
    /// All three candidates but never the unconditional drop branch.
    pub fn no_drop() -> Self {
        Self { drop_steps: false, away_steps: true, pairwise_steps: true, deterministic_pairwise: false }
    }
    /// The complete method with the pairwise direction derandomized.
    pub fn deterministic() -> Self {
        Self { drop_steps: true, away_steps: true, pairwise_steps: true, deterministic_pairwise: true }
    }
}

/// A constructed (not yet committed) successor.
pub struct StepCandidate {
    pub kind: StepKind,
    /// Objective value at `next` predicted by the line search (exact when
    /// the oracle provides segment quadratics).
    pub f_value: f64,
    pub next: IterateState,
    /// Step size in the candidate's own parametrization.
    pub theta: f64,
    dir: OwnedDir,
}

/// Owned description of a segment direction so candidates can outlive the
/// borrowed vectors they were built from.
enum OwnedDir {
    Structured { x_coeff: f64, terms: Vec<(f64, Vec<f64>)> },
}

impl OwnedDir {
    fn view<'a>(&'a self, buf: &'a mut Vec<(f64, &'a [f64])>) -> SegmentDir<'a> {
        match self {
            OwnedDir::Structured { x_coeff, terms } => {
                buf.clear();
                for (c, v) in terms {
                    buf.push((*c, v.as_slice()));
                }
                SegmentDir::Structured { x_coeff: *x_coeff, terms: buf }
            }
        }
    }
}

/// A finished run: final state, per-iteration trace, and solve health.
pub struct RunResult {
    pub state: IterateState,
    pub trace: Vec<TraceRow>,
    /// Objective at the final state.
    pub final_f: f64,
    /// Dual gap at the final state (the certifying value when `converged`).
    pub final_gap: f64,
    /// Whether the dual gap reached `gap_tol` within budget.
    pub converged: bool,
    /// Iterations on which some eigensolve missed its tolerance.
    pub eig_failures: usize,
}

/// Eigenvector of the largest constrained Rayleigh quotient
/// `max { v^T G v : v in Im(X), ||v|| = 1 }`, computed matrix-free on the
/// shifted projected operator `P G P + shift * P`. The shift (a multiple of
/// `||G||_F`, scaled by `1 + zeta`) pushes the whole in-image spectrum above
/// the kernel's zero eigenvalue without moving the argmax.
pub fn in_image_max_eigvec(
    state: &IterateState,
    grad: &SymMat,
    zeta: f64,
    rng: &mut SolverRng,
) -> Result<lanczos::EigPair, StateError> {
    struct ProjectedShifted<'a> {
        proj: &'a SymMat,
        grad: &'a SymMat,
        shift: f64,
    }
    impl SymOp for ProjectedShifted<'_> {
        fn dim(&self) -> usize {
            self.proj.n()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let px = self.proj.matvec(x);
            let gpx = self.grad.matvec(&px);
            self.proj.matvec_into(&gpx, y);
            for i in 0..y.len() {
                y[i] += self.shift * px[i];
            }
        }
    }
    let n = state.n();
    let shift = (1.0 + zeta) * grad.fro_norm() + f64::MIN_POSITIVE;
    let op = ProjectedShifted { proj: state.proj(), grad, shift };
    let start = {
        let z = crate::rng::gaussian_vec(rng, n);
        state.proj().matvec(&z)
    };
    let pair = leading_eigenpair_from(
        &op,
        Some(&start),
        lanczos::DEFAULT_EIG_TOL,
        lanczos::default_eig_budget(n),
        rng,
    )?;
    // Re-project and renormalize: guarantees the membership precondition of
    // the step constructors; then report the plain (unshifted) Rayleigh
    // quotient so the value is meaningful to callers.
    let mut v = state.proj().matvec(&pair.vector);
    if linalg::normalize(&mut v) < 1e-8 {
        v = state.sample_unit_in_image(rng);
    }
    let value = grad.quad_form(&v);
    Ok(lanczos::EigPair { value, vector: v, residual: pair.residual, converged: pair.converged })
}

/// Eigenvector of the largest eigenvalue of `beta * gamma * u u^T - G`, the
/// operator whose top direction is the best recipient for mass removed from
/// `u` (the pairwise "plus" direction). Matrix-free: one gradient matvec
/// plus a rank-one correction per application.
pub fn pairwise_plus_direction(
    grad: &SymMat,
    u_minus: &[f64],
    beta: f64,
    gamma: f64,
    rng: &mut SolverRng,
) -> Result<lanczos::EigPair, StateError> {
    struct SwapOp<'a> {
        grad: &'a SymMat,
        u: &'a [f64],
        coeff: f64,
    }
    impl SymOp for SwapOp<'_> {
        fn dim(&self) -> usize {
            self.grad.n()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            self.grad.matvec_into(x, y);
            let c = self.coeff * dot(self.u, x);
            for i in 0..y.len() {
                y[i] = c * self.u[i] - y[i];
            }
        }
    }
    let op = SwapOp { grad, u: u_minus, coeff: beta * gamma };
    let pair = leading_eigenpair(
        &op,
        lanczos::DEFAULT_EIG_TOL,
        lanczos::default_eig_budget(grad.n()),
        rng,
    )?;
    Ok(pair)
}

/// Minimizes `f(base + theta * dir)` over `theta` in `[0, theta_max]`.
///
/// With oracle-provided quadratic coefficients the vertex is closed-form;
/// otherwise a golden-section search runs on dense evaluations down to a
/// relative interval of `tol`. Either way the result never exceeds the value
/// at `theta = 0`.
pub fn line_search<O: Objective + ?Sized>(
    oracle: &O,
    base: &SymMat,
    dir: &SegmentDir,
    theta_max: f64,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(theta_max >= 0.0);
    if theta_max == 0.0 {
        let f0 = segment_value(oracle, base, dir, 0.0, None);
        return (0.0, f0);
    }
    if let Some([a, b, c]) = oracle.segment_quadratic(base, dir) {
        let eval = |t: f64| a * t * t + b * t + c;
        let theta = if a > 0.0 {
            (-b / (2.0 * a)).clamp(0.0, theta_max)
        } else if b < 0.0 {
            theta_max
        } else {
            0.0
        };
        let (f_at, f0) = (eval(theta), c);
        return if f_at <= f0 { (theta, f_at) } else { (0.0, f0) };
    }
    // Derivative-free fallback: golden-section on the dense segment.
    let dense = dir.to_dense(base);
    let eval = |t: f64| {
        let mut y = base.clone();
        y.add_scaled(&dense, t);
        oracle.value(&y)
    };
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0_f64, theta_max);
    let mut m1 = hi - inv_phi * (hi - lo);
    let mut m2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(m1);
    let mut f2 = eval(m2);
    let threshold = tol.max(1e-15) * theta_max.max(1.0);
    while hi - lo > threshold {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - inv_phi * (hi - lo);
            f1 = eval(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + inv_phi * (hi - lo);
            f2 = eval(m2);
        }
    }
    let theta = 0.5 * (lo + hi);
    let f_at = eval(theta);
    let f0 = eval(0.0);
    let f_end = eval(theta_max);
    if f0 <= f_at && f0 <= f_end {
        (0.0, f0)
    } else if f_end < f_at {
        (theta_max, f_end)
    } else {
        (theta, f_at)
    }
}

/// Evaluates `f(base + theta * dir)`, preferring oracle quadratics.
fn segment_value<O: Objective + ?Sized>(
    oracle: &O,
    base: &SymMat,
    dir: &SegmentDir,
    theta: f64,
    quad: Option<[f64; 3]>,
) -> f64 {
    if let Some([a, b, c]) = quad.or_else(|| oracle.segment_quadratic(base, dir)) {
        return a * theta * theta + b * theta + c;
    }
    let dense = dir.to_dense(base);
    let mut y = base.clone();
    y.add_scaled(&dense, theta);
    oracle.value(&y)
}

/// Dual gap `<X, G> - lambda_min(G)` at iterate `x` with gradient `G`: an
/// upper bound on the suboptimality of `x` over the spectrahedron.
///
/// Computed with a full dense eigendecomposition rather than an iterative
/// solver: near an optimum the leading eigenvalue of `-G` is nearly
/// degenerate, and a Krylov method can converge cleanly onto the *second*
/// eigenvector and certify a gap that is too small — or even negative.
/// Certificates must not carry that failure mode; at the matrix sizes this
/// library targets the dense solve is cheap.
pub fn dual_gap(x: &SymMat, grad: &SymMat) -> f64 {
    x.inner(grad) + dense_lambda_max_neg(grad)
}

/// Leading eigenvalue of `-G` by dense decomposition (certificate-grade).
fn dense_lambda_max_neg(grad: &SymMat) -> f64 {
    let n = grad.n();
    let neg = SymMat::from_fn(n, |i, j| -grad.get(i, j));
    let d = full_eigendecomposition(&neg).expect("gradient decomposition");
    d.values[0]
}

/// Everything [`step_once`] needs beyond the state itself.
struct IterCtx<'a, O: Objective + ?Sized> {
    oracle: &'a O,
    config: &'a SolverConfig,
    policy: &'a StepPolicy,
}

/// Outcome of one iteration's decision procedure.
enum StepOutcome {
    /// The gap certificate already meets the stop tolerance; no step taken.
    Converged { dual_gap: f64, eig_flagged: bool },
    /// A step was constructed and should be committed.
    Stepped { chosen: StepCandidate, dual_gap: f64, f_before: f64, eig_flagged: bool },
}

/// Runs one full iteration's decision procedure from `state`, drawing the
/// pairwise direction from `pair_rng` and eigensolver starts from a stream
/// derived from `eig_stream` (fixed base, independent of the run seed).
/// If the dual gap at `state` is at most `gap_tol` the procedure stops
/// before constructing any step (pass `f64::NEG_INFINITY` to force a step).
fn step_once<O: Objective + ?Sized>(
    state: &IterateState,
    ctx: &IterCtx<'_, O>,
    gap_tol: f64,
    pair_rng: &mut SolverRng,
    eig_stream: u64,
) -> Result<StepOutcome, StateError> {
    let x = state.x();
    let f_t = ctx.oracle.value(x);
    let grad = ctx.oracle.gradient(x);
    let policy = ctx.policy;
    let mut eig_flagged = false;

    let mut eig_rng = stream_rng(FIXED_EIG_BASE, eig_stream);

    // Best vertex (for both the gap certificate and the FW candidate).
    let v_plus = leading_eigenpair(
        &NegOp(&grad),
        lanczos::DEFAULT_EIG_TOL,
        lanczos::default_eig_budget(x.n()),
        &mut eig_rng,
    )?;
    eig_flagged |= !v_plus.converged;
    let mut gap = x.inner(&grad) + v_plus.value;
    // The iterative estimate is cheap but not certificate-grade: near an
    // optimum it can lock onto the second eigenvector of `-grad` and read a
    // gap that is spuriously small (even negative). Before declaring
    // convergence, recompute the gap with a dense decomposition and certify
    // only off that value. The dense solve runs at most once per crossing,
    // so typical iterations never pay for it.
    if gap <= gap_tol {
        gap = x.inner(&grad) + dense_lambda_max_neg(&grad);
        if gap <= gap_tol {
            return Ok(StepOutcome::Converged { dual_gap: gap, eig_flagged });
        }
    }

    // The random direction is drawn at a fixed point of every committed
    // iteration — even ones that end in a drop — so the draw sequence
    // depends only on the iteration count, never on which branch executed.
    let u_random = if policy.pairwise_steps && !policy.deterministic_pairwise {
        Some(state.sample_unit_in_image(pair_rng))
    } else {
        None
    };

    // Worst in-image direction, when any candidate family needs it.
    let need_v_minus = policy.drop_steps
        || policy.away_steps
        || (policy.pairwise_steps && policy.deterministic_pairwise);
    let v_minus = if need_v_minus {
        let pair = in_image_max_eigvec(state, &grad, ctx.config.zeta, &mut eig_rng)?;
        eig_flagged |= !pair.converged;
        Some(pair)
    } else {
        None
    };
    let lambda = match &v_minus {
        Some(p) => Some(state.max_removal_coeff(&p.vector)?),
        None => None,
    };

    // Unconditional drop branch: if the worst direction can be removed
    // without increasing f, do that and skip the candidate competition.
    if policy.drop_steps {
        let (vm, lam) = (v_minus.as_ref().unwrap(), lambda.unwrap());
        if lam < 1.0 - DROP_LAMBDA_MARGIN {
            let theta_d = lam / (1.0 - lam);
            let dir = OwnedDir::Structured {
                x_coeff: 1.0,
                terms: vec![(-1.0, vm.vector.clone())],
            };
            let mut buf = Vec::new();
            let f_drop = segment_value(ctx.oracle, x, &dir.view(&mut buf), theta_d, None);
            if f_drop <= f_t + DROP_ACCEPT_SLACK * f_t.abs().max(1.0) {
                let next = state.apply_drop(&vm.vector, lam)?;
                return Ok(StepOutcome::Stepped {
                    chosen: StepCandidate {
                        kind: StepKind::Drop,
                        f_value: f_drop,
                        next,
                        theta: theta_d,
                        dir,
                    },
                    dual_gap: gap,
                    f_before: f_t,
                    eig_flagged,
                });
            }
        }
    }

    // Candidate competition. Construction order fixes tie-breaking:
    // FW, then away, then pairwise; strict improvement is required to
    // displace an earlier candidate.
    let mut candidates: Vec<StepCandidate> = Vec::with_capacity(3);

    // Frank-Wolfe blend toward the best vertex.
    {
        let dir = OwnedDir::Structured {
            x_coeff: -1.0,
            terms: vec![(1.0, v_plus.vector.clone())],
        };
        let mut buf = Vec::new();
        let (eta, f_fw) =
            line_search(ctx.oracle, x, &dir.view(&mut buf), 1.0, ctx.config.line_search_tol);
        let next = state.apply_convex_step(&v_plus.vector, eta)?;
        candidates.push(StepCandidate { kind: StepKind::Fw, f_value: f_fw, next, theta: eta, dir });
    }

    // Away shrink along the worst in-image direction (absent at rank-one
    // points, where the segment has zero length).
    if policy.away_steps {
        let (vm, lam) = (v_minus.as_ref().unwrap(), lambda.unwrap());
        if lam < 1.0 - DROP_LAMBDA_MARGIN {
            let theta_max = (lam / (1.0 - lam)).min(AWAY_THETA_CAP);
            let dir =
                OwnedDir::Structured { x_coeff: 1.0, terms: vec![(-1.0, vm.vector.clone())] };
            let mut buf = Vec::new();
            let (theta, f_aw) = line_search(
                ctx.oracle,
                x,
                &dir.view(&mut buf),
                theta_max,
                ctx.config.line_search_tol,
            );
            let eta = theta / (1.0 + theta);
            // The search landing on the segment end means a full removal:
            // construct it as the drop it is.
            let (next, kind) = if eta >= lam * (1.0 - AWAY_ENDPOINT_MARGIN) {
                (state.apply_drop(&vm.vector, lam)?, StepKind::Drop)
            } else {
                (state.apply_away_step(&vm.vector, eta)?, StepKind::Away)
            };
            candidates.push(StepCandidate { kind, f_value: f_aw, next, theta, dir });
        }
    }

    // Pairwise swap from a random (or derandomized) in-image direction.
    if policy.pairwise_steps {
        let u_minus = match u_random {
            Some(u) => u,
            None => v_minus.as_ref().unwrap().vector.clone(),
        };
        let gamma = state.max_removal_coeff(&u_minus)?;
        let plus = pairwise_plus_direction(
            &grad,
            &u_minus,
            ctx.config.beta,
            gamma,
            &mut eig_rng,
        )?;
        eig_flagged |= !plus.converged;
        let dir = OwnedDir::Structured {
            x_coeff: 0.0,
            terms: vec![(1.0, plus.vector.clone()), (-1.0, u_minus.clone())],
        };
        let mut buf = Vec::new();
        let f_pw = segment_value(ctx.oracle, x, &dir.view(&mut buf), gamma, None);
        let next = state.apply_pairwise_step(&u_minus, &plus.vector, gamma)?;
        candidates
            .push(StepCandidate { kind: StepKind::Pairwise, f_value: f_pw, next, theta: gamma, dir });
    }

    let mut best = 0;
    for i in 1..candidates.len() {
        if candidates[i].f_value < candidates[best].f_value {
            best = i;
        }
    }
    let chosen = candidates.swap_remove(best);
    Ok(StepOutcome::Stepped { chosen, dual_gap: gap, f_before: f_t, eig_flagged })
}

/// One iteration of the complete method from `state`; the random pairwise
/// direction is drawn from `rng`. Returns the successor state and the trace
/// row describing the departed iterate.
pub fn iterate_once<O: Objective + ?Sized>(
    state: &IterateState,
    oracle: &O,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<(IterateState, TraceRow), StateError> {
    iterate_once_with_policy(state, oracle, config, &StepPolicy::full(), rng)
}

/// [`iterate_once`] under an explicit step policy (how the ablation
/// variants take single steps).
pub fn iterate_once_with_policy<O: Objective + ?Sized>(
    state: &IterateState,
    oracle: &O,
    config: &SolverConfig,
    policy: &StepPolicy,
    rng: &mut SolverRng,
) -> Result<(IterateState, TraceRow), StateError> {
    let started = Instant::now();
    let ctx = IterCtx { oracle, config, policy };
    // A single-step call always steps; loop control is the caller's job.
    let out = step_once(state, &ctx, f64::NEG_INFINITY, rng, 0)?;
    let StepOutcome::Stepped { chosen, dual_gap, f_before, eig_flagged } = out else {
        unreachable!("a negative-infinity tolerance never certifies")
    };
    let row = TraceRow {
        iter: 1,
        f_value: f_before,
        dual_gap,
        step_kind: chosen.kind,
        rank: state.rank(),
        rank1_updates: 0,
        elapsed: started.elapsed().as_secs_f64(),
        eig_flagged,
    };
    let mut buf = Vec::new();
    oracle.note_move(state.x(), &chosen.dir.view(&mut buf), chosen.theta, chosen.next.x());
    Ok((chosen.next, row))
}

/// Runs the complete method from `x0` until the dual gap reaches
/// `config.gap_tol` or the iteration budget is spent.
pub fn solve<O: Objective + ?Sized>(
    x0: SymMat,
    oracle: &O,
    config: &SolverConfig,
) -> Result<RunResult, StateError> {
    solve_with_policy(x0, oracle, config, &StepPolicy::full(), |_, _| {})
}

/// [`solve`] with an explicit step policy and a per-iteration observer; the
/// observer sees each departed iterate alongside its trace row (used by the
/// verification machinery to audit feasibility of every iterate).
pub fn solve_with_policy<O: Objective + ?Sized>(
    x0: SymMat,
    oracle: &O,
    config: &SolverConfig,
    policy: &StepPolicy,
    mut observer: impl FnMut(&IterateState, &TraceRow),
) -> Result<RunResult, StateError> {
    let started = Instant::now();
    let mut state = IterateState::init(x0)?;
    let mut pair_rng = stream_rng(config.seed, STREAM_PAIR_DIRECTION);
    let ctx = IterCtx { oracle, config, policy };
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut updates = 0usize;
    let mut eig_failures = 0usize;
    let mut converged = false;
    let mut final_gap = f64::NAN;

    for t in 1..=config.max_iters {
        match step_once(&state, &ctx, config.gap_tol, &mut pair_rng, t as u64)? {
            StepOutcome::Converged { dual_gap, eig_flagged } => {
                // The current state is the certified iterate; stop without
                // committing a step (the trace holds executed steps only).
                converged = true;
                final_gap = dual_gap;
                eig_failures += usize::from(eig_flagged);
                break;
            }
            StepOutcome::Stepped { chosen, dual_gap, f_before, eig_flagged } => {
                let row = TraceRow {
                    iter: t,
                    f_value: f_before,
                    dual_gap,
                    step_kind: chosen.kind,
                    rank: state.rank(),
                    rank1_updates: updates,
                    elapsed: started.elapsed().as_secs_f64(),
                    eig_flagged,
                };
                observer(&state, &row);
                updates += match row.step_kind {
                    StepKind::Pairwise => 2,
                    _ => 1,
                };
                eig_failures += usize::from(eig_flagged);
                let mut buf = Vec::new();
                oracle.note_move(state.x(), &chosen.dir.view(&mut buf), chosen.theta, chosen.next.x());
                state = chosen.next;
                if state.needs_refresh(config.refresh_period) {
                    state = state.refresh();
                }
                trace.push(row);
            }
        }
    }
    if final_gap.is_nan() {
        final_gap = dual_gap(state.x(), &oracle.gradient(state.x()));
    }
    let final_f = oracle.value(state.x());
    Ok(RunResult { state, trace, final_f, final_gap, converged, eig_failures })
}
