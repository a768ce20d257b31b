//! The solver's iterate state: a feasible spectrahedron point `X` kept
//! together with its pseudo-inverse `X^+` and the orthogonal projector onto
//! its image, all three maintained under rank-one steps in O(n^2).
//!
//! Four step constructors cover everything the solvers do to an iterate:
//!
//! * [`IterateState::apply_drop`] — remove a spectral direction entirely at
//!   its maximal removal coefficient and renormalize (rank decreases),
//! * [`IterateState::apply_convex_step`] — blend toward a vertex `v v^T`
//!   (the classic conditional-gradient step; rank grows by at most one),
//! * [`IterateState::apply_away_step`] — shrink along an in-image direction
//!   strictly inside the removal limit (rank unchanged),
//! * [`IterateState::apply_pairwise_step`] — transport the full mass of one
//!   in-image direction onto another direction (remove-then-add).
//!
//! Every constructor is validated in tests against pseudo-inverses and
//! projectors recomputed from scratch. Rounding drift across long update
//! chains is monitored by cheap probes and repaired by [`IterateState::refresh`].

use crate::linalg::{
    self, dot, full_eigendecomposition, norm, pinv_rank_one_update_with_case, LinalgError, SymMat,
    UpdateCase,
};
use rand::Rng;
use thiserror::Error;

/// Rank counting: eigenvalues of `X` above this multiple of the largest are
/// counted; the same cutoff feeds the pseudo-inverse and projector rebuilds
/// so the three matrices always agree about the image.
pub const RANK_EIG_CUTOFF: f64 = 1e-10;
/// Membership tolerance for step-input vectors: `||Proj v - v|| <= tol ||v||`.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Consistency probes above this residual trigger a refresh.
pub const DRIFT_TOL: f64 = 1e-8;
/// Default number of steps between unconditional refreshes.
pub const DEFAULT_REFRESH_PERIOD: usize = 50;
/// Feasibility: allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Feasibility: allowed (absolute) negativity of eigenvalues.
pub const EIG_NEG_TOL: f64 = 1e-9;

/// Errors from state construction and step application.
#[derive(Debug, Clone, Error)]
pub enum StateError {
    /// The input matrix is not (tolerably) unit-trace positive semidefinite.
    #[error("infeasible input: {reason}")]
    InfeasibleInput { reason: String },
    /// A step direction must lie in the iterate's image but does not.
    #[error("direction outside the iterate's image (residual {residual:.3e})")]
    NotInImage { residual: f64 },
    /// A drop was requested at a removal coefficient that admits no step
    /// (the iterate is a rank-one point in that direction).
    #[error("degenerate step: removal coefficient {lambda} leaves no room")]
    DegenerateStep { lambda: f64 },
    /// An away step reached or exceeded the maximal removal coefficient;
    /// that regime must be taken as a drop instead.
    #[error("away step {eta:.6e} reaches the removal limit {limit:.6e}")]
    StepTooLarge { eta: f64, limit: f64 },
    /// An underlying kernel failed.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Feasible iterate with maintained pseudo-inverse and image projector.
#[derive(Debug, Clone)]
pub struct IterateState {
    x: SymMat,
    xpinv: SymMat,
    proj: SymMat,
    rank: usize,
    steps_since_refresh: usize,
}

impl IterateState {
    /// Builds a state from a feasible point, validating unit trace and
    /// positive semidefiniteness and deriving pseudo-inverse, projector and
    /// rank from one full eigendecomposition.
    pub fn init(x: SymMat) -> Result<Self, StateError> {
        let tr = x.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(StateError::InfeasibleInput { reason: format!("trace {tr} is not 1") });
        }
        let d = full_eigendecomposition(&x)?;
        let min = *d.values.last().expect("nonempty matrix");
        if min < -EIG_NEG_TOL {
            return Err(StateError::InfeasibleInput {
                reason: format!("smallest eigenvalue {min:.3e} is negative"),
            });
        }
        Ok(Self::from_decomposition(x, &d, 0))
    }

    /// Assembles the derived matrices from a decomposition of `x`.
    fn from_decomposition(
        x: SymMat,
        d: &linalg::EigDecomp,
        steps_since_refresh: usize,
    ) -> Self {
        let top = d.values[0].max(f64::MIN_POSITIVE);
        let cut = RANK_EIG_CUTOFF * top;
        let mut rank = 0usize;
        let mut xpinv = SymMat::zeros(x.n());
        let mut proj = SymMat::zeros(x.n());
        for k in 0..x.n() {
            if d.values[k] > cut {
                rank += 1;
                xpinv.add_outer(1.0 / d.values[k], d.vector(k));
                proj.add_outer(1.0, d.vector(k));
            }
        }
        Self { x, xpinv, proj, rank: rank.max(1), steps_since_refresh }
    }

    /// The iterate itself.
    pub fn x(&self) -> &SymMat {
        &self.x
    }

    /// Maintained pseudo-inverse of the iterate.
    pub fn xpinv(&self) -> &SymMat {
        &self.xpinv
    }

    /// Maintained orthogonal projector onto the iterate's image.
    pub fn proj(&self) -> &SymMat {
        &self.proj
    }

    /// Tracked rank (matches the projector's trace up to rounding).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Steps applied since the last refresh.
    pub fn steps_since_refresh(&self) -> usize {
        self.steps_since_refresh
    }

    /// Side length of the iterate.
    pub fn n(&self) -> usize {
        self.x.n()
    }

    /// `||Proj v - v||` as a fraction of `||v||`, the membership measure used
    /// by every step precondition.
    pub fn membership_residual(&self, v: &[f64]) -> f64 {
        let pv = self.proj.matvec(v);
        let mut acc = 0.0;
        for i in 0..v.len() {
            let r = pv[i] - v[i];
            acc += r * r;
        }
        acc.sqrt() / norm(v).max(f64::MIN_POSITIVE)
    }

    fn require_in_image(&self, v: &[f64]) -> Result<(), StateError> {
        let residual = self.membership_residual(v);
        if residual > MEMBERSHIP_TOL {
            return Err(StateError::NotInImage { residual });
        }
        Ok(())
    }

    /// Largest coefficient `lambda` with `X - lambda v v^T` still positive
    /// semidefinite, for a unit vector `v` in the iterate's image:
    /// `lambda = 1 / (v^T X^+ v)`. Always in `(0, 1]` on the spectrahedron
    /// (up to rounding), with 1 attained exactly at rank-one iterates.
    pub fn max_removal_coeff(&self, v: &[f64]) -> Result<f64, StateError> {
        self.require_in_image(v)?;
        let q = self.xpinv.quad_form(v);
        if !(q > 0.0) {
            return Err(StateError::NotInImage { residual: f64::INFINITY });
        }
        Ok(self.removal_limit_from(q, v))
    }

    /// Clamps the pseudo-inverse-based removal limit `1 / (v^T X^+ v)` by the
    /// direct mass `v^T X v`. Cauchy-Schwarz gives `1/(v^T X^+ v) <= v^T X v`
    /// exactly, with equality on eigenvector-aligned directions — which is
    /// where drift in the maintained pseudo-inverse would otherwise push the
    /// limit *above* the true removable mass (e.g. `1 + 1e-11` at a rank-one
    /// iterate) and each removal would deposit a small negative eigenvalue
    /// into the iterate. The clamp reads the mass from `X` itself, so
    /// overshoot is capped at rounding scale.
    fn removal_limit_from(&self, q: f64, v: &[f64]) -> f64 {
        (1.0 / q).min(self.x.quad_form(v))
    }

    /// Builds the successor after advancing one step.
    fn advanced(&self, x: SymMat, xpinv: SymMat, proj: SymMat, rank: usize) -> Self {
        Self { x, xpinv, proj, rank, steps_since_refresh: self.steps_since_refresh + 1 }
    }

    /// Removes direction `v` entirely at its maximal coefficient `lambda`
    /// and renormalizes the trace: `X' = (X - lambda v v^T) / (1 - lambda)`.
    /// Rank decreases by one. `lambda` must be the value returned by
    /// [`Self::max_removal_coeff`] and strictly below one.
    pub fn apply_drop(&self, v: &[f64], lambda: f64) -> Result<Self, StateError> {
        if !(lambda < 1.0 - 1e-12) {
            return Err(StateError::DegenerateStep { lambda });
        }
        self.require_in_image(v)?;
        let scale = 1.0 / (1.0 - lambda);

        let mut x_new = self.x.clone();
        x_new.add_outer(-lambda, v);
        x_new.scale_in_place(scale);

        let (b_pinv, _case) = pinv_rank_one_update_with_case(&self.xpinv, &self.x, v, -lambda);
        let xpinv_new = b_pinv.scaled(1.0 - lambda);

        let z = self.xpinv.matvec(v);
        let z2 = dot(&z, &z);
        let mut proj_new = self.proj.clone();
        proj_new.add_outer(-1.0 / z2, &z);

        Ok(self.advanced(x_new, xpinv_new, proj_new, self.rank.max(2) - 1))
    }

    /// Convex combination toward the vertex `v v^T`:
    /// `X' = (1 - eta) X + eta v v^T`, `eta` in `[0, 1]`, `v` unit. Rank
    /// grows by one when `v` leaves the current image, else stays.
    pub fn apply_convex_step(&self, v: &[f64], eta: f64) -> Result<Self, StateError> {
        debug_assert!((norm(v) - 1.0).abs() < 1e-8, "vertex direction must be unit");
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&eta));
        let eta = eta.clamp(0.0, 1.0);
        if eta == 0.0 {
            let mut next = self.clone();
            next.steps_since_refresh += 1;
            return Ok(next);
        }
        if eta == 1.0 {
            let one = SymMat::from_outer_sum(self.n(), &[(1.0, v)]);
            return Ok(self.advanced(one.clone(), one.clone(), one, 1));
        }
        let keep = 1.0 - eta;
        let a = self.x.scaled(keep);
        let a_pinv = self.xpinv.scaled(1.0 / keep);
        let (xpinv_new, case) = pinv_rank_one_update_with_case(&a_pinv, &a, v, eta);

        let mut x_new = a;
        x_new.add_outer(eta, v);

        let (proj_new, rank_new) = match case {
            UpdateCase::OutOfImage => {
                let pv = self.proj.matvec(v);
                let mut z = v.to_vec();
                for i in 0..z.len() {
                    z[i] -= pv[i];
                }
                let z2 = dot(&z, &z);
                let mut p = self.proj.clone();
                p.add_outer(1.0 / z2, &z);
                (p, self.rank + 1)
            }
            // In-image (and the never-expected degenerate branch): the image
            // is unchanged; drift probes catch any surprise.
            _ => (self.proj.clone(), self.rank),
        };
        Ok(self.advanced(x_new, xpinv_new, proj_new, rank_new))
    }

    /// Shrinks along an in-image direction strictly inside the removal
    /// limit: `X' = (X - eta v v^T) / (1 - eta)`. Image and rank unchanged.
    pub fn apply_away_step(&self, v: &[f64], eta: f64) -> Result<Self, StateError> {
        self.require_in_image(v)?;
        if eta == 0.0 {
            let mut next = self.clone();
            next.steps_since_refresh += 1;
            return Ok(next);
        }
        let q = self.xpinv.quad_form(v);
        let limit = self.removal_limit_from(q, v);
        // Stay a safe margin inside the limit: at the limit itself the step
        // is a drop, and the pseudo-inverse update must branch differently.
        if !(eta > 0.0) || eta >= limit * (1.0 - 1e-9) {
            return Err(StateError::StepTooLarge { eta, limit });
        }
        let keep = 1.0 / (1.0 - eta);
        let mut x_new = self.x.clone();
        x_new.add_outer(-eta, v);
        x_new.scale_in_place(keep);

        let (b_pinv, _case) = pinv_rank_one_update_with_case(&self.xpinv, &self.x, v, -eta);
        let xpinv_new = b_pinv.scaled(1.0 - eta);
        Ok(self.advanced(x_new, xpinv_new, self.proj.clone(), self.rank))
    }

    /// Moves the full removable mass `gamma` of `u_minus` onto `u_plus`:
    /// `X' = X + gamma (u_plus u_plus^T - u_minus u_minus^T)` where `gamma`
    /// is the maximal removal coefficient of `u_minus`. Internally a drop of
    /// `u_minus` followed by an addition of `u_plus`, without trace
    /// renormalization (the exchange preserves the trace).
    pub fn apply_pairwise_step(
        &self,
        u_minus: &[f64],
        u_plus: &[f64],
        gamma: f64,
    ) -> Result<Self, StateError> {
        self.require_in_image(u_minus)?;
        let q = self.xpinv.quad_form(u_minus);
        let limit = self.removal_limit_from(q, u_minus);
        debug_assert!(
            (gamma - limit).abs() <= 1e-6 * limit.max(1e-300),
            "pairwise gamma {gamma} must be the removal limit {limit}"
        );
        // Swapping a direction for (plus or minus) itself is the identity.
        if dot(u_minus, u_plus).abs() >= 1.0 - 1e-12 {
            let mut next = self.clone();
            next.steps_since_refresh += 1;
            return Ok(next);
        }

        // Remove u_minus entirely.
        let (mid_pinv, _case) =
            pinv_rank_one_update_with_case(&self.xpinv, &self.x, u_minus, -gamma);
        let mut x_mid = self.x.clone();
        x_mid.add_outer(-gamma, u_minus);
        let w = self.xpinv.matvec(u_minus);
        let w2 = dot(&w, &w);
        let mut proj_mid = self.proj.clone();
        proj_mid.add_outer(-1.0 / w2, &w);
        let rank_mid = self.rank - 1; // may be zero transiently

        // Add u_plus with the same mass.
        let (xpinv_new, case) = pinv_rank_one_update_with_case(&mid_pinv, &x_mid, u_plus, gamma);
        let mut x_new = x_mid;
        x_new.add_outer(gamma, u_plus);
        let (proj_new, rank_new) = match case {
            UpdateCase::OutOfImage => {
                let pv = proj_mid.matvec(u_plus);
                let mut z = u_plus.to_vec();
                for i in 0..z.len() {
                    z[i] -= pv[i];
                }
                let z2 = dot(&z, &z);
                proj_mid.add_outer(1.0 / z2, &z);
                (proj_mid, rank_mid + 1)
            }
            _ => (proj_mid, rank_mid),
        };
        Ok(self.advanced(x_new, xpinv_new, proj_new, rank_new.max(1)))
    }

    /// Rebuilds pseudo-inverse, projector and rank from a fresh
    /// eigendecomposition of the iterate, clearing accumulated drift. The
    /// iterate itself is untouched.
    pub fn refresh(&self) -> Self {
        let d = full_eigendecomposition(&self.x)
            .expect("eigendecomposition of a bounded symmetric iterate converges");
        Self::from_decomposition(self.x.clone(), &d, 0)
    }

    /// Uniform random unit vector in the iterate's image: a standard normal
    /// draw projected and normalized (resampled in the measure-zero event of
    /// a vanishing projection).
    pub fn sample_unit_in_image(&self, rng: &mut impl Rng) -> Vec<f64> {
        loop {
            let z = crate::rng::gaussian_vec(rng, self.n());
            let mut w = self.proj.matvec(&z);
            if linalg::normalize(&mut w) >= 1e-12 {
                return w;
            }
        }
    }

    /// Cheap (O(n^2)) drift estimate: probes the defining identities of the
    /// pseudo-inverse and projector along fixed directions plus the trace.
    pub fn drift_indicator(&self) -> f64 {
        let n = self.n();
        let mut worst = (self.x.trace() - 1.0).abs();
        let probe = |w: &[f64]| {
            // X (X^+ w) should equal Proj w.
            let pw = self.proj.matvec(w);
            let xiw = self.x.matvec(&self.xpinv.matvec(w));
            let mut r1 = 0.0;
            // Proj (Proj w) should equal Proj w.
            let ppw = self.proj.matvec(&pw);
            let mut r2 = 0.0;
            for i in 0..n {
                r1 += (xiw[i] - pw[i]) * (xiw[i] - pw[i]);
                r2 += (ppw[i] - pw[i]) * (ppw[i] - pw[i]);
            }
            r1.sqrt().max(r2.sqrt())
        };
        let inv_sqrt = 1.0 / (n as f64).sqrt();
        let ones: Vec<f64> = vec![inv_sqrt; n];
        let alts: Vec<f64> =
            (0..n).map(|i| if i % 2 == 0 { inv_sqrt } else { -inv_sqrt }).collect();
        worst = worst.max(probe(&ones)).max(probe(&alts));
        worst
    }

    /// Whether the maintenance policy calls for a refresh now.
    pub fn needs_refresh(&self, period: usize) -> bool {
        self.steps_since_refresh >= period.max(1) || self.drift_indicator() > DRIFT_TOL
    }

    /// Exact (O(n^3)) consistency residuals, for verification reports:
    /// `[ ||X X^+ X - X||_F / ||X||_F, ||P^2 - P||_F, ||P - X X^+||_F ]`.
    pub fn consistency_residuals(&self) -> [f64; 3] {
        let n = self.n();
        let xp = SymMat::symmetrize(n, &self.x.mul_dense(&self.xpinv));
        let xpx = SymMat::symmetrize(n, &xp.mul_dense(&self.x));
        let r1 = xpx.sub(&self.x).fro_norm() / self.x.fro_norm().max(1e-300);
        let pp = SymMat::symmetrize(n, &self.proj.mul_dense(&self.proj));
        let r2 = pp.sub(&self.proj).fro_norm();
        let r3 = self.proj.sub(&xp).fro_norm();
        [r1, r2, r3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pseudo_inverse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Random feasible state of the given rank with eigenvalues bounded away
    /// from zero, so pseudo-inverse comparisons are well conditioned.
    fn random_state(n: usize, rank: usize, rng: &mut ChaCha12Rng) -> IterateState {
        let raw = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let basis = full_eigendecomposition(&raw).unwrap();
        let mut vals: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = vals.iter().sum();
        for v in vals.iter_mut() {
            *v /= s;
        }
        let mut x = SymMat::zeros(n);
        for k in 0..rank {
            x.add_outer(vals[k], basis.vector(k));
        }
        // Nudge the trace to one exactly-enough after rounding.
        let tr = x.trace();
        x.scale_in_place(1.0 / tr);
        IterateState::init(x).unwrap()
    }

    /// In-image unit vector (projected Gaussian).
    fn image_vector(st: &IterateState, rng: &mut ChaCha12Rng) -> Vec<f64> {
        st.sample_unit_in_image(rng)
    }

    fn assert_state_matches_scratch(st: &IterateState, what: &str) {
        // Pseudo-inverse and projector against from-scratch recomputation.
        let oracle_pinv = pseudo_inverse(st.x()).unwrap();
        let perr = st.xpinv().sub(&oracle_pinv).fro_norm() / oracle_pinv.fro_norm().max(1.0);
        assert!(perr <= 1e-8, "{what}: pinv error {perr:.3e}");
        let d = full_eigendecomposition(st.x()).unwrap();
        let cut = RANK_EIG_CUTOFF * d.values[0].max(f64::MIN_POSITIVE);
        let oracle_proj = d.map_spectrum(|v| (v > cut).then_some(1.0));
        let jerr = st.proj().sub(&oracle_proj).fro_norm();
        assert!(jerr <= 1e-7, "{what}: proj error {jerr:.3e}");
        assert_eq!(st.rank(), d.count_above(cut), "{what}: rank bookkeeping");
    }

    #[test]
    fn init_uniform_iterate() {
        let n = 5;
        let st = IterateState::init(SymMat::identity(n).scaled(1.0 / n as f64)).unwrap();
        assert_eq!(st.rank(), n);
        // X^+ = n I and Proj = I.
        assert!(st.xpinv().sub(&SymMat::identity(n).scaled(n as f64)).fro_norm() < 1e-10);
        assert!(st.proj().sub(&SymMat::identity(n)).fro_norm() < 1e-10);
    }

    #[test]
    fn init_rank_one_vertex() {
        let v = [1.0, 0.0, 0.0];
        let st = IterateState::init(SymMat::from_outer_sum(3, &[(1.0, &v)])).unwrap();
        assert_eq!(st.rank(), 1);
        assert!(st.xpinv().sub(st.x()).fro_norm() < 1e-12);
        assert!(st.proj().sub(st.x()).fro_norm() < 1e-12);
    }

    #[test]
    fn init_rejects_wrong_trace_and_indefinite() {
        assert!(matches!(
            IterateState::init(SymMat::identity(3)),
            Err(StateError::InfeasibleInput { .. })
        ));
        let bad = SymMat::from_diag(&[1.1, -0.1, 0.0]);
        assert!(matches!(
            IterateState::init(bad),
            Err(StateError::InfeasibleInput { .. })
        ));
    }

    #[test]
    fn removal_coefficient_examples() {
        let v1 = [1.0, 0.0];
        let st = IterateState::init(SymMat::from_outer_sum(2, &[(1.0, &v1)])).unwrap();
        assert!((st.max_removal_coeff(&v1).unwrap() - 1.0).abs() < 1e-12);

        let n = 4;
        let st = IterateState::init(SymMat::identity(n).scaled(1.0 / n as f64)).unwrap();
        let v = [0.5, 0.5, 0.5, 0.5];
        assert!((st.max_removal_coeff(&v).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn removal_coefficient_rejects_out_of_image() {
        let v1 = [1.0, 0.0];
        let st = IterateState::init(SymMat::from_outer_sum(2, &[(1.0, &v1)])).unwrap();
        assert!(matches!(
            st.max_removal_coeff(&[0.0, 1.0]),
            Err(StateError::NotInImage { .. })
        ));
    }

    #[test]
    fn removal_is_maximal_on_random_states() {
        // Lemma check: X - lambda v v^T stays PSD, loses rank, and
        // annihilates X^+ v.
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for trial in 0..50 {
            let st = random_state(8, 3 + trial % 4, &mut rng);
            let v = image_vector(&st, &mut rng);
            let lambda = st.max_removal_coeff(&v).unwrap();
            assert!(lambda > 0.0 && lambda <= 1.0 + 1e-9, "lambda {lambda}");
            let mut y = st.x().clone();
            y.add_outer(-lambda, &v);
            let d = full_eigendecomposition(&y).unwrap();
            assert!(*d.values.last().unwrap() >= -1e-9, "lost PSD at trial {trial}");
            let dy = full_eigendecomposition(st.x()).unwrap();
            let cut_x = RANK_EIG_CUTOFF * dy.values[0];
            assert!(d.count_above(cut_x) < dy.count_above(cut_x), "rank must drop");
            // Kernel alignment: Y X^+ v = 0.
            let z = st.xpinv().matvec(&v);
            let res = norm(&y.matvec(&z));
            assert!(res <= 1e-8 * norm(&z).max(1.0), "kernel residual {res:.3e}");
        }
    }

    #[test]
    fn drop_step_hand_cases() {
        // Half-half on e1, e2; dropping e2 leaves the pure e1 vertex.
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        let st = IterateState::init(SymMat::from_outer_sum(3, &[(0.5, &e1), (0.5, &e2)])).unwrap();
        let lambda = st.max_removal_coeff(&e2).unwrap();
        assert!((lambda - 0.5).abs() < 1e-12);
        let next = st.apply_drop(&e2, lambda).unwrap();
        assert_eq!(next.rank(), 1);
        assert!(next.x().sub(&SymMat::from_outer_sum(3, &[(1.0, &e1)])).fro_norm() < 1e-12);

        // Uniform on 3 coordinates; dropping e3 leaves half-half.
        let st = IterateState::init(SymMat::identity(3).scaled(1.0 / 3.0)).unwrap();
        let e3 = [0.0, 0.0, 1.0];
        let lambda = st.max_removal_coeff(&e3).unwrap();
        assert!((lambda - 1.0 / 3.0).abs() < 1e-12);
        let next = st.apply_drop(&e3, lambda).unwrap();
        assert!(next.x().sub(&SymMat::from_diag(&[0.5, 0.5, 0.0])).fro_norm() < 1e-12);
        assert_eq!(next.rank(), 2);
    }

    #[test]
    fn drop_at_full_coefficient_is_degenerate() {
        let v = [0.6, 0.8];
        let st = IterateState::init(SymMat::from_outer_sum(2, &[(1.0, &v)])).unwrap();
        let lambda = st.max_removal_coeff(&v).unwrap();
        assert!(matches!(
            st.apply_drop(&v, lambda),
            Err(StateError::DegenerateStep { .. })
        ));
    }

    #[test]
    fn drop_matches_scratch_recomputation() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        for trial in 0..20 {
            let st = random_state(9, 5, &mut rng);
            let v = image_vector(&st, &mut rng);
            let lambda = st.max_removal_coeff(&v).unwrap();
            if lambda >= 1.0 - 1e-9 {
                continue;
            }
            let next = st.apply_drop(&v, lambda).unwrap();
            assert!((next.x().trace() - 1.0).abs() < 1e-12);
            assert_state_matches_scratch(&next, &format!("drop trial {trial}"));
        }
    }

    #[test]
    fn convex_step_endpoints() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let st = random_state(6, 3, &mut rng);
        let mut v = crate::rng::gaussian_vec(&mut rng, 6);
        linalg::normalize(&mut v);
        let same = st.apply_convex_step(&v, 0.0).unwrap();
        assert_eq!(same.x(), st.x());
        assert_eq!(same.steps_since_refresh(), st.steps_since_refresh() + 1);
        let vertex = st.apply_convex_step(&v, 1.0).unwrap();
        assert_eq!(vertex.rank(), 1);
        assert!(vertex.x().sub(&SymMat::from_outer_sum(6, &[(1.0, &v)])).fro_norm() < 1e-12);
    }

    #[test]
    fn convex_step_matches_scratch_both_membership_cases() {
        let mut rng = ChaCha12Rng::seed_from_u64(34);
        for trial in 0..20 {
            let st = random_state(8, 4, &mut rng);
            // Out-of-image vertex grows the rank.
            let mut v = crate::rng::gaussian_vec(&mut rng, 8);
            linalg::normalize(&mut v);
            let grown = st.apply_convex_step(&v, 0.37).unwrap();
            assert_eq!(grown.rank(), st.rank() + 1);
            assert!((grown.x().trace() - 1.0).abs() < 1e-12);
            assert_state_matches_scratch(&grown, &format!("convex grow trial {trial}"));
            // In-image vertex keeps the rank.
            let w = image_vector(&st, &mut rng);
            let kept = st.apply_convex_step(&w, 0.37).unwrap();
            assert_eq!(kept.rank(), st.rank());
            assert_state_matches_scratch(&kept, &format!("convex keep trial {trial}"));
        }
    }

    #[test]
    fn away_step_hand_case_and_limit() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let st = IterateState::init(SymMat::from_outer_sum(2, &[(0.5, &e1), (0.5, &e2)])).unwrap();
        let next = st.apply_away_step(&e2, 0.25).unwrap();
        assert!(next.x().sub(&SymMat::from_diag(&[2.0 / 3.0, 1.0 / 3.0])).fro_norm() < 1e-12);
        assert_eq!(next.rank(), 2);
        // At the removal limit the step must be rejected (it is a drop).
        let limit = st.max_removal_coeff(&e2).unwrap();
        assert!(matches!(
            st.apply_away_step(&e2, limit),
            Err(StateError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn away_step_matches_scratch() {
        let mut rng = ChaCha12Rng::seed_from_u64(35);
        for trial in 0..20 {
            let st = random_state(8, 4, &mut rng);
            let v = image_vector(&st, &mut rng);
            let limit = st.max_removal_coeff(&v).unwrap();
            let next = st.apply_away_step(&v, 0.5 * limit).unwrap();
            assert_eq!(next.rank(), st.rank());
            assert!((next.x().trace() - 1.0).abs() < 1e-12);
            assert_state_matches_scratch(&next, &format!("away trial {trial}"));
        }
    }

    #[test]
    fn pairwise_identity_swap_is_noop() {
        let mut rng = ChaCha12Rng::seed_from_u64(36);
        let st = random_state(6, 3, &mut rng);
        let u = image_vector(&st, &mut rng);
        let gamma = st.max_removal_coeff(&u).unwrap();
        let next = st.apply_pairwise_step(&u, &u, gamma).unwrap();
        assert_eq!(next.x(), st.x());
    }

    #[test]
    fn pairwise_hand_case_swaps_support() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        let e3 = [0.0, 0.0, 1.0];
        let st = IterateState::init(SymMat::from_outer_sum(3, &[(0.5, &e1), (0.5, &e2)])).unwrap();
        let gamma = st.max_removal_coeff(&e2).unwrap();
        let next = st.apply_pairwise_step(&e2, &e3, gamma).unwrap();
        let want = SymMat::from_outer_sum(3, &[(0.5, &e1), (0.5, &e3)]);
        assert!(next.x().sub(&want).fro_norm() < 1e-12);
        assert_eq!(next.rank(), 2);
    }

    #[test]
    fn pairwise_matches_scratch_in_and_out_of_image() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for trial in 0..20 {
            let st = random_state(8, 4, &mut rng);
            let u_minus = image_vector(&st, &mut rng);
            let gamma = st.max_removal_coeff(&u_minus).unwrap();
            // Out-of-image target: rank preserved overall (down then up).
            let mut u_plus = crate::rng::gaussian_vec(&mut rng, 8);
            linalg::normalize(&mut u_plus);
            let next = st.apply_pairwise_step(&u_minus, &u_plus, gamma).unwrap();
            assert!((next.x().trace() - 1.0).abs() < 1e-10);
            assert_state_matches_scratch(&next, &format!("pairwise out trial {trial}"));
        }
    }

    #[test]
    fn pairwise_from_rank_one_swaps_the_vertex() {
        let v = {
            let mut v = vec![0.6, 0.0, 0.8];
            linalg::normalize(&mut v);
            v
        };
        let st = IterateState::init(SymMat::from_outer_sum(3, &[(1.0, &v)])).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(38);
        let u_minus = st.sample_unit_in_image(&mut rng);
        let gamma = st.max_removal_coeff(&u_minus).unwrap();
        let u_plus = [0.0, 1.0, 0.0];
        let next = st.apply_pairwise_step(&u_minus, &u_plus, gamma).unwrap();
        assert_eq!(next.rank(), 1);
        let want = SymMat::from_outer_sum(3, &[(1.0, &u_plus)]);
        assert!(next.x().sub(&want).fro_norm() < 1e-8);
        assert_state_matches_scratch(&next, "pairwise rank-one swap");
    }

    #[test]
    fn refresh_restores_consistency_after_long_chains() {
        let mut rng = ChaCha12Rng::seed_from_u64(39);
        let mut st = random_state(8, 4, &mut rng);
        for step in 0..60 {
            // Mix of step kinds, never refreshing.
            match step % 3 {
                0 => {
                    let mut v = crate::rng::gaussian_vec(&mut rng, 8);
                    linalg::normalize(&mut v);
                    st = st.apply_convex_step(&v, rng.gen_range(0.05..0.6)).unwrap();
                }
                1 => {
                    let v = image_vector(&st, &mut rng);
                    let lim = st.max_removal_coeff(&v).unwrap();
                    st = st.apply_away_step(&v, 0.4 * lim).unwrap();
                }
                _ => {
                    let v = image_vector(&st, &mut rng);
                    let lim = st.max_removal_coeff(&v).unwrap();
                    if lim < 0.9 {
                        st = st.apply_drop(&v, lim).unwrap();
                    }
                }
            }
        }
        assert_eq!(st.steps_since_refresh(), 60);
        let refreshed = st.refresh();
        assert_eq!(refreshed.steps_since_refresh(), 0);
        assert_eq!(refreshed.x(), st.x(), "refresh must not move the iterate");
        let [r1, r2, r3] = refreshed.consistency_residuals();
        assert!(r1 < 1e-12 && r2 < 1e-12 && r3 < 1e-12, "{r1:.1e} {r2:.1e} {r3:.1e}");
    }

    #[test]
    fn maintained_chain_stays_within_drift_tolerance() {
        // The policy the solver applies: refresh on period or drift. Under
        // it, exact residuals stay at the documented tolerance throughout.
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let mut st = random_state(10, 5, &mut rng);
        for step in 0..200 {
            let r = rng.gen_range(0..4);
            st = match r {
                0 => {
                    let mut v = crate::rng::gaussian_vec(&mut rng, 10);
                    linalg::normalize(&mut v);
                    st.apply_convex_step(&v, rng.gen_range(0.01..0.5)).unwrap()
                }
                1 => {
                    let v = image_vector(&st, &mut rng);
                    let lim = st.max_removal_coeff(&v).unwrap();
                    st.apply_away_step(&v, rng.gen_range(0.1..0.8) * lim).unwrap()
                }
                2 => {
                    let v = image_vector(&st, &mut rng);
                    let lim = st.max_removal_coeff(&v).unwrap();
                    if lim < 0.9 && st.rank() > 2 {
                        st.apply_drop(&v, lim).unwrap()
                    } else {
                        st.clone()
                    }
                }
                _ => {
                    let u_minus = image_vector(&st, &mut rng);
                    let gamma = st.max_removal_coeff(&u_minus).unwrap();
                    let mut u_plus = crate::rng::gaussian_vec(&mut rng, 10);
                    linalg::normalize(&mut u_plus);
                    st.apply_pairwise_step(&u_minus, &u_plus, gamma).unwrap()
                }
            };
            if st.needs_refresh(DEFAULT_REFRESH_PERIOD) {
                st = st.refresh();
            }
            if step % 25 == 0 {
                let [r1, r2, r3] = st.consistency_residuals();
                let worst = r1.max(r2).max(r3);
                assert!(worst <= DRIFT_TOL * 10.0, "step {step}: residual {worst:.3e}");
                assert!((st.x().trace() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sampling_respects_the_image() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        // Rank one: the only unit vectors in the image are +/- v.
        let v = {
            let mut v = vec![1.0, 2.0, -1.0, 0.5];
            linalg::normalize(&mut v);
            v
        };
        let st = IterateState::init(SymMat::from_outer_sum(4, &[(1.0, &v)])).unwrap();
        for _ in 0..10 {
            let u = st.sample_unit_in_image(&mut rng);
            assert!(dot(&u, &v).abs() > 1.0 - 1e-10);
        }
        // General rank: unit norm and in image.
        let st = random_state(7, 3, &mut rng);
        for _ in 0..20 {
            let u = st.sample_unit_in_image(&mut rng);
            assert!((norm(&u) - 1.0).abs() < 1e-12);
            assert!(st.membership_residual(&u) < 1e-10);
        }
    }

    #[test]
    fn sampling_is_isotropic_within_the_image() {
        // On the full-dimensional uniform iterate, E[u u^T] = I / n.
        let n = 6;
        let st = IterateState::init(SymMat::identity(n).scaled(1.0 / n as f64)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let draws = 20_000;
        let mut acc = SymMat::zeros(n);
        for _ in 0..draws {
            let u = st.sample_unit_in_image(&mut rng);
            acc.add_outer(1.0 / draws as f64, &u);
        }
        let err = acc.sub(&SymMat::identity(n).scaled(1.0 / n as f64)).fro_norm();
        assert!(err < 0.02, "empirical second moment off by {err:.3e}");
    }
}
