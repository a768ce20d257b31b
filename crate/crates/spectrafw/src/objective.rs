//! The objective interface the solvers minimize through.
//!
//! Solvers only ever evaluate the objective along low-rank segments
//! `X + theta * D` where `D` combines a multiple of the current iterate with
//! one or two outer products. [`SegmentDir`] captures that structure so an
//! oracle that knows its own algebra (like the sensing objective) can hand
//! back *exact* quadratic coefficients for the restriction — turning every
//! line search into a closed-form vertex — while a black-box oracle simply
//! declines and gets a derivative-free search instead.

use crate::linalg::SymMat;

/// A search direction, either structured (cheap for quadratic-aware oracles)
/// or dense (anything goes).
#[derive(Debug, Clone, Copy)]
pub enum SegmentDir<'a> {
    /// `D` given explicitly.
    Dense(&'a SymMat),
    /// `D = x_coeff * X + sum_k terms[k].0 * v_k v_k^T` relative to the
    /// evaluation base point `X`.
    Structured { x_coeff: f64, terms: &'a [(f64, &'a [f64])] },
}

impl SegmentDir<'_> {
    /// Materializes the direction as a dense matrix relative to `base`.
    pub fn to_dense(&self, base: &SymMat) -> SymMat {
        match *self {
            SegmentDir::Dense(d) => d.clone(),
            SegmentDir::Structured { x_coeff, terms } => {
                let mut d = if x_coeff != 0.0 {
                    base.scaled(x_coeff)
                } else {
                    SymMat::zeros(base.n())
                };
                for &(c, v) in terms {
                    d.add_outer(c, v);
                }
                d
            }
        }
    }
}

/// A smooth convex objective over symmetric matrices.
///
/// `Sync` so benchmark repeats can run on worker threads.
pub trait Objective: Sync {
    /// `f(X)`.
    fn value(&self, x: &SymMat) -> f64;

    /// Dense gradient `grad f(X)`.
    fn gradient(&self, x: &SymMat) -> SymMat;

    /// A smoothness constant valid on the feasible set: an upper bound on
    /// curvature, used by fixed-step baselines and the pairwise direction.
    fn beta(&self) -> f64;

    /// Exact coefficients `[a, b, c]` with
    /// `f(X + theta D) = a theta^2 + b theta + c`, when the oracle can
    /// provide them. Returning `None` sends line searches down a
    /// derivative-free path.
    fn segment_quadratic(&self, _base: &SymMat, _dir: &SegmentDir) -> Option<[f64; 3]> {
        None
    }

    /// Notification that the solver is moving from `base` to
    /// `y = base + theta * dir`; oracles that cache per-point work can shift
    /// their caches incrementally instead of recomputing at `y`.
    fn note_move(&self, _base: &SymMat, _dir: &SegmentDir, _theta: f64, _y: &SymMat) {}
}

/// Linear objective `f(X) = <C, X>`. Minimizing it over the spectrahedron
/// recovers the smallest eigenvalue of `C`, which makes this both a useful
/// oracle in its own right and a transparent test objective: the optimal
/// step behavior is known in closed form.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    c: SymMat,
}

impl LinearObjective {
    pub fn new(c: SymMat) -> Self {
        Self { c }
    }

    pub fn matrix(&self) -> &SymMat {
        &self.c
    }
}

impl Objective for LinearObjective {
    fn value(&self, x: &SymMat) -> f64 {
        self.c.inner(x)
    }

    fn gradient(&self, _x: &SymMat) -> SymMat {
        self.c.clone()
    }

    fn beta(&self) -> f64 {
        // Linear: any positive constant is a valid curvature bound.
        1.0
    }

    fn segment_quadratic(&self, base: &SymMat, dir: &SegmentDir) -> Option<[f64; 3]> {
        let c0 = self.c.inner(base);
        let b = match *dir {
            SegmentDir::Dense(d) => self.c.inner(d),
            SegmentDir::Structured { x_coeff, terms } => {
                let mut acc = x_coeff * c0;
                for &(w, v) in terms {
                    acc += w * self.c.quad_form(v);
                }
                acc
            }
        };
        Some([0.0, b, c0])
    }
}
