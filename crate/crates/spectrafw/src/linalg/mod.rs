//! Dense symmetric linear algebra kernels sized for spectrahedron solvers.
//!
//! Everything here operates on [`SymMat`], a dense row-major `n x n` matrix
//! whose symmetry is maintained *exactly* (bit-for-bit) by construction: every
//! mutation writes both `(i, j)` and `(j, i)`. That exactness matters because
//! the solver keeps three coupled matrices (iterate, pseudo-inverse,
//! projection) in sync across thousands of rank-one updates, and asymmetry is
//! the first thing that drifts when it is left to rounding.
//!
//! Submodules:
//! - [`eigen`]: full eigendecomposition via cyclic Jacobi sweeps,
//! - [`lanczos`]: leading eigenpair of any [`SymOp`] (matrix-free),
//! - [`pinv`]: pseudo-inverse construction and rank-one updates,
//! - [`simplex`]: Euclidean projection onto the probability simplex.

pub mod eigen;
pub mod lanczos;
pub mod pinv;
pub mod simplex;

pub use eigen::{full_eigendecomposition, EigDecomp};
pub use lanczos::{leading_eigenpair, leading_eigenpair_from, EigPair};
pub use pinv::{
    image_membership, least_squares_in_image, pinv_rank_one_update,
    pinv_rank_one_update_with_case, pinv_scale, pseudo_inverse, UpdateCase,
};
pub use simplex::project_to_simplex;

use thiserror::Error;

/// Errors produced by the linear-algebra kernels.
#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    /// An iterative method exhausted its budget without hitting its tolerance.
    #[error("iteration did not converge: residual {residual:.3e} after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },
    /// Operand dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A scaling operation was asked to divide by zero.
    #[error("cannot rescale a pseudo-inverse by zero")]
    ZeroScale,
}

/// Dense symmetric matrix with exact (bitwise) symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    a: Vec<f64>,
}

impl SymMat {
    /// The `n x n` zero matrix.
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    /// The `n x n` identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[i * d.len() + i] = v;
        }
        m
    }

    /// Builds `sum_k c_k v_k v_k^T` from weighted outer products.
    pub fn from_outer_sum(n: usize, terms: &[(f64, &[f64])]) -> Self {
        let mut m = Self::zeros(n);
        for &(c, v) in terms {
            m.add_outer(c, v);
        }
        m
    }

    /// Builds a symmetric matrix by evaluating `f(i, j)` on the upper
    /// triangle and mirroring, so symmetry holds exactly.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i * n + j] = v;
                m.a[j * n + i] = v;
            }
        }
        m
    }

    /// Symmetrizes arbitrary row-major data as `(A + A^T) / 2`.
    pub fn symmetrize(n: usize, raw: &[f64]) -> Self {
        assert_eq!(raw.len(), n * n, "raw buffer must be n*n");
        Self::from_fn(n, |i, j| 0.5 * (raw[i * n + j] + raw[j * n + i]))
    }

    /// Side length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry accessor.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Writes `(i, j)` and `(j, i)` together, preserving exact symmetry.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    /// Raw row-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            y[i] = dot(self.row(i), x);
        }
    }

    /// `A x` as a fresh vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += v[i] * dot(self.row(i), v);
        }
        acc
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        dot(&self.a, &self.a).sqrt()
    }

    /// Frobenius inner product `<A, B> = sum_ij A_ij B_ij`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        dot(&self.a, &other.a)
    }

    /// `self += s * B`.
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.a.iter_mut().zip(other.a.iter()) {
            *a += s * b;
        }
    }

    /// `self += s * v v^T`, mirrored so symmetry stays exact.
    pub fn add_outer(&mut self, s: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let ci = s * v[i];
            for j in i..n {
                let upd = ci * v[j];
                self.a[i * n + j] += upd;
                if j != i {
                    self.a[j * n + i] += upd;
                }
            }
        }
    }

    /// `self += s * (x y^T + y x^T)`, mirrored so symmetry stays exact.
    pub fn add_outer_pair(&mut self, s: f64, x: &[f64], y: &[f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        let n = self.n;
        for i in 0..n {
            for j in i..n {
                let upd = s * (x[i] * y[j] + y[i] * x[j]);
                self.a[i * n + j] += upd;
                if j != i {
                    self.a[j * n + i] += upd;
                }
            }
        }
    }

    /// `self *= s`.
    pub fn scale_in_place(&mut self, s: f64) {
        for a in self.a.iter_mut() {
            *a *= s;
        }
    }

    /// `s * A` as a fresh matrix.
    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale_in_place(s);
        m
    }

    /// `A - B`.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let a = self.a.iter().zip(other.a.iter()).map(|(x, y)| x - y).collect();
        Self { n: self.n, a }
    }

    /// `A + B`.
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let a = self.a.iter().zip(other.a.iter()).map(|(x, y)| x + y).collect();
        Self { n: self.n, a }
    }

    /// Worst asymmetry `max_ij |A_ij - A_ji|`; zero by construction, exposed
    /// so tests can assert the invariant cheaply.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.a[i * self.n + j] - self.a[j * self.n + i]).abs());
            }
        }
        worst
    }

    /// Row-major product `A * B` (not symmetric in general); used by
    /// consistency checks, not by the per-iteration fast path.
    pub fn mul_dense(&self, other: &Self) -> Vec<f64> {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &other.a[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        out
    }
}

/// Symmetric linear operator applied matrix-free; the eigensolver only ever
/// needs `y = M x`, so composite operators (shifted, projected, low-rank
/// corrected) avoid materializing dense matrices.
pub trait SymOp {
    /// Operator dimension.
    fn dim(&self) -> usize;
    /// `y = M x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymOp for SymMat {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

/// `M = -A`, so the algebraically smallest eigenvalue of `A` can be found by
/// a solver that computes the largest.
pub struct NegOp<'a>(pub &'a SymMat);

impl SymOp for NegOp<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.matvec_into(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

/// Plain dot product.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i] * y[i];
    }
    acc
}

/// Euclidean norm.
#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `x += s * y`.
#[inline]
pub fn axpy(x: &mut [f64], s: f64, y: &[f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        x[i] += s * y[i];
    }
}

/// Normalizes `x` in place and returns its original norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let nrm = norm(x);
    if nrm > 0.0 {
        let inv = 1.0 / nrm;
        for v in x.iter_mut() {
            *v *= inv;
        }
    }
    nrm
}
