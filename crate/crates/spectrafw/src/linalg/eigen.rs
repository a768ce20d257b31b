//! Full symmetric eigendecomposition via cyclic Jacobi sweeps.
//!
//! Jacobi is slower than tridiagonalization-based methods but is simple,
//! numerically robust, and accurate to near machine precision — exactly what
//! is wanted from the reference decomposition that the rank-one update
//! machinery is validated against. Sizes here are a few hundred at most, so
//! the O(n^3) sweep cost is immaterial.

use super::{LinalgError, SymMat};

/// Maximum number of full Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 48;
/// Sweep until the off-diagonal Frobenius norm falls below this multiple of
/// the matrix Frobenius norm.
const OFF_DIAG_TOL: f64 = 1e-14;

/// Eigendecomposition `A = sum_k values[k] * v_k v_k^T` with `values` sorted
/// in descending order and orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    n: usize,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors, stored contiguously: `vectors[k*n..(k+1)*n]` pairs with
    /// `values[k]`.
    vectors: Vec<f64>,
}

impl EigDecomp {
    /// Dimension of the decomposed matrix.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvector paired with `values[k]`.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Number of eigenvalues strictly above `cut`.
    pub fn count_above(&self, cut: f64) -> usize {
        self.values.iter().filter(|&&v| v > cut).count()
    }

    /// Rebuilds `sum_k values[k] v_k v_k^T`; used by tests and refreshes.
    pub fn reconstruct(&self) -> SymMat {
        let mut m = SymMat::zeros(self.n);
        for k in 0..self.n {
            if self.values[k] != 0.0 {
                m.add_outer(self.values[k], self.vector(k));
            }
        }
        m
    }

    /// Rebuilds keeping only eigenvalues selected by `keep`.
    pub fn reconstruct_filtered(&self, mut keep: impl FnMut(f64) -> bool) -> SymMat {
        let mut m = SymMat::zeros(self.n);
        for k in 0..self.n {
            if keep(self.values[k]) {
                m.add_outer(self.values[k], self.vector(k));
            }
        }
        m
    }

    /// Applies `g` to each kept eigenvalue and sums `g(value) v v^T`; the
    /// workhorse behind pseudo-inverses (`g = 1/x`) and projectors (`g = 1`).
    pub fn map_spectrum(&self, mut g: impl FnMut(f64) -> Option<f64>) -> SymMat {
        let mut m = SymMat::zeros(self.n);
        for k in 0..self.n {
            if let Some(c) = g(self.values[k]) {
                m.add_outer(c, self.vector(k));
            }
        }
        m
    }
}

/// Computes the full eigendecomposition of `a` by cyclic Jacobi rotations.
///
/// Accurate to roughly machine precision relative to `||a||_F`; returns
/// [`LinalgError::NonConvergence`] only if the sweep budget is exhausted,
/// which does not happen for well-formed symmetric input.
pub fn full_eigendecomposition(a: &SymMat) -> Result<EigDecomp, LinalgError> {
    let n = a.n();
    if n == 0 {
        return Ok(EigDecomp { n, values: vec![], vectors: vec![] });
    }
    let mut w: Vec<f64> = a.as_slice().to_vec();
    // v holds eigenvectors as columns: v[i*n + j] = component i of vector j.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.fro_norm().max(f64::MIN_POSITIVE);
    let target = OFF_DIAG_TOL * fro;

    let mut sweeps = 0;
    loop {
        let mut off2 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off2 += 2.0 * w[i * n + j] * w[i * n + j];
            }
        }
        if off2.sqrt() <= target {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(LinalgError::NonConvergence { residual: off2.sqrt() / fro, iters: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, n, p, q);
            }
        }
    }

    // Collect diagonal and sort descending, carrying eigenvectors along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j * n + j].partial_cmp(&w[i * n + i]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (k, &col) in order.iter().enumerate() {
        values.push(w[col * n + col]);
        for i in 0..n {
            vectors[k * n + i] = v[i * n + col];
        }
    }
    Ok(EigDecomp { n, values, vectors })
}

/// One Jacobi rotation zeroing the `(p, q)` entry of `w`, accumulating the
/// rotation into the eigenvector columns of `v`.
fn rotate(w: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = w[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = w[p * n + p];
    let aqq = w[q * n + q];
    // Tiny off-diagonal entries relative to the diagonal pair round to a
    // no-op rotation; zero them directly to help convergence detection.
    if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        w[p * n + q] = 0.0;
        w[q * n + p] = 0.0;
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    w[p * n + p] = app - t * apq;
    w[q * n + q] = aqq + t * apq;
    w[p * n + q] = 0.0;
    w[q * n + p] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[k * n + p];
        let akq = w[k * n + q];
        let nkp = akp - s * (akq + tau * akp);
        let nkq = akq + s * (akp - tau * akq);
        w[k * n + p] = nkp;
        w[p * n + k] = nkp;
        w[k * n + q] = nkq;
        w[q * n + k] = nkq;
    }
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp - s * (vkq + tau * vkp);
        v[k * n + q] = vkq + s * (vkp - tau * vkq);
    }
}
