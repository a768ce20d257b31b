//! Moore-Penrose pseudo-inverses of symmetric matrices: direct construction
//! from an eigendecomposition, and O(n^2) maintenance under symmetric
//! rank-one modifications `B = A + s c c^T`.
//!
//! The rank-one update splits into three regimes, decided numerically:
//!
//! * `c` outside `Im(A)` — the update enlarges the image by one dimension,
//! * `c` inside `Im(A)` with `zeta = 1 + s c^T A^+ c != 0` — the image is
//!   unchanged and the correction is a single outer product,
//! * `c` inside `Im(A)` with `zeta = 0` — the image *loses* a dimension
//!   (this is exactly the regime a maximal removal step lands in).
//!
//! Each branch costs a handful of matrix-vector products, which is what
//! makes rank-one solvers cheap per iteration; correctness is checked in the
//! tests against pseudo-inverses recomputed from scratch.

use super::{dot, eigen::full_eigendecomposition, norm, LinalgError, SymMat};

/// Relative eigenvalue cutoff when building a pseudo-inverse directly from a
/// decomposition: eigenvalues with `|v| <= cutoff * max|v|` are treated as 0.
pub const PINV_EIG_CUTOFF: f64 = 1e-11;
/// Default relative tolerance for deciding `c` lies in `Im(A)`.
pub const IMAGE_TOL: f64 = 1e-8;
/// `zeta` below this (relative to the magnitude of `s c^T A^+ c`) is treated
/// as exactly zero, routing the update to the image-shrinking branch.
const ZETA_REL_TOL: f64 = 1e-11;

/// Which branch a rank-one pseudo-inverse update took; exposed so tests can
/// assert every branch is exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateCase {
    /// `s = 0` or `c = 0`: nothing changed.
    Unchanged,
    /// `c` outside `Im(A)`: image grows.
    OutOfImage,
    /// `c` in `Im(A)`, `zeta != 0`: image unchanged.
    InImage,
    /// `c` in `Im(A)`, `zeta = 0`: image shrinks.
    InImageZeroZeta,
}

/// Pseudo-inverse from scratch via a full eigendecomposition, inverting all
/// eigenvalues above [`PINV_EIG_CUTOFF`] relative to the largest magnitude.
pub fn pseudo_inverse(a: &SymMat) -> Result<SymMat, LinalgError> {
    let d = full_eigendecomposition(a)?;
    let max_abs = d.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = PINV_EIG_CUTOFF * max_abs;
    Ok(d.map_spectrum(|v| (v.abs() > cut).then(|| 1.0 / v)))
}

/// Decides whether `c` lies in the image of `A`, using `apinv` to form the
/// projector residual `||c - A A^+ c||` and comparing it to `tol * ||c||`.
pub fn image_membership(a: &SymMat, apinv: &SymMat, c: &[f64], tol: f64) -> bool {
    let k = apinv.matvec(c);
    let ak = a.matvec(&k);
    let mut res2 = 0.0;
    for i in 0..c.len() {
        let r = c[i] - ak[i];
        res2 += r * r;
    }
    res2.sqrt() <= tol * norm(c)
}

/// Pseudo-inverse of `B = A + s c c^T` from the pseudo-inverse of `A`, in
/// O(n^2). See the module docs for the three regimes.
pub fn pinv_rank_one_update(apinv: &SymMat, a: &SymMat, c: &[f64], s: f64) -> SymMat {
    pinv_rank_one_update_with_case(apinv, a, c, s).0
}

/// [`pinv_rank_one_update`] that also reports which branch was taken.
pub fn pinv_rank_one_update_with_case(
    apinv: &SymMat,
    a: &SymMat,
    c: &[f64],
    s: f64,
) -> (SymMat, UpdateCase) {
    let n = apinv.n();
    debug_assert_eq!(a.n(), n);
    debug_assert_eq!(c.len(), n);
    let c_norm = norm(c);
    if s == 0.0 || c_norm == 0.0 {
        return (apinv.clone(), UpdateCase::Unchanged);
    }

    let k = apinv.matvec(c); // A^+ c
    let ak = a.matvec(&k); // A A^+ c = (projector onto Im A) c
    let mut u = vec![0.0; n]; // (I - A A^+) c
    for i in 0..n {
        u[i] = c[i] - ak[i];
    }
    let u_norm2 = dot(&u, &u);
    let member = u_norm2.sqrt() <= IMAGE_TOL * c_norm;
    let ck = dot(c, &k); // c^T A^+ c
    let zeta = 1.0 + s * ck;

    if !member {
        // Image grows: two mixed outer products plus one along u.
        let mut out = apinv.clone();
        out.add_outer_pair(-1.0 / u_norm2, &k, &u);
        out.add_outer(zeta / (s * u_norm2 * u_norm2), &u);
        (out, UpdateCase::OutOfImage)
    } else if zeta.abs() > ZETA_REL_TOL * (s * ck).abs().max(1.0) {
        // Image unchanged: one outer product along k.
        let mut out = apinv.clone();
        out.add_outer(-s / zeta, &k);
        (out, UpdateCase::InImage)
    } else {
        // Image shrinks by the direction of k.
        let kk = dot(&k, &k);
        if kk <= 1e-300 {
            return (apinv.clone(), UpdateCase::Unchanged);
        }
        let h = apinv.matvec(&k); // A^+ k
        let kh = dot(&k, &h); // k^T A^+ k
        let mut out = apinv.clone();
        out.add_outer_pair(-1.0 / kk, &k, &h);
        out.add_outer(kh / (kk * kk), &k);
        (out, UpdateCase::InImageZeroZeta)
    }
}

/// Pseudo-inverse of `alpha * A` from the pseudo-inverse of `A`: division by
/// `alpha`, rejected when `alpha = 0` (the zero matrix's pseudo-inverse is
/// not a rescaling).
pub fn pinv_scale(apinv: &SymMat, alpha: f64) -> Result<SymMat, LinalgError> {
    if alpha == 0.0 {
        return Err(LinalgError::ZeroScale);
    }
    Ok(apinv.scaled(1.0 / alpha))
}

/// Minimizes `||A y - v||` over `y` in `Im(A)` by conjugate gradients, for
/// symmetric positive semidefinite `A`. Starting from zero keeps every
/// iterate inside the Krylov space, hence inside `Im(A)` whenever `v` is, so
/// the returned vector has no kernel component to project away.
pub fn least_squares_in_image(a: &SymMat, v: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    let n = a.n();
    debug_assert_eq!(v.len(), n);
    let scale = norm(v).max(1.0);
    let mut y = vec![0.0; n];
    let mut r = v.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let max_iters = (10 * n).max(20);
    for _ in 0..max_iters {
        if rs.sqrt() <= tol * scale {
            return Ok(y);
        }
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 1e-300 {
            break; // search direction fell into the kernel
        }
        let alpha = rs / pap;
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    // Recheck: the loop may exit by budget or kernel breakdown while already
    // close enough.
    let res = {
        let ay = a.matvec(&y);
        let mut acc = 0.0;
        for i in 0..n {
            let d = ay[i] - v[i];
            acc += d * d;
        }
        acc.sqrt()
    };
    if res <= tol * scale {
        Ok(y)
    } else {
        Err(LinalgError::NonConvergence { residual: res, iters: max_iters })
    }
}
