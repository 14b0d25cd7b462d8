//! Dense complex linear algebra kernel.
//!
//! Everything works over `Complex64`; real data is the zero-imaginary case.
//! Matrix equations are solved through the explicit Kronecker lift, which is
//! adequate for the desk-scale problems this crate targets (n up to ~20).

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the numeric carrier for all system data.
pub type MatrixData = DMatrix<Complex64>;
/// Dense complex column vector.
pub type VectorData = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Pivot ratio below which a lifted system is treated as singular.
const LIFT_SINGULAR_RATIO: f64 = 1e-13;

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds a real matrix from row-major data.
pub fn real(rows: usize, cols: usize, data: &[f64]) -> MatrixData {
    assert_eq!(data.len(), rows * cols, "row-major data length");
    MatrixData::from_fn(rows, cols, |i, j| c(data[i * cols + j]))
}

/// 1x1 matrix.
pub fn scalar(x: f64) -> MatrixData {
    MatrixData::from_element(1, 1, c(x))
}

pub fn identity(n: usize) -> MatrixData {
    MatrixData::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> MatrixData {
    MatrixData::zeros(rows, cols)
}

pub fn ensure_square(x: &MatrixData) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(x.nrows())
}

pub fn ensure_finite(x: &MatrixData, what: &'static str) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Frobenius norm.
pub fn fro(x: &MatrixData) -> f64 {
    x.norm()
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff(a: &MatrixData, b: &MatrixData) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `(X + X*) / 2`.
pub fn hermitian_part(x: &MatrixData) -> Result<MatrixData> {
    ensure_square(x)?;
    Ok(symmetrize(x))
}

/// Unchecked Hermitian projection `(X + X*)/2` of a square matrix.
pub fn symmetrize(x: &MatrixData) -> MatrixData {
    (x + x.adjoint()) * c(0.5)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &MatrixData, b: &MatrixData) -> MatrixData {
    a.kronecker(b)
}

/// Column-major vectorization.
pub fn vec_of(x: &MatrixData) -> VectorData {
    VectorData::from_column_slice(x.as_slice())
}

pub fn unvec(v: &VectorData, rows: usize, cols: usize) -> MatrixData {
    MatrixData::from_column_slice(rows, cols, v.as_slice())
}

/// Matrix of the map `P ↦ A*P + PA + N*PN` on column-major `vec(P)`.
pub fn lift_adjoint(a: &MatrixData, n_noise: Option<&MatrixData>) -> MatrixData {
    let n = a.nrows();
    let id = identity(n);
    let mut l = kron(&id, &a.adjoint()) + kron(&a.transpose(), &id);
    if let Some(nn) = n_noise {
        l += kron(&nn.transpose(), &nn.adjoint());
    }
    l
}

/// Matrix of the map `P ↦ AP + PA* + NPN*` on column-major `vec(P)`:
/// `I⊗A + Ā⊗I + N̄⊗N`.
pub fn lift_forward(a: &MatrixData, n_noise: Option<&MatrixData>) -> MatrixData {
    let n = a.nrows();
    let id = identity(n);
    let mut l = kron(&id, a) + kron(&a.map(|z| z.conj()), &id);
    if let Some(nn) = n_noise {
        l += kron(&nn.map(|z| z.conj()), nn);
    }
    l
}

fn solve_lifted(lift: MatrixData, rhs: VectorData, n: usize) -> Result<MatrixData> {
    let lu = lift.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio > LIFT_SINGULAR_RATIO) {
        return Err(Error::SingularLift { pivot_ratio: ratio });
    }
    let sol = lu
        .solve(&rhs)
        .ok_or(Error::SingularLift { pivot_ratio: ratio })?;
    Ok(symmetrize(&unvec(&sol, n, n)))
}

/// Solves `A*P + PA + Q = 0`.
pub fn solve_lyapunov(a: &MatrixData, q: &MatrixData) -> Result<MatrixData> {
    let n = ensure_square(a)?;
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    solve_lifted(lift_adjoint(a, None), -vec_of(q), n)
}

/// Solves the generalized Lyapunov equation `A*P + PA + N*PN + Q = 0`.
pub fn solve_glyap(a: &MatrixData, n_noise: &MatrixData, q: &MatrixData) -> Result<MatrixData> {
    let n = ensure_square(a)?;
    if n_noise.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "N and Q must be {n}x{n}"
        )));
    }
    solve_lifted(lift_adjoint(a, Some(n_noise)), -vec_of(q), n)
}

/// Relative residual of `A*P + PA + N*PN + Q` at `P`.
pub fn glyap_residual(
    a: &MatrixData,
    n_noise: Option<&MatrixData>,
    q: &MatrixData,
    p: &MatrixData,
) -> f64 {
    let mut r = a.adjoint() * p + p * a + q;
    let mut scale = 2.0 * fro(a) * fro(p) + fro(q);
    if let Some(nn) = n_noise {
        r += nn.adjoint() * p * nn;
        scale += fro(nn).powi(2) * fro(p);
    }
    fro(&r) / scale.max(f64::MIN_POSITIVE)
}

/// `e^{At}` by scaling and squaring with a truncated Taylor series.
pub fn matexp(a: &MatrixData, t: f64) -> MatrixData {
    let n = a.nrows();
    let x = a * c(t);
    let norm = x.iter().map(|z| z.norm()).sum::<f64>().max(0.0);
    // scale so that the 1-norm bound is at most 1/2
    let mut s = 0u32;
    while norm / f64::powi(2.0, s as i32) > 0.5 {
        s += 1;
    }
    let xs = &x * c(f64::powi(2.0, -(s as i32)));
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = &term * &xs * c(1.0 / k as f64);
        result += &term;
        if term.norm() <= 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn gramian_panels(a: &MatrixData, bb: &MatrixData, tau: f64, panels: usize) -> MatrixData {
    let n = a.nrows();
    let h = tau / panels as f64;
    let step = matexp(a, h);
    let nodes: Vec<(MatrixData, f64)> = GL5
        .iter()
        .map(|&(x, w)| (matexp(a, 0.5 * h * (x + 1.0)), 0.5 * h * w))
        .collect();
    let mut start = identity(n);
    let mut acc = zeros(n, n);
    for _ in 0..panels {
        for (e, w) in &nodes {
            let m = &start * e;
            acc += &m * bb * m.adjoint() * c(*w);
        }
        start = &start * &step;
    }
    acc
}

/// Finite-horizon controllability Gramian `∫₀^τ e^{At}BB*e^{A*t} dt`.
///
/// Composite five-point Gauss–Legendre quadrature starting at 64 panels,
/// doubling until successive values agree to 1e-12 relative.
pub fn finite_gramian(a: &MatrixData, b: &MatrixData, tau: f64) -> Result<MatrixData> {
    let n = ensure_square(a)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {} rows, expected {n}",
            b.nrows()
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    let bb = b * b.adjoint();
    let mut panels = 64;
    let mut prev = gramian_panels(a, &bb, tau, panels);
    for _ in 0..8 {
        panels *= 2;
        let next = gramian_panels(a, &bb, tau, panels);
        let diff = fro(&(&next - &prev));
        let scale = fro(&next);
        prev = next;
        if diff <= 1e-12 * scale || scale == 0.0 {
            break;
        }
    }
    Ok(symmetrize(&prev))
}

/// Moore–Penrose pseudoinverse; singular values below `1e-12·σ_max` are
/// treated as zero.
pub fn pinv(x: &MatrixData) -> MatrixData {
    pinv_tol(x, 1e-12)
}

pub fn pinv_tol(x: &MatrixData, rel_tol: f64) -> MatrixData {
    let (r, cdim) = x.shape();
    if r == 0 || cdim == 0 {
        return zeros(cdim, r);
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let mut out = zeros(cdim, r);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            let vk = vt.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += vk * uk * c(1.0 / s);
        }
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(x: &MatrixData) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = x.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank with tolerance `rel_tol·σ_max`.
pub fn rank(x: &MatrixData, rel_tol: f64) -> usize {
    let s = singular_values(x);
    let smax = s.first().cloned().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Complex Schur decomposition `A = Q T Q*`.
pub fn schur(a: &MatrixData) -> Result<(MatrixData, MatrixData)> {
    ensure_square(a)?;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let s = Schur::try_new(a.clone(), f64::EPSILON * scale * 0.5, 100_000)
        .ok_or(Error::EigenNoConvergence)?;
    Ok(s.unpack())
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(a: &MatrixData) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues and unit eigenvectors (columns) of a general complex matrix,
/// obtained by back substitution on the Schur factor.
pub fn eigen_decomposition(a: &MatrixData) -> Result<(Vec<Complex64>, MatrixData)> {
    let n = ensure_square(a)?;
    let (q, t) = schur(a)?;
    let lam: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = fro(&t).max(f64::MIN_POSITIVE);
    let mut vecs = zeros(n, n);
    for k in 0..n {
        let mut y = VectorData::zeros(n);
        y[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lam[k];
            if d.norm() < f64::EPSILON * tnorm {
                d = c(f64::EPSILON * tnorm);
            }
            y[i] = -s / d;
        }
        let v = &q * y;
        let nv = v.norm();
        vecs.set_column(k, &(v / c(nv)));
    }
    Ok((lam, vecs))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &MatrixData) -> (Vec<f64>, MatrixData) {
    let e = SymmetricEigen::new(symmetrize(h));
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = zeros(h.nrows(), h.ncols());
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(h: &MatrixData) -> f64 {
    if h.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(h))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the Hermitian pencil `(H, S)` with `S ≻ 0`,
/// computed without a Cholesky factor via `S^{-1/2} H S^{-1/2}`. Eigenvalues
/// of `S` are floored at `1e−14·λ_max(S)` so roundoff cannot flip their sign.
pub fn min_generalized_eig(h: &MatrixData, s: &MatrixData) -> f64 {
    let (vals, vecs) = hermitian_eigen(s);
    let floor = 1e-14 * vals.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let inv_sqrt = DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(1.0 / v.max(floor).sqrt())));
    let s_half_inv = &vecs * DMatrix::from_diagonal(&inv_sqrt) * vecs.adjoint();
    min_eig_hermitian(&(&s_half_inv * h * &s_half_inv))
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless every pivot
/// is real and positive. Only the lower triangle is read.
pub fn cholesky_pd(h: &MatrixData) -> Option<MatrixData> {
    let n = h.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj);
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L L* X = B` for a factor from [`cholesky_pd`].
pub fn cholesky_solve(l: &MatrixData, b: &MatrixData) -> MatrixData {
    let y = l.solve_lower_triangular(b).expect("nonsingular factor");
    l.adjoint().solve_upper_triangular(&y).expect("nonsingular factor")
}

/// Hermitian square root of a PSD matrix.
pub fn sqrt_psd(h: &MatrixData) -> MatrixData {
    let (vals, vecs) = hermitian_eigen(h);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v.max(0.0).sqrt())));
    symmetrize(&(&vecs * DMatrix::from_diagonal(&d) * vecs.adjoint()))
}

/// Inverse of a square matrix, if numerically nonsingular.
pub fn inverse(x: &MatrixData) -> Result<MatrixData> {
    ensure_square(x)?;
    x.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::InvalidArgument("matrix is singular".into()))
}

/// Spectral norm.
pub fn norm2(x: &MatrixData) -> f64 {
    singular_values(x).first().cloned().unwrap_or(0.0)
}
