//! Dense complex linear algebra and the special functions used across the crate.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{self, KrylovOptions};

pub use faer::c64;

/// Default tolerances. Every routine that checks one of these has a `_with` variant taking a
/// [`Tolerances`] value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum elementwise deviation from Hermiticity.
    pub hermitian: f64,
    /// Imaginary parts below `imag_cleanup * max|value|` are dropped.
    pub imag_cleanup: f64,
    /// Weights below `-negative_weight` are rejected.
    pub negative_weight: f64,
    /// Weight sums further than this from 1 are rejected.
    pub weight_sum: f64,
    /// Trace and Hermiticity tolerance for density matrices.
    pub density: f64,
    /// Largest dimension handled by a full dense eigendecomposition in
    /// [`leading_eigenpair_general`].
    pub dense_eig_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            imag_cleanup: 1e-10,
            negative_weight: 1e-12,
            weight_sum: 1e-6,
            density: 1e-10,
            dense_eig_limit: 1024,
        }
    }
}

/// Complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    data: Vec<c64>,
}

impl DenseOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![c64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = Self::zeros(n, n);
        for i in 0..n {
            op[(i, i)] = c64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_entries(rows: usize, cols: usize, data: Vec<c64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_entries(rows, cols, data.iter().map(|&x| c64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut op = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            op[(i, i)] = c64::new(v, 0.0);
        }
        op
    }

    pub fn from_faer(m: MatRef<'_, c64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[c64] {
        &self.data
    }

    pub fn as_faer(&self) -> MatRef<'_, c64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn to_faer(&self) -> Mat<c64> {
        self.as_faer().to_owned()
    }

    pub fn matmul(&self, rhs: &DenseOperator) -> Result<DenseOperator> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                actual: format!("{} rows", rhs.rows),
            });
        }
        let prod = self.as_faer() * rhs.as_faer();
        Ok(Self::from_faer(prod.as_ref()))
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        assert_eq!(v.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ·op` (no conjugation).
    pub fn apply_transpose(&self, v: &[c64]) -> Vec<c64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![c64::new(0.0, 0.0); self.cols];
        for (row, &vi) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn add(&self, rhs: &DenseOperator) -> Result<DenseOperator> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                actual: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: c64) -> DenseOperator {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn transpose(&self) -> DenseOperator {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> DenseOperator {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> c64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &DenseOperator) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Checks the density-matrix flag: unit trace and Hermiticity within `tol`.
    pub fn check_density_matrix(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let tr = self.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidParameter(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = c64;
    fn index(&self, (i, j): (usize, usize)) -> &c64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut c64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues sorted by descending modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<c64>,
    pub hermitian: bool,
}

impl Spectrum {
    pub fn new(mut values: Vec<c64>, hermitian: bool) -> Self {
        sort_by_modulus(&mut values);
        Self { values, hermitian }
    }

    /// Real parts after the cleanup rule: imaginary parts below `tol * max|value|` are dropped,
    /// larger ones are an error carrying the offending value.
    pub fn cleaned(&self, tol: f64) -> Result<Vec<f64>> {
        clean_real(&self.values, tol)
    }
}

pub(crate) fn sort_by_modulus(values: &mut [c64]) {
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
}

pub(crate) fn clean_real(values: &[c64], tol: f64) -> Result<Vec<f64>> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    values
        .iter()
        .map(|v| {
            if v.im.abs() > tol * scale {
                Err(Error::ComplexEigenvalue { re: v.re, im: v.im })
            } else {
                Ok(v.re)
            }
        })
        .collect()
}

/// Leading eigenvalue with right and left eigenvectors normalized to `Σ L_i R_i = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiorthogonalPair {
    pub eigenvalue: c64,
    pub right: Vec<c64>,
    pub left: Vec<c64>,
    /// Second eigenvalue by modulus, when the solver produced one.
    pub subleading: Option<c64>,
    pub iterations: usize,
}

impl BiorthogonalPair {
    /// `-1 / ln|Λ₁/Λ₀|` in units of one application of the operator.
    pub fn correlation_length(&self) -> Option<f64> {
        self.subleading.map(|l1| -1.0 / (l1.norm() / self.eigenvalue.norm()).ln())
    }
}

/// Full eigendecomposition of a square matrix with biorthonormal right/left vectors.
#[derive(Clone, Debug)]
pub struct GeneralEigen {
    /// Sorted by descending modulus.
    pub values: Vec<c64>,
    /// Right eigenvectors as columns.
    pub right: Mat<c64>,
    /// Left eigenvectors as columns, `leftᵀ·right = 1`.
    pub left: Mat<c64>,
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    DenseOperator::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Splits a composite index into per-site digits, site 0 most significant.
fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for s in (0..dims.len()).rev() {
        out[s] = idx % dims[s];
        idx /= dims[s];
    }
}

/// Traces out every site not listed in `keep`. Site 0 is the most significant factor.
pub fn partial_trace(op: &DenseOperator, site_dims: &[usize], keep: &[usize]) -> Result<DenseOperator> {
    let total: usize = site_dims.iter().product();
    if !op.is_square() || op.rows != total {
        return Err(Error::DimensionMismatch {
            expected: format!("{total}x{total} for site dims {site_dims:?}"),
            actual: format!("{}x{}", op.rows, op.cols),
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&s| s >= site_dims.len()) {
        return Err(Error::InvalidParameter(format!("site {bad} out of range")));
    }
    let traced: Vec<usize> = (0..site_dims.len()).filter(|s| !kept.contains(s)).collect();
    let dk: usize = kept.iter().map(|&s| site_dims[s]).product();
    let dt: usize = traced.iter().map(|&s| site_dims[s]).product();

    let mut buckets = vec![vec![0usize; dk]; dt];
    let mut dig = vec![0usize; site_dims.len()];
    for full in 0..total {
        digits(full, site_dims, &mut dig);
        let a = kept.iter().fold(0, |acc, &s| acc * site_dims[s] + dig[s]);
        let t = traced.iter().fold(0, |acc, &s| acc * site_dims[s] + dig[s]);
        buckets[t][a] = full;
    }
    let mut out = DenseOperator::zeros(dk, dk);
    for bucket in &buckets {
        for (a, &fa) in bucket.iter().enumerate() {
            for (b, &fb) in bucket.iter().enumerate() {
                out[(a, b)] += op[(fa, fb)];
            }
        }
    }
    Ok(out)
}

pub fn hermitian_eig(op: &DenseOperator) -> Result<(Vec<f64>, DenseOperator)> {
    hermitian_eig_with(op, &Tolerances::default())
}

/// Eigenvalues ascending with orthonormal eigenvectors as columns.
pub fn hermitian_eig_with(op: &DenseOperator, tol: &Tolerances) -> Result<(Vec<f64>, DenseOperator)> {
    if !op.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square operator".into(),
            actual: format!("{}x{}", op.rows, op.cols),
        });
    }
    let defect = op.hermiticity_defect();
    if defect > tol.hermitian {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let m = op.to_faer();
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Decomposition)?;
    let values = (0..op.rows).map(|i| eig.S()[i].re).collect();
    Ok((values, DenseOperator::from_faer(eig.U())))
}

/// `exp(scale·h)` for Hermitian `h`.
pub fn matrix_exp_hermitian(h: &DenseOperator, scale: f64) -> Result<DenseOperator> {
    let (w, v) = hermitian_eig(h)?;
    let n = h.rows;
    let e: Vec<f64> = w.iter().map(|x| (scale * x).exp()).collect();
    Ok(DenseOperator::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * e[k]).sum()
    }))
}

/// Full dense eigendecomposition with biorthonormal left vectors (`leftᵀ·right = 1`).
pub fn general_eig(op: &DenseOperator) -> Result<GeneralEigen> {
    if !op.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square operator".into(),
            actual: format!("{}x{}", op.rows, op.cols),
        });
    }
    general_eig_faer(op.as_faer())
}

pub(crate) fn general_eig_faer(a: MatRef<'_, c64>) -> Result<GeneralEigen> {
    let n = a.nrows();
    let mut s = faer::diag::Diag::<c64>::zeros(n);
    let mut ul = Mat::<c64>::zeros(n, n);
    let mut ur = Mat::<c64>::zeros(n, n);
    let par = Par::Seq;
    let mut mem = faer::dyn_stack::MemBuffer::new(evd::evd_scratch::<c64>(
        n,
        ComputeEigenvectors::Yes,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::evd_cplx(
        a,
        s.as_mut(),
        Some(ul.as_mut()),
        Some(ur.as_mut()),
        par,
        faer::dyn_stack::MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| Error::Decomposition)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        s[j].norm().total_cmp(&s[i].norm()).then(s[j].re.total_cmp(&s[i].re))
    });
    let values: Vec<c64> = order.iter().map(|&i| s[i]).collect();
    let mut right = Mat::<c64>::zeros(n, n);
    let mut left = Mat::<c64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        // faer returns left vectors with u^H A = λ u^H; conjugate to get the transpose convention.
        for r in 0..n {
            right[(r, k)] = ur[(r, i)];
            left[(r, k)] = ul[(r, i)].conj();
        }
    }
    let scale = values.first().map(|v| v.norm()).unwrap_or(0.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).norm() <= 1e-10 * scale {
            end += 1;
        }
        biorthonormalize_block(&mut left, right.as_ref(), start, end);
        start = end;
    }
    Ok(GeneralEigen { values, right, left })
}

/// Replaces left columns `start..end` by `L G^{-T}` with `G = Lᵀ R` on that block, so that
/// `Lᵀ R = 1` holds within a degenerate cluster. Singular blocks are left unchanged.
fn biorthonormalize_block(left: &mut Mat<c64>, right: MatRef<'_, c64>, start: usize, end: usize) {
    let k = end - start;
    let n = left.nrows();
    let g = Mat::<c64>::from_fn(k, k, |a, b| (0..n).map(|r| left[(r, start + a)] * right[(r, start + b)]).sum());
    if k == 1 {
        let d = g[(0, 0)];
        if d.norm() > 0.0 {
            for r in 0..n {
                left[(r, start)] /= d;
            }
        }
        return;
    }
    let svd = match g.svd() {
        Ok(s) => s,
        Err(_) => return,
    };
    let sv = svd.S().column_vector();
    if !(sv[k - 1].re > 1e-14 * sv[0].re) {
        return;
    }
    use faer::linalg::solvers::DenseSolveCore;
    let inv = g.partial_piv_lu().inverse();
    let block = Mat::<c64>::from_fn(n, k, |r, a| left[(r, start + a)]);
    // new L = L · G^{-T}
    let updated = &block * inv.transpose();
    for r in 0..n {
        for a in 0..k {
            left[(r, start + a)] = updated[(r, a)];
        }
    }
}

fn normalize_pair(mut right: Vec<c64>, mut left: Vec<c64>) -> (Vec<c64>, Vec<c64>) {
    let (imax, _) = right
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bi, bv) });
    let norm: f64 = right.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let phase = right[imax] / right[imax].norm();
    let f = phase.conj() / norm;
    for v in right.iter_mut() {
        *v *= f;
    }
    let overlap: c64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    for v in left.iter_mut() {
        *v /= overlap;
    }
    (right, left)
}

fn residuals(op: &DenseOperator, pair_value: c64, right: &[c64], left: &[c64]) -> (f64, f64) {
    let ar = op.apply(right);
    let la = op.apply_transpose(left);
    let nr: f64 = right.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let nl: f64 = left.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rr = ar.iter().zip(right).map(|(a, r)| (a - pair_value * r).norm_sqr()).sum::<f64>().sqrt() / nr;
    let rl = la.iter().zip(left).map(|(a, l)| (a - pair_value * l).norm_sqr()).sum::<f64>().sqrt() / nl;
    (rr, rl)
}

fn frobenius(op: &DenseOperator) -> f64 {
    op.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Leading (largest modulus) eigenvalue with biorthonormal right and left eigenvectors.
pub fn leading_eigenpair_general(op: &DenseOperator, tol: f64, max_iter: usize) -> Result<BiorthogonalPair> {
    leading_eigenpair_general_with(op, tol, max_iter, &Tolerances::default())
}

pub fn leading_eigenpair_general_with(
    op: &DenseOperator,
    tol: f64,
    max_iter: usize,
    tols: &Tolerances,
) -> Result<BiorthogonalPair> {
    if !op.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square operator".into(),
            actual: format!("{}x{}", op.rows, op.cols),
        });
    }
    let n = op.rows;
    let scale = frobenius(op).max(f64::MIN_POSITIVE);
    let (value, right, left, subleading, iterations) = if n <= tols.dense_eig_limit {
        let eig = general_eig(op)?;
        let value = eig.values[0];
        if n > 1 {
            let gap = (value.norm() - eig.values[1].norm()) / value.norm();
            if gap < tol {
                return Err(Error::NearDegenerate { gap });
            }
        }
        let right: Vec<c64> = (0..n).map(|r| eig.right[(r, 0)]).collect();
        let mut left: Vec<c64> = (0..n).map(|r| eig.left[(r, 0)]).collect();
        if residuals(op, value, &right, &left).1 > tol.max(1e-13) * scale {
            // left vectors from the Schur form are unreliable next to a defective null space
            let eig_t = general_eig(&op.transpose())?;
            let k = (0..n)
                .min_by(|&a, &b| (eig_t.values[a] - value).norm().total_cmp(&(eig_t.values[b] - value).norm()))
                .unwrap_or(0);
            left = (0..n).map(|r| eig_t.right[(r, k)]).collect();
        }
        (value, right, left, eig.values.get(1).copied(), 0)
    } else {
        let opts = KrylovOptions { tol, max_matvecs: max_iter, ..KrylovOptions::default() };
        let start = krylov::default_start::<c64>(n);
        let r = krylov::leading_eigenvector(n, |x, y| y.copy_from_slice(&op.apply(x)), &start, None::<fn(&mut [c64])>, &opts)?;
        let l = krylov::leading_eigenvector(n, |x, y| y.copy_from_slice(&op.apply_transpose(x)), &start, None::<fn(&mut [c64])>, &opts)?;
        if let Some(second) = r.second {
            let gap = (r.value.norm() - second.norm()) / r.value.norm();
            if gap < tol {
                return Err(Error::NearDegenerate { gap });
            }
        }
        (r.value, r.vector, l.vector, r.second, r.matvecs + l.matvecs)
    };
    let (right, left) = normalize_pair(right, left);
    let (rr, rl) = residuals(op, value, &right, &left);
    let bound = tol.max(1e-13) * scale;
    if rr > bound || rl > bound {
        return Err(Error::NoConvergence { iterations, residual: rr.max(rl) });
    }
    Ok(BiorthogonalPair { eigenvalue: value, right, left, subleading, iterations })
}

/// `-Σ w ln w` with `0 ln 0 = 0`; weights are renormalized to unit sum.
pub fn von_neumann_entropy(weights: &[f64]) -> Result<f64> {
    von_neumann_entropy_with(weights, &Tolerances::default())
}

pub fn von_neumann_entropy_with(weights: &[f64], tol: &Tolerances) -> Result<f64> {
    if let Some(w) = weights.iter().find(|&&w| w < -tol.negative_weight || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {w:e} is negative or not finite")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > tol.weight_sum {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
    }
    Ok(weights
        .iter()
        .map(|&w| w.max(0.0) / sum)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum())
}

/// Complete elliptic integral of the first kind `K(k) = ∫₀^{π/2} dθ / √(1 − k² sin²θ)`, modulus `k`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidParameter(format!("elliptic modulus {k} outside [0, 1)")));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - k * k).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (a + b))
}
