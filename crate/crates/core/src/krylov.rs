//! Thick-restart Arnoldi iteration for the leading eigenpair of a matrix-free operator.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg::general_eig_faer;

/// Scalar types the Arnoldi solver works over.
pub trait Field:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
{
    const IS_REAL: bool;
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Real part for real fields.
    fn from_c64(z: c64) -> Self;
    fn to_c64(self) -> c64;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
}

impl Field for f64 {
    const IS_REAL: bool = true;
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_c64(z: c64) -> Self {
        z.re
    }
    fn to_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
}

impl Field for c64 {
    const IS_REAL: bool = false;
    fn zero() -> Self {
        c64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    fn from_c64(z: c64) -> Self {
        z
    }
    fn to_c64(self) -> c64 {
        self
    }
    fn conj(self) -> Self {
        c64::new(self.re, -self.im)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Largest subspace dimension before a restart.
    pub max_dim: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    /// Convergence threshold on `‖Ax − θx‖ / |θ|`.
    pub tol: f64,
    pub max_matvecs: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { max_dim: 32, keep: 8, tol: 1e-10, max_matvecs: 5000 }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult<T> {
    pub value: c64,
    /// Unit-norm eigenvector.
    pub vector: Vec<T>,
    pub residual: f64,
    pub matvecs: usize,
    /// Second Ritz value by modulus in the final subspace.
    pub second: Option<c64>,
}

/// Deterministic, mostly positive start vector.
pub fn default_start<T: Field>(n: usize) -> Vec<T> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            T::from_f64(1.0 + 0.2 * (u - 0.5))
        })
        .collect()
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * *y;
    }
    s
}

fn norm<T: Field>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

fn axpy<T: Field>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn scale_in_place<T: Field>(s: f64, x: &mut [T]) {
    let s = T::from_f64(s);
    for xi in x.iter_mut() {
        *xi = *xi * s;
    }
}

fn combine<T: Field>(basis: &[Vec<T>], coeffs: &[c64], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(T::from_c64(c), b, &mut out);
    }
    out
}

struct Subspace<T> {
    v: Vec<Vec<T>>,
    av: Vec<Vec<T>>,
    /// `h[i][j] = ⟨v_i, A v_j⟩`
    h: Vec<Vec<T>>,
}

impl<T: Field> Subspace<T> {
    fn orthogonalize(&self, w: &mut [T]) -> f64 {
        let before = norm(w);
        for _ in 0..2 {
            for b in &self.v {
                let c = dot(b, w);
                axpy(T::zero() - c, b, w);
            }
        }
        let after = norm(w);
        if before > 0.0 { after / before } else { 0.0 }
    }

    fn push(&mut self, w: Vec<T>, aw: Vec<T>) {
        let k = self.v.len();
        for (i, row) in self.h.iter_mut().enumerate() {
            row.push(dot(&self.v[i], &aw));
        }
        let mut last = Vec::with_capacity(k + 1);
        for j in 0..k {
            last.push(dot(&w, &self.av[j]));
        }
        last.push(dot(&w, &aw));
        self.h.push(last);
        self.v.push(w);
        self.av.push(aw);
    }

    fn ritz(&self) -> Result<(Vec<c64>, Mat<c64>)> {
        let k = self.v.len();
        let hm = Mat::<c64>::from_fn(k, k, |i, j| self.h[i][j].to_c64());
        let eig = general_eig_faer(hm.as_ref())?;
        Ok((eig.values, eig.right))
    }
}

/// Real-ification of a Ritz vector for real fields: rotate the largest component onto the real
/// axis and drop the imaginary part.
fn realify(y: &mut [c64]) {
    let (imax, _) = y
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bi, bv) });
    if y[imax].norm() == 0.0 {
        return;
    }
    let phase = y[imax].conj() / y[imax].norm();
    for c in y.iter_mut() {
        *c = c64::new((*c * phase).re, 0.0);
    }
}

fn orthonormal_columns(cols: Vec<Vec<c64>>, is_real: bool) -> Vec<Vec<c64>> {
    let mut out: Vec<Vec<c64>> = Vec::new();
    for mut c in cols {
        if is_real {
            for x in c.iter_mut() {
                x.im = 0.0;
            }
        }
        let n0: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..2 {
            for b in &out {
                let d: c64 = b.iter().zip(&c).map(|(p, q)| p.conj() * q).sum();
                for (x, y) in c.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let n1: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n1 > 1e-8 * n0.max(f64::MIN_POSITIVE) {
            for x in c.iter_mut() {
                *x /= n1;
            }
            out.push(c);
        }
    }
    out
}

/// Leading (largest modulus) eigenpair of the operator `apply` on vectors of length `n`.
///
/// `project`, if given, is applied to every new basis vector; it keeps the iteration inside a
/// symmetry sector.
pub fn leading_eigenvector<T, F, P>(
    n: usize,
    mut apply: F,
    start: &[T],
    project: Option<P>,
    opts: &KrylovOptions,
) -> Result<KrylovResult<T>>
where
    T: Field,
    F: FnMut(&[T], &mut [T]),
    P: Fn(&mut [T]),
{
    assert_eq!(start.len(), n);
    let max_dim = opts.max_dim.max(3).min(n.max(1));
    let keep = opts.keep.clamp(1, max_dim.saturating_sub(1).max(1));
    let mut space = Subspace { v: Vec::new(), av: Vec::new(), h: Vec::new() };
    let mut matvecs = 0usize;
    let mut fallback = 0u64;

    let mut add = |space: &mut Subspace<T>, mut w: Vec<T>, matvecs: &mut usize| -> bool {
        if let Some(p) = project.as_ref() {
            p(&mut w);
        }
        if norm(&w) == 0.0 {
            return false;
        }
        let ratio = space.orthogonalize(&mut w);
        let nw = norm(&w);
        if ratio < 1e-10 || nw == 0.0 {
            return false;
        }
        scale_in_place(1.0 / nw, &mut w);
        let mut aw = vec![T::zero(); n];
        apply(&w, &mut aw);
        *matvecs += 1;
        space.push(w, aw);
        true
    };

    let first = if norm(start) > 0.0 { start.to_vec() } else { default_start(n) };
    if !add(&mut space, first, &mut matvecs) && !add(&mut space, default_start(n), &mut matvecs) {
        return Err(Error::InvalidParameter("start vector vanishes in the projected sector".into()));
    }

    loop {
        let (values, vectors) = space.ritz()?;
        let k = space.v.len();
        let theta = values[0];
        let mut y: Vec<c64> = (0..k).map(|i| vectors[(i, 0)]).collect();
        if T::IS_REAL {
            realify(&mut y);
        }
        let ynorm: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in y.iter_mut() {
            *c /= ynorm;
        }
        let x = combine(&space.v, &y, n);
        let ax = combine(&space.av, &y, n);
        let th = T::from_c64(theta);
        let mut r = ax.clone();
        axpy(T::zero() - th, &x, &mut r);
        let resid = norm(&r) / norm(&x).max(f64::MIN_POSITIVE);
        let real_ok = !T::IS_REAL || theta.im.abs() <= 1e-10 * theta.norm();
        let second = values.get(1).copied();
        if (resid <= opts.tol * theta.norm() && real_ok) || (k == n && real_ok) {
            let nx = norm(&x);
            let mut vector = x;
            scale_in_place(1.0 / nx, &mut vector);
            return Ok(KrylovResult { value: theta, vector, residual: resid / theta.norm(), matvecs, second });
        }
        if matvecs >= opts.max_matvecs {
            return Err(Error::NoConvergence { iterations: matvecs, residual: resid / theta.norm() });
        }

        if k >= max_dim {
            let mut cols: Vec<Vec<c64>> = Vec::new();
            cols.push(y.clone());
            for idx in 1..values.len() {
                if cols.len() >= keep {
                    break;
                }
                let yi: Vec<c64> = (0..k).map(|i| vectors[(i, idx)]).collect();
                if T::IS_REAL {
                    if values[idx].im < -1e-12 * values[idx].norm() {
                        continue;
                    }
                    cols.push(yi.iter().map(|c| c64::new(c.re, 0.0)).collect());
                    if values[idx].im.abs() > 1e-12 * values[idx].norm() {
                        cols.push(yi.iter().map(|c| c64::new(c.im, 0.0)).collect());
                    }
                } else {
                    cols.push(yi);
                }
            }
            let ys = orthonormal_columns(cols, T::IS_REAL);
            let v: Vec<Vec<T>> = ys.iter().map(|c| combine(&space.v, c, n)).collect();
            let av: Vec<Vec<T>> = ys.iter().map(|c| combine(&space.av, c, n)).collect();
            space = Subspace { v: Vec::new(), av: Vec::new(), h: Vec::new() };
            for (w, aw) in v.into_iter().zip(av) {
                space.push(w, aw);
            }
            if !add(&mut space, r, &mut matvecs) {
                fallback += 1;
                let mut w = default_start::<T>(n);
                w.rotate_left((fallback as usize * 7919) % n.max(1));
                add(&mut space, w, &mut matvecs);
            }
        } else {
            let next = space.av[k - 1].clone();
            if !add(&mut space, next, &mut matvecs) && !add(&mut space, r, &mut matvecs) {
                fallback += 1;
                let mut w = default_start::<T>(n);
                w.rotate_left((fallback as usize * 7919) % n.max(1));
                if !add(&mut space, w, &mut matvecs) {
                    return Err(Error::NoConvergence { iterations: matvecs, residual: resid / theta.norm() });
                }
            }
        }
    }
}
