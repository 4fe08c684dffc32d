#![allow(dead_code)]

use qtment::{c64, DenseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseOperator {
    DenseOperator::from_fn(rows, cols, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_real(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseOperator {
    DenseOperator::from_fn(rows, cols, |_, _| c64::new(rng.random_range(-1.0..1.0), 0.0))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> DenseOperator {
    let a = random_complex(rng, n, n);
    a.add(&a.adjoint()).unwrap().scale(c64::new(0.5, 0.0))
}

/// `A A† / Tr(A A†)`.
pub fn random_density(rng: &mut impl Rng, n: usize) -> DenseOperator {
    let a = random_complex(rng, n, n);
    let rho = a.matmul(&a.adjoint()).unwrap();
    let t = rho.trace();
    rho.scale(t.inv())
}

pub fn re(z: c64) -> f64 {
    z.re
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
