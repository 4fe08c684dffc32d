mod common;

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use common::{random_complex, random_density, random_hermitian, random_real, rng};
use proptest::prelude::*;
use qtment::linalg::{
    elliptic_k, general_eig, hermitian_eig, kron, leading_eigenpair_general, matrix_exp_hermitian, partial_trace,
    von_neumann_entropy,
};
use qtment::models::{pauli_x, swap};
use qtment::{c64, DenseOperator, Error};

fn one() -> c64 {
    c64::new(1.0, 0.0)
}

fn quadrature_k(k: f64, n: usize) -> f64 {
    let h = 0.5 * PI / n as f64;
    (0..n)
        .map(|i| {
            let s = ((i as f64 + 0.5) * h).sin();
            h / (1.0 - k * k * s * s).sqrt()
        })
        .sum()
}

#[test]
fn kron_identities() {
    let id4 = kron(&DenseOperator::identity(2), &DenseOperator::identity(2));
    assert_eq!(id4, DenseOperator::identity(4));

    let (w, _) = hermitian_eig(&kron(&pauli_x(), &pauli_x())).unwrap();
    for (a, b) in w.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn kron_trace_factorizes() {
    let mut r = rng(7);
    let a = random_complex(&mut r, 3, 3);
    let b = random_complex(&mut r, 3, 3);
    let direct: c64 = (0..9).map(|i| a[(i / 3, i / 3)] * b[(i % 3, i % 3)]).sum();
    let k = kron(&a, &b);
    assert_eq!((k.rows(), k.cols()), (9, 9));
    assert!((k.trace() - a.trace() * b.trace()).norm() < 1e-12);
    assert!((k.trace() - direct).norm() < 1e-12);
}

#[test]
fn partial_trace_of_bell_state() {
    let mut bell = DenseOperator::zeros(4, 4);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        bell[(i, j)] = c64::new(0.5, 0.0);
    }
    let rho = partial_trace(&bell, &[2, 2], &[0]).unwrap();
    assert!(rho.max_abs_diff(&DenseOperator::diagonal(&[0.5, 0.5])) < 1e-15);
}

#[test]
fn partial_trace_of_product_state() {
    let mut p = DenseOperator::zeros(4, 4);
    p[(1, 1)] = one();
    assert!(partial_trace(&p, &[2, 2], &[0]).unwrap().max_abs_diff(&DenseOperator::diagonal(&[1.0, 0.0])) < 1e-15);
    assert!(partial_trace(&p, &[2, 2], &[1]).unwrap().max_abs_diff(&DenseOperator::diagonal(&[0.0, 1.0])) < 1e-15);
}

#[test]
fn partial_trace_matches_direct_sum() {
    let mut r = rng(11);
    let rho = random_density(&mut r, 8);
    let kept = partial_trace(&rho, &[2, 2, 2], &[1]).unwrap();
    let mut direct = DenseOperator::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    direct[(a, b)] += rho[(x * 4 + a * 2 + z, x * 4 + b * 2 + z)];
                }
            }
        }
    }
    assert!(kept.max_abs_diff(&direct) < 1e-15);
    assert!((kept.trace() - one()).norm() < 1e-12);
}

#[test]
fn partial_trace_rejects_bad_dims() {
    let err = partial_trace(&DenseOperator::identity(6), &[2, 2], &[0]).unwrap_err();
    match err {
        Error::DimensionMismatch { expected, actual } => {
            assert!(expected.contains('4'));
            assert!(actual.contains('6'));
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn hermitian_eig_small_cases() {
    let (w, _) = hermitian_eig(&DenseOperator::diagonal(&[3.0, 1.0, 2.0])).unwrap();
    assert_eq!(w.iter().map(|x| x.round() as i64).collect::<Vec<_>>(), [1, 2, 3]);

    let (w, _) = hermitian_eig(&pauli_x()).unwrap();
    assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);

    // SˣSˣ + SʸSʸ + SᶻSᶻ = P/2 − 1/4
    let bond = swap().scale(c64::new(0.5, 0.0)).add(&DenseOperator::identity(4).scale(c64::new(-0.25, 0.0))).unwrap();
    let (w, _) = hermitian_eig(&bond).unwrap();
    for (a, b) in w.iter().zip([-0.75, 0.25, 0.25, 0.25]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn hermitian_eig_residual_and_orthonormality() {
    let mut r = rng(3);
    let h = random_hermitian(&mut r, 12);
    let (w, v) = hermitian_eig(&h).unwrap();
    let vh = v.adjoint().matmul(&v).unwrap();
    assert!(vh.max_abs_diff(&DenseOperator::identity(12)) < 1e-10);
    for k in 0..12 {
        let col: Vec<c64> = (0..12).map(|i| v[(i, k)]).collect();
        let res: f64 = h.apply(&col).iter().zip(&col).map(|(a, b)| (a - b * w[k]).norm_sqr()).sum::<f64>().sqrt();
        assert!(res < 1e-8);
    }
}

#[test]
fn hermitian_eig_rejects_non_hermitian() {
    let a = DenseOperator::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
    assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
    assert!(matches!(matrix_exp_hermitian(&a, 1.0), Err(Error::NotHermitian { .. })));
}

#[test]
fn matrix_exp_basic() {
    let mut r = rng(5);
    let h = random_hermitian(&mut r, 5);
    assert!(matrix_exp_hermitian(&h, 0.0).unwrap().max_abs_diff(&DenseOperator::identity(5)) < 1e-13);
    let e = matrix_exp_hermitian(&DenseOperator::diagonal(&[0.3, -1.2]), 0.7).unwrap();
    assert!(e.max_abs_diff(&DenseOperator::diagonal(&[(0.21f64).exp(), (-0.84f64).exp()])) < 1e-14);
}

#[test]
fn matrix_exp_positive_definite() {
    let mut r = rng(6);
    let h = random_hermitian(&mut r, 6);
    let e = matrix_exp_hermitian(&h, -1.3).unwrap();
    assert!(e.hermiticity_defect() < 1e-12);
    let (w, _) = hermitian_eig(&e).unwrap();
    assert!(w[0] > 0.0);
}

#[test]
fn heisenberg_propagator_first_order() {
    let db = 0.01;
    let h = swap().scale(c64::new(0.5, 0.0)).add(&DenseOperator::identity(4).scale(c64::new(-0.25, 0.0))).unwrap();
    let exact = matrix_exp_hermitian(&h, -db).unwrap();
    let linear = DenseOperator::identity(4)
        .scale(c64::new(1.0 + db / 4.0, 0.0))
        .add(&swap().scale(c64::new(-db / 2.0, 0.0)))
        .unwrap();
    let dev = exact.max_abs_diff(&linear);
    assert!(dev < db * db, "deviation {dev}");
    assert!(dev > 0.01 * db * db);
}

#[test]
fn leading_pair_symmetric_matches_hermitian() {
    let mut r = rng(9);
    let a = random_real(&mut r, 8, 8);
    let s = a.add(&a.transpose()).unwrap();
    let s = s.add(&DenseOperator::identity(8).scale(c64::new(10.0, 0.0))).unwrap();
    let pair = leading_eigenpair_general(&s, 1e-10, 1000).unwrap();
    let (w, _) = hermitian_eig(&s).unwrap();
    assert!((pair.eigenvalue.re - w[7]).abs() < 1e-10);
    let nr = common::norm(&pair.right);
    for (a, b) in pair.right.iter().zip(&pair.left) {
        assert!((a - b * nr * nr).norm() < 1e-10);
    }
}

#[test]
fn leading_pair_triangular() {
    let a = DenseOperator::from_real(2, 2, &[2.0, 1.0, 0.0, 1.0]).unwrap();
    let p = leading_eigenpair_general(&a, 1e-12, 100).unwrap();
    assert!((p.eigenvalue - c64::new(2.0, 0.0)).norm() < 1e-14);
    assert!((p.right[0] - one()).norm() < 1e-14 && p.right[1].norm() < 1e-14);
    assert!((p.left[0] - p.left[1]).norm() < 1e-14);
    let overlap: c64 = p.left.iter().zip(&p.right).map(|(l, r)| l * r).sum();
    assert!((overlap - one()).norm() < 1e-14);
}

#[test]
fn leading_pair_similarity_invariant() {
    let mut r = rng(21);
    let a = random_real(&mut r, 6, 6).add(&DenseOperator::diagonal(&[4.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let s = random_real(&mut r, 6, 6).add(&DenseOperator::identity(6).scale(c64::new(3.0, 0.0))).unwrap();
    let s_inv = {
        let eig = general_eig(&s).unwrap();
        let n = 6;
        DenseOperator::from_fn(n, n, |i, j| (0..n).map(|k| eig.right[(i, k)] * eig.left[(j, k)] / eig.values[k]).sum())
    };
    assert!(s.matmul(&s_inv).unwrap().max_abs_diff(&DenseOperator::identity(6)) < 1e-10);
    let b = s.matmul(&a).unwrap().matmul(&s_inv).unwrap();
    let la = leading_eigenpair_general(&a, 1e-10, 1000).unwrap().eigenvalue;
    let lb = leading_eigenpair_general(&b, 1e-10, 1000).unwrap().eigenvalue;
    let full = general_eig(&a).unwrap().values[0];
    assert!((la - lb).norm() < 1e-10);
    assert!((la - full).norm() < 1e-10);
}

#[test]
fn leading_pair_rejects_degenerate_top() {
    let a = DenseOperator::diagonal(&[1.0, -1.0, 0.5]);
    assert!(matches!(leading_eigenpair_general(&a, 1e-8, 100), Err(Error::NearDegenerate { .. })));
}

#[test]
fn leading_pair_phase_convention() {
    let mut r = rng(2);
    let a = random_complex(&mut r, 5, 5).add(&DenseOperator::diagonal(&[5.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let p = leading_eigenpair_general(&a, 1e-10, 100).unwrap();
    let big = p.right.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
    assert!(big.im.abs() < 1e-14 && big.re > 0.0);
}

#[test]
fn entropy_values() {
    assert!((von_neumann_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
    assert_eq!(von_neumann_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
    let direct = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    let s = von_neumann_entropy(&[0.75, 0.25]).unwrap();
    assert!((s - direct).abs() < 1e-15);
    assert!((s - (4f64.ln() - 0.75 * 3f64.ln())).abs() < 1e-15);
    assert!((s - 0.56233).abs() < 1e-5);
}

#[test]
fn entropy_rejects_bad_weights() {
    assert!(matches!(von_neumann_entropy(&[1.1, -0.1]), Err(Error::InvalidWeights(_))));
    assert!(matches!(von_neumann_entropy(&[0.5, 0.4]), Err(Error::InvalidWeights(_))));
    assert!(von_neumann_entropy(&[1.0 + 1e-9, -1e-13]).is_ok());
    assert!((von_neumann_entropy(&[0.5, 0.5 + 1e-9]).unwrap() - LN_2).abs() < 1e-12);
}

#[test]
fn elliptic_k_values() {
    assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
    let (a, b, c) = (elliptic_k(0.1).unwrap(), elliptic_k(0.5).unwrap(), elliptic_k(0.9).unwrap());
    assert!(c > b && b > a);
    let k = elliptic_k(FRAC_1_SQRT_2).unwrap();
    assert!((k - 1.8540746773).abs() < 1e-10);
    assert!((k - quadrature_k(FRAC_1_SQRT_2, 4000)).abs() < 1e-12);
    assert!(elliptic_k(1.0).is_err());
    assert!(elliptic_k(-0.1).is_err());
}

#[test]
fn elliptic_k_matches_quadrature() {
    for k in [0.1, 0.5, 0.9, 0.99] {
        let q = quadrature_k(k, 20_000);
        let agm = elliptic_k(k).unwrap();
        assert!((agm - q).abs() < 1e-9, "k = {k}: {agm} vs {q}");
    }
}

#[test]
fn density_matrix_check() {
    let mut r = rng(1);
    let rho = random_density(&mut r, 4);
    assert!(rho.check_density_matrix(1e-10).is_ok());
    assert!(rho.scale(c64::new(2.0, 0.0)).check_density_matrix(1e-10).is_err());
    assert!(DenseOperator::from_entries(2, 2, vec![one(); 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), dims in prop::collection::vec(1usize..4, 1..4), mask in 0u8..8) {
        let total: usize = dims.iter().product();
        let mut r = rng(seed);
        let op = random_complex(&mut r, total, total);
        let keep: Vec<usize> = (0..dims.len()).filter(|s| mask >> s & 1 == 1).collect();
        let reduced = partial_trace(&op, &dims, &keep).unwrap();
        prop_assert!((reduced.trace() - op.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_in_stages(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, 8);
        let once = partial_trace(&rho, &[2, 2, 2], &[0]).unwrap();
        let drop_c = partial_trace(&rho, &[2, 2, 2], &[0, 1]).unwrap();
        let twice = partial_trace(&drop_c, &[2, 2], &[0]).unwrap();
        prop_assert!(once.max_abs_diff(&twice) < 1e-12);
    }

    #[test]
    fn matrix_exp_semigroup(seed in any::<u64>(), s1 in -1.0f64..1.0, s2 in -1.0f64..1.0) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, 6);
        let a = matrix_exp_hermitian(&h, s1).unwrap();
        let b = matrix_exp_hermitian(&h, s2).unwrap();
        let ab = matrix_exp_hermitian(&h, s1 + s2).unwrap();
        prop_assert!(a.matmul(&b).unwrap().max_abs_diff(&ab) < 1e-10);
    }

    #[test]
    fn leading_pair_of_hermitian(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n).add(&DenseOperator::identity(n).scale(c64::new(5.0, 0.0))).unwrap();
        let (w, _) = hermitian_eig(&h).unwrap();
        prop_assume!((w[n - 1] - w[n - 2]) / w[n - 1] > 1e-6);
        let pair = leading_eigenpair_general(&h, 1e-10, 1000).unwrap();
        prop_assert!((pair.eigenvalue.re - w[n - 1]).abs() < 1e-10);
    }

    #[test]
    fn entropy_permutation_and_padding(raw in prop::collection::vec(0.0f64..1.0, 1..12), zeros in 0usize..5, rot in 0usize..12) {
        let sum: f64 = raw.iter().sum();
        prop_assume!(sum > 1e-3);
        let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let s = von_neumann_entropy(&w).unwrap();
        let mut p = w.clone();
        p.rotate_left(rot % w.len());
        p.reverse();
        p.extend(std::iter::repeat(0.0).take(zeros));
        prop_assert!((von_neumann_entropy(&p).unwrap() - s).abs() < 1e-12);
    }
}
