mod common;

use proptest::prelude::*;
use qtment::linalg::{hermitian_eig, kron};
use qtment::models::{
    bond_hamiltonian, chain_hamiltonian, pauli_x, pauli_z, sz_alternating_charge, MAX_DENSE_LENGTH,
};
use qtment::{c64, Boundary, DenseOperator, SpinChainModel};

fn eigenvalues(op: &DenseOperator) -> Vec<f64> {
    hermitian_eig(op).unwrap().0
}

fn assert_values(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

/// Product of single-site operators, site 0 most significant.
fn product(length: usize, ops: &[(usize, DenseOperator)]) -> DenseOperator {
    let mut out = DenseOperator::identity(1);
    for s in 0..length {
        let f = ops.iter().find(|(k, _)| *k == s).map_or_else(|| DenseOperator::identity(2), |(_, o)| o.clone());
        out = kron(&out, &f);
    }
    out
}

fn cyclic_shift(length: usize) -> DenseOperator {
    let dim = 1 << length;
    DenseOperator::from_fn(dim, dim, |i, j| {
        let rotated = (j >> 1) | ((j & 1) << (length - 1));
        c64::new(if i == rotated { 1.0 } else { 0.0 }, 0.0)
    })
}

fn commutator(a: &DenseOperator, b: &DenseOperator) -> f64 {
    a.matmul(b).unwrap().max_abs_diff(&b.matmul(a).unwrap())
}

fn total_sz2() -> DenseOperator {
    DenseOperator::diagonal(&[1.0, 0.0, 0.0, -1.0])
}

fn models() -> Vec<SpinChainModel> {
    vec![
        SpinChainModel::transverse_ising(0.0),
        SpinChainModel::transverse_ising(0.7),
        SpinChainModel::transverse_ising(1.3).with_j(0.5),
        SpinChainModel::xxz(-0.4),
        SpinChainModel::xxz(2.0).with_j(1.5),
        SpinChainModel::heisenberg_pair(),
    ]
}

#[test]
fn bond_spectra() {
    let ising = bond_hamiltonian(&SpinChainModel::transverse_ising(0.0)).unwrap().matrix;
    assert!(ising.max_abs_diff(&DenseOperator::diagonal(&[1.0, -1.0, -1.0, 1.0])) < 1e-15);

    let pair = bond_hamiltonian(&SpinChainModel::heisenberg_pair()).unwrap().matrix;
    assert_values(&eigenvalues(&pair), &[-0.75, 0.25, 0.25, 0.25]);

    let xx = bond_hamiltonian(&SpinChainModel::xxz(0.0)).unwrap().matrix;
    assert_values(&eigenvalues(&xx), &[-0.5, 0.0, 0.0, 0.5]);

    let xxx = bond_hamiltonian(&SpinChainModel::xxz(1.0)).unwrap().matrix;
    assert!(xxx.max_abs_diff(&pair) < 1e-15);
}

#[test]
fn bond_field_split() {
    let lambda = 0.6;
    let b = bond_hamiltonian(&SpinChainModel::transverse_ising(lambda)).unwrap().matrix;
    let id = DenseOperator::identity(2);
    let want = kron(&pauli_z(), &pauli_z())
        .add(&kron(&pauli_x(), &id).scale(c64::new(lambda / 2.0, 0.0)))
        .unwrap()
        .add(&kron(&id, &pauli_x()).scale(c64::new(lambda / 2.0, 0.0)))
        .unwrap();
    assert!(b.max_abs_diff(&want) < 1e-15);
}

#[test]
fn bonds_are_hermitian_and_symmetric() {
    for m in models() {
        let b = bond_hamiltonian(&m).unwrap().matrix;
        assert!(b.hermiticity_defect() < 1e-12);
        if m.conserves_sz() {
            assert!(commutator(&b, &total_sz2()) < 1e-12, "{m:?}");
        } else {
            assert!(commutator(&b, &kron(&pauli_x(), &pauli_x())) < 1e-12, "{m:?}");
        }
    }
}

#[test]
fn chain_ground_energies() {
    let pair = chain_hamiltonian(&SpinChainModel::heisenberg_pair(), 2, Boundary::Open).unwrap();
    assert!((eigenvalues(&pair)[0] + 0.75).abs() < 1e-12);

    let classical = chain_hamiltonian(&SpinChainModel::transverse_ising(0.0), 4, Boundary::Periodic).unwrap();
    assert!((eigenvalues(&classical)[0] + 4.0).abs() < 1e-12);

    let xxx = chain_hamiltonian(&SpinChainModel::xxz(1.0), 4, Boundary::Periodic).unwrap();
    assert!((eigenvalues(&xxx)[0] + 2.0).abs() < 1e-12);
}

#[test]
fn open_ising_chain_is_literal() {
    let (lambda, length) = (0.9, 4);
    let mut want = DenseOperator::zeros(16, 16);
    for s in 0..length {
        want = want.add(&product(length, &[(s, pauli_x())]).scale(c64::new(lambda, 0.0))).unwrap();
    }
    for s in 0..length - 1 {
        want = want.add(&product(length, &[(s, pauli_z()), (s + 1, pauli_z())])).unwrap();
    }
    let h = chain_hamiltonian(&SpinChainModel::transverse_ising(lambda), length, Boundary::Open).unwrap();
    assert!(h.max_abs_diff(&want) < 1e-12);
}

#[test]
fn open_chain_is_periodic_minus_wrap_bond() {
    for m in models() {
        for length in [3, 4, 5] {
            let open = chain_hamiltonian(&m, length, Boundary::Open).unwrap();
            let periodic = chain_hamiltonian(&m, length, Boundary::Periodic).unwrap();
            let last = length - 1;
            let wrap = match m {
                SpinChainModel::TransverseIsing { j, .. } => {
                    product(length, &[(last, pauli_z()), (0, pauli_z())]).scale(c64::new(j, 0.0))
                }
                SpinChainModel::Xxz { delta, j } => {
                    let y = qtment::models::pauli_y();
                    product(length, &[(last, pauli_x()), (0, pauli_x())])
                        .add(&product(length, &[(last, y.clone()), (0, y)]))
                        .unwrap()
                        .add(&product(length, &[(last, pauli_z()), (0, pauli_z())]).scale(c64::new(delta, 0.0)))
                        .unwrap()
                        .scale(c64::new(j / 4.0, 0.0))
                }
                SpinChainModel::HeisenbergPair { .. } => continue,
            };
            let diff = periodic.add(&wrap.scale(c64::new(-1.0, 0.0))).unwrap();
            assert!(diff.max_abs_diff(&open) < 1e-12, "{m:?} L = {length}");
        }
    }
}

#[test]
fn periodic_chain_translation_invariant() {
    for m in models() {
        for length in [3, 4, 6] {
            let h = chain_hamiltonian(&m, length, Boundary::Periodic).unwrap();
            let t = cyclic_shift(length);
            let moved = t.matmul(&h).unwrap().matmul(&t.transpose()).unwrap();
            assert!(moved.max_abs_diff(&h) < 1e-12, "{m:?} L = {length}");
        }
    }
}

#[test]
fn chain_length_limits() {
    let m = SpinChainModel::xxz(1.0);
    assert!(chain_hamiltonian(&m, 1, Boundary::Open).is_err());
    assert!(chain_hamiltonian(&m, MAX_DENSE_LENGTH + 1, Boundary::Open).is_err());
}

#[test]
fn non_finite_couplings_rejected() {
    assert!(bond_hamiltonian(&SpinChainModel::xxz(f64::NAN)).is_err());
    assert!(bond_hamiltonian(&SpinChainModel::transverse_ising(1.0).with_j(f64::INFINITY)).is_err());
}

#[test]
fn alternating_charge_examples() {
    assert_eq!(sz_alternating_charge(&[0.5; 4]).unwrap(), 0);
    assert_eq!(sz_alternating_charge(&[0.5, -0.5, 0.5, -0.5]).unwrap(), 4);
    assert!(sz_alternating_charge(&[0.5, 0.5, 0.5]).is_err());
    assert!(sz_alternating_charge(&[0.5, 0.3]).is_err());
}

#[test]
fn alternating_charge_single_flip() {
    for bits in 0u32..64 {
        let config: Vec<f64> = (0..6).map(|k| if bits >> k & 1 == 1 { 0.5 } else { -0.5 }).collect();
        let q = sz_alternating_charge(&config).unwrap();
        for k in 0..6 {
            let mut flipped = config.clone();
            flipped[k] = -flipped[k];
            assert_eq!((sz_alternating_charge(&flipped).unwrap() - q).abs(), 2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn xxz_chain_conserves_sz(delta in -3.0f64..3.0, length in 2usize..7) {
        let h = chain_hamiltonian(&SpinChainModel::xxz(delta), length, Boundary::Periodic).unwrap();
        let sz = DenseOperator::diagonal(&(0..1usize << length).map(|b| b.count_ones() as f64).collect::<Vec<_>>());
        prop_assert!(commutator(&h, &sz) < 1e-12);
    }

    #[test]
    fn ising_chain_commutes_with_parity(lambda in -2.0f64..2.0, length in 2usize..7) {
        let h = chain_hamiltonian(&SpinChainModel::transverse_ising(lambda), length, Boundary::Open).unwrap();
        let parity = product(length, &(0..length).map(|s| (s, pauli_x())).collect::<Vec<_>>());
        prop_assert!(commutator(&h, &parity) < 1e-12);
    }

    #[test]
    fn bond_scales_with_j(j in 0.1f64..3.0, lambda in -2.0f64..2.0) {
        let one = bond_hamiltonian(&SpinChainModel::transverse_ising(lambda)).unwrap().matrix;
        let scaled = bond_hamiltonian(&SpinChainModel::transverse_ising(lambda).with_j(j)).unwrap().matrix;
        prop_assert!(one.scale(c64::new(j, 0.0)).max_abs_diff(&scaled) < 1e-12);
    }
}
