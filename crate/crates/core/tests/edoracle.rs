mod common;

use std::f64::consts::LN_2;

use proptest::prelude::*;
use qtment::edoracle::{
    exact_partition_function, row_partition_function, spatial_measures, thermal_state, trotter_error_study,
};
use qtment::linalg::hermitian_eig;
use qtment::models::chain_hamiltonian;
use qtment::{c64, Boundary, DenseOperator, SpinChainModel, TrotterGrid};

#[test]
fn infinite_temperature_state() {
    let model = SpinChainModel::xxz(0.6);
    let h = chain_hamiltonian(&model, 4, Boundary::Periodic).unwrap();
    let norm = hermitian_eig(&h).unwrap().0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let id = DenseOperator::identity(16).scale(c64::new(1.0 / 16.0, 0.0));
    for t in [1e4, 1e9] {
        let s = thermal_state(&model, 4, Boundary::Periodic, t).unwrap();
        let dev = s.rho_c.max_abs_diff(&id);
        assert!(dev <= 1.01 * norm / (16.0 * t), "T = {t}: {dev}");
        assert!((s.rho_c.trace().re - 1.0).abs() < 1e-12);
    }
    let s = thermal_state(&model, 4, Boundary::Periodic, 1e9).unwrap();
    assert!(s.rho_c.max_abs_diff(&id) < 1e-8);
}

#[test]
fn zero_temperature_state_is_singlet() {
    let s = thermal_state(&SpinChainModel::heisenberg_pair(), 2, Boundary::Open, 1e-3).unwrap();
    let mut singlet = DenseOperator::zeros(4, 4);
    for (i, j, v) in [(1, 1, 0.5), (2, 2, 0.5), (1, 2, -0.5), (2, 1, -0.5)] {
        singlet[(i, j)] = c64::new(v, 0.0);
    }
    assert!(s.rho_c.max_abs_diff(&singlet) < 1e-8);
}

#[test]
fn pair_partition_function() {
    let s = thermal_state(&SpinChainModel::heisenberg_pair(), 2, Boundary::Open, 1.0).unwrap();
    let closed = 0.75f64.exp() + 3.0 * (-0.25f64).exp();
    assert!((s.partition_function - closed).abs() < 1e-12);
    assert!((s.partition_function - 4.453402).abs() < 1e-6);
    assert!((s.log_partition_function - closed.ln()).abs() < 1e-12);
}

#[test]
fn thermal_state_rejects_bad_input() {
    let m = SpinChainModel::xxz(1.0);
    assert!(thermal_state(&m, 4, Boundary::Open, 0.0).is_err());
    assert!(thermal_state(&m, 20, Boundary::Open, 1.0).is_err());
}

#[test]
fn hot_chain_has_no_correlations() {
    let s = thermal_state(&SpinChainModel::xxz(1.0), 6, Boundary::Periodic, 1e3).unwrap();
    let m = spatial_measures(&s, &[0, 1, 2]).unwrap();
    assert!(m.mutual_info.abs() < 1e-6);
    assert!((m.s_a - 3.0 * LN_2).abs() < 1e-5);
}

#[test]
fn pair_entropy_is_ln2() {
    for t in [0.05, 0.5, 5.0, 50.0] {
        let s = thermal_state(&SpinChainModel::heisenberg_pair(), 2, Boundary::Open, t).unwrap();
        let m = spatial_measures(&s, &[0]).unwrap();
        assert!((m.s_a - LN_2).abs() < 1e-12);
        assert!((m.s_b - LN_2).abs() < 1e-12);
    }
}

#[test]
fn hot_entropy_is_extensive() {
    let s = thermal_state(&SpinChainModel::xxz(1.0), 10, Boundary::Periodic, 10.0).unwrap();
    let sa: Vec<f64> = (2..=5).map(|n| spatial_measures(&s, &(0..n).collect::<Vec<_>>()).unwrap().s_a).collect();
    let per_site: Vec<f64> = sa.iter().zip(2..=5).map(|(s, n)| s / n as f64).collect();
    let mean = per_site.iter().sum::<f64>() / 4.0;
    assert!(per_site.iter().all(|p| (p / mean - 1.0).abs() < 0.05), "{per_site:?}");
    assert!(sa.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn region_validation() {
    let s = thermal_state(&SpinChainModel::xxz(1.0), 4, Boundary::Open, 1.0).unwrap();
    assert!(spatial_measures(&s, &[]).is_err());
    assert!(spatial_measures(&s, &[0, 1, 2, 3]).is_err());
    assert!(spatial_measures(&s, &[0, 2]).is_err());
    assert!(spatial_measures(&s, &[4]).is_err());
}

#[test]
fn pure_ground_state_symmetric_entropy() {
    let s = thermal_state(&SpinChainModel::transverse_ising(2.0), 6, Boundary::Open, 1e-3).unwrap();
    for region in [vec![0], vec![0, 1], vec![2, 3, 4]] {
        let m = spatial_measures(&s, &region).unwrap();
        assert!((m.s_a - m.s_b).abs() < 1e-8);
        assert!(m.s_th < 1e-8);
    }
}

#[test]
fn thermal_entropy_from_spectrum() {
    let model = SpinChainModel::transverse_ising(0.7);
    let t = 0.8;
    let s = thermal_state(&model, 6, Boundary::Periodic, t).unwrap();
    let (e, _) = hermitian_eig(&chain_hamiltonian(&model, 6, Boundary::Periodic).unwrap()).unwrap();
    let z: f64 = e.iter().map(|x| (-x / t).exp()).sum();
    let direct: f64 = e.iter().map(|x| (-x / t).exp() / z).map(|p| -p * p.ln()).sum();
    let m = spatial_measures(&s, &[0, 1]).unwrap();
    assert!((m.s_th - direct).abs() < 1e-12);
    assert!((exact_partition_function(&model, 6, t).unwrap() / z - 1.0).abs() < 1e-12);
}

#[test]
fn commuting_trotterization_is_exact() {
    let study = trotter_error_study(&SpinChainModel::transverse_ising(0.0), 6, 1.0, &[0.5, 0.25, 0.1]).unwrap();
    assert!(study.points.iter().all(|p| p.1 < 1e-12), "{:?}", study.points);
}

#[test]
fn trotter_error_is_second_order() {
    let study = trotter_error_study(&SpinChainModel::xxz(1.0), 6, 1.0, &[0.2, 0.1, 0.05, 0.025]).unwrap();
    assert!((study.exponent - 2.0).abs() < 0.1, "{}", study.exponent);
    let ratio = study.points[2].1 / study.points[3].1;
    assert!((ratio / 4.0 - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn trotter_study_rejects_fractional_steps() {
    assert!(trotter_error_study(&SpinChainModel::xxz(1.0), 4, 1.0, &[0.3]).is_err());
    let grid = TrotterGrid::new(0.1, 2).unwrap();
    assert!(row_partition_function(&SpinChainModel::xxz(1.0), 5, &grid).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mutual_information_nonnegative(lambda in 0.0f64..2.0, delta in -1.0f64..3.0, t in 0.05f64..20.0, ising in any::<bool>(), cut in 1usize..5) {
        let model = if ising { SpinChainModel::transverse_ising(lambda) } else { SpinChainModel::xxz(delta) };
        let s = thermal_state(&model, 5, Boundary::Open, t).unwrap();
        let m = spatial_measures(&s, &(0..cut).collect::<Vec<_>>()).unwrap();
        prop_assert!(m.mutual_info >= -1e-10);
        prop_assert!(m.s_a >= -1e-12 && m.s_b >= -1e-12);
    }
}
