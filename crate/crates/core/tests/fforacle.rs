mod common;

use std::f64::consts::{FRAC_PI_2, LN_2, PI, SQRT_2};

use proptest::prelude::*;
use qtment::fforacle::{
    bethe_velocity, brute_force_spectrum, charged_many_body_spectrum, compare_spectrum, entropy_from_levels,
    fit_scaling, group_levels, many_body_spectrum, many_body_spectrum_with, single_particle_levels, spacing_unit,
    FreeFermionSpectrum, PhaseTag,
};
use qtment::linalg::von_neumann_entropy;
use qtment::{EntanglementSpectrum, Error, SpinChainModel};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn quadrature_k(k: f64) -> f64 {
    let n = 20_000;
    let h = FRAC_PI_2 / n as f64;
    (0..n).map(|i| h / (1.0 - (k * ((i as f64 + 0.5) * h).sin()).powi(2)).sqrt()).sum()
}

fn multiplicities(levels: &FreeFermionSpectrum, count: usize) -> Vec<u64> {
    let cutoff = levels.many_body_spacing() * (count as f64 - 0.5);
    many_body_spectrum(levels, cutoff).unwrap().iter().map(|l| l.multiplicity).collect()
}

fn modes_of(levels: &FreeFermionSpectrum) -> Vec<f64> {
    levels
        .levels
        .iter()
        .zip(&levels.orbital_degeneracy)
        .flat_map(|(&e, &g)| std::iter::repeat(e).take(g as usize))
        .collect()
}

/// Normalized weights `e^{−E}` of a predicted spectrum.
fn oracle_spectrum(levels: &FreeFermionSpectrum, cutoff: f64) -> EntanglementSpectrum {
    let values: Vec<f64> = many_body_spectrum(levels, cutoff)
        .unwrap()
        .iter()
        .flat_map(|l| std::iter::repeat((-l.energy).exp()).take(l.multiplicity as usize))
        .collect();
    EntanglementSpectrum::from_values(values, None, 0.0).unwrap()
}

#[test]
fn disordered_ising_levels() {
    let l = single_particle_levels(&SpinChainModel::transverse_ising(1.2), 5).unwrap();
    let k: f64 = 1.0 / 1.2;
    let eps = PI * quadrature_k((1.0 - k * k).sqrt()) / quadrature_k(k);
    assert_eq!(l.phase_tag, PhaseTag::IsingDisordered);
    assert!((l.unit - eps).abs() < 1e-9);
    for (j, (&e, &g)) in l.levels.iter().zip(&l.orbital_degeneracy).enumerate() {
        assert!((e - (2 * j + 1) as f64 * eps).abs() < 1e-8);
        assert_eq!(g, 2);
    }
}

#[test]
fn massive_xxz_levels() {
    let l = single_particle_levels(&SpinChainModel::xxz(10.0), 3).unwrap();
    let e1 = 2.0 * (10.0f64 + 99f64.sqrt()).ln();
    assert!((l.levels[1] - e1).abs() < 1e-13);
    assert!((l.levels[1] - 5.9864).abs() < 1e-4);
    assert!((l.levels[1] - 2.0 * 10f64.acosh()).abs() < 1e-13);
    assert_eq!(l.orbital_degeneracy, [1, 2, 2]);
}

#[test]
fn ordered_ising_zero_mode() {
    let l = single_particle_levels(&SpinChainModel::transverse_ising(0.8), 4).unwrap();
    assert_eq!(l.phase_tag, PhaseTag::IsingOrdered);
    assert_eq!(l.levels[0], 0.0);
    assert_eq!(l.orbital_degeneracy, [1, 2, 2, 2]);
    let eps = PI * quadrature_k(0.6) / quadrature_k(0.8);
    assert!((l.levels[1] - 2.0 * eps).abs() < 1e-8);
}

#[test]
fn critical_models_rejected() {
    for m in [
        SpinChainModel::transverse_ising(1.0),
        SpinChainModel::transverse_ising(-1.0),
        SpinChainModel::xxz(1.0),
        SpinChainModel::xxz(0.5),
        SpinChainModel::heisenberg_pair(),
    ] {
        assert!(matches!(spacing_unit(&m), Err(Error::InvalidParameter(_))), "{m:?}");
    }
}

#[test]
fn paper_degeneracy_sequences() {
    let ordered = single_particle_levels(&SpinChainModel::transverse_ising(0.8), 20).unwrap();
    assert_eq!(multiplicities(&ordered, 4), [2, 4, 6, 12]);
    let disordered = single_particle_levels(&SpinChainModel::transverse_ising(1.2), 20).unwrap();
    assert_eq!(multiplicities(&disordered, 8), [1, 2, 1, 2, 4, 4, 5, 6]);
    let xxz = single_particle_levels(&SpinChainModel::xxz(10.0), 20).unwrap();
    assert_eq!(multiplicities(&xxz, 4), [2, 4, 6, 12]);
}

#[test]
fn enumerator_matches_brute_force() {
    for phase in [PhaseTag::IsingOrdered, PhaseTag::IsingDisordered, PhaseTag::XxzMassive] {
        let levels = FreeFermionSpectrum::with_unit(phase, 1.0, 7).unwrap();
        let modes = modes_of(&levels);
        assert!(modes.len() <= 14);
        let cutoff = levels.many_body_spacing() * 9.5;
        let fast = many_body_spectrum(&levels, cutoff).unwrap();
        let slow = brute_force_spectrum(&modes, cutoff).unwrap();
        assert!(fast.len() >= 10);
        assert_eq!(fast.len(), slow.len(), "{phase:?}");
        for (a, b) in fast.iter().zip(&slow) {
            assert_eq!(a.multiplicity, b.multiplicity);
            assert!((a.energy - b.energy).abs() < 1e-12);
        }
    }
}

#[test]
fn enumeration_budget() {
    let levels = FreeFermionSpectrum::with_unit(PhaseTag::IsingDisordered, 0.1, 40).unwrap();
    assert!(matches!(many_body_spectrum_with(&levels, 10.0, 1000), Err(Error::Budget { budget: 1000 })));
    assert!(many_body_spectrum(&levels, 0.0).is_err());
    assert!(FreeFermionSpectrum::with_unit(PhaseTag::IsingOrdered, -1.0, 3).is_err());
}

#[test]
fn xxz_sector_charges() {
    let levels = single_particle_levels(&SpinChainModel::xxz(10.0), 20).unwrap();
    let charged = charged_many_body_spectrum(&levels, levels.many_body_spacing() * 3.5).unwrap();
    let counts = |q: i64, k: usize| charged[k].charges.iter().filter(|&&c| c == q).count();
    assert_eq!(charged[0].charges, [0, 0]);
    assert_eq!(charged[1].charges, [-2, -2, 2, 2]);
    assert_eq!((counts(0, 2), counts(2, 2), counts(-2, 2)), (6, 0, 0));
    assert_eq!((counts(0, 3), counts(2, 3), counts(-2, 3)), (0, 6, 6));
    let ising = single_particle_levels(&SpinChainModel::transverse_ising(0.8), 5).unwrap();
    assert!(charged_many_body_spectrum(&ising, 10.0).is_err());
}

#[test]
fn entropy_limits() {
    let zero_mode = FreeFermionSpectrum::with_unit(PhaseTag::IsingOrdered, 60.0, 40).unwrap();
    assert!((entropy_from_levels(&zero_mode).unwrap() - LN_2).abs() < 1e-12);
    let gapped = FreeFermionSpectrum::with_unit(PhaseTag::IsingDisordered, 60.0, 40).unwrap();
    assert!(entropy_from_levels(&gapped).unwrap() < 1e-12);
    let empty = FreeFermionSpectrum::with_unit(PhaseTag::IsingDisordered, 1.0, 0).unwrap();
    assert!(entropy_from_levels(&empty).is_err());
}

#[test]
fn entropy_decreases_with_spacing() {
    let s: Vec<f64> = (0..=95)
        .map(|k| 0.5 + 0.1 * k as f64)
        .map(|e| entropy_from_levels(&FreeFermionSpectrum::with_unit(PhaseTag::IsingOrdered, e, 40).unwrap()).unwrap())
        .collect();
    assert!(s.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn entropy_matches_enumerated_weights() {
    for (phase, unit) in [(PhaseTag::IsingOrdered, 2.0), (PhaseTag::IsingDisordered, 1.5), (PhaseTag::XxzMassive, 3.0)] {
        let levels = FreeFermionSpectrum::with_unit(phase, unit, 40).unwrap();
        let spec = oracle_spectrum(&levels, 40.0);
        let direct = von_neumann_entropy(&spec.weights).unwrap();
        assert!((direct - entropy_from_levels(&levels).unwrap()).abs() < 1e-10, "{phase:?}");
    }
}

#[test]
fn exact_spectrum_passes_comparison() {
    let levels = single_particle_levels(&SpinChainModel::transverse_ising(1.2), 40).unwrap();
    let spec = oracle_spectrum(&levels, 12.0 * levels.unit);
    let c = compare_spectrum(&spec, &levels, 8).unwrap();
    assert!(c.passes(1e-10), "{c:?}");
    assert!(c.labels_match.is_none());
    let groups = group_levels(&spec, 0.2 * levels.many_body_spacing());
    assert_eq!(groups.iter().take(4).map(|g| g.multiplicity).collect::<Vec<_>>(), [1, 2, 1, 2]);
    assert!(compare_spectrum(&spec, &levels, 0).is_err());
    assert!(compare_spectrum(&spec, &levels, 40).is_err());
}

#[test]
fn fit_recovers_exact_law() {
    let points: Vec<(f64, f64)> = (0..9).map(|k| 0.02 + 0.01 * k as f64).map(|t| (t, (2.0 / t).ln() / 6.0 + 0.3)).collect();
    let f = fit_scaling(&points, Some(2.0)).unwrap();
    assert!((f.central_charge - 0.5).abs() < 1e-12);
    assert!((f.c1.unwrap() - 0.3).abs() < 1e-12);
    assert!(f.residual < 1e-12);
    assert!(fit_scaling(&points, None).unwrap().c1.is_none());
}

#[test]
fn fit_rejects_bad_input() {
    assert!(fit_scaling(&[(0.1, 1.0), (0.2, 0.9)], None).is_err());
    assert!(fit_scaling(&[(0.1, 1.0), (0.1, 0.9), (0.1, 0.8)], None).is_err());
    assert!(fit_scaling(&[(0.1, 1.0), (-0.2, 0.9), (0.3, 0.8)], None).is_err());
    assert!(fit_scaling(&[(0.1, 1.0), (0.2, 0.9), (0.3, 0.8)], Some(0.0)).is_err());
}

#[test]
fn fit_noise_statistics() {
    let sigma = 1e-3;
    let temps: Vec<f64> = (0..9).map(|k| 0.02 + 0.01 * k as f64).collect();
    let mx = temps.iter().map(|t| t.ln()).sum::<f64>() / 9.0;
    let sxx: f64 = temps.iter().map(|t| (t.ln() - mx).powi(2)).sum();
    let sigma_c = 3.0 * sigma / sxx.sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let trials = 400;
    let cs: Vec<f64> = (0..trials)
        .map(|_| {
            let pts: Vec<(f64, f64)> =
                temps.iter().map(|&t| (t, (1.0 / t).ln() / 3.0 + 0.2 + noise.sample(&mut rng))).collect();
            fit_scaling(&pts, None).unwrap().central_charge
        })
        .collect();
    let mean = cs.iter().sum::<f64>() / trials as f64;
    let sd = (cs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
    assert!((sd / sigma_c - 1.0).abs() < 0.15, "{sd} vs {sigma_c}");
    assert!((mean - 1.0).abs() < 3.0 * sigma_c / (trials as f64).sqrt());
    let outside = cs.iter().filter(|c| (*c - 1.0).abs() > 3.0 * sigma_c).count();
    assert!(outside <= 4);
}

#[test]
fn bethe_velocities() {
    assert!((bethe_velocity(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((bethe_velocity(1.0, 1.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert!((bethe_velocity(1.0 - 1e-9, 1.0).unwrap() - FRAC_PI_2).abs() < 1e-4);
    assert!((bethe_velocity(SQRT_2 / 2.0, 1.0).unwrap() - SQRT_2).abs() < 1e-14);
    assert!((bethe_velocity(0.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
    assert!(bethe_velocity(-1.0, 1.0).is_err());
    assert!(bethe_velocity(1.1, 1.0).is_err());
}

proptest! {
    #[test]
    fn multiplicities_scale_free(unit in 0.2f64..5.0, phase in prop::sample::select(vec![PhaseTag::IsingOrdered, PhaseTag::IsingDisordered, PhaseTag::XxzMassive])) {
        let a = FreeFermionSpectrum::with_unit(phase, unit, 20).unwrap();
        let b = FreeFermionSpectrum::with_unit(phase, 1.0, 20).unwrap();
        prop_assert_eq!(multiplicities(&a, 8), multiplicities(&b, 8));
    }

    #[test]
    fn fit_rescaling_invariance(k in 0.1f64..10.0, v in 0.5f64..3.0, slope in -0.5f64..-0.05, c1 in -1.0f64..1.0) {
        let pts: Vec<(f64, f64)> = (1..8).map(|i| 0.01 * i as f64).map(|t| (t, slope * (t / v).ln() + c1 + 0.01 * (t * 37.0).sin())).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, s)| (k * t, s)).collect();
        let a = fit_scaling(&pts, Some(v)).unwrap();
        let b = fit_scaling(&scaled, Some(k * v)).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-10);
        prop_assert!((a.c1.unwrap() - b.c1.unwrap()).abs() < 1e-10);
    }
}
