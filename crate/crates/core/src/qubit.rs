//! Two coupled qubits `H = S⃗₁·S⃗₂`: pure-state, canonical, mutual-information and
//! imaginary-time-cut entanglement in closed or exactly contracted form.
//!
//! # Two-column network
//!
//! The trace `Tr e^{−βH}` is written as a two-column network with `P` rows. Each row carries one
//! auxiliary spin (legs `a_in`, `a_out`) and crosses a single world line `v`. Every vertex is the
//! rotated plaquette `R = T·τ`, with `T` the exchange of the two spins:
//!
//! ```text
//!   R[o_a, o_s, i_a, i_s] = (T τ)[(o_a o_s), (i_a i_s)]
//!
//!   even row k:  w[a_in, a_out, v_k, v_{k+1}] = R[a_out, v_{k+1}, a_in, v_k]
//!   odd row k:   w[a_in, a_out, v_k, v_{k+1}] = R[a_out, v_k, a_in, v_{k+1}]
//! ```
//!
//! The left column uses `τ = 1` (pure shifts), the right column `τ = exp(−δβ H)` with
//! `δβ = β/P`. The shift column factorizes as `|u⟩⟨w|`, so `ρ̄ = |u⟩⟨w|·T_τ` has rank one.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, general_eig, partial_trace, DenseOperator};
use crate::models::{bond_hamiltonian, swap, SpinChainModel};
use crate::qtm::contract_column;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitMeasures {
    pub temperature: f64,
    pub s_pure: f64,
    pub s_canonical: f64,
    pub mutual_info: f64,
    pub s_bar: f64,
}

fn hamiltonian() -> DenseOperator {
    bond_hamiltonian(&SpinChainModel::heisenberg_pair()).expect("valid model").matrix
}

/// `e^{−βH}|↑↓⟩`, normalized; basis order `↑↑, ↑↓, ↓↑, ↓↓`.
pub fn imaginary_time_state(beta: f64) -> Vec<c64> {
    let prop = linalg::matrix_exp_hermitian(&hamiltonian(), -beta).expect("Hermitian");
    let mut psi: Vec<c64> = (0..4).map(|i| prop[(i, 1)]).collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in psi.iter_mut() {
        *z /= norm;
    }
    psi
}

fn one_spin_entropy(rho: &DenseOperator) -> f64 {
    let r = partial_trace(rho, &[2, 2], &[0]).expect("4x4");
    let (w, _) = linalg::hermitian_eig(&r).expect("Hermitian");
    let w: Vec<f64> = w.into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / s).collect();
    linalg::von_neumann_entropy(&w).expect("normalized")
}

/// Entropy of one spin in `imaginary_time_state(beta)`.
pub fn pure_state_entropy(beta: f64) -> f64 {
    let psi = imaginary_time_state(beta);
    let rho = DenseOperator::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
    one_spin_entropy(&rho)
}

/// `(s_canonical, mutual_info)` of the canonical state at `temperature`.
pub fn canonical_measures(temperature: f64) -> Result<(f64, f64)> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature {temperature} <= 0")));
    }
    let beta = 1.0 / temperature;
    let h = hamiltonian();
    let (e, _) = linalg::hermitian_eig(&h)?;
    let e0 = e[0];
    let raw: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|x| x / z).collect();
    let rho = linalg::matrix_exp_hermitian(&h, -beta)?;
    let tr = rho.trace();
    let rho = rho.scale(tr.inv());
    let s_a = one_spin_entropy(&rho);
    let s_th = linalg::von_neumann_entropy(&p)?;
    Ok((s_a, 2.0 * s_a - s_th))
}

fn vertex(tau: &DenseOperator) -> [f64; 16] {
    let r = swap().matmul(tau).expect("4x4");
    let mut out = [0.0; 16];
    for (o, z) in out.iter_mut().zip(r.entries()) {
        *o = z.re;
    }
    out
}

fn column_rows(tau: &DenseOperator, rows: usize) -> Vec<Vec<f64>> {
    let r = vertex(tau);
    let rv = |oa: usize, os: usize, ia: usize, is: usize| r[(oa * 2 + os) * 4 + ia * 2 + is];
    (0..rows)
        .map(|k| {
            let mut w = vec![0.0; 16];
            for a in 0..2 {
                for b in 0..2 {
                    for lo in 0..2 {
                        for hi in 0..2 {
                            w[((a * 2 + b) * 2 + lo) * 2 + hi] =
                                if k % 2 == 0 { rv(b, hi, a, lo) } else { rv(b, lo, a, hi) };
                        }
                    }
                }
            }
            w
        })
        .collect()
}

/// Dense column of `rows` vertices built from the two-site operator `tau`.
pub fn qubit_column(tau: &DenseOperator, rows: usize) -> DenseOperator {
    let w = column_rows(tau, rows);
    let refs: Vec<&[f64]> = w.iter().map(|x| &x[..]).collect();
    let dim = 1usize << rows;
    DenseOperator::from_real(dim, dim, &contract_column(&refs, 2)).expect("square")
}

fn check_network(temperature: f64, plaquettes: usize) -> Result<()> {
    if plaquettes < 4 || plaquettes % 2 != 0 {
        return Err(Error::InvalidParameter(format!("plaquette count {plaquettes} must be even and >= 4")));
    }
    if plaquettes > 12 {
        return Err(Error::InvalidParameter(format!("plaquette count {plaquettes} above 12")));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature {temperature} <= 0")));
    }
    Ok(())
}

/// Factors `(u, y)` with `ρ̄ = |u⟩ yᵀ`.
fn rank_one_factors(temperature: f64, plaquettes: usize) -> Result<(Vec<f64>, Vec<c64>)> {
    check_network(temperature, plaquettes)?;
    let n = plaquettes;
    let dim = 1usize << n;
    let db = 1.0 / (temperature * n as f64);
    let tau = linalg::matrix_exp_hermitian(&hamiltonian(), -db)?;
    let t_tau = qubit_column(&tau, n);
    let bit = |f: usize, k: usize| (f >> (n - 1 - k)) & 1;
    // Shift column: a_in(2p) = a_in(2p+1) and a_out(2p-1) = a_out(2p), cyclically.
    let u: Vec<f64> = (0..dim)
        .map(|f| if (0..n / 2).all(|p| bit(f, 2 * p) == bit(f, 2 * p + 1)) { 1.0 } else { 0.0 })
        .collect();
    let w: Vec<c64> = (0..dim)
        .map(|f| if (0..n / 2).all(|p| bit(f, (2 * p + n - 1) % n) == bit(f, 2 * p)) { 1.0 } else { 0.0 })
        .map(|x| c64::new(x, 0.0))
        .collect();
    Ok((u, t_tau.apply_transpose(&w)))
}

/// `ρ̄` of the two-column network with `plaquettes` rows, unnormalized: its trace is `Tr e^{−βH}`.
pub fn build_rho_bar_qubits(temperature: f64, plaquettes: usize) -> Result<DenseOperator> {
    let (u, y) = rank_one_factors(temperature, plaquettes)?;
    let dim = u.len();
    Ok(DenseOperator::from_fn(dim, dim, |i, j| y[j] * u[i]))
}

/// Imaginary-time-cut entropy of the qubit pair from the symmetric cut of the four-row network.
pub fn sbar_qubits(temperature: f64) -> Result<f64> {
    sbar_qubits_with(temperature, 4)
}

/// Imaginary-time-cut entropy for `plaquettes` rows; the cut keeps rows `1..=plaquettes/2`.
pub fn sbar_qubits_with(temperature: f64, plaquettes: usize) -> Result<f64> {
    Ok(rho_bar_qubits_spectrum(temperature, plaquettes)?.entropy)
}

/// Spectrum of `ρ̄_Ā` for the cut `1..=plaquettes/2`, padded with zeros to the cut dimension.
///
/// With `ρ̄ = |u⟩ yᵀ` and `U`, `Y` the reshapes of `u`, `y` over (cut, rest), `ρ̄_Ā = U Yᵀ / Z`.
/// Its nonzero eigenvalues are those of `Σ Qᵀ Yᵀ P` for the compact SVD `U = P Σ Qᵀ`; this avoids
/// diagonalizing the defective null space directly.
pub fn rho_bar_qubits_spectrum(temperature: f64, plaquettes: usize) -> Result<crate::qtm::EntanglementSpectrum> {
    let (u, y) = rank_one_factors(temperature, plaquettes)?;
    let n = plaquettes;
    let z: c64 = u.iter().zip(&y).map(|(a, b)| b * a).sum();
    let half = n / 2;
    let da = 1usize << half;
    let db = 1usize << (n - half);
    let split = |f: usize| {
        let a = (f >> (n - 1 - half)) & (da - 1);
        let b = ((f >> (n - 1)) << (n - 1 - half)) | (f & ((1 << (n - 1 - half)) - 1));
        (a, b)
    };
    let mut um = Mat::<f64>::zeros(da, db);
    let mut ym = Mat::<c64>::zeros(da, db);
    for f in 0..u.len() {
        let (a, b) = split(f);
        um[(a, b)] = u[f];
        ym[(a, b)] = y[f];
    }
    let svd = um.thin_svd().map_err(|_| Error::Decomposition)?;
    let s = svd.S().column_vector();
    let rank = (0..s.nrows()).filter(|&i| s[i] > 1e-12 * s[0]).count();
    let (p, q) = (svd.U(), svd.V());
    let k = DenseOperator::from_fn(rank, rank, |i, j| {
        let mut acc = c64::new(0.0, 0.0);
        for b in 0..db {
            let yp: c64 = (0..da).map(|a| ym[(a, b)] * p[(a, j)]).sum();
            acc += yp * q[(b, i)];
        }
        acc * s[i] / z
    });
    let eig = general_eig(&k)?;
    let mut values = linalg::clean_real(&eig.values, 1e-10)?;
    values.resize(da, 0.0);
    crate::qtm::EntanglementSpectrum::from_values(values, None, 1e-12)
}

/// All four measures at one temperature.
pub fn measures(temperature: f64) -> Result<QubitMeasures> {
    let (s_canonical, mutual_info) = canonical_measures(temperature)?;
    Ok(QubitMeasures {
        temperature,
        s_pure: pure_state_entropy(1.0 / temperature),
        s_canonical,
        mutual_info,
        s_bar: sbar_qubits(temperature)?,
    })
}

/// High-temperature asymptote `3(1 + 6 ln 2 + 2 ln T)/(64 T²)` of the imaginary-time-cut entropy.
pub fn sbar_asymptote(temperature: f64) -> f64 {
    3.0 * (1.0 + 6.0 * std::f64::consts::LN_2 + 2.0 * temperature.ln()) / (64.0 * temperature * temperature)
}
