//! Exact diagonalization of short chains: thermal states, spatial entanglement and the
//! Trotter error of the checkerboard decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, partial_trace, DenseOperator};
use crate::models::{bond_hamiltonian, chain_hamiltonian, embed_add, Boundary, SpinChainModel};
use crate::qtm::TrotterGrid;

/// Canonical state `ρ_c = e^{−H/T}/Z`.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub hamiltonian: DenseOperator,
    pub temperature: f64,
    pub rho_c: DenseOperator,
    pub partition_function: f64,
    pub log_partition_function: f64,
    /// Boltzmann weights of the energy eigenstates, ascending energy.
    pub boltzmann: Vec<f64>,
    pub length: usize,
}

pub fn thermal_state(model: &SpinChainModel, length: usize, boundary: Boundary, temperature: f64) -> Result<ThermalState> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature {temperature} <= 0")));
    }
    let h = chain_hamiltonian(model, length, boundary)?;
    let (e, v) = hermitian_eig(&h)?;
    let beta = 1.0 / temperature;
    let e0 = e[0];
    let raw: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
    let zs: f64 = raw.iter().sum();
    let boltzmann: Vec<f64> = raw.iter().map(|w| w / zs).collect();
    let n = h.rows();
    let mut rho = DenseOperator::zeros(n, n);
    for (k, &p) in boltzmann.iter().enumerate() {
        if p < 1e-300 {
            continue;
        }
        for i in 0..n {
            let vi = v[(i, k)] * p;
            if vi.norm() == 0.0 {
                continue;
            }
            for j in 0..n {
                rho[(i, j)] += vi * v[(j, k)].conj();
            }
        }
    }
    let log_z = zs.ln() - beta * e0;
    Ok(ThermalState {
        hamiltonian: h,
        temperature,
        rho_c: rho,
        partition_function: log_z.exp(),
        log_partition_function: log_z,
        boltzmann,
        length,
    })
}

/// Entropies of a spatial bipartition of a thermal state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialMeasures {
    pub s_a: f64,
    pub s_b: f64,
    pub s_th: f64,
    pub mutual_info: f64,
}

fn density_entropy(rho: &DenseOperator) -> Result<f64> {
    let (w, _) = hermitian_eig(rho)?;
    let w: Vec<f64> = w.into_iter().map(|x| if x.abs() < 1e-13 { 0.0 } else { x }).collect();
    linalg::von_neumann_entropy(&w)
}

pub fn spatial_measures(state: &ThermalState, region: &[usize]) -> Result<SpatialMeasures> {
    let l = state.length;
    if region.is_empty() || region.len() >= l || region.iter().any(|&s| s >= l) {
        return Err(Error::InvalidParameter(format!("region {region:?} is not a proper subset of {l} sites")));
    }
    let mut sorted = region.to_vec();
    sorted.sort_unstable();
    let contiguous = sorted.windows(2).all(|w| w[1] == w[0] + 1);
    if !contiguous {
        return Err(Error::InvalidParameter(format!("region {region:?} is not contiguous")));
    }
    let dims = vec![2usize; l];
    let rest: Vec<usize> = (0..l).filter(|s| !sorted.contains(s)).collect();
    let s_a = density_entropy(&partial_trace(&state.rho_c, &dims, &sorted)?)?;
    let s_b = density_entropy(&partial_trace(&state.rho_c, &dims, &rest)?)?;
    let s_th = linalg::von_neumann_entropy(&state.boltzmann)?;
    Ok(SpatialMeasures { s_a, s_b, s_th, mutual_info: s_a + s_b - s_th })
}

fn embedded(length: usize, sites: &[usize], op: &DenseOperator) -> DenseOperator {
    let mut h = DenseOperator::zeros(1 << length, 1 << length);
    embed_add(&mut h, length, sites, op);
    h
}

/// `Tr[(e^{−δβ H_even} e^{−δβ H_odd})^M]` for the periodic chain; bonds `(j, j+1)` with even `j`
/// form `H_even`, the rest (including the wrap-around bond) `H_odd`.
pub fn row_partition_function(model: &SpinChainModel, length: usize, grid: &TrotterGrid) -> Result<f64> {
    if length < 2 || length % 2 != 0 || length > 10 {
        return Err(Error::InvalidParameter(format!("checkerboard needs an even length in 2..=10, got {length}")));
    }
    let bond = bond_hamiltonian(model)?.matrix;
    let tau = linalg::matrix_exp_hermitian(&bond, -grid.delta_beta)?;
    let dim = 1usize << length;
    let mut ve = DenseOperator::identity(dim);
    let mut vo = DenseOperator::identity(dim);
    for j in 0..length {
        let t = embedded(length, &[j, (j + 1) % length], &tau);
        if j % 2 == 0 {
            ve = ve.matmul(&t)?;
        } else {
            vo = vo.matmul(&t)?;
        }
    }
    let step = ve.matmul(&vo)?;
    let mut acc = DenseOperator::identity(dim);
    for _ in 0..grid.trotter_m {
        acc = acc.matmul(&step)?;
    }
    Ok(acc.trace().re)
}

/// Exact `Tr e^{−βH}` of the periodic chain.
pub fn exact_partition_function(model: &SpinChainModel, length: usize, temperature: f64) -> Result<f64> {
    let h = chain_hamiltonian(model, length, Boundary::Periodic)?;
    let (e, _) = hermitian_eig(&h)?;
    Ok(e.iter().map(|x| (-x / temperature).exp()).sum())
}

/// Relative Trotter error of `Z` for each step and the fitted power law `err ∝ δβ^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterStudy {
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
}

pub fn trotter_error_study(
    model: &SpinChainModel,
    length: usize,
    temperature: f64,
    delta_beta_list: &[f64],
) -> Result<TrotterStudy> {
    let z = exact_partition_function(model, length, temperature)?;
    let mut points = Vec::new();
    for &db in delta_beta_list {
        let grid = TrotterGrid::from_temperature(temperature, db)?;
        let zt = row_partition_function(model, length, &grid)?;
        points.push((db, (zt - z).abs() / z));
    }
    let usable: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(d, e)| (d.ln(), e.ln())).collect();
    let exponent = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(TrotterStudy { points, exponent })
}
