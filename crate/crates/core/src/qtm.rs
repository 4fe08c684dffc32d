//! Checkerboard lattice, quantum transfer matrix and imaginary-time reduced density matrices.
//!
//! # Leg convention
//!
//! One application of the transfer matrix advances the chain by two sites, `j` and `j+1`. The
//! column has `2M` rows; row `k` carries an auxiliary spin with an incoming leg `a_in` (row index
//! of the matrix) and an outgoing leg `a_out` (column index), and it is threaded by the two world
//! lines of sites `j` and `j+1`, entering from below as `(b_j, b_{j+1})` and leaving above as
//! `(u_j, u_{j+1})`. With `τ = exp(−δβ h)`:
//!
//! ```text
//!   even row (R):  W[a_in, a_out, (b_j, b_{j+1}), (u_j, u_{j+1})] = δ(u_j, a_in) · τ[(u_{j+1}, a_out), (b_j, b_{j+1})]
//!   odd row (L):   W[a_in, a_out, (b_j, b_{j+1}), (u_j, u_{j+1})] = τ[(b_j, b_{j+1}), (a_in, u_j)] · δ(a_out, u_{j+1})
//!
//!            u_j  u_{j+1}
//!             |    |
//!   a_in ─────┼────┼───── a_out
//!             |    |
//!            b_j  b_{j+1}
//! ```
//!
//! At `δβ = 0` both rows are pure shifts. The world lines close periodically from row `2M−1`
//! back to row 0. Auxiliary row 0 is the most significant factor of a matrix index and spin up is
//! state 0. With these conventions `Tr 𝒯^{L/2}` equals the row-to-row Trotter partition function
//! `Tr[(e^{−δβ H_even} e^{−δβ H_odd})^M]` of the periodic `L`-site chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, clean_real, general_eig, BiorthogonalPair, DenseOperator, Tolerances,
};
use crate::models::{bond_hamiltonian, BondHamiltonian, SpinChainModel};

/// Imaginary-time discretization `β = M δβ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterGrid {
    pub delta_beta: f64,
    pub trotter_m: usize,
    pub beta: f64,
    pub temperature: f64,
}

impl TrotterGrid {
    pub fn new(delta_beta: f64, trotter_m: usize) -> Result<Self> {
        if !(delta_beta > 0.0 && delta_beta.is_finite()) || trotter_m == 0 {
            return Err(Error::InvalidParameter(format!(
                "need delta_beta > 0 and M >= 1, got {delta_beta} and {trotter_m}"
            )));
        }
        let beta = trotter_m as f64 * delta_beta;
        Ok(Self { delta_beta, trotter_m, beta, temperature: 1.0 / beta })
    }

    /// Grid reaching `temperature` at step `delta_beta`; `1/(T δβ)` must be an integer within 1e-9.
    pub fn from_temperature(temperature: f64, delta_beta: f64) -> Result<Self> {
        let m = 1.0 / (temperature * delta_beta);
        let rounded = m.round();
        if !(temperature > 0.0) || rounded < 1.0 || (m - rounded).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature {temperature} is not 1/(M delta_beta) for integer M at delta_beta {delta_beta}"
            )));
        }
        Self::new(delta_beta, rounded as usize)
    }

    /// Number of auxiliary sites `2M`.
    pub fn aux_sites(&self) -> usize {
        2 * self.trotter_m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Even rows.
    R,
    /// Odd rows.
    L,
}

impl Orientation {
    pub fn of_row(row: usize) -> Self {
        if row % 2 == 0 {
            Self::R
        } else {
            Self::L
        }
    }
}

/// Row tensor `W[a_in][a_out][b_j b_{j+1}][u_j u_{j+1}]`, flattened row-major (64 entries).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plaquette {
    pub orientation: Orientation,
    pub data: [f64; 64],
}

impl Plaquette {
    #[inline]
    pub fn get(&self, a_in: usize, a_out: usize, below: usize, above: usize) -> f64 {
        self.data[((a_in * 2 + a_out) * 4 + below) * 4 + above]
    }
}

/// `exp(−δβ h)` as a real 4×4 array, row-major.
pub fn bond_propagator(bond: &BondHamiltonian, delta_beta: f64) -> Result<[f64; 16]> {
    let tau = linalg::matrix_exp_hermitian(&bond.matrix, -delta_beta)?;
    let mut out = [0.0; 16];
    for (o, z) in out.iter_mut().zip(tau.entries()) {
        if z.im.abs() > 1e-12 {
            return Err(Error::InvalidParameter("bond propagator is not real".into()));
        }
        *o = z.re;
    }
    Ok(out)
}

/// Row tensor built from a 4×4 propagator `tau[(o1 o2), (i1 i2)]`.
pub fn plaquette_from_propagator(tau: &[f64; 16], orientation: Orientation) -> Plaquette {
    let t = |o1: usize, o2: usize, i1: usize, i2: usize| tau[(o1 * 2 + o2) * 4 + i1 * 2 + i2];
    let mut data = [0.0; 64];
    for a in 0..2 {
        for o in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for u in 0..2 {
                        for x in 0..2 {
                            let v = match orientation {
                                Orientation::R => {
                                    if u == a {
                                        t(x, o, b, c)
                                    } else {
                                        0.0
                                    }
                                }
                                Orientation::L => {
                                    if o == x {
                                        t(b, c, a, u)
                                    } else {
                                        0.0
                                    }
                                }
                            };
                            data[((a * 2 + o) * 4 + b * 2 + c) * 4 + u * 2 + x] = v;
                        }
                    }
                }
            }
        }
    }
    Plaquette { orientation, data }
}

/// Plaquette of the given orientation for `τ = exp(−δβ h)`.
pub fn plaquette(bond: &BondHamiltonian, delta_beta: f64, orientation: Orientation) -> Result<Plaquette> {
    if !(delta_beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta_beta {delta_beta} < 0")));
    }
    Ok(plaquette_from_propagator(&bond_propagator(bond, delta_beta)?, orientation))
}

/// Contracts a periodic column of row tensors into a dense matrix on `2^rows` states.
///
/// Each row tensor is `w[a_in][a_out][below][above]` with bond dimension `chi`, flattened
/// row-major.
pub(crate) fn contract_column(rows: &[&[f64]], chi: usize) -> Vec<f64> {
    assert!(!rows.is_empty());
    // x[I][O][b][u], I and O over the rows contracted so far.
    let mut x: Vec<f64> = rows[0].to_vec();
    let mut dim = 2usize;
    for w in &rows[1..] {
        let nd = dim * 2;
        let mut y = vec![0.0; nd * nd * chi * chi];
        for i in 0..dim {
            for o in 0..dim {
                for b in 0..chi {
                    for u in 0..chi {
                        let xv = x[((i * dim + o) * chi + b) * chi + u];
                        if xv == 0.0 {
                            continue;
                        }
                        for a in 0..2 {
                            for oo in 0..2 {
                                let base = ((a * 2 + oo) * chi + u) * chi;
                                let yi = i * 2 + a;
                                let yo = o * 2 + oo;
                                let yb = ((yi * nd + yo) * chi + b) * chi;
                                for v in 0..chi {
                                    y[yb + v] += xv * w[base + v];
                                }
                            }
                        }
                    }
                }
            }
        }
        x = y;
        dim = nd;
    }
    let mut out = vec![0.0; dim * dim];
    for io in 0..dim * dim {
        let mut s = 0.0;
        for b in 0..chi {
            s += x[(io * chi + b) * chi + b];
        }
        out[io] = s;
    }
    out
}

/// Dense transfer matrix on the `2M`-site auxiliary space.
#[derive(Clone, Debug)]
pub struct QtmOperator {
    pub matrix: DenseOperator,
    pub grid: TrotterGrid,
    pub model: SpinChainModel,
}

/// Largest auxiliary dimension built densely.
pub const DENSE_QTM_LIMIT: usize = 1 << 12;

pub fn row_plaquettes(model: &SpinChainModel, delta_beta: f64) -> Result<[Plaquette; 2]> {
    let bond = bond_hamiltonian(model)?;
    let tau = bond_propagator(&bond, delta_beta)?;
    Ok([
        plaquette_from_propagator(&tau, Orientation::R),
        plaquette_from_propagator(&tau, Orientation::L),
    ])
}

pub fn build_qtm(model: &SpinChainModel, grid: &TrotterGrid) -> Result<QtmOperator> {
    let n = grid.aux_sites();
    let dim = 1usize.checked_shl(n as u32).unwrap_or(usize::MAX);
    if n >= 40 || dim > DENSE_QTM_LIMIT {
        return Err(Error::OverBudget {
            dim,
            limit: DENSE_QTM_LIMIT,
            max_m: (DENSE_QTM_LIMIT.trailing_zeros() / 2) as usize,
        });
    }
    let [pr, pl] = row_plaquettes(model, grid.delta_beta)?;
    let rows: Vec<&[f64]> = (0..n).map(|k| if k % 2 == 0 { &pr.data[..] } else { &pl.data[..] }).collect();
    let dense = contract_column(&rows, 4);
    Ok(QtmOperator { matrix: DenseOperator::from_real(dim, dim, &dense)?, grid: *grid, model: *model })
}

/// Leading eigenpair of the transfer matrix; the subleading eigenvalue is recorded as well.
pub fn leading_state(qtm: &QtmOperator, tol: f64) -> Result<BiorthogonalPair> {
    let pair = linalg::leading_eigenpair_general(&qtm.matrix, tol, 10_000)?;
    Ok(pair)
}

/// Free energy per lattice site, `f = −(T/2) ln Λ₀`; one transfer-matrix step covers two sites.
pub fn free_energy(pair: &BiorthogonalPair, grid: &TrotterGrid) -> Result<f64> {
    free_energy_from_eigenvalue(pair.eigenvalue, grid)
}

pub fn free_energy_from_eigenvalue(lambda: c64, grid: &TrotterGrid) -> Result<f64> {
    if !(lambda.re > 0.0) || lambda.im.abs() > 1e-10 * lambda.norm() {
        return Err(Error::NonPositive(lambda.re));
    }
    Ok(-0.5 * grid.temperature * lambda.re.ln())
}

/// Contiguous run of auxiliary sites on the periodic imaginary-time axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxCut {
    pub start: usize,
    pub len: usize,
}

impl AuxCut {
    /// Half cut starting at row 1: `M` sites for even `M`, `M − 1` for odd `M`.
    pub fn symmetric(trotter_m: usize) -> Self {
        Self { start: 1, len: trotter_m - trotter_m % 2 }
    }

    pub fn complement(&self, aux_sites: usize) -> Self {
        Self { start: (self.start + self.len) % aux_sites, len: aux_sites - self.len }
    }

    pub fn sites(&self, aux_sites: usize) -> Vec<usize> {
        (0..self.len).map(|i| (self.start + i) % aux_sites).collect()
    }
}

/// `Tr_B̄ |Ψ_R⟩⟨Ψ_L|` on the sites of `cut` (in cyclic order from `cut.start`).
pub fn rho_bar_reduced(pair: &BiorthogonalPair, cut: &AuxCut) -> Result<DenseOperator> {
    let dim = pair.right.len();
    if !dim.is_power_of_two() || pair.left.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: "power-of-two auxiliary dimension".into(),
            actual: format!("{dim}"),
        });
    }
    let n = dim.trailing_zeros() as usize;
    if cut.len % 2 != 0 || cut.len > n || (cut.start >= n && n > 0) {
        return Err(Error::InvalidParameter(format!(
            "cut {cut:?} on {n} auxiliary sites must be even and in range"
        )));
    }
    let kept = cut.sites(n);
    let traced = cut.complement(n).sites(n);
    let da = 1usize << kept.len();
    let db = 1usize << traced.len();
    let bit = |f: usize, s: usize| (f >> (n - 1 - s)) & 1;
    let mut rm = faer::Mat::<c64>::zeros(da, db);
    let mut lm = faer::Mat::<c64>::zeros(da, db);
    for f in 0..dim {
        let a = kept.iter().fold(0, |acc, &s| (acc << 1) | bit(f, s));
        let b = traced.iter().fold(0, |acc, &s| (acc << 1) | bit(f, s));
        rm[(a, b)] = pair.right[f];
        lm[(a, b)] = pair.left[f];
    }
    let x = &rm * lm.transpose();
    Ok(DenseOperator::from_faer(x.as_ref()))
}

/// Alternating charge `2 Σ_k (−1)^k s_k` of every basis state on the listed auxiliary sites.
pub fn alternating_charges(sites: &[usize]) -> Vec<i64> {
    let n = sites.len();
    (0..1usize << n)
        .map(|a| {
            sites
                .iter()
                .enumerate()
                .map(|(p, &s)| {
                    let up = (a >> (n - 1 - p)) & 1 == 0;
                    let twice = if up { 1 } else { -1 };
                    if s % 2 == 0 { twice } else { -twice }
                })
                .sum()
        })
        .collect()
}

/// Descending weights of a reduced density matrix, optional sector labels, and the entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    pub weights: Vec<f64>,
    pub labels: Option<Vec<i64>>,
    pub entropy: f64,
}

impl EntanglementSpectrum {
    /// Builds a spectrum from raw real eigenvalues (and labels), clipping values in
    /// `[−clip, 0)` to zero and renormalizing.
    pub fn from_values(values: Vec<f64>, labels: Option<Vec<i64>>, clip: f64) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidWeights(format!("eigenvalues sum to {sum}")));
        }
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let mut weights = Vec::with_capacity(values.len());
        for &i in &idx {
            let w = values[i] / sum;
            if w < -clip {
                return Err(Error::InvalidWeights(format!("eigenvalue {w:e} below the clip threshold")));
            }
            weights.push(w.max(0.0));
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let labels = labels.map(|l| idx.iter().map(|&i| l[i]).collect());
        let entropy = linalg::von_neumann_entropy(&weights)?;
        Ok(Self { weights, labels, entropy })
    }

    /// `−ln ξ_i` for every nonzero weight.
    pub fn levels(&self) -> Vec<f64> {
        self.weights.iter().filter(|&&w| w > 0.0).map(|w| -w.ln()).collect()
    }
}

/// Spectrum of `rho_bar_a`. With `labels`, the matrix is diagonalized sector by sector; elements
/// between different sectors must vanish.
pub fn entanglement_spectrum(rho_bar_a: &DenseOperator, labels: Option<&[i64]>) -> Result<EntanglementSpectrum> {
    entanglement_spectrum_with(rho_bar_a, labels, &Tolerances::default())
}

pub fn entanglement_spectrum_with(
    rho_bar_a: &DenseOperator,
    labels: Option<&[i64]>,
    tols: &Tolerances,
) -> Result<EntanglementSpectrum> {
    let tr = rho_bar_a.trace();
    if (tr - c64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidParameter(format!("reduced density matrix has trace {tr}")));
    }
    let n = rho_bar_a.rows();
    match labels {
        None => {
            let eig = general_eig(rho_bar_a)?;
            let values = clean_real(&eig.values, tols.imag_cleanup)?;
            EntanglementSpectrum::from_values(values, None, tols.negative_weight)
        }
        Some(q) => {
            if q.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n} labels"),
                    actual: format!("{}", q.len()),
                });
            }
            let scale = rho_bar_a.max_abs();
            let mut sectors: Vec<i64> = q.to_vec();
            sectors.sort_unstable();
            sectors.dedup();
            for i in 0..n {
                for j in 0..n {
                    if q[i] != q[j] && rho_bar_a[(i, j)].norm() > 1e-12 * scale.max(1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "matrix element ({i},{j}) couples sectors {} and {}",
                            q[i], q[j]
                        )));
                    }
                }
            }
            let mut values = Vec::with_capacity(n);
            let mut out_labels = Vec::with_capacity(n);
            let mut raw = Vec::with_capacity(n);
            for &s in &sectors {
                let idx: Vec<usize> = (0..n).filter(|&i| q[i] == s).collect();
                let block = DenseOperator::from_fn(idx.len(), idx.len(), |a, b| rho_bar_a[(idx[a], idx[b])]);
                let eig = general_eig(&block)?;
                raw.extend(eig.values.iter().copied());
                out_labels.extend(std::iter::repeat(s).take(idx.len()));
            }
            let cleaned = clean_real(&raw, tols.imag_cleanup)?;
            values.extend(cleaned);
            EntanglementSpectrum::from_values(values, Some(out_labels), tols.negative_weight)
        }
    }
}

/// Entanglement spectrum of the cut, with alternating-charge labels when the model conserves Sᶻ.
pub fn cut_spectrum(model: &SpinChainModel, pair: &BiorthogonalPair, cut: &AuxCut) -> Result<EntanglementSpectrum> {
    let rho = rho_bar_reduced(pair, cut)?;
    let n = pair.right.len().trailing_zeros() as usize;
    if model.conserves_sz() {
        let q = alternating_charges(&cut.sites(n));
        entanglement_spectrum(&rho, Some(&q))
    } else {
        entanglement_spectrum(&rho, None)
    }
}
