//! Spin-1/2 chain Hamiltonians written as sums of two-site bond terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, kron, DenseOperator};

/// Model family and couplings. Only the parameters relevant to a family exist in its variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpinChainModel {
    /// `J Σ_j [σᶻ_j σᶻ_{j+1} + λ σˣ_j]`
    TransverseIsing { lambda: f64, j: f64 },
    /// `J Σ_j [Sˣ_j Sˣ_{j+1} + Sʸ_j Sʸ_{j+1} + Δ Sᶻ_j Sᶻ_{j+1}]`
    Xxz { delta: f64, j: f64 },
    /// `J S⃗₁·S⃗₂`
    HeisenbergPair { j: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

impl SpinChainModel {
    pub fn transverse_ising(lambda: f64) -> Self {
        Self::TransverseIsing { lambda, j: 1.0 }
    }

    pub fn xxz(delta: f64) -> Self {
        Self::Xxz { delta, j: 1.0 }
    }

    pub fn heisenberg_pair() -> Self {
        Self::HeisenbergPair { j: 1.0 }
    }

    pub fn with_j(self, j: f64) -> Self {
        match self {
            Self::TransverseIsing { lambda, .. } => Self::TransverseIsing { lambda, j },
            Self::Xxz { delta, .. } => Self::Xxz { delta, j },
            Self::HeisenbergPair { .. } => Self::HeisenbergPair { j },
        }
    }

    pub fn j(&self) -> f64 {
        match *self {
            Self::TransverseIsing { j, .. } | Self::Xxz { j, .. } | Self::HeisenbergPair { j } => j,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TransverseIsing { .. } => "ising",
            Self::Xxz { .. } => "xxz",
            Self::HeisenbergPair { .. } => "heisenberg",
        }
    }

    /// Local Hilbert-space dimension.
    pub fn site_dim(&self) -> usize {
        2
    }

    /// Whether the model conserves total Sᶻ (and hence the alternating charge of the transfer matrix).
    pub fn conserves_sz(&self) -> bool {
        !matches!(self, Self::TransverseIsing { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            Self::TransverseIsing { lambda, j } => lambda.is_finite() && j.is_finite(),
            Self::Xxz { delta, j } => delta.is_finite() && j.is_finite(),
            Self::HeisenbergPair { j } => j.is_finite(),
        };
        if !finite {
            return Err(Error::InvalidParameter(format!("non-finite coupling in {self:?}")));
        }
        Ok(())
    }
}

/// Four-by-four bond term `h_{j,j+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondHamiltonian {
    pub matrix: DenseOperator,
    pub field_split: String,
}

fn real2(m: [[f64; 2]; 2]) -> DenseOperator {
    DenseOperator::from_fn(2, 2, |i, j| c64::new(m[i][j], 0.0))
}

pub fn pauli_x() -> DenseOperator {
    real2([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> DenseOperator {
    DenseOperator::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => c64::new(0.0, -1.0),
        (1, 0) => c64::new(0.0, 1.0),
        _ => c64::new(0.0, 0.0),
    })
}

pub fn pauli_z() -> DenseOperator {
    real2([[1.0, 0.0], [0.0, -1.0]])
}

/// Two-site exchange (swap) operator.
pub fn swap() -> DenseOperator {
    DenseOperator::from_fn(4, 4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        c64::new(if j == b * 2 + a { 1.0 } else { 0.0 }, 0.0)
    })
}

pub fn bond_hamiltonian(model: &SpinChainModel) -> Result<BondHamiltonian> {
    model.validate()?;
    let id = DenseOperator::identity(2);
    let (sx, sy, sz) = (pauli_x(), pauli_y(), pauli_z());
    let (matrix, field_split) = match *model {
        SpinChainModel::TransverseIsing { lambda, j } => {
            let field = kron(&sx, &id).add(&kron(&id, &sx))?.scale(c64::new(lambda / 2.0, 0.0));
            let m = kron(&sz, &sz).add(&field)?.scale(c64::new(j, 0.0));
            (m, "transverse field split lambda/2 onto each site of every bond".to_string())
        }
        SpinChainModel::Xxz { delta, j } => {
            let m = kron(&sx, &sx)
                .add(&kron(&sy, &sy))?
                .add(&kron(&sz, &sz).scale(c64::new(delta, 0.0)))?
                .scale(c64::new(j / 4.0, 0.0));
            (m, "no single-site terms".to_string())
        }
        SpinChainModel::HeisenbergPair { j } => {
            let m = swap()
                .scale(c64::new(0.5, 0.0))
                .add(&DenseOperator::identity(4).scale(c64::new(-0.25, 0.0)))?
                .scale(c64::new(j, 0.0));
            (m, "no single-site terms".to_string())
        }
    };
    Ok(BondHamiltonian { matrix, field_split })
}

/// Real entries of the bond matrix, row-major; all models here are real.
pub fn bond_matrix_real(model: &SpinChainModel) -> Result<[f64; 16]> {
    let b = bond_hamiltonian(model)?;
    let mut out = [0.0; 16];
    for (o, z) in out.iter_mut().zip(b.matrix.entries()) {
        *o = z.re;
    }
    Ok(out)
}

/// Largest chain length accepted by [`chain_hamiltonian`].
pub const MAX_DENSE_LENGTH: usize = 12;

/// Adds `op` (a `2^k × 2^k` operator on consecutive `sites`) into `h`, site 0 most significant.
pub(crate) fn embed_add(h: &mut DenseOperator, length: usize, sites: &[usize], op: &DenseOperator) {
    let k = sites.len();
    let dim = 1usize << length;
    let shift = |s: usize| length - 1 - s;
    for a in 0..dim {
        let mut local_in = 0usize;
        for &s in sites {
            local_in = (local_in << 1) | ((a >> shift(s)) & 1);
        }
        let mut rest = a;
        for &s in sites {
            rest &= !(1 << shift(s));
        }
        for local_out in 0..(1usize << k) {
            let v = op[(local_out, local_in)];
            if v.norm() == 0.0 {
                continue;
            }
            let mut b = rest;
            for (p, &s) in sites.iter().enumerate() {
                let bit = (local_out >> (k - 1 - p)) & 1;
                b |= bit << shift(s);
            }
            h[(b, a)] += v;
        }
    }
}

/// Full chain Hamiltonian on `2^length` states.
pub fn chain_hamiltonian(model: &SpinChainModel, length: usize, boundary: Boundary) -> Result<DenseOperator> {
    if !(2..=MAX_DENSE_LENGTH).contains(&length) {
        return Err(Error::InvalidParameter(format!(
            "chain length {length} outside 2..={MAX_DENSE_LENGTH}"
        )));
    }
    let bond = bond_hamiltonian(model)?.matrix;
    let mut h = DenseOperator::zeros(1 << length, 1 << length);
    let nbonds = match boundary {
        Boundary::Open => length - 1,
        Boundary::Periodic => length,
    };
    for b in 0..nbonds {
        embed_add(&mut h, length, &[b, (b + 1) % length], &bond);
    }
    if let (Boundary::Open, SpinChainModel::TransverseIsing { lambda, j }) = (boundary, model) {
        let end = pauli_x().scale(c64::new(j * lambda / 2.0, 0.0));
        embed_add(&mut h, length, &[0], &end);
        embed_add(&mut h, length, &[length - 1], &end);
    }
    Ok(h)
}

/// `2 Σ_k (-1)^k s_k` for auxiliary spin projections `s_k = ±1/2`.
pub fn sz_alternating_charge(aux_config: &[f64]) -> Result<i64> {
    if aux_config.len() % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "auxiliary configuration has odd length {}",
            aux_config.len()
        )));
    }
    let mut total = 0i64;
    for (k, &s) in aux_config.iter().enumerate() {
        let twice = if s == 0.5 {
            1
        } else if s == -0.5 {
            -1
        } else {
            return Err(Error::InvalidParameter(format!("spin projection {s} is not ±1/2")));
        };
        total += if k % 2 == 0 { twice } else { -twice };
    }
    Ok(total)
}
