//! Transfer-matrix DMRG along the imaginary-time axis.
//!
//! The column of `2M` rows is held as a ring `[S][x][y][E]`: two renormalized blocks and two
//! bare rows. Each step solves for the leading right and left eigenvectors of the ring, measures
//! the imaginary-time cut, then absorbs `x` into `S` and `y` into `E` and truncates both blocks
//! with the dominant eigenvectors of the non-Hermitian reduced density matrix. The ring grows by
//! one plaquette pair per step, `M → M + 1`, at fixed `δβ`.
//!
//! Ring position `r` corresponds to row `r + 1` of the dense column, so `S ∪ x` at even `M` (and
//! `S` at odd `M`) is exactly the cut [`AuxCut::symmetric`] of the dense path.
//!
//! Symmetries are kept exact. The Ising chain carries a spin-flip parity, made diagonal by a
//! Hadamard rotation of every auxiliary leg. Spin-conserving chains carry the alternating charge
//! and the spin flip, which maps charge `q` to `−q`; truncated states in sector `−q` are the flip
//! images of those in sector `q`, so the two sectors stay degenerate.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{self, KrylovOptions};
use crate::linalg::{c64, general_eig_faer, DenseOperator};
use crate::models::SpinChainModel;
use crate::qtm::{bond_propagator, plaquette_from_propagator, AuxCut, EntanglementSpectrum, Orientation, TrotterGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmrgConfig {
    pub kept_states: usize,
    pub delta_beta: f64,
    /// Descending; each must equal `1/(M δβ)` for an integer `M`.
    pub target_temperatures: Vec<f64>,
    /// Discarded weight above which a point is reported as poorly converged.
    pub truncation_floor: f64,
    /// Condition number of the biorthogonal Gram matrix above which the step falls back to the
    /// symmetrized reduced density matrix.
    pub gram_condition_limit: f64,
    /// Relative residual of the Krylov eigensolver.
    pub krylov_tol: f64,
}

impl Default for TmrgConfig {
    fn default() -> Self {
        Self {
            kept_states: 64,
            delta_beta: 0.025,
            target_temperatures: Vec::new(),
            truncation_floor: 1e-8,
            gram_condition_limit: 1e8,
            krylov_tol: 1e-11,
        }
    }
}

impl TmrgConfig {
    /// Trotter numbers of the targets in increasing order.
    pub fn target_steps(&self) -> Result<Vec<usize>> {
        if self.kept_states < 2 {
            return Err(Error::InvalidParameter(format!("kept_states {} < 2", self.kept_states)));
        }
        if !(self.delta_beta > 0.0 && self.delta_beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta_beta {} must be positive", self.delta_beta)));
        }
        let mut steps = Vec::new();
        for &t in &self.target_temperatures {
            steps.push(TrotterGrid::from_temperature(t, self.delta_beta)?.trotter_m);
        }
        steps.sort_unstable();
        steps.dedup();
        Ok(steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmrgPoint {
    pub temperature: f64,
    pub trotter_m: usize,
    pub s_bar: f64,
    /// Entropy of the complementary cut.
    pub s_bar_complement: f64,
    pub spectrum: EntanglementSpectrum,
    pub free_energy: f64,
    /// Largest discarded weight of any truncation so far.
    pub discarded_weight: f64,
    /// Number of states kept in the blocks.
    pub kept: usize,
    /// True when a truncation so far fell back to the symmetrized density matrix, or the
    /// discarded weight exceeds the configured floor.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    /// Spin-flip parity in the Hadamard-rotated basis.
    Parity,
    /// Alternating charge plus spin flip.
    ChargeFlip,
}

impl Symmetry {
    fn leg(self, bit: usize, row_type: usize) -> i64 {
        match self {
            Self::Parity => bit as i64,
            Self::ChargeFlip => {
                let s = if bit == 0 { 1 } else { -1 };
                if row_type == 0 {
                    s
                } else {
                    -s
                }
            }
        }
    }

    fn reduce(self, q: i64) -> i64 {
        match self {
            Self::Parity => q.rem_euclid(2),
            Self::ChargeFlip => q,
        }
    }
}

/// Signed permutation `Π e_i = sign_i e_{perm_i}`, an involution.
#[derive(Clone, Debug, PartialEq)]
struct Flip {
    perm: Vec<usize>,
    sign: Vec<f64>,
}

impl Flip {
    fn trivial(n: usize) -> Self {
        Self { perm: (0..n).collect(), sign: vec![1.0; n] }
    }

    /// On `(a, bit)`, `a` major.
    fn then_leg(&self) -> Self {
        let d = self.perm.len();
        let mut perm = vec![0; 2 * d];
        let mut sign = vec![0.0; 2 * d];
        for a in 0..d {
            for b in 0..2 {
                perm[a * 2 + b] = self.perm[a] * 2 + (1 - b);
                sign[a * 2 + b] = self.sign[a];
            }
        }
        Self { perm, sign }
    }

    /// On `(bit, a)`, `bit` major.
    fn leg_then(&self) -> Self {
        let d = self.perm.len();
        let mut perm = vec![0; 2 * d];
        let mut sign = vec![0.0; 2 * d];
        for b in 0..2 {
            for a in 0..d {
                perm[b * d + a] = (1 - b) * d + self.perm[a];
                sign[b * d + a] = self.sign[a];
            }
        }
        Self { perm, sign }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, &x) in v.iter().enumerate() {
            out[self.perm[i]] = self.sign[i] * x;
        }
    }
}

/// Quantum numbers of an index space.
#[derive(Clone, Debug)]
struct IndexSymmetry {
    charges: Vec<i64>,
    flip: Option<Flip>,
}

impl IndexSymmetry {
    fn trivial(n: usize) -> Self {
        Self { charges: vec![0; n], flip: None }
    }
}

/// Orthonormal basis of one symmetry sector. With `paired`, the flip images of these vectors
/// span the sector of charge `−charge`.
#[derive(Clone, Debug)]
struct Group {
    charge: i64,
    parity: i32,
    cols: Vec<Vec<(usize, f64)>>,
    paired: bool,
}

fn groups(sym: &IndexSymmetry) -> Vec<Group> {
    let mut charges = sym.charges.clone();
    charges.sort_unstable();
    charges.dedup();
    let mut out = Vec::new();
    for &q in &charges {
        let idx: Vec<usize> = (0..sym.charges.len()).filter(|&i| sym.charges[i] == q).collect();
        match &sym.flip {
            None => out.push(Group { charge: q, parity: 0, cols: unit_cols(&idx), paired: false }),
            Some(_) if q > 0 => out.push(Group { charge: q, parity: 0, cols: unit_cols(&idx), paired: true }),
            Some(_) if q < 0 => {}
            Some(f) => {
                let mut even = Vec::new();
                let mut odd = Vec::new();
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for &i in &idx {
                    let j = f.perm[i];
                    let s = f.sign[i];
                    if j == i {
                        if s > 0.0 {
                            even.push(vec![(i, 1.0)]);
                        } else {
                            odd.push(vec![(i, 1.0)]);
                        }
                    } else if i < j {
                        even.push(vec![(i, h), (j, s * h)]);
                        odd.push(vec![(i, h), (j, -s * h)]);
                    }
                }
                if !even.is_empty() {
                    out.push(Group { charge: 0, parity: 1, cols: even, paired: false });
                }
                if !odd.is_empty() {
                    out.push(Group { charge: 0, parity: -1, cols: odd, paired: false });
                }
            }
        }
    }
    out
}

fn unit_cols(idx: &[usize]) -> Vec<Vec<(usize, f64)>> {
    idx.iter().map(|&i| vec![(i, 1.0)]).collect()
}

/// `Bᵀ X B` for a row-major `d × d` matrix `x`.
fn restrict(x: &[f64], d: usize, g: &Group) -> Mat<f64> {
    let k = g.cols.len();
    Mat::<f64>::from_fn(k, k, |a, b| {
        let mut s = 0.0;
        for &(i, ci) in &g.cols[a] {
            for &(j, cj) in &g.cols[b] {
                s += ci * cj * x[i * d + j];
            }
        }
        s
    })
}

fn embed(g: &Group, local: &[f64], out: &mut [f64]) {
    for (a, &c) in local.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for &(i, ci) in &g.cols[a] {
            out[i] += ci * c;
        }
    }
}

struct GroupEig {
    values: Vec<f64>,
    right: Mat<c64>,
    left: Mat<c64>,
}

fn group_eig(x: &[f64], d: usize, g: &Group, symmetrize: bool) -> Result<GroupEig> {
    let xg = restrict(x, d, g);
    let k = xg.nrows();
    if symmetrize {
        let s = Mat::<f64>::from_fn(k, k, |a, b| 0.5 * (xg[(a, b)] + xg[(b, a)]));
        let evd = s.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Decomposition)?;
        let u = evd.U();
        let vals = evd.S().column_vector();
        let order: Vec<usize> = (0..k).rev().collect();
        let values = order.iter().map(|&i| vals[i]).collect();
        let right = Mat::<c64>::from_fn(k, k, |r, c| c64::new(u[(r, order[c])], 0.0));
        return Ok(GroupEig { values, left: right.clone(), right });
    }
    let xc = Mat::<c64>::from_fn(k, k, |a, b| c64::new(xg[(a, b)], 0.0));
    let eig = general_eig_faer(xc.as_ref())?;
    let scale = eig.values.first().map(|v| v.norm()).unwrap_or(0.0);
    let mut values = Vec::with_capacity(k);
    for v in &eig.values {
        if v.im.abs() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ComplexEigenvalue { re: v.re, im: v.im });
        }
        values.push(v.re);
    }
    Ok(GroupEig { values, right: eig.right, left: eig.left })
}

/// Eigenvalues of one group, with the numerical null space removed by repeated compression
/// `UΣVᵀ → Σ_r V_rᵀ U_r`; the removed part is reported as zeros.
fn group_values(x: &[f64], d: usize, g: &Group) -> Result<Vec<f64>> {
    let mut a = restrict(x, d, g);
    let k = a.nrows();
    while a.nrows() > 1 {
        let svd = a.thin_svd().map_err(|_| Error::Decomposition)?;
        let s = svd.S().column_vector();
        let r = (0..s.nrows()).filter(|&i| s[i] > 1e-12 * s[0]).count();
        if r == a.nrows() || r == 0 {
            break;
        }
        let (u, v) = (svd.U(), svd.V());
        a = Mat::<f64>::from_fn(r, r, |i, j| s[i] * (0..a.nrows()).map(|t| v[(t, i)] * u[(t, j)]).sum::<f64>());
    }
    let n = a.nrows();
    let ac = Mat::<c64>::from_fn(n, n, |i, j| c64::new(a[(i, j)], 0.0));
    let eig = general_eig_faer(ac.as_ref())?;
    let scale = eig.values.first().map(|v| v.norm()).unwrap_or(0.0);
    let mut values = Vec::with_capacity(k);
    for v in &eig.values {
        if v.im.abs() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ComplexEigenvalue { re: v.re, im: v.im });
        }
        values.push(v.re);
    }
    values.resize(k, 0.0);
    Ok(values)
}

/// Result of a biorthogonal truncation of one index space.
#[derive(Clone, Debug)]
struct Kept {
    /// `d × k`, row-major.
    right: Vec<f64>,
    left: Vec<f64>,
    k: usize,
    sym: IndexSymmetry,
    discarded: f64,
}

/// Real orthonormal basis of the span of `cols` (conjugation-invariant), `k` vectors.
fn real_span(cols: &Mat<c64>, k: usize) -> Result<Mat<f64>> {
    let d = cols.nrows();
    let a = Mat::<f64>::from_fn(d, 2 * k, |r, c| if c < k { cols[(r, c)].re } else { cols[(r, c - k)].im });
    let svd = a.thin_svd().map_err(|_| Error::Decomposition)?;
    let u = svd.U();
    Ok(Mat::<f64>::from_fn(d, k, |r, c| u[(r, c)]))
}

fn condition(g: &Mat<f64>) -> Result<f64> {
    let svd = g.svd().map_err(|_| Error::Decomposition)?;
    let s = svd.S().column_vector();
    let n = s.nrows();
    Ok(if s[n - 1] > 0.0 { s[0] / s[n - 1] } else { f64::INFINITY })
}

/// Rescales `vr`, `ul` so that `ulᵀ vr = 1`, splitting the Gram inverse evenly between both bases.
fn balance(vr: &Mat<f64>, ul: &Mat<f64>, gram: &Mat<f64>) -> Result<(Mat<f64>, Mat<f64>)> {
    // G = A Σ Bᵀ, so (ul A Σ^{-1/2})ᵀ (vr B Σ^{-1/2}) = 1
    let svd = gram.svd().map_err(|_| Error::Decomposition)?;
    let k = gram.nrows();
    let s = svd.S().column_vector();
    let a = Mat::<f64>::from_fn(k, k, |i, j| svd.U()[(i, j)] / s[j].sqrt());
    let b = Mat::<f64>::from_fn(k, k, |i, j| svd.V()[(i, j)] / s[j].sqrt());
    Ok((vr * &b, ul * &a))
}

fn same_multiplet(a: f64, b: f64, w0: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()) + 1e-15 * w0
}

fn truncate_sectors(
    x: &[f64],
    d: usize,
    sym: &IndexSymmetry,
    m: usize,
    gram_limit: f64,
    symmetrize: bool,
) -> Result<Kept> {
    if d <= m {
        let mut id = vec![0.0; d * d];
        for i in 0..d {
            id[i * d + i] = 1.0;
        }
        return Ok(Kept { right: id.clone(), left: id, k: d, sym: sym.clone(), discarded: 0.0 });
    }
    let gs = groups(sym);
    let eigs: Vec<GroupEig> = gs.iter().map(|g| group_eig(x, d, g, symmetrize)).collect::<Result<_>>()?;
    // (value, group, local index, multiplicity)
    let mut items: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (gi, (g, e)) in gs.iter().zip(&eigs).enumerate() {
        for (li, &v) in e.values.iter().enumerate() {
            items.push((v, gi, li, if g.paired { 2 } else { 1 }));
        }
    }
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = items.iter().map(|it| it.0 * it.3 as f64).sum();
    let w0 = items[0].0;
    if !(w0 > 0.0) {
        return Err(Error::InvalidWeights(format!("largest weight {w0:e} is not positive")));
    }
    let mut count = 0;
    let mut cut = 0;
    for pos in 0..items.len() {
        if items[pos].0 <= 1e-14 * w0 {
            break;
        }
        count += items[pos].3;
        if count > m {
            break;
        }
        let boundary = pos + 1 == items.len()
            || items[pos + 1].0 <= 1e-14 * w0
            || !same_multiplet(items[pos].0, items[pos + 1].0, w0);
        if boundary {
            cut = pos + 1;
        }
    }
    if cut == 0 {
        cut = 1;
        while cut < items.len() && same_multiplet(items[cut - 1].0, items[cut].0, w0) {
            cut += 1;
        }
    }
    let kept_weight: f64 = items[..cut].iter().map(|it| it.0 * it.3 as f64).sum();
    let discarded = 1.0 - kept_weight / total;

    let mut right_cols: Vec<Vec<f64>> = Vec::new();
    let mut left_cols: Vec<Vec<f64>> = Vec::new();
    let mut charges = Vec::new();
    let mut fperm: Vec<usize> = Vec::new();
    let mut fsign: Vec<f64> = Vec::new();
    for (gi, g) in gs.iter().enumerate() {
        let sel: Vec<usize> = items[..cut].iter().filter(|it| it.1 == gi).map(|it| it.2).collect();
        if sel.is_empty() {
            continue;
        }
        let k = sel.len();
        let e = &eigs[gi];
        let rsel = Mat::<c64>::from_fn(e.right.nrows(), k, |r, c| e.right[(r, sel[c])]);
        let lsel = Mat::<c64>::from_fn(e.left.nrows(), k, |r, c| e.left[(r, sel[c])]);
        let vr = real_span(&rsel, k)?;
        let ul = real_span(&lsel, k)?;
        let gram = ul.transpose() * &vr;
        let cond = condition(&gram)?;
        if !(cond <= gram_limit) {
            return Err(Error::IllConditioned { condition: cond });
        }
        let (vr, ul) = balance(&vr, &ul, &gram)?;
        let base = right_cols.len();
        for c in 0..k {
            let mut r = vec![0.0; d];
            let mut l = vec![0.0; d];
            let rl: Vec<f64> = (0..vr.nrows()).map(|i| vr[(i, c)]).collect();
            let ll: Vec<f64> = (0..ul.nrows()).map(|i| ul[(i, c)]).collect();
            embed(g, &rl, &mut r);
            embed(g, &ll, &mut l);
            right_cols.push(r);
            left_cols.push(l);
            charges.push(g.charge);
        }
        if g.paired {
            let f = sym.flip.as_ref().expect("paired sectors need a flip");
            for c in 0..k {
                let mut r = vec![0.0; d];
                let mut l = vec![0.0; d];
                f.apply(&right_cols[base + c], &mut r);
                f.apply(&left_cols[base + c], &mut l);
                right_cols.push(r);
                left_cols.push(l);
                charges.push(-g.charge);
            }
            for c in 0..k {
                fperm.push(base + k + c);
                fsign.push(1.0);
            }
            for c in 0..k {
                fperm.push(base + c);
                fsign.push(1.0);
            }
        } else {
            for c in 0..k {
                fperm.push(base + c);
                fsign.push(if g.parity < 0 { -1.0 } else { 1.0 });
            }
        }
    }
    let k = right_cols.len();
    let mut right = vec![0.0; d * k];
    let mut left = vec![0.0; d * k];
    for c in 0..k {
        for i in 0..d {
            right[i * k + c] = right_cols[c][i];
            left[i * k + c] = left_cols[c][i];
        }
    }
    let flip = sym.flip.as_ref().map(|_| Flip { perm: fperm, sign: fsign });
    Ok(Kept { right, left, k, sym: IndexSymmetry { charges, flip }, discarded })
}

/// Biorthogonal truncation of a reduced density matrix.
#[derive(Clone, Debug)]
pub struct Truncation {
    /// `d × k` with the kept right eigenvectors spanning its columns.
    pub right_projector: DenseOperator,
    /// `d × k`, `left_projectorᵀ · right_projector = 1`.
    pub left_projector: DenseOperator,
    pub discarded_weight: f64,
    pub kept: usize,
}

/// Keeps the `m` dominant eigenvectors of a real non-symmetric `rho_bar_a`, never splitting a
/// degenerate multiplet.
pub fn truncate(rho_bar_a: &DenseOperator, m: usize, config: &TmrgConfig) -> Result<Truncation> {
    let d = rho_bar_a.rows();
    if !rho_bar_a.is_square() {
        return Err(Error::DimensionMismatch { expected: "square matrix".into(), actual: format!("{d}x{}", rho_bar_a.cols()) });
    }
    let tr = rho_bar_a.trace();
    if (tr - c64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidParameter(format!("reduced density matrix has trace {tr}")));
    }
    if rho_bar_a.entries().iter().any(|z| z.im.abs() > 1e-12) {
        return Err(Error::InvalidParameter("truncation expects a real matrix".into()));
    }
    let x: Vec<f64> = rho_bar_a.entries().iter().map(|z| z.re).collect();
    let kept = truncate_sectors(&x, d, &IndexSymmetry::trivial(d), m, config.gram_condition_limit, false)?;
    let k = kept.k;
    Ok(Truncation {
        right_projector: DenseOperator::from_real(d, k, &kept.right)?,
        left_projector: DenseOperator::from_real(d, k, &kept.left)?,
        discarded_weight: kept.discarded,
        kept: k,
    })
}

/// Eigenvalues of a reduced density matrix resolved by sector; labels are the sector charges.
fn sector_spectrum(x: &[f64], d: usize, sym: &IndexSymmetry, labelled: bool) -> Result<EntanglementSpectrum> {
    let mut values = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for g in groups(sym) {
        for v in group_values(x, d, &g)? {
            values.push(v);
            labels.push(g.charge);
            if g.paired {
                values.push(v);
                labels.push(-g.charge);
            }
        }
    }
    EntanglementSpectrum::from_values(values, labelled.then_some(labels), SPECTRUM_CLIP)
}

/// Relative weight below which a negative eigenvalue of a truncated density matrix is an error.
pub const SPECTRUM_CLIP: f64 = 1e-9;

/// Renormalized block `[in][out][lo][hi]` with bond dimension 4 on `lo` and `hi`.
#[derive(Clone, Debug)]
struct Block {
    dim: usize,
    data: Vec<f64>,
    sym: IndexSymmetry,
}

impl Block {
    fn empty(symmetry: Symmetry) -> Self {
        let mut data = vec![0.0; 16];
        for b in 0..4 {
            data[b * 4 + b] = 1.0;
        }
        let flip = (symmetry == Symmetry::ChargeFlip).then(|| Flip::trivial(1));
        Self { dim: 1, data, sym: IndexSymmetry { charges: vec![0], flip } }
    }

    /// `[out][in][lo][hi]`.
    fn transposed(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; self.data.len()];
        for i in 0..d {
            for j in 0..d {
                let src = (i * d + j) * 16;
                let dst = (j * d + i) * 16;
                out[dst..dst + 16].copy_from_slice(&self.data[src..src + 16]);
            }
        }
        out
    }
}

/// Row-major GEMM `c = a·b` with `a: m×k`, `b: k×n`.
fn gemm(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    let a = MatRef::from_row_major_slice(a, m, k);
    let b = MatRef::from_row_major_slice(b, k, n);
    let c = MatMut::from_row_major_slice_mut(c, m, n);
    matmul(c, Accum::Replace, a, b, 1.0, Par::Seq);
}

/// Matrix-free ring transfer matrix for one step.
struct Ring {
    ds: usize,
    de: usize,
    /// `S[i][(j, lo, hi)]`
    s: Vec<f64>,
    /// `S[j][(i, lo, hi)]`
    s_t: Vec<f64>,
    /// `E[k][(lo, l, hi)]`
    e: Vec<f64>,
    /// `E[l][(lo, k, hi)]`
    e_t: Vec<f64>,
    /// `K[(P, Q, W)][(p, q, V)]`: the two bare rows with the bond between them summed.
    k_right: [f64; 256],
    /// `K[(p, q, W)][(P, Q, V)]`
    k_left: [f64; 256],
    t1: Vec<f64>,
    r: Vec<f64>,
    t2: Vec<f64>,
    plan: Option<SectorPlan>,
}

/// `[k][(l, lo, hi)]` to `[k][(lo, l, hi)]`.
fn bond_major(m: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for k in 0..d {
        for l in 0..d {
            for lo in 0..4 {
                let src = (k * d + l) * 16 + lo * 4;
                let dst = (k * 4 + lo) * d * 4 + l * 4;
                out[dst..dst + 4].copy_from_slice(&m[src..src + 4]);
            }
        }
    }
    out
}

/// Charge blocks of both contractions of the ring product for one target sector.
struct SectorPlan {
    /// Per class of `E` charges: the `E` indices, the matching `(S, x, y)` rows, and the rows of
    /// `E` and `Eᵀ` restricted to the class.
    first: Vec<(Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>)>,
    /// Per class of `S` charges: the `S` indices, the matching `(x, y, E)` columns, and the rows
    /// of `S` and `Sᵀ` restricted to the class.
    second: Vec<(Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>)>,
    x_c: Vec<f64>,
    t2_c: Vec<f64>,
    y_c: Vec<f64>,
}

fn classes(charges: &[i64]) -> Vec<(i64, Vec<usize>)> {
    let mut out: Vec<(i64, Vec<usize>)> = Vec::new();
    for (i, &q) in charges.iter().enumerate() {
        match out.iter_mut().find(|c| c.0 == q) {
            Some(c) => c.1.push(i),
            None => out.push((q, vec![i])),
        }
    }
    out
}

fn gather_rows(m: &[f64], width: usize, rows: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * width);
    for &r in rows {
        out.extend_from_slice(&m[r * width..(r + 1) * width]);
    }
    out
}

impl Ring {
    /// Restricts [`Ring::apply`] to inputs and outputs of charge `target`; `leg` holds the
    /// charges of the two bare rows.
    fn with_sector(mut self, s: &Block, e: &Block, leg: [[i64; 2]; 2], reduce: impl Fn(i64) -> i64, target: i64) -> Self {
        let (ds, de) = (self.ds, self.de);
        let mut first = Vec::new();
        for (c, es) in classes(&e.sym.charges) {
            let rows: Vec<usize> = (0..4 * ds)
                .filter(|&r| reduce(s.sym.charges[r / 4] + leg[0][(r / 2) % 2] + leg[1][r % 2] + c) == target)
                .collect();
            if !rows.is_empty() {
                let (ge_t, ge) = (gather_rows(&self.e_t, 16 * de, &es), gather_rows(&self.e, 16 * de, &es));
                first.push((es, rows, ge_t, ge));
            }
        }
        let mut second = Vec::new();
        for (a, ss) in classes(&s.sym.charges) {
            let cols: Vec<usize> = (0..4 * de)
                .filter(|&c| reduce(a + leg[0][c / (2 * de)] + leg[1][(c / de) % 2] + e.sym.charges[c % de]) == target)
                .collect();
            if !cols.is_empty() {
                let (gs, gs_t) = (gather_rows(&self.s, 16 * ds, &ss), gather_rows(&self.s_t, 16 * ds, &ss));
                second.push((ss, cols, gs, gs_t));
            }
        }
        self.plan = Some(SectorPlan { first, second, x_c: Vec::new(), t2_c: Vec::new(), y_c: Vec::new() });
        self
    }

    fn new(s: &Block, e: &Block, wx: &[f64; 64], wy: &[f64; 64]) -> Self {
        let mut wxy = [0.0; 256];
        // wxy[P][Q][W][p][q][V] = Σ_w Wx[P][p][W][w] Wy[Q][q][w][V]
        for pp in 0..2 {
            for qq in 0..2 {
                for w_lo in 0..4 {
                    for p in 0..2 {
                        for q in 0..2 {
                            for v in 0..4 {
                                let mut acc = 0.0;
                                for w in 0..4 {
                                    acc += wx[((pp * 2 + p) * 4 + w_lo) * 4 + w] * wy[((qq * 2 + q) * 4 + w) * 4 + v];
                                }
                                wxy[((((pp * 2 + qq) * 4 + w_lo) * 2 + p) * 2 + q) * 4 + v] = acc;
                            }
                        }
                    }
                }
            }
        }
        let mut k_right = [0.0; 256];
        let mut k_left = [0.0; 256];
        for big in 0..4 {
            for w_lo in 0..4 {
                for small in 0..4 {
                    for v in 0..4 {
                        let val = wxy[((big * 4 + w_lo) * 4 + small) * 4 + v];
                        k_right[(big * 4 + w_lo) * 16 + small * 4 + v] = val;
                        k_left[(small * 4 + w_lo) * 16 + big * 4 + v] = val;
                    }
                }
            }
        }
        let (ds, de) = (s.dim, e.dim);
        Self {
            ds,
            de,
            s: s.data.clone(),
            s_t: s.transposed(),
            e: bond_major(&e.data, de),
            e_t: bond_major(&e.transposed(), de),
            k_right,
            k_left,
            t1: vec![0.0; ds * 4 * de * 16],
            r: vec![0.0; 16 * 4 * de],
            t2: vec![0.0; ds * 16 * 4 * de],
            plan: None,
        }
    }

    fn dim(&self) -> usize {
        self.ds * 4 * self.de
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64], transpose: bool) {
        let (ds, de) = (self.ds, self.de);
        let (e, s, kern) = if transpose { (&self.e, &self.s_t, &self.k_left) } else { (&self.e_t, &self.s, &self.k_right) };
        match self.plan.as_mut() {
            None => gemm(&mut self.t1, x, e, 4 * ds, de, 16 * de),
            Some(plan) => {
                let w = 16 * de;
                self.t1.iter_mut().for_each(|v| *v = 0.0);
                for (es, rows, ge_t, ge) in &plan.first {
                    let b = if transpose { ge } else { ge_t };
                    plan.x_c.clear();
                    for &r in rows {
                        plan.x_c.extend(es.iter().map(|&l| x[r * de + l]));
                    }
                    plan.y_c.resize(rows.len() * w, 0.0);
                    gemm(&mut plan.y_c, &plan.x_c, b, rows.len(), es.len(), w);
                    for (i, &r) in rows.iter().enumerate() {
                        self.t1[r * w..(r + 1) * w].copy_from_slice(&plan.y_c[i * w..(i + 1) * w]);
                    }
                }
            }
        }
        let w4 = 4 * de;
        for a in 0..ds {
            gemm(&mut self.r, kern, &self.t1[a * 16 * w4..(a + 1) * 16 * w4], 16, 16, w4);
            for o in 0..4 {
                for w in 0..4 {
                    let src = &self.r[(o * 4 + w) * w4..(o * 4 + w + 1) * w4];
                    for u in 0..4 {
                        let dst = ((a * 4 + u) * 4 + w) * w4 + o * de;
                        for (c, d) in self.t2[dst..dst + de].iter_mut().enumerate() {
                            *d = src[c * 4 + u];
                        }
                    }
                }
            }
        }
        let Some(plan) = self.plan.as_mut() else {
            gemm(y, s, &self.t2, ds, 16 * ds, 4 * de);
            return;
        };
        y.iter_mut().for_each(|v| *v = 0.0);
        let (k, w) = (16 * ds, 4 * de);
        for (ss, cols, gs, gs_t) in &plan.second {
            let a = if transpose { gs_t } else { gs };
            plan.t2_c.clear();
            for r in 0..k {
                let row = &self.t2[r * w..(r + 1) * w];
                plan.t2_c.extend(cols.iter().map(|&c| row[c]));
            }
            plan.y_c.resize(ss.len() * cols.len(), 0.0);
            gemm(&mut plan.y_c, a, &plan.t2_c, ss.len(), k, cols.len());
            for (i, &r) in ss.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    y[r * w + c] = plan.y_c[i * cols.len() + j];
                }
            }
        }
    }
}

fn hadamard(w: &[f64; 64]) -> [f64; 64] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hm = [[h, h], [h, -h]];
    let mut out = [0.0; 64];
    for a in 0..2 {
        for b in 0..2 {
            for bond in 0..16 {
                let mut acc = 0.0;
                for a2 in 0..2 {
                    for b2 in 0..2 {
                        acc += hm[a][a2] * w[(a2 * 2 + b2) * 16 + bond] * hm[b2][b];
                    }
                }
                out[(a * 2 + b) * 16 + bond] = acc;
            }
        }
    }
    out
}

/// Target sector of the leading eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sector {
    charge: i64,
    parity: i32,
}

/// Dimension up to which the ring eigenproblem is solved densely in every sector.
const DENSE_RING_LIMIT: usize = 256;

/// Transfer-matrix DMRG state after `M` plaquette pairs.
pub struct Tmrg {
    model: SpinChainModel,
    config: TmrgConfig,
    symmetry: Symmetry,
    /// Row tensors by type (`0` for even dense rows).
    rows: [[f64; 64]; 2],
    s: Block,
    e: Block,
    trotter_m: usize,
    log_scale: f64,
    sector: Option<Sector>,
    right: Vec<f64>,
    left: Vec<f64>,
    eigenvalue: f64,
    max_discarded: f64,
    fallback: bool,
    matvecs: usize,
}

impl Tmrg {
    pub fn new(model: &SpinChainModel, config: &TmrgConfig) -> Result<Self> {
        model.validate()?;
        config.target_steps()?;
        let bond = crate::models::bond_hamiltonian(model)?;
        let tau = bond_propagator(&bond, config.delta_beta)?;
        let symmetry = if model.conserves_sz() { Symmetry::ChargeFlip } else { Symmetry::Parity };
        let mut rows = [
            plaquette_from_propagator(&tau, Orientation::R).data,
            plaquette_from_propagator(&tau, Orientation::L).data,
        ];
        if symmetry == Symmetry::Parity {
            rows = [hadamard(&rows[0]), hadamard(&rows[1])];
        }
        Ok(Self {
            model: *model,
            config: config.clone(),
            symmetry,
            rows,
            s: Block::empty(symmetry),
            e: Block::empty(symmetry),
            trotter_m: 0,
            log_scale: 0.0,
            sector: None,
            right: Vec::new(),
            left: Vec::new(),
            eigenvalue: 0.0,
            max_discarded: 0.0,
            fallback: false,
            matvecs: 0,
        })
    }

    pub fn model(&self) -> &SpinChainModel {
        &self.model
    }

    pub fn trotter_m(&self) -> usize {
        self.trotter_m
    }

    pub fn temperature(&self) -> f64 {
        1.0 / (self.trotter_m as f64 * self.config.delta_beta)
    }

    /// Total matrix-vector products spent by the eigensolver.
    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Types of the two bare rows.
    fn bare_types(&self) -> (usize, usize) {
        let n = self.s_rows();
        ((n + 1) % 2, n % 2)
    }

    fn s_rows(&self) -> usize {
        self.trotter_m.saturating_sub(1)
    }

    fn psi_symmetry(&self) -> IndexSymmetry {
        let (tx, ty) = self.bare_types();
        let (ds, de) = (self.s.dim, self.e.dim);
        let sym = self.symmetry;
        let mut charges = Vec::with_capacity(ds * 4 * de);
        for j in 0..ds {
            for p in 0..2 {
                for q in 0..2 {
                    for l in 0..de {
                        charges.push(sym.reduce(
                            self.s.sym.charges[j] + sym.leg(p, tx) + sym.leg(q, ty) + self.e.sym.charges[l],
                        ));
                    }
                }
            }
        }
        let flip = match (&self.s.sym.flip, &self.e.sym.flip) {
            (Some(fs), Some(fe)) => {
                let n = ds * 4 * de;
                let mut perm = vec![0; n];
                let mut sign = vec![0.0; n];
                for j in 0..ds {
                    for p in 0..2 {
                        for q in 0..2 {
                            for l in 0..de {
                                let idx = ((j * 2 + p) * 2 + q) * de + l;
                                perm[idx] = ((fs.perm[j] * 2 + 1 - p) * 2 + 1 - q) * de + fe.perm[l];
                                sign[idx] = fs.sign[j] * fe.sign[l];
                            }
                        }
                    }
                }
                Some(Flip { perm, sign })
            }
            _ => None,
        };
        IndexSymmetry { charges, flip }
    }

    /// Adds one plaquette pair and solves for the leading eigenpair of the ring.
    pub fn advance(&mut self) -> Result<()> {
        if self.trotter_m > 0 {
            self.grow()?;
        }
        self.trotter_m += 1;
        self.solve()
    }

    fn solve(&mut self) -> Result<()> {
        let (tx, ty) = self.bare_types();
        let mut ring = Ring::new(&self.s, &self.e, &self.rows[tx], &self.rows[ty]);
        let n = ring.dim();
        let sym = self.psi_symmetry();
        if n <= DENSE_RING_LIMIT {
            return self.solve_dense(&mut ring, &sym);
        }
        let sector = self.sector.expect("sector fixed by the dense steps");
        let sym_kind = self.symmetry;
        let leg = [[sym_kind.leg(0, tx), sym_kind.leg(1, tx)], [sym_kind.leg(0, ty), sym_kind.leg(1, ty)]];
        let mut ring = ring.with_sector(&self.s, &self.e, leg, |q| sym_kind.reduce(q), sector.charge);
        let project = |v: &mut [f64]| {
            for (x, &q) in v.iter_mut().zip(&sym.charges) {
                if q != sector.charge {
                    *x = 0.0;
                }
            }
            if let (Some(f), true) = (&sym.flip, sector.parity != 0) {
                let p = sector.parity as f64;
                let mut img = vec![0.0; v.len()];
                f.apply(v, &mut img);
                for (x, y) in v.iter_mut().zip(&img) {
                    *x = 0.5 * (*x + p * y);
                }
            }
        };
        let opts = KrylovOptions { max_dim: 40, keep: 12, tol: self.config.krylov_tol, max_matvecs: 6000 };
        let start_r = if self.right.len() == n { self.right.clone() } else { krylov::default_start::<f64>(n) };
        let start_l = if self.left.len() == n { self.left.clone() } else { krylov::default_start::<f64>(n) };
        let r = krylov::leading_eigenvector(n, |x: &[f64], y: &mut [f64]| ring.apply(x, y, false), &start_r, Some(&project), &opts)?;
        let l = krylov::leading_eigenvector(n, |x: &[f64], y: &mut [f64]| ring.apply(x, y, true), &start_l, Some(&project), &opts)?;
        self.matvecs += r.matvecs + l.matvecs;
        let lam = r.value;
        if !(lam.re > 0.0) {
            return Err(Error::NonPositive(lam.re));
        }
        if (lam - l.value).norm() > 1e-6 * lam.norm() {
            return Err(Error::NoConvergence { iterations: r.matvecs + l.matvecs, residual: (lam - l.value).norm() / lam.norm() });
        }
        self.set_pair(lam.re, r.vector, l.vector)
    }

    fn set_pair(&mut self, lam: f64, mut right: Vec<f64>, mut left: Vec<f64>) -> Result<()> {
        let nr = right.iter().map(|x| x * x).sum::<f64>().sqrt();
        right.iter_mut().for_each(|x| *x /= nr);
        let ov: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
        if ov.abs() < 1e-13 {
            return Err(Error::IllConditioned { condition: 1.0 / ov.abs() });
        }
        left.iter_mut().for_each(|x| *x /= ov);
        self.eigenvalue = lam;
        self.right = right;
        self.left = left;
        Ok(())
    }

    fn solve_dense(&mut self, ring: &mut Ring, sym: &IndexSymmetry) -> Result<()> {
        let n = ring.dim();
        let mut best: Option<(f64, Sector, Vec<f64>, Vec<f64>, Option<f64>)> = None;
        let mut unit = vec![0.0; n];
        let mut col = vec![0.0; n];
        for g in groups(sym) {
            let k = g.cols.len();
            // T B, column by column, then Bᵀ (T B).
            let mut tb = vec![0.0; n * k];
            for (b, c) in g.cols.iter().enumerate() {
                unit.iter_mut().for_each(|x| *x = 0.0);
                for &(i, ci) in c {
                    unit[i] = ci;
                }
                ring.apply(&unit, &mut col, false);
                for i in 0..n {
                    tb[i * k + b] = col[i];
                }
            }
            self.matvecs += k;
            let tg = Mat::<c64>::from_fn(k, k, |a, b| {
                let mut s = 0.0;
                for &(i, ci) in &g.cols[a] {
                    s += ci * tb[i * k + b];
                }
                c64::new(s, 0.0)
            });
            let eig = general_eig_faer(tg.as_ref())?;
            let lam = eig.values[0];
            let better = best.as_ref().map_or(true, |b| lam.re > b.0);
            if !better {
                continue;
            }
            if lam.im.abs() > 1e-10 * lam.norm() || !(lam.re > 0.0) {
                return Err(Error::ComplexEigenvalue { re: lam.re, im: lam.im });
            }
            let rl: Vec<f64> = (0..k).map(|i| eig.right[(i, 0)].re).collect();
            let ll: Vec<f64> = (0..k).map(|i| eig.left[(i, 0)].re).collect();
            let rli: f64 = (0..k).map(|i| eig.right[(i, 0)].im.abs()).sum();
            let rl = if rli > 0.0 {
                // rotate the phase of the complex eigenvector onto the real axis
                let (imax, _) = (0..k).fold((0, 0.0), |(bi, bv), i| {
                    let v = eig.right[(i, 0)].norm();
                    if v > bv { (i, v) } else { (bi, bv) }
                });
                let ph = eig.right[(imax, 0)].conj() / eig.right[(imax, 0)].norm();
                (0..k).map(|i| (eig.right[(i, 0)] * ph).re).collect()
            } else {
                rl
            };
            let lli: f64 = (0..k).map(|i| eig.left[(i, 0)].im.abs()).sum();
            let ll = if lli > 0.0 {
                let (imax, _) = (0..k).fold((0, 0.0), |(bi, bv), i| {
                    let v = eig.left[(i, 0)].norm();
                    if v > bv { (i, v) } else { (bi, bv) }
                });
                let ph = eig.left[(imax, 0)].conj() / eig.left[(imax, 0)].norm();
                (0..k).map(|i| (eig.left[(i, 0)] * ph).re).collect()
            } else {
                ll
            };
            let mut r = vec![0.0; n];
            let mut l = vec![0.0; n];
            embed(&g, &rl, &mut r);
            embed(&g, &ll, &mut l);
            let second = eig.values.get(1).map(|v| v.norm());
            if g.paired {
                best = Some((lam.re, Sector { charge: g.charge, parity: 0 }, r, l, Some(lam.re)));
            } else {
                best = Some((lam.re, Sector { charge: g.charge, parity: g.parity }, r, l, second));
            }
        }
        let (lam, sector, mut r, mut l, second) = best.ok_or(Error::Decomposition)?;
        if let Some(s) = second {
            if (lam - s).abs() <= 1e-12 * lam {
                return Err(Error::NearDegenerate { gap: (lam - s).abs() / lam });
            }
            if s < 0.9 * lam {
                self.matvecs += polish(ring, &mut r, false) + polish(ring, &mut l, true);
            }
        }
        self.sector = Some(sector);
        self.set_pair(lam, r, l)
    }

    fn xs_matrix(&self, rows: usize) -> (Vec<f64>, usize) {
        // R and L reshaped to rows × cols, X = R Lᵀ
        let n = self.right.len();
        let cols = n / rows;
        let mut x = vec![0.0; rows * rows];
        let r = MatRef::from_row_major_slice(&self.right, rows, cols);
        let l = MatRef::from_row_major_slice(&self.left, rows, cols);
        let xm = MatMut::from_row_major_slice_mut(&mut x, rows, rows);
        matmul(xm, Accum::Replace, r, l.transpose(), 1.0, Par::Seq);
        (x, rows)
    }

    fn xe_matrix(&self, rows: usize) -> (Vec<f64>, usize) {
        // complement: X = Rᵀ L on the trailing index
        let n = self.right.len();
        let cols = n / rows;
        let mut x = vec![0.0; cols * cols];
        let r = MatRef::from_row_major_slice(&self.right, rows, cols);
        let l = MatRef::from_row_major_slice(&self.left, rows, cols);
        let xm = MatMut::from_row_major_slice_mut(&mut x, cols, cols);
        matmul(xm, Accum::Replace, r.transpose(), l, 1.0, Par::Seq);
        (x, cols)
    }

    fn sx_symmetry(&self) -> IndexSymmetry {
        let (tx, _) = self.bare_types();
        let sym = self.symmetry;
        let charges = (0..self.s.dim * 2).map(|i| sym.reduce(self.s.sym.charges[i / 2] + sym.leg(i % 2, tx))).collect();
        IndexSymmetry { charges, flip: self.s.sym.flip.as_ref().map(|f| f.then_leg()) }
    }

    fn ye_symmetry(&self) -> IndexSymmetry {
        let (_, ty) = self.bare_types();
        let sym = self.symmetry;
        let de = self.e.dim;
        let charges = (0..2 * de).map(|i| sym.reduce(sym.leg(i / de, ty) + self.e.sym.charges[i % de])).collect();
        IndexSymmetry { charges, flip: self.e.sym.flip.as_ref().map(|f| f.leg_then()) }
    }

    fn xye_symmetry(&self) -> IndexSymmetry {
        let (tx, ty) = self.bare_types();
        let sym = self.symmetry;
        let de = self.e.dim;
        let charges = (0..4 * de)
            .map(|i| sym.reduce(sym.leg(i / (2 * de), tx) + sym.leg((i / de) % 2, ty) + self.e.sym.charges[i % de]))
            .collect();
        IndexSymmetry { charges, flip: self.e.sym.flip.as_ref().map(|f| f.leg_then().leg_then()) }
    }

    /// Current free energy per site.
    pub fn free_energy(&self) -> f64 {
        -0.5 * self.temperature() * (self.eigenvalue.ln() + self.log_scale)
    }

    /// Cut of the current ring; see the module documentation for its placement.
    pub fn cut(&self) -> AuxCut {
        AuxCut::symmetric(self.trotter_m)
    }

    /// Measures the imaginary-time cut of the current leading eigenpair.
    pub fn measure(&self) -> Result<TmrgPoint> {
        let labelled = self.symmetry == Symmetry::ChargeFlip;
        let (spectrum, complement) = if self.trotter_m % 2 == 0 {
            let (xa, da) = self.xs_matrix(self.s.dim * 2);
            let (xb, db) = self.xe_matrix(self.s.dim * 2);
            (
                sector_spectrum(&xa, da, &self.sx_symmetry(), labelled)?,
                sector_spectrum(&xb, db, &self.ye_symmetry(), labelled)?,
            )
        } else {
            let (xa, da) = self.xs_matrix(self.s.dim);
            let (xb, db) = self.xe_matrix(self.s.dim);
            (
                sector_spectrum(&xa, da, &self.s.sym, labelled)?,
                sector_spectrum(&xb, db, &self.xye_symmetry(), labelled)?,
            )
        };
        Ok(TmrgPoint {
            temperature: self.temperature(),
            trotter_m: self.trotter_m,
            s_bar: spectrum.entropy,
            s_bar_complement: complement.entropy,
            spectrum,
            free_energy: self.free_energy(),
            discarded_weight: self.max_discarded,
            kept: self.s.dim.max(self.e.dim),
            flagged: self.fallback || self.max_discarded > self.config.truncation_floor,
        })
    }

    fn truncate_with_fallback(&mut self, x: &[f64], d: usize, sym: &IndexSymmetry) -> Result<Kept> {
        let m = self.config.kept_states;
        match truncate_sectors(x, d, sym, m, self.config.gram_condition_limit, false) {
            Ok(k) => Ok(k),
            Err(Error::IllConditioned { .. }) | Err(Error::ComplexEigenvalue { .. }) => {
                self.fallback = true;
                truncate_sectors(x, d, sym, m, f64::INFINITY, true)
            }
            Err(e) => Err(e),
        }
    }

    fn grow(&mut self) -> Result<()> {
        let (tx, ty) = self.bare_types();
        let ds2 = self.s.dim * 2;
        let (xs, _) = self.xs_matrix(ds2);
        let (xe, de2) = self.xe_matrix(ds2);
        let sx_sym = self.sx_symmetry();
        let ye_sym = self.ye_symmetry();
        let ks = self.truncate_with_fallback(&xs, ds2, &sx_sym)?;
        let ke = self.truncate_with_fallback(&xe, de2, &ye_sym)?;
        self.max_discarded = self.max_discarded.max(ks.discarded).max(ke.discarded);

        let s_big = absorb_right(&self.s, &self.rows[tx]);
        let e_big = absorb_left(&self.e, &self.rows[ty]);
        let (s_new, scale_s) = project_block(&s_big, ds2, &ks);
        let (e_new, scale_e) = project_block(&e_big, de2, &ke);
        self.log_scale += scale_s.ln() + scale_e.ln();
        self.right = carry(&self.right, ds2, de2, &ks.left, ks.k, &ke.left, ke.k);
        self.left = carry(&self.left, ds2, de2, &ks.right, ks.k, &ke.right, ke.k);
        self.s = Block { dim: ks.k, data: s_new, sym: ks.sym };
        self.e = Block { dim: ke.k, data: e_new, sym: ke.sym };
        Ok(())
    }
}

/// Power iteration from a dense eigenvector; removes the error a non-normal remainder leaves
/// in it. Returns the number of products.
fn polish(ring: &mut Ring, v: &mut Vec<f64>, transpose: bool) -> usize {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0 = norm(v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; v.len()];
    for it in 1..=200 {
        ring.apply(v, &mut w, transpose);
        let nw = norm(&w);
        w.iter_mut().for_each(|x| *x /= nw);
        let change = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(v, &mut w);
        if change < 1e-15 {
            return it;
        }
    }
    200
}

/// Start vector for the grown ring: `ψ = Pₛᵀ Ψ Pₑ` on the new blocks, times `δ(x', y')` on the
/// new bare rows.
fn carry(psi: &[f64], ds2: usize, de2: usize, ps: &[f64], ks: usize, pe: &[f64], ke: usize) -> Vec<f64> {
    if psi.len() != ds2 * de2 {
        return Vec::new();
    }
    let psi = MatRef::from_row_major_slice(psi, ds2, de2);
    let ps = MatRef::from_row_major_slice(ps, ds2, ks);
    let pe = MatRef::from_row_major_slice(pe, de2, ke);
    let small = ps.transpose() * psi * pe;
    let mut out = vec![0.0; ks * 4 * ke];
    for a in 0..ks {
        for p in 0..2 {
            for b in 0..ke {
                out[((a * 2 + p) * 2 + p) * ke + b] = small[(a, b)];
            }
        }
    }
    out
}

/// `S ⊗ x` as `[(i, P)][(j, p)][lo][hi]`.
fn absorb_right(s: &Block, wx: &[f64; 64]) -> Vec<f64> {
    let d = s.dim;
    let n = 2 * d;
    let mut out = vec![0.0; n * n * 16];
    for i in 0..d {
        for j in 0..d {
            for lo in 0..4 {
                for w in 0..4 {
                    let v = s.data[((i * d + j) * 4 + lo) * 4 + w];
                    if v == 0.0 {
                        continue;
                    }
                    for pp in 0..2 {
                        for p in 0..2 {
                            let base = ((pp * 2 + p) * 4 + w) * 4;
                            let dst = (((i * 2 + pp) * n + j * 2 + p) * 4 + lo) * 4;
                            for hi in 0..4 {
                                out[dst + hi] += v * wx[base + hi];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `y ⊗ E` as `[(Q, k)][(q, l)][lo][hi]`.
fn absorb_left(e: &Block, wy: &[f64; 64]) -> Vec<f64> {
    let d = e.dim;
    let n = 2 * d;
    let mut out = vec![0.0; n * n * 16];
    for qq in 0..2 {
        for q in 0..2 {
            for lo in 0..4 {
                for v in 0..4 {
                    let w = wy[((qq * 2 + q) * 4 + lo) * 4 + v];
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        for l in 0..d {
                            let src = ((k * d + l) * 4 + v) * 4;
                            let dst = (((qq * d + k) * n + q * d + l) * 4 + lo) * 4;
                            for hi in 0..4 {
                                out[dst + hi] += w * e.data[src + hi];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `Uᵀ B V` on every bond pair, normalized by its largest entry; returns the scale.
fn project_block(big: &[f64], n: usize, kept: &Kept) -> (Vec<f64>, f64) {
    let k = kept.k;
    let u = MatRef::from_row_major_slice(&kept.left, n, k);
    let v = MatRef::from_row_major_slice(&kept.right, n, k);
    let mut out = vec![0.0; k * k * 16];
    let mut slice = Mat::<f64>::zeros(n, n);
    for bond in 0..16 {
        for i in 0..n {
            for j in 0..n {
                slice[(i, j)] = big[(i * n + j) * 16 + bond];
            }
        }
        let p = u.transpose() * &slice * v;
        for a in 0..k {
            for b in 0..k {
                out[(a * k + b) * 16 + bond] = p[(a, b)];
            }
        }
    }
    let scale = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        out.iter_mut().for_each(|x| *x /= scale);
        (out, scale)
    } else {
        (out, 1.0)
    }
}

/// Runs the growth from `M = 1` down to the lowest target temperature and records one point
/// per target, in decreasing temperature order.
pub fn tmrg_sweep(model: &SpinChainModel, config: &TmrgConfig) -> Result<Vec<TmrgPoint>> {
    let steps = config.target_steps()?;
    let mut run = Tmrg::new(model, config)?;
    let mut points = Vec::with_capacity(steps.len());
    let last = steps.last().copied().unwrap_or(0);
    while run.trotter_m() < last {
        run.advance()?;
        if steps.binary_search(&run.trotter_m()).is_ok() {
            points.push(run.measure()?);
        }
    }
    Ok(points)
}
