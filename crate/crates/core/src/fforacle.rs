//! Free-fermion corner-transfer-matrix spectra, their many-body degeneracies, the entropy they
//! imply and the low-temperature conformal scaling law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::elliptic_k;
use crate::models::SpinChainModel;
use crate::qtm::EntanglementSpectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    /// Transverse Ising, λ < 1.
    IsingOrdered,
    /// Transverse Ising, λ > 1.
    IsingDisordered,
    /// XXZ, Δ > 1.
    XxzMassive,
}

/// Single-particle levels `ε_j` of `H_CTM = Σ ε_j n_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeFermionSpectrum {
    /// Ascending.
    pub levels: Vec<f64>,
    /// 1 or 2 per level.
    pub orbital_degeneracy: Vec<u32>,
    pub phase_tag: PhaseTag,
    /// Spacing unit of the level formula.
    pub unit: f64,
}

impl FreeFermionSpectrum {
    fn build(phase_tag: PhaseTag, unit: f64, count: usize) -> Self {
        let (levels, orbital_degeneracy) = (0..count).map(|j| level_of(phase_tag, unit, j)).unzip();
        Self { levels, orbital_degeneracy, phase_tag, unit }
    }

    /// Spectrum with the given spacing unit, independent of any model.
    pub fn with_unit(phase_tag: PhaseTag, unit: f64, count: usize) -> Result<Self> {
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::InvalidParameter(format!("level spacing {unit} must be positive")));
        }
        Ok(Self::build(phase_tag, unit, count))
    }

    /// Spacing between adjacent distinct many-body energies.
    pub fn many_body_spacing(&self) -> f64 {
        match self.phase_tag {
            PhaseTag::IsingDisordered => self.unit,
            PhaseTag::IsingOrdered | PhaseTag::XxzMassive => 2.0 * self.unit,
        }
    }
}

fn level_of(phase: PhaseTag, unit: f64, j: usize) -> (f64, u32) {
    match phase {
        PhaseTag::IsingDisordered => ((2 * j + 1) as f64 * unit, 2),
        PhaseTag::IsingOrdered | PhaseTag::XxzMassive => (2.0 * j as f64 * unit, if j == 0 { 1 } else { 2 }),
    }
}

/// `arccosh Δ` (XXZ) or the elliptic-integral unit of the Ising chain.
pub fn spacing_unit(model: &SpinChainModel) -> Result<(PhaseTag, f64)> {
    match *model {
        SpinChainModel::TransverseIsing { lambda, .. } => {
            let l = lambda.abs();
            if l > 1.0 {
                let k = 1.0 / l;
                let kp = (1.0 - k * k).sqrt();
                Ok((PhaseTag::IsingDisordered, std::f64::consts::PI * elliptic_k(kp)? / elliptic_k(k)?))
            } else if l < 1.0 && l > 0.0 {
                let kp = (1.0 - l * l).sqrt();
                Ok((PhaseTag::IsingOrdered, std::f64::consts::PI * elliptic_k(kp)? / elliptic_k(l)?))
            } else {
                Err(Error::InvalidParameter(format!("no massive corner spectrum at lambda = {lambda}")))
            }
        }
        SpinChainModel::Xxz { delta, .. } if delta > 1.0 => {
            Ok((PhaseTag::XxzMassive, (delta + (delta * delta - 1.0).sqrt()).ln()))
        }
        _ => Err(Error::InvalidParameter(format!("no massive corner spectrum for {model:?}"))),
    }
}

/// First `count` levels: `(2j+1)ε` for λ > 1, `2jε'` for λ < 1, `2j arccosh Δ` for Δ > 1.
pub fn single_particle_levels(model: &SpinChainModel, count: usize) -> Result<FreeFermionSpectrum> {
    let (phase, unit) = spacing_unit(model)?;
    Ok(FreeFermionSpectrum::build(phase, unit, count))
}

/// Distinct many-body energy with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManyBodyLevel {
    pub energy: f64,
    pub multiplicity: u64,
}

/// Default number of enumerated occupation states before rejection.
pub const STATE_BUDGET: usize = 5_000_000;

fn modes(levels: &FreeFermionSpectrum) -> Vec<f64> {
    let mut out = Vec::new();
    for (&e, &g) in levels.levels.iter().zip(&levels.orbital_degeneracy) {
        for _ in 0..g {
            out.push(e);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn group(mut energies: Vec<f64>, scale: f64) -> Vec<ManyBodyLevel> {
    energies.sort_by(f64::total_cmp);
    let mut out: Vec<ManyBodyLevel> = Vec::new();
    for e in energies {
        match out.last_mut() {
            Some(l) if (e - l.energy).abs() <= 1e-9 * scale.max(1.0) => l.multiplicity += 1,
            _ => out.push(ManyBodyLevel { energy: e, multiplicity: 1 }),
        }
    }
    out
}

/// Distinct energies `≤ energy_cutoff` of `H_CTM` with multiplicities.
pub fn many_body_spectrum(levels: &FreeFermionSpectrum, energy_cutoff: f64) -> Result<Vec<ManyBodyLevel>> {
    many_body_spectrum_with(levels, energy_cutoff, STATE_BUDGET)
}

pub fn many_body_spectrum_with(
    levels: &FreeFermionSpectrum,
    energy_cutoff: f64,
    budget: usize,
) -> Result<Vec<ManyBodyLevel>> {
    if !(energy_cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!("energy cutoff {energy_cutoff} must be positive")));
    }
    let m = modes(levels);
    let mut energies = Vec::new();
    let mut stack = vec![(0usize, 0.0f64)];
    while let Some((start, e)) = stack.pop() {
        energies.push(e);
        if energies.len() > budget {
            return Err(Error::Budget { budget });
        }
        for (i, &eps) in m.iter().enumerate().skip(start) {
            if e + eps > energy_cutoff * (1.0 + 1e-12) {
                break;
            }
            stack.push((i + 1, e + eps));
        }
    }
    Ok(group(energies, energy_cutoff))
}

/// Brute-force enumeration of all `2^n` occupation vectors of up to 20 individual modes.
pub fn brute_force_spectrum(mode_energies: &[f64], energy_cutoff: f64) -> Result<Vec<ManyBodyLevel>> {
    let n = mode_energies.len();
    if n > 20 {
        return Err(Error::Budget { budget: 1 << 20 });
    }
    let energies: Vec<f64> = (0..1usize << n)
        .map(|mask| (0..n).filter(|b| mask >> b & 1 == 1).map(|b| mode_energies[b]).sum::<f64>())
        .filter(|&e| e <= energy_cutoff * (1.0 + 1e-12))
        .collect();
    Ok(group(energies, energy_cutoff))
}

/// Distinct many-body energy with the alternating charges `2S̄ᶻ` of its states, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargedLevel {
    pub energy: f64,
    pub charges: Vec<i64>,
}

/// Charges of the two copies of level `j` in the massive XXZ pattern: `±2` for odd `j`,
/// neutral for even `j`. The zero mode is neutral.
fn xxz_mode_charges(j: usize) -> [i64; 2] {
    if j % 2 == 1 { [2, -2] } else { [0, 0] }
}

/// Many-body spectrum of the massive XXZ pattern with the alternating charge of every state.
pub fn charged_many_body_spectrum(levels: &FreeFermionSpectrum, energy_cutoff: f64) -> Result<Vec<ChargedLevel>> {
    if levels.phase_tag != PhaseTag::XxzMassive {
        return Err(Error::InvalidParameter(format!("no charge assignment for {:?}", levels.phase_tag)));
    }
    if !(energy_cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!("energy cutoff {energy_cutoff} must be positive")));
    }
    let mut m: Vec<(f64, i64)> = Vec::new();
    for (j, (&e, &g)) in levels.levels.iter().zip(&levels.orbital_degeneracy).enumerate() {
        let q = xxz_mode_charges(j);
        for c in q.iter().take(g as usize) {
            m.push((e, *c));
        }
    }
    m.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut states = Vec::new();
    let mut stack = vec![(0usize, 0.0f64, 0i64)];
    while let Some((start, e, q)) = stack.pop() {
        states.push((e, q));
        if states.len() > STATE_BUDGET {
            return Err(Error::Budget { budget: STATE_BUDGET });
        }
        for (i, &(eps, c)) in m.iter().enumerate().skip(start) {
            if e + eps > energy_cutoff * (1.0 + 1e-12) {
                break;
            }
            stack.push((i + 1, e + eps, q + c));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<ChargedLevel> = Vec::new();
    for (e, q) in states {
        match out.last_mut() {
            Some(l) if (e - l.energy).abs() <= 1e-9 * energy_cutoff.max(1.0) => l.charges.push(q),
            _ => out.push(ChargedLevel { energy: e, charges: vec![q] }),
        }
    }
    Ok(out)
}

/// Distinct level `−ln(ξ/ξ₀)` of a numerical spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedLevel {
    /// Mean over the members.
    pub level: f64,
    pub multiplicity: usize,
    /// Sorted sector labels of the members.
    pub labels: Option<Vec<i64>>,
}

/// Groups nonzero weights whose levels lie within `window` of the first member of the group.
pub fn group_levels(spectrum: &EntanglementSpectrum, window: f64) -> Vec<ObservedLevel> {
    let w0 = match spectrum.weights.first() {
        Some(&w) if w > 0.0 => w,
        _ => return Vec::new(),
    };
    let mut out: Vec<(f64, Vec<f64>, Vec<i64>)> = Vec::new();
    for (i, &w) in spectrum.weights.iter().enumerate() {
        if !(w > 0.0) {
            break;
        }
        let x = (w0 / w).ln();
        let label = spectrum.labels.as_ref().map(|l| l[i]);
        match out.last_mut() {
            Some(g) if x - g.0 <= window => {
                g.1.push(x);
                g.2.extend(label);
            }
            _ => out.push((x, vec![x], label.into_iter().collect())),
        }
    }
    out.into_iter()
        .map(|(_, xs, mut ls)| {
            ls.sort_unstable();
            ObservedLevel {
                level: xs.iter().sum::<f64>() / xs.len() as f64,
                multiplicity: xs.len(),
                labels: spectrum.labels.as_ref().map(|_| ls),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub observed: f64,
    pub predicted: f64,
    pub observed_multiplicity: usize,
    pub predicted_multiplicity: u64,
    pub labels_match: Option<bool>,
}

/// Observed distinct levels against the enumerator, level by level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    pub levels: Vec<LevelComparison>,
    /// Largest `|observed/predicted − 1|` over the excited levels.
    pub max_relative_deviation: f64,
    pub multiplicities_match: bool,
    pub labels_match: Option<bool>,
}

impl SpectrumComparison {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_deviation <= tol && self.multiplicities_match && self.labels_match.unwrap_or(true)
    }
}

/// Compares the lowest `count` distinct levels of `spectrum` with the many-body spectrum of
/// `oracle`. Levels are grouped within a fifth of the many-body spacing. Labels are compared
/// when both sides carry them.
pub fn compare_spectrum(
    spectrum: &EntanglementSpectrum,
    oracle: &FreeFermionSpectrum,
    count: usize,
) -> Result<SpectrumComparison> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let spacing = oracle.many_body_spacing();
    let cutoff = spacing * (count as f64 - 0.5);
    let predicted = many_body_spectrum(oracle, cutoff)?;
    let charged = if spectrum.labels.is_some() && oracle.phase_tag == PhaseTag::XxzMassive {
        Some(charged_many_body_spectrum(oracle, cutoff)?)
    } else {
        None
    };
    let observed = group_levels(spectrum, 0.2 * spacing);
    if observed.len() < count || predicted.len() < count {
        return Err(Error::InvalidParameter(format!(
            "spectrum resolves {} distinct levels, {count} requested",
            observed.len()
        )));
    }
    let mut levels = Vec::with_capacity(count);
    let mut max_dev: f64 = 0.0;
    for k in 0..count {
        let (o, p) = (&observed[k], &predicted[k]);
        if k > 0 {
            max_dev = max_dev.max((o.level / p.energy - 1.0).abs());
        }
        let labels_match = match (&o.labels, &charged) {
            (Some(ol), Some(c)) => Some(*ol == c[k].charges),
            _ => None,
        };
        levels.push(LevelComparison {
            observed: o.level,
            predicted: p.energy,
            observed_multiplicity: o.multiplicity,
            predicted_multiplicity: p.multiplicity,
            labels_match,
        });
    }
    let multiplicities_match = levels.iter().all(|l| l.observed_multiplicity as u64 == l.predicted_multiplicity);
    let labels_match = charged.as_ref().map(|_| levels.iter().all(|l| l.labels_match == Some(true)));
    Ok(SpectrumComparison { levels, max_relative_deviation: max_dev, multiplicities_match, labels_match })
}

/// Entropy of one fermion mode at energy `eps`.
pub fn mode_entropy(eps: f64) -> f64 {
    let x = (-eps).exp();
    (1.0 + x).ln() + eps * x / (1.0 + x)
}

/// `S = Σ_modes [ln(1+e^{−ε}) + ε e^{−ε}/(1+e^{−ε})]`, continuing the level formula until the
/// tail is below 1e−12.
pub fn entropy_from_levels(levels: &FreeFermionSpectrum) -> Result<f64> {
    if levels.levels.is_empty() {
        return Err(Error::InvalidParameter("empty level list".into()));
    }
    let mut s: f64 = levels.levels.iter().zip(&levels.orbital_degeneracy).map(|(&e, &g)| g as f64 * mode_entropy(e)).sum();
    let mut j = levels.levels.len();
    loop {
        let (e, g) = level_of(levels.phase_tag, levels.unit, j);
        let term = g as f64 * mode_entropy(e);
        s += term;
        if term < 1e-13 || j > 100_000 {
            break;
        }
        j += 1;
    }
    Ok(s)
}

/// Least-squares fit of `S̄ = −(c/3) ln T + b`, with `C₁ = b − (c/3) ln v` when `v` is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub central_charge: f64,
    pub slope: f64,
    pub intercept: f64,
    pub c1: Option<f64>,
    /// Root-mean-square deviation of the points from the line.
    pub residual: f64,
}

pub fn fit_scaling(points: &[(f64, f64)], velocity: Option<f64>) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::InvalidParameter("temperatures must be positive".into()));
    }
    if let Some(v) = velocity {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("velocity {v} must be positive")));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(Error::InvalidParameter("temperatures are degenerate".into()));
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (xs.iter().zip(points).map(|(x, p)| (p.1 - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let central_charge = -3.0 * slope;
    let c1 = velocity.map(|v| intercept - central_charge / 3.0 * v.ln());
    Ok(ScalingFit { central_charge, slope, intercept, c1, residual })
}

/// Spinon velocity `v = Jπ√(1−Δ²)/(2 arccos Δ)` of the critical XXZ chain, `Jπ/2` at Δ = 1.
pub fn bethe_velocity(delta: f64, j: f64) -> Result<f64> {
    if !(delta > -1.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("Bethe velocity needs -1 < delta <= 1, got {delta}")));
    }
    if delta == 1.0 {
        return Ok(j * std::f64::consts::FRAC_PI_2);
    }
    Ok(j * std::f64::consts::PI * (1.0 - delta * delta).sqrt() / (2.0 * delta.acos()))
}

/// Quasiparticle velocity of the critical transverse Ising chain in units where the dispersion
/// is `2J√(1+λ²−2λ cos k)`.
pub fn ising_velocity(j: f64) -> f64 {
    2.0 * j
}
