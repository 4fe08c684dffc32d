use std::path::Path;

use qtment::fforacle::{self, FreeFermionSpectrum, PhaseTag};
use qtment::qtm::{build_qtm, cut_spectrum, leading_state};
use qtment::tmrg::tmrg_sweep;
use qtment::{qubit, AuxCut, EntanglementSpectrum, SpinChainModel, TmrgConfig, TrotterGrid};
use serde_json::json;

use crate::config::{Method, RunConfig};
use crate::output::{Cell, Report};
use crate::CliError;

pub fn qubit_demo(cfg: &RunConfig) -> Result<Report, CliError> {
    let temps = cfg.temperatures()?;
    let asymptotic = temps.iter().any(|&t| t > 10.0);
    let mut columns = vec!["T", "s_pure", "s_canonical", "mutual_info", "s_bar"];
    if asymptotic {
        columns.extend(["t2_mutual_info", "s_bar_asymptote_ratio"]);
    }
    let mut report = Report::new("qubit-demo", columns);
    for t in temps {
        let m = qubit::measures(t)?;
        let mut row: Vec<Cell> =
            vec![t.into(), m.s_pure.into(), m.s_canonical.into(), m.mutual_info.into(), m.s_bar.into()];
        if asymptotic {
            row.push((t * t * m.mutual_info).into());
            row.push((m.s_bar / qubit::sbar_asymptote(t)).into());
        }
        report.push(row);
    }
    Ok(report)
}

fn tmrg_config(cfg: &RunConfig, temps: Vec<f64>) -> TmrgConfig {
    TmrgConfig {
        kept_states: cfg.m_kept(),
        delta_beta: cfg.dbeta(),
        target_temperatures: temps,
        ..TmrgConfig::default()
    }
}

/// Default number of compared levels per phase.
fn default_levels(phase: PhaseTag) -> usize {
    match phase {
        PhaseTag::IsingDisordered => 8,
        PhaseTag::IsingOrdered | PhaseTag::XxzMassive => 4,
    }
}

pub fn dense_spectrum(model: &SpinChainModel, temperature: f64, dbeta: f64) -> Result<EntanglementSpectrum, CliError> {
    let grid = TrotterGrid::from_temperature(temperature, dbeta)?;
    let q = build_qtm(model, &grid)?;
    let pair = leading_state(&q, 1e-12)?;
    Ok(cut_spectrum(model, &pair, &AuxCut::symmetric(grid.trotter_m))?)
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let t = cfg.temperature()?;
    let spec = match cfg.method.unwrap_or(Method::Tmrg) {
        Method::Dense => dense_spectrum(&model, t, cfg.dbeta())?,
        Method::Tmrg => {
            let points = tmrg_sweep(&model, &tmrg_config(cfg, vec![t]))?;
            let p = points.into_iter().last().ok_or_else(|| CliError::Numerical("empty sweep".into()))?;
            if p.flagged {
                eprintln!("warning: truncation flagged (discarded weight {:e})", p.discarded_weight);
            }
            p.spectrum
        }
    };
    let oracle: Option<FreeFermionSpectrum> = fforacle::single_particle_levels(&model, 40).ok();
    let window = oracle.as_ref().map_or(1e-6, |o| 0.2 * o.many_body_spacing());
    let groups = fforacle::group_levels(&spec, window);

    let labelled = spec.labels.is_some();
    let mut columns = vec!["index", "weight", "neg_ln_weight", "multiplicity"];
    if labelled {
        columns.push("sz_label");
    }
    let mut report = Report::new("spectrum", columns);
    let mut member = groups.iter().flat_map(|g| std::iter::repeat(g.multiplicity).take(g.multiplicity));
    for (i, &w) in spec.weights.iter().enumerate() {
        if !(w > 0.0) {
            break;
        }
        let mult = member.next().unwrap_or(1);
        let mut row: Vec<Cell> = vec![i.into(), w.into(), (-w.ln()).into(), mult.into()];
        if let Some(l) = &spec.labels {
            row.push(l[i].into());
        }
        report.push(row);
    }
    report.extra.push(("entropy", json!(spec.entropy)));
    if let Some(o) = oracle {
        let count = cfg.levels.unwrap_or_else(|| default_levels(o.phase_tag));
        let block = match fforacle::compare_spectrum(&spec, &o, count) {
            Ok(c) => json!({
                "phase": o.phase_tag,
                "spacing_unit": o.unit,
                "many_body_spacing": o.many_body_spacing(),
                "spacing_ratio": c.levels.get(1).map(|l| l.observed / l.predicted),
                "max_relative_deviation": c.max_relative_deviation,
                "multiplicities_match": c.multiplicities_match,
                "labels_match": c.labels_match,
                "observed_multiplicities": c.levels.iter().map(|l| l.observed_multiplicity).collect::<Vec<_>>(),
                "predicted_multiplicities": c.levels.iter().map(|l| l.predicted_multiplicity).collect::<Vec<_>>(),
            }),
            Err(e) => json!({ "phase": o.phase_tag, "error": e.to_string() }),
        };
        report.extra.push(("comparison", block));
    }
    Ok(report)
}

pub fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let temps = cfg.temperatures()?;
    let mut points = tmrg_sweep(&model, &tmrg_config(cfg, temps))?;
    points.sort_by(|a, b| b.temperature.total_cmp(&a.temperature));
    let mut report = Report::new("sweep", vec!["T", "s_bar", "free_energy", "discarded_weight"]);
    for p in &points {
        if p.flagged {
            eprintln!("warning: T = {} flagged (discarded weight {:e})", p.temperature, p.discarded_weight);
        }
        report.push(vec![p.temperature.into(), p.s_bar.into(), p.free_energy.into(), p.discarded_weight.into()]);
    }
    Ok(report)
}

/// `(T, s_bar)` pairs of a CSV table with `#` comment lines and a header row.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| CliError::Usage("input table is empty".into()))?.split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Usage(format!("input table has no column {name}")))
    };
    let (it, is) = (col("T")?, col("s_bar")?);
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            f.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Usage(format!("bad value in data row {}", n + 1)))
        };
        out.push((parse(it)?, parse(is)?));
    }
    Ok(out)
}

/// Velocity implied by the model flags, for critical models only.
pub fn model_velocity(model: &SpinChainModel) -> Option<f64> {
    match *model {
        SpinChainModel::TransverseIsing { lambda, j } if lambda.abs() == 1.0 => Some(fforacle::ising_velocity(j)),
        SpinChainModel::Xxz { delta, j } => fforacle::bethe_velocity(delta, j).ok(),
        _ => None,
    }
}

pub fn fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Usage("fit needs an input table".into()))?;
    let points: Vec<(f64, f64)> = read_table(input)?
        .into_iter()
        .filter(|p| cfg.t_min.map_or(true, |t| p.0 >= t) && cfg.t_max.map_or(true, |t| p.0 <= t))
        .collect();
    let velocity = match cfg.velocity {
        Some(v) => Some(v),
        None if cfg.model.is_some() => model_velocity(&cfg.model()?),
        None => None,
    };
    let f = fforacle::fit_scaling(&points, velocity)?;
    let mut report = Report::new("fit", vec!["central_charge", "c1", "slope", "intercept", "residual", "points"]);
    report.push(vec![
        f.central_charge.into(),
        f.c1.map_or(Cell::Empty, Cell::Real),
        f.slope.into(),
        f.intercept.into(),
        f.residual.into(),
        points.len().into(),
    ]);
    report.extra.push(("velocity", json!(velocity)));
    report.extra.push(("result", json!({ "c": f.central_charge, "c1": f.c1, "residual": f.residual })));
    Ok(report)
}

