use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qtment::SpinChainModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ising,
    Xxz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Tmrg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Quick,
    Full,
}

/// Parameters of one command. Every field is optional so that a config file and the flags can
/// be layered; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_kept: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Not echoed: the destination does not change the result.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Input table of `fit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Distinct levels compared against the free-fermion enumerator in `spectrum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<Scope>,
    /// Per-check tolerance overrides of `validate`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// `self` with every field set in `over` replaced.
    pub fn overlay(mut self, over: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(model, lambda, delta, j, temp, temps, dbeta, m_kept, method, format, out, input, velocity, t_min, t_max, levels, scope);
        self.tolerances.extend(over.tolerances);
        self
    }

    pub fn model(&self) -> Result<SpinChainModel, CliError> {
        let kind = self.model.ok_or_else(|| CliError::Usage("--model is required".into()))?;
        let j = self.j.unwrap_or(1.0);
        let model = match kind {
            ModelKind::Ising => SpinChainModel::transverse_ising(
                self.lambda.ok_or_else(|| CliError::Usage("--lambda is required for the Ising model".into()))?,
            ),
            ModelKind::Xxz => SpinChainModel::xxz(
                self.delta.ok_or_else(|| CliError::Usage("--delta is required for the XXZ model".into()))?,
            ),
        };
        let model = model.with_j(j);
        model.validate()?;
        Ok(model)
    }

    /// Temperatures from `temps`, or the single `temp`.
    pub fn temperatures(&self) -> Result<Vec<f64>, CliError> {
        let ts = match (&self.temps, self.temp) {
            (Some(ts), _) => ts.clone(),
            (None, Some(t)) => vec![t],
            (None, None) => Vec::new(),
        };
        if ts.is_empty() {
            return Err(CliError::Usage("empty temperature grid; pass --temp or --temps".into()));
        }
        if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(CliError::Usage(format!("temperature {t} must be positive")));
        }
        Ok(ts)
    }

    pub fn temperature(&self) -> Result<f64, CliError> {
        let ts = self.temperatures()?;
        if ts.len() != 1 {
            return Err(CliError::Usage(format!("expected one temperature, got {}", ts.len())));
        }
        Ok(ts[0])
    }

    pub fn dbeta(&self) -> f64 {
        self.dbeta.unwrap_or(0.025)
    }

    pub fn m_kept(&self) -> usize {
        self.m_kept.unwrap_or(64)
    }

    /// Copy with the defaults used by `command` filled in, for the output header.
    pub fn resolved(&self, command: &str) -> RunConfig {
        let mut r = self.clone();
        if r.model.is_some() {
            r.j = Some(self.j.unwrap_or(1.0));
        }
        match command {
            "spectrum" => {
                r.method = Some(self.method.unwrap_or(Method::Tmrg));
                r.dbeta = Some(self.dbeta());
                if r.method == Some(Method::Tmrg) {
                    r.m_kept = Some(self.m_kept());
                }
            }
            "sweep" => {
                r.dbeta = Some(self.dbeta());
                r.m_kept = Some(self.m_kept());
            }
            "validate" => r.scope = Some(self.scope.unwrap_or(Scope::Quick)),
            _ => {}
        }
        r
    }
}
