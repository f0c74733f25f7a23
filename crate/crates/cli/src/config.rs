//! TOML configuration. Unknown keys are rejected.

use std::path::Path;

use liushrink::estimators::{Beta1Source, Estimator, LfmForm, ShrinkageConfig, Tuning};
use liushrink::penalized::PenaltyConfig;
use liushrink::simulation::PenalizedSettings;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// A scalar or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `"auto"` or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TuningSpec {
    Value(f64),
    Word(String),
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec::Word("auto".into())
    }
}

impl TuningSpec {
    pub fn resolve(&self, name: &str) -> Result<Tuning, Failure> {
        match self {
            TuningSpec::Value(v) => Ok(Tuning::Fixed(*v)),
            TuningSpec::Word(w) if w.eq_ignore_ascii_case("auto") => Ok(Tuning::Auto),
            TuningSpec::Word(w) => Err(Failure::config(format!("{name}: expected \"auto\" or a number, got {w:?}"))),
        }
    }

    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(TuningSpec::Word("auto".into()))
        } else {
            s.parse::<f64>().map(TuningSpec::Value).map_err(|_| format!("expected \"auto\" or a number, got {s:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Beta1SourceSpec {
    #[default]
    PartialLse,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LfmFormSpec {
    #[default]
    FullBlock,
    Partitioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkageSection {
    pub d: TuningSpec,
    pub d1: TuningSpec,
    pub lambda_r: TuningSpec,
    pub lambda_r1: TuningSpec,
    pub beta1_source: Beta1SourceSpec,
    pub lfm_form: LfmFormSpec,
}

impl ShrinkageSection {
    pub fn resolve(&self, alpha: f64) -> Result<ShrinkageConfig, Failure> {
        let cfg = ShrinkageConfig {
            d: self.d.resolve("shrinkage.d")?,
            d1: self.d1.resolve("shrinkage.d1")?,
            lambda_r: self.lambda_r.resolve("shrinkage.lambda_r")?,
            lambda_r1: self.lambda_r1.resolve("shrinkage.lambda_r1")?,
            alpha,
            beta1_source: match self.beta1_source {
                Beta1SourceSpec::PartialLse => Beta1Source::PartialLse,
                Beta1SourceSpec::AsPrinted => Beta1Source::AsPrinted,
            },
            lfm_form: match self.lfm_form {
                LfmFormSpec::FullBlock => LfmForm::FullBlock,
                LfmFormSpec::Partitioned => LfmForm::Partitioned,
            },
        };
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenalizedSection {
    pub folds: usize,
    pub grid_len: usize,
    pub grid_ratio: f64,
    pub gamma: f64,
    pub a: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PenalizedSection {
    fn default() -> Self {
        let s = PenalizedSettings::default();
        Self {
            folds: s.folds,
            grid_len: s.grid_len,
            grid_ratio: s.grid_ratio,
            gamma: s.penalty.gamma,
            a: s.penalty.a,
            max_iter: s.penalty.max_iter,
            tol: s.penalty.tol,
        }
    }
}

impl PenalizedSection {
    pub fn resolve(&self) -> Result<PenalizedSettings, Failure> {
        let penalty = PenaltyConfig { lambda: 0.0, gamma: self.gamma, a: self.a, max_iter: self.max_iter, tol: self.tol };
        penalty.validate().map_err(|e| Failure::config(e.to_string()))?;
        if self.folds < 2 || self.grid_len < 2 || !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(Failure::config("penalized: need folds >= 2, grid_len >= 2 and 0 < grid_ratio < 1"));
        }
        Ok(PenalizedSettings { penalty, folds: self.folds, grid_len: self.grid_len, grid_ratio: self.grid_ratio })
    }
}

pub fn parse_estimators(names: &[String]) -> Result<Vec<Estimator>, Failure> {
    names.iter().map(|s| s.parse::<Estimator>().map_err(|e| Failure::config(e.to_string()))).collect()
}

pub fn default_alpha() -> f64 {
    0.05
}
