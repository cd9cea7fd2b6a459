use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Figure1,
    Bound,
    WpeSweep,
    SdotDemo,
    Clt,
    Wpe,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Figure1 => "figure1",
            ExperimentKind::Bound => "bound",
            ExperimentKind::WpeSweep => "wpe-sweep",
            ExperimentKind::SdotDemo => "sdot-demo",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Wpe => "wpe",
        }
    }
}

/// One `(family, θ, estimator, n)` cell of a bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCase {
    pub family: String,
    pub theta: Vec<f64>,
    pub estimator: String,
    pub n: usize,
}

/// Declarative experiment description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    /// Several parameter values; overrides `theta` where supported.
    #[serde(default)]
    pub theta_grid: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Master seed; required so that every run is reproducible.
    pub seed: u64,
    /// Output directory, when not given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Explicit bound-check cases; the shipped suite when empty.
    #[serde(default)]
    pub cases: Vec<BoundCase>,
    /// Regression design matrix (CSV).
    #[serde(default)]
    pub design: Option<PathBuf>,
    /// Data file for `wpe` fits and `sdot-demo` sites.
    #[serde(default)]
    pub sample: Option<PathBuf>,
    /// Support polygon override for `sdot-demo`.
    #[serde(default)]
    pub polygon: Option<Vec<[f64; 2]>>,
    /// Search window of projection fits.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

fn default_reps() -> usize {
    2000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A config with only the required fields set.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            family: None,
            theta: None,
            theta_grid: None,
            estimators: Vec::new(),
            n_grid: Vec::new(),
            reps: default_reps(),
            eps: Vec::new(),
            seed,
            output: None,
            cases: Vec::new(),
            design: None,
            sample: None,
            polygon: None,
            window: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be positive".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        if self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("perturbation scales must be positive".into()));
        }
        if matches!(&self.theta_grid, Some(g) if g.is_empty()) {
            return Err(Error::Config("empty θ grid".into()));
        }
        if self.experiment == ExperimentKind::Wpe && self.sample.is_none() {
            return Err(Error::Config("a `wpe` fit needs a `sample` file".into()));
        }
        Ok(())
    }

    pub(crate) fn thetas(&self, default: &[f64]) -> Vec<Vec<f64>> {
        match (&self.theta_grid, &self.theta) {
            (Some(g), _) => g.clone(),
            (None, Some(t)) => vec![t.clone()],
            (None, None) => vec![default.to_vec()],
        }
    }

    pub(crate) fn n_grid_or(&self, default: &[usize]) -> Vec<usize> {
        if self.n_grid.is_empty() {
            default.to_vec()
        } else {
            self.n_grid.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"experiment": "bound"}"#), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(r#"{"experiment": "figure1", "seed": 3}"#).unwrap();
        assert_eq!(c.reps, 2000);
    }

    #[test]
    fn unknown_fields_and_bad_grids_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment": "clt", "seed": 1, "colour": 2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "clt", "seed": 1, "n_grid": [0]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "clt", "seed": 1, "theta_grid": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "wpe", "seed": 1}"#).is_err());
    }
}
