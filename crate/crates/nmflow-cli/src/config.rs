use std::path::{Path, PathBuf};

use nmflow::channels::ChannelSpec;
use nmflow::witness::Grid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const EXPERIMENTS: [&str; 9] = [
    "physicality",
    "divisibility-scan",
    "eb-time",
    "mi-scan",
    "gadc-scan",
    "probe-backflow",
    "hessian-check",
    "povm-bound",
    "pg-counterexample",
];

/// Experiment-specific numbers; each experiment reads the ones it needs and
/// falls back to its defaults for the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: Option<f64>,
    pub t0: Option<f64>,
    pub tau: Option<f64>,
    pub p: Option<f64>,
    pub eps: Option<Vec<f64>>,
    /// Number of random pure initial states for `mi-scan`.
    pub random: Option<usize>,
    pub da: Option<usize>,
    pub db: Option<usize>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub draws: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            channel: None,
            grid: None,
            seed: None,
            output: None,
            params: Params::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(CliError::UnknownExperiment(self.experiment.clone()));
        }
        if let Some(g) = &self.grid {
            if !(g.step > 0.0) || !(g.t_max > 0.0) || !(g.t_max > g.t_min) {
                return Err(CliError::ConfigParse(format!(
                    "grid needs step > 0 and t_max > max(t_min, 0), got {g:?}"
                )));
            }
        }
        Ok(())
    }

    /// The configured grid, or `[0, t_max]` with `step` when none is given.
    pub fn grid_or(&self, t_max: f64, step: f64) -> Grid {
        self.grid.unwrap_or(Grid { t_min: 0.0, t_max, step })
    }

    pub fn channel_or(&self, alpha: f64, t0: f64) -> ChannelSpec {
        self.channel.clone().unwrap_or(ChannelSpec::QuasiEternal { alpha, t0 })
    }

    pub fn output_prefix(&self) -> PathBuf {
        let base = self.output.clone().unwrap_or_else(|| PathBuf::from(format!("nmflow-{}", self.experiment)));
        match base.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("json") => base.with_extension(""),
            _ => base,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"mi-scan","channel":{"family":"quasi_eternal","alpha":0.4,"t0":1.0},
                "grid":{"t_max":4.0,"step":0.01},"seed":3,"output":"out/mi.csv","params":{"random":10}}"#,
        )
        .unwrap();
        assert_eq!(cfg.params.random, Some(10));
        assert_eq!(cfg.output_prefix(), PathBuf::from("out/mi"));
        assert_eq!(cfg.grid.unwrap().t_min, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"experiment":"warp-drive"}"#),
            Err(CliError::UnknownExperiment(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"experiment":"mi-scan","grid":{"t_max":1.0,"step":0.0}}"#),
            Err(CliError::ConfigParse(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"experiment":"mi-scan","colour":1}"#),
            Err(CliError::ConfigParse(_))
        ));
        assert!(matches!(ExperimentConfig::from_json("{"), Err(CliError::ConfigParse(_))));
    }
}
