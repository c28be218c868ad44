//! Run configuration: a flat JSON object. Every key except the input paths
//! has a default; relative paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covariance::{CopulaParams, CovarianceRepair};
use crate::error::{Error, Result};
use crate::forecast::{VariableKind, DEFAULT_MOMENT_GRID};
use crate::history::ExplanatoryKind;
use crate::io::read_json;
use crate::methods::MethodId;
use crate::risk::GroupKey;

fn default_levels() -> Vec<f64> {
    crate::synthetic::standard_levels()
}
fn default_kind() -> VariableKind {
    VariableKind::Solar
}
fn default_theta() -> f64 {
    0.92
}
fn default_omega() -> f64 {
    0.42
}
fn default_jitter() -> f64 {
    1e-10
}
fn default_scenarios() -> usize {
    1000
}
fn default_seed() -> u64 {
    2020
}
fn default_bins() -> usize {
    crate::reserve::DEFAULT_BINS
}
fn default_ci() -> f64 {
    crate::reserve::DEFAULT_CI
}
fn default_pi() -> f64 {
    crate::methods::DEFAULT_PI
}
fn default_extreme() -> f64 {
    crate::methods::DEFAULT_EXTREME_FRACTION
}
fn default_rho() -> f64 {
    crate::risk::DEFAULT_RHO_LIMIT
}
fn default_methods() -> Vec<MethodId> {
    vec![
        MethodId::Deterministic,
        MethodId::AllScenarios,
        MethodId::ExtremeScenarios,
        MethodId::Bounds,
        MethodId::PredictionInterval,
        MethodId::Hybrid,
    ]
}
fn default_solar_explanatory() -> ExplanatoryKind {
    ExplanatoryKind::RateOfChange
}
fn default_grid() -> Vec<f64> {
    vec![0.8, 0.9, 0.95]
}
fn default_n_grid() -> usize {
    DEFAULT_MOMENT_GRID
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_cap() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub load_forecast: PathBuf,
    pub wind_forecast: PathBuf,
    pub solar_forecast: PathBuf,
    pub load_history: PathBuf,
    pub wind_history: PathBuf,
    pub solar_history: PathBuf,
    /// Net-demand history for the risk engine; derived from the three
    /// variable histories when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net_demand_history: Option<PathBuf>,

    /// Variable whose forecast is probabilistic; the other two use their
    /// central forecasts with the recursive method.
    #[serde(default = "default_kind")]
    pub probabilistic_variable: VariableKind,
    #[serde(default = "default_levels")]
    pub quantile_levels: Vec<f64>,

    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default)]
    pub repair: CovarianceRepair,
    #[serde(default = "default_scenarios")]
    pub scenarios: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,

    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_ci")]
    pub ci: f64,
    #[serde(default = "default_pi")]
    pub pi: f64,
    #[serde(default = "default_extreme")]
    pub extreme_fraction: f64,
    #[serde(default = "default_rho")]
    pub rho_limit: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodId>,
    /// Methods combined by the hybrid; all other requested methods when empty.
    #[serde(default)]
    pub hybrid_of: Vec<MethodId>,
    #[serde(default)]
    pub literal_pi: bool,

    #[serde(default)]
    pub load_explanatory: ExplanatoryKind,
    #[serde(default)]
    pub wind_explanatory: ExplanatoryKind,
    #[serde(default = "default_solar_explanatory")]
    pub solar_explanatory: ExplanatoryKind,
    /// Explanatory variable summed over the horizon to rank extreme scenarios.
    #[serde(default)]
    pub extreme_score: ExplanatoryKind,
    #[serde(default)]
    pub risk_grouping: GroupKey,

    #[serde(default = "default_grid")]
    pub sensitivity_ci: Vec<f64>,
    #[serde(default = "default_grid")]
    pub sensitivity_pi: Vec<f64>,

    /// Worker threads; rayon's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default = "default_cap")]
    pub combination_cap: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Reads, resolves relative paths and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config with default parameters for the given input files.
    pub fn with_inputs(
        forecasts: [PathBuf; 3],
        histories: [PathBuf; 3],
        output_dir: PathBuf,
    ) -> Self {
        let [load_forecast, wind_forecast, solar_forecast] = forecasts;
        let [load_history, wind_history, solar_history] = histories;
        let json = serde_json::json!({
            "load_forecast": load_forecast,
            "wind_forecast": wind_forecast,
            "solar_forecast": solar_forecast,
            "load_history": load_history,
            "wind_history": wind_history,
            "solar_history": solar_history,
            "output_dir": output_dir,
        });
        serde_json::from_value(json).expect("defaults deserialize")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.load_forecast,
            &mut self.wind_forecast,
            &mut self.solar_forecast,
            &mut self.load_history,
            &mut self.wind_history,
            &mut self.solar_history,
            &mut self.output_dir,
        ] {
            fix(p);
        }
        if let Some(p) = &mut self.net_demand_history {
            fix(p);
        }
    }

    pub fn copula(&self) -> CopulaParams {
        CopulaParams {
            theta: self.theta,
            omega: self.omega,
            jitter: self.jitter,
        }
    }

    pub fn explanatory(&self, kind: VariableKind) -> ExplanatoryKind {
        match kind {
            VariableKind::Load | VariableKind::NetDemand => self.load_explanatory,
            VariableKind::Wind => self.wind_explanatory,
            VariableKind::Solar => self.solar_explanatory,
        }
    }

    pub fn forecast_path(&self, kind: VariableKind) -> &Path {
        match kind {
            VariableKind::Wind => &self.wind_forecast,
            VariableKind::Solar => &self.solar_forecast,
            _ => &self.load_forecast,
        }
    }

    pub fn history_path(&self, kind: VariableKind) -> &Path {
        match kind {
            VariableKind::Wind => &self.wind_history,
            VariableKind::Solar => &self.solar_history,
            _ => &self.load_history,
        }
    }

    pub fn input_paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![
            &self.load_forecast,
            &self.wind_forecast,
            &self.solar_forecast,
            &self.load_history,
            &self.wind_history,
            &self.solar_history,
        ];
        if let Some(p) = &self.net_demand_history {
            v.push(p);
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| -> Result<()> {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {p} must lie in (0, 1)")))
            }
        };
        for &p in &self.quantile_levels {
            prob("quantile level", p)?;
        }
        if self.quantile_levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("quantile_levels must be strictly increasing"));
        }
        prob("ci", self.ci)?;
        prob("pi", self.pi)?;
        for &p in &self.sensitivity_ci {
            prob("sensitivity ci", p)?;
        }
        for &p in &self.sensitivity_pi {
            prob("sensitivity pi", p)?;
        }
        if !(self.extreme_fraction > 0.0 && self.extreme_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "extreme_fraction = {} must lie in (0, 1]",
                self.extreme_fraction
            )));
        }
        if self.scenarios == 0 {
            return Err(Error::invalid("scenarios must be at least 1"));
        }
        if self.bins == 0 {
            return Err(Error::invalid("bins must be at least 1"));
        }
        if !(self.rho_limit >= 0.0) {
            return Err(Error::invalid("rho_limit must be >= 0"));
        }
        if self.probabilistic_variable == VariableKind::NetDemand {
            return Err(Error::invalid("probabilistic_variable must be load, wind or solar"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        self.copula().validate()?;
        for p in self.input_paths() {
            if !p.is_file() {
                return Err(Error::invalid(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::with_inputs(
            ["l.csv", "w.csv", "s.csv"].map(PathBuf::from),
            ["lh.csv", "wh.csv", "sh.csv"].map(PathBuf::from),
            PathBuf::from("out"),
        );
        assert_eq!(cfg.scenarios, 1000);
        assert_eq!(cfg.bins, 20);
        assert_eq!(cfg.theta, 0.92);
        assert_eq!(cfg.quantile_levels.len(), 19);
        assert_eq!(cfg.quantile_levels[0], 0.05);
        assert_eq!(cfg.quantile_levels[18], 0.95);
        assert_eq!(cfg.sensitivity_ci, vec![0.8, 0.9, 0.95]);
        assert_eq!(cfg.solar_explanatory, ExplanatoryKind::RateOfChange);
    }

    #[test]
    fn unknown_keys_rejected() {
        let v = serde_json::json!({
            "load_forecast": "a", "wind_forecast": "a", "solar_forecast": "a",
            "load_history": "a", "wind_history": "a", "solar_history": "a",
            "sceanrios": 5
        });
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn missing_inputs_fail_validation() {
        let cfg = RunConfig::with_inputs(
            ["/nonexistent/l.csv", "w", "s"].map(PathBuf::from),
            ["lh", "wh", "sh"].map(PathBuf::from),
            PathBuf::from("out"),
        );
        assert!(cfg.validate().is_err());
    }
}
