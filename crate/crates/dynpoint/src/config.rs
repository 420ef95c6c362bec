//! Experiment configuration: a structured TOML file so that experiments are
//! diffable artifacts. Unknown keys are rejected; all numeric ranges are
//! validated at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functional::{GeometricPattern, InteractionFunctional};
use crate::limits::{RegimeSpec, ScalingLaw};
use crate::process::SimParams;

/// Power law `coeff * n^{-exponent}` for the interaction radius or the
/// diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub coeff: f64,
    pub exponent: f64,
}

impl Scaling {
    pub fn law(&self) -> ScalingLaw {
        ScalingLaw {
            coeff: self.coeff,
            exponent: self.exponent,
        }
    }

    pub fn at(&self, n: f64) -> f64 {
        self.law().at(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    PairIndicator,
    SubgraphCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorChoice {
    Marked,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: f64,
    pub t_horizon: f64,
    pub d: usize,
    pub k: usize,
    pub delta: f64,
    pub functional: FunctionalKind,
    /// Edge list of the pattern graph; required for subgraph counts.
    #[serde(default)]
    pub pattern_edges: Option<Vec<(usize, usize)>>,
    pub r_scaling: Scaling,
    pub sigma_scaling: Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub replicates: usize,
    pub grid_spacing: f64,
    pub lags: Vec<f64>,
    pub seed: u64,
    pub mc_samples: u64,
    #[serde(default = "default_simulator")]
    pub simulator: SimulatorChoice,
}

fn default_simulator() -> SimulatorChoice {
    SimulatorChoice::Marked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        self.sim_params().validate()?;
        if !(m.delta > 0.0 && m.delta < 0.5) {
            return Err(Error::Config(format!("delta: {} not in (0, 1/2)", m.delta)));
        }
        let r = self.r();
        if !(r > 0.0 && r <= 1.0 && m.delta * r < 0.5) {
            return Err(Error::Config(format!("r_scaling: effective r = {r} out of range")));
        }
        if self.sigma() < 0.0 {
            return Err(Error::Config("sigma_scaling: effective sigma negative".into()));
        }
        if m.functional == FunctionalKind::SubgraphCount && m.pattern_edges.is_none() {
            return Err(Error::Config("pattern_edges: required for subgraph counts".into()));
        }
        let run = &self.run;
        if run.replicates == 0 {
            return Err(Error::Config("replicates: must be >= 1".into()));
        }
        if !(run.grid_spacing > 0.0 && run.grid_spacing <= m.t_horizon) {
            return Err(Error::Config(format!(
                "grid_spacing: {} not in (0, T]",
                run.grid_spacing
            )));
        }
        if run.lags.iter().any(|&l| l < 0.0 || l > m.t_horizon) {
            return Err(Error::Config("lags: must lie in [0, T]".into()));
        }
        if run.mc_samples < 2 {
            return Err(Error::Config("mc_samples: must be >= 2".into()));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("formats: unknown format {f:?}")));
            }
        }
        Ok(())
    }

    /// Effective interaction radius at the configured intensity.
    pub fn r(&self) -> f64 {
        self.model.r_scaling.at(self.model.n)
    }

    /// Effective diffusion coefficient at the configured intensity.
    pub fn sigma(&self) -> f64 {
        self.model.sigma_scaling.at(self.model.n)
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            n: self.model.n,
            t_horizon: self.model.t_horizon,
            sigma: self.sigma(),
            d: self.model.d,
            k: self.model.k,
            seed: self.run.seed,
        }
    }

    pub fn functional(&self) -> Result<InteractionFunctional> {
        match self.model.functional {
            FunctionalKind::PairIndicator => {
                if self.model.k != 2 {
                    return Err(Error::Config("k: pair_indicator requires k = 2".into()));
                }
                InteractionFunctional::pair_indicator(self.model.delta)
            }
            FunctionalKind::SubgraphCount => {
                let edges = self
                    .model
                    .pattern_edges
                    .as_ref()
                    .ok_or_else(|| Error::Config("pattern_edges: required".into()))?;
                let pattern = GeometricPattern::from_edges(self.model.k, edges)?;
                InteractionFunctional::subgraph_count(pattern, self.model.delta)
            }
        }
    }

    pub fn regime_spec(&self) -> RegimeSpec {
        RegimeSpec {
            d: self.model.d,
            k: self.model.k,
            r: self.model.r_scaling.law(),
            sigma: self.model.sigma_scaling.law(),
        }
    }

    /// Snapshot grid `0, h, 2h, ..., <= T`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.run.grid_spacing;
        let steps = (self.model.t_horizon / h + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * h).collect()
    }

    /// Hash of the effective scientific configuration (after any CLI
    /// overrides), used to stamp every artifact. The output section is
    /// excluded so a redirected run stays comparable to the original.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Scientific<'a> {
            model: &'a ModelConfig,
            run: &'a RunConfig,
        }
        let canon = toml::to_string(&Scientific {
            model: &self.model,
            run: &self.run,
        })
        .expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const EXAMPLE: &str = r#"
[model]
n = 200.0
t_horizon = 1.0
d = 1
k = 2
delta = 0.25
functional = "pair_indicator"
r_scaling = { coeff = 0.02, exponent = 0.0 }
sigma_scaling = { coeff = 0.0, exponent = 0.0 }

[run]
replicates = 100
grid_spacing = 0.25
lags = [0.25, 0.5]
seed = 42
mc_samples = 10000

[output]
directory = "out"
"#;

    #[test]
    fn parses_and_derives() {
        let cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        assert_eq!(cfg.r(), 0.02);
        assert_eq!(cfg.sigma(), 0.0);
        assert_eq!(cfg.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(cfg.run.simulator, SimulatorChoice::Marked);
        cfg.functional().unwrap();
    }

    #[test]
    fn missing_key_is_named() {
        let text = EXAMPLE.replace("delta = 0.25\n", "");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("delta"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = EXAMPLE.replace("[run]", "typo_key = 1\n[run]");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn range_validation() {
        let text = EXAMPLE.replace("delta = 0.25", "delta = 0.7");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = EXAMPLE.replace("replicates = 100", "replicates = 0");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = EXAMPLE.replace("functional = \"pair_indicator\"", "functional = \"subgraph_count\"");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("pattern_edges"), "{err}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse(EXAMPLE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.run.seed = 43;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn scaling_laws_apply() {
        let mut cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        cfg.model.n = 1000.0;
        cfg.model.r_scaling = Scaling { coeff: 1.0, exponent: 1.0 };
        assert!((cfg.r() - 1e-3).abs() < 1e-15);
    }
}
