//! Scenario configuration. Every field has a default, so `{}` is a valid
//! config for any scenario.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NmiVsSigma,
    ConditionVsC,
    AccuracyVsNoise,
    ConvergencePernode,
    AttackMse,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::NmiVsSigma,
        Scenario::ConditionVsC,
        Scenario::AccuracyVsNoise,
        Scenario::ConvergencePernode,
        Scenario::AttackMse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NmiVsSigma => "nmi-vs-sigma",
            Scenario::ConditionVsC => "condition-vs-c",
            Scenario::AccuracyVsNoise => "accuracy-vs-noise",
            Scenario::ConvergencePernode => "convergence-pernode",
            Scenario::AttackMse => "attack-mse",
        }
    }

    /// Iteration budget used when the config leaves `t_max` unset.
    pub fn default_t_max(self) -> usize {
        match self {
            Scenario::ConditionVsC => 2000,
            _ => 5000,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Regular node count of the random geometric graph.
    pub n: usize,
    /// Connection radius; `None` selects `sqrt(2 ln n / n)`.
    pub radius: Option<f64>,
    pub graph_seed: u64,
    /// Seed of the standard normal private data.
    pub data_seed: u64,
    pub c: f64,
    pub theta: f64,
    pub mu_z: f64,
    /// Initialization spread of single-run scenarios.
    pub sigma_z: f64,
    pub init_seed: u64,
    pub t_max: Option<usize>,
    /// Noise levels shared by the proposed method (`sigma_z`) and the
    /// baselines (`sigma`).
    pub sigmas: Vec<f64>,
    /// Baseline noise level of the per-node convergence scenario.
    pub pernode_sigma: f64,
    pub c_values: Vec<f64>,
    /// Monte Carlo seeds per baseline and noise level.
    pub baseline_seeds: u64,
    pub baseline_seed_offset: u64,
    pub sigma_z_grid: Vec<f64>,
    pub sigma_s: f64,
    pub samples: usize,
    pub k: usize,
    pub mi_seed: u64,
    pub attack_draws: usize,
    pub attack_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 10,
            radius: None,
            graph_seed: 42,
            data_seed: 7,
            c: 1.0,
            theta: 0.5,
            mu_z: 1000.0,
            sigma_z: 1.0,
            init_seed: 1,
            t_max: None,
            sigmas: vec![1e-2, 1e-1, 1.0],
            pernode_sigma: 1e-1,
            c_values: vec![1.0, 2.0, 5.0],
            baseline_seeds: 100,
            baseline_seed_offset: 0,
            sigma_z_grid: vec![1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            sigma_s: 1.0,
            samples: 5000,
            k: 3,
            mi_seed: 11,
            attack_draws: 100_000,
            attack_seed: 13,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn t_max_for(&self, scenario: Scenario) -> usize {
        self.t_max.unwrap_or_else(|| scenario.default_t_max())
    }

    /// The config with `t_max` made explicit, as recorded in manifests.
    pub fn resolved(&self, scenario: Scenario) -> Self {
        Self {
            t_max: Some(self.t_max_for(scenario)),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(
            ScenarioConfig::from_json("{}").unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"sigma_zz": 1}"#).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>(), Ok(sc));
            assert_eq!(
                serde_json::to_string(&sc).unwrap(),
                format!("\"{}\"", sc.name())
            );
        }
    }
}
