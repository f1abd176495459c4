//! Campaign configuration, read from TOML.
//!
//! ```toml
//! [suite]
//! path = "problems.suite"   # optional; generated from seed/dim/count when absent
//! seed = 1                  # default 1
//! dim = 10                  # default 10
//! count = 10                # default 10
//!
//! [campaign]
//! policies = ["rcmaes-active", "rcmaes-standard"]   # default ["rcmaes-active"]
//! budget_multiplier = 10000                          # evaluations per dimension, default 10000
//! runs = 51                                          # default 51
//! seed_offset = 0                                    # seed = run index + offset, default 0
//!
//! [output]
//! dir = "results"           # default "results"
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use rcmaes_core::rcmaes::RestartPolicy;
use rcmaes_core::suite::{generate_suite, load_suite, ProblemInstance};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MIN_BUDGET_MULTIPLIER: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub dim: usize,
    pub count: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            path: None,
            seed: 1,
            dim: 10,
            count: 10,
        }
    }
}

impl SuiteConfig {
    /// Loads the suite file if one is configured, otherwise generates it.
    pub fn problems(&self) -> Result<Vec<ProblemInstance>> {
        match &self.path {
            Some(p) => Ok(load_suite(p)?),
            None => Ok(generate_suite(self.seed, self.dim, self.count)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSettings {
    pub policies: Vec<String>,
    pub budget_multiplier: u64,
    pub runs: usize,
    pub seed_offset: u64,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        Self {
            policies: vec![RestartPolicy::RCMAES.to_string()],
            budget_multiplier: 10_000,
            runs: 51,
            seed_offset: 0,
        }
    }
}

impl CampaignSettings {
    pub fn parsed_policies(&self) -> Result<Vec<RestartPolicy>> {
        self.policies
            .iter()
            .map(|p| p.parse().map_err(|e: rcmaes_core::Error| HarnessError::Config(e.to_string())))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub suite: SuiteConfig,
    pub campaign: CampaignSettings,
    pub output: OutputConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.campaign;
        if c.runs == 0 {
            return Err(HarnessError::Config("campaign.runs must be >= 1".into()));
        }
        if c.budget_multiplier < MIN_BUDGET_MULTIPLIER {
            return Err(HarnessError::Config(format!(
                "campaign.budget_multiplier must be >= {MIN_BUDGET_MULTIPLIER}, got {}",
                c.budget_multiplier
            )));
        }
        if c.policies.is_empty() {
            return Err(HarnessError::Config("campaign.policies is empty".into()));
        }
        let parsed = c.parsed_policies()?;
        for (i, p) in parsed.iter().enumerate() {
            if parsed[..i].contains(p) {
                return Err(HarnessError::Config(format!("policy `{p}` listed twice")));
            }
        }
        if self.suite.path.is_none() {
            if !(2..=100).contains(&self.suite.dim) {
                return Err(HarnessError::Config(format!(
                    "suite.dim must be in 2..=100, got {}",
                    self.suite.dim
                )));
            }
            if self.suite.count == 0 {
                return Err(HarnessError::Config("suite.count must be >= 1".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.campaign.runs, 51);
        assert_eq!(cfg.campaign.budget_multiplier, 10_000);
    }

    #[test]
    fn full_file() {
        let cfg = Config::from_toml(
            r#"
            [suite]
            seed = 4
            dim = 5
            count = 3
            [campaign]
            policies = ["rcmaes-active", "ipop-standard"]
            budget_multiplier = 200
            runs = 3
            [output]
            dir = "out"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.suite.dim, 5);
        assert_eq!(cfg.campaign.parsed_policies().unwrap().len(), 2);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert_eq!(cfg.suite.problems().unwrap().len(), 3);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(Config::from_toml("[campaign]\nrun = 3\n"), Err(HarnessError::Config(_))));
        assert!(matches!(Config::from_toml("[extra]\n"), Err(HarnessError::Config(_))));
    }

    #[test]
    fn invariants() {
        assert!(Config::from_toml("[campaign]\nruns = 0\n").is_err());
        assert!(Config::from_toml("[campaign]\nbudget_multiplier = 99\n").is_err());
        assert!(Config::from_toml("[campaign]\npolicies = [\"cmaes\"]\n").is_err());
        assert!(Config::from_toml("[campaign]\npolicies = [\"rcmaes\", \"rcmaes-active\"]\n").is_err());
        assert!(Config::from_toml("[suite]\ndim = 1\n").is_err());
    }
}
