//! Run configuration: strict JSON in, validated runs out.
//!
//! Parsing is strict (`deny_unknown_fields` everywhere): a typo in a
//! schedule override must fail loudly instead of silently running the
//! default schedule.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rcb_core::environments::EnvSpec;

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    OcpEuclidean,
    OcpEntropy,
    Exp4r,
    Exp4pr,
}

impl Algorithm {
    pub fn is_bandit(self) -> bool {
        matches!(self, Algorithm::Exp4r | Algorithm::Exp4pr)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OcpEuclidean => "ocp-euclidean",
            Algorithm::OcpEntropy => "ocp-entropy",
            Algorithm::Exp4r => "exp4r",
            Algorithm::Exp4pr => "exp4pr",
        }
    }
}

/// Explicit schedule values taking precedence over the horizon-tuned ones.
/// `kappa`, `epsilon`, and `nu` only make sense for the high-probability
/// algorithm and are rejected elsewhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverrides {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub nu: Option<f64>,
}

impl ScheduleOverrides {
    pub fn is_empty(&self) -> bool {
        self.mu.is_none()
            && self.delta.is_none()
            && self.kappa.is_none()
            && self.epsilon.is_none()
            && self.nu.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub environment: EnvSpec,
    /// Overrides the environment's horizon when set.
    #[serde(default)]
    pub horizon: Option<u64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub overrides: ScheduleOverrides,
    /// Output directory for trace CSVs and their sidecars.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Effective horizon: the CLI/config override, else the environment's.
    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(self.environment.horizon)
    }

    /// The environment with the effective horizon substituted in.
    pub fn effective_environment(&self) -> EnvSpec {
        let mut env = self.environment.clone();
        env.horizon = self.horizon();
        env
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.seeds.is_empty() {
            return Err(RunError::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(RunError::Config("duplicate seeds in config".into()));
        }
        // A zero-length run is legal (empty trace, zero metrics); validate
        // the environment machinery at horizon 1 in that case.
        let mut env = self.effective_environment();
        env.horizon = env.horizon.max(1);
        env.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if !self.algorithm.is_bandit() || self.algorithm == Algorithm::Exp4r {
            for (name, v) in [
                ("kappa", self.overrides.kappa),
                ("epsilon", self.overrides.epsilon),
                ("nu", self.overrides.nu),
            ] {
                if v.is_some() {
                    return Err(RunError::Config(format!(
                        "override `{name}` only applies to {}",
                        Algorithm::Exp4pr.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Compatibility fingerprint: everything that defines the experiment
    /// except horizon, seeds, and output location, so multi-horizon rate
    /// sweeps of one experiment share a digest.
    pub fn digest(&self) -> String {
        let mut masked = self.clone();
        masked.horizon = None;
        masked.environment.horizon = 0;
        masked.seeds = Vec::new();
        masked.out = None;
        let canonical = serde_json::to_string(&masked).expect("config serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_config() -> String {
        r#"{
            "algorithm": "exp4r",
            "environment": {
                "kind": {"drift": {"period": 5, "hot_risk": 0.9, "cold_risk": 0.3}},
                "horizon": 100,
                "arms": 2,
                "beta": 0.6,
                "policies": {"explicit": ["uniform", {"arm": {"index": 0}}]}
            },
            "seeds": [1, 2]
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_validates_a_minimal_config() {
        let cfg = RunConfig::from_json_str(&minimal_config()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon(), 100);
        assert_eq!(cfg.algorithm, Algorithm::Exp4r);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal_config().replace("\"seeds\"", "\"sseds\"");
        assert!(RunConfig::from_json_str(&text).is_err());
        let text = minimal_config().replace(
            "\"seeds\": [1, 2]",
            "\"seeds\": [1, 2], \"overides\": {}",
        );
        assert!(RunConfig::from_json_str(&text).is_err());
    }

    #[test]
    fn misplaced_overrides_are_rejected() {
        let mut cfg = RunConfig::from_json_str(&minimal_config()).unwrap();
        cfg.overrides.kappa = Some(0.1);
        assert!(matches!(cfg.validate(), Err(RunError::Config(_))));
        cfg.overrides.kappa = None;
        cfg.overrides.mu = Some(0.01);
        cfg.validate().unwrap();
    }

    #[test]
    fn empty_or_duplicate_seeds_are_rejected() {
        let mut cfg = RunConfig::from_json_str(&minimal_config()).unwrap();
        cfg.seeds = vec![];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![3, 3];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn digest_ignores_horizon_and_seeds_but_not_the_experiment() {
        let a = RunConfig::from_json_str(&minimal_config()).unwrap();
        let mut b = a.clone();
        b.horizon = Some(100_000);
        b.seeds = vec![7, 8, 9];
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.environment.beta = 0.7;
        assert_ne!(a.digest(), c.digest());
        let mut d = a.clone();
        d.overrides.mu = Some(0.5);
        assert_ne!(a.digest(), d.digest());
    }
}
