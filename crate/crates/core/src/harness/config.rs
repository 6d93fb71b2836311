use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{ExplorationSchedule, MinProb, UpdateTimes};
use crate::environments::EnvSpec;
use crate::error::{MebError, Result};

/// Which decision rule a run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Meb,
    MebNaive,
    RlsMeb {
        #[serde(default = "one")]
        lambda: f64,
    },
    Ts {
        #[serde(default = "one")]
        prior_var: f64,
        /// `ρ`; the environment's reward-noise variance when absent.
        reward_var: Option<f64>,
    },
    Ucb {
        #[serde(default = "one")]
        regularizer: f64,
        /// `C`; the environment's reward-noise variance when absent.
        bonus_scale: Option<f64>,
    },
    /// The clipped benchmark itself. Uses the true context, so it is only a
    /// reference line and never goes through the policy interface.
    ClippedOracle,
    /// The fixed two-action threshold policy on `x̃`.
    Threshold {
        #[serde(default)]
        threshold: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Meb => "meb",
            AlgorithmSpec::MebNaive => "meb-naive",
            AlgorithmSpec::RlsMeb { .. } => "rls-meb",
            AlgorithmSpec::Ts { .. } => "ts",
            AlgorithmSpec::Ucb { .. } => "ucb",
            AlgorithmSpec::ClippedOracle => "clipped-oracle",
            AlgorithmSpec::Threshold { .. } => "threshold",
        }
    }

    /// Preset by name, as used by `--algo`.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "meb" => AlgorithmSpec::Meb,
            "meb-naive" => AlgorithmSpec::MebNaive,
            "rls-meb" => AlgorithmSpec::RlsMeb { lambda: 1.0 },
            "ts" => AlgorithmSpec::Ts {
                prior_var: 1.0,
                reward_var: None,
            },
            "ucb" => AlgorithmSpec::Ucb {
                regularizer: 1.0,
                bonus_scale: None,
            },
            "clipped-oracle" => AlgorithmSpec::ClippedOracle,
            "threshold" => AlgorithmSpec::Threshold { threshold: 0.0 },
            other => return Err(MebError::ConfigInvalid(format!("unknown algorithm `{other}`"))),
        })
    }
}

/// Theory-default schedule family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// `T0 = ⌈2dT^(2/3)⌉`, `p0^(t) = min{1/K, t^(-1/3)}`.
    Standard,
    /// `T0 = ⌈2d√T⌉`, constant `p0`.
    Clipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateSpec {
    Every,
    Powers(usize),
    Multiples(usize),
    Explicit(Vec<usize>),
}

impl UpdateSpec {
    pub fn to_update_times(&self) -> UpdateTimes {
        match self {
            UpdateSpec::Every => UpdateTimes::Every,
            UpdateSpec::Powers(b) => UpdateTimes::Powers(*b),
            UpdateSpec::Multiples(p) => UpdateTimes::Multiples(*p),
            UpdateSpec::Explicit(v) => UpdateTimes::Explicit(v.iter().copied().collect::<BTreeSet<_>>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub setting: Setting,
    /// Overrides the setting's warm-up length.
    pub warmup: Option<usize>,
    /// Constant minimum selection probability (clipped setting).
    pub p0: f64,
    pub update: UpdateSpec,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            setting: Setting::Clipped,
            warmup: None,
            p0: 0.2,
            update: UpdateSpec::Every,
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self, dim: usize, horizon: usize) -> ExplorationSchedule {
        let mut s = match self.setting {
            Setting::Standard => ExplorationSchedule::standard(dim, horizon),
            Setting::Clipped => ExplorationSchedule::clipped(dim, horizon, self.p0),
        };
        if let Some(w) = self.warmup {
            s.warmup_len = w;
        }
        s.update_times = self.update.to_update_times();
        s
    }

    pub fn min_prob(&self) -> MinProb {
        match self.setting {
            Setting::Standard => MinProb::Decaying,
            Setting::Clipped => MinProb::Constant(self.p0),
        }
    }
}

/// One experiment: an environment, an algorithm, a schedule and the
/// replication plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Horizon `T`.
    pub t: usize,
    #[serde(default = "default_n_exp")]
    pub n_exp: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Multiplies every context the policy sees (and the error covariance by
    /// its square). Regret is unaffected.
    #[serde(default = "one")]
    pub context_scale: f64,
    /// When set, policies receive `estvar_feed` estimates of the error
    /// covariance with this decay scale instead of the true one.
    #[serde(default)]
    pub estvar_scale: Option<f64>,
    pub env: EnvSpec,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
}

fn default_n_exp() -> usize {
    20
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec, algorithm: AlgorithmSpec, t: usize) -> Self {
        Self {
            t,
            n_exp: default_n_exp(),
            base_seed: 0,
            context_scale: 1.0,
            estvar_scale: None,
            env,
            algorithm,
            schedule: ScheduleSpec::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| MebError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MebError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MebError::ConfigInvalid(m));
        if self.t == 0 {
            return bad("t must be >= 1".into());
        }
        if self.n_exp == 0 {
            return bad("n_exp must be >= 1".into());
        }
        if !(self.context_scale > 0.0 && self.context_scale.is_finite()) {
            return bad("context_scale must be positive".into());
        }
        if let Some(c) = self.estvar_scale {
            if !(c >= 0.0 && c.is_finite()) {
                return bad("estvar_scale must be >= 0".into());
            }
        }
        self.env.validate()?;
        let k = self.num_actions();
        if self.schedule.setting == Setting::Clipped {
            let p0 = self.schedule.p0;
            if !(p0 > 0.0 && p0 <= 1.0 / k as f64 + 1e-15) {
                return bad(format!("p0 = {p0} must lie in (0, 1/{k}]"));
            }
        }
        if self.schedule.update.to_update_times().is_empty() {
            return bad("update set is empty".into());
        }
        match (&self.algorithm, &self.env) {
            (AlgorithmSpec::Threshold { .. }, env) if self.num_actions() != 2 || self.dim() != 1 => {
                bad(format!("threshold policy needs a one-dimensional two-action environment, not {}", env.name()))
            }
            (AlgorithmSpec::Ts { prior_var, reward_var }, _) => {
                if !(*prior_var > 0.0) || reward_var.is_some_and(|r| !(r > 0.0)) {
                    return bad("ts variances must be > 0".into());
                }
                Ok(())
            }
            (AlgorithmSpec::Ucb { regularizer, bonus_scale }, _) => {
                if !(*regularizer > 0.0) || bonus_scale.is_some_and(|c| !(c >= 0.0)) {
                    return bad("ucb needs l > 0 and C >= 0".into());
                }
                Ok(())
            }
            (AlgorithmSpec::RlsMeb { lambda }, _) if !(*lambda > 0.0) => bad("rls lambda must be > 0".into()),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.env {
            EnvSpec::Synthetic(c) => c.dim(),
            EnvSpec::Heartsteps(c) => c.dim(),
            EnvSpec::NaiveFailure { .. } | EnvSpec::SignFlip => 1,
            EnvSpec::RlsFailure { .. } => 2,
        }
    }

    pub fn num_actions(&self) -> usize {
        match &self.env {
            EnvSpec::Synthetic(c) => c.thetas.len(),
            _ => 2,
        }
    }

    pub fn exploration_schedule(&self) -> ExplorationSchedule {
        self.schedule.build(self.dim(), self.t)
    }

    /// Seeds of the replications, `base_seed + i`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_exp as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
t = 1000
n_exp = 3
base_seed = 7

[env]
kind = "synthetic"
sigma_e_sq = 1.0
sigma_eta_sq = 0.5

[algorithm]
kind = "ucb"

[schedule]
setting = "clipped"
p0 = 0.1
warmup = 50
update = { powers = 2 }
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.t, 1000);
        assert_eq!(c.seeds(), vec![7, 8, 9]);
        assert_eq!(c.schedule.update, UpdateSpec::Powers(2));
        assert_eq!(c.exploration_schedule().warmup_len, 50);
        match &c.env {
            EnvSpec::Synthetic(s) => {
                assert_eq!(s.sigma_e_sq, 1.0);
                assert_eq!(s.thetas.len(), 2);
            }
            _ => panic!("wrong env"),
        }
    }

    #[test]
    fn toml_round_trip_keeps_hash() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [("p0 = 0.1", "p0 = 0.7"), ("n_exp = 3", "n_exp = 0"), ("t = 1000", "t = 0")] {
            let text = SAMPLE.replace(from, to);
            assert!(matches!(
                ExperimentConfig::from_toml_str(&text),
                Err(MebError::ConfigInvalid(_))
            ));
        }
        assert!(ExperimentConfig::from_toml_str("t = 5\nbogus = 1").is_err());
    }
}
