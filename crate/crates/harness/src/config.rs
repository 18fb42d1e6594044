//! TOML experiment configuration.
//!
//! ```toml
//! agent = "pzrl_mf"          # pzrl_mf | pzrl_mb | policy_ucb
//! horizon = 200000
//! delta = 0.1
//! seeds = [0, 1, 2]
//! epsilon = 0.3              # net spacing of policy_ucb
//!
//! [env]
//! name = "riverswim"         # riverswim | scheduling | two_arm_chain
//! params = { noise_var = 0.5 }
//!
//! [family]
//! name = "riverswim_affine"
//! metric = "param"           # param | sup_grid
//! metric_resolution = 0.01
//! # params = [[-1.0, 1.0], [-0.5, 0.5]]
//!
//! [constants]                # every key optional
//! c_f = 1.0
//! c_b = 1.0
//!
//! [oracle]
//! resolution = 0.05
//! rollout = 20000
//! replications = 4
//! seed = 20240501
//!
//! [output]
//! dir = "out"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use policy_zoom_core::agent::{AgentKind, AgentOptions};
use policy_zoom_core::env::{make_env, EnvModel, EnvSpec};
use policy_zoom_core::math::{BoxBounds, Interval};
use policy_zoom_core::policy::{FamilyKind, MetricSpec, PolicyFamily};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent: String,
    pub horizon: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub env: EnvSection,
    pub family: FamilySection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub oracle: OracleBudget,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_delta() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub name: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default = "default_metric_resolution")]
    pub metric_resolution: f64,
    /// Replacement parameter box, one `[lo, hi]` per coordinate.
    #[serde(default)]
    pub params: Option<Vec<[f64; 2]>>,
}

fn default_metric() -> String {
    "param".into()
}

fn default_metric_resolution() -> f64 {
    0.01
}

/// Overrides of the problem and tuning constants. Unset keys keep the
/// environment's and agent's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub c_f: Option<f64>,
    pub c_b: Option<f64>,
    pub c_p: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_prime: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "L_r")]
    pub lip_reward: Option<f64>,
    #[serde(rename = "L_p")]
    pub lip_kernel: Option<f64>,
}

/// Grid spacing in parameter space, rollout length and replications of the
/// optimal-gain oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBudget {
    pub resolution: f64,
    pub rollout: u64,
    pub replications: u32,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            rollout: 20_000,
            replications: 4,
            seed: 20_240_501,
        }
    }
}

impl OracleBudget {
    /// Parses `resolution,rollout,replications`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || HarnessError::Usage(format!("budget must be `resolution,rollout,replications`, got `{text}`"));
        let [res, rollout, reps] = parts.as_slice() else {
            return Err(bad());
        };
        let budget = Self {
            resolution: res.parse().map_err(|_| bad())?,
            rollout: rollout.parse().map_err(|_| bad())?,
            replications: reps.parse().map_err(|_| bad())?,
            seed,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) || self.rollout == 0 || self.replications == 0 {
            return Err(HarnessError::Config(format!("invalid oracle budget {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Oracle cache directory; `POLICY_ZOOM_CACHE` takes precedence.
    pub cache_dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            cache_dir: ".policy-zoom-cache".into(),
        }
    }
}

/// Everything a run needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub env_spec: EnvSpec,
    pub env: EnvModel,
    pub family: PolicyFamily,
    pub options: AgentOptions,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Minimal config for programmatic use.
    pub fn new(agent: AgentKind, env: &str, family: FamilyKind, horizon: u64) -> Self {
        Self {
            agent: agent.name().into(),
            horizon,
            delta: default_delta(),
            seeds: default_seeds(),
            epsilon: default_epsilon(),
            env: EnvSection {
                name: env.into(),
                params: BTreeMap::new(),
            },
            family: FamilySection {
                name: family.name().into(),
                metric: default_metric(),
                metric_resolution: default_metric_resolution(),
                params: None,
            },
            constants: ConstantsSection::default(),
            oracle: OracleBudget::default(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(HarnessError::Config("horizon must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must not be empty".into()));
        }
        self.oracle.validate()?;
        self.setup().map(|_| ())
    }

    pub fn agent_kind(&self) -> Result<AgentKind> {
        Ok(AgentKind::parse(&self.agent)?)
    }

    /// Environment name and parameters, with constant overrides folded in.
    pub fn env_spec(&self) -> EnvSpec {
        let mut spec = EnvSpec::new(self.env.name.clone());
        spec.params = self.env.params.clone();
        let c = &self.constants;
        for (key, value) in [
            ("C", c.c),
            ("alpha", c.alpha),
            ("L_r", c.lip_reward),
            ("L_p", c.lip_kernel),
        ] {
            if let Some(v) = value {
                spec.params.insert(key.into(), v);
            }
        }
        spec
    }

    pub fn metric(&self) -> Result<MetricSpec> {
        let metric = match self.family.metric.as_str() {
            "param" => MetricSpec {
                resolution: self.family.metric_resolution,
                ..MetricSpec::default()
            },
            "sup_grid" => MetricSpec::sup_grid(self.family.metric_resolution),
            other => return Err(HarnessError::Config(format!("unknown metric `{other}`"))),
        };
        metric.validate()?;
        Ok(metric)
    }

    pub fn setup(&self) -> Result<Setup> {
        let env_spec = self.env_spec();
        let env = make_env(&env_spec)?;
        let mut family = PolicyFamily::new(FamilyKind::parse(&self.family.name)?, &env)?;
        if let Some(sides) = &self.family.params {
            if sides.iter().any(|[lo, hi]| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
                return Err(HarnessError::Config(format!("invalid parameter box {sides:?}")));
            }
            family = family.with_params(BoxBounds::new(sides.iter().map(|&[lo, hi]| Interval::new(lo, hi)).collect()))?;
        }
        let mut options = AgentOptions::new(self.agent_kind()?, self.horizon, self.delta);
        options.epsilon = self.epsilon;
        options.metric = self.metric()?;
        let c = &self.constants;
        options.c_f = c.c_f.unwrap_or(options.c_f);
        options.c_b = c.c_b.unwrap_or(options.c_b);
        options.c_p = c.c_p.unwrap_or(options.c_p);
        options.kappa = c.kappa.unwrap_or(options.kappa);
        options.kappa_prime = c.kappa_prime.unwrap_or(options.kappa_prime);
        Ok(Setup {
            env_spec,
            env,
            family,
            options,
        })
    }

    /// Oracle cache directory, honoring `POLICY_ZOOM_CACHE`.
    pub fn cache_dir(&self) -> PathBuf {
        std::env::var_os("POLICY_ZOOM_CACHE").map_or_else(|| self.output.cache_dir.clone(), PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
agent = "pzrl_mb"
horizon = 5000
seeds = [3, 4]

[env]
name = "riverswim"
params = { noise_var = 0.25 }

[family]
name = "riverswim_const"

[constants]
c_b = 2.0
C = 2.0
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.delta, 0.1);
        assert_eq!(cfg.seeds, vec![3, 4]);
        let s = cfg.setup().unwrap();
        assert_eq!(s.options.kind, AgentKind::ModelBased);
        assert_eq!(s.options.c_b, 2.0);
        assert_eq!(s.env.ergodicity_c, 2.0);
        assert_eq!(s.env_spec.params["noise_var"], 0.25);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            SAMPLE.replace("horizon = 5000", "horizon = 0"),
            SAMPLE.replace("seeds = [3, 4]", "seeds = []"),
            SAMPLE.replace("seeds = [3, 4]", "delta = 1.0"),
            SAMPLE.replace("pzrl_mb", "ucrl"),
            SAMPLE.replace("noise_var", "noise"),
            SAMPLE.replace("c_b = 2.0", "c_z = 2.0"),
            SAMPLE.replace("riverswim_const", "scheduling_threshold"),
        ] {
            assert!(ExperimentConfig::from_toml(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn budget_parsing() {
        let b = OracleBudget::parse("0.1, 5000,3", 7).unwrap();
        assert_eq!((b.resolution, b.rollout, b.replications, b.seed), (0.1, 5000, 3, 7));
        assert!(OracleBudget::parse("0.1,5000", 7).is_err());
        assert!(OracleBudget::parse("0,5000,3", 7).is_err());
    }
}
