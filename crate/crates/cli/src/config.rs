//! TOML run configuration. Every key except `seed` is optional and falls
//! back to the library defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use edpcgrl_core::agents::{AgentKind, EmptyCandidatePolicy};
use edpcgrl_core::session::{SearchExperimentConfig, SessionProtocol};
use edpcgrl_core::state_space::{SpiderAttributes, ATTRIBUTE_COLUMNS};
use edpcgrl_core::subjects::SubjectPopulationConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::UsageError;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "EDPCGRL_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    n_subjects: Option<usize>,
    noise_sigma: Option<f64>,
    habituation: Option<f64>,
    #[serde(default)]
    impact: BTreeMap<String, RawImpact>,
    #[serde(default)]
    agent: RawAgent,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    protocol: RawProtocol,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpact {
    mean: Option<f64>,
    std: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    epsilon: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    empty_policy: Option<EmptyCandidatePolicy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    budget: Option<usize>,
    repetitions: Option<usize>,
    agents: Option<Vec<String>>,
    initial_states: Option<Vec<[u8; 6]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    relax_s: Option<f64>,
    anxious_s: Option<f64>,
    adapt_interval_s: Option<f64>,
    targets: Option<[u8; 2]>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub population: SubjectPopulationConfig,
    pub search: SearchExperimentConfig,
    pub protocol: SessionProtocol,
    /// Hex SHA-256 of the config file bytes.
    pub config_sha256: String,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Seed from the environment override, if set.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| usage(format!("config {} is not UTF-8", path.display())))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        cfg.config_sha256 = hex::encode(Sha256::digest(&bytes));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))?;
        let seed = match seed_override()? {
            Some(s) => s,
            None => raw
                .seed
                .ok_or_else(|| usage("missing required key `seed`"))?,
        };

        let mut population = SubjectPopulationConfig {
            master_seed: seed,
            habituation: raw.habituation,
            ..SubjectPopulationConfig::default()
        };
        if let Some(n) = raw.n_subjects {
            population.n_subjects = n;
        }
        if let Some(s) = raw.noise_sigma {
            population.noise_sigma = s;
        }
        for (name, imp) in &raw.impact {
            let idx = ATTRIBUTE_COLUMNS
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| {
                    usage(format!(
                        "unknown attribute `impact.{name}`; expected one of {}",
                        ATTRIBUTE_COLUMNS.join(", ")
                    ))
                })?;
            if let Some(m) = imp.mean {
                population.impact[idx].mean = m;
            }
            if let Some(s) = imp.std {
                population.impact[idx].std = s;
            }
        }
        population.validate().map_err(|e| usage(e.to_string()))?;
        if population.n_subjects == 0 {
            return Err(usage("`n_subjects` must be at least 1"));
        }

        let mut search = SearchExperimentConfig {
            master_seed: seed,
            ..SearchExperimentConfig::default()
        };
        let mut protocol = SessionProtocol::default();
        let a = &raw.agent;
        for agent in [&mut search.agent, &mut protocol.rl] {
            agent.seed = seed;
            if let Some(v) = a.epsilon {
                agent.epsilon = v;
            }
            if let Some(v) = a.alpha {
                agent.alpha = v;
            }
            if let Some(v) = a.gamma {
                agent.gamma = v;
            }
        }
        if let Some(p) = a.empty_policy {
            search.empty_policy = p;
            protocol.empty_policy = p;
        }

        let e = &raw.experiment;
        if let Some(b) = e.budget {
            search.budget = b;
        }
        if let Some(r) = e.repetitions {
            search.repetitions = r;
        }
        if let Some(labels) = &e.agents {
            search.agents = labels
                .iter()
                .map(|l| {
                    AgentKind::from_label(l).ok_or_else(|| {
                        usage(format!(
                            "unknown agent `{l}` in experiment.agents; expected rl_zero, rl_random, rules or random_walk"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
        }
        if let Some(states) = &e.initial_states {
            search.initial_states = states
                .iter()
                .map(|v| SpiderAttributes::new(*v).map_err(|err| usage(err.to_string())))
                .collect::<Result<_>>()?;
        }
        search.validate().map_err(|err| usage(err.to_string()))?;

        let p = &raw.protocol;
        if let Some(v) = p.relax_s {
            protocol.relax_s = v;
        }
        if let Some(v) = p.anxious_s {
            protocol.anxious_s = v;
        }
        if let Some(v) = p.adapt_interval_s {
            protocol.adapt_interval_s = v;
        }
        if let Some(v) = p.targets {
            protocol.targets = v;
        }
        protocol.validate().map_err(|err| usage(err.to_string()))?;

        Ok(Self {
            seed,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            population,
            search,
            protocol,
            config_sha256: String::new(),
        })
    }
}
