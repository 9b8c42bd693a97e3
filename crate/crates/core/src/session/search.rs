//! Search experiment: how many new spiders an agent needs before one lands
//! in a target stress category.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{step, Agent, AgentConfig, AgentKind, EmptyCandidatePolicy};
use crate::error::{Error, Result};
use crate::reward::RewardSpec;
use crate::rng::{derive_seed, stream};
use crate::state_space::{encode, SpiderAttributes};
use crate::subjects::VirtualSubject;

/// Minimum accuracy for the spiders-presented figure to be reported.
pub const REPORT_ACCURACY: f64 = 0.75;

/// Closed anxiety interval `[low, high]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressCategory {
    pub name: String,
    pub low: u8,
    pub high: u8,
}

impl StressCategory {
    pub fn new(name: &str, low: u8, high: u8) -> Result<Self> {
        if low > high || high > 10 {
            return Err(Error::Config(format!(
                "category {name} bounds [{low}, {high}] invalid"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            low,
            high,
        })
    }

    pub fn contains(&self, anxiety: u8) -> bool {
        (self.low..=self.high).contains(&anxiety)
    }

    /// Integer midpoint used as the reward target.
    pub fn target(&self) -> u8 {
        (self.low + self.high) / 2
    }

    pub fn defaults() -> Vec<StressCategory> {
        vec![
            StressCategory::new("low", 1, 3).expect("valid"),
            StressCategory::new("moderate", 4, 6).expect("valid"),
            StressCategory::new("high", 7, 9).expect("valid"),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchExperimentConfig {
    pub categories: Vec<StressCategory>,
    pub initial_states: Vec<SpiderAttributes>,
    pub budget: usize,
    pub repetitions: usize,
    pub agents: Vec<AgentKind>,
    pub agent: AgentConfig,
    pub empty_policy: EmptyCandidatePolicy,
    pub master_seed: u64,
}

impl Default for SearchExperimentConfig {
    fn default() -> Self {
        Self {
            categories: StressCategory::defaults(),
            initial_states: vec![
                SpiderAttributes::MIN,
                SpiderAttributes::MID,
                SpiderAttributes::MAX,
            ],
            budget: 30,
            repetitions: 10,
            agents: AgentKind::ALL.to_vec(),
            agent: AgentConfig::default(),
            empty_policy: EmptyCandidatePolicy::Hold,
            master_seed: 2024,
        }
    }
}

impl SearchExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        for c in &self.categories {
            StressCategory::new(&c.name, c.low, c.high)?;
        }
        if self.categories.is_empty() || self.initial_states.is_empty() || self.agents.is_empty() {
            return Err(Error::Config(
                "search needs at least one category, initial state and agent".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one attempt: `Some(n)` when the n-th new spider hit the category.
pub type AttemptOutcome = Option<usize>;

/// Runs a single attempt with a fresh agent.
pub fn run_attempt(
    agent: &mut Agent,
    subject: &VirtualSubject,
    noise_path: &[u64],
    category: &StressCategory,
    initial: SpiderAttributes,
    budget: usize,
) -> AttemptOutcome {
    let target = RewardSpec::new(category.target()).expect("category validated");
    let mut responses = subject.start_stream(noise_path);
    let mut state = initial;
    let mut observed = responses.evaluate(&state);
    for presented in 1..=budget {
        let action = agent.decide(&state, observed, target);
        let next = step(&state, action).expect("agents only emit valid actions");
        let anxiety = responses.evaluate(&next);
        agent.observe(&state, action, &next, anxiety, target);
        state = next;
        observed = anxiety;
        if category.contains(anxiety.value()) {
            return Some(presented);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub agent: AgentKind,
    pub category: String,
    pub initial_state: SpiderAttributes,
    pub attempts: usize,
    pub successes: usize,
    /// Fraction of successful attempts.
    pub accuracy: f64,
    /// Mean new spiders over successful attempts; `None` unless reported.
    pub spiders_presented: Option<f64>,
    pub reported: bool,
}

impl SearchResult {
    pub fn from_outcomes(
        agent: AgentKind,
        category: &str,
        initial_state: SpiderAttributes,
        outcomes: &[AttemptOutcome],
    ) -> Self {
        let attempts = outcomes.len();
        let hits: Vec<usize> = outcomes.iter().flatten().copied().collect();
        let successes = hits.len();
        let accuracy = if attempts == 0 {
            0.0
        } else {
            successes as f64 / attempts as f64
        };
        let reported = attempts > 0 && accuracy >= REPORT_ACCURACY;
        let spiders_presented =
            reported.then(|| hits.iter().sum::<usize>() as f64 / successes as f64);
        Self {
            agent,
            category: category.to_string(),
            initial_state,
            attempts,
            successes,
            accuracy,
            spiders_presented,
            reported,
        }
    }
}

fn agent_seed(master: u64, kind: AgentKind, cell: [u64; 4]) -> u64 {
    derive_seed(
        master,
        &[
            stream::AGENT,
            kind as u64,
            cell[0],
            cell[1],
            cell[2],
            cell[3],
        ],
    )
}

/// Runs every agent × category × initial state cell over the population.
///
/// Each attempt gets a fresh agent (Q-table included) seeded from
/// `(master_seed, agent, category, initial, subject, repetition)`, and a
/// subject noise stream keyed by `(category, initial, repetition)`.
pub fn run_search(
    cfg: &SearchExperimentConfig,
    population: &[VirtualSubject],
) -> Result<Vec<SearchResult>> {
    cfg.validate()?;
    if population.is_empty() {
        return Err(Error::Config("search needs a non-empty population".into()));
    }
    let mut results = Vec::new();
    for &kind in &cfg.agents {
        for (ci, category) in cfg.categories.iter().enumerate() {
            for initial in &cfg.initial_states {
                let ii = encode(initial) as u64;
                let per_subject: Vec<Vec<AttemptOutcome>> = population
                    .par_iter()
                    .map(|subject| {
                        (0..cfg.repetitions)
                            .map(|rep| {
                                let cell = [ci as u64, ii, subject.id as u64, rep as u64];
                                let mut agent = Agent::new(
                                    kind,
                                    cfg.agent,
                                    cfg.empty_policy,
                                    agent_seed(cfg.master_seed, kind, cell),
                                );
                                run_attempt(
                                    &mut agent,
                                    subject,
                                    &[ci as u64, ii, rep as u64],
                                    category,
                                    *initial,
                                    cfg.budget,
                                )
                            })
                            .collect()
                    })
                    .collect();
                let outcomes: Vec<AttemptOutcome> = per_subject.into_iter().flatten().collect();
                results.push(SearchResult::from_outcomes(
                    kind,
                    &category.name,
                    *initial,
                    &outcomes,
                ));
            }
        }
    }
    Ok(results)
}

/// Mean spiders presented per category, keyed by (agent, category), over
/// the reported cells only.
pub fn reported_means(results: &[SearchResult]) -> BTreeMap<(AgentKind, String), Vec<f64>> {
    let mut out: BTreeMap<(AgentKind, String), Vec<f64>> = BTreeMap::new();
    for r in results {
        if let Some(v) = r.spiders_presented {
            out.entry((r.agent, r.category.clone()))
                .or_default()
                .push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subject(weights: [f64; 6]) -> VirtualSubject {
        VirtualSubject::new(0, weights, 0.0, 1).unwrap()
    }

    #[test]
    fn greedy_zero_table_reaches_low_in_one_step() {
        // locomotion carries the most weight: one increment gives 10*3/10 = 3
        let s = subject([3.0, 1.0, 0.5, 0.5, 0.0, 0.0]);
        let cfg = SearchExperimentConfig {
            initial_states: vec![SpiderAttributes::MIN],
            categories: vec![StressCategory::new("low", 1, 3).unwrap()],
            agents: vec![AgentKind::RlZero],
            agent: AgentConfig {
                epsilon: 0.0,
                ..AgentConfig::default()
            },
            repetitions: 3,
            ..SearchExperimentConfig::default()
        };
        let res = run_search(&cfg, &[s]).unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].accuracy, 1.0);
        assert_eq!(res[0].spiders_presented, Some(1.0));
        assert!(res[0].reported);
    }

    #[test]
    fn zero_budget_never_succeeds() {
        let cfg = SearchExperimentConfig {
            budget: 0,
            repetitions: 2,
            ..SearchExperimentConfig::default()
        };
        let res = run_search(&cfg, &[subject([1.0; 6])]).unwrap();
        assert!(res
            .iter()
            .all(|r| r.accuracy == 0.0 && !r.reported && r.spiders_presented.is_none()));
        assert_eq!(res.len(), 4 * 3 * 3);
    }

    #[test]
    fn empty_population_is_config_error() {
        let err = run_search(&SearchExperimentConfig::default(), &[]);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn replays_identically() {
        let cfg = SearchExperimentConfig {
            repetitions: 2,
            ..SearchExperimentConfig::default()
        };
        let pop = vec![
            VirtualSubject::new(0, [1.0, 0.8, 1.2, 1.0, 0.3, 0.6], 0.5, 5).unwrap(),
            VirtualSubject::new(1, [0.4, 1.5, 0.9, 1.1, 0.5, 0.2], 0.5, 6).unwrap(),
        ];
        assert_eq!(
            run_search(&cfg, &pop).unwrap(),
            run_search(&cfg, &pop).unwrap()
        );
    }

    #[test]
    fn low_accuracy_is_not_reported() {
        let outcomes = [Some(3), None, None, Some(5)];
        let r = SearchResult::from_outcomes(
            AgentKind::RandomWalk,
            "x",
            SpiderAttributes::MIN,
            &outcomes,
        );
        assert_eq!(r.accuracy, 0.5);
        assert!(!r.reported);
        assert_eq!(r.spiders_presented, None);
        let outcomes = [Some(3), Some(1), None, Some(5)];
        let r = SearchResult::from_outcomes(
            AgentKind::RandomWalk,
            "x",
            SpiderAttributes::MIN,
            &outcomes,
        );
        assert!(r.reported);
        assert_eq!(r.spiders_presented, Some(3.0));
    }

    #[test]
    fn category_targets() {
        let c = StressCategory::defaults();
        assert_eq!(
            c.iter().map(|c| c.target()).collect::<Vec<_>>(),
            vec![2, 5, 8]
        );
        assert!(c[0].contains(1) && c[0].contains(3) && !c[0].contains(4));
        assert!(StressCategory::new("bad", 5, 3).is_err());
    }
}
