//! The two-block session protocol: relax, adaptive block, relax, adaptive
//! block with the other agent. Time is logical; the adaptation interval
//! only sets trace timestamps.

use serde::{Deserialize, Serialize};

use super::trace::{Phase, SessionAgent, SessionTrace, StepAction, TraceRow};
use crate::agents::{step, Agent, AgentConfig, AgentKind, EmptyCandidatePolicy, QTable};
use crate::error::{Error, Result};
use crate::reward::{reward, RewardSpec};
use crate::rng::{derive_seed, stream};
use crate::state_space::SpiderAttributes;
use crate::subjects::{SubjectState, VirtualSubject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentOrder {
    RlFirst,
    RulesFirst,
}

impl AgentOrder {
    /// Alternating assignment: even subject indices see the RL block first.
    pub fn for_subject(index: usize) -> Self {
        if index.is_multiple_of(2) {
            AgentOrder::RlFirst
        } else {
            AgentOrder::RulesFirst
        }
    }

    pub fn agents(self) -> [SessionAgent; 2] {
        match self {
            AgentOrder::RlFirst => [SessionAgent::Rl, SessionAgent::Rules],
            AgentOrder::RulesFirst => [SessionAgent::Rules, SessionAgent::Rl],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionProtocol {
    pub relax_s: f64,
    pub anxious_s: f64,
    pub adapt_interval_s: f64,
    /// Desired anxiety for the low and high segments, in that order.
    pub targets: [u8; 2],
    /// High segment first, starting from the all-maximum spider.
    pub reversed_targets: bool,
    pub rl: AgentConfig,
    pub empty_policy: EmptyCandidatePolicy,
}

impl Default for SessionProtocol {
    fn default() -> Self {
        Self {
            relax_s: 120.0,
            anxious_s: 280.0,
            adapt_interval_s: 20.0,
            targets: [3, 7],
            reversed_targets: false,
            rl: AgentConfig::default(),
            empty_policy: EmptyCandidatePolicy::Hold,
        }
    }
}

impl SessionProtocol {
    pub fn reversed() -> Self {
        Self {
            reversed_targets: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rl.validate()?;
        if !(self.relax_s >= 0.0 && self.anxious_s > 0.0 && self.adapt_interval_s > 0.0) {
            return Err(Error::Config("protocol durations must be positive".into()));
        }
        let windows = self.anxious_s / self.adapt_interval_s;
        if windows.fract() != 0.0 || !(windows as usize).is_multiple_of(2) {
            return Err(Error::Config(format!(
                "anxious block of {} s must split into an even number of {} s windows",
                self.anxious_s, self.adapt_interval_s
            )));
        }
        for t in self.targets {
            RewardSpec::new(t)?;
        }
        Ok(())
    }

    /// Adaptation windows per segment (7 with the defaults).
    pub fn steps_per_segment(&self) -> usize {
        (self.anxious_s / self.adapt_interval_s) as usize / 2
    }

    /// `(phase, target)` for the first and second segment of a block.
    pub fn segments(&self) -> [(Phase, u8); 2] {
        let low = (Phase::LowAnxiety, self.targets[0]);
        let high = (Phase::HighAnxiety, self.targets[1]);
        if self.reversed_targets {
            [high, low]
        } else {
            [low, high]
        }
    }

    pub fn initial_spider(&self) -> SpiderAttributes {
        if self.reversed_targets {
            SpiderAttributes::MAX
        } else {
            SpiderAttributes::MIN
        }
    }
}

/// One adaptive block. Window `j` shows `state_j`; at its end the anxiety is
/// read, the agent learns from the transition that produced `state_j`, and
/// (except after the last window) decides the next spider.
fn run_block(
    protocol: &SessionProtocol,
    agent_label: SessionAgent,
    agent: &mut Agent,
    responses: &mut SubjectState<'_>,
    t0: f64,
    rows: &mut Vec<TraceRow>,
) {
    let per_segment = protocol.steps_per_segment();
    let segments = protocol.segments();
    let segment_of = |j: usize| segments[(j / per_segment).min(1)];
    let windows = 2 * per_segment;

    let mut state = protocol.initial_spider();
    let mut previous: Option<(
        SpiderAttributes,
        Option<crate::state_space::AttributeAction>,
    )> = None;
    for j in 0..windows {
        let (phase, target) = segment_of(j);
        let spec = RewardSpec::new(target).expect("validated");
        let anxiety = responses.evaluate(&state);
        let r = match previous {
            Some((prev, action)) => agent.observe(&prev, action, &state, anxiety, spec),
            None => reward(anxiety, spec),
        };
        let decision = if j + 1 < windows {
            let next_target = RewardSpec::new(segment_of(j + 1).1).expect("validated");
            let a = agent.decide(&state, anxiety, next_target);
            Some(a)
        } else {
            None
        };
        rows.push(TraceRow {
            t_s: t0 + j as f64 * protocol.adapt_interval_s,
            phase,
            agent: Some(agent_label),
            state: Some(state),
            anxiety: Some(anxiety.value()),
            reward: Some(r),
            action: match decision {
                None => StepAction::None,
                Some(None) => StepAction::Hold,
                Some(Some(a)) => StepAction::Step(a),
            },
        });
        if let Some(a) = decision {
            let next = step(&state, a).expect("agents only emit valid actions");
            previous = Some((state, a));
            state = next;
        }
    }
}

fn relax_row(t_s: f64) -> TraceRow {
    TraceRow {
        t_s,
        phase: Phase::Relax,
        agent: None,
        state: None,
        anxiety: None,
        reward: None,
        action: StepAction::None,
    }
}

/// A session trace together with the RL agent's final Q-table.
#[derive(Clone, Debug)]
pub struct SessionRun {
    pub trace: SessionTrace,
    pub q_table: QTable,
}

/// Runs a full session for one subject. The RL agent starts from a zero
/// Q-table that persists across both of its segments.
pub fn run_session(
    protocol: &SessionProtocol,
    subject: &VirtualSubject,
    order: AgentOrder,
    master_seed: u64,
) -> Result<SessionTrace> {
    run_session_detailed(protocol, subject, order, master_seed).map(|r| r.trace)
}

pub fn run_session_detailed(
    protocol: &SessionProtocol,
    subject: &VirtualSubject,
    order: AgentOrder,
    master_seed: u64,
) -> Result<SessionRun> {
    protocol.validate()?;
    let mut responses = subject.start_stream(&[stream::SESSION]);
    let mut rows = Vec::new();
    let mut q_table = None;
    let mut t = 0.0;
    for label in order.agents() {
        rows.push(relax_row(t));
        t += protocol.relax_s;
        let kind = match label {
            SessionAgent::Rl => AgentKind::RlZero,
            SessionAgent::Rules => AgentKind::RulesBased,
        };
        let seed = derive_seed(
            master_seed,
            &[stream::SESSION, subject.id as u64, kind as u64],
        );
        let mut agent = Agent::new(kind, protocol.rl, protocol.empty_policy, seed);
        run_block(protocol, label, &mut agent, &mut responses, t, &mut rows);
        if let Agent::QLearning { table, .. } = agent {
            q_table = Some(table);
        }
        t += protocol.anxious_s;
    }
    Ok(SessionRun {
        trace: SessionTrace {
            subject_id: subject.id,
            order,
            rows,
        },
        q_table: q_table.expect("every session has an RL block"),
    })
}

/// Sessions for a whole population with alternating agent order.
pub fn run_sessions(
    protocol: &SessionProtocol,
    population: &[VirtualSubject],
    master_seed: u64,
) -> Result<Vec<SessionTrace>> {
    Ok(run_sessions_detailed(protocol, population, master_seed)?
        .into_iter()
        .map(|r| r.trace)
        .collect())
}

pub fn run_sessions_detailed(
    protocol: &SessionProtocol,
    population: &[VirtualSubject],
    master_seed: u64,
) -> Result<Vec<SessionRun>> {
    use rayon::prelude::*;
    population
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_session_detailed(protocol, s, AgentOrder::for_subject(i), master_seed))
        .collect()
}
