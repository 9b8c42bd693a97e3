use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_space::{
    decode, encode, Attribute, AttributeAction, Direction, SpiderAttributes, ATTRIBUTE_COLUMNS,
};
use crate::stats::mse_vs_target;

/// Column header of `trace.csv`.
pub const TRACE_HEADER: [&str; 14] = [
    "t_s",
    "phase",
    "agent",
    "state_index",
    "loc",
    "aom",
    "close",
    "large",
    "hair",
    "color",
    "anxiety",
    "reward",
    "action_attr",
    "action_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Relax,
    LowAnxiety,
    HighAnxiety,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Relax => "Relax",
            Phase::LowAnxiety => "LowAnxiety",
            Phase::HighAnxiety => "HighAnxiety",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Relax" => Ok(Phase::Relax),
            "LowAnxiety" => Ok(Phase::LowAnxiety),
            "HighAnxiety" => Ok(Phase::HighAnxiety),
            other => Err(Error::Integrity(format!("unknown phase '{other}'"))),
        }
    }
}

/// Which adaptive method drove a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SessionAgent {
    Rl,
    Rules,
}

impl fmt::Display for SessionAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionAgent::Rl => "RL",
            SessionAgent::Rules => "Rules",
        })
    }
}

impl FromStr for SessionAgent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RL" => Ok(SessionAgent::Rl),
            "Rules" => Ok(SessionAgent::Rules),
            other => Err(Error::Integrity(format!("unknown agent '{other}'"))),
        }
    }
}

/// The decision taken at the end of a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepAction {
    /// No decision (relax rows, last window of a block).
    None,
    /// The agent chose to keep the current spider.
    Hold,
    Step(AttributeAction),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub phase: Phase,
    pub agent: Option<SessionAgent>,
    pub state: Option<SpiderAttributes>,
    pub anxiety: Option<u8>,
    pub reward: Option<f64>,
    pub action: StepAction,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: FromStr>(field: &str, name: &str) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Integrity(format!("bad {name} value '{field}'")))
}

impl TraceRow {
    pub fn to_record(&self) -> Vec<String> {
        let mut rec = vec![
            format!("{}", self.t_s),
            self.phase.to_string(),
            opt(self.agent),
            opt(self.state.map(|s| encode(&s))),
        ];
        match self.state {
            Some(s) => rec.extend(s.values().iter().map(|v| v.to_string())),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        rec.push(opt(self.anxiety));
        rec.push(opt(self.reward));
        let (attr, dir) = match self.action {
            StepAction::None => (String::new(), String::new()),
            StepAction::Hold => ("hold".to_string(), String::new()),
            StepAction::Step(a) => (
                ATTRIBUTE_COLUMNS[a.attribute.index()].to_string(),
                a.direction.delta().to_string(),
            ),
        };
        rec.push(attr);
        rec.push(dir);
        rec
    }

    pub fn from_record(fields: &[&str]) -> Result<Self> {
        if fields.len() != TRACE_HEADER.len() {
            return Err(Error::Integrity(format!(
                "expected {} fields, found {}",
                TRACE_HEADER.len(),
                fields.len()
            )));
        }
        let t_s: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Integrity(format!("bad t_s '{}'", fields[0])))?;
        let phase: Phase = fields[1].parse()?;
        let agent: Option<SessionAgent> = if fields[2].is_empty() {
            None
        } else {
            Some(fields[2].parse()?)
        };
        let state = match parse_opt::<usize>(fields[3], "state_index")? {
            Some(idx) => {
                let s = decode(idx)?;
                for (i, col) in fields[4..10].iter().enumerate() {
                    let v: u8 = col
                        .parse()
                        .map_err(|_| Error::Integrity(format!("bad attribute value '{col}'")))?;
                    if v != s.values()[i] {
                        return Err(Error::Integrity(format!(
                            "attribute columns disagree with state_index {idx}"
                        )));
                    }
                }
                Some(s)
            }
            None => None,
        };
        let anxiety = parse_opt::<u8>(fields[10], "anxiety")?;
        let reward = parse_opt::<f64>(fields[11], "reward")?;
        let action = match (fields[12], fields[13]) {
            ("", "") => StepAction::None,
            ("hold", "") => StepAction::Hold,
            (attr, dir) => {
                let idx = ATTRIBUTE_COLUMNS
                    .iter()
                    .position(|c| *c == attr)
                    .ok_or_else(|| {
                        Error::Integrity(format!("unknown action attribute '{attr}'"))
                    })?;
                let direction = match dir {
                    "1" => Direction::Increase,
                    "-1" => Direction::Decrease,
                    other => return Err(Error::Integrity(format!("bad action_dir '{other}'"))),
                };
                StepAction::Step(AttributeAction::new(Attribute::ALL[idx], direction))
            }
        };
        Ok(Self {
            t_s,
            phase,
            agent,
            state,
            anxiety,
            reward,
            action,
        })
    }
}

/// Full chronological log of one subject's session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub subject_id: usize,
    pub order: super::protocol::AgentOrder,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub phase: Phase,
    pub target: u8,
    pub steps: usize,
    pub anxiety: Vec<f64>,
    pub mean_anxiety: f64,
    pub mse: f64,
    pub mean_reward: f64,
}

/// Per-segment statistics for one agent's block.
///
/// Targets are the desired levels for the low and high segments. Every
/// segment must contain exactly `steps_per_segment` windows.
pub fn segment_summary(
    rows: &[TraceRow],
    agent: SessionAgent,
    targets: [u8; 2],
    steps_per_segment: usize,
) -> Result<Vec<SegmentSummary>> {
    let block: Vec<&TraceRow> = rows.iter().filter(|r| r.agent == Some(agent)).collect();
    let mut phases: Vec<Phase> = Vec::new();
    for r in &block {
        if phases.last() != Some(&r.phase) {
            if phases.contains(&r.phase) {
                return Err(Error::Integrity(format!(
                    "{agent} block revisits phase {}",
                    r.phase
                )));
            }
            phases.push(r.phase);
        }
    }
    if phases.len() != 2 {
        return Err(Error::Integrity(format!(
            "{agent} block has {} anxious segments, expected 2",
            phases.len()
        )));
    }
    phases
        .into_iter()
        .map(|phase| {
            let target = match phase {
                Phase::LowAnxiety => targets[0],
                Phase::HighAnxiety => targets[1],
                Phase::Relax => return Err(Error::Integrity("relax rows carry no agent".into())),
            };
            let seg: Vec<&&TraceRow> = block.iter().filter(|r| r.phase == phase).collect();
            if seg.len() != steps_per_segment {
                return Err(Error::Integrity(format!(
                    "{agent} {phase} segment has {} steps, expected {steps_per_segment}",
                    seg.len()
                )));
            }
            let anxiety: Vec<f64> = seg
                .iter()
                .map(|r| {
                    r.anxiety
                        .map(f64::from)
                        .ok_or_else(|| Error::Integrity(format!("missing anxiety at t={}", r.t_s)))
                })
                .collect::<Result<_>>()?;
            let rewards: Vec<f64> = seg
                .iter()
                .map(|r| {
                    r.reward
                        .ok_or_else(|| Error::Integrity(format!("missing reward at t={}", r.t_s)))
                })
                .collect::<Result<_>>()?;
            let n = anxiety.len() as f64;
            Ok(SegmentSummary {
                phase,
                target,
                steps: seg.len(),
                mean_anxiety: anxiety.iter().sum::<f64>() / n,
                mse: mse_vs_target(&anxiety, target as f64)?,
                mean_reward: rewards.iter().sum::<f64>() / n,
                anxiety,
            })
        })
        .collect()
}

impl SessionTrace {
    pub fn agent_rows(&self, agent: SessionAgent) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.agent == Some(agent))
    }

    pub fn segment_summary(
        &self,
        agent: SessionAgent,
        targets: [u8; 2],
        steps_per_segment: usize,
    ) -> Result<Vec<SegmentSummary>> {
        segment_summary(&self.rows, agent, targets, steps_per_segment)
    }

    /// Checks that timestamps strictly increase.
    pub fn check_timestamps(&self) -> Result<()> {
        match self.rows.windows(2).find(|w| w[0].t_s >= w[1].t_s) {
            Some(w) => Err(Error::Integrity(format!(
                "timestamps not increasing at t={}",
                w[1].t_s
            ))),
            None => Ok(()),
        }
    }
}
