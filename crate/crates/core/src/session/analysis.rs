//! Within- and across-subject statistics over session traces.

use serde::{Deserialize, Serialize};

use super::protocol::{AgentOrder, SessionProtocol};
use super::trace::{Phase, SegmentSummary, SessionAgent, SessionTrace};
use crate::error::{Error, Result};
use crate::stats::{
    paired_t_test, wilcoxon_signed_rank, Alternative, PairedSamples, PairedTTest, WilcoxonResult,
};

/// Low and high segment summaries of one agent's block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub low: SegmentSummary,
    pub high: SegmentSummary,
    /// High vs low step anxieties, one-sided (high greater). `None` when
    /// every paired difference is zero.
    pub wilcoxon: Option<WilcoxonResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSessionStats {
    pub subject_id: usize,
    pub order: AgentOrder,
    pub rl: BlockStats,
    pub rules: BlockStats,
}

impl SubjectSessionStats {
    pub fn block(&self, agent: SessionAgent) -> &BlockStats {
        match agent {
            SessionAgent::Rl => &self.rl,
            SessionAgent::Rules => &self.rules,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub subjects: Vec<SubjectSessionStats>,
    /// Across subjects: RL high-segment mean vs low-segment mean, one-sided.
    pub rl_direction: Option<WilcoxonResult>,
    /// Across subjects: rules MSE minus RL MSE in the low segment, one-sided.
    pub mse_low: Option<PairedTTest>,
    pub mse_high: Option<PairedTTest>,
}

impl SessionReport {
    /// Mean over subjects of an agent's segment MSE.
    pub fn mean_mse(&self, agent: SessionAgent, phase: Phase) -> f64 {
        let vals: Vec<f64> = self
            .subjects
            .iter()
            .map(|s| {
                let b = s.block(agent);
                if phase == Phase::HighAnxiety {
                    b.high.mse
                } else {
                    b.low.mse
                }
            })
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn mean_anxiety(&self, agent: SessionAgent, phase: Phase) -> f64 {
        let vals: Vec<f64> = self
            .subjects
            .iter()
            .map(|s| {
                let b = s.block(agent);
                if phase == Phase::HighAnxiety {
                    b.high.mean_anxiety
                } else {
                    b.low.mean_anxiety
                }
            })
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

fn degenerate_to_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(_)) | Err(Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn block_stats(
    trace: &SessionTrace,
    agent: SessionAgent,
    protocol: &SessionProtocol,
) -> Result<BlockStats> {
    let segments = trace.segment_summary(agent, protocol.targets, protocol.steps_per_segment())?;
    let pick = |phase: Phase| {
        segments
            .iter()
            .find(|s| s.phase == phase)
            .cloned()
            .ok_or_else(|| Error::Integrity(format!("{agent} block lacks a {phase} segment")))
    };
    let low = pick(Phase::LowAnxiety)?;
    let high = pick(Phase::HighAnxiety)?;
    let samples = PairedSamples::new(high.anxiety.clone(), low.anxiety.clone())?;
    let wilcoxon = degenerate_to_none(wilcoxon_signed_rank(&samples, Alternative::Greater))?;
    Ok(BlockStats {
        low,
        high,
        wilcoxon,
    })
}

/// Per-subject segment statistics plus the across-subject tests.
pub fn analyze_sessions(
    traces: &[SessionTrace],
    protocol: &SessionProtocol,
) -> Result<SessionReport> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("no session traces".into()));
    }
    let subjects: Vec<SubjectSessionStats> = traces
        .iter()
        .map(|t| {
            t.check_timestamps()?;
            Ok(SubjectSessionStats {
                subject_id: t.subject_id,
                order: t.order,
                rl: block_stats(t, SessionAgent::Rl, protocol)?,
                rules: block_stats(t, SessionAgent::Rules, protocol)?,
            })
        })
        .collect::<Result<_>>()?;

    let rl_high: Vec<f64> = subjects.iter().map(|s| s.rl.high.mean_anxiety).collect();
    let rl_low: Vec<f64> = subjects.iter().map(|s| s.rl.low.mean_anxiety).collect();
    let rl_direction = degenerate_to_none(wilcoxon_signed_rank(
        &PairedSamples::new(rl_high, rl_low)?,
        Alternative::Greater,
    ))?;

    let mse_test = |f: fn(&BlockStats) -> f64| -> Result<Option<PairedTTest>> {
        let rules: Vec<f64> = subjects.iter().map(|s| f(&s.rules)).collect();
        let rl: Vec<f64> = subjects.iter().map(|s| f(&s.rl)).collect();
        degenerate_to_none(paired_t_test(
            &PairedSamples::new(rules, rl)?,
            Alternative::Greater,
        ))
    };
    let mse_low = mse_test(|b| b.low.mse)?;
    let mse_high = mse_test(|b| b.high.mse)?;

    Ok(SessionReport {
        subjects,
        rl_direction,
        mse_low,
        mse_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::protocol::run_sessions;
    use crate::subjects::VirtualSubject;

    fn population() -> Vec<VirtualSubject> {
        (0..6)
            .map(|i| {
                VirtualSubject::new(i, [1.0, 1.0, 1.0, 1.0, 0.5, 0.5], 0.5, 100 + i as u64).unwrap()
            })
            .collect()
    }

    #[test]
    fn report_covers_every_subject() {
        let p = SessionProtocol::default();
        let traces = run_sessions(&p, &population(), 7).unwrap();
        let report = analyze_sessions(&traces, &p).unwrap();
        assert_eq!(report.subjects.len(), 6);
        for s in &report.subjects {
            assert_eq!(s.rl.low.steps, 7);
            assert_eq!(s.rules.high.target, 7);
        }
        assert!(report.mean_mse(SessionAgent::Rl, Phase::LowAnxiety) >= 0.0);
    }

    #[test]
    fn truncated_trace_is_integrity_error() {
        let p = SessionProtocol::default();
        let mut traces = run_sessions(&p, &population(), 7).unwrap();
        traces[2].rows.pop();
        assert!(matches!(
            analyze_sessions(&traces, &p),
            Err(Error::Integrity(_))
        ));
        assert!(analyze_sessions(&[], &p).is_err());
    }
}
