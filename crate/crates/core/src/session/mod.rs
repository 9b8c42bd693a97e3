//! Experiment harnesses: the category search over virtual subjects and the
//! two-block adaptive session protocol, plus session-level analysis.

pub mod analysis;
pub mod protocol;
pub mod search;
pub mod trace;

pub use analysis::{analyze_sessions, BlockStats, SessionReport, SubjectSessionStats};
pub use protocol::{
    run_session, run_session_detailed, run_sessions, run_sessions_detailed, AgentOrder,
    SessionProtocol, SessionRun,
};
pub use search::{
    reported_means, run_search, SearchExperimentConfig, SearchResult, StressCategory,
    REPORT_ACCURACY,
};
pub use trace::{
    segment_summary, Phase, SegmentSummary, SessionAgent, SessionTrace, StepAction, TraceRow,
    TRACE_HEADER,
};
