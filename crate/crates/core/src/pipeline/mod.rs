//! End-to-end orchestration: candidate enumeration, per-trace inference,
//! prior updates between traces, ranking, sessions and reports.

mod analyze;
mod candidates;
mod report;
mod run;
mod session;

use std::path::PathBuf;

use thiserror::Error;

use crate::inference::PriorError;
use crate::predicate::EvalError;
use crate::spec::SpecError;
use crate::trace::TraceError;

pub use analyze::{analyze_trace, DroppedCandidate, OutcomeObservation, TraceAnalysis};
pub use candidates::{
    count_candidates, enumerate_candidates, enumerate_candidates_capped, Candidate, CandidateSet, DEFAULT_SPACE_CAP,
};
pub use report::{
    iteration_path, ranked_rows, sidecar_path, sidecar_rows, write_report, ReportFormat, ReportRow, BIC_PRUNED,
};
pub use run::{check_priors, initial_priors, run, run_iteration, IterationReport, PriorMode, RunOptions};
pub use session::{spec_hash, Session, SessionLock};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("candidate space of {estimate} exceeds the cap of {cap}")]
    SpaceTooLarge { estimate: u64, cap: u64 },
    #[error("trace `{trace}` has no variable `{var}`")]
    VariableMismatch { trace: String, var: String },
    #[error("no prior for outcome `{0}`")]
    MissingPrior(String),
    #[error("session: {0}")]
    Session(String),
    #[error("session is locked by another run (remove {} if stale)", .0.display())]
    SessionLocked(PathBuf),
    #[error("{0}")]
    Invalid(String),
    #[error("trace `{name}`: {source}")]
    Trace { name: String, source: TraceError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    /// Errors caused by inconsistent inputs rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PipelineError::Spec(_)
                | PipelineError::SpaceTooLarge { .. }
                | PipelineError::VariableMismatch { .. }
                | PipelineError::MissingPrior(_)
                | PipelineError::Session(_)
                | PipelineError::Invalid(_)
                | PipelineError::Trace { .. }
                | PipelineError::Eval(_)
                | PipelineError::Prior(PriorError::OutOfRange { .. } | PriorError::NoSupport(_))
        )
    }
}
