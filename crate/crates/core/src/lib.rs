//! Mining of conditional invariants `P(O | G1, ..., Gk)` from execution
//! traces.
//!
//! A [`spec::Specification`] names the outcome and given predicates to
//! explore. Every record of a [`trace::Trace`] is read once, each predicate
//! atom evaluated into bitsets, and candidate invariants are counted and
//! scored with Bayes' rule against outcome priors that are refined trace by
//! trace. [`ranking`] orders the results by surprise ratio and prunes nested
//! models with BIC; [`pipeline`] ties the steps together with persistent
//! sessions and report files.

pub mod inference;
pub mod pipeline;
pub mod predicate;
pub mod ranking;
pub mod spec;
pub mod synth;
pub mod trace;

pub use inference::{
    count, infer, update_prior, DropReason, FrequencyCounts, InferenceResult, PriorEntry, PriorStore,
    UndefinedPolicy,
};
pub use pipeline::{enumerate_candidates, CandidateSet, PipelineError, Session};
pub use predicate::{eval, EvalError, Predicate, Truth};
pub use ranking::{Invariant, RankKey};
pub use spec::{parse_spec, PredicateDef, SpecError, Specification};
pub use trace::{RecordSource, Trace, TraceError};
