//! Shared inputs for the benchmarks.

use condbayes::pipeline::{enumerate_candidates_capped, CandidateSet};
use condbayes::spec::Specification;
use condbayes::synth::{scaling_spec, scaling_trace};
use condbayes::Trace;

pub const LENGTHS: [usize; 3] = [25_000, 50_000, 100_000];
pub const VARIABLES: [usize; 3] = [5, 10, 20];

/// A scaling-corpus cell: every variable is both outcome and given, up to
/// two givens per candidate.
pub struct Cell {
    pub spec: Specification,
    pub set: CandidateSet,
    pub trace: Trace,
}

pub fn cell(vars: usize, length: usize) -> Cell {
    let spec = scaling_spec(vars, 2);
    let set = enumerate_candidates_capped(&spec, u64::MAX).expect("scaling spec enumerates");
    let trace = scaling_trace(vars, length, 7);
    Cell { spec, set, trace }
}
