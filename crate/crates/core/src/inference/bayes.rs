//! Posterior of an outcome given a conjunction of givens.

use std::fmt;

use super::engine::{FrequencyCounts, TermCounts};

/// Why a candidate produced no posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// The outcome never held at a counted timestep.
    NoOutcomeSupport,
    /// The givens never held, so `P(G)` is zero.
    NoGivenSupport,
    /// The prior is zero, outside `[0, 1]`, or leaves `P(G|¬O)` without data.
    DegeneratePrior,
}

impl DropReason {
    pub fn code(self) -> &'static str {
        match self {
            DropReason::NoOutcomeSupport => "NO_OUTCOME_SUPPORT",
            DropReason::NoGivenSupport => "NO_GIVEN_SUPPORT",
            DropReason::DegeneratePrior => "DEGENERATE_PRIOR",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceResult {
    pub p_g_given_o: f64,
    pub p_g_given_not_o: f64,
    pub p_g: f64,
    pub posterior: f64,
    pub prior: f64,
    pub counts: FrequencyCounts,
}

/// One cell of the outcome partition other than the outcome itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionTerm {
    pub prior: f64,
    pub counts: TermCounts,
}

const PRIOR_SUM_SLACK: f64 = 1e-9;
/// Priors at or below this are treated as zero.
pub const NEGLIGIBLE_PRIOR: f64 = 1e-12;

fn check_outcome(counts: &FrequencyCounts, prior: f64) -> Result<f64, DropReason> {
    if counts.freq_o == 0 {
        return Err(DropReason::NoOutcomeSupport);
    }
    if !(prior > 0.0 && prior <= 1.0) {
        return Err(DropReason::DegeneratePrior);
    }
    Ok(counts.freq_o_and_g as f64 / counts.freq_o as f64)
}

fn finish(counts: &FrequencyCounts, prior: f64, p_g_given_o: f64, p_g: f64) -> Result<InferenceResult, DropReason> {
    if p_g.is_nan() || p_g <= 0.0 {
        return Err(DropReason::NoGivenSupport);
    }
    let joint = p_g_given_o * prior;
    let p_g_given_not_o = if prior < 1.0 { ((p_g - joint) / (1.0 - prior)).max(0.0) } else { 0.0 };
    Ok(InferenceResult {
        p_g_given_o,
        p_g_given_not_o,
        p_g,
        posterior: (joint / p_g).min(1.0),
        prior,
        counts: *counts,
    })
}

/// Binary total probability: `P(G) = P(G|O)p + P(G|¬O)(1-p)`.
pub fn infer(counts: &FrequencyCounts, prior: f64) -> Result<InferenceResult, DropReason> {
    let p_g_given_o = check_outcome(counts, prior)?;
    let not_o = counts.n - counts.freq_o;
    let p_g_given_not_o = if not_o > 0 {
        counts.freq_g_and_not_o as f64 / not_o as f64
    } else if prior < 1.0 {
        return Err(DropReason::DegeneratePrior);
    } else {
        0.0
    };
    let p_g = p_g_given_o * prior + p_g_given_not_o * (1.0 - prior);
    finish(counts, prior, p_g_given_o, p_g)
}

/// Total probability over a partition of the outcome's variable:
/// `P(G) = P(G|O)p + Σ P(G|O_j)p_j`.
///
/// `others` lists every other cell, including any residual. Falls back to
/// [`infer`] when the priors overcommit or a cell with positive prior was
/// never observed.
pub fn infer_partitioned(
    counts: &FrequencyCounts,
    prior: f64,
    others: &[PartitionTerm],
) -> Result<InferenceResult, DropReason> {
    let p_g_given_o = check_outcome(counts, prior)?;
    let total: f64 = prior + others.iter().map(|t| t.prior).sum::<f64>();
    let usable = total <= 1.0 + PRIOR_SUM_SLACK
        && others
            .iter()
            .all(|t| t.prior >= 0.0 && (t.prior <= NEGLIGIBLE_PRIOR || t.counts.freq > 0));
    if !usable {
        return infer(counts, prior);
    }
    let rest: f64 = others
        .iter()
        .filter(|t| t.prior > NEGLIGIBLE_PRIOR)
        .map(|t| t.prior * t.counts.freq_with_g as f64 / t.counts.freq as f64)
        .sum();
    finish(counts, prior, p_g_given_o, p_g_given_o * prior + rest)
}

/// Builds the residual cell from the full counts and the listed cells
/// (outcome plus siblings), which must be mutually exclusive.
pub fn residual_term(counts: &FrequencyCounts, prior: f64, siblings: &[PartitionTerm]) -> PartitionTerm {
    let freq = counts.n - counts.freq_o - siblings.iter().map(|t| t.counts.freq).sum::<u64>();
    let freq_with_g = counts.freq_g - counts.freq_o_and_g - siblings.iter().map(|t| t.counts.freq_with_g).sum::<u64>();
    let used = prior + siblings.iter().map(|t| t.prior).sum::<f64>();
    PartitionTerm {
        prior: (1.0 - used).max(0.0),
        counts: TermCounts { freq, freq_with_g },
    }
}
