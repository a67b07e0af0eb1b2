//! Inference for every candidate over one trace.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::inference::{
    infer, infer_partitioned, residual_term, scan, AtomTable, DropReason, FrequencyCounts, PartitionTerm, PriorStore,
    UndefinedPolicy,
};
use crate::predicate::Predicate;
use crate::ranking::{invariant_id, Invariant};
use crate::trace::RecordSource;

use super::candidates::CandidateSet;
use super::PipelineError;

/// A candidate that produced no posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCandidate {
    pub id: String,
    pub outcome: String,
    pub givens: Vec<String>,
    pub prior: Option<f64>,
    pub counts: FrequencyCounts,
    pub reason: DropReason,
}

/// Per-trace marginal of an outcome atom, used for the prior update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeObservation {
    pub evaluable: u64,
    pub true_count: u64,
}

#[derive(Debug, Clone)]
pub struct TraceAnalysis {
    /// Candidates with a posterior, in enumeration order.
    pub inferred: Vec<Invariant>,
    pub dropped: Vec<DroppedCandidate>,
    /// Indexed like [`CandidateSet::outcomes`].
    pub observations: Vec<OutcomeObservation>,
}

/// Maps outcome and given atoms onto one deduplicated scan list.
struct AtomLayout<'s> {
    atoms: Vec<&'s Predicate>,
    outcome_slot: Vec<usize>,
    given_slot: Vec<usize>,
    /// For each outcome atom, the slots of the other outcome atoms on its
    /// variable.
    siblings: Vec<Vec<usize>>,
}

impl<'s> AtomLayout<'s> {
    fn new(set: &'s CandidateSet) -> Self {
        let mut atoms: Vec<&Predicate> = Vec::new();
        let mut by_id: HashMap<&str, usize> = HashMap::new();
        let mut slot = |p: &'s Predicate| -> usize {
            *by_id.entry(p.id.as_str()).or_insert_with(|| {
                atoms.push(p);
                atoms.len() - 1
            })
        };
        let outcome_slot: Vec<usize> = set.outcomes.iter().map(&mut slot).collect();
        let given_slot: Vec<usize> = set.givens.iter().map(&mut slot).collect();
        let siblings = set
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| {
                set.outcomes
                    .iter()
                    .enumerate()
                    .filter(|(j, p)| *j != i && p.var_name == o.var_name && p.id != o.id)
                    .map(|(j, _)| outcome_slot[j])
                    .collect()
            })
            .collect();
        AtomLayout {
            atoms,
            outcome_slot,
            given_slot,
            siblings,
        }
    }
}

enum Scored {
    Inferred(Invariant),
    Dropped(DroppedCandidate),
}

/// Counts every candidate over a single traversal of `source` and infers
/// posteriors against `priors`.
pub fn analyze_trace<S: RecordSource + ?Sized>(
    set: &CandidateSet,
    source: &S,
    priors: &PriorStore,
    policy: UndefinedPolicy,
) -> Result<TraceAnalysis, PipelineError> {
    let layout = AtomLayout::new(set);
    let table = scan(source, &layout.atoms)?;

    // Sibling partitions are only usable where they never overlap.
    let exclusive: Vec<bool> = (0..set.outcomes.len())
        .map(|oi| {
            let sib = &layout.siblings[oi];
            if sib.is_empty() {
                return false;
            }
            let mut all = sib.clone();
            all.push(layout.outcome_slot[oi]);
            table.mutually_exclusive(&all)
        })
        .collect();

    let results: Vec<Scored> = set
        .candidates
        .par_iter()
        .map(|cand| {
            let outcome = &set.outcomes[cand.outcome];
            let prior = priors.get(&outcome.id).map(|e| e.probability);
            let o_slot = layout.outcome_slot[cand.outcome];
            let g_slots: Vec<usize> = cand.givens.iter().map(|&g| layout.given_slot[g]).collect();
            let result = evaluate(&table, &layout, priors, cand.outcome, o_slot, &g_slots, prior, policy, exclusive[cand.outcome]);
            let givens: Vec<Predicate> = cand.givens.iter().map(|&g| set.givens[g].clone()).collect();
            match result {
                Ok(r) => Scored::Inferred(Invariant::new(outcome.clone(), givens, r)),
                Err((reason, counts)) => Scored::Dropped(DroppedCandidate {
                    id: invariant_id(outcome, &givens),
                    outcome: outcome.id.clone(),
                    givens: givens.iter().map(|g| g.id.clone()).collect(),
                    prior,
                    counts,
                    reason,
                }),
            }
        })
        .collect();

    let mut inferred = Vec::new();
    let mut dropped = Vec::new();
    for r in results {
        match r {
            Scored::Inferred(i) => inferred.push(i),
            Scored::Dropped(d) => dropped.push(d),
        }
    }
    let observations = layout
        .outcome_slot
        .iter()
        .map(|&s| {
            let (evaluable, true_count) = table.marginal(s);
            OutcomeObservation { evaluable, true_count }
        })
        .collect();
    Ok(TraceAnalysis {
        inferred,
        dropped,
        observations,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    table: &AtomTable,
    layout: &AtomLayout<'_>,
    priors: &PriorStore,
    outcome: usize,
    o_slot: usize,
    g_slots: &[usize],
    prior: Option<f64>,
    policy: UndefinedPolicy,
    exclusive: bool,
) -> Result<crate::inference::InferenceResult, (DropReason, FrequencyCounts)> {
    let siblings = &layout.siblings[outcome];
    let sibling_priors: Option<Vec<f64>> = if exclusive {
        siblings
            .iter()
            .map(|&s| priors.get(&layout.atoms[s].id).map(|e| e.probability))
            .collect()
    } else {
        None
    };
    // A missing prior is rejected by the same checks as an invalid one.
    let p = prior.unwrap_or(f64::NAN);
    match sibling_priors {
        Some(sp) => {
            let (counts, terms) = table.count_partitioned(o_slot, g_slots, siblings, policy);
            let mut cells: Vec<PartitionTerm> = sp
                .into_iter()
                .zip(terms)
                .map(|(prior, counts)| PartitionTerm { prior, counts })
                .collect();
            cells.push(residual_term(&counts, p, &cells));
            infer_partitioned(&counts, p, &cells).map_err(|r| (r, counts))
        }
        None => {
            let counts = table.count(o_slot, g_slots, policy);
            infer(&counts, p).map_err(|r| (r, counts))
        }
    }
}
