//! Iterative inference over an ordered trace list.

use std::collections::HashSet;

use crate::inference::{build_prior_empirical, build_prior_uniform, update_prior, PriorStore, UndefinedPolicy};
use crate::predicate::Predicate;
use crate::ranking::{rank, select_models, Invariant, RankKey, DEFAULT_VARIANCE_WINDOW};
use crate::spec::Specification;
use crate::trace::{RecordSource, Trace};

use super::analyze::{analyze_trace, DroppedCandidate};
use super::candidates::CandidateSet;
use super::session::Session;
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub policy: UndefinedPolicy,
    pub rank_by: RankKey,
    pub variance_window: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: UndefinedPolicy::default(),
            rank_by: RankKey::default(),
            variance_window: DEFAULT_VARIANCE_WINDOW,
        }
    }
}

/// Where the initial outcome priors come from.
#[derive(Debug, Clone)]
pub enum PriorMode {
    Uniform,
    /// Empirical frequencies over a prior trace set.
    Empirical(Vec<Trace>),
    Given(PriorStore),
}

/// Builds the starting prior store for every outcome atom of `spec`.
pub fn initial_priors(spec: &Specification, mode: &PriorMode) -> Result<PriorStore, PipelineError> {
    let store = match mode {
        PriorMode::Uniform => {
            let mut store = PriorStore::new();
            for def in &spec.outcomes {
                store.extend(build_prior_uniform(def));
            }
            store
        }
        PriorMode::Empirical(traces) => {
            if traces.is_empty() {
                return Err(PipelineError::Invalid("empirical prior needs at least one trace".into()));
            }
            let (outcomes, _) = spec.expand_predicates();
            let atoms: Vec<&Predicate> = outcomes.iter().collect();
            let refs: Vec<&Trace> = traces.iter().collect();
            build_prior_empirical(&refs, &atoms)?
        }
        PriorMode::Given(store) => store.clone(),
    };
    store.validate()?;
    Ok(store)
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iteration: u64,
    pub trace: String,
    /// Retained invariants in rank order.
    pub ranked: Vec<Invariant>,
    /// Invariants removed by nested-model selection.
    pub pruned: Vec<Invariant>,
    pub dropped: Vec<DroppedCandidate>,
    pub variance_window: usize,
}

impl IterationReport {
    pub fn empty(variance_window: usize) -> Self {
        IterationReport {
            iteration: 0,
            trace: String::new(),
            ranked: Vec::new(),
            pruned: Vec::new(),
            dropped: Vec::new(),
            variance_window,
        }
    }

    /// True when candidates existed but none produced a posterior.
    pub fn all_dropped(&self) -> bool {
        self.ranked.is_empty() && self.pruned.is_empty() && !self.dropped.is_empty()
    }
}

fn check_variables(set: &CandidateSet, name: &str, trace: &dyn RecordSource) -> Result<(), PipelineError> {
    for p in set.outcomes.iter().chain(&set.givens) {
        if trace.variable_index(&p.var_name).is_none() {
            return Err(PipelineError::VariableMismatch {
                trace: name.to_string(),
                var: p.var_name.clone(),
            });
        }
    }
    Ok(())
}

/// Ensures every outcome atom has a prior before any trace is processed.
pub fn check_priors(set: &CandidateSet, priors: &PriorStore) -> Result<(), PipelineError> {
    match set.outcomes.iter().find(|o| priors.get(&o.id).is_none()) {
        Some(o) => Err(PipelineError::MissingPrior(o.id.clone())),
        None => Ok(()),
    }
}

/// Infers every candidate on one trace with the session's current priors,
/// records surprise history, then folds the trace into the priors.
pub fn run_iteration<S: RecordSource>(
    set: &CandidateSet,
    name: &str,
    trace: &S,
    session: &mut Session,
    opts: &RunOptions,
) -> Result<IterationReport, PipelineError> {
    check_variables(set, name, trace)?;
    check_priors(set, &session.priors)?;
    let analysis = analyze_trace(set, trace, &session.priors, opts.policy)?;
    let iteration = session.iteration + 1;
    for d in &analysis.dropped {
        log::debug!("{name}: dropped {} ({})", d.id, d.reason);
    }

    let mut inferred = analysis.inferred;
    for inv in &mut inferred {
        if let Some(s) = inv.surprise {
            let h = session.histories.entry(inv.id.clone()).or_default();
            h.push((iteration, s));
            inv.surprise_history = h.clone();
        } else if let Some(h) = session.histories.get(&inv.id) {
            inv.surprise_history = h.clone();
        }
    }
    let keep = select_models(&inferred);
    let (retained, pruned): (Vec<_>, Vec<_>) = inferred.into_iter().zip(keep).partition(|(_, k)| *k);
    let ranked = rank(retained.into_iter().map(|(i, _)| i).collect(), opts.rank_by);
    let pruned: Vec<Invariant> = pruned.into_iter().map(|(i, _)| i).collect();

    let mut seen = HashSet::new();
    for (o, obs) in set.outcomes.iter().zip(&analysis.observations) {
        if !seen.insert(o.id.as_str()) {
            continue;
        }
        if let Some(old) = session.priors.get(&o.id) {
            let new = update_prior(old, obs.true_count, obs.evaluable);
            session.priors.insert(o.id.clone(), new);
        }
    }
    session.iteration = iteration;
    session.processed.push(name.to_string());
    log::info!(
        "{name}: iteration {iteration}, {} ranked, {} pruned, {} dropped",
        ranked.len(),
        pruned.len(),
        analysis.dropped.len()
    );

    Ok(IterationReport {
        iteration,
        trace: name.to_string(),
        ranked,
        pruned,
        dropped: analysis.dropped,
        variance_window: opts.variance_window,
    })
}

/// Processes traces in order. `after_each` sees every report together with
/// the updated session, which is the place to persist both.
pub fn run<F>(
    set: &CandidateSet,
    traces: &[(String, Trace)],
    session: &mut Session,
    opts: &RunOptions,
    mut after_each: F,
) -> Result<Vec<IterationReport>, PipelineError>
where
    F: FnMut(&IterationReport, &Session) -> Result<(), PipelineError>,
{
    check_priors(set, &session.priors)?;
    let mut reports = Vec::with_capacity(traces.len());
    for (name, trace) in traces {
        let report = run_iteration(set, name, trace, session, opts)?;
        after_each(&report, session)?;
        reports.push(report);
    }
    Ok(reports)
}
