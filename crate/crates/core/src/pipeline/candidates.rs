//! Enumeration of candidate invariants from a specification.

use crate::predicate::Predicate;
use crate::spec::Specification;

use super::PipelineError;

/// Default upper bound on the number of candidates.
pub const DEFAULT_SPACE_CAP: u64 = 10_000_000;

/// One outcome atom paired with a set of given atoms, as indices into
/// [`CandidateSet::outcomes`] and [`CandidateSet::givens`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub outcome: usize,
    pub givens: Vec<usize>,
    /// Indices of the constraints that admitted at least one of the givens;
    /// empty when the specification has no constraints.
    pub provenance: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub outcomes: Vec<Predicate>,
    pub givens: Vec<Predicate>,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Given atoms admissible for an outcome atom, grouped by variable in
/// declaration order.
fn admissible_groups(spec: &Specification, outcome: &Predicate, givens: &[Predicate]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (gi, g) in givens.iter().enumerate() {
        if g.var_name == outcome.var_name {
            continue;
        }
        if !spec.constraints.is_empty() && !spec.constraints.iter().any(|c| c.admits(&outcome.var_name, &g.var_name)) {
            continue;
        }
        match groups.iter_mut().find(|(v, _)| *v == g.var_name) {
            Some((_, members)) => members.push(gi),
            None => groups.push((g.var_name.clone(), vec![gi])),
        }
    }
    groups.into_iter().map(|(_, m)| m).collect()
}

/// Number of ways to pick between 1 and `max` atoms with at most one per
/// group: the sum of elementary symmetric polynomials of the group sizes.
fn combination_count(group_sizes: &[usize], max: usize) -> u64 {
    let mut e = vec![0u64; max + 1];
    e[0] = 1;
    for &s in group_sizes {
        for i in (1..=max).rev() {
            e[i] = e[i].saturating_add(e[i - 1].saturating_mul(s as u64));
        }
    }
    e[1..].iter().fold(0u64, |a, &b| a.saturating_add(b))
}

/// Candidate count without materializing the candidates.
pub fn count_candidates(spec: &Specification) -> u64 {
    let (outcomes, givens) = spec.expand_predicates();
    outcomes
        .iter()
        .map(|o| {
            let sizes: Vec<usize> = admissible_groups(spec, o, &givens).iter().map(Vec::len).collect();
            combination_count(&sizes, spec.max_givens)
        })
        .fold(0u64, |a, b| a.saturating_add(b))
}

pub fn enumerate_candidates(spec: &Specification) -> Result<CandidateSet, PipelineError> {
    enumerate_candidates_capped(spec, DEFAULT_SPACE_CAP)
}

/// All admissible candidates, ordered by outcome atom, then given-set size,
/// then lexicographically by given atom index.
pub fn enumerate_candidates_capped(spec: &Specification, cap: u64) -> Result<CandidateSet, PipelineError> {
    spec.validate()?;
    let estimate = count_candidates(spec);
    if estimate > cap {
        return Err(PipelineError::SpaceTooLarge { estimate, cap });
    }
    let (outcomes, givens) = spec.expand_predicates();
    let mut candidates = Vec::with_capacity(estimate as usize);
    for (oi, o) in outcomes.iter().enumerate() {
        let mut admissible: Vec<usize> = admissible_groups(spec, o, &givens).into_iter().flatten().collect();
        admissible.sort_unstable();
        for size in 1..=spec.max_givens.min(admissible.len()) {
            let mut chosen = Vec::with_capacity(size);
            combos(&admissible, &givens, size, 0, &mut chosen, &mut |gs| {
                let provenance = spec
                    .constraints
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| gs.iter().any(|&g| c.admits(&o.var_name, &givens[g].var_name)))
                    .map(|(ci, _)| ci)
                    .collect();
                candidates.push(Candidate {
                    outcome: oi,
                    givens: gs.to_vec(),
                    provenance,
                });
            });
        }
    }
    debug_assert_eq!(candidates.len() as u64, estimate);
    Ok(CandidateSet {
        outcomes,
        givens,
        candidates,
    })
}

fn combos(
    pool: &[usize],
    givens: &[Predicate],
    size: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == size {
        emit(chosen);
        return;
    }
    for k in start..pool.len() {
        let g = pool[k];
        if chosen.iter().any(|&c| givens[c].var_name == givens[g].var_name) {
            continue;
        }
        chosen.push(g);
        combos(pool, givens, size, k + 1, chosen, emit);
        chosen.pop();
    }
}
