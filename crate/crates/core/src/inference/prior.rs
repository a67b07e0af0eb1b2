//! Prior probabilities of outcome atoms.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predicate::{partitions_cover_domain, EvalError, Predicate};
use crate::spec::PredicateDef;
use crate::trace::RecordSource;

use super::engine::scan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub probability: f64,
    /// Evaluable timesteps behind the estimate; zero for uniform priors.
    pub supporting_timesteps: u64,
}

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("prior for `{id}` is {p}, outside [0, 1]")]
    OutOfRange { id: String, p: f64 },
    #[error("no evaluable timesteps for `{0}`")]
    NoSupport(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Priors keyed by predicate id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorStore(BTreeMap<String, PriorEntry>);

impl PriorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &str) -> Option<&PriorEntry> {
        self.0.get(id)
    }

    pub fn insert(&mut self, id: impl Into<String>, entry: PriorEntry) {
        self.0.insert(id.into(), entry);
    }

    pub fn extend(&mut self, other: PriorStore) {
        self.0.extend(other.0);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PriorEntry)> {
        self.0.iter()
    }

    pub fn validate(&self) -> Result<(), PriorError> {
        for (id, e) in &self.0 {
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(PriorError::OutOfRange {
                    id: id.clone(),
                    p: e.probability,
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PriorError> {
        let store: PriorStore = serde_json::from_str(&fs::read_to_string(path)?)?;
        store.validate()?;
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PriorError> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Equal mass on each partition, plus one implicit "other" cell when the
/// partitions leave part of the domain uncovered.
pub fn build_prior_uniform(def: &PredicateDef) -> PriorStore {
    let atoms = def.atoms();
    let cells = atoms.len() + usize::from(!partitions_cover_domain(def));
    let p = 1.0 / cells as f64;
    let mut store = PriorStore::new();
    for a in atoms {
        store.insert(
            a.id,
            PriorEntry {
                probability: p,
                supporting_timesteps: 0,
            },
        );
    }
    store
}

/// Fraction of evaluable timesteps, summed over all traces, at which each
/// atom is TRUE.
pub fn build_prior_empirical<S: RecordSource>(traces: &[&S], atoms: &[&Predicate]) -> Result<PriorStore, PriorError> {
    let mut defined = vec![0u64; atoms.len()];
    let mut truth = vec![0u64; atoms.len()];
    for trace in traces {
        let table = scan(*trace, atoms)?;
        for (k, (d, t)) in defined.iter_mut().zip(truth.iter_mut()).enumerate() {
            let (dk, tk) = table.marginal(k);
            *d += dk;
            *t += tk;
        }
    }
    let mut store = PriorStore::new();
    for (k, atom) in atoms.iter().enumerate() {
        if defined[k] == 0 {
            return Err(PriorError::NoSupport(atom.id.clone()));
        }
        store.insert(
            atom.id.clone(),
            PriorEntry {
                probability: truth[k] as f64 / defined[k] as f64,
                supporting_timesteps: defined[k],
            },
        );
    }
    Ok(store)
}

/// Folds `observations_new` TRUE timesteps out of `timesteps_new` evaluable
/// ones into an existing estimate.
pub fn update_prior(old: &PriorEntry, observations_new: u64, timesteps_new: u64) -> PriorEntry {
    let total = old.supporting_timesteps + timesteps_new;
    if total == 0 {
        return *old;
    }
    PriorEntry {
        probability: (old.probability * old.supporting_timesteps as f64 + observations_new as f64) / total as f64,
        supporting_timesteps: total,
    }
}
