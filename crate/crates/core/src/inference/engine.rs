//! Single-pass evaluation of predicate atoms and frequency counting.
//!
//! `scan` reads each record of a source exactly once, keeping per-variable
//! ring buffers as deep as the longest window on that variable, and records
//! two bits per atom per timestep: evaluable, and TRUE. Counting a candidate
//! invariant is then a word-wise AND/popcount over those bits, so the
//! number of candidates never changes how often the trace is read.

use std::collections::VecDeque;

use crate::predicate::{EvalError, Predicate, Truth};
use crate::trace::{ColumnKind, RecordSource, Value};

use super::bitset::BitSet;

/// How timesteps where a predicate is UNDEFINED enter the counts.
///
/// A timestep where the outcome is UNDEFINED never counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedPolicy {
    /// An UNDEFINED given leaves the given-conjunction unmet, and the
    /// timestep still counts toward `n` and the outcome frequency.
    #[default]
    GivenUnmet,
    /// Any UNDEFINED involved predicate removes the timestep from every count.
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrequencyCounts {
    /// Timesteps that contribute to this candidate.
    pub n: u64,
    pub freq_o: u64,
    pub freq_g: u64,
    pub freq_o_and_g: u64,
    pub freq_g_and_not_o: u64,
}

/// Counts for one cell of the outcome partition (a sibling atom on the
/// outcome's variable, or the residual).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TermCounts {
    pub freq: u64,
    pub freq_with_g: u64,
}

/// Per-atom evaluation bits for one trace.
#[derive(Debug, Clone)]
pub struct AtomTable {
    len: usize,
    defined: Vec<BitSet>,
    truth: Vec<BitSet>,
}

fn bind(source: &(impl RecordSource + ?Sized), atom: &Predicate) -> Result<usize, EvalError> {
    let col = source
        .variable_index(&atom.var_name)
        .ok_or_else(|| EvalError::UnknownVariable(atom.var_name.clone()))?;
    let kind = source.column_kind(col);
    let expected = if atom.kind.is_numeric() {
        ColumnKind::Numeric
    } else {
        ColumnKind::Text
    };
    if kind != expected && !source.column_all_null(col) {
        return Err(EvalError::TypeMismatch {
            predicate: atom.id.clone(),
            var: atom.var_name.clone(),
            expected: if atom.kind.is_numeric() { "numeric" } else { "string" },
            found: if kind == ColumnKind::Numeric { "numbers" } else { "strings" },
        });
    }
    Ok(col)
}

/// Evaluates every atom at every timestep in one ordered traversal.
pub fn scan<S: RecordSource + ?Sized>(source: &S, atoms: &[&Predicate]) -> Result<AtomTable, EvalError> {
    let len = source.len();
    // Group atoms by column; one ring buffer per column.
    let mut groups: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (ai, atom) in atoms.iter().enumerate() {
        let col = bind(source, atom)?;
        match groups.iter_mut().find(|(c, _, _)| *c == col) {
            Some((_, depth, members)) => {
                *depth = (*depth).max(atom.span());
                members.push(ai);
            }
            None => groups.push((col, atom.span(), vec![ai])),
        }
    }
    let mut rings: Vec<VecDeque<Value<'_>>> =
        groups.iter().map(|(_, depth, _)| VecDeque::with_capacity(*depth + 1)).collect();

    let mut defined: Vec<BitSet> = (0..atoms.len()).map(|_| BitSet::new(len)).collect();
    let mut truth: Vec<BitSet> = (0..atoms.len()).map(|_| BitSet::new(len)).collect();

    for i in 0..len {
        let record = source.record(i);
        for ((col, depth, members), ring) in groups.iter().zip(rings.iter_mut()) {
            if ring.len() == *depth {
                ring.pop_front();
            }
            ring.push_back(record.get(*col));
            let window = ring.make_contiguous();
            for &ai in members {
                match atoms[ai].eval_window(window)? {
                    Truth::True => {
                        defined[ai].set(i);
                        truth[ai].set(i);
                    }
                    Truth::False => defined[ai].set(i),
                    Truth::Undefined => {}
                }
            }
        }
    }
    Ok(AtomTable { len, defined, truth })
}

impl AtomTable {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn atom_count(&self) -> usize {
        self.truth.len()
    }

    pub fn truth(&self, atom: usize, i: usize) -> Truth {
        if !self.defined[atom].get(i) {
            Truth::Undefined
        } else {
            Truth::from_bool(self.truth[atom].get(i))
        }
    }

    /// Evaluable timesteps and TRUE timesteps of one atom.
    pub fn marginal(&self, atom: usize) -> (u64, u64) {
        (self.defined[atom].count_ones(), self.truth[atom].count_ones())
    }

    /// True when no two of `atoms` hold at the same timestep.
    pub fn mutually_exclusive(&self, atoms: &[usize]) -> bool {
        let words = self.len.div_ceil(64);
        (0..words).all(|w| {
            let mut seen = 0u64;
            for &a in atoms {
                let t = self.truth[a].words()[w];
                if seen & t != 0 {
                    return false;
                }
                seen |= t;
            }
            true
        })
    }

    pub fn count(&self, outcome: usize, givens: &[usize], policy: UndefinedPolicy) -> FrequencyCounts {
        self.count_partitioned(outcome, givens, &[], policy).0
    }

    /// Counts for `P(outcome | givens)`, plus per-sibling counts over the
    /// same contributing timesteps.
    pub fn count_partitioned(
        &self,
        outcome: usize,
        givens: &[usize],
        siblings: &[usize],
        policy: UndefinedPolicy,
    ) -> (FrequencyCounts, Vec<TermCounts>) {
        let mut c = FrequencyCounts::default();
        let mut terms = vec![TermCounts::default(); siblings.len()];
        let o_def = self.defined[outcome].words();
        let o_true = self.truth[outcome].words();
        for w in 0..o_def.len() {
            let mut rows = o_def[w];
            if policy == UndefinedPolicy::Exclude {
                for &g in givens {
                    rows &= self.defined[g].words()[w];
                }
            }
            let mut g_rows = rows;
            for &g in givens {
                g_rows &= self.truth[g].words()[w];
            }
            c.n += rows.count_ones() as u64;
            c.freq_o += (rows & o_true[w]).count_ones() as u64;
            c.freq_g += g_rows.count_ones() as u64;
            c.freq_o_and_g += (g_rows & o_true[w]).count_ones() as u64;
            for (t, &s) in terms.iter_mut().zip(siblings) {
                let s_true = self.truth[s].words()[w];
                t.freq += (rows & s_true).count_ones() as u64;
                t.freq_with_g += (g_rows & s_true).count_ones() as u64;
            }
        }
        c.freq_g_and_not_o = c.freq_g - c.freq_o_and_g;
        (c, terms)
    }
}

/// Counts one candidate invariant with a single traversal of `source`.
pub fn count<S: RecordSource + ?Sized>(
    source: &S,
    outcome: &Predicate,
    givens: &[Predicate],
    policy: UndefinedPolicy,
) -> Result<FrequencyCounts, EvalError> {
    let mut atoms = vec![outcome];
    atoms.extend(givens.iter());
    let table = scan(source, &atoms)?;
    let given_idx: Vec<usize> = (1..atoms.len()).collect();
    Ok(table.count(0, &given_idx, policy))
}
