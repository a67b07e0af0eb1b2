//! Uniform-timestep traces and the record-source abstraction the inference
//! engine reads from.

mod io;
mod wrangle;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

pub use io::{load_trace, read_trace, store_trace, write_trace};
pub use wrangle::{load_events, wrangle, EventValue, RawEvent};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("variable `{0}` mixes numeric and string values")]
    TypeConflict(String),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A borrowed cell value. `Null` is a first-class value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Null,
    Num(f64),
    Str(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Text,
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Text(_) => ColumnKind::Text,
        }
    }

    pub fn get(&self, i: usize) -> Value<'_> {
        match self {
            Column::Numeric(v) => v[i].map_or(Value::Null, Value::Num),
            Column::Text(v) => v[i].as_deref().map_or(Value::Null, Value::Str),
        }
    }

    pub fn all_null(&self) -> bool {
        match self {
            Column::Numeric(v) => v.iter().all(Option::is_none),
            Column::Text(v) => v.iter().all(Option::is_none),
        }
    }
}

impl From<Vec<Option<f64>>> for Column {
    fn from(v: Vec<Option<f64>>) -> Self {
        Column::Numeric(v)
    }
}

impl From<Vec<Option<String>>> for Column {
    fn from(v: Vec<Option<String>>) -> Self {
        Column::Text(v)
    }
}

/// Immutable uniform-timestep trace; record `i` is time `i * timestep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    timestep: f64,
    variables: Vec<String>,
    columns: Vec<Column>,
    len: usize,
}

impl Trace {
    pub fn from_columns(timestep: f64, columns: Vec<(String, Column)>) -> Result<Self, TraceError> {
        if !(timestep.is_finite() && timestep > 0.0) {
            return Err(TraceError::Invalid(format!("timestep must be positive, got {timestep}")));
        }
        let len = columns.first().map_or(0, |(_, c)| c.len());
        if len == 0 {
            return Err(TraceError::EmptyTrace);
        }
        let mut seen = HashMap::new();
        for (i, (name, col)) in columns.iter().enumerate() {
            if col.len() != len {
                return Err(TraceError::Invalid(format!(
                    "column `{name}` has {} records, expected {len}",
                    col.len()
                )));
            }
            if seen.insert(name.clone(), i).is_some() {
                return Err(TraceError::Invalid(format!("duplicate variable `{name}`")));
            }
        }
        let (variables, columns) = columns.into_iter().unzip();
        Ok(Trace {
            timestep,
            variables,
            columns,
            len,
        })
    }

    pub fn timestep(&self) -> f64 {
        self.timestep
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn column(&self, var: &str) -> Option<&Column> {
        self.variable_index(var).map(|i| &self.columns[i])
    }

    pub fn variable_index(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == var)
    }

    pub fn value(&self, var: &str, i: usize) -> Option<Value<'_>> {
        self.column(var).filter(|c| i < c.len()).map(|c| c.get(i))
    }

    /// The `w` numeric values ending at `i`, or `None` when the window runs
    /// off the start of the trace or touches a NULL or string.
    pub fn numeric_window(&self, var: &str, i: usize, w: usize) -> Option<Vec<f64>> {
        if w == 0 || i + 1 < w || i >= self.len {
            return None;
        }
        let col = self.column(var)?;
        (i + 1 - w..=i)
            .map(|k| match col.get(k) {
                Value::Num(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    /// Concatenates traces with identical variable sets.
    pub fn concat(parts: &[Trace]) -> Result<Trace, TraceError> {
        let first = parts.first().ok_or(TraceError::EmptyTrace)?;
        let mut columns: Vec<(String, Column)> = first
            .variables
            .iter()
            .cloned()
            .zip(first.columns.iter().cloned())
            .collect();
        for t in &parts[1..] {
            if t.variables != first.variables {
                return Err(TraceError::Invalid("variable sets differ".into()));
            }
            for ((_, acc), col) in columns.iter_mut().zip(&t.columns) {
                match (acc, col) {
                    (Column::Numeric(a), Column::Numeric(b)) => a.extend_from_slice(b),
                    (Column::Text(a), Column::Text(b)) => a.extend_from_slice(b),
                    _ => return Err(TraceError::Invalid("column types differ".into())),
                }
            }
        }
        Trace::from_columns(first.timestep, columns)
    }
}

/// A view of one record.
#[derive(Debug, Clone, Copy)]
pub struct RecordRef<'a> {
    trace: &'a Trace,
    index: usize,
}

impl<'a> RecordRef<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn get(&self, var_index: usize) -> Value<'a> {
        self.trace.columns[var_index].get(self.index)
    }
}

/// Random access to trace records. The inference engine reads every record
/// once, in order; wrappers can observe those reads.
pub trait RecordSource: Sync {
    fn variables(&self) -> &[String];
    fn len(&self) -> usize;
    fn column_kind(&self, var_index: usize) -> ColumnKind;
    /// True when the column holds only NULLs, so any predicate type fits it.
    fn column_all_null(&self, var_index: usize) -> bool;
    fn record(&self, index: usize) -> RecordRef<'_>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn variable_index(&self, var: &str) -> Option<usize> {
        self.variables().iter().position(|v| v == var)
    }
}

impl RecordSource for Trace {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn len(&self) -> usize {
        self.len
    }

    fn column_kind(&self, var_index: usize) -> ColumnKind {
        self.columns[var_index].kind()
    }

    fn column_all_null(&self, var_index: usize) -> bool {
        self.columns[var_index].all_null()
    }

    fn record(&self, index: usize) -> RecordRef<'_> {
        RecordRef { trace: self, index }
    }
}

/// Wraps a trace and counts how many times each record is read.
#[derive(Debug)]
pub struct CountingSource<'a> {
    trace: &'a Trace,
    reads: Vec<AtomicU32>,
}

impl<'a> CountingSource<'a> {
    pub fn new(trace: &'a Trace) -> Self {
        CountingSource {
            trace,
            reads: (0..trace.len()).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn reads(&self) -> Vec<u32> {
        self.reads.iter().map(|r| r.load(Ordering::Relaxed)).collect()
    }

    pub fn max_reads(&self) -> u32 {
        self.reads().into_iter().max().unwrap_or(0)
    }

    pub fn reset(&self) {
        for r in &self.reads {
            r.store(0, Ordering::Relaxed);
        }
    }
}

impl RecordSource for CountingSource<'_> {
    fn variables(&self) -> &[String] {
        self.trace.variables()
    }

    fn len(&self) -> usize {
        self.trace.len()
    }

    fn column_kind(&self, var_index: usize) -> ColumnKind {
        self.trace.column_kind(var_index)
    }

    fn column_all_null(&self, var_index: usize) -> bool {
        self.trace.column_all_null(var_index)
    }

    fn record(&self, index: usize) -> RecordRef<'_> {
        self.reads[index].fetch_add(1, Ordering::Relaxed);
        self.trace.record(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(matches!(
            Trace::from_columns(
                1.0,
                vec![
                    ("a".into(), vec![Some(1.0), None].into()),
                    ("b".into(), vec![Some(1.0)].into())
                ]
            ),
            Err(TraceError::Invalid(_))
        ));
        assert!(matches!(
            Trace::from_columns(1.0, vec![("a".into(), Vec::<Option<f64>>::new().into())]),
            Err(TraceError::EmptyTrace)
        ));
    }

    #[test]
    fn counting_source_counts() {
        let t = Trace::from_columns(1.0, vec![("a".into(), vec![Some(1.0), None].into())]).unwrap();
        let src = CountingSource::new(&t);
        assert_eq!(src.record(1).get(0), Value::Null);
        src.record(1);
        assert_eq!(src.reads(), vec![0, 2]);
    }
}
