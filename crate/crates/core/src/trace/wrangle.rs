//! Resampling of timestamped variable-value events onto a uniform grid.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Column, Trace, TraceError};

#[derive(Debug, Clone, PartialEq)]
pub enum EventValue {
    Num(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub timestamp: f64,
    pub var_name: String,
    pub value: EventValue,
}

impl RawEvent {
    pub fn num(timestamp: f64, var: &str, x: f64) -> Self {
        RawEvent {
            timestamp,
            var_name: var.to_string(),
            value: EventValue::Num(x),
        }
    }

    pub fn text(timestamp: f64, var: &str, s: &str) -> Self {
        RawEvent {
            timestamp,
            var_name: var.to_string(),
            value: EventValue::Str(s.to_string()),
        }
    }
}

/// Builds a uniform-timestep trace from unaligned events.
///
/// One record per `timestep` from the earliest to the latest event. Numeric
/// variables are linearly interpolated between the bracketing observations;
/// string variables carry the last observation forward. Before a variable's
/// first observation its value is NULL; after its last, the last value is
/// carried forward. An empty `variables` list selects every observed
/// variable, sorted by name.
pub fn wrangle(events: &[RawEvent], timestep: f64, variables: &[String]) -> Result<Trace, TraceError> {
    if !(timestep.is_finite() && timestep > 0.0) {
        return Err(TraceError::Invalid(format!("timestep must be positive, got {timestep}")));
    }
    let selected: Vec<String> = if variables.is_empty() {
        events
            .iter()
            .map(|e| e.var_name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        variables.to_vec()
    };

    let mut by_var: BTreeMap<&str, Vec<&RawEvent>> = selected.iter().map(|v| (v.as_str(), Vec::new())).collect();
    for e in events {
        if !(e.timestamp.is_finite() && e.timestamp >= 0.0) {
            return Err(TraceError::Invalid(format!(
                "event for `{}` has invalid timestamp {}",
                e.var_name, e.timestamp
            )));
        }
        if let Some(list) = by_var.get_mut(e.var_name.as_str()) {
            list.push(e);
        }
    }
    let observed = by_var.values().flatten();
    let (t_min, t_max) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.timestamp), hi.max(e.timestamp))
    });
    if !t_min.is_finite() {
        return Err(TraceError::EmptyTrace);
    }
    let count = ((t_max - t_min) / timestep + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| t_min + k as f64 * timestep).collect();

    let mut columns = Vec::with_capacity(selected.len());
    for name in &selected {
        let mut obs = by_var.remove(name.as_str()).unwrap_or_default();
        obs.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        let numeric = obs.iter().all(|e| matches!(e.value, EventValue::Num(_)));
        let textual = obs.iter().all(|e| matches!(e.value, EventValue::Str(_)));
        let column = match (numeric, textual) {
            (false, false) => return Err(TraceError::TypeConflict(name.clone())),
            (true, _) => Column::Numeric(resample(&obs, &grid, |e| match e.value {
                EventValue::Num(x) => x,
                EventValue::Str(_) => unreachable!(),
            }, |(t0, a), (t1, b), t| {
                if t1 == t0 {
                    b
                } else {
                    a + (b - a) * (t - t0) / (t1 - t0)
                }
            })),
            (false, true) => Column::Text(resample(&obs, &grid, |e| match &e.value {
                EventValue::Str(s) => s.clone(),
                EventValue::Num(_) => unreachable!(),
            }, |(_, a), _, _| a)),
        };
        columns.push((name.clone(), column));
    }
    Trace::from_columns(timestep, columns)
}

/// Walks the grid with a cursor over time-sorted observations. When several
/// observations share a timestamp, the last one wins.
fn resample<T: Clone>(
    obs: &[&RawEvent],
    grid: &[f64],
    value: impl Fn(&RawEvent) -> T,
    between: impl Fn((f64, T), (f64, T), f64) -> T,
) -> Vec<Option<T>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    for &t in grid {
        while next < obs.len() && obs[next].timestamp <= t {
            next += 1;
        }
        // obs[..next] are at or before t.
        let upcoming = obs.get(next).map(|first| {
            obs[next..]
                .iter()
                .take_while(|e| e.timestamp == first.timestamp)
                .last()
                .copied()
                .unwrap_or(first)
        });
        let v = match (next.checked_sub(1).map(|i| obs[i]), upcoming) {
            (None, _) => None,
            (Some(prev), _) if prev.timestamp == t => Some(value(prev)),
            (Some(prev), None) => Some(value(prev)),
            (Some(prev), Some(nxt)) => Some(between(
                (prev.timestamp, value(prev)),
                (nxt.timestamp, value(nxt)),
                t,
            )),
        };
        out.push(v);
    }
    out
}

/// Reads `timestamp,variable,value` rows (with that header). Values that
/// parse as finite numbers are numeric.
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<RawEvent>, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Fields)
        .from_path(path.as_ref())?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 3 {
        return Err(TraceError::Format {
            line: 1,
            message: "expected header `timestamp,variable,value`".into(),
        });
    }
    let mut events = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let err = |m: String| TraceError::Format { line, message: m };
        if rec.len() != 3 {
            return Err(err(format!("expected 3 cells, found {}", rec.len())));
        }
        let timestamp: f64 = rec[0].parse().map_err(|_| err(format!("bad timestamp `{}`", &rec[0])))?;
        if rec[2].is_empty() {
            return Err(err("empty value".into()));
        }
        let value = match rec[2].parse::<f64>() {
            Ok(x) if x.is_finite() => EventValue::Num(x),
            _ => EventValue::Str(rec[2].to_string()),
        };
        events.push(RawEvent {
            timestamp,
            var_name: rec[1].to_string(),
            value,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Value;
    use proptest::prelude::*;

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn linear_midpoint() {
        let t = wrangle(&[RawEvent::num(0.0, "x", 0.0), RawEvent::num(2.0, "x", 1.0)], 1.0, &vars(&["x"])).unwrap();
        assert_eq!(t.column("x").unwrap(), &Column::Numeric(vec![Some(0.0), Some(0.5), Some(1.0)]));
    }

    #[test]
    fn strings_carry_forward() {
        let t = wrangle(
            &[RawEvent::text(0.0, "phase", "Sweeping"), RawEvent::text(3.0, "phase", "TargetDet.")],
            1.0,
            &vars(&["phase"]),
        )
        .unwrap();
        let got: Vec<_> = (0..t.len()).map(|i| t.value("phase", i).unwrap()).collect();
        assert_eq!(
            got,
            vec![
                Value::Str("Sweeping"),
                Value::Str("Sweeping"),
                Value::Str("Sweeping"),
                Value::Str("TargetDet.")
            ]
        );
    }

    #[test]
    fn late_variable_is_null_then_carried() {
        // Hand-built oracle: grid 0,1,2,3; y first seen at t=2 and never again.
        let events = [
            RawEvent::num(0.0, "x", 1.0),
            RawEvent::num(3.0, "x", 4.0),
            RawEvent::num(2.0, "y", 7.0),
        ];
        let t = wrangle(&events, 1.0, &[]).unwrap();
        assert_eq!(t.variables(), &vars(&["x", "y"]));
        assert_eq!(
            t.column("y").unwrap(),
            &Column::Numeric(vec![None, None, Some(7.0), Some(7.0)])
        );
        assert_eq!(
            t.column("x").unwrap(),
            &Column::Numeric(vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)])
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(wrangle(&[], 1.0, &[]), Err(TraceError::EmptyTrace)));
        let mixed = [RawEvent::num(0.0, "x", 1.0), RawEvent::text(1.0, "x", "a")];
        assert!(matches!(wrangle(&mixed, 1.0, &[]), Err(TraceError::TypeConflict(v)) if v == "x"));
    }

    #[test]
    fn float_grid_length() {
        let t = wrangle(&[RawEvent::num(0.0, "x", 0.0), RawEvent::num(0.3, "x", 3.0)], 0.1, &[]).unwrap();
        assert_eq!(t.len(), 4);
    }

    proptest! {
        #[test]
        fn length_and_bounds(
            mut raw in proptest::collection::vec((0.0f64..100.0, -50.0f64..50.0), 1..40),
            dt in 0.05f64..5.0,
        ) {
            raw.sort_by(|a, b| a.0.total_cmp(&b.0));
            let events: Vec<RawEvent> = raw.iter().map(|&(t, x)| RawEvent::num(t, "x", x)).collect();
            let trace = wrangle(&events, dt, &[]).unwrap();
            let (lo, hi) = (raw[0].0, raw[raw.len() - 1].0);
            prop_assert_eq!(trace.len(), ((hi - lo) / dt + 1e-9).floor() as usize + 1);
            // Each value lies within its bracketing observations.
            for k in 0..trace.len() {
                let t = lo + k as f64 * dt;
                let Some(Value::Num(v)) = trace.value("x", k) else { panic!("null") };
                let before = raw.iter().rfind(|o| o.0 <= t).unwrap();
                let after = raw.iter().find(|o| o.0 >= t).unwrap_or(before);
                let (a, b) = (before.1.min(after.1), before.1.max(after.1));
                prop_assert!(v >= a - 1e-9 && v <= b + 1e-9, "{v} not in [{a}, {b}]");
            }
        }

        #[test]
        fn locf_never_invents(
            raw in proptest::collection::vec((0.0f64..20.0, 0usize..3), 1..30),
        ) {
            let names = ["Idle", "Sweep", "Land"];
            let events: Vec<RawEvent> = raw.iter().map(|&(t, k)| RawEvent::text(t, "m", names[k])).collect();
            let trace = wrangle(&events, 0.5, &[]).unwrap();
            for k in 0..trace.len() {
                if let Some(Value::Str(s)) = trace.value("m", k) {
                    prop_assert!(raw.iter().any(|&(_, j)| names[j] == s));
                }
            }
        }
    }
}
