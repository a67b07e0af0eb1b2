//! Synthetic traces from a stochastic state machine with planted
//! conditional probabilities.
//!
//! ```toml
//! states = ["Sweep", "Target"]
//! transitions = [[0.95, 0.05], [0.10, 0.90]]
//!
//! [[categorical]]
//! name = "phase"
//! emissions = [{ Sweep = 1.0 }, { Target = 1.0 }]
//!
//! [[numeric]]
//! name = "speed"
//! mean = [2.0, 0.5]
//! std = [0.2, 0.1]
//!
//! [[plant]]
//! outcome = "alarm"
//! given = { phase = "Target" }
//! p = 0.8
//! q = 0.05
//! ```
//!
//! A plant emits an INT column that is 1 with probability `p` in states
//! where every given holds and with probability `q` elsewhere, so
//! `P(outcome == 1 | givens)` converges to `p`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Deserialize;
use thiserror::Error;

use crate::spec::{parse_spec, Specification};
use crate::trace::{Column, Trace};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CategoricalVar {
    pub name: String,
    /// Value weights per state.
    pub emissions: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct NumericVar {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Plant {
    pub outcome: String,
    pub given: BTreeMap<String, String>,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorModel {
    pub states: Vec<String>,
    pub transitions: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub categorical: Vec<CategoricalVar>,
    #[serde(default)]
    pub numeric: Vec<NumericVar>,
    #[serde(default, rename = "plant")]
    pub plants: Vec<Plant>,
}

const ROW_SUM_TOLERANCE: f64 = 1e-9;

fn check_weights(what: &str, w: &[f64]) -> Result<(), SynthError> {
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(invalid(format!("{what} has a negative or non-finite weight")));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(invalid(format!("{what} has no positive weight")));
    }
    Ok(())
}

impl GeneratorModel {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let model: GeneratorModel = toml::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let k = self.states.len();
        if k == 0 {
            return Err(invalid("no states"));
        }
        if self.transitions.len() != k {
            return Err(invalid(format!("transitions has {} rows for {k} states", self.transitions.len())));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if row.len() != k {
                return Err(invalid(format!("transition row {i} has {} entries", row.len())));
            }
            check_weights(&format!("transition row {i}"), row)?;
            if (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(invalid(format!("transition row {i} does not sum to 1")));
            }
        }
        if let Some(init) = &self.initial {
            if init.len() != k {
                return Err(invalid("initial weights do not match the states"));
            }
            check_weights("initial weights", init)?;
        }
        let mut names = std::collections::HashSet::new();
        let all_names = self
            .categorical
            .iter()
            .map(|c| &c.name)
            .chain(self.numeric.iter().map(|n| &n.name))
            .chain(self.plants.iter().map(|p| &p.outcome));
        for n in all_names {
            if !names.insert(n.as_str()) {
                return Err(invalid(format!("variable `{n}` defined twice")));
            }
        }
        for c in &self.categorical {
            if c.emissions.len() != k {
                return Err(invalid(format!("`{}` needs one emission table per state", c.name)));
            }
            for (s, e) in c.emissions.iter().enumerate() {
                let w: Vec<f64> = e.values().copied().collect();
                check_weights(&format!("`{}` in state {s}", c.name), &w)?;
            }
        }
        for n in &self.numeric {
            if n.mean.len() != k || n.std.len() != k {
                return Err(invalid(format!("`{}` needs a mean and std per state", n.name)));
            }
            if n.std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || n.mean.iter().any(|m| !m.is_finite()) {
                return Err(invalid(format!("`{}` has an invalid mean or std", n.name)));
            }
        }
        for p in &self.plants {
            if !(0.0..=1.0).contains(&p.p) || !(0.0..=1.0).contains(&p.q) {
                return Err(invalid(format!("plant `{}` probabilities must lie in [0, 1]", p.outcome)));
            }
            if p.given.is_empty() {
                return Err(invalid(format!("plant `{}` has no givens", p.outcome)));
            }
            for (var, value) in &p.given {
                let c = self
                    .categorical
                    .iter()
                    .find(|c| &c.name == var)
                    .ok_or_else(|| invalid(format!("plant given `{var}` is not a categorical variable")))?;
                if c.emissions.iter().any(|e| e.values().filter(|w| **w > 0.0).count() != 1) {
                    return Err(invalid(format!("plant given `{var}` must be emitted deterministically")));
                }
                if !c.emissions.iter().any(|e| e.get(value).is_some_and(|w| *w > 0.0)) {
                    return Err(invalid(format!("plant given `{var}` never emits `{value}`")));
                }
            }
            if (0..k).all(|s| !self.plant_holds(p, s)) {
                return Err(invalid(format!("plant `{}` givens never hold together", p.outcome)));
            }
        }
        Ok(())
    }

    /// The value a deterministic categorical variable emits in `state`.
    fn deterministic(&self, var: &str, state: usize) -> Option<&str> {
        let c = self.categorical.iter().find(|c| c.name == var)?;
        c.emissions[state]
            .iter()
            .find(|(_, w)| **w > 0.0)
            .map(|(v, _)| v.as_str())
    }

    fn plant_holds(&self, plant: &Plant, state: usize) -> bool {
        plant
            .given
            .iter()
            .all(|(var, value)| self.deterministic(var, state) == Some(value.as_str()))
    }

    /// A specification whose outcomes are the planted outcome atoms and
    /// whose givens enumerate every value of the planted given variables.
    pub fn planted_spec(&self, max_givens: usize) -> Specification {
        let mut text = format!("MAX-GIVENS {max_givens}\nOUTCOMES\n");
        for p in &self.plants {
            let _ = writeln!(text, "  {0}, INT-Eq, , {0} == 1  {0} == 0,", p.outcome);
        }
        text.push_str("GIVENS\n");
        let mut given_vars: Vec<&str> = self.plants.iter().flat_map(|p| p.given.keys().map(String::as_str)).collect();
        given_vars.sort_unstable();
        given_vars.dedup();
        for var in given_vars {
            let c = self.categorical.iter().find(|c| c.name == var).expect("validated");
            let mut values: Vec<&str> = c.emissions.iter().flat_map(|e| e.keys().map(String::as_str)).collect();
            values.sort_unstable();
            values.dedup();
            let parts: Vec<String> = values.iter().map(|v| format!("{var} == \"{v}\"")).collect();
            let _ = writeln!(text, "  {var}, STRING-Eq, , {},", parts.join("  "));
        }
        parse_spec(&text).expect("generated specification parses")
    }
}

/// Samples `length` records. The result depends only on the model, seed
/// and length.
pub fn generate(model: &GeneratorModel, seed: u64, length: usize) -> Result<Trace, SynthError> {
    model.validate()?;
    if length == 0 {
        return Err(invalid("length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = model.states.len();
    let init = WeightedIndex::new(model.initial.clone().unwrap_or_else(|| vec![1.0; k]))
        .map_err(|e| invalid(e.to_string()))?;
    let rows: Vec<WeightedIndex<f64>> = model
        .transitions
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let cats: Vec<Vec<(Vec<&String>, WeightedIndex<f64>)>> = model
        .categorical
        .iter()
        .map(|c| {
            c.emissions
                .iter()
                .map(|e| {
                    let (vals, ws): (Vec<&String>, Vec<f64>) = e.iter().map(|(v, w)| (v, *w)).unzip();
                    WeightedIndex::new(ws).map(|d| (vals, d)).map_err(|e| invalid(e.to_string()))
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let normals: Vec<Vec<Normal<f64>>> = model
        .numeric
        .iter()
        .map(|n| {
            n.mean
                .iter()
                .zip(&n.std)
                .map(|(m, s)| Normal::new(*m, *s).map_err(|e| invalid(e.to_string())))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let plant_states: Vec<Vec<bool>> = model
        .plants
        .iter()
        .map(|p| (0..k).map(|s| model.plant_holds(p, s)).collect())
        .collect();

    let mut cat_cols: Vec<Vec<Option<String>>> = vec![Vec::with_capacity(length); model.categorical.len()];
    let mut num_cols: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(length); model.numeric.len()];
    let mut plant_cols: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(length); model.plants.len()];

    let mut state = init.sample(&mut rng);
    for step in 0..length {
        if step > 0 {
            state = rows[state].sample(&mut rng);
        }
        for (col, per_state) in cat_cols.iter_mut().zip(&cats) {
            let (vals, dist) = &per_state[state];
            col.push(Some(vals[dist.sample(&mut rng)].clone()));
        }
        for (col, per_state) in num_cols.iter_mut().zip(&normals) {
            col.push(Some(per_state[state].sample(&mut rng)));
        }
        for ((col, plant), holds) in plant_cols.iter_mut().zip(&model.plants).zip(&plant_states) {
            let rate = if holds[state] { plant.p } else { plant.q };
            col.push(Some(if rng.random_bool(rate) { 1.0 } else { 0.0 }));
        }
    }

    let mut columns: Vec<(String, Column)> = Vec::new();
    for (c, col) in model.categorical.iter().zip(cat_cols) {
        columns.push((c.name.clone(), Column::Text(col)));
    }
    for (n, col) in model.numeric.iter().zip(num_cols) {
        columns.push((n.name.clone(), Column::Numeric(col)));
    }
    for (p, col) in model.plants.iter().zip(plant_cols) {
        columns.push((p.outcome.clone(), Column::Numeric(col)));
    }
    Trace::from_columns(1.0, columns).map_err(|e| invalid(e.to_string()))
}

/// Specification text for a scaling corpus of `vars` uniform numeric
/// variables, each split at 0.5 and used as both outcome and given.
pub fn scaling_spec(vars: usize, max_givens: usize) -> Specification {
    let defs: Vec<String> = (0..vars)
        .map(|v| format!("  v{v}, DOUBLE-Range, , v{v} < 0.5  v{v} >= 0.5,"))
        .collect();
    let body = defs.join("\n");
    parse_spec(&format!("MAX-GIVENS {max_givens}\nOUTCOMES\n{body}\nGIVENS\n{body}\n"))
        .expect("generated specification parses")
}

/// `vars` independent uniform `[0, 1)` columns named `v0`, `v1`, ...
pub fn scaling_trace(vars: usize, length: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(length); vars];
    for _ in 0..length {
        for c in cols.iter_mut() {
            c.push(Some(rng.random::<f64>()));
        }
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("v{i}"), Column::Numeric(c)))
        .collect();
    Trace::from_columns(1.0, columns).expect("non-empty corpus")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Value;

    pub(crate) const DRONE: &str = r#"
states = ["Sweep", "Target", "Land"]
transitions = [[0.90, 0.08, 0.02], [0.15, 0.80, 0.05], [0.30, 0.0, 0.70]]

[[categorical]]
name = "phase"
emissions = [{ Sweep = 1.0 }, { Target = 1.0 }, { Land = 1.0 }]

[[categorical]]
name = "cmd"
emissions = [{ Default = 0.9, Manual = 0.1 }, { Default = 0.95, Manual = 0.05 }, { Default = 1.0 }]

[[numeric]]
name = "speed"
mean = [2.0, 0.5, 0.1]
std = [0.2, 0.1, 0.05]

[[plant]]
outcome = "alarm"
given = { phase = "Target" }
p = 0.8
q = 0.05
"#;

    fn conditional(trace: &Trace, outcome: &str, var: &str, value: &str) -> (u64, u64) {
        let mut g = 0;
        let mut og = 0;
        for i in 0..trace.len() {
            if trace.value(var, i) == Some(Value::Str(value)) {
                g += 1;
                if trace.value(outcome, i) == Some(Value::Num(1.0)) {
                    og += 1;
                }
            }
        }
        (og, g)
    }

    #[test]
    fn planted_conditional_converges() {
        let model = GeneratorModel::from_toml(DRONE).unwrap();
        let trace = generate(&model, 7, 100_000).unwrap();
        let (og, g) = conditional(&trace, "alarm", "phase", "Target");
        let freq = og as f64 / g as f64;
        assert!((freq - 0.8).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn deterministic_per_seed() {
        let model = GeneratorModel::from_toml(DRONE).unwrap();
        assert_eq!(generate(&model, 3, 500).unwrap(), generate(&model, 3, 500).unwrap());
        assert_ne!(generate(&model, 3, 500).unwrap(), generate(&model, 4, 500).unwrap());
    }

    #[test]
    fn rejects_bad_models() {
        let bad_row = DRONE.replace("[0.90, 0.08, 0.02]", "[0.90, 0.08, 0.5]");
        assert!(matches!(GeneratorModel::from_toml(&bad_row), Err(SynthError::Invalid(_))));
        let noisy_given = DRONE.replace("given = { phase = \"Target\" }", "given = { cmd = \"Default\" }");
        assert!(matches!(GeneratorModel::from_toml(&noisy_given), Err(SynthError::Invalid(_))));
        let bad_p = DRONE.replace("p = 0.8", "p = 1.8");
        assert!(matches!(GeneratorModel::from_toml(&bad_p), Err(SynthError::Invalid(_))));
    }

    #[test]
    fn planted_spec_lists_atoms() {
        let model = GeneratorModel::from_toml(DRONE).unwrap();
        let spec = model.planted_spec(1);
        let (o, g) = spec.expand_predicates();
        assert_eq!(o.len(), 2);
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn scaling_corpus_shape() {
        let t = scaling_trace(5, 100, 1);
        assert_eq!(t.variables().len(), 5);
        assert_eq!(t.len(), 100);
        let (o, g) = scaling_spec(5, 2).expand_predicates();
        assert_eq!((o.len(), g.len()), (10, 10));
    }
}
