//! Predicate-space specification language.
//!
//! A specification lists the predicates to explore as outcomes and givens,
//! plus optional constraints that whitelist outcome/given variable pairings.
//!
//! ```text
//! MAX-GIVENS 2                       # optional, defaults to 5
//! OUTCOMES
//!   sensor.status, INT-Eq, , sensor.status == 4,
//! GIVENS
//!   y-velocity, DOUBLE-Range, , y-velocity < 0.01  y-velocity >= 0.01 && y-velocity < 0.25,
//!   accel, DOUBLE-Eq, 0.01, accel == 9.8,
//!   wheel, DOUBLE-Trend, , wheel < 0  wheel == 0  wheel > 0, 3
//! CONSTRAINTS
//!   P(sensor.status | y-velocity accel)
//! ```
//!
//! Each predicate definition is `var, TYPE, threshold, partitions, window`,
//! where threshold and window may be empty. Partitions are expressions placed
//! one after another; `&&`/`∧` binds tighter than `||`/`∨` and parentheses
//! group. Literals are numbers, double-quoted strings, or `NULL`. `#` starts a
//! comment that runs to the end of the line.

mod lexer;
mod parser;
mod render;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::predicate::{Predicate, TrendFunction, DEFAULT_TREND_EPSILON};

pub use parser::parse_spec;

/// Default upper bound on the number of given atoms per invariant.
pub const DEFAULT_MAX_GIVENS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Int,
    Double,
    String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Equality,
    Range,
    Trend,
}

/// The nine predicate types of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredicateKind {
    IntEq,
    DoubleEq,
    StringEq,
    IntRange,
    DoubleRange,
    StringRange,
    IntTrend,
    DoubleTrend,
    StringTrend,
}

impl PredicateKind {
    pub const ALL: [PredicateKind; 9] = [
        PredicateKind::IntEq,
        PredicateKind::DoubleEq,
        PredicateKind::StringEq,
        PredicateKind::IntRange,
        PredicateKind::DoubleRange,
        PredicateKind::StringRange,
        PredicateKind::IntTrend,
        PredicateKind::DoubleTrend,
        PredicateKind::StringTrend,
    ];

    pub fn value_type(self) -> ValueType {
        use PredicateKind::*;
        match self {
            IntEq | IntRange | IntTrend => ValueType::Int,
            DoubleEq | DoubleRange | DoubleTrend => ValueType::Double,
            StringEq | StringRange | StringTrend => ValueType::String,
        }
    }

    pub fn pattern(self) -> Pattern {
        use PredicateKind::*;
        match self {
            IntEq | DoubleEq | StringEq => Pattern::Equality,
            IntRange | DoubleRange | StringRange => Pattern::Range,
            IntTrend | DoubleTrend | StringTrend => Pattern::Trend,
        }
    }

    pub fn is_trend(self) -> bool {
        self.pattern() == Pattern::Trend
    }

    pub fn is_numeric(self) -> bool {
        self.value_type() != ValueType::String
    }

    pub fn as_str(self) -> &'static str {
        use PredicateKind::*;
        match self {
            IntEq => "INT-Eq",
            DoubleEq => "DOUBLE-Eq",
            StringEq => "STRING-Eq",
            IntRange => "INT-Range",
            DoubleRange => "DOUBLE-Range",
            StringRange => "STRING-Range",
            IntTrend => "INT-Trend",
            DoubleTrend => "DOUBLE-Trend",
            StringTrend => "STRING-Trend",
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredicateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PredicateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Str(String),
    Null,
}

/// A partition expression: comparisons of the definition's variable against
/// literals, combined with conjunction and disjunction.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Cmp {
        var: String,
        op: CmpOp,
        literal: Literal,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn cmp(var: impl Into<String>, op: CmpOp, literal: Literal) -> Self {
        Expr::Cmp {
            var: var.into(),
            op,
            literal,
        }
    }

    pub fn and(self, rhs: Expr) -> Self {
        Expr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Expr) -> Self {
        Expr::Or(Box::new(self), Box::new(rhs))
    }

    /// Calls `f` on every comparison leaf, left to right.
    pub fn for_each_cmp<'a>(&'a self, f: &mut impl FnMut(&'a str, CmpOp, &'a Literal)) {
        match self {
            Expr::Cmp { var, op, literal } => f(var, *op, literal),
            Expr::And(l, r) | Expr::Or(l, r) => {
                l.for_each_cmp(f);
                r.for_each_cmp(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateDef {
    pub var_name: String,
    pub kind: PredicateKind,
    /// Fuzzy-equality tolerance, DOUBLE-Eq only.
    pub threshold: Option<f64>,
    pub partitions: Vec<Expr>,
    /// Window length in timesteps, Trend kinds only.
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub outcome_var: String,
    pub given_vars: Vec<String>,
}

impl Constraint {
    pub fn admits(&self, outcome_var: &str, given_var: &str) -> bool {
        self.outcome_var == outcome_var && self.given_vars.iter().any(|g| g == given_var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub outcomes: Vec<PredicateDef>,
    pub givens: Vec<PredicateDef>,
    pub constraints: Vec<Constraint>,
    pub max_givens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid specification: {0}")]
    Validation(String),
}

impl SpecError {
    fn validation(msg: impl Into<String>) -> Self {
        SpecError::Validation(msg.into())
    }
}

impl Specification {
    /// Checks the specification for completeness and consistency.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.max_givens == 0 {
            return Err(SpecError::validation("MAX-GIVENS must be at least 1"));
        }
        for (section, defs) in [("OUTCOMES", &self.outcomes), ("GIVENS", &self.givens)] {
            let mut seen = HashSet::new();
            for def in defs.iter() {
                if !seen.insert(def.var_name.as_str()) {
                    return Err(SpecError::validation(format!(
                        "variable `{}` declared twice in {section}",
                        def.var_name
                    )));
                }
                def.validate()?;
            }
            if defs.iter().all(|d| d.partitions.is_empty()) {
                return Err(SpecError::validation(format!(
                    "{section} declares no predicate partitions"
                )));
            }
        }
        for c in &self.constraints {
            if !self.outcomes.iter().any(|d| d.var_name == c.outcome_var) {
                return Err(SpecError::validation(format!(
                    "constraint names undeclared outcome variable `{}`",
                    c.outcome_var
                )));
            }
            if c.given_vars.is_empty() {
                return Err(SpecError::validation(format!(
                    "constraint on `{}` lists no given variables",
                    c.outcome_var
                )));
            }
            for g in &c.given_vars {
                if !self.givens.iter().any(|d| &d.var_name == g) {
                    return Err(SpecError::validation(format!(
                        "constraint names undeclared given variable `{g}`"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Materializes every partition expression as a predicate atom.
    pub fn expand_predicates(&self) -> (Vec<Predicate>, Vec<Predicate>) {
        let expand = |defs: &[PredicateDef]| -> Vec<Predicate> {
            defs.iter().flat_map(PredicateDef::atoms).collect()
        };
        (expand(&self.outcomes), expand(&self.givens))
    }

    /// Canonical source text; `parse_spec(&spec.render())` reproduces `spec`.
    pub fn render(&self) -> String {
        render::render_spec(self)
    }
}

impl PredicateDef {
    pub fn validate(&self) -> Result<(), SpecError> {
        let var = &self.var_name;
        let kind = self.kind;
        match (kind.is_trend(), self.window) {
            (true, None) => {
                return Err(SpecError::validation(format!(
                    "`{var}`: {kind} requires a window"
                )))
            }
            (true, Some(w)) if w < 2 => {
                return Err(SpecError::validation(format!(
                    "`{var}`: trend window must be at least 2, got {w}"
                )))
            }
            (false, Some(_)) => {
                return Err(SpecError::validation(format!(
                    "`{var}`: window is only allowed on Trend kinds"
                )))
            }
            _ => {}
        }
        if let Some(delta) = self.threshold {
            if kind != PredicateKind::DoubleEq {
                return Err(SpecError::validation(format!(
                    "`{var}`: threshold is only allowed on DOUBLE-Eq"
                )));
            }
            if !(delta.is_finite() && delta >= 0.0) {
                return Err(SpecError::validation(format!(
                    "`{var}`: threshold must be a non-negative number"
                )));
            }
        }
        for part in &self.partitions {
            let mut err = None;
            part.for_each_cmp(&mut |v, op, lit| {
                if err.is_some() {
                    return;
                }
                if v != var {
                    err = Some(format!(
                        "partition of `{var}` references foreign variable `{v}`"
                    ));
                    return;
                }
                match lit {
                    Literal::Null if !op.is_equality() => {
                        err = Some(format!("`{var}`: NULL only compares with == or !="));
                    }
                    Literal::Str(_) if kind.is_numeric() => {
                        err = Some(format!("`{var}`: {kind} compares against numbers"));
                    }
                    Literal::Number(_) if !kind.is_numeric() => {
                        err = Some(format!("`{var}`: {kind} compares against strings"));
                    }
                    Literal::Number(x) if !x.is_finite() => {
                        err = Some(format!("`{var}`: literal must be finite"));
                    }
                    _ if !kind.is_numeric() && !op.is_equality() => {
                        err = Some(format!("`{var}`: {kind} only supports == and !="));
                    }
                    _ => {}
                }
            });
            if let Some(msg) = err {
                return Err(SpecError::Validation(msg));
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> Vec<Predicate> {
        self.partitions
            .iter()
            .map(|expr| {
                Predicate::new(
                    self.var_name.clone(),
                    self.kind,
                    expr.clone(),
                    self.threshold,
                    self.window,
                    DEFAULT_TREND_EPSILON,
                    TrendFunction::QuadraticSlope,
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in PredicateKind::ALL {
            assert_eq!(k.as_str().parse::<PredicateKind>(), Ok(k));
        }
        assert!("FLOAT-Eq".parse::<PredicateKind>().is_err());
    }

    #[test]
    fn expand_counts_partitions() {
        let spec = parse_spec(
            "OUTCOMES v, DOUBLE-Range, , v < 0.01  v >= 0.01 && v < 0.25  v >= 0.25, \
             GIVENS w, DOUBLE-Trend, , w < 0 w == 0 w > 0, 3 \
             u, INT-Eq, , u == 1,",
        )
        .unwrap();
        let (outs, givens) = spec.expand_predicates();
        assert_eq!(outs.len(), 3);
        assert!(outs.iter().all(|p| p.kind == PredicateKind::DoubleRange));
        assert_eq!(givens.len(), 4);
        assert!(givens[..3].iter().all(|p| p.window == Some(3)));
        assert_eq!(givens[3].window, None);
    }

    #[test]
    fn atom_ids_are_stable_and_distinct() {
        let spec = parse_spec(
            "OUTCOMES a, DOUBLE-Eq, 0.01, a == 9.8  a != 9.8, \
             GIVENS b, DOUBLE-Trend, , b > 0, 4",
        )
        .unwrap();
        let (o1, g1) = spec.expand_predicates();
        let (o2, g2) = spec.expand_predicates();
        assert_eq!(o1[0].id, o2[0].id);
        assert_ne!(o1[0].id, o1[1].id);
        assert_eq!(g1[0].id, g2[0].id);
        assert!(g1[0].id.contains("w=4"));
        assert!(o1[0].id.contains("d=0.01"));
    }
}
