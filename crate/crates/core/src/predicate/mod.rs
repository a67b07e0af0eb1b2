//! Evaluation of Equality, Range and Trend predicates over trace records.

mod coverage;
mod trend;

use std::fmt;

use thiserror::Error;

use crate::spec::{CmpOp, Expr, Literal, Pattern, PredicateKind};
use crate::trace::{RecordSource, Value};

pub use coverage::partitions_cover_domain;
pub use trend::{trend_derivative, velocity_change};

/// Tolerance below which a trend derivative counts as zero.
pub const DEFAULT_TREND_EPSILON: f64 = 1e-6;

/// Three-valued predicate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    True,
    False,
    Undefined,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }

    pub fn is_defined(self) -> bool {
        self != Truth::Undefined
    }

    fn and(self, rhs: Truth) -> Truth {
        match (self, rhs) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Undefined,
        }
    }

    fn or(self, rhs: Truth) -> Truth {
        match (self, rhs) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Undefined,
        }
    }
}

/// How a Trend predicate summarizes its window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TrendFunction {
    /// Derivative of the least-squares quadratic at the window midpoint.
    #[default]
    QuadraticSlope,
    /// Last value minus first value of the window.
    EndpointDifference,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("predicate `{predicate}` expects {expected} values but `{var}` holds {found}")]
    TypeMismatch {
        predicate: String,
        var: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("trace has no variable `{0}`")]
    UnknownVariable(String),
    #[error("timestep {index} is outside a trace of length {len}")]
    OutOfRange { index: usize, len: usize },
}

/// One evaluable atom: a single partition of a predicate definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    /// Stable key, also used to index the prior store.
    pub id: String,
    pub var_name: String,
    pub kind: PredicateKind,
    pub expr: Expr,
    pub delta: Option<f64>,
    pub window: Option<usize>,
    pub trend_epsilon: f64,
    pub trend_fn: TrendFunction,
}

impl Predicate {
    pub fn new(
        var_name: String,
        kind: PredicateKind,
        expr: Expr,
        delta: Option<f64>,
        window: Option<usize>,
        trend_epsilon: f64,
        trend_fn: TrendFunction,
    ) -> Self {
        let mut p = Predicate {
            id: String::new(),
            var_name,
            kind,
            expr,
            delta,
            window,
            trend_epsilon,
            trend_fn,
        };
        p.id = p.compute_id();
        p
    }

    pub fn with_trend_fn(mut self, trend_fn: TrendFunction) -> Self {
        self.trend_fn = trend_fn;
        self.id = self.compute_id();
        self
    }

    pub fn with_trend_epsilon(mut self, eps: f64) -> Self {
        self.trend_epsilon = eps;
        self.id = self.compute_id();
        self
    }

    fn compute_id(&self) -> String {
        let mut tags = Vec::new();
        if let Some(d) = self.delta {
            tags.push(format!("d={d}"));
        }
        if self.kind.is_trend() {
            if let Some(w) = self.window {
                tags.push(format!("w={w}"));
            }
            if self.trend_fn == TrendFunction::EndpointDifference {
                tags.push("endpoint".to_string());
            }
            if self.trend_epsilon != DEFAULT_TREND_EPSILON {
                tags.push(format!("eps={}", self.trend_epsilon));
            }
        }
        if tags.is_empty() {
            self.expr.to_string()
        } else {
            format!("{}[{}]", self.expr, tags.join(","))
        }
    }

    /// Number of consecutive records the predicate looks at.
    pub fn span(&self) -> usize {
        if self.kind.is_trend() {
            self.window.unwrap_or(1).max(1)
        } else {
            1
        }
    }

    /// Evaluates over the `span()` values ending at the current timestep
    /// (oldest first). A shorter slice means the window runs off the start
    /// of the trace.
    pub fn eval_window(&self, window: &[Value<'_>]) -> Result<Truth, EvalError> {
        let span = self.span();
        if window.len() < span {
            return Ok(Truth::Undefined);
        }
        let window = &window[window.len() - span..];
        let current = window[span - 1];
        self.check_type(current)?;
        match self.kind.pattern() {
            Pattern::Equality | Pattern::Range => Ok(self.eval_expr(&self.expr, current)),
            Pattern::Trend if self.kind.is_numeric() => {
                let mut values = Vec::with_capacity(span);
                for v in window {
                    match *v {
                        Value::Num(x) => values.push(x),
                        Value::Null => return Ok(self.trend_null_case(current)),
                        Value::Str(_) => return Err(self.mismatch("numeric", "strings")),
                    }
                }
                let d = match self.trend_fn {
                    TrendFunction::QuadraticSlope => trend_derivative(&values),
                    TrendFunction::EndpointDifference => values[span - 1] - values[0],
                };
                Ok(self.eval_derivative(&self.expr, current, d))
            }
            Pattern::Trend => {
                if window.iter().any(|v| matches!(v, Value::Null)) {
                    return Ok(self.trend_null_case(current));
                }
                Ok(self.eval_string_change(&self.expr, window[0], current))
            }
        }
    }

    fn check_type(&self, v: Value<'_>) -> Result<(), EvalError> {
        match (self.kind.is_numeric(), v) {
            (true, Value::Str(_)) => Err(self.mismatch("numeric", "strings")),
            (false, Value::Num(_)) => Err(self.mismatch("string", "numbers")),
            _ => Ok(()),
        }
    }

    fn mismatch(&self, expected: &'static str, found: &'static str) -> EvalError {
        EvalError::TypeMismatch {
            predicate: self.id.clone(),
            var: self.var_name.clone(),
            expected,
            found,
        }
    }

    /// NULL inside a trend window leaves everything undefined except explicit
    /// NULL tests on the current value.
    fn trend_null_case(&self, current: Value<'_>) -> Truth {
        fn go(e: &Expr, current: Value<'_>) -> Truth {
            match e {
                Expr::Cmp { op, literal: Literal::Null, .. } => null_test(*op, current),
                Expr::Cmp { .. } => Truth::Undefined,
                Expr::And(l, r) => go(l, current).and(go(r, current)),
                Expr::Or(l, r) => go(l, current).or(go(r, current)),
            }
        }
        go(&self.expr, current)
    }

    fn eval_expr(&self, e: &Expr, v: Value<'_>) -> Truth {
        match e {
            Expr::Cmp { op, literal, .. } => self.eval_cmp(*op, literal, v),
            Expr::And(l, r) => self.eval_expr(l, v).and(self.eval_expr(r, v)),
            Expr::Or(l, r) => self.eval_expr(l, v).or(self.eval_expr(r, v)),
        }
    }

    fn eval_cmp(&self, op: CmpOp, literal: &Literal, v: Value<'_>) -> Truth {
        match (literal, v) {
            (Literal::Null, _) => null_test(op, v),
            (_, Value::Null) => Truth::Undefined,
            (Literal::Number(c), Value::Num(x)) => {
                Truth::from_bool(compare_num(op, x, *c, self.delta.unwrap_or(0.0)))
            }
            (Literal::Str(c), Value::Str(s)) => Truth::from_bool(match op {
                CmpOp::Eq => s == c,
                CmpOp::Ne => s != c,
                _ => false,
            }),
            // Type agreement is checked before evaluation.
            _ => Truth::Undefined,
        }
    }

    fn eval_derivative(&self, e: &Expr, current: Value<'_>, d: f64) -> Truth {
        match e {
            Expr::Cmp { op, literal: Literal::Null, .. } => null_test(*op, current),
            Expr::Cmp { op, literal: Literal::Number(c), .. } => {
                Truth::from_bool(compare_num(*op, d, *c, self.trend_epsilon))
            }
            Expr::Cmp { .. } => Truth::Undefined,
            Expr::And(l, r) => self
                .eval_derivative(l, current, d)
                .and(self.eval_derivative(r, current, d)),
            Expr::Or(l, r) => self
                .eval_derivative(l, current, d)
                .or(self.eval_derivative(r, current, d)),
        }
    }

    /// `v == "X"` on a string trend: the window ends at X and started elsewhere.
    fn eval_string_change(&self, e: &Expr, first: Value<'_>, last: Value<'_>) -> Truth {
        match e {
            Expr::Cmp { op, literal: Literal::Null, .. } => null_test(*op, last),
            Expr::Cmp { op, literal: Literal::Str(c), .. } => {
                let changed_to = matches!((first, last), (Value::Str(a), Value::Str(b)) if b == c && a != c);
                Truth::from_bool(match op {
                    CmpOp::Eq => changed_to,
                    _ => !changed_to,
                })
            }
            Expr::Cmp { .. } => Truth::Undefined,
            Expr::And(l, r) => self
                .eval_string_change(l, first, last)
                .and(self.eval_string_change(r, first, last)),
            Expr::Or(l, r) => self
                .eval_string_change(l, first, last)
                .or(self.eval_string_change(r, first, last)),
        }
    }
}

fn null_test(op: CmpOp, v: Value<'_>) -> Truth {
    let is_null = matches!(v, Value::Null);
    match op {
        CmpOp::Eq => Truth::from_bool(is_null),
        CmpOp::Ne => Truth::from_bool(!is_null),
        _ => Truth::Undefined,
    }
}

/// Comparison with tolerance `tol` on the equality boundary: `==` holds
/// within ±tol, and the strict orderings exclude that band.
fn compare_num(op: CmpOp, x: f64, c: f64, tol: f64) -> bool {
    match op {
        CmpOp::Eq => (x - c).abs() <= tol,
        CmpOp::Ne => (x - c).abs() > tol,
        CmpOp::Lt => x < c - tol,
        CmpOp::Gt => x > c + tol,
        CmpOp::Le => x <= c + tol,
        CmpOp::Ge => x >= c - tol,
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// Evaluates `pred` at timestep `index`, reading the window straight from
/// the source. The streaming engine in `inference` avoids these repeated
/// reads; this entry point is the reference semantics.
pub fn eval<S: RecordSource + ?Sized>(
    pred: &Predicate,
    source: &S,
    index: usize,
) -> Result<Truth, EvalError> {
    let len = source.len();
    if index >= len {
        return Err(EvalError::OutOfRange { index, len });
    }
    let col = source
        .variable_index(&pred.var_name)
        .ok_or_else(|| EvalError::UnknownVariable(pred.var_name.clone()))?;
    let span = pred.span();
    let start = (index + 1).saturating_sub(span);
    let window: Vec<Value<'_>> = (start..=index)
        .map(|i| source.record(i).get(col))
        .collect();
    pred.eval_window(&window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;
    use crate::trace::Trace;

    fn atom(src: &str) -> Predicate {
        let spec = parse_spec(&format!("OUTCOMES {src} GIVENS zz, INT-Eq, , zz == 0,")).unwrap();
        spec.expand_predicates().0.remove(0)
    }

    fn mission_trace() -> Trace {
        Trace::from_columns(
            1.0,
            vec![
                (
                    "missionPhase".into(),
                    ["Sweeping", "Sweeping", "Sweeping", "TargetDet.", "TargetDet."]
                        .iter()
                        .map(|s| Some(s.to_string()))
                        .collect::<Vec<_>>()
                        .into(),
                ),
                (
                    "y-vel".into(),
                    vec![Some(0.1), Some(0.2), Some(0.05), Some(0.0), Some(0.1)].into(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fuzzy_equality() {
        let p = atom("a, DOUBLE-Eq, 0.01, a == 9.8,");
        let t = |x: f64| p.eval_window(&[Value::Num(x)]).unwrap();
        assert_eq!(t(9.805), Truth::True);
        assert_eq!(t(9.82), Truth::False);
        assert_eq!(t(9.795), Truth::True);
    }

    #[test]
    fn mission_trace_vel_change() {
        let trace = mission_trace();
        for trend_fn in [TrendFunction::EndpointDifference, TrendFunction::QuadraticSlope] {
            let p = atom("y-vel, DOUBLE-Trend, , y-vel < 0, 3").with_trend_fn(trend_fn);
            let got: Vec<Truth> = (0..5).map(|i| eval(&p, &trace, i).unwrap()).collect();
            assert_eq!(
                got,
                vec![
                    Truth::Undefined,
                    Truth::Undefined,
                    Truth::True,
                    Truth::True,
                    Truth::False
                ],
                "{trend_fn:?}"
            );
        }
    }

    #[test]
    fn null_handling() {
        let p = atom("r, DOUBLE-Range, , r < 3,");
        assert_eq!(p.eval_window(&[Value::Null]).unwrap(), Truth::Undefined);
        let p = atom("r, DOUBLE-Eq, , r == NULL,");
        assert_eq!(p.eval_window(&[Value::Null]).unwrap(), Truth::True);
        assert_eq!(p.eval_window(&[Value::Num(1.0)]).unwrap(), Truth::False);
        let p = atom("r, DOUBLE-Range, , r == NULL || r > 3,");
        assert_eq!(p.eval_window(&[Value::Null]).unwrap(), Truth::True);
        let p = atom("r, DOUBLE-Range, , r != NULL && r > 3,");
        assert_eq!(p.eval_window(&[Value::Null]).unwrap(), Truth::False);
    }

    #[test]
    fn type_mismatch() {
        let p = atom("m, STRING-Eq, , m == \"x\",");
        assert!(matches!(
            p.eval_window(&[Value::Num(1.0)]),
            Err(EvalError::TypeMismatch { .. })
        ));
        let p = atom("m, INT-Eq, , m == 1,");
        assert!(matches!(
            p.eval_window(&[Value::Str("1")]),
            Err(EvalError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn trend_constant_band() {
        let parts = ["w < 0", "w == 0", "w > 0"];
        let preds: Vec<Predicate> = parts
            .iter()
            .map(|p| atom(&format!("w, DOUBLE-Trend, , {p}, 4")))
            .collect();
        let classify = |vals: &[f64]| -> Vec<bool> {
            let window: Vec<Value<'_>> = vals.iter().map(|&x| Value::Num(x)).collect();
            preds
                .iter()
                .map(|p| p.eval_window(&window).unwrap().is_true())
                .collect()
        };
        assert_eq!(classify(&[5.0, 5.0, 5.0, 5.0]), vec![false, true, false]);
        assert_eq!(classify(&[1.0, 2.0, 3.0, 4.0]), vec![false, false, true]);
        assert_eq!(classify(&[4.0, 3.0, 2.0, 1.0]), vec![true, false, false]);
        assert_eq!(classify(&[5.0, 5.0 + 1e-8, 5.0, 5.0]), vec![false, true, false]);
    }

    #[test]
    fn string_trend_detects_change() {
        let p = atom("mode, STRING-Trend, , mode == \"Manual\", 2");
        let eval2 = |a: &str, b: &str| p.eval_window(&[Value::Str(a), Value::Str(b)]).unwrap();
        assert_eq!(eval2("Auto", "Manual"), Truth::True);
        assert_eq!(eval2("Manual", "Manual"), Truth::False);
        assert_eq!(eval2("Manual", "Auto"), Truth::False);
    }

    #[test]
    fn short_window_is_undefined() {
        let p = atom("w, DOUBLE-Trend, , w > 0, 3");
        assert_eq!(
            p.eval_window(&[Value::Num(1.0), Value::Num(2.0)]).unwrap(),
            Truth::Undefined
        );
    }
}
