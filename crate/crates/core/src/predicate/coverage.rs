//! Decides whether a definition's partitions cover its variable's domain,
//! which fixes the uniform prior (an uncovered residual gets one share).

use std::collections::BTreeSet;

use crate::spec::{CmpOp, Expr, Literal, PredicateDef, ValueType};

use super::DEFAULT_TREND_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }
}

/// Sorted, disjoint union of intervals over the reals, or over the integers
/// when `integral` is set.
#[derive(Debug, Clone, PartialEq)]
struct NumSet {
    parts: Vec<Interval>,
    integral: bool,
}

impl NumSet {
    fn new(parts: Vec<Interval>, integral: bool) -> Self {
        let mut parts: Vec<Interval> = parts
            .into_iter()
            .map(|iv| if integral { to_integer_bounds(iv) } else { iv })
            .filter(|iv| !iv.is_empty())
            .collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::new();
        for iv in parts {
            if let Some(last) = merged.last_mut() {
                let touches = if integral {
                    iv.lo <= last.hi + 1.0
                } else {
                    iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed))
                };
                if touches {
                    if iv.hi > last.hi || (iv.hi == last.hi && iv.hi_closed) {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(iv);
        }
        NumSet {
            parts: merged,
            integral,
        }
    }

    fn full(integral: bool) -> Self {
        NumSet::new(vec![ray(f64::NEG_INFINITY, false, f64::INFINITY, false)], integral)
    }

    fn empty(integral: bool) -> Self {
        NumSet::new(vec![], integral)
    }

    fn union(&self, other: &NumSet) -> NumSet {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        NumSet::new(parts, self.integral)
    }

    fn intersect(&self, other: &NumSet) -> NumSet {
        let mut parts = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let (lo, lo_closed) = if a.lo > b.lo {
                    (a.lo, a.lo_closed)
                } else if b.lo > a.lo {
                    (b.lo, b.lo_closed)
                } else {
                    (a.lo, a.lo_closed && b.lo_closed)
                };
                let (hi, hi_closed) = if a.hi < b.hi {
                    (a.hi, a.hi_closed)
                } else if b.hi < a.hi {
                    (b.hi, b.hi_closed)
                } else {
                    (a.hi, a.hi_closed && b.hi_closed)
                };
                parts.push(Interval {
                    lo,
                    lo_closed,
                    hi,
                    hi_closed,
                });
            }
        }
        NumSet::new(parts, self.integral)
    }

    fn is_full(&self) -> bool {
        matches!(self.parts.as_slice(), [iv] if iv.lo == f64::NEG_INFINITY && iv.hi == f64::INFINITY)
    }
}

fn ray(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Interval {
    Interval {
        lo,
        lo_closed: lo_closed && lo.is_finite(),
        hi,
        hi_closed: hi_closed && hi.is_finite(),
    }
}

fn to_integer_bounds(iv: Interval) -> Interval {
    let lo = if iv.lo.is_finite() {
        if iv.lo_closed {
            iv.lo.ceil()
        } else {
            iv.lo.floor() + 1.0
        }
    } else {
        iv.lo
    };
    let hi = if iv.hi.is_finite() {
        if iv.hi_closed {
            iv.hi.floor()
        } else {
            iv.hi.ceil() - 1.0
        }
    } else {
        iv.hi
    };
    ray(lo, true, hi, true)
}

fn cmp_set(op: CmpOp, c: f64, tol: f64, integral: bool) -> NumSet {
    let inf = f64::INFINITY;
    let parts = match op {
        CmpOp::Eq => vec![ray(c - tol, true, c + tol, true)],
        CmpOp::Ne => vec![ray(-inf, false, c - tol, false), ray(c + tol, false, inf, false)],
        CmpOp::Lt => vec![ray(-inf, false, c - tol, false)],
        CmpOp::Le => vec![ray(-inf, false, c + tol, true)],
        CmpOp::Gt => vec![ray(c + tol, false, inf, false)],
        CmpOp::Ge => vec![ray(c - tol, true, inf, false)],
    };
    NumSet::new(parts, integral)
}

/// Finite set of strings, or the complement of one.
#[derive(Debug, Clone, PartialEq)]
enum StrSet {
    Finite(BTreeSet<String>),
    CoFinite(BTreeSet<String>),
}

impl StrSet {
    fn union(&self, other: &StrSet) -> StrSet {
        use StrSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.union(b).cloned().collect()),
            (CoFinite(a), CoFinite(b)) => CoFinite(a.intersection(b).cloned().collect()),
            (Finite(f), CoFinite(c)) | (CoFinite(c), Finite(f)) => {
                CoFinite(c.difference(f).cloned().collect())
            }
        }
    }

    fn intersect(&self, other: &StrSet) -> StrSet {
        use StrSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.intersection(b).cloned().collect()),
            (CoFinite(a), CoFinite(b)) => CoFinite(a.union(b).cloned().collect()),
            (Finite(f), CoFinite(c)) | (CoFinite(c), Finite(f)) => {
                Finite(f.difference(c).cloned().collect())
            }
        }
    }

    fn is_full(&self) -> bool {
        matches!(self, StrSet::CoFinite(s) if s.is_empty())
    }
}

fn num_expr_set(e: &Expr, tol: f64, integral: bool) -> NumSet {
    match e {
        // NULL sits outside the value domain considered here.
        Expr::Cmp { op, literal: Literal::Null, .. } => match op {
            CmpOp::Ne => NumSet::full(integral),
            _ => NumSet::empty(integral),
        },
        Expr::Cmp { op, literal: Literal::Number(c), .. } => cmp_set(*op, *c, tol, integral),
        Expr::Cmp { .. } => NumSet::empty(integral),
        Expr::And(l, r) => num_expr_set(l, tol, integral).intersect(&num_expr_set(r, tol, integral)),
        Expr::Or(l, r) => num_expr_set(l, tol, integral).union(&num_expr_set(r, tol, integral)),
    }
}

fn str_expr_set(e: &Expr) -> StrSet {
    match e {
        Expr::Cmp { op, literal, .. } => {
            let one = |s: &str| [s.to_string()].into_iter().collect::<BTreeSet<_>>();
            match (op, literal) {
                (CmpOp::Eq, Literal::Str(s)) => StrSet::Finite(one(s)),
                (CmpOp::Ne, Literal::Str(s)) => StrSet::CoFinite(one(s)),
                (CmpOp::Ne, Literal::Null) => StrSet::CoFinite(BTreeSet::new()),
                _ => StrSet::Finite(BTreeSet::new()),
            }
        }
        Expr::And(l, r) => str_expr_set(l).intersect(&str_expr_set(r)),
        Expr::Or(l, r) => str_expr_set(l).union(&str_expr_set(r)),
    }
}

/// True when every non-NULL value of the variable satisfies at least one
/// partition. Trend partitions are judged on the derivative (or, for
/// strings, the change-to value) with the default trend tolerance.
pub fn partitions_cover_domain(def: &PredicateDef) -> bool {
    if def.partitions.is_empty() {
        return false;
    }
    match def.kind.value_type() {
        ValueType::String => def
            .partitions
            .iter()
            .map(str_expr_set)
            .reduce(|a, b| a.union(&b))
            .is_some_and(|s| s.is_full()),
        ty => {
            // Derivatives of integer series are real-valued.
            let integral = ty == ValueType::Int && !def.kind.is_trend();
            let tol = if def.kind.is_trend() {
                DEFAULT_TREND_EPSILON
            } else {
                def.threshold.unwrap_or(0.0)
            };
            def.partitions
                .iter()
                .map(|p| num_expr_set(p, tol, integral))
                .reduce(|a, b| a.union(&b))
                .is_some_and(|s| s.is_full())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    fn covers(def: &str) -> bool {
        let spec = parse_spec(&format!("OUTCOMES {def} GIVENS z, INT-Eq, , z == 0,")).unwrap();
        partitions_cover_domain(&spec.outcomes[0])
    }

    #[test]
    fn real_ranges() {
        assert!(covers("v, DOUBLE-Range, , v < 0.01  v >= 0.01 && v < 0.25  v >= 0.25,"));
        assert!(!covers("v, DOUBLE-Range, , v < 0.01  v > 0.01,"));
        assert!(covers("v, DOUBLE-Range, , v <= 0.01  v > 0.01,"));
        assert!(!covers("v, DOUBLE-Range, , v < 0.01  v >= 0.02,"));
        assert!(covers("v, DOUBLE-Range, , v < 1 || v > 5  v >= 1 && v <= 5,"));
    }

    #[test]
    fn integer_ranges() {
        assert!(covers("v, INT-Range, , v <= 1  v >= 2,"));
        assert!(!covers("v, DOUBLE-Range, , v <= 1  v >= 2,"));
        assert!(covers("v, INT-Eq, , v == 1  v != 1,"));
        assert!(!covers("v, INT-Eq, , v == 1  v == 2  v == 3  v == 4,"));
    }

    #[test]
    fn fuzzy_equality_band() {
        assert!(covers("v, DOUBLE-Eq, 0.1, v == 1  v < 1  v > 1,"));
        assert!(!covers("v, DOUBLE-Eq, 0.1, v == 1  v < 0.9  v > 1.1,"));
    }

    #[test]
    fn trend_sign_partitions() {
        assert!(covers("w, DOUBLE-Trend, , w < 0  w == 0  w > 0, 3"));
        assert!(!covers("w, DOUBLE-Trend, , w < 0  w > 0, 3"));
    }

    #[test]
    fn strings() {
        assert!(covers("m, STRING-Eq, , m == \"a\"  m != \"a\","));
        assert!(!covers("m, STRING-Eq, , m == \"a\"  m == \"b\","));
        assert!(covers("m, STRING-Eq, , m == \"a\" || m == \"b\"  m != \"a\" && m != \"b\","));
    }
}
