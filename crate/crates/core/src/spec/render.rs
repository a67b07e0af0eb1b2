use std::fmt::{self, Write};

use super::{Expr, Literal, PredicateDef, Specification, DEFAULT_MAX_GIVENS};

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(x) => write!(f, "{x}"),
            Literal::Null => f.write_str("NULL"),
            Literal::Str(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => f.write_char(c)?,
                    }
                }
                f.write_char('"')
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Cmp { var, op, literal } => write!(f, "{var} {} {literal}", op.as_str()),
            Expr::Or(l, r) => {
                write!(f, "{l} || ")?;
                match **r {
                    Expr::Or(..) => write!(f, "({r})"),
                    _ => write!(f, "{r}"),
                }
            }
            Expr::And(l, r) => {
                match **l {
                    Expr::Or(..) => write!(f, "({l})")?,
                    _ => write!(f, "{l}")?,
                }
                f.write_str(" && ")?;
                match **r {
                    Expr::Cmp { .. } => write!(f, "{r}"),
                    _ => write!(f, "({r})"),
                }
            }
        }
    }
}

impl fmt::Display for PredicateDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, ", self.var_name, self.kind)?;
        if let Some(t) = self.threshold {
            write!(f, "{t}")?;
        }
        f.write_str(", ")?;
        for (i, p) in self.partitions.iter().enumerate() {
            if i > 0 {
                f.write_str("  ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(",")?;
        if let Some(w) = self.window {
            write!(f, " {w}")?;
        }
        Ok(())
    }
}

pub(super) fn render_spec(spec: &Specification) -> String {
    let mut out = String::new();
    if spec.max_givens != DEFAULT_MAX_GIVENS {
        let _ = writeln!(out, "MAX-GIVENS {}", spec.max_givens);
    }
    out.push_str("OUTCOMES\n");
    for d in &spec.outcomes {
        let _ = writeln!(out, "  {d}");
    }
    out.push_str("GIVENS\n");
    for d in &spec.givens {
        let _ = writeln!(out, "  {d}");
    }
    out.push_str("CONSTRAINTS\n");
    for c in &spec.constraints {
        let _ = writeln!(out, "  P({} | {})", c.outcome_var, c.given_vars.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_spec, CmpOp, Constraint, PredicateKind};
    use super::*;
    use proptest::prelude::*;

    fn leaf(var: &str) -> impl Strategy<Value = Expr> {
        let var = var.to_string();
        (
            prop_oneof![
                Just(CmpOp::Eq),
                Just(CmpOp::Ne),
                Just(CmpOp::Lt),
                Just(CmpOp::Gt),
                Just(CmpOp::Le),
                Just(CmpOp::Ge)
            ],
            prop_oneof![
                (-1e6f64..1e6).prop_map(Literal::Number),
                (-100i32..100).prop_map(|x| Literal::Number(x as f64)),
            ],
        )
            .prop_map(move |(op, literal)| Expr::cmp(var.clone(), op, literal))
    }

    fn expr(var: &'static str) -> impl Strategy<Value = Expr> {
        leaf(var).prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner).prop_map(|(a, b)| a.or(b)),
            ]
        })
    }

    fn string_def(var: &'static str) -> impl Strategy<Value = PredicateDef> {
        let lit = prop_oneof![
            "[a-zA-Z \"\\\\.]{0,8}".prop_map(Literal::Str),
            Just(Literal::Null)
        ];
        let leaf = (prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Ne)], lit)
            .prop_map(move |(op, l)| Expr::cmp(var, op, l));
        (proptest::collection::vec(leaf, 1..4), any::<bool>()).prop_map(move |(partitions, trend)| {
            PredicateDef {
                var_name: var.into(),
                kind: if trend {
                    PredicateKind::StringTrend
                } else {
                    PredicateKind::StringEq
                },
                threshold: None,
                partitions,
                window: trend.then_some(2),
            }
        })
    }

    fn numeric_def(var: &'static str) -> impl Strategy<Value = PredicateDef> {
        (
            prop_oneof![
                Just(PredicateKind::IntEq),
                Just(PredicateKind::DoubleEq),
                Just(PredicateKind::IntRange),
                Just(PredicateKind::DoubleRange),
                Just(PredicateKind::IntTrend),
                Just(PredicateKind::DoubleTrend),
            ],
            proptest::collection::vec(expr(var), 1..4),
            0.0f64..1.0,
            2usize..50,
        )
            .prop_map(move |(kind, partitions, delta, w)| PredicateDef {
                var_name: var.into(),
                kind,
                threshold: (kind == PredicateKind::DoubleEq).then_some(delta),
                partitions,
                window: kind.is_trend().then_some(w),
            })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(
            a in numeric_def("x-vel"),
            b in string_def("mode"),
            c in numeric_def("sensor.status"),
            max_givens in 1usize..8,
            constrained in any::<bool>(),
        ) {
            let constraints = if constrained {
                vec![Constraint { outcome_var: "x-vel".into(), given_vars: vec!["mode".into(), "sensor.status".into()] }]
            } else {
                vec![]
            };
            let spec = Specification {
                outcomes: vec![a],
                givens: vec![b, c],
                constraints,
                max_givens,
            };
            spec.validate().unwrap();
            let text = spec.render();
            let back = parse_spec(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, spec);
        }
    }
}
