use super::lexer::{tokenize, Tok, Token};
use super::{
    Constraint, Expr, Literal, PredicateDef, PredicateKind, SpecError, Specification,
    DEFAULT_MAX_GIVENS,
};

const KW_OUTCOMES: &str = "OUTCOMES";
const KW_GIVENS: &str = "GIVENS";
const KW_CONSTRAINTS: &str = "CONSTRAINTS";
const KW_MAX_GIVENS: &str = "MAX-GIVENS";
const KW_NULL: &str = "NULL";

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        KW_OUTCOMES | KW_GIVENS | KW_CONSTRAINTS | KW_MAX_GIVENS | KW_NULL
    )
}

/// Parses and validates a specification.
pub fn parse_spec(text: &str) -> Result<Specification, SpecError> {
    let tokens = tokenize(text)?;
    let spec = Parser { tokens, pos: 0 }.specification()?;
    spec.validate()?;
    Ok(spec)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> SpecError {
        SpecError::Syntax {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> SpecError {
        let tok = self.peek();
        let found = if tok.tok == Tok::Eof {
            "end of input".to_string()
        } else {
            format!("`{}`", tok.text)
        };
        self.error_at(tok, format!("expected {expected}, found {found}"))
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SpecError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn at_var_name(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if !is_keyword(s))
    }

    fn var_name(&mut self) -> Result<String, SpecError> {
        if self.at_var_name() {
            match self.bump().tok {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            }
        } else {
            Err(self.unexpected("a variable name"))
        }
    }

    fn specification(mut self) -> Result<Specification, SpecError> {
        let mut max_givens = DEFAULT_MAX_GIVENS;
        if self.at_keyword(KW_MAX_GIVENS) {
            self.bump();
            let tok = self.peek().clone();
            max_givens = self
                .integer()?
                .ok_or_else(|| self.error_at(&tok, "MAX-GIVENS needs an integer"))?;
        }
        self.expect_keyword(KW_OUTCOMES)?;
        let outcomes = self.pred_defs()?;
        self.expect_keyword(KW_GIVENS)?;
        let givens = self.pred_defs()?;
        let mut constraints = Vec::new();
        if self.at_keyword(KW_CONSTRAINTS) {
            self.bump();
            while self.at_keyword("P") {
                constraints.push(self.constraint()?);
            }
        }
        if self.peek().tok != Tok::Eof {
            let expected = if constraints.is_empty() && !self.at_keyword(KW_CONSTRAINTS) {
                "a predicate definition, CONSTRAINTS, or end of input"
            } else {
                "a constraint `P(outcome | givens)` or end of input"
            };
            return Err(self.unexpected(expected));
        }
        Ok(Specification {
            outcomes,
            givens,
            constraints,
            max_givens,
        })
    }

    fn pred_defs(&mut self) -> Result<Vec<PredicateDef>, SpecError> {
        let mut defs = Vec::new();
        while self.at_var_name() {
            defs.push(self.pred_def()?);
        }
        Ok(defs)
    }

    fn pred_def(&mut self) -> Result<PredicateDef, SpecError> {
        let var_name = self.var_name()?;
        self.expect(Tok::Comma, "`,` after variable name")?;

        let kind_tok = self.peek().clone();
        let kind = match &kind_tok.tok {
            Tok::Ident(s) => s
                .parse::<PredicateKind>()
                .map_err(|_| self.error_at(&kind_tok, format!("unknown predicate type `{s}`")))?,
            _ => return Err(self.unexpected("a predicate type such as DOUBLE-Range")),
        };
        self.bump();
        self.expect(Tok::Comma, "`,` after predicate type")?;

        let threshold = match self.peek().tok {
            Tok::Number(x) => {
                self.bump();
                Some(x)
            }
            _ => None,
        };
        self.expect(Tok::Comma, "`,` after threshold")?;

        let mut partitions = Vec::new();
        while self.at_var_name() || self.peek().tok == Tok::LParen {
            partitions.push(self.or_expr()?);
        }
        self.expect(Tok::Comma, "`,` after partitions")?;

        let window_tok = self.peek().clone();
        let window = self.integer()?;
        if let Some(0) = window {
            return Err(self.error_at(&window_tok, "window must be positive"));
        }

        Ok(PredicateDef {
            var_name,
            kind,
            threshold,
            partitions,
            window,
        })
    }

    /// An optional non-negative integer literal.
    fn integer(&mut self) -> Result<Option<usize>, SpecError> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Number(x) => {
                let ok = x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64;
                if !ok || tok.text.contains(['.', 'e', 'E']) {
                    return Err(self.error_at(&tok, format!("expected an integer, found `{}`", tok.text)));
                }
                self.bump();
                Ok(Some(x as usize))
            }
            _ => Ok(None),
        }
    }

    fn or_expr(&mut self) -> Result<Expr, SpecError> {
        let mut lhs = self.and_expr()?;
        while self.peek().tok == Tok::Or {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, SpecError> {
        let mut lhs = self.primary()?;
        while self.peek().tok == Tok::And {
            self.bump();
            let rhs = self.primary()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, SpecError> {
        if self.peek().tok == Tok::LParen {
            self.bump();
            let e = self.or_expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        let var = self.var_name()?;
        let op = match self.peek().tok {
            Tok::Op(op) => op,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        let literal = match self.peek().tok.clone() {
            Tok::Number(x) => Literal::Number(x),
            Tok::Str(s) => Literal::Str(s),
            Tok::Ident(s) if s == KW_NULL => Literal::Null,
            _ => return Err(self.unexpected("a number, string, or NULL")),
        };
        self.bump();
        Ok(Expr::Cmp { var, op, literal })
    }

    fn constraint(&mut self) -> Result<Constraint, SpecError> {
        self.expect_keyword("P")?;
        self.expect(Tok::LParen, "`(`")?;
        let outcome_var = self.var_name()?;
        self.expect(Tok::Pipe, "`|`")?;
        let mut given_vars = Vec::new();
        while self.at_var_name() {
            given_vars.push(self.var_name()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Constraint {
            outcome_var,
            given_vars,
        })
    }
}
