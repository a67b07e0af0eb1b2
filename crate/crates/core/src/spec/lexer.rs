use super::SpecError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Comma,
    LParen,
    RParen,
    Pipe,
    And,
    Or,
    Op(super::CmpOp),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '[' | ']')
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SpecError> {
    use super::CmpOp;

    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, column, message: String| SpecError::Syntax {
        line,
        column,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }

        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let mut push = |tok: Tok, len: usize, text: String| {
            out.push(Token {
                tok,
                text,
                line: start_line,
                column: start_col,
            });
            len
        };

        let consumed = match (c, two.as_str()) {
            (_, "&&") => push(Tok::And, 2, two.clone()),
            (_, "||") => push(Tok::Or, 2, two.clone()),
            (_, "==") => push(Tok::Op(CmpOp::Eq), 2, two.clone()),
            (_, "!=") => push(Tok::Op(CmpOp::Ne), 2, two.clone()),
            (_, "<=") => push(Tok::Op(CmpOp::Le), 2, two.clone()),
            (_, ">=") => push(Tok::Op(CmpOp::Ge), 2, two.clone()),
            ('≤', _) => push(Tok::Op(CmpOp::Le), 1, c.to_string()),
            ('≥', _) => push(Tok::Op(CmpOp::Ge), 1, c.to_string()),
            ('<', _) => push(Tok::Op(CmpOp::Lt), 1, c.to_string()),
            ('>', _) => push(Tok::Op(CmpOp::Gt), 1, c.to_string()),
            ('∧', _) => push(Tok::And, 1, c.to_string()),
            ('∨', _) => push(Tok::Or, 1, c.to_string()),
            (',', _) => push(Tok::Comma, 1, c.to_string()),
            ('(', _) => push(Tok::LParen, 1, c.to_string()),
            (')', _) => push(Tok::RParen, 1, c.to_string()),
            ('|', _) => push(Tok::Pipe, 1, c.to_string()),
            ('"', _) => {
                let mut j = i + 1;
                let mut s = String::new();
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(err(start_line, start_col, "unterminated string".into()))
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                other => {
                                    return Err(err(
                                        line,
                                        col + (j - i),
                                        format!("bad escape `\\{}`", other.copied().unwrap_or(' ')),
                                    ))
                                }
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                let text: String = chars[i..=j].iter().collect();
                push(Tok::Str(s), j + 1 - i, text)
            }
            _ if c.is_ascii_digit()
                || ((c == '-' || c == '+' || c == '.')
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == '.')) =>
            {
                let mut j = i + 1;
                while j < chars.len() {
                    let ch = chars[j];
                    let exp_sign =
                        (ch == '-' || ch == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| err(start_line, start_col, format!("malformed number `{text}`")))?;
                push(Tok::Number(value), j - i, text)
            }
            _ if is_ident_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_continue(chars[j]) {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push(Tok::Ident(text.clone()), j - i, text)
            }
            _ => return Err(err(start_line, start_col, format!("unexpected character `{c}`"))),
        };
        i += consumed;
        col += consumed;
    }
    out.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        line,
        column: col,
    });
    Ok(out)
}
