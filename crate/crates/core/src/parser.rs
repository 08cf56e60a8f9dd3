//! Recursive-descent parser for the formula text grammar:
//!
//! ```text
//! formula := disj
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" weights? unary)*  |  unary "&" weights
//! weights := "^{" real ("," real)* "}"
//! unary   := "!" unary | "G[" int "," int "]" unary | "F[" int "," int "]" unary
//!          | "(" formula ")" | pred | "true" | "false"
//! pred    := var cmp real        var := "x" int      cmp := "<=" | ">"
//! ```
//!
//! A weight list belongs to the whole n-ary conjunction and is written after
//! its first `&`. A weighted conjunction with a single operand is written
//! `(φ &^{w})`. Variables are one-based in text.

use std::fmt;

use crate::error::FormulaError;
use crate::formula::{BoxPredicate, Comparator, Conjunct, Formula, Interval};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    Semantic {
        line: usize,
        column: usize,
        message: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Semantic { line, .. } => *line,
        }
    }

    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { column, .. } | ParseError::Semantic { column, .. } => *column,
        }
    }

    /// Multi-line diagnostic with the offending source line and a caret.
    pub fn render(&self, source: &str) -> String {
        let text = source.lines().nth(self.line() - 1).unwrap_or("");
        let pad = " ".repeat(self.column().saturating_sub(1));
        format!("{self}\n  | {text}\n  | {pad}^")
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax {
                line,
                column,
                expected,
                found,
            } => write!(
                f,
                "syntax error at {line}:{column}: expected {}, found {found}",
                expected.join(" or ")
            ),
            ParseError::Semantic { line, column, message } => {
                write!(f, "invalid formula at {line}:{column}: {message}")
            }
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bang,
    Amp,
    Pipe,
    Caret,
    Le,
    Gt,
    Always,
    Eventually,
    True,
    False,
    Var(String),
    Number(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("`x{v}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Caret => "^",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Always => "G",
            Tok::Eventually => "F",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Var(_) | Tok::Number(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
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
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            '^' => Some(Tok::Caret),
            '>' => Some(Tok::Gt),
            _ => None,
        };
        let (tok, len) = if let Some(tok) = single {
            (tok, 1)
        } else if c == '<' {
            if chars.get(i + 1) == Some(&'=') {
                (Tok::Le, 2)
            } else {
                return Err(ParseError::Syntax {
                    line: start_line,
                    column: start_col,
                    expected: vec!["`<=`".into()],
                    found: "`<`".into(),
                });
            }
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            (Tok::Number(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_alphabetic() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_alphanumeric() {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = match word.as_str() {
                "G" => Tok::Always,
                "F" => Tok::Eventually,
                "true" => Tok::True,
                "false" => Tok::False,
                w if w.len() > 1 && w.starts_with('x') && w[1..].bytes().all(|b| b.is_ascii_digit()) => {
                    Tok::Var(w[1..].to_string())
                }
                _ => {
                    return Err(ParseError::Syntax {
                        line: start_line,
                        column: start_col,
                        expected: vec!["formula".into()],
                        found: format!("`{word}`"),
                    })
                }
            };
            (tok, j - i)
        } else {
            return Err(ParseError::Syntax {
                line: start_line,
                column: start_col,
                expected: vec!["formula".into()],
                found: format!("`{c}`"),
            });
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
        i += len;
        col += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }

    fn semantic<T>(at: &Spanned, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Semantic {
            line: at.line,
            column: at.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.syntax(&[&format!("`{}`", tok.text())])
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut operands = vec![self.conj()?];
        while self.peek().tok == Tok::Pipe {
            self.bump();
            operands.push(self.conj()?);
        }
        Ok(Formula::or(operands))
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut operands = vec![self.unary()?];
        let mut weights: Option<(Spanned, Vec<f64>)> = None;
        while self.peek().tok == Tok::Amp {
            let amp = self.bump();
            if self.peek().tok == Tok::Caret {
                if weights.is_some() || operands.len() > 1 {
                    return Self::semantic(&amp, "weights must follow the first `&` of a conjunction");
                }
                weights = Some((amp, self.weights()?));
                if operands.len() == 1 && matches!(self.peek().tok, Tok::RParen | Tok::Eof) {
                    break;
                }
            }
            operands.push(self.unary()?);
        }
        match weights {
            None => Ok(Formula::and(operands)),
            Some((at, w)) => match Formula::weighted_and(operands, w) {
                Ok(f) => Ok(f),
                Err(e) => Self::semantic(&at, e.to_string()),
            },
        }
    }

    fn weights(&mut self) -> Result<Vec<f64>, ParseError> {
        self.expect(Tok::Caret)?;
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            let at = self.peek().clone();
            let w = self.real()?;
            if !(w.is_finite() && w > 0.0) {
                return Self::semantic(&at, FormulaError::Weight(w).to_string());
            }
            out.push(w);
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(out);
                }
                _ => return self.syntax(&["`,`", "`}`"]),
            }
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().tok.clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Always | Tok::Eventually => {
                let op = self.bump();
                self.expect(Tok::LBracket)?;
                let start_at = self.peek().clone();
                let start = self.integer()?;
                self.expect(Tok::Comma)?;
                let end = self.integer()?;
                self.expect(Tok::RBracket)?;
                let interval = match Interval::new(start, end) {
                    Ok(i) => i,
                    Err(e) => return Self::semantic(&start_at, e.to_string()),
                };
                let child = self.unary()?;
                Ok(match op.tok {
                    Tok::Always => Formula::Always(interval, Box::new(child)),
                    _ => Formula::Eventually(interval, Box::new(child)),
                })
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::Const(true))
            }
            Tok::False => {
                self.bump();
                Ok(Formula::Const(false))
            }
            Tok::Var(index) => {
                let at = self.bump();
                let variable = match index.parse::<usize>() {
                    Ok(v) if v >= 1 => v - 1,
                    _ => return Self::semantic(&at, format!("variable index `x{index}` must be at least 1")),
                };
                let cmp = match self.peek().tok {
                    Tok::Le => Comparator::Le,
                    Tok::Gt => Comparator::Gt,
                    _ => return self.syntax(&["`<=`", "`>`"]),
                };
                self.bump();
                let value_at = self.peek().clone();
                let threshold = self.real()?;
                match BoxPredicate::new(vec![Conjunct::new(variable, cmp, threshold)]) {
                    Ok(b) => Ok(Formula::Pred(b)),
                    Err(e) => Self::semantic(&value_at, e.to_string()),
                }
            }
            _ => self.syntax(&["`!`", "`G`", "`F`", "`(`", "predicate", "`true`", "`false`"]),
        }
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        if let Tok::Number(text) = &self.peek().tok {
            if let Ok(v) = text.parse::<usize>() {
                self.bump();
                return Ok(v);
            }
        }
        self.syntax(&["non-negative integer"])
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        if let Tok::Number(text) = &self.peek().tok {
            if let Ok(v) = text.parse::<f64>() {
                if v.is_finite() {
                    self.bump();
                    return Ok(v);
                }
            }
        }
        self.syntax(&["real number"])
    }
}

/// Parses formula text into its canonical AST.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if p.peek().tok != Tok::Eof {
        return p.syntax(&["`&`", "`|`", "end of input"]);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Comparator::*;

    fn atom(j: usize, cmp: Comparator, pi: f64) -> Formula {
        Formula::atom(j, cmp, pi).unwrap()
    }

    #[test]
    fn parses_box_under_always() {
        let f = parse("G[2,26]((x2 > 21.31) & (x1 > 11.10))").unwrap();
        let expected = Formula::always(2, 26, Formula::and(vec![atom(1, Gt, 21.31), atom(0, Gt, 11.10)])).unwrap();
        assert_eq!(f, expected);
        match f {
            Formula::Always(_, c) => assert!(matches!(*c, Formula::Pred(ref b) if b.len() == 2)),
            _ => panic!("expected Always"),
        }
    }

    #[test]
    fn parses_interval_box() {
        let f = parse("F[15,20]((x1 > 40) & (x1 <= 47))").unwrap();
        let b = BoxPredicate::new(vec![Conjunct::new(0, Gt, 40.0), Conjunct::new(0, Le, 47.0)]).unwrap();
        assert_eq!(f, Formula::eventually(15, 20, Formula::Pred(b)).unwrap());
    }

    #[test]
    fn parses_degenerate_interval_and_constants() {
        assert_eq!(parse("G[0,0](x1 <= 0)").unwrap(), Formula::always(0, 0, atom(0, Le, 0.0)).unwrap());
        assert_eq!(parse(" true ").unwrap(), Formula::Const(true));
        assert_eq!(parse("!false").unwrap(), Formula::not(Formula::Const(false)));
    }

    #[test]
    fn parses_weights() {
        let f = parse("(x1 > 1 &^{2.71,2.88} G[0,3] x2 <= -1e-3)").unwrap();
        let expected = Formula::weighted_and(
            vec![atom(0, Gt, 1.0), Formula::always(0, 3, atom(1, Le, -1e-3)).unwrap()],
            vec![2.71, 2.88],
        )
        .unwrap();
        assert_eq!(f, expected);
        let single = parse("((x1 > 1.0) &^{0.5})").unwrap();
        assert_eq!(single, Formula::weighted_and(vec![atom(0, Gt, 1.0)], vec![0.5]).unwrap());
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let f = parse("x1 > 0 | x2 > 0 & x3 > 0").unwrap();
        let expected = Formula::or(vec![
            atom(0, Gt, 0.0),
            Formula::and(vec![atom(1, Gt, 0.0), atom(2, Gt, 0.0)]),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn semantic_errors() {
        let e = parse("G[5,2](x1 <= 0)").unwrap_err();
        assert!(matches!(e, ParseError::Semantic { line: 1, column: 3, .. }), "{e:?}");
        let e = parse("(x1 > 0 &^{1,0} x2 > 0)").unwrap_err();
        assert!(matches!(e, ParseError::Semantic { .. }), "{e:?}");
        let e = parse("(x1 > 0 &^{1,2,3} x2 > 0)").unwrap_err();
        assert!(matches!(e, ParseError::Semantic { .. }), "{e:?}");
        let e = parse("x0 > 1").unwrap_err();
        assert!(matches!(e, ParseError::Semantic { .. }), "{e:?}");
    }

    #[test]
    fn syntax_errors_carry_location_and_expectations() {
        let e = parse("G[1,2](x1 < 3)").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, column: 11, .. }), "{e:?}");
        let e = parse("(x1 > 3").unwrap_err();
        match &e {
            ParseError::Syntax { expected, found, .. } => {
                assert!(expected.contains(&"`)`".to_string()));
                assert_eq!(found, "end of input");
            }
            _ => panic!("{e:?}"),
        }
        let e = parse("x1 > 3\n  & & x2 > 1").unwrap_err();
        assert_eq!((e.line(), e.column()), (2, 5));
        let rendered = e.render("x1 > 3\n  & & x2 > 1");
        assert!(rendered.ends_with("  |     ^"), "{rendered}");
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(parse("true false").is_err());
        assert!(parse("").is_err());
    }
}
