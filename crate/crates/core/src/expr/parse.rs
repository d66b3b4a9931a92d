//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | "n" | "e" | "pi" | func "(" expr ")"
//!        | "L" "(" integer "," expr ")" | "(" expr ")"
//! ```

use std::fmt;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

use super::{Expr, Func, MAX_ITER_LOG};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// A token was found where none of `expected` could start.
    Unexpected { found: String, expected: Vec<&'static str> },
    UnknownIdentifier(String),
    BadIterLogDepth(String),
    BadNumber(String),
}

/// Parse failure with its byte offset and 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} (byte {}): ", self.line, self.column, self.offset)?;
        match &self.kind {
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "unexpected {found}; expected one of: {}", expected.join(", "))
            }
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::BadIterLogDepth(text) => {
                write!(f, "L(k, x) needs an integer depth 0..={MAX_ITER_LOG}, got `{text}`")
            }
            ParseErrorKind::BadNumber(text) => write!(f, "malformed number `{text}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Bad(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bad(c) => format!("character `{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Vec<(Tok, usize)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent only when a digit follows, so `2e` stays `2` then `e`.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Num(src[start..i].to_string()), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                i += ch.len_utf8();
                out.push((Tok::Bad(ch), start));
                continue;
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, src.len()));
    out
}

fn number_value(text: &str) -> Option<RBig> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(at) => (&text[..at], text[at + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() || frac_part.contains('.') {
        return None;
    }
    let digits: UBig = format!("{int_part}{frac_part}").parse().ok()?;
    let exp = exp - frac_part.len() as i64;
    if exp.unsigned_abs() > 10_000 {
        return None;
    }
    let scale = UBig::from(10u8).pow(exp.unsigned_abs() as usize);
    Some(if exp >= 0 {
        RBig::from(IBig::from(digits * scale))
    } else {
        RBig::from_parts(IBig::from(digits), scale)
    })
}

const OPERAND: &[&str] = &["number", "identifier", "`(`", "`-`"];
const AFTER_OPERAND: &[&str] = &["`+`", "`-`", "`*`", "`/`", "`^`"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    /// Closing tokens acceptable at the current nesting, for error reports.
    closers: Vec<&'static str>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let column = before[line_start..].chars().count() + 1;
        ParseError { kind, offset, line, column }
    }

    fn unexpected(&self, expected: Vec<&'static str>) -> ParseError {
        let found = self.peek().describe();
        self.error_at(self.offset(), ParseErrorKind::Unexpected { found, expected })
    }

    fn after_operand_expected(&self) -> Vec<&'static str> {
        let mut e = AFTER_OPERAND.to_vec();
        match self.closers.last() {
            Some(c) => e.push(c),
            None => e.push("end of input"),
        }
        e
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let mut expected = AFTER_OPERAND.to_vec();
            expected.push(name);
            Err(self.unexpected(expected))
        }
    }

    fn nested<T>(&mut self, closer: &'static str, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        self.closers.push(closer);
        let out = f(self);
        self.closers.pop();
        out
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            return Ok(Expr::pow(base, self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                number_value(&text)
                    .map(Expr::Num)
                    .ok_or_else(|| self.error_at(offset, ParseErrorKind::BadNumber(text)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.nested("`)`", |p| p.expr())?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "n" => Ok(Expr::Var),
                    "e" => Ok(Expr::E),
                    "pi" => Ok(Expr::Pi),
                    "L" => self.iter_log(),
                    other => match Func::from_name(other) {
                        Some(func) => {
                            self.expect_open()?;
                            let arg = self.nested("`)`", |p| p.expr())?;
                            self.expect(Tok::RParen, "`)`")?;
                            Ok(Expr::call(func, arg))
                        }
                        None => Err(self.error_at(offset, ParseErrorKind::UnknownIdentifier(name))),
                    },
                }
            }
            _ => Err(self.unexpected(OPERAND.to_vec())),
        }
    }

    fn expect_open(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(vec!["`(`"]))
        }
    }

    fn iter_log(&mut self) -> Result<Expr, ParseError> {
        self.expect_open()?;
        let offset = self.offset();
        let depth = match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                match text.parse::<u32>() {
                    Ok(k) if k <= MAX_ITER_LOG => k,
                    _ => return Err(self.error_at(offset, ParseErrorKind::BadIterLogDepth(text))),
                }
            }
            _ => return Err(self.unexpected(vec!["integer depth"])),
        };
        if *self.peek() != Tok::Comma {
            return Err(self.unexpected(vec!["`,`"]));
        }
        self.bump();
        let arg = self.nested("`)`", |p| p.expr())?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::iter_log(depth, arg))
    }
}

pub(super) fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src, toks: lex(src), pos: 0, closers: Vec::new() };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected(p.after_operand_expected()));
    }
    Ok(e)
}
