//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     := term {("+"|"-") term}
//! term     := unary {("*"|"/") unary}
//! unary    := ["-"|"+"] factor
//! factor   := base ["^" exponent]
//! exponent := ["-"] integer | "(" ["-"] integer ["/" integer] ")"
//! base     := number | ident {"'"} "(" expr ")" | ident | "(" expr ")"
//! ```

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::expr::scalar::Exp;
use crate::expr::{Expr, ExprError, Q};

/// Parse failure with a 1-based position and a caret excerpt.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub excerpt: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}\n{}", self.line, self.column, self.message, self.excerpt)
    }
}

/// Variable naming used by the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Vars {
    /// `x`, `u`, `u1`, `ux`, ...
    #[default]
    XU,
    /// `y`, `v`, `v1`, `vy`, ... (read as `x`, `u`, ... ); used by transform specs.
    YV,
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub vars: Vars,
    pub max_jet: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { vars: Vars::XU, max_jet: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes: Vec<(usize, char)> = src.char_indices().collect();
        let mut i = 0;
        while i < bytes.len() {
            let (pos, c) = bytes[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|p| p.1.is_ascii_digit())) {
                let start = pos;
                while i < bytes.len() && (bytes[i].1.is_ascii_digit() || bytes[i].1 == '.') {
                    i += 1;
                }
                let end = bytes.get(i).map_or(src.len(), |p| p.0);
                let text = &src[start..end];
                let q = parse_decimal(text).ok_or_else(|| error_at(src, start, format!("malformed number `{text}`")))?;
                lx.toks.push((Tok::Num(q), start));
            } else if is_ident_start(c) {
                let start = pos;
                while i < bytes.len() && (bytes[i].1.is_ascii_alphanumeric() || bytes[i].1 == '_') {
                    i += 1;
                }
                let end = bytes.get(i).map_or(src.len(), |p| p.0);
                lx.toks.push((Tok::Ident(src[start..end].to_string()), start));
            } else if "+-*/^()'".contains(c) {
                lx.toks.push((Tok::Op(c), pos));
                i += 1;
            } else {
                return Err(error_at(src, pos, format!("unexpected character `{c}`")));
            }
        }
        lx.toks.push((Tok::End, lx.src.len()));
        Ok(lx.toks)
    }
}

fn parse_decimal(text: &str) -> Option<Q> {
    let mut parts = text.split('.');
    let int = parts.next()?;
    let frac = parts.next().unwrap_or("");
    if parts.next().is_some() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Some(Q::new(n, d))
}

fn error_at(src: &str, offset: usize, message: String) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let column = src[line_start..offset.min(src.len())].chars().count() + 1;
    let line_text = src[line_start..].lines().next().unwrap_or("");
    let excerpt = format!("{line_text}\n{}^", " ".repeat(column - 1));
    ParseError { message, line, column, excerpt }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    opts: &'a ParseOptions,
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

    fn err(&self, message: impl Into<String>) -> ParseError {
        error_at(self.src, self.offset(), message.into())
    }

    fn err_at(&self, offset: usize, message: impl Into<String>) -> ParseError {
        error_at(self.src, offset, message.into())
    }

    fn lift(&self, offset: usize, r: Result<Expr, ExprError>) -> Result<Expr, ParseError> {
        r.map_err(|e| self.err_at(offset, e.to_string()))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    let at = self.offset();
                    let d = self.unary()?;
                    acc = self.lift(at, acc.div(&d))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(self.factor()?.neg())
            }
            Tok::Op('+') => {
                self.bump();
                self.factor()
            }
            _ => self.factor(),
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        let base = self.base()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let e = self.exponent()?;
            return self.lift(at, base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let neg = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(q) if q.is_integer() => {
                let n: i64 = q.to_integer().try_into().map_err(|_| self.err("exponent too large"))?;
                Ok(if neg { -n } else { n })
            }
            _ => {
                self.pos -= 1;
                Err(self.err("exponent not rational: expected an integer or (p/q)"))
            }
        }
    }

    fn exponent(&mut self) -> Result<Exp, ParseError> {
        if *self.peek() == Tok::Op('(') {
            self.bump();
            let n = self.integer()?;
            let d = if *self.peek() == Tok::Op('/') {
                self.bump();
                self.integer()?
            } else {
                1
            };
            if d == 0 {
                return Err(self.err("zero denominator in exponent"));
            }
            self.expect(')')?;
            Ok(Exp::new(n, d))
        } else {
            Ok(Exp::from_integer(self.integer()?))
        }
    }

    fn jet_name(&self, name: &str) -> Option<Result<u32, String>> {
        let (dep, ind) = match self.opts.vars {
            Vars::XU => ('u', 'x'),
            Vars::YV => ('v', 'y'),
        };
        let rest = name.strip_prefix(dep)?;
        if rest.is_empty() {
            return Some(Ok(0));
        }
        if rest.chars().all(|c| c.is_ascii_digit()) {
            let n: u32 = match rest.parse() {
                Ok(n) => n,
                Err(_) => return Some(Err(format!("jet order in `{name}` too large"))),
            };
            if n > self.opts.max_jet {
                return Some(Err(format!("jet order {n} exceeds the bound {}", self.opts.max_jet)));
            }
            return Some(Ok(n));
        }
        if rest.chars().all(|c| c == ind) {
            return Some(Ok(rest.len() as u32));
        }
        if rest.chars().all(|c| c.is_ascii_lowercase()) && rest.starts_with(ind) {
            return Some(Err(format!("unknown alias `{name}`")));
        }
        None
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(q) => Ok(Expr::rational(q)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let mut primes = 0u32;
                while *self.peek() == Tok::Op('\'') {
                    self.bump();
                    primes += 1;
                }
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    let arg_at = self.offset();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return self.call(&name, primes, arg, at, arg_at);
                }
                if primes > 0 {
                    return Err(self.err("expected `(` after a primed function name"));
                }
                self.ident(&name, at)
            }
            Tok::End => {
                self.pos = self.toks.len() - 1;
                Err(self.err_at(at, "unexpected end of input"))
            }
            Tok::Op(c) => Err(self.err_at(at, format!("unexpected `{c}`"))),
        }
    }

    fn ident(&self, name: &str, at: usize) -> Result<Expr, ParseError> {
        let indep = match self.opts.vars {
            Vars::XU => "x",
            Vars::YV => "y",
        };
        if name == indep {
            return Ok(Expr::x());
        }
        if let Some(r) = self.jet_name(name) {
            return r.map(Expr::jet).map_err(|m| self.err_at(at, m));
        }
        let reserved: &[&str] = match self.opts.vars {
            Vars::XU => &["t", "exp", "sqrt", "tanh"],
            Vars::YV => &["t", "x", "u", "exp", "sqrt", "tanh"],
        };
        if reserved.contains(&name) {
            return Err(self.err_at(at, format!("`{name}` is reserved")));
        }
        Ok(Expr::param(name))
    }

    fn call(&self, name: &str, primes: u32, arg: Expr, at: usize, arg_at: usize) -> Result<Expr, ParseError> {
        let builtin = matches!(name, "exp" | "sqrt" | "tanh");
        if builtin && primes > 0 {
            return Err(self.err_at(at, format!("`{name}` cannot be primed")));
        }
        match name {
            "exp" => self.lift(arg_at, Expr::exp(&arg)),
            "sqrt" => self.lift(arg_at, arg.pow(Exp::new(1, 2))),
            "tanh" => {
                // tanh(w) = (e^(2w) - 1) / (e^(2w) + 1)
                let r = Expr::exp(&arg.scale(&Q::from_integer(2.into()))).and_then(|e2| {
                    let one = Expr::one();
                    e2.sub(&one).div(&e2.add(&one))
                });
                self.lift(arg_at, r)
            }
            _ => {
                if self.jet_name(name).is_some() || name == "x" || name == "y" || name == "t" {
                    return Err(self.err_at(at, format!("`{name}` is not a function")));
                }
                self.lift(arg_at, Expr::func(name, primes, arg))
            }
        }
    }
}

/// Parses an expression with the default `x`/`u` naming.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    parse_expr_with(src, &ParseOptions::default())
}

pub fn parse_expr_with(src: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { src, toks, pos: 0, opts };
    if *p.peek() == Tok::End {
        return Err(p.err("empty expression"));
    }
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_caret_is_a_syntax_error() {
        let e = parse_expr("u^^2").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        assert!(e.excerpt.ends_with("  ^"), "{}", e.excerpt);
    }

    #[test]
    fn aliases_and_jets() {
        assert_eq!(parse_expr("uxx + u2").unwrap(), Expr::jet(2).scale(&Q::from_integer(2.into())));
        assert!(parse_expr("uxy").is_err());
        assert!(parse_expr("u21").is_err());
    }

    #[test]
    fn fractional_exponents() {
        let e = parse_expr("(u1 + 1)^(1/2) * (u1 + 1)^(1/2)").unwrap();
        assert_eq!(e, parse_expr("u1 + 1").unwrap());
        assert!(parse_expr("u^x").is_err());
    }

    #[test]
    fn primed_function() {
        let e = parse_expr("P''(u)").unwrap();
        assert_eq!(e, Expr::func("P", 2, Expr::u()).unwrap());
    }
}
