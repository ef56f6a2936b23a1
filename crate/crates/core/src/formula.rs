//! Formulas with least and greatest fixed points.
//!
//! Bound variables are de Bruijn indices: `Var(0)` refers to the nearest
//! enclosing binder. Formulas are kept in positive form and negation is a
//! function over the syntax tree.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    One,
    Bot,
    Top,
    Zero,
    Tensor(Arc<Formula>, Arc<Formula>),
    Par(Arc<Formula>, Arc<Formula>),
    Plus(Arc<Formula>, Arc<Formula>),
    With(Arc<Formula>, Arc<Formula>),
    Mu(Arc<Formula>),
    Nu(Arc<Formula>),
    Var(u32),
}

/// Binary connectives that can be rebuilt from two occurrences.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Connective {
    Tensor,
    Par,
    Plus,
    With,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Binder {
    Mu,
    Nu,
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    pub fn tensor(a: Formula, b: Formula) -> Self {
        Formula::Tensor(Arc::new(a), Arc::new(b))
    }

    pub fn par(a: Formula, b: Formula) -> Self {
        Formula::Par(Arc::new(a), Arc::new(b))
    }

    pub fn plus(a: Formula, b: Formula) -> Self {
        Formula::Plus(Arc::new(a), Arc::new(b))
    }

    pub fn with(a: Formula, b: Formula) -> Self {
        Formula::With(Arc::new(a), Arc::new(b))
    }

    pub fn mu(body: Formula) -> Self {
        Formula::Mu(Arc::new(body))
    }

    pub fn nu(body: Formula) -> Self {
        Formula::Nu(Arc::new(body))
    }

    pub fn binary(c: Connective, a: Formula, b: Formula) -> Self {
        match c {
            Connective::Tensor => Formula::tensor(a, b),
            Connective::Par => Formula::par(a, b),
            Connective::Plus => Formula::plus(a, b),
            Connective::With => Formula::with(a, b),
        }
    }

    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::NegAtom(a.clone()),
            Formula::NegAtom(a) => Formula::Atom(a.clone()),
            Formula::One => Formula::Bot,
            Formula::Bot => Formula::One,
            Formula::Top => Formula::Zero,
            Formula::Zero => Formula::Top,
            Formula::Tensor(a, b) => Formula::par(a.negate(), b.negate()),
            Formula::Par(a, b) => Formula::tensor(a.negate(), b.negate()),
            Formula::Plus(a, b) => Formula::with(a.negate(), b.negate()),
            Formula::With(a, b) => Formula::plus(a.negate(), b.negate()),
            Formula::Mu(b) => Formula::nu(b.negate()),
            Formula::Nu(b) => Formula::mu(b.negate()),
            Formula::Var(n) => Formula::Var(*n),
        }
    }

    pub fn binder(&self) -> Option<(Binder, &Formula)> {
        match self {
            Formula::Mu(b) => Some((Binder::Mu, b)),
            Formula::Nu(b) => Some((Binder::Nu, b)),
            _ => None,
        }
    }

    pub fn is_fixpoint(&self) -> bool {
        self.binder().is_some()
    }

    pub fn split_binary(&self) -> Option<(Connective, &Formula, &Formula)> {
        match self {
            Formula::Tensor(a, b) => Some((Connective::Tensor, a, b)),
            Formula::Par(a, b) => Some((Connective::Par, a, b)),
            Formula::Plus(a, b) => Some((Connective::Plus, a, b)),
            Formula::With(a, b) => Some((Connective::With, a, b)),
            _ => None,
        }
    }

    /// One-step unfolding `σX.φ ↦ φ[σX.φ/X]`; `None` on non-fixed points.
    pub fn unfold(&self) -> Option<Formula> {
        match self {
            Formula::Mu(b) | Formula::Nu(b) => Some(subst(b, 0, self)),
            _ => None,
        }
    }

    /// Name of the first additive connective met in a preorder walk.
    pub fn additive_connective(&self) -> Option<&'static str> {
        match self {
            Formula::Top => Some("top"),
            Formula::Zero => Some("0"),
            Formula::Plus(..) => Some("+"),
            Formula::With(..) => Some("&"),
            Formula::Tensor(a, b) | Formula::Par(a, b) => {
                a.additive_connective().or_else(|| b.additive_connective())
            }
            Formula::Mu(b) | Formula::Nu(b) => b.additive_connective(),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.max_free(0).is_none()
    }

    fn max_free(&self, depth: u32) -> Option<u32> {
        match self {
            Formula::Var(n) if *n >= depth => Some(n - depth),
            Formula::Tensor(a, b)
            | Formula::Par(a, b)
            | Formula::Plus(a, b)
            | Formula::With(a, b) => match (a.max_free(depth), b.max_free(depth)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Formula::Mu(b) | Formula::Nu(b) => b.max_free(depth + 1),
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Tensor(a, b)
            | Formula::Par(a, b)
            | Formula::Plus(a, b)
            | Formula::With(a, b) => 1 + a.size() + b.size(),
            Formula::Mu(b) | Formula::Nu(b) => 1 + b.size(),
            _ => 1,
        }
    }
}

/// Replace index `depth` by the closed formula `repl`, lowering the
/// indices of binders that sit outside the substituted one.
pub fn subst(f: &Formula, depth: u32, repl: &Formula) -> Formula {
    match f {
        Formula::Var(n) if *n == depth => repl.clone(),
        Formula::Var(n) if *n > depth => Formula::Var(n - 1),
        Formula::Tensor(a, b) => Formula::tensor(subst(a, depth, repl), subst(b, depth, repl)),
        Formula::Par(a, b) => Formula::par(subst(a, depth, repl), subst(b, depth, repl)),
        Formula::Plus(a, b) => Formula::plus(subst(a, depth, repl), subst(b, depth, repl)),
        Formula::With(a, b) => Formula::with(subst(a, depth, repl), subst(b, depth, repl)),
        Formula::Mu(b) => Formula::mu(subst(b, depth + 1, repl)),
        Formula::Nu(b) => Formula::nu(subst(b, depth + 1, repl)),
        other => other.clone(),
    }
}

// ---------------------------------------------------------------- printing

const VAR_NAMES: [&str; 3] = ["X", "Y", "Z"];

fn var_name(depth: u32) -> String {
    let base = VAR_NAMES[(depth % 3) as usize];
    match depth / 3 {
        0 => base.to_string(),
        k => format!("{base}{k}"),
    }
}

fn level(f: &Formula) -> u8 {
    match f {
        Formula::Par(..) | Formula::Plus(..) => 1,
        Formula::Tensor(..) | Formula::With(..) => 2,
        Formula::Mu(_) | Formula::Nu(_) => 0,
        _ => 3,
    }
}

fn write_formula(f: &Formula, depth: u32, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(a),
        Formula::NegAtom(a) => {
            out.push('~');
            out.push_str(a);
        }
        Formula::One => out.push('1'),
        Formula::Bot => out.push_str("bot"),
        Formula::Top => out.push_str("top"),
        Formula::Zero => out.push('0'),
        Formula::Var(n) => {
            if *n < depth {
                out.push_str(&var_name(depth - 1 - n));
            } else {
                out.push_str(&format!("?{n}"));
            }
        }
        Formula::Mu(b) | Formula::Nu(b) => {
            out.push_str(if matches!(f, Formula::Mu(_)) { "mu " } else { "nu " });
            out.push_str(&var_name(depth));
            out.push_str(". ");
            write_formula(b, depth + 1, out);
        }
        Formula::Tensor(a, b) | Formula::Par(a, b) | Formula::Plus(a, b) | Formula::With(a, b) => {
            let op = match f {
                Formula::Tensor(..) => " * ",
                Formula::Par(..) => " | ",
                Formula::Plus(..) => " + ",
                _ => " & ",
            };
            let me = level(f);
            let left_paren = level(a) <= me;
            let right_paren = level(b) < me;
            write_operand(a, depth, left_paren, out);
            out.push_str(op);
            write_operand(b, depth, right_paren, out);
        }
    }
}

fn write_operand(f: &Formula, depth: u32, paren: bool, out: &mut String) {
    if paren {
        out.push('(');
        write_formula(f, depth, out);
        out.push(')');
    } else {
        write_formula(f, depth, out);
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(self, 0, &mut s);
        f.write_str(&s)
    }
}

// ----------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula syntax error at column {column}: {message}")]
pub struct FormulaError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Tilde,
    LParen,
    RParen,
    Star,
    Bar,
    PlusOp,
    Amp,
    Dot,
    One,
    Zero,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
                continue;
            }
            '~' => out.push((col, Tok::Tilde)),
            '(' => out.push((col, Tok::LParen)),
            ')' => out.push((col, Tok::RParen)),
            '*' => out.push((col, Tok::Star)),
            '|' => out.push((col, Tok::Bar)),
            '+' => out.push((col, Tok::PlusOp)),
            '&' => out.push((col, Tok::Amp)),
            '.' => out.push((col, Tok::Dot)),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((col, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            '1' | '0' => {
                if i + 1 < chars.len() && is_ident_char(chars[i + 1]) {
                    return Err(FormulaError {
                        column: col,
                        message: "identifiers must start with a letter".into(),
                    });
                }
                out.push((col, if c == '1' { Tok::One } else { Tok::Zero }));
            }
            other => {
                return Err(FormulaError {
                    column: col,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end_col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError { column: self.col(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Formula, FormulaError> {
        if let Some(Tok::Ident(kw)) = self.peek() {
            if kw == "mu" || kw == "nu" {
                let is_mu = kw == "mu";
                self.pos += 1;
                let name = match self.peek() {
                    Some(Tok::Ident(n)) => n.clone(),
                    _ => return self.err("expected a variable after binder"),
                };
                self.pos += 1;
                if self.peek() != Some(&Tok::Dot) {
                    return self.err("expected '.' after bound variable");
                }
                self.pos += 1;
                self.scope.push(name);
                let body = self.expr();
                self.scope.pop();
                let body = body?;
                return Ok(if is_mu { Formula::mu(body) } else { Formula::nu(body) });
            }
        }
        self.sum()
    }

    fn sum(&mut self) -> Result<Formula, FormulaError> {
        let left = self.product()?;
        match self.peek() {
            Some(Tok::Bar) => {
                self.pos += 1;
                let right = self.sum_or_binder()?;
                Ok(Formula::par(left, right))
            }
            Some(Tok::PlusOp) => {
                self.pos += 1;
                let right = self.sum_or_binder()?;
                Ok(Formula::plus(left, right))
            }
            _ => Ok(left),
        }
    }

    fn sum_or_binder(&mut self) -> Result<Formula, FormulaError> {
        if self.at_binder() {
            self.expr()
        } else {
            self.sum()
        }
    }

    fn at_binder(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(k)) if k == "mu" || k == "nu")
    }

    fn product(&mut self) -> Result<Formula, FormulaError> {
        let left = self.unary()?;
        match self.peek() {
            Some(Tok::Star) => {
                self.pos += 1;
                let right = if self.at_binder() { self.expr()? } else { self.product()? };
                Ok(Formula::tensor(left, right))
            }
            Some(Tok::Amp) => {
                self.pos += 1;
                let right = if self.at_binder() { self.expr()? } else { self.product()? };
                Ok(Formula::with(left, right))
            }
            _ => Ok(left),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of formula"),
        };
        match tok {
            Tok::LParen => {
                self.pos += 1;
                let f = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(f)
            }
            Tok::One => {
                self.pos += 1;
                Ok(Formula::One)
            }
            Tok::Zero => {
                self.pos += 1;
                Ok(Formula::Zero)
            }
            Tok::Tilde => {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Ident(name)) => {
                        let name = name.clone();
                        if self.scope.contains(&name) {
                            return self.err(format!("cannot negate bound variable '{name}'"));
                        }
                        if is_keyword(&name) {
                            return self.err(format!("cannot negate keyword '{name}'"));
                        }
                        self.pos += 1;
                        Ok(Formula::NegAtom(name))
                    }
                    _ => self.err("expected an atom after '~'"),
                }
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "bot" => return Ok(Formula::Bot),
                    "top" => return Ok(Formula::Top),
                    "mu" | "nu" => return self.err("binder in operand position needs parentheses"),
                    _ => {}
                }
                if let Some(k) = self.scope.iter().rev().position(|s| *s == name) {
                    Ok(Formula::Var(k as u32))
                } else {
                    Ok(Formula::Atom(name))
                }
            }
            _ => self.err("expected a formula"),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "mu" | "nu" | "bot" | "top")
}

/// Parse a closed formula from its ASCII syntax.
pub fn parse_formula(src: &str) -> Result<Formula, FormulaError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end_col: src.chars().count() + 1, scope: Vec::new() };
    let f = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
