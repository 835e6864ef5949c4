//! The map-expression grammar:
//!
//! ```text
//! expr := term ('+' term)*
//! term := [real '*'] ('x' | 'x^2' | 'x^3' | 'x^4' | ident)
//! ```
//!
//! `ident` names a constant element defined elsewhere in the config.

use std::collections::BTreeMap;
use std::fmt;

use cubicstab_core::{Algebra, Element, MapSpec};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `x^power`, power in 1..=4
    Power(u8),
    Constant(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub atom: Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapExpression {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    /// 1-based character column within the expression.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("undefined constant `{0}`")]
    UndefinedConstant(String),
    #[error("x^4 requires real-line")]
    QuarticOutsideRealLine,
    #[error("constant `{name}` lives in {found}, map lives in {expected}")]
    WrongAlgebra {
        name: String,
        expected: Algebra,
        found: Algebra,
    },
    #[error("{0}")]
    Invalid(String),
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        if matches!(self.peek(), Some('+' | '-')) {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ExprError {
                column: start + 1,
                message: format!("malformed number `{text}`"),
            }),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn atom(&mut self) -> Result<Atom, ExprError> {
        let start = self.pos;
        if !self
            .peek()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        {
            return Err(self.err("expected `x`, `x^n` or a constant name"));
        }
        let name = self.ident();
        if name != "x" {
            return Ok(Atom::Constant(name));
        }
        self.skip_ws();
        if !self.eat('^') {
            return Ok(Atom::Power(1));
        }
        self.skip_ws();
        match self.peek() {
            Some(d @ '1'..='4') => {
                self.pos += 1;
                Ok(Atom::Power(d as u8 - b'0'))
            }
            _ => Err(ExprError {
                column: start + 1,
                message: "only x, x^2, x^3 and x^4 are supported".into(),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ExprError> {
        self.skip_ws();
        let starts_number = self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
        let coef = if starts_number {
            let c = self.number()?;
            self.skip_ws();
            if !self.eat('*') {
                return Err(self.err("expected `*` after coefficient"));
            }
            self.skip_ws();
            c
        } else {
            1.0
        };
        let atom = self.atom()?;
        Ok(Term { coef, atom })
    }
}

impl MapExpression {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut cur = Cursor::new(src);
        let mut terms = vec![cur.term()?];
        loop {
            cur.skip_ws();
            match cur.peek() {
                None => break,
                Some('+') => {
                    cur.pos += 1;
                    terms.push(cur.term()?);
                }
                Some(c) => return Err(cur.err(format!("unexpected `{c}`"))),
            }
        }
        Ok(MapExpression { terms })
    }

    pub fn constant_names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| match &t.atom {
            Atom::Constant(n) => Some(n.as_str()),
            Atom::Power(_) => None,
        })
    }

    pub fn has_quartic(&self) -> bool {
        self.terms.iter().any(|t| t.atom == Atom::Power(4))
    }

    /// Sums like terms into a [`MapSpec`].
    pub fn lower(
        &self,
        algebra: Algebra,
        constants: &BTreeMap<String, Element>,
    ) -> Result<MapSpec, LowerError> {
        if self.has_quartic() && algebra != Algebra::RealLine {
            return Err(LowerError::QuarticOutsideRealLine);
        }
        let mut c = [0.0; 4];
        let mut k = Element::zero(algebra);
        for term in &self.terms {
            match &term.atom {
                Atom::Power(p) => c[*p as usize - 1] += term.coef,
                Atom::Constant(name) => {
                    let e = constants
                        .get(name)
                        .ok_or_else(|| LowerError::UndefinedConstant(name.clone()))?;
                    if e.algebra() != algebra {
                        return Err(LowerError::WrongAlgebra {
                            name: name.clone(),
                            expected: algebra,
                            found: e.algebra(),
                        });
                    }
                    let scaled = e
                        .scale(term.coef)
                        .map_err(|e| LowerError::Invalid(e.to_string()))?;
                    k = k
                        .checked_add(&scaled)
                        .map_err(|e| LowerError::Invalid(e.to_string()))?;
                }
            }
        }
        MapSpec::new(c[0], c[1], c[2], k)
            .and_then(|m| m.with_quartic(c[3]))
            .map_err(|e| LowerError::Invalid(e.to_string()))
    }
}

impl fmt::Display for MapExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if t.coef != 1.0 {
                write!(f, "{}*", t.coef)?;
            }
            match &t.atom {
                Atom::Power(1) => f.write_str("x")?,
                Atom::Power(p) => write!(f, "x^{p}")?,
                Atom::Constant(n) => f.write_str(n)?,
            }
        }
        Ok(())
    }
}
