//! Candidate maps `f` and the two defect functionals.
//!
//! The multiplicative defect is `‖f(xy) − f(x)f(y)‖` and the cubic defect is
//! `‖f(2x+y) + f(2x−y) − 2f(x+y) − 2f(x−y) − 12f(x)‖`.

use std::fmt;

use crate::algebra::{Algebra, Element, ProbeSpec};
use crate::error::{Error, Result};

/// Anything that maps elements of one algebra to elements of the same algebra.
pub trait MapEvaluator {
    fn algebra(&self) -> Algebra;
    fn apply(&self, x: &Element) -> Result<Element>;
}

/// `f(x) = c1·x + c2·x² + c3·x³ + c4·x⁴ + k`.
///
/// The quartic coefficient is only accepted on `real-line`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    algebra: Algebra,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    k: Element,
}

impl MapSpec {
    pub fn new(c1: f64, c2: f64, c3: f64, k: Element) -> Result<Self> {
        if ![c1, c2, c3].iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("map coefficients"));
        }
        Ok(MapSpec {
            algebra: k.algebra(),
            c1,
            c2,
            c3,
            c4: 0.0,
            k,
        })
    }

    pub fn with_quartic(mut self, c4: f64) -> Result<Self> {
        if !c4.is_finite() {
            return Err(Error::NonFinite("map coefficients"));
        }
        if c4 != 0.0 && self.algebra != Algebra::RealLine {
            return Err(Error::InvalidParameter(format!(
                "x^4 requires real-line, map lives in {}",
                self.algebra
            )));
        }
        self.c4 = c4;
        Ok(self)
    }

    pub fn zero(algebra: Algebra) -> Self {
        MapSpec {
            algebra,
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            c4: 0.0,
            k: Element::zero(algebra),
        }
    }

    pub fn pure_cubic(algebra: Algebra) -> Self {
        Self::scaled_cubic(algebra, 1.0)
    }

    pub fn scaled_cubic(algebra: Algebra, c3: f64) -> Self {
        MapSpec {
            c3,
            ..Self::zero(algebra)
        }
    }

    /// `x³ + k`
    pub fn cubic_plus(k: Element) -> Self {
        MapSpec {
            c3: 1.0,
            ..Self::zero(k.algebra())
        }
        .with_constant(k)
    }

    fn with_constant(mut self, k: Element) -> Self {
        self.k = k;
        self
    }

    /// `x³ + ε·x⁴` on `real-line`.
    pub fn cubic_plus_quartic(eps: f64) -> Result<Self> {
        Self::pure_cubic(Algebra::RealLine).with_quartic(eps)
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }

    pub fn constant(&self) -> &Element {
        &self.k
    }

    pub fn eval(&self, x: &Element) -> Result<Element> {
        if x.algebra() != self.algebra {
            return Err(Error::AlgebraMismatch {
                left: self.algebra,
                right: x.algebra(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &Element) -> Element {
        let mut out = self.k.clone();
        if self.c1 != 0.0 {
            out = out.add_scaled_unchecked(self.c1, x);
        }
        if self.c2 == 0.0 && self.c3 == 0.0 && self.c4 == 0.0 {
            return out;
        }
        let x2 = x.mul_unchecked(x);
        if self.c2 != 0.0 {
            out = out.add_scaled_unchecked(self.c2, &x2);
        }
        if self.c3 == 0.0 && self.c4 == 0.0 {
            return out;
        }
        let x3 = x2.mul_unchecked(x);
        if self.c3 != 0.0 {
            out = out.add_scaled_unchecked(self.c3, &x3);
        }
        if self.c4 != 0.0 {
            out = out.add_scaled_unchecked(self.c4, &x3.mul_unchecked(x));
        }
        out
    }

    fn check_pair(&self, x: &Element, y: &Element) -> Result<()> {
        for e in [x, y] {
            if e.algebra() != self.algebra {
                return Err(Error::AlgebraMismatch {
                    left: self.algebra,
                    right: e.algebra(),
                });
            }
        }
        Ok(())
    }

    pub fn mult_defect(&self, x: &Element, y: &Element) -> Result<f64> {
        self.check_pair(x, y)?;
        mult_residual_of(self, x, y)
    }

    pub fn cubic_defect(&self, x: &Element, y: &Element) -> Result<f64> {
        self.check_pair(x, y)?;
        cubic_residual_of(self, x, y)
    }

    pub fn defect(&self, which: DefectKind, x: &Element, y: &Element) -> Result<f64> {
        match which {
            DefectKind::Mult => self.mult_defect(x, y),
            DefectKind::Cubic => self.cubic_defect(x, y),
        }
    }
}

impl MapEvaluator for MapSpec {
    fn algebra(&self) -> Algebra {
        self.algebra
    }

    fn apply(&self, x: &Element) -> Result<Element> {
        self.eval(x)
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (c, name) in [
            (self.c1, "x"),
            (self.c2, "x^2"),
            (self.c3, "x^3"),
            (self.c4, "x^4"),
        ] {
            if c == 1.0 {
                parts.push(name.to_string());
            } else if c != 0.0 {
                parts.push(format!("{c}*{name}"));
            }
        }
        if !self.k.is_zero() {
            parts.push(format!("k{}", self.k));
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{} on {}", parts.join(" + "), self.algebra)
    }
}

/// `‖g(xy) − g(x)g(y)‖` for any evaluator.
pub fn mult_residual_of(g: &impl MapEvaluator, x: &Element, y: &Element) -> Result<f64> {
    let lhs = g.apply(&x.checked_mul(y)?)?;
    let rhs = g.apply(x)?.checked_mul(&g.apply(y)?)?;
    Ok(lhs.sub_unchecked(&rhs).norm())
}

/// `‖g(2x+y) + g(2x−y) − 2g(x+y) − 2g(x−y) − 12g(x)‖` for any evaluator,
/// evaluated literally term by term (no simplification at `y = 0`).
pub fn cubic_residual_of(g: &impl MapEvaluator, x: &Element, y: &Element) -> Result<f64> {
    let two_x = x.scale_unchecked(2.0);
    let acc = g
        .apply(&two_x.checked_add(y)?)?
        .add_unchecked(&g.apply(&two_x.checked_sub(y)?)?)
        .add_scaled_unchecked(-2.0, &g.apply(&x.checked_add(y)?)?)
        .add_scaled_unchecked(-2.0, &g.apply(&x.checked_sub(y)?)?)
        .add_scaled_unchecked(-12.0, &g.apply(x)?);
    Ok(acc.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    Mult,
    Cubic,
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DefectKind::Mult => "mult",
            DefectKind::Cubic => "cubic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectSample {
    pub x: Element,
    pub y: Element,
    pub value: f64,
}

pub fn defect_samples(
    f: &MapSpec,
    which: DefectKind,
    probes: &ProbeSpec,
) -> Result<Vec<DefectSample>> {
    probes
        .pairs(f.algebra)?
        .into_iter()
        .map(|(x, y)| {
            let value = f.defect(which, &x, &y)?;
            Ok(DefectSample { x, y, value })
        })
        .collect()
}

/// Empirical supremum of a defect over a deterministic probe set.
pub fn defect_sup_estimate(f: &MapSpec, which: DefectKind, probes: &ProbeSpec) -> Result<f64> {
    Ok(defect_samples(f, which, probes)?
        .iter()
        .fold(0.0, |m, s| m.max(s.value)))
}
