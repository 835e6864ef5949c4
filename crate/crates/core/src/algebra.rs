//! Finite-dimensional real Banach algebras.
//!
//! Three fixed families are supported, each with a norm that is
//! submultiplicative for its product:
//!
//! * `real-line`: ℝ with the absolute value.
//! * `strict-upper-4x4`: strictly upper-triangular 4×4 real matrices with the
//!   entrywise ℓ1 norm. Coefficients are the six free entries in row-major
//!   order of positions (1,2),(1,3),(1,4),(2,3),(2,4),(3,4). The algebra is
//!   non-unital and nilpotent of index 4.
//! * `commutative-pointwise-n`: ℝⁿ with the pointwise product and max norm.
//!
//! Elements store a flat coefficient vector tagged with their algebra.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrix positions (1-based) of the six coefficients of `strict-upper-4x4`.
pub const STRICT_UPPER_POSITIONS: [(usize, usize); 6] =
    [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// Coefficient indices spanning the square-zero subspace (1,3),(1,4),(2,4).
pub const SQUARE_ZERO_INDICES: [usize; 3] = [1, 2, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algebra {
    RealLine,
    StrictUpper4,
    /// ℝⁿ with pointwise product; `n` must be positive.
    Pointwise(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRule {
    Abs,
    EntrywiseL1,
    MaxPointwise,
}

impl Algebra {
    pub fn pointwise(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "pointwise algebra needs dimension >= 1".into(),
            ));
        }
        Ok(Algebra::Pointwise(n))
    }

    pub fn dim(&self) -> usize {
        match self {
            Algebra::RealLine => 1,
            Algebra::StrictUpper4 => 6,
            Algebra::Pointwise(n) => *n,
        }
    }

    pub fn norm_rule(&self) -> NormRule {
        match self {
            Algebra::RealLine => NormRule::Abs,
            Algebra::StrictUpper4 => NormRule::EntrywiseL1,
            Algebra::Pointwise(_) => NormRule::MaxPointwise,
        }
    }

    pub fn is_commutative(&self) -> bool {
        !matches!(self, Algebra::StrictUpper4)
    }

    /// The built-in algebras exercised by the test suites.
    pub fn builtins() -> [Algebra; 3] {
        [
            Algebra::RealLine,
            Algebra::StrictUpper4,
            Algebra::Pointwise(3),
        ]
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algebra::RealLine => f.write_str("real-line"),
            Algebra::StrictUpper4 => f.write_str("strict-upper-4x4"),
            Algebra::Pointwise(n) => write!(f, "commutative-pointwise-{n}"),
        }
    }
}

impl FromStr for Algebra {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real-line" => Ok(Algebra::RealLine),
            "strict-upper-4x4" => Ok(Algebra::StrictUpper4),
            _ => {
                let n = s
                    .strip_prefix("commutative-pointwise-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown algebra `{s}`")))?;
                Algebra::pointwise(n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    algebra: Algebra,
    coeffs: Vec<f64>,
}

impl Element {
    pub fn new(algebra: Algebra, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != algebra.dim() || algebra.dim() == 0 {
            return Err(Error::DimensionMismatch {
                algebra,
                expected: algebra.dim(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("element coefficients"));
        }
        Ok(Element { algebra, coeffs })
    }

    pub fn zero(algebra: Algebra) -> Self {
        Element {
            algebra,
            coeffs: vec![0.0; algebra.dim()],
        }
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Element::new(Algebra::RealLine, vec![value])
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient; used by overflow guards.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_same(&self, other: &Element) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch {
                left: self.algebra,
                right: other.algebra,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn scale(&self, c: f64) -> Result<Element> {
        if !c.is_finite() {
            return Err(Error::NonFinite("scale factor"));
        }
        Ok(self.scale_unchecked(c))
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Element) -> Result<f64> {
        Ok(self.checked_sub(other)?.norm())
    }

    pub fn norm(&self) -> f64 {
        match self.algebra.norm_rule() {
            NormRule::Abs | NormRule::EntrywiseL1 => self.coeffs.iter().map(|c| c.abs()).sum(),
            NormRule::MaxPointwise => self.max_abs(),
        }
    }

    // The unchecked variants assume both operands share an algebra; callers in
    // this crate validate once and then run the hot loops through these.

    pub(crate) fn add_unchecked(&self, other: &Element) -> Element {
        self.zip_with(other, |a, b| a + b)
    }

    pub(crate) fn sub_unchecked(&self, other: &Element) -> Element {
        self.zip_with(other, |a, b| a - b)
    }

    pub(crate) fn scale_unchecked(&self, c: f64) -> Element {
        Element {
            algebra: self.algebra,
            coeffs: self.coeffs.iter().map(|a| c * a).collect(),
        }
    }

    /// `self + c·other`
    pub(crate) fn add_scaled_unchecked(&self, c: f64, other: &Element) -> Element {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub(crate) fn mul_unchecked(&self, other: &Element) -> Element {
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = match self.algebra {
            Algebra::RealLine => vec![a[0] * b[0]],
            Algebra::Pointwise(_) => a.iter().zip(b).map(|(x, y)| x * y).collect(),
            Algebra::StrictUpper4 => {
                // (XY)_ij = Σ_{i<k<j} X_ik Y_kj; only (1,3), (1,4), (2,4) survive.
                let [x12, x13, _x14, x23, _x24, _x34] = [a[0], a[1], a[2], a[3], a[4], a[5]];
                let [_y12, _y13, _y14, y23, y24, y34] = [b[0], b[1], b[2], b[3], b[4], b[5]];
                vec![0.0, x12 * y23, x12 * y24 + x13 * y34, 0.0, x23 * y34, 0.0]
            }
        };
        Element {
            algebra: self.algebra,
            coeffs,
        }
    }

    fn zip_with(&self, other: &Element, op: impl Fn(f64, f64) -> f64) -> Element {
        Element {
            algebra: self.algebra,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// The constant `a` of the worked strict-upper-4x4 example: entries
/// (1,3)=1, (1,4)=2, (2,4)=1, so `‖a‖ = 4` and `a² = 0`.
pub fn example_constant_a() -> Element {
    Element {
        algebra: Algebra::StrictUpper4,
        coeffs: vec![0.0, 1.0, 2.0, 0.0, 1.0, 0.0],
    }
}

/// Deterministic stream of elements with coefficients uniform in
/// `[-radius, radius]`.
#[derive(Debug, Clone)]
pub struct Sampler {
    algebra: Algebra,
    radius: f64,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(algebra: Algebra, radius: f64, seed: u64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Sampler {
            algebra,
            radius,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn next_element(&mut self) -> Element {
        let r = self.radius;
        let coeffs = (0..self.algebra.dim())
            .map(|_| self.rng.random_range(-r..=r))
            .collect();
        Element {
            algebra: self.algebra,
            coeffs,
        }
    }

    /// An element of `strict-upper-4x4` supported on the square-zero subspace.
    pub fn next_square_zero(&mut self) -> Result<Element> {
        if self.algebra != Algebra::StrictUpper4 {
            return Err(Error::InvalidParameter(format!(
                "square-zero sampling needs strict-upper-4x4, not {}",
                self.algebra
            )));
        }
        let r = self.radius;
        let mut coeffs = vec![0.0; 6];
        for i in SQUARE_ZERO_INDICES {
            coeffs[i] = self.rng.random_range(-r..=r);
        }
        Ok(Element {
            algebra: self.algebra,
            coeffs,
        })
    }
}

pub fn sample(algebra: Algebra, radius: f64, seed: u64) -> Result<Element> {
    Ok(Sampler::new(algebra, radius, seed)?.next_element())
}

/// A reproducible probe set: `count` pairs `(x, y)` drawn from one seeded
/// stream, so a larger count extends a smaller one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            count: 100,
            radius: 1.0,
            seed: 42,
        }
    }
}

impl ProbeSpec {
    pub fn new(count: usize, radius: f64, seed: u64) -> Self {
        ProbeSpec {
            count,
            radius,
            seed,
        }
    }

    pub fn pairs(&self, algebra: Algebra) -> Result<Vec<(Element, Element)>> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("probe count must be >= 1".into()));
        }
        let mut sampler = Sampler::new(algebra, self.radius, self.seed)?;
        Ok((0..self.count)
            .map(|_| {
                let x = sampler.next_element();
                let y = sampler.next_element();
                (x, y)
            })
            .collect())
    }
}
