//! Control functions `φ(x, y)` and the rescaled series built from them.
//!
//! Every family depends on `(‖x‖, ‖y‖)` only. Powers follow the convention
//! that a zero norm contributes zero to any power term, whatever the exponent.
//!
//! Forward series: `Ψ(x,y) = Σ_{i≥0} φ(2ⁱx, 2ⁱy) / 8ⁱ`.
//! Backward series: `Ψ(x,y) = Σ_{i≥1} 8ⁱ φ(x/2ⁱ, y/2ⁱ)`.
//!
//! The power families are homogeneous of degree `d` in the norms, so both
//! series are geometric and are summed in closed form after an exact
//! convergence test on `d`. Tabulated controls are summed term by term with a
//! geometric tail certified by their declared ratio.

use std::fmt;

use crate::algebra::Element;
use crate::error::{Error, Result};
use crate::hyers::Method;

pub const DEFAULT_SERIES_TOL: f64 = 1e-10;

const MAX_SERIES_TERMS: usize = 100_000;
const VANISHING_PROBE_STEPS: i32 = 40;

/// `t^p` with `0^p = 0` for every `p`.
pub fn power(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlFunction {
    /// `θ`
    Constant { theta: f64 },
    /// `θ(‖x‖^p + ‖y‖^p)`
    SumPowers { theta: f64, p: f64 },
    /// `θ‖x‖^q‖y‖^p`
    ProductPowers { theta: f64, q: f64, p: f64 },
    /// `θ‖y‖^p`
    PowerOfY { theta: f64, p: f64 },
    /// Piecewise-linear in `s = ‖x‖ + ‖y‖` over `table` (sorted knots).
    ///
    /// `ratio` is a declared certificate: `φ(2x,2y) ≤ ratio·φ(x,y)` when the
    /// forward series is used, `φ(x/2,y/2) ≤ ratio·φ(x,y)` for the backward
    /// one. With `extrapolate`, values beyond the last knot grow by `ratio`
    /// per doubling of `s`, and values below the first knot by `ratio` per
    /// halving.
    Tabulated {
        table: Vec<(f64, f64)>,
        ratio: f64,
        extrapolate: bool,
    },
}

impl ControlFunction {
    pub fn constant(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(ControlFunction::Constant { theta })
    }

    pub fn sum_powers(theta: f64, p: f64) -> Result<Self> {
        check_theta(theta)?;
        check_exponent(p)?;
        Ok(ControlFunction::SumPowers { theta, p })
    }

    pub fn product_powers(theta: f64, q: f64, p: f64) -> Result<Self> {
        check_theta(theta)?;
        check_exponent(q)?;
        check_exponent(p)?;
        Ok(ControlFunction::ProductPowers { theta, q, p })
    }

    pub fn power_of_y(theta: f64, p: f64) -> Result<Self> {
        check_theta(theta)?;
        check_exponent(p)?;
        Ok(ControlFunction::PowerOfY { theta, p })
    }

    pub fn tabulated(table: Vec<(f64, f64)>, ratio: f64, extrapolate: bool) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidParameter(
                "tabulated control needs at least one knot".into(),
            ));
        }
        for (i, &(s, v)) in table.iter().enumerate() {
            if !(s.is_finite() && s >= 0.0 && v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated knot {i} must be finite and nonnegative, got ({s}, {v})"
                )));
            }
            if i > 0 && s <= table[i - 1].0 {
                return Err(Error::InvalidParameter(
                    "tabulated knots must be strictly increasing".into(),
                ));
            }
        }
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tabulated ratio must be positive, got {ratio}"
            )));
        }
        Ok(ControlFunction::Tabulated {
            table,
            ratio,
            extrapolate,
        })
    }

    /// Homogeneity degree in the norms, for the power families.
    pub fn degree(&self) -> Option<f64> {
        match *self {
            ControlFunction::Constant { .. } => Some(0.0),
            ControlFunction::SumPowers { p, .. } | ControlFunction::PowerOfY { p, .. } => Some(p),
            ControlFunction::ProductPowers { q, p, .. } => Some(q + p),
            ControlFunction::Tabulated { .. } => None,
        }
    }

    pub fn eval(&self, x: &Element, y: &Element) -> Result<f64> {
        self.eval_norms(x.norm(), y.norm())
    }

    pub fn eval_norms(&self, nx: f64, ny: f64) -> Result<f64> {
        Ok(match *self {
            ControlFunction::Constant { theta } => theta,
            ControlFunction::SumPowers { theta, p } => theta * (power(nx, p) + power(ny, p)),
            ControlFunction::ProductPowers { theta, q, p } => theta * power(nx, q) * power(ny, p),
            ControlFunction::PowerOfY { theta, p } => theta * power(ny, p),
            ControlFunction::Tabulated {
                ref table,
                ratio,
                extrapolate,
            } => lookup(table, ratio, extrapolate, nx + ny)?,
        })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "θ must be finite and nonnegative, got {theta}"
        )))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exponent must be finite, got {p}"
        )))
    }
}

fn lookup(table: &[(f64, f64)], ratio: f64, extrapolate: bool, s: f64) -> Result<f64> {
    let (s_min, v_min) = table[0];
    let (s_max, v_max) = table[table.len() - 1];
    if s >= s_min && s <= s_max {
        let i = table.partition_point(|&(k, _)| k <= s);
        if i == 0 || i == table.len() {
            return Ok(if i == 0 { v_min } else { v_max });
        }
        let (s0, v0) = table[i - 1];
        let (s1, v1) = table[i];
        return Ok(v0 + (v1 - v0) * (s - s0) / (s1 - s0));
    }
    if !extrapolate {
        return Err(Error::OutOfTable(s));
    }
    if s > s_max {
        return Ok(v_max * ratio.powf((s / s_max).log2()));
    }
    if s > 0.0 {
        return Ok(v_min * ratio.powf((s_min / s).log2()));
    }
    // s = 0 below the table: the halving limit of the extrapolation.
    match ratio.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Less) => Ok(0.0),
        Some(std::cmp::Ordering::Equal) => Ok(v_min),
        _ => Err(Error::OutOfTable(s)),
    }
}

impl fmt::Display for ControlFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlFunction::Constant { theta } => write!(f, "constant({theta})"),
            ControlFunction::SumPowers { theta, p } => write!(f, "sum_powers({theta}, {p})"),
            ControlFunction::ProductPowers { theta, q, p } => {
                write!(f, "product_powers({theta}, {q}, {p})")
            }
            ControlFunction::PowerOfY { theta, p } => write!(f, "power_of_y({theta}, {p})"),
            ControlFunction::Tabulated {
                table,
                ratio,
                extrapolate,
            } => {
                let name = if *extrapolate {
                    "tabulated"
                } else {
                    "tabulated_strict"
                };
                write!(f, "{name}({ratio}, [")?;
                for (i, (s, v)) in table.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}:{v}")?;
                }
                f.write_str("])")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
    pub closed_form: bool,
}

impl SeriesValue {
    fn exact(value: f64) -> Self {
        SeriesValue {
            value,
            terms_used: 0,
            tail_bound: 0.0,
            closed_form: true,
        }
    }
}

pub fn psi(
    phi: &ControlFunction,
    method: Method,
    x: &Element,
    y: &Element,
    tol: f64,
) -> Result<SeriesValue> {
    match method {
        Method::Forward => psi_forward(phi, x, y, tol),
        Method::Backward => psi_backward(phi, x, y, tol),
    }
}

pub fn psi_forward(
    phi: &ControlFunction,
    x: &Element,
    y: &Element,
    tol: f64,
) -> Result<SeriesValue> {
    psi_forward_norms(phi, x.norm(), y.norm(), tol)
}

pub fn psi_backward(
    phi: &ControlFunction,
    x: &Element,
    y: &Element,
    tol: f64,
) -> Result<SeriesValue> {
    psi_backward_norms(phi, x.norm(), y.norm(), tol)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "series tolerance must be positive, got {tol}"
        )))
    }
}

pub fn psi_forward_norms(phi: &ControlFunction, nx: f64, ny: f64, tol: f64) -> Result<SeriesValue> {
    check_tol(tol)?;
    let first = phi.eval_norms(nx, ny)?;
    if let Some(d) = phi.degree() {
        if first == 0.0 {
            return Ok(SeriesValue::exact(0.0));
        }
        if d >= 3.0 {
            return Err(Error::Divergent(format!(
                "forward series needs homogeneity degree < 3, {phi} has degree {d} (term ratio 2^(d-3) = {})",
                2f64.powf(d - 3.0)
            )));
        }
        return Ok(SeriesValue::exact(first / (1.0 - 2f64.powf(d - 3.0))));
    }

    let ControlFunction::Tabulated { ratio, .. } = *phi else {
        unreachable!("power families handled above")
    };
    if ratio >= 8.0 {
        return Err(Error::Divergent(format!(
            "forward series needs tabulated ratio < 8, got {ratio}"
        )));
    }
    if nx + ny == 0.0 {
        // The orbit of (0, 0) is fixed: Σ φ(0,0)/8ⁱ.
        return Ok(SeriesValue::exact(first * 8.0 / 7.0));
    }
    let q = ratio / 8.0;
    sum_with_tail(first, q, tol, |i| {
        let scale = 2f64.powi(i);
        Ok(phi.eval_norms(scale * nx, scale * ny)? / 8f64.powi(i))
    })
}

pub fn psi_backward_norms(
    phi: &ControlFunction,
    nx: f64,
    ny: f64,
    tol: f64,
) -> Result<SeriesValue> {
    check_tol(tol)?;
    let at_point = phi.eval_norms(nx, ny)?;
    if let Some(d) = phi.degree() {
        if at_point == 0.0 {
            return Ok(SeriesValue::exact(0.0));
        }
        if d <= 3.0 {
            return Err(Error::Divergent(format!(
                "backward series needs homogeneity degree > 3, {phi} has degree {d} (term ratio 2^(3-d) = {})",
                2f64.powf(3.0 - d)
            )));
        }
        let r = 2f64.powf(3.0 - d);
        return Ok(SeriesValue::exact(at_point * r / (1.0 - r)));
    }

    let ControlFunction::Tabulated { ratio, .. } = *phi else {
        unreachable!("power families handled above")
    };
    let q = 8.0 * ratio;
    if q >= 1.0 {
        return Err(Error::Divergent(format!(
            "backward series needs 8·ratio < 1, got ratio {ratio}"
        )));
    }
    if nx + ny == 0.0 {
        return if at_point == 0.0 {
            Ok(SeriesValue::exact(0.0))
        } else {
            Err(Error::Divergent(format!(
                "backward series at the origin grows like 8ⁱ·{at_point}"
            )))
        };
    }
    let first = 8.0 * phi.eval_norms(nx / 2.0, ny / 2.0)?;
    sum_with_tail(first, q, tol, |i| {
        let scale = 2f64.powi(-(i + 1));
        Ok(8f64.powi(i + 1) * phi.eval_norms(scale * nx, scale * ny)?)
    })
}

/// Sums `term(0) + term(1) + …` until the geometric tail bound
/// `term_n · q / (1 − q)` drops below `tol`.
fn sum_with_tail(
    first: f64,
    q: f64,
    tol: f64,
    term: impl Fn(i32) -> Result<f64>,
) -> Result<SeriesValue> {
    let mut value = first;
    let mut last = first;
    for n in 1..=MAX_SERIES_TERMS {
        let tail = last * q / (1.0 - q);
        if tail < tol {
            return Ok(SeriesValue {
                value,
                terms_used: n,
                tail_bound: tail,
                closed_form: false,
            });
        }
        last = term(n as i32)?;
        value += last;
    }
    Err(Error::Divergent(format!(
        "tail bound still above {tol} after {MAX_SERIES_TERMS} terms"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingCheck {
    pub vanishes: bool,
    /// Per-step factor of the rescaled sequence, when one is decisive.
    pub ratio: Option<f64>,
    pub witness: String,
}

/// Whether `φ1(2ⁿx, 2ⁿy)/2⁶ⁿ → 0` (forward) or `2⁶ⁿφ1(x/2ⁿ, y/2ⁿ) → 0`
/// (backward) at the given point.
pub fn phi1_vanishing_check(
    phi1: &ControlFunction,
    direction: Method,
    x: &Element,
    y: &Element,
) -> VanishingCheck {
    let (nx, ny) = (x.norm(), y.norm());
    if let Some(d) = phi1.degree() {
        let at_point = phi1.eval_norms(nx, ny).unwrap_or(f64::NAN);
        if at_point == 0.0 {
            return VanishingCheck {
                vanishes: true,
                ratio: Some(0.0),
                witness: "identically zero along the orbit".into(),
            };
        }
        let ratio = match direction {
            Method::Forward => 2f64.powf(d - 6.0),
            Method::Backward => 2f64.powf(6.0 - d),
        };
        return VanishingCheck {
            vanishes: ratio < 1.0,
            ratio: Some(ratio),
            witness: format!("degree {d}: per-step ratio {ratio}"),
        };
    }

    let seq: Result<Vec<f64>> = (0..=VANISHING_PROBE_STEPS)
        .map(|n| {
            let (s, w) = match direction {
                Method::Forward => (2f64.powi(n), 2f64.powi(-6 * n)),
                Method::Backward => (2f64.powi(-n), 2f64.powi(6 * n)),
            };
            Ok(w * phi1.eval_norms(s * nx, s * ny)?)
        })
        .collect();
    let inconclusive = |ratio| VanishingCheck {
        vanishes: false,
        ratio,
        witness: "inconclusive".into(),
    };
    let Ok(seq) = seq else {
        return inconclusive(None);
    };
    let peak = seq.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return VanishingCheck {
            vanishes: true,
            ratio: Some(0.0),
            witness: "identically zero along the orbit".into(),
        };
    }
    let n = seq.len();
    let ratio = seq[n - 1] / seq[n - 2];
    let half = n / 2;
    let monotone_tail = seq[half..].windows(2).all(|w| w[1] <= w[0]);
    if monotone_tail && ratio < 1.0 && seq[n - 1] <= 1e-9 * peak {
        VanishingCheck {
            vanishes: true,
            ratio: Some(ratio),
            witness: format!(
                "numeric probe: last ratio {ratio}, final/peak {}",
                seq[n - 1] / peak
            ),
        }
    } else {
        inconclusive(Some(ratio))
    }
}
