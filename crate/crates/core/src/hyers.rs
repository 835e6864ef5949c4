//! Direct-method iterations that build the cubic limit `T` of a map `f`.
//!
//! Forward: `T_n(x) = f(2ⁿx) / 8ⁿ`. Backward: `T_n(x) = 8ⁿ f(x / 2ⁿ)`.
//! Arguments are doubled (or halved) one step at a time, so every rescaling
//! is an exact power-of-two scaling until the magnitude guard trips.
//!
//! Stopping rule: the first `n` with `‖T_{n+1}(x) − T_n(x)‖ < tol`, returning
//! `T_{n+1}(x)`.

use std::fmt;
use std::str::FromStr;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::maps::{MapEvaluator, MapSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Forward,
    Backward,
}

impl Method {
    pub fn reversed(self) -> Method {
        match self {
            Method::Forward => Method::Backward,
            Method::Backward => Method::Forward,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Forward => "forward",
            Method::Backward => "backward",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Method::Forward),
            "backward" => Ok(Method::Backward),
            _ => Err(Error::InvalidParameter(format!(
                "method must be forward or backward, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSettings {
    pub n_max: usize,
    pub tol: f64,
    /// Any coefficient above this magnitude aborts the iteration.
    pub guard: f64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        IterationSettings {
            n_max: 40,
            tol: 1e-10,
            guard: 1e100,
        }
    }
}

impl IterationSettings {
    pub fn new(n_max: usize, tol: f64, guard: f64) -> Result<Self> {
        let s = IterationSettings { n_max, tol, guard };
        s.validate()?;
        Ok(s)
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        Self::new(self.n_max, tol, self.guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.guard.is_nan() || self.guard <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "guard must be positive, got {}",
                self.guard
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub n: usize,
    /// `T_n(x)`
    pub value: Element,
    /// `‖T_{n+1}(x) − T_n(x)‖`
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub method: Method,
    pub steps: Vec<TraceStep>,
    pub converged_at: Option<usize>,
}

impl IterationTrace {
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.gap)
    }
}

pub fn iterate(
    f: &MapSpec,
    x: &Element,
    method: Method,
    s: &IterationSettings,
) -> Result<(Element, IterationTrace)> {
    s.validate()?;
    if x.algebra() != f.algebra() {
        return Err(Error::AlgebraMismatch {
            left: f.algebra(),
            right: x.algebra(),
        });
    }
    // Forward doubles the argument and divides by 8; backward mirrors it.
    let (arg_step, amp_step) = match method {
        Method::Forward => (2.0, 0.125),
        Method::Backward => (0.5, 8.0),
    };
    let mut trace = IterationTrace {
        method,
        steps: Vec::new(),
        converged_at: None,
    };
    let overflow = |step: usize, trace: IterationTrace| Error::Overflow {
        method,
        step,
        guard: s.guard,
        trace: Box::new(trace),
    };
    let within = |e: &Element| e.is_finite() && e.max_abs() <= s.guard;

    let mut arg = x.clone();
    let mut amp = 1.0;
    let mut current = f.eval_unchecked(&arg);
    if !within(&current) {
        return Err(overflow(0, trace));
    }
    let mut last_gap = f64::INFINITY;
    for n in 0..s.n_max {
        arg = arg.scale_unchecked(arg_step);
        amp *= amp_step;
        let fx = f.eval_unchecked(&arg);
        let next = fx.scale_unchecked(amp);
        if !within(&arg) || !within(&fx) || !within(&next) {
            return Err(overflow(n + 1, trace));
        }
        let gap = next.sub_unchecked(&current).norm();
        trace.steps.push(TraceStep {
            n,
            value: current,
            gap,
        });
        last_gap = gap;
        if gap < s.tol {
            trace.converged_at = Some(n);
            return Ok((next, trace));
        }
        current = next;
    }
    Err(Error::NonConvergent {
        method,
        n_max: s.n_max,
        last_gap,
        trace: Box::new(trace),
    })
}

pub fn iterate_forward(
    f: &MapSpec,
    x: &Element,
    s: &IterationSettings,
) -> Result<(Element, IterationTrace)> {
    iterate(f, x, Method::Forward, s)
}

pub fn iterate_backward(
    f: &MapSpec,
    x: &Element,
    s: &IterationSettings,
) -> Result<(Element, IterationTrace)> {
    iterate(f, x, Method::Backward, s)
}

/// The limit map `T`, evaluated on demand by re-running the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicApproximant {
    pub f: MapSpec,
    pub method: Method,
    pub settings: IterationSettings,
}

impl CubicApproximant {
    pub fn evaluate(&self, x: &Element) -> Result<Element> {
        Ok(self.evaluate_traced(x)?.0)
    }

    pub fn evaluate_traced(&self, x: &Element) -> Result<(Element, IterationTrace)> {
        iterate(&self.f, x, self.method, &self.settings)
    }
}

impl MapEvaluator for CubicApproximant {
    fn algebra(&self) -> Algebra {
        self.f.algebra()
    }

    fn apply(&self, x: &Element) -> Result<Element> {
        self.evaluate(x)
    }
}

pub fn build_approximant(f: &MapSpec, method: Method, s: IterationSettings) -> CubicApproximant {
    CubicApproximant {
        f: f.clone(),
        method,
        settings: s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{example_constant_a, Sampler};

    fn example_map() -> MapSpec {
        MapSpec::cubic_plus(example_constant_a())
    }

    fn cube(x: &Element) -> Element {
        x.checked_mul(x).unwrap().checked_mul(x).unwrap()
    }

    #[test]
    fn forward_example_gaps_decay_geometrically() {
        let mut s = Sampler::new(Algebra::StrictUpper4, 1.0, 1).unwrap();
        let x = s.next_element();
        let (t, trace) =
            iterate_forward(&example_map(), &x, &IterationSettings::default()).unwrap();
        for step in &trace.steps {
            // Absolute floor: T_n carries one rounding of 8ⁿx³ + a, scaled back by 8⁻ⁿ.
            let want = 3.5 / 8f64.powi(step.n as i32);
            assert!(
                (step.gap - want).abs() <= 1e-15 + 1e-12 * want,
                "n={} gap={}",
                step.n,
                step.gap
            );
            let expected = cube(&x)
                .checked_add(
                    &example_constant_a()
                        .scale(8f64.powi(-(step.n as i32)))
                        .unwrap(),
                )
                .unwrap();
            assert!(step.value.distance(&expected).unwrap() <= 1e-14);
        }
        // 3.5/8ⁿ < 1e-10 first at n = 12
        assert_eq!(trace.converged_at, Some(12));
        assert!(t.distance(&cube(&x)).unwrap() < 1e-10);
    }

    #[test]
    fn pure_cubic_converges_immediately() {
        let f = MapSpec::pure_cubic(Algebra::StrictUpper4);
        let x = Element::new(Algebra::StrictUpper4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for method in [Method::Forward, Method::Backward] {
            let (t, trace) = iterate(&f, &x, method, &IterationSettings::default()).unwrap();
            assert_eq!(trace.converged_at, Some(0));
            assert_eq!(t, cube(&x));
        }
    }

    #[test]
    fn forward_diverges_on_quartic_map() {
        let f = MapSpec::cubic_plus_quartic(1e-3).unwrap();
        let err = iterate_forward(
            &f,
            &Element::scalar(1.0).unwrap(),
            &IterationSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::NonConvergent { .. } | Error::Overflow { .. }
        ));
        let trace = err.trace().unwrap();
        assert!(trace.steps.windows(2).all(|w| w[1].gap > w[0].gap));

        let tight = IterationSettings::new(40, 1e-10, 1e10).unwrap();
        let err = iterate_forward(&f, &Element::scalar(1.0).unwrap(), &tight).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn backward_recovers_cubic_part() {
        let f = MapSpec::cubic_plus_quartic(1e-3).unwrap();
        for x in [-2.0, -0.3, 0.0, 1.0, 1.9] {
            let (t, trace) = iterate_backward(
                &f,
                &Element::scalar(x).unwrap(),
                &IterationSettings::default(),
            )
            .unwrap();
            assert!((t.coeffs()[0] - x * x * x).abs() < 1e-10);
            // gap_n = εx⁴/2^{n+1}
            for step in &trace.steps {
                let want = 1e-3 * x.powi(4) / 2f64.powi(step.n as i32 + 1);
                assert!((step.gap - want).abs() <= 1e-15 + 1e-9 * want);
            }
        }
    }

    #[test]
    fn backward_diverges_on_constant_term() {
        let x = Element::zero(Algebra::StrictUpper4);
        let err = iterate_backward(&example_map(), &x, &IterationSettings::default()).unwrap_err();
        let Error::NonConvergent { n_max, trace, .. } = err else {
            panic!("expected NonConvergent, got {err:?}");
        };
        assert_eq!(n_max, 40);
        assert_eq!(trace.steps.len(), 40);
        assert_eq!(trace.converged_at, None);
    }

    #[test]
    fn approximant_examples() {
        let t = build_approximant(
            &example_map(),
            Method::Forward,
            IterationSettings::default(),
        );
        assert!(t.evaluate(&example_constant_a()).unwrap().norm() < 1e-10);
        let b = build_approximant(
            &MapSpec::cubic_plus_quartic(1e-3).unwrap(),
            Method::Backward,
            IterationSettings::default(),
        );
        assert!(
            (b.evaluate(&Element::scalar(1.0).unwrap()).unwrap().coeffs()[0] - 1.0).abs() < 1e-10
        );
        let x = Element::new(Algebra::StrictUpper4, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(t.evaluate(&x).unwrap(), t.evaluate(&x).unwrap());
    }

    #[test]
    fn settings_validate() {
        assert!(IterationSettings::new(0, 1e-10, 1e100).is_err());
        assert!(IterationSettings::new(10, 0.0, 1e100).is_err());
        assert!(IterationSettings::new(10, 1e-10, -1.0).is_err());
        assert_eq!("backward".parse::<Method>().unwrap(), Method::Backward);
        assert!("sideways".parse::<Method>().is_err());
    }
}
