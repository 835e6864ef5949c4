//! Stability reports: bound checks against `Ψ(x,0)/16`, residuals of the
//! constructed limit, uniqueness and superstability verdicts.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::algebra::{example_constant_a, Algebra, Element, ProbeSpec};
use crate::control::{phi1_vanishing_check, psi, ControlFunction};
use crate::error::{Error, Result};
use crate::hyers::{
    build_approximant, CubicApproximant, IterationSettings, IterationTrace, Method,
};
use crate::maps::{cubic_residual_of, mult_residual_of, MapEvaluator, MapSpec};

/// Fixed CSV header of the per-probe report.
pub const CSV_HEADER: [&str; 8] = [
    "probe_index",
    "norm_x",
    "defect_cubic",
    "defect_mult",
    "psi",
    "bound",
    "err_Tf",
    "bound_ok",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportTolerances {
    /// Slack added to `Ψ(x,0)/16` in `bound_ok`.
    pub bound_slack: f64,
    /// Maximum acceptable cubic/multiplicative residual of `T`.
    pub residual: f64,
    /// `‖f − T‖`, `‖f(0)‖` and homogeneity tolerance for superstability.
    pub superstability: f64,
    /// Slack when checking that controls dominate measured defects.
    pub domination: f64,
    /// Truncation tolerance for Ψ.
    pub series: f64,
}

impl Default for ReportTolerances {
    fn default() -> Self {
        ReportTolerances {
            bound_slack: 1e-9,
            residual: 1e-8,
            superstability: 1e-9,
            domination: 1e-9,
            series: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub probe_index: usize,
    pub x: Element,
    pub norm_x: f64,
    pub defect_cubic: f64,
    pub defect_mult: f64,
    pub psi: f64,
    pub bound: f64,
    pub err_tf: f64,
    pub bound_ok: bool,
    pub converged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub records: Vec<ProbeRecord>,
    pub traces: Vec<IterationTrace>,
    /// Probe indices where `φ2` failed to dominate the measured cubic defect.
    pub domination_warnings: Vec<usize>,
}

/// Runs `op` over the items in parallel and returns results in input order;
/// the first failure by index wins.
fn par_ordered<T: Sync, R: Send>(
    items: &[T],
    op: impl Fn(usize, &T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let results: Vec<Result<R>> = items
        .par_iter()
        .enumerate()
        .map(|(i, t)| op(i, t))
        .collect();
    results.into_iter().collect()
}

fn par_max<T: Sync>(items: &[T], op: impl Fn(&T) -> Result<f64> + Sync) -> Result<f64> {
    Ok(par_ordered(items, |_, t| op(t))?
        .into_iter()
        .fold(0.0, f64::max))
}

#[allow(clippy::too_many_arguments)]
fn bound_row(
    f: &MapSpec,
    t: &CubicApproximant,
    phi2: &ControlFunction,
    method: Method,
    tol: &ReportTolerances,
    i: usize,
    x: &Element,
    y: &Element,
) -> Result<(ProbeRecord, IterationTrace, bool)> {
    let zero = Element::zero(x.algebra());
    let (tx, trace) = t.evaluate_traced(x)?;
    let fx = f.eval(x)?;
    let err_tf = tx.distance(&fx)?;
    let psi = psi(phi2, method, x, &zero, tol.series)?.value;
    let bound = psi / 16.0;
    let defect_cubic = f.cubic_defect(x, y)?;
    let defect_mult = f.mult_defect(x, y)?;
    let dominated = defect_cubic <= phi2.eval(x, y)? + tol.domination
        && f.cubic_defect(x, &zero)? <= phi2.eval(x, &zero)? + tol.domination;
    let record = ProbeRecord {
        probe_index: i,
        x: x.clone(),
        norm_x: x.norm(),
        defect_cubic,
        defect_mult,
        psi,
        bound,
        err_tf,
        bound_ok: err_tf <= bound + tol.bound_slack,
        converged_at: trace.converged_at,
    };
    Ok((record, trace, dominated))
}

pub fn check_bound(
    f: &MapSpec,
    t: &CubicApproximant,
    phi2: &ControlFunction,
    probes: &[(Element, Element)],
    method: Method,
    tol: &ReportTolerances,
) -> Result<BoundCheck> {
    let rows = par_ordered(probes, |i, (x, y)| {
        bound_row(f, t, phi2, method, tol, i, x, y).map_err(|e| Error::AtProbe {
            index: i,
            source: Box::new(e),
        })
    })?;

    let mut check = BoundCheck {
        records: Vec::with_capacity(rows.len()),
        traces: Vec::with_capacity(rows.len()),
        domination_warnings: Vec::new(),
    };
    for (record, trace, dominated) in rows {
        if !dominated {
            check.domination_warnings.push(record.probe_index);
        }
        check.records.push(record);
        check.traces.push(trace);
    }
    Ok(check)
}

pub fn check_cubic_residual<G: MapEvaluator + Sync>(
    t: &G,
    pairs: &[(Element, Element)],
) -> Result<f64> {
    par_max(pairs, |(x, y)| cubic_residual_of(t, x, y))
}

pub fn check_mult_residual<G: MapEvaluator + Sync>(
    t: &G,
    pairs: &[(Element, Element)],
) -> Result<f64> {
    par_max(pairs, |(x, y)| mult_residual_of(t, x, y))
}

/// `max ‖g(2ⁿx) − 8ⁿ g(x)‖` over the probes.
pub fn check_homogeneity<G: MapEvaluator + Sync>(g: &G, probes: &[Element], n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "homogeneity check needs n >= 1".into(),
        ));
    }
    let amp = 8f64.powi(n as i32);
    par_max(probes, |x| {
        let mut arg = x.clone();
        for _ in 0..n {
            arg = arg.scale_unchecked(2.0);
        }
        g.apply(&arg)?.distance(&g.apply(x)?.scale_unchecked(amp))
    })
}

pub fn uniqueness_check<A, B>(t1: &A, t2: &B, probes: &[Element]) -> Result<f64>
where
    A: MapEvaluator + Sync,
    B: MapEvaluator + Sync,
{
    par_max(probes, |x| t1.apply(x)?.distance(&t2.apply(x)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Superstable {
        max_f_minus_t: f64,
    },
    /// The controls were claimed to force `f = T`, yet they differ.
    Counterexample {
        max_f_minus_t: f64,
        detail: String,
    },
    NotApplicable {
        reason: String,
        /// `max ‖f − T‖` when `T` could be built; nonzero values show the
        /// map is not a cubic homomorphism.
        max_f_minus_t: Option<f64>,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Superstable { .. } => "superstable",
            Verdict::Counterexample { .. } => "counterexample",
            Verdict::NotApplicable { .. } => "not-applicable",
        }
    }

    pub fn max_f_minus_t(&self) -> Option<f64> {
        match *self {
            Verdict::Superstable { max_f_minus_t }
            | Verdict::Counterexample { max_f_minus_t, .. } => Some(max_f_minus_t),
            Verdict::NotApplicable { max_f_minus_t, .. } => max_f_minus_t,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Superstable { max_f_minus_t } => {
                write!(f, "superstable (max ‖f − T‖ = {max_f_minus_t})")
            }
            Verdict::Counterexample {
                max_f_minus_t,
                detail,
            } => {
                write!(
                    f,
                    "counterexample (max ‖f − T‖ = {max_f_minus_t}; {detail})"
                )
            }
            Verdict::NotApplicable {
                reason,
                max_f_minus_t,
            } => {
                write!(f, "not-applicable: {reason}")?;
                match max_f_minus_t {
                    Some(v) if *v > 0.0 => {
                        write!(f, "; counterexample note: max ‖f − T‖ = {v}, f is not a cubic homomorphism")
                    }
                    Some(v) => write!(f, "; max ‖f − T‖ = {v}"),
                    None => Ok(()),
                }
            }
        }
    }
}

fn max_f_minus_t(f: &MapSpec, t: &CubicApproximant, xs: &[Element]) -> Result<f64> {
    uniqueness_check(f, t, xs)
}

/// Decides whether the controls force `f` to be a cubic homomorphism and,
/// if so, checks `f = T` numerically on the probes.
///
/// The trigger is `φ2(x, 0) = 0` on every probe (and at the origin), which is
/// what makes `Ψ(x, 0)` vanish. Beyond that, `φ1` must satisfy its vanishing
/// condition for `method`, `φ2` must sit in the method's degree regime, and
/// both controls must dominate the measured defects.
pub fn superstability_check(
    f: &MapSpec,
    phi1: &ControlFunction,
    phi2: &ControlFunction,
    method: Method,
    probes: &[(Element, Element)],
    settings: &IterationSettings,
    tol: &ReportTolerances,
) -> Result<Verdict> {
    let algebra = f.algebra();
    let zero = Element::zero(algebra);
    let xs: Vec<Element> = probes.iter().map(|(x, _)| x.clone()).collect();
    let t = build_approximant(f, method, *settings);
    let not_applicable = |reason: String| Verdict::NotApplicable {
        reason,
        max_f_minus_t: max_f_minus_t(f, &t, &xs).ok(),
    };

    let at_origin = phi2.eval(&zero, &zero)?;
    if at_origin > 0.0 {
        return Ok(not_applicable(format!("φ2(0,0) = {at_origin} ≠ 0")));
    }
    for (i, x) in xs.iter().enumerate() {
        let v = phi2.eval(x, &zero)?;
        if v > 0.0 {
            return Ok(not_applicable(format!("φ2(x,0) = {v} ≠ 0 at probe {i}")));
        }
    }

    if let Some(d) = phi2.degree() {
        let in_regime = match method {
            Method::Forward => d < 3.0,
            Method::Backward => d > 3.0,
        };
        if !in_regime {
            return Ok(not_applicable(format!(
                "φ2 = {phi2} has degree {d}, outside the {method} regime"
            )));
        }
    }

    for (i, (x, y)) in probes.iter().enumerate() {
        let v = phi1_vanishing_check(phi1, method, x, y);
        if !v.vanishes {
            return Ok(not_applicable(format!(
                "φ1 = {phi1} fails the {method} vanishing condition at probe {i} ({})",
                v.witness
            )));
        }
    }

    for (i, (x, y)) in probes.iter().enumerate() {
        for (a, b) in [(x, y), (x, &zero), (&zero, &zero)] {
            let mult_ok = f.mult_defect(a, b)? <= phi1.eval(a, b)? + tol.domination;
            let cubic_ok = f.cubic_defect(a, b)? <= phi2.eval(a, b)? + tol.domination;
            if !(mult_ok && cubic_ok) {
                return Ok(not_applicable(format!(
                    "controls do not dominate the defects of f at probe {i}"
                )));
            }
        }
    }

    let gap = max_f_minus_t(f, &t, &xs)?;
    let f0 = f.eval(&zero)?.norm();
    let scale = xs
        .iter()
        .map(|x| f.eval(x).map(|v| 8.0 * v.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let homogeneity = check_homogeneity(f, &xs, 1)?;

    let mut problems = Vec::new();
    if f0 > tol.superstability {
        problems.push(format!("‖f(0)‖ = {f0}"));
    }
    if homogeneity > tol.superstability * (1.0 + scale) {
        problems.push(format!("max ‖f(2x) − 8f(x)‖ = {homogeneity}"));
    }
    if gap > tol.superstability {
        problems.push(format!("max ‖f − T‖ = {gap}"));
    }
    Ok(if problems.is_empty() {
        Verdict::Superstable { max_f_minus_t: gap }
    } else {
        Verdict::Counterexample {
            max_f_minus_t: gap,
            detail: problems.join(", "),
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisInput {
    pub f: MapSpec,
    pub phi1: ControlFunction,
    pub phi2: ControlFunction,
    pub method: Method,
    pub settings: IterationSettings,
    pub probes: ProbeSpec,
    pub tolerances: ReportTolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub map: String,
    pub phi1: String,
    pub phi2: String,
    pub algebra: Algebra,
    pub method: Method,
    pub settings: IterationSettings,
    pub probes: ProbeSpec,
    pub tolerances: ReportTolerances,
    pub records: Vec<ProbeRecord>,
    pub traces: Vec<IterationTrace>,
    pub domination_warnings: Vec<usize>,
    pub max_cubic_residual: f64,
    pub max_mult_residual: f64,
    pub superstability: Verdict,
    /// `max ‖T − T'‖` against a rerun at `tol/100`; `None` if that rerun failed.
    pub uniqueness: Option<f64>,
}

pub fn analyze(input: &AnalysisInput) -> Result<StabilityReport> {
    let algebra = input.f.algebra();
    let pairs = input.probes.pairs(algebra)?;
    let xs: Vec<Element> = pairs.iter().map(|(x, _)| x.clone()).collect();
    let tol = &input.tolerances;
    let t = build_approximant(&input.f, input.method, input.settings);

    let bounds = check_bound(&input.f, &t, &input.phi2, &pairs, input.method, tol)?;
    let max_cubic_residual = check_cubic_residual(&t, &pairs)?;
    let max_mult_residual = check_mult_residual(&t, &pairs)?;
    let superstability = superstability_check(
        &input.f,
        &input.phi1,
        &input.phi2,
        input.method,
        &pairs,
        &input.settings,
        tol,
    )?;
    let uniqueness = input
        .settings
        .with_tol(input.settings.tol / 100.0)
        .ok()
        .and_then(|tight| {
            let t2 = build_approximant(&input.f, input.method, tight);
            uniqueness_check(&t, &t2, &xs).ok()
        });

    Ok(StabilityReport {
        map: input.f.to_string(),
        phi1: input.phi1.to_string(),
        phi2: input.phi2.to_string(),
        algebra,
        method: input.method,
        settings: input.settings,
        probes: input.probes,
        tolerances: *tol,
        records: bounds.records,
        traces: bounds.traces,
        domination_warnings: bounds.domination_warnings,
        max_cubic_residual,
        max_mult_residual,
        superstability,
        uniqueness,
    })
}

/// Inputs of the worked strict-upper-4x4 example: `f(x) = x³ + a`,
/// `φ1 ≡ 4`, `φ2 ≡ 56`, forward method.
pub fn worked_example_input(settings: IterationSettings, probes: ProbeSpec) -> AnalysisInput {
    AnalysisInput {
        f: MapSpec::cubic_plus(example_constant_a()),
        phi1: ControlFunction::Constant { theta: 4.0 },
        phi2: ControlFunction::Constant { theta: 56.0 },
        method: Method::Forward,
        settings,
        probes,
        tolerances: ReportTolerances::default(),
    }
}

pub fn run_worked_example_with(
    settings: IterationSettings,
    probes: ProbeSpec,
) -> Result<StabilityReport> {
    analyze(&worked_example_input(settings, probes))
}

pub fn run_worked_example() -> StabilityReport {
    run_worked_example_with(IterationSettings::default(), ProbeSpec::default())
        .expect("the worked example converges under default settings")
}

impl StabilityReport {
    pub fn all_bounds_ok(&self) -> bool {
        self.records.iter().all(|r| r.bound_ok)
    }

    pub fn first_violation(&self) -> Option<&ProbeRecord> {
        self.records.iter().find(|r| !r.bound_ok)
    }

    pub fn residuals_ok(&self) -> bool {
        self.max_cubic_residual < self.tolerances.residual
            && self.max_mult_residual < self.tolerances.residual
    }

    pub fn max_err_tf(&self) -> f64 {
        self.records.iter().map(|r| r.err_tf).fold(0.0, f64::max)
    }

    pub fn max_converged_at(&self) -> Option<usize> {
        self.records.iter().filter_map(|r| r.converged_at).max()
    }

    fn range(&self, field: impl Fn(&ProbeRecord) -> f64) -> (f64, f64) {
        self.records
            .iter()
            .map(field)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.probe_index.to_string(),
                r.norm_x.to_string(),
                r.defect_cubic.to_string(),
                r.defect_mult.to_string(),
                r.psi.to_string(),
                r.bound.to_string(),
                r.err_tf.to_string(),
                r.bound_ok.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// One row per iteration step: probe index, step, gap, then `T_n(x)`
    /// coefficients.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["probe_index".to_string(), "n".into(), "gap".into()];
        header.extend((0..self.algebra.dim()).map(|i| format!("t_{i}")));
        w.write_record(&header)?;
        for (i, trace) in self.traces.iter().enumerate() {
            for step in &trace.steps {
                let mut row = vec![i.to_string(), step.n.to_string(), step.gap.to_string()];
                row.extend(step.value.coeffs().iter().map(|c| c.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let ok = self.records.iter().filter(|r| r.bound_ok).count();
        let (psi_lo, psi_hi) = self.range(|r| r.psi);
        let s = &self.settings;
        let mut out = String::new();
        let mut line = |l: String| {
            out.push_str(&l);
            out.push('\n');
        };
        line("cubic stability report".into());
        line(format!("  map            : {}", self.map));
        line(format!("  phi1           : {}", self.phi1));
        line(format!("  phi2           : {}", self.phi2));
        line(format!(
            "  method         : {} (n_max {}, tol {:e}, guard {:e})",
            self.method, s.n_max, s.tol, s.guard
        ));
        line(format!(
            "  probes         : {} pairs, radius {}, seed {}",
            self.probes.count, self.probes.radius, self.probes.seed
        ));
        line("bound ‖T(x) − f(x)‖ ≤ Ψ(x,0)/16".into());
        line(format!("  bound_ok       : {ok}/{}", self.records.len()));
        if let Some(r) = self.first_violation() {
            line(format!(
                "  first violation: probe {} (err_Tf {} > bound {})",
                r.probe_index, r.err_tf, r.bound
            ));
        }
        line(format!("  max err_Tf     : {}", self.max_err_tf()));
        line(format!("  psi range      : [{psi_lo}, {psi_hi}]"));
        match self.max_converged_at() {
            Some(n) => line(format!("  converged_at   : max {n}")),
            None => line("  converged_at   : none".into()),
        }
        if !self.domination_warnings.is_empty() {
            line(format!(
                "  warning        : phi2 does not dominate the cubic defect at probes {:?}",
                self.domination_warnings
            ));
        }
        line("residuals of T".into());
        line(format!("  cubic          : {:e}", self.max_cubic_residual));
        line(format!("  multiplicative : {:e}", self.max_mult_residual));
        match self.uniqueness {
            Some(u) => line(format!(
                "uniqueness       : max ‖T − T'‖ = {u:e} (rerun at tol/100)"
            )),
            None => line("uniqueness       : rerun at tol/100 did not converge".into()),
        }
        line(format!("superstability   : {}", self.superstability));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Sampler;

    fn xs(algebra: Algebra, n: usize, seed: u64) -> Vec<Element> {
        let mut s = Sampler::new(algebra, 1.0, seed).unwrap();
        (0..n).map(|_| s.next_element()).collect()
    }

    fn pairs(algebra: Algebra, n: usize, seed: u64) -> Vec<(Element, Element)> {
        ProbeSpec::new(n, 1.0, seed).pairs(algebra).unwrap()
    }

    #[test]
    fn example_bound_holds_with_equality() {
        let f = MapSpec::cubic_plus(example_constant_a());
        let t = build_approximant(&f, Method::Forward, IterationSettings::default());
        let phi2 = ControlFunction::constant(56.0).unwrap();
        let check = check_bound(
            &f,
            &t,
            &phi2,
            &pairs(Algebra::StrictUpper4, 20, 1),
            Method::Forward,
            &ReportTolerances::default(),
        )
        .unwrap();
        assert!(check.domination_warnings.is_empty());
        for r in &check.records {
            assert_eq!(r.psi, 64.0);
            assert_eq!(r.bound, 4.0);
            assert!((r.err_tf - 4.0).abs() < 1e-9);
            assert!(r.bound_ok);
        }
    }

    #[test]
    fn pure_cubic_bound_is_trivial() {
        let f = MapSpec::pure_cubic(Algebra::Pointwise(3));
        let t = build_approximant(&f, Method::Forward, IterationSettings::default());
        let phi2 = ControlFunction::constant(1.0).unwrap();
        let check = check_bound(
            &f,
            &t,
            &phi2,
            &pairs(Algebra::Pointwise(3), 10, 2),
            Method::Forward,
            &ReportTolerances::default(),
        )
        .unwrap();
        assert!(check.records.iter().all(|r| r.err_tf == 0.0 && r.bound_ok));
    }

    #[test]
    fn quartic_backward_bound() {
        let eps = 1e-3;
        let f = MapSpec::cubic_plus_quartic(eps).unwrap();
        let t = build_approximant(&f, Method::Backward, IterationSettings::default());
        let phi2 = ControlFunction::sum_powers(28.0 * eps, 4.0).unwrap();
        let probes = ProbeSpec::new(30, 2.0, 3).pairs(Algebra::RealLine).unwrap();
        let check = check_bound(
            &f,
            &t,
            &phi2,
            &probes,
            Method::Backward,
            &ReportTolerances::default(),
        )
        .unwrap();
        assert!(check.domination_warnings.is_empty());
        for r in &check.records {
            let x4 = r.norm_x.powi(4);
            assert!((r.err_tf - eps * x4).abs() < 1e-9);
            assert!((r.bound - 28.0 * eps * x4 / 16.0).abs() < 1e-12);
            assert!(r.bound_ok);
        }
    }

    #[test]
    fn domination_failure_is_reported() {
        let f = MapSpec::cubic_plus(example_constant_a());
        let t = build_approximant(&f, Method::Forward, IterationSettings::default());
        let phi2 = ControlFunction::constant(10.0).unwrap();
        let check = check_bound(
            &f,
            &t,
            &phi2,
            &pairs(Algebra::StrictUpper4, 5, 1),
            Method::Forward,
            &ReportTolerances::default(),
        )
        .unwrap();
        assert_eq!(check.domination_warnings, vec![0, 1, 2, 3, 4]);
        assert!(check.records.iter().all(|r| !r.bound_ok));
    }

    #[test]
    fn residual_examples() {
        let p = pairs(Algebra::StrictUpper4, 50, 4);
        let ex = build_approximant(
            &MapSpec::cubic_plus(example_constant_a()),
            Method::Forward,
            IterationSettings::default(),
        );
        assert!(check_cubic_residual(&ex, &p).unwrap() < 1e-8);
        assert!(check_mult_residual(&ex, &p).unwrap() < 1e-8);
        let cube = MapSpec::pure_cubic(Algebra::StrictUpper4);
        assert!(check_cubic_residual(&cube, &p).unwrap() < 1e-12);
        assert_eq!(check_mult_residual(&cube, &p).unwrap(), 0.0);
        let zero = MapSpec::zero(Algebra::StrictUpper4);
        assert_eq!(check_cubic_residual(&zero, &p).unwrap(), 0.0);

        let one = Element::scalar(1.0).unwrap();
        let doubled = MapSpec::scaled_cubic(Algebra::RealLine, 2.0);
        assert_eq!(
            check_mult_residual(&doubled, &[(one.clone(), one)]).unwrap(),
            2.0
        );
    }

    #[test]
    fn homogeneity_examples() {
        let probes = xs(Algebra::StrictUpper4, 20, 5);
        let cube = MapSpec::pure_cubic(Algebra::StrictUpper4);
        for n in 1..5 {
            assert!(check_homogeneity(&cube, &probes, n).unwrap() <= 1e-9);
        }
        let ex = MapSpec::cubic_plus(example_constant_a());
        assert_eq!(check_homogeneity(&ex, &probes, 1).unwrap(), 28.0);
        assert_eq!(
            check_homogeneity(&MapSpec::zero(Algebra::StrictUpper4), &probes, 3).unwrap(),
            0.0
        );
        assert!(check_homogeneity(&cube, &probes, 0).is_err());
    }

    #[test]
    fn uniqueness_examples() {
        let probes = xs(Algebra::StrictUpper4, 20, 6);
        let f = MapSpec::cubic_plus(example_constant_a());
        let loose = build_approximant(
            &f,
            Method::Forward,
            IterationSettings::default().with_tol(1e-8).unwrap(),
        );
        let tight = build_approximant(
            &f,
            Method::Forward,
            IterationSettings::default().with_tol(1e-12).unwrap(),
        );
        assert!(uniqueness_check(&loose, &tight, &probes).unwrap() < 1e-8);
        let cube = MapSpec::pure_cubic(Algebra::StrictUpper4);
        let fw = build_approximant(&cube, Method::Forward, IterationSettings::default());
        let bw = build_approximant(&cube, Method::Backward, IterationSettings::default());
        assert!(uniqueness_check(&fw, &bw, &probes).unwrap() <= 1e-12);
        assert_eq!(uniqueness_check(&fw, &fw, &probes).unwrap(), 0.0);
    }

    fn verdict(
        f: &MapSpec,
        phi1: ControlFunction,
        phi2: ControlFunction,
        method: Method,
        algebra: Algebra,
    ) -> Verdict {
        superstability_check(
            f,
            &phi1,
            &phi2,
            method,
            &pairs(algebra, 25, 7),
            &IterationSettings::default(),
            &ReportTolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn superstability_examples() {
        let cube = MapSpec::pure_cubic(Algebra::RealLine);
        let c1 = ControlFunction::constant(1.0).unwrap();
        let v = verdict(
            &cube,
            c1.clone(),
            ControlFunction::power_of_y(1.0, 2.0).unwrap(),
            Method::Forward,
            Algebra::RealLine,
        );
        assert_eq!(v, Verdict::Superstable { max_f_minus_t: 0.0 });
        let v = verdict(
            &cube,
            c1,
            ControlFunction::product_powers(1.0, 1.0, 1.0).unwrap(),
            Method::Forward,
            Algebra::RealLine,
        );
        assert_eq!(v.label(), "superstable");

        let ex = MapSpec::cubic_plus(example_constant_a());
        let v = verdict(
            &ex,
            ControlFunction::constant(4.0).unwrap(),
            ControlFunction::constant(56.0).unwrap(),
            Method::Forward,
            Algebra::StrictUpper4,
        );
        let Verdict::NotApplicable {
            reason,
            max_f_minus_t,
        } = &v
        else {
            panic!("{v:?}")
        };
        assert!(reason.contains("56"));
        assert!((max_f_minus_t.unwrap() - 4.0).abs() < 1e-9);
        assert!(v.to_string().contains("counterexample note"));
    }

    #[test]
    fn superstability_backward_regime() {
        let cube = MapSpec::pure_cubic(Algebra::RealLine);
        let zero_phi1 = ControlFunction::constant(0.0).unwrap();
        let v = verdict(
            &cube,
            zero_phi1.clone(),
            ControlFunction::power_of_y(1.0, 4.0).unwrap(),
            Method::Backward,
            Algebra::RealLine,
        );
        assert_eq!(v.label(), "superstable");
        // Degree 2 is outside the backward regime.
        let v = verdict(
            &cube,
            zero_phi1,
            ControlFunction::power_of_y(1.0, 2.0).unwrap(),
            Method::Backward,
            Algebra::RealLine,
        );
        assert_eq!(v.label(), "not-applicable");
        // Constant φ1 never vanishes backward.
        let v = verdict(
            &cube,
            ControlFunction::constant(1.0).unwrap(),
            ControlFunction::power_of_y(1.0, 4.0).unwrap(),
            Method::Backward,
            Algebra::RealLine,
        );
        assert!(
            matches!(v, Verdict::NotApplicable { ref reason, .. } if reason.contains("vanishing"))
        );
    }

    #[test]
    fn undominated_controls_are_not_applicable() {
        // x³ + x has a nonzero cubic defect at (x, y) but φ2 = ‖y‖² may not cover it.
        let f = MapSpec::new(1.0, 0.0, 1.0, Element::zero(Algebra::RealLine)).unwrap();
        let v = verdict(
            &f,
            ControlFunction::constant(100.0).unwrap(),
            ControlFunction::power_of_y(1e-6, 2.0).unwrap(),
            Method::Forward,
            Algebra::RealLine,
        );
        assert!(
            matches!(v, Verdict::NotApplicable { ref reason, .. } if reason.contains("dominate"))
        );
    }

    #[test]
    fn example_report() {
        let r = run_worked_example();
        assert!(r.all_bounds_ok());
        assert!(r.residuals_ok());
        assert!((r.max_err_tf() - 4.0).abs() < 1e-9);
        assert!(r.records.iter().all(|p| p.psi == 64.0));
        assert_eq!(r.superstability.label(), "not-applicable");
        assert!(r.uniqueness.unwrap() < 1e-8);
        let text = r.to_text();
        assert!(text.contains("bound_ok       : 100/100"));
        let csv = r.csv_string();
        assert!(csv.starts_with(
            "probe_index,norm_x,defect_cubic,defect_mult,psi,bound,err_Tf,bound_ok\n"
        ));
        assert_eq!(csv.lines().count(), 101);
        assert_eq!(csv, run_worked_example().csv_string());
    }

    #[test]
    fn trace_csv_has_one_row_per_step() {
        let r = run_worked_example_with(IterationSettings::default(), ProbeSpec::new(3, 1.0, 1))
            .unwrap();
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let steps: usize = r.traces.iter().map(|t| t.steps.len()).sum();
        assert_eq!(text.lines().count(), steps + 1);
        assert!(text.starts_with("probe_index,n,gap,t_0,t_1,t_2,t_3,t_4,t_5\n"));
    }
}
