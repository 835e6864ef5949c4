//! Numerical direct method for cubic homomorphisms on finite-dimensional
//! real Banach algebras.
//!
//! Given a map `f` with bounded multiplicative and cubic defects, the crate
//! builds the limit `T(x) = lim f(2ⁿx)/8ⁿ` (or `lim 8ⁿ f(x/2ⁿ)`), sums the
//! control series `Ψ`, and checks `‖T(x) − f(x)‖ ≤ Ψ(x,0)/16` together with the
//! cubic and multiplicative identities for `T`.

pub mod algebra;
pub mod control;
pub mod error;
pub mod hyers;
pub mod maps;
pub mod verify;

pub use algebra::{example_constant_a, sample, Algebra, Element, ProbeSpec, Sampler};
pub use control::{
    phi1_vanishing_check, psi, psi_backward, psi_forward, ControlFunction, SeriesValue,
    VanishingCheck,
};
pub use error::{Error, Result};
pub use hyers::{
    build_approximant, iterate_backward, iterate_forward, CubicApproximant, IterationSettings,
    IterationTrace, Method,
};
pub use maps::{
    defect_samples, defect_sup_estimate, DefectKind, DefectSample, MapEvaluator, MapSpec,
};
pub use verify::{
    analyze, run_worked_example, run_worked_example_with, worked_example_input, AnalysisInput,
    ProbeRecord, ReportTolerances, StabilityReport, Verdict,
};
