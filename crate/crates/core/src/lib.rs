//! One-dimensional state-dependent diffusions reflected at the origin or at
//! both ends of `[0, a]`, with possibly discontinuous drift and deviation.
//!
//! The crate has two halves that check each other:
//!
//! - [`analytic`] computes closed-form stationary densities, recurrence
//!   classification, normalizing constants, boundary push rates, and
//!   two-barrier hitting probabilities from a piecewise coefficient field;
//! - [`simulate`] and [`verify`] realize the reflected processes pathwise
//!   (symmetrized or folded full-line drivers mapped through `|.|` or the
//!   fold), estimate local times and regulators from the paths, and test
//!   the simulated laws against the analytic values.
//!
//! [`coefficient`] holds the validated piecewise field representation and
//! [`transform`] the full-line coefficient extensions driving the paths.

pub mod analytic;
pub mod coefficient;
pub mod quad;
pub mod simulate;
pub mod transform;
pub mod verify;

pub use analytic::{
    AnalyticError, AnalyticProfile, HittingProbabilities, Recurrence, RegulatorExpectations,
};
pub use coefficient::{
    CoefficientField, DomainError, DomainSpec, FuncSpec, Segment, ValidationReport, Violation,
};
pub use simulate::{
    extract_regulator, first_passage_ensemble, path_rng, run_ensemble, simulate_one_sided,
    simulate_two_sided, simulate_unreflected, EnsembleResult, FirstPassage, HistogramSpec,
    PathMode, PathSample, PathStats, Scheme, SimConfig, SimError, Start,
};
pub use transform::{
    fold_extend, fold_extend_periodic, fold_map, fold_map_periodic, symmetrize, ExtendedField,
    ExtensionMode, TransformError,
};
pub use verify::{
    check_y_half_l0, empirical_cdf, estimate_local_time, ks_distance, refinement_study,
    tanaka_residual, verify_stationarity, AnalyticTargets, EstimateCheck, LocaltimeCheck,
    RefinementLevel, VerificationReport, VerifyError,
};
