//! Full-line driving coefficients for the reflected constructions.
//!
//! One-sided reflection runs an unconstrained diffusion with symmetrized
//! coefficients (`sigma` mirrored even, `b` mirrored odd) and reflects via
//! `|x|`. Two-sided reflection folds the line onto `[0, a]` with the tent
//! map `g` and mirrors the coefficients across every fold.
//!
//! [`ExtensionMode::FoldExtended`] is the band-local extension: coefficients
//! folded on `[0, 2a]`, unit deviation and a restoring unit drift outside.
//! [`ExtensionMode::PeriodicFold`] mirrors with period `2a` over the whole
//! line; the path simulator drives two-sided reflection with this mode so
//! the folded state never sticks at the boundary no matter how far the
//! driver wanders.

use crate::coefficient::{CoefficientField, DomainSpec, FuncSpec, Segment, ValidationReport};
use thiserror::Error;

/// Sign convention of the symmetrization: `sgn(0) = 0`.
fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("expected a {expected} field for this transform")]
    WrongDomain { expected: &'static str },
    #[error("field failed validation:\n{0}")]
    InvalidField(ValidationReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionMode {
    Symmetrized,
    FoldExtended,
    PeriodicFold,
}

/// Full-line view of a base field's coefficients. Evaluation is pure and
/// defined for every real `x`; sigma stays strictly positive everywhere.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    base: CoefficientField,
    mode: ExtensionMode,
    a: Option<f64>,
}

/// Tent map onto `[0, a]`: identity on `[0, a]`, mirrored on `(a, 2a]`,
/// zero outside `[0, 2a]`. Continuous and 1-Lipschitz.
pub fn fold_map(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x < 0.0 || x > 2.0 * a {
        0.0
    } else if x <= a {
        x
    } else {
        2.0 * a - x
    }
}

/// Periodic mirror fold onto `[0, a]` with period `2a`; agrees with
/// [`fold_map`] on `[0, 2a]`.
pub fn fold_map_periodic(a: f64, x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * a);
    if r <= a {
        r
    } else {
        2.0 * a - r
    }
}

/// Slope of the periodic fold at `x`: `+1` on ascending runs, `-1` on
/// descending ones (right-continuous at the fold points).
pub fn fold_slope_periodic(a: f64, x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * a);
    if r < a {
        1.0
    } else {
        -1.0
    }
}

/// Even/odd mirror of a half-line field: `sigma~(x) = sigma(|x|)`,
/// `b~(x) = sgn(x) b(|x|)` with `b~(0) = 0`.
pub fn symmetrize(field: &CoefficientField) -> Result<ExtendedField, TransformError> {
    if field.domain != DomainSpec::HalfLine {
        return Err(TransformError::WrongDomain {
            expected: "half-line",
        });
    }
    let report = field.validate();
    if !report.is_valid() {
        return Err(TransformError::InvalidField(report));
    }
    Ok(ExtendedField {
        base: field.clone(),
        mode: ExtensionMode::Symmetrized,
        a: None,
    })
}

/// Band-local fold extension of an interval field: coefficients folded
/// through `g` on `[0, 2a]`, unit sigma outside, and a unit drift pointing
/// back toward the band on both sides.
pub fn fold_extend(field: &CoefficientField) -> Result<ExtendedField, TransformError> {
    let a = match field.domain {
        DomainSpec::Interval { a } => a,
        _ => {
            return Err(TransformError::WrongDomain {
                expected: "interval",
            })
        }
    };
    let report = field.validate();
    if !report.is_valid() {
        return Err(TransformError::InvalidField(report));
    }
    Ok(ExtendedField {
        base: field.clone(),
        mode: ExtensionMode::FoldExtended,
        a: Some(a),
    })
}

/// Periodic mirror extension of an interval field, defined on all of `R`.
pub fn fold_extend_periodic(field: &CoefficientField) -> Result<ExtendedField, TransformError> {
    let folded = fold_extend(field)?;
    Ok(ExtendedField {
        mode: ExtensionMode::PeriodicFold,
        ..folded
    })
}

impl ExtendedField {
    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn base(&self) -> &CoefficientField {
        &self.base
    }

    /// Fold width for the two-sided modes.
    pub fn a(&self) -> Option<f64> {
        self.a
    }

    pub fn eval_b(&self, x: f64) -> f64 {
        match self.mode {
            ExtensionMode::Symmetrized => {
                sgn0(x) * self.base.eval_b(x.abs()).expect("|x| is in the half line")
            }
            ExtensionMode::FoldExtended => {
                let a = self.a.expect("fold mode carries a");
                if x < 0.0 {
                    1.0
                } else if x > 2.0 * a {
                    -1.0
                } else {
                    sgn0(a - x) * self.base.eval_b(fold_map(a, x)).expect("g(x) is in [0, a]")
                }
            }
            ExtensionMode::PeriodicFold => {
                let a = self.a.expect("fold mode carries a");
                fold_slope_periodic(a, x)
                    * self
                        .base
                        .eval_b(fold_map_periodic(a, x))
                        .expect("fold lands in [0, a]")
            }
        }
    }

    pub fn eval_sigma(&self, x: f64) -> f64 {
        match self.mode {
            ExtensionMode::Symmetrized => self
                .base
                .eval_sigma(x.abs())
                .expect("|x| is in the half line"),
            ExtensionMode::FoldExtended => {
                let a = self.a.expect("fold mode carries a");
                if x < 0.0 || x > 2.0 * a {
                    1.0
                } else {
                    self.base
                        .eval_sigma(fold_map(a, x))
                        .expect("g(x) is in [0, a]")
                }
            }
            ExtensionMode::PeriodicFold => {
                let a = self.a.expect("fold mode carries a");
                self.base
                    .eval_sigma(fold_map_periodic(a, x))
                    .expect("fold lands in [0, a]")
            }
        }
    }

    pub fn eval_beta(&self, x: f64) -> f64 {
        let s = self.eval_sigma(x);
        2.0 * self.eval_b(x) / (s * s)
    }

    /// Materializes the extension as an ordinary full-line field so it can
    /// go through the standard validation and analytic machinery. Values
    /// agree with `eval_*` except on the null set of fold points, where the
    /// materialized field keeps its right-continuous convention.
    ///
    /// The periodic mode has no finite segment representation.
    pub fn to_field(&self) -> Option<CoefficientField> {
        match self.mode {
            ExtensionMode::Symmetrized => {
                let mut segments = Vec::new();
                for seg in self.base.segments.iter().rev() {
                    segments.push(Segment::new(
                        if seg.upper == f64::INFINITY {
                            f64::NEG_INFINITY
                        } else {
                            -seg.upper
                        },
                        -seg.lower,
                        mirror_spec(&seg.b, true),
                        mirror_spec(&seg.sigma, false),
                    ));
                }
                segments.extend(self.base.segments.iter().cloned());
                Some(CoefficientField::new(DomainSpec::FullLine, segments))
            }
            ExtensionMode::FoldExtended => {
                let a = self.a.expect("fold mode carries a");
                let mut segments = Vec::new();
                segments.push(Segment::new(
                    f64::NEG_INFINITY,
                    0.0,
                    FuncSpec::constant(1.0),
                    FuncSpec::constant(1.0),
                ));
                segments.extend(self.base.segments.iter().cloned());
                for seg in self.base.segments.iter().rev() {
                    segments.push(Segment::new(
                        2.0 * a - seg.upper,
                        2.0 * a - seg.lower,
                        reflect_spec(&seg.b, a, true),
                        reflect_spec(&seg.sigma, a, false),
                    ));
                }
                segments.push(Segment::new(
                    2.0 * a,
                    f64::INFINITY,
                    FuncSpec::constant(-1.0),
                    FuncSpec::constant(1.0),
                ));
                Some(CoefficientField::new(DomainSpec::FullLine, segments))
            }
            ExtensionMode::PeriodicFold => None,
        }
    }
}

/// Spec for the mirror segment about 0: `f(-x)`, negated when `odd`.
fn mirror_spec(spec: &FuncSpec, odd: bool) -> FuncSpec {
    let s = if odd { -1.0 } else { 1.0 };
    match spec {
        FuncSpec::Constant { c0 } => FuncSpec::constant(s * c0),
        FuncSpec::Affine { c0, c1 } => FuncSpec::affine(s * c0, -s * c1),
        FuncSpec::Table { points } => {
            FuncSpec::table(points.iter().rev().map(|&(x, v)| (-x, s * v)).collect())
        }
    }
}

/// Spec for the segment mirrored about `x = a` (mapped to `[2a - u, 2a - l]`):
/// evaluates `f(2a - x)`, negated when `odd`.
fn reflect_spec(spec: &FuncSpec, a: f64, odd: bool) -> FuncSpec {
    let s = if odd { -1.0 } else { 1.0 };
    match spec {
        FuncSpec::Constant { c0 } => FuncSpec::constant(s * c0),
        FuncSpec::Affine { c0, c1 } => FuncSpec::affine(s * (c0 + 2.0 * a * c1), -s * c1),
        FuncSpec::Table { points } => FuncSpec::table(
            points
                .iter()
                .rev()
                .map(|&(x, v)| (2.0 * a - x, s * v))
                .collect(),
        ),
    }
}
