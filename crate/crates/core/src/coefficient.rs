//! Piecewise drift and deviation coefficients.
//!
//! A [`CoefficientField`] assigns a drift `b(x)` and a deviation `sigma(x) > 0`
//! to every point of its domain through an ordered list of segments. Segment
//! values may be constant, affine, or tabulated (linearly interpolated), so
//! jumps at segment breakpoints are allowed. Evaluation is right-continuous:
//! at a breakpoint the segment whose lower endpoint is the breakpoint wins.
//!
//! Unbounded tail segments must carry constant coefficients; this keeps the
//! recurrence classification and normalizing-constant finiteness decidable in
//! closed form instead of by numerical divergence probing.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Domain on which a field lives: `[0, inf)`, `[0, a]`, or all of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    HalfLine,
    Interval { a: f64 },
    FullLine,
}

impl DomainSpec {
    pub fn lower(&self) -> f64 {
        match self {
            DomainSpec::FullLine => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            DomainSpec::Interval { a } => *a,
            _ => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        !x.is_nan() && x >= self.lower() && x <= self.upper() && x.is_finite()
    }
}

/// One coefficient on one segment: constant `c0`, affine `c0 + c1*x`, or a
/// table of `(x, value)` points interpolated linearly and clamped to its
/// endpoint values outside the tabulated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FuncSpec {
    Constant { c0: f64 },
    Affine { c0: f64, c1: f64 },
    Table { points: Vec<(f64, f64)> },
}

impl FuncSpec {
    pub fn constant(c0: f64) -> Self {
        FuncSpec::Constant { c0 }
    }

    pub fn affine(c0: f64, c1: f64) -> Self {
        FuncSpec::Affine { c0, c1 }
    }

    pub fn table(points: Vec<(f64, f64)>) -> Self {
        FuncSpec::Table { points }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FuncSpec::Constant { c0 } => *c0,
            FuncSpec::Affine { c0, c1 } => c0 + c1 * x,
            FuncSpec::Table { points } => {
                let first = points.first().expect("validated table is nonempty");
                let last = points.last().expect("validated table is nonempty");
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                // points are strictly increasing in x after validation
                let i = points.partition_point(|p| p.0 <= x) - 1;
                let (x0, v0) = points[i];
                let (x1, v1) = points[i + 1];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FuncSpec::Constant { .. })
    }

    fn values_finite(&self) -> bool {
        match self {
            FuncSpec::Constant { c0 } => c0.is_finite(),
            FuncSpec::Affine { c0, c1 } => c0.is_finite() && c1.is_finite(),
            FuncSpec::Table { points } => {
                points.iter().all(|(x, v)| x.is_finite() && v.is_finite())
            }
        }
    }

    /// Greatest lower bound of the (clamped) piecewise-linear value on
    /// `[lo, hi]`. Both bounds must be finite unless the spec is constant.
    fn min_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            FuncSpec::Constant { c0 } => *c0,
            FuncSpec::Affine { c0, c1 } => (c0 + c1 * lo).min(c0 + c1 * hi),
            FuncSpec::Table { points } => {
                points.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

mod extended_bound {
    //! Segment bounds in JSON: a number, `"inf"`, or `"-inf"`.

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Tag(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(D::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got \"{other}\""
                ))),
            },
        }
    }
}

/// One tile of the domain with its drift and deviation specs. `upper` (and,
/// on the full line, `lower`) may be infinite on tail segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "extended_bound")]
    pub lower: f64,
    #[serde(with = "extended_bound")]
    pub upper: f64,
    pub b: FuncSpec,
    pub sigma: FuncSpec,
}

impl Segment {
    pub fn new(lower: f64, upper: f64, b: FuncSpec, sigma: FuncSpec) -> Self {
        Segment {
            lower,
            upper,
            b,
            sigma,
        }
    }
}

/// A validated-on-demand piecewise coefficient pair `(b, sigma)` on a domain.
///
/// Immutable after construction; evaluation is pure and thread-safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub domain: DomainSpec,
    pub segments: Vec<Segment>,
}

/// A single validation failure. Violations are data, not panics: collect
/// them all and report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("interval width must be positive and finite, got a = {a}")]
    BadIntervalWidth { a: f64 },
    #[error("field has no segments")]
    Empty,
    #[error("segment {index}: bounds out of order ({lower} >= {upper})")]
    BadBounds {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("segment {index}: non-finite coefficient value")]
    NonFinite { index: usize },
    #[error("segment {index}: gap in domain coverage at x = {at}")]
    Gap { index: usize, at: f64 },
    #[error("segment {index}: segments overlap at x = {at}")]
    Overlap { index: usize, at: f64 },
    #[error("coverage starts at {found}, domain requires {expected}")]
    WrongStart { found: f64, expected: f64 },
    #[error("coverage ends at {found}, domain requires {expected}")]
    WrongEnd { found: f64, expected: f64 },
    #[error("segment {index}: unbounded bound not allowed on this domain")]
    UnboundedNotAllowed { index: usize },
    #[error("segment {index}: unbounded tail must use constant b and sigma")]
    TailNotConstant { index: usize },
    #[error("segment {index}: sigma not positive (min value {min})")]
    SigmaNotPositive { index: usize, min: f64 },
    #[error("segment {index}: table needs at least 2 points")]
    TableTooShort { index: usize },
    #[error("segment {index}: table abscissae must be strictly increasing")]
    TableNotSorted { index: usize },
}

/// Outcome of [`CoefficientField::validate`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Evaluation outside the field's domain.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("x = {x} lies outside the field domain")]
pub struct DomainError {
    pub x: f64,
}

impl CoefficientField {
    pub fn new(domain: DomainSpec, segments: Vec<Segment>) -> Self {
        CoefficientField { domain, segments }
    }

    /// Single-segment field over the whole domain.
    pub fn uniform(domain: DomainSpec, b: FuncSpec, sigma: FuncSpec) -> Self {
        let seg = Segment::new(domain.lower(), domain.upper(), b, sigma);
        CoefficientField::new(domain, vec![seg])
    }

    /// Checks the structural conditions: segments tile the domain, every
    /// sigma has a strictly positive minimum, tables are monotone, and
    /// unbounded tails are constant. Returns all violations found.
    // negated comparisons are deliberate: they also reject NaN inputs
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        if let DomainSpec::Interval { a } = self.domain {
            if !(a.is_finite() && a > 0.0) {
                violations.push(Violation::BadIntervalWidth { a });
            }
        }

        if self.segments.is_empty() {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        }

        let n = self.segments.len();
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.lower < seg.upper) {
                violations.push(Violation::BadBounds {
                    index: i,
                    lower: seg.lower,
                    upper: seg.upper,
                });
            }
            if seg.lower.is_nan() || seg.upper.is_nan() {
                violations.push(Violation::NonFinite { index: i });
            }
            if !seg.b.values_finite() || !seg.sigma.values_finite() {
                violations.push(Violation::NonFinite { index: i });
            }

            let lower_unbounded = seg.lower == f64::NEG_INFINITY;
            let upper_unbounded = seg.upper == f64::INFINITY;
            let lower_ok = self.domain == DomainSpec::FullLine && i == 0;
            let upper_ok = !matches!(self.domain, DomainSpec::Interval { .. }) && i == n - 1;
            if (lower_unbounded && !lower_ok) || (upper_unbounded && !upper_ok) {
                violations.push(Violation::UnboundedNotAllowed { index: i });
            } else if (lower_unbounded || upper_unbounded)
                && !(seg.b.is_constant() && seg.sigma.is_constant())
            {
                violations.push(Violation::TailNotConstant { index: i });
            }

            for spec in [&seg.b, &seg.sigma] {
                if let FuncSpec::Table { points } = spec {
                    if points.len() < 2 {
                        violations.push(Violation::TableTooShort { index: i });
                    }
                    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                        violations.push(Violation::TableNotSorted { index: i });
                    }
                }
            }

            let bounded = seg.lower.is_finite() && seg.upper.is_finite();
            if bounded || seg.sigma.is_constant() {
                let min = seg.sigma.min_on(seg.lower, seg.upper);
                if !(min > 0.0) {
                    violations.push(Violation::SigmaNotPositive { index: i, min });
                }
            }
        }

        let first = self.segments[0].lower;
        if first != self.domain.lower() {
            violations.push(Violation::WrongStart {
                found: first,
                expected: self.domain.lower(),
            });
        }
        for i in 1..n {
            let prev = self.segments[i - 1].upper;
            let cur = self.segments[i].lower;
            if cur > prev {
                violations.push(Violation::Gap { index: i, at: prev });
            } else if cur < prev {
                violations.push(Violation::Overlap { index: i, at: cur });
            }
        }
        let last = self.segments[n - 1].upper;
        if last != self.domain.upper() {
            violations.push(Violation::WrongEnd {
                found: last,
                expected: self.domain.upper(),
            });
        }

        ValidationReport { violations }
    }

    /// Segment owning `x` under the right-continuous convention. The domain
    /// supremum of an interval belongs to the last segment.
    pub(crate) fn segment_at(&self, x: f64) -> Option<&Segment> {
        if !self.domain.contains(x) {
            return None;
        }
        let i = self.segments.partition_point(|s| s.lower <= x);
        if i == 0 {
            return None;
        }
        let seg = &self.segments[i - 1];
        if x < seg.upper || (i == self.segments.len() && x == self.domain.upper()) {
            Some(seg)
        } else {
            None
        }
    }

    pub fn eval_b(&self, x: f64) -> Result<f64, DomainError> {
        self.segment_at(x)
            .map(|s| s.b.eval(x))
            .ok_or(DomainError { x })
    }

    pub fn eval_sigma(&self, x: f64) -> Result<f64, DomainError> {
        self.segment_at(x)
            .map(|s| s.sigma.eval(x))
            .ok_or(DomainError { x })
    }

    /// The drift-to-variance ratio `beta(x) = 2 b(x) / sigma(x)^2`.
    pub fn eval_beta(&self, x: f64) -> Result<f64, DomainError> {
        let seg = self.segment_at(x).ok_or(DomainError { x })?;
        let s = seg.sigma.eval(x);
        Ok(2.0 * seg.b.eval(x) / (s * s))
    }
}
