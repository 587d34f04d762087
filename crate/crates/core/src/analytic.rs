//! Closed-form stationary analysis of a coefficient field.
//!
//! An [`AnalyticProfile`] compiles a validated [`CoefficientField`] into a
//! piecewise representation on which every quantity of interest has either a
//! closed form or a controlled quadrature:
//!
//! - `B(x)`, the antiderivative of `beta = 2 b / sigma^2` anchored at 0;
//! - the scale function `eta(x) = int_0^x exp(-B(y)) dy`, whose divergence at
//!   the far end of the domain decides recurrence;
//! - the unnormalized stationary density `h(x) = exp(B(x)) / sigma^2(x)` and
//!   its mass `C` (infinite `C` is a value, not an error: the stationary
//!   measure exists, only the distribution-level operations reject it);
//! - boundary push rates `E[Y0(1)] = 1/(2C)` and, on an interval,
//!   `E[Ya(1)] = exp(B(a))/(2C)`;
//! - two-barrier hitting probabilities through the scale function.
//!
//! Pieces between breakpoints always have affine `b` and `sigma`, so the
//! integral of `beta` has a closed form on every piece; `eta` and the density
//! mass use closed forms where `beta` is constant and adaptive Simpson
//! quadrature (absolute tolerance 1e-10) elsewhere.
//!
//! The profile is immutable once built; all queries are read-only.

use crate::coefficient::{
    CoefficientField, DomainError, DomainSpec, FuncSpec, Segment, ValidationReport,
};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const QUAD_TOL: f64 = 1e-10;
const BISECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Recurrent,
    Transient,
}

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("field failed validation:\n{0}")]
    InvalidField(ValidationReport),
    #[error(transparent)]
    OutOfDomain(#[from] DomainError),
    #[error("no stationary measure: the field is transient")]
    Transient,
    #[error("stationary measure is not normalizable (C = inf)")]
    NotNormalizable,
    #[error("quantile input u = {u} outside (0, 1)")]
    BadQuantile { u: f64 },
    #[error("hitting levels must satisfy c < x < d, got c = {c}, x = {x}, d = {d}")]
    BadLevelOrder { c: f64, x: f64, d: f64 },
}

/// Expected boundary push per unit stationary time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatorExpectations {
    /// `E[Y0(1)]`, the rate at the origin.
    pub ey0: f64,
    /// `E[Ya(1)]`, the rate at the upper boundary; interval domains only.
    pub eya: Option<f64>,
}

/// First-passage split between two barriers `c < d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingProbabilities {
    pub lower_first: f64,
    pub upper_first: f64,
}

/// Affine drift and deviation on one piece: `b(x) = b0 + b1 x`,
/// `sigma(x) = s0 + s1 x`, with `sigma > 0` on the piece.
#[derive(Debug, Clone, Copy)]
struct AffinePair {
    b0: f64,
    b1: f64,
    s0: f64,
    s1: f64,
}

impl AffinePair {
    fn constant(b: f64, sigma: f64) -> Self {
        AffinePair {
            b0: b,
            b1: 0.0,
            s0: sigma,
            s1: 0.0,
        }
    }

    fn sigma(&self, x: f64) -> f64 {
        self.s0 + self.s1 * x
    }

    fn const_beta(&self) -> Option<f64> {
        if self.b1 == 0.0 && self.s1 == 0.0 {
            Some(2.0 * self.b0 / (self.s0 * self.s0))
        } else {
            None
        }
    }

    /// `int_p^q beta`, exact closed form. Written around the local values
    /// `bp = b(p)`, `vp = sigma(p)`: the constant-drift part integrates to
    /// `bp (q - p) / (vp vq)` with no cancellation, and the sloped-drift
    /// part switches to a short series when the relative sigma change over
    /// the piece is too small for the log form.
    fn beta_integral(&self, p: f64, q: f64) -> f64 {
        if p == q {
            return 0.0;
        }
        if self.s1 == 0.0 {
            let inv = 2.0 / (self.s0 * self.s0);
            return inv * (self.b0 * (q - p) + 0.5 * self.b1 * (q * q - p * p));
        }
        let d = q - p;
        let vp = self.s0 + self.s1 * p;
        let vq = self.s0 + self.s1 * q;
        let bp = self.b0 + self.b1 * p;
        let r = self.s1 * d / vp;
        let flat = bp * d / (vp * vq);
        let sloped = if self.b1 == 0.0 {
            0.0
        } else if r.abs() >= 1e-4 {
            self.b1 / (self.s1 * self.s1) * (r.ln_1p() - self.s1 * d / vq)
        } else {
            // int_0^d b1 w / (vp + s1 w)^2 dw as a geometric series in -r
            let mut sum = 0.0;
            let mut pw = 1.0;
            for k in 0..8u32 {
                sum += pw * ((k + 1) as f64 / (k + 2) as f64);
                pw *= -r;
            }
            self.b1 * d * d / (vp * vp) * sum
        };
        2.0 * (flat + sloped)
    }
}

/// `(exp(beta * d) - 1) / beta`, the constant-beta kernel for density mass.
fn grow(beta: f64, d: f64) -> f64 {
    if beta == 0.0 {
        d
    } else {
        (beta * d).exp_m1() / beta
    }
}

/// `(1 - exp(-beta * d)) / beta`, the constant-beta kernel for the scale
/// function.
fn decay(beta: f64, d: f64) -> f64 {
    if beta == 0.0 {
        d
    } else {
        -(-beta * d).exp_m1() / beta
    }
}

/// One compiled piece. Tail pieces have an infinite `lo` or `hi`; `anchor`
/// is always the finite end.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    pair: AffinePair,
    anchor: f64,
    b_anchor: f64,
    eta_anchor: f64,
    mass_anchor: f64,
    const_beta: Option<f64>,
}

impl Piece {
    fn b_at(&self, x: f64) -> f64 {
        self.b_anchor + self.pair.beta_integral(self.anchor, x)
    }

    fn eta_at(&self, x: f64) -> f64 {
        let inc = match self.const_beta {
            Some(beta) => (-self.b_anchor).exp() * decay(beta, x - self.anchor),
            None => adaptive_simpson(|y| (-self.b_at(y)).exp(), self.anchor, x, QUAD_TOL),
        };
        self.eta_anchor + inc
    }

    fn h_at(&self, x: f64) -> f64 {
        let s = self.pair.sigma(x);
        self.b_at(x).exp() / (s * s)
    }

    fn mass_at(&self, x: f64) -> f64 {
        let inc = match self.const_beta {
            Some(beta) => {
                self.b_anchor.exp() / (self.pair.s0 * self.pair.s0) * grow(beta, x - self.anchor)
            }
            None => adaptive_simpson(|y| self.h_at(y), self.anchor, x, QUAD_TOL),
        };
        self.mass_anchor + inc
    }
}

/// Compiled analytic view of a coefficient field. See the module docs.
#[derive(Debug, Clone)]
pub struct AnalyticProfile {
    field: CoefficientField,
    pieces: Vec<Piece>,
    recurrence: Recurrence,
    /// Total mass of `h`; `Some(inf)` is null recurrence, `None` transient.
    c: Option<f64>,
    /// Constant tail betas: upper for half/full line, lower for full line.
    upper_tail_beta: Option<f64>,
    lower_tail_beta: Option<f64>,
}

/// Affine coefficients of `spec` on `[lo, hi]`, which by construction lies
/// inside a single table cell or clamp region.
fn affine_on(spec: &FuncSpec, lo: f64, hi: f64) -> (f64, f64) {
    match spec {
        FuncSpec::Constant { c0 } => (*c0, 0.0),
        FuncSpec::Affine { c0, c1 } => (*c0, *c1),
        FuncSpec::Table { points } => {
            let mid = 0.5 * (lo + hi);
            let first = points.first().expect("validated table");
            let last = points.last().expect("validated table");
            if mid <= first.0 {
                return (first.1, 0.0);
            }
            if mid >= last.0 {
                return (last.1, 0.0);
            }
            let i = points.partition_point(|p| p.0 <= mid) - 1;
            let (x0, v0) = points[i];
            let (x1, v1) = points[i + 1];
            let slope = (v1 - v0) / (x1 - x0);
            (v0 - slope * x0, slope)
        }
    }
}

fn pair_on(seg: &Segment, lo: f64, hi: f64) -> AffinePair {
    let (b0, b1) = affine_on(&seg.b, lo, hi);
    let (s0, s1) = affine_on(&seg.sigma, lo, hi);
    AffinePair { b0, b1, s0, s1 }
}

impl AnalyticProfile {
    // index loops: the anchor passes mutate pieces[i] between method calls
    #[allow(clippy::needless_range_loop)]
    pub fn new(field: CoefficientField) -> Result<Self, AnalyticError> {
        let report = field.validate();
        if !report.is_valid() {
            return Err(AnalyticError::InvalidField(report));
        }

        // Breakpoints of the compiled piecewise form: segment bounds plus
        // interior table points, with 0 forced in as the integral anchor.
        let mut knots: Vec<f64> = vec![0.0];
        for seg in &field.segments {
            if seg.lower.is_finite() {
                knots.push(seg.lower);
            }
            if seg.upper.is_finite() {
                knots.push(seg.upper);
            }
            for spec in [&seg.b, &seg.sigma] {
                if let FuncSpec::Table { points } = spec {
                    for &(x, _) in points {
                        if x > seg.lower && x < seg.upper {
                            knots.push(x);
                        }
                    }
                }
            }
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup();

        let idx0 = knots
            .iter()
            .position(|&k| k == 0.0)
            .expect("0 is always a knot");

        // Interior pairs between consecutive knots.
        let mut pairs = Vec::with_capacity(knots.len().saturating_sub(1));
        for w in knots.windows(2) {
            let seg = field.segment_at(w[0]).expect("knot inside domain");
            pairs.push(pair_on(seg, w[0], w[1]));
        }

        // B at the knots, anchored so that B(0) = 0.
        let m = knots.len();
        let mut b_knots = vec![0.0; m];
        for i in idx0..m - 1 {
            b_knots[i + 1] = b_knots[i] + pairs[i].beta_integral(knots[i], knots[i + 1]);
        }
        for i in (0..idx0).rev() {
            b_knots[i] = b_knots[i + 1] - pairs[i].beta_integral(knots[i], knots[i + 1]);
        }

        let mut pieces: Vec<Piece> = Vec::new();

        let lower_tail_beta = if field.domain == DomainSpec::FullLine {
            let seg = &field.segments[0];
            let pair = AffinePair::constant(seg.b.eval(0.0), seg.sigma.eval(0.0));
            pieces.push(Piece {
                lo: f64::NEG_INFINITY,
                hi: knots[0],
                pair,
                anchor: knots[0],
                b_anchor: b_knots[0],
                eta_anchor: 0.0,
                mass_anchor: 0.0,
                const_beta: pair.const_beta(),
            });
            pair.const_beta()
        } else {
            None
        };

        for i in 0..m - 1 {
            pieces.push(Piece {
                lo: knots[i],
                hi: knots[i + 1],
                pair: pairs[i],
                anchor: knots[i],
                b_anchor: b_knots[i],
                eta_anchor: 0.0,
                mass_anchor: 0.0,
                const_beta: pairs[i].const_beta(),
            });
        }

        let upper_tail_beta = if field.domain.upper() == f64::INFINITY {
            let seg = field.segments.last().expect("validated nonempty");
            let pair = AffinePair::constant(seg.b.eval(0.0), seg.sigma.eval(0.0));
            pieces.push(Piece {
                lo: *knots.last().unwrap(),
                hi: f64::INFINITY,
                pair,
                anchor: *knots.last().unwrap(),
                b_anchor: *b_knots.last().unwrap(),
                eta_anchor: 0.0,
                mass_anchor: 0.0,
                const_beta: pair.const_beta(),
            });
            pair.const_beta()
        } else {
            None
        };

        // eta at the anchors, eta(0) = 0. Pieces are ordered; the anchor of
        // piece i+1 is the hi end of piece i except for the lower tail,
        // whose anchor coincides with the first interior anchor.
        let first_interior = usize::from(field.domain == DomainSpec::FullLine);
        let anchor0 = first_interior
            + pieces[first_interior..]
                .iter()
                .position(|p| p.anchor == 0.0)
                .expect("0 is an interior anchor");
        let mut eta_cum = 0.0;
        for i in anchor0..pieces.len() {
            pieces[i].eta_anchor = eta_cum;
            if pieces[i].hi.is_finite() {
                eta_cum = pieces[i].eta_at(pieces[i].hi);
            }
        }
        let mut eta_cum = 0.0;
        for i in (first_interior..anchor0).rev() {
            // anchor is lo; eta at lo = eta at hi minus the piece increment
            let hi_eta = eta_cum;
            pieces[i].eta_anchor = 0.0;
            let inc = pieces[i].eta_at(pieces[i].hi);
            pieces[i].eta_anchor = hi_eta - inc;
            eta_cum = pieces[i].eta_anchor;
        }
        if first_interior == 1 {
            pieces[0].eta_anchor = pieces[first_interior].eta_anchor;
        }

        // Density mass from the domain's lower end. On the full line the
        // lower tail mass is closed form: finite iff its beta > 0.
        let mut mass_cum = match lower_tail_beta {
            None => 0.0,
            Some(beta) => {
                let p = &pieces[0];
                if beta > 0.0 {
                    p.b_anchor.exp() / (p.pair.s0 * p.pair.s0 * beta)
                } else {
                    f64::INFINITY
                }
            }
        };
        if first_interior == 1 {
            pieces[0].mass_anchor = mass_cum;
        }
        for i in first_interior..pieces.len() {
            pieces[i].mass_anchor = mass_cum;
            if pieces[i].hi.is_finite() {
                mass_cum = pieces[i].mass_at(pieces[i].hi);
            }
        }

        let recurrence = match field.domain {
            DomainSpec::Interval { .. } => Recurrence::Recurrent,
            DomainSpec::HalfLine => {
                if upper_tail_beta.expect("half line has an upper tail") <= 0.0 {
                    Recurrence::Recurrent
                } else {
                    Recurrence::Transient
                }
            }
            DomainSpec::FullLine => {
                let up = upper_tail_beta.expect("full line has an upper tail");
                let down = lower_tail_beta.expect("full line has a lower tail");
                if up <= 0.0 && down >= 0.0 {
                    Recurrence::Recurrent
                } else {
                    Recurrence::Transient
                }
            }
        };

        let c = if recurrence == Recurrence::Recurrent {
            let interior_top = mass_cum;
            let total = match upper_tail_beta {
                None => interior_top,
                Some(beta) => {
                    let p = pieces.last().expect("nonempty pieces");
                    if beta < 0.0 {
                        interior_top + p.b_anchor.exp() / (p.pair.s0 * p.pair.s0 * (-beta))
                    } else {
                        f64::INFINITY
                    }
                }
            };
            Some(total)
        } else {
            None
        };

        Ok(AnalyticProfile {
            field,
            pieces,
            recurrence,
            c,
            upper_tail_beta,
            lower_tail_beta,
        })
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn domain(&self) -> DomainSpec {
        self.field.domain
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.lo <= x);
        &self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)]
    }

    fn in_domain(&self, x: f64) -> Result<(), AnalyticError> {
        if self.field.domain.contains(x) {
            Ok(())
        } else {
            Err(AnalyticError::OutOfDomain(DomainError { x }))
        }
    }

    /// `B(x) = int_0^x beta(u) du`, signed on the full line.
    pub fn cumulative_beta(&self, x: f64) -> Result<f64, AnalyticError> {
        self.in_domain(x)?;
        Ok(self.piece_at(x).b_at(x))
    }

    /// Scale function `eta(x) = int_0^x exp(-B(y)) dy`. On a half-line
    /// profile, negative arguments evaluate the odd extension
    /// `eta~(x) = sgn(x) eta(|x|)` used by the symmetrized driver.
    pub fn scale_function(&self, x: f64) -> Result<f64, AnalyticError> {
        match self.field.domain {
            DomainSpec::HalfLine if x < 0.0 => {
                if !x.is_finite() {
                    return Err(AnalyticError::OutOfDomain(DomainError { x }));
                }
                Ok(-self.piece_at(-x).eta_at(-x))
            }
            _ => {
                self.in_domain(x)?;
                Ok(self.piece_at(x).eta_at(x))
            }
        }
    }

    pub fn classify_recurrence(&self) -> Recurrence {
        self.recurrence
    }

    pub fn positive_recurrent(&self) -> bool {
        matches!(self.c, Some(c) if c.is_finite())
    }

    /// Constant tail betas `(lower, upper)` where the domain is unbounded.
    pub fn tail_betas(&self) -> (Option<f64>, Option<f64>) {
        (self.lower_tail_beta, self.upper_tail_beta)
    }

    /// Unnormalized stationary density `h(x) = exp(B(x)) / sigma^2(x)`.
    pub fn stationary_density(&self, x: f64) -> Result<f64, AnalyticError> {
        if self.recurrence == Recurrence::Transient {
            return Err(AnalyticError::Transient);
        }
        self.in_domain(x)?;
        Ok(self.piece_at(x).h_at(x))
    }

    /// Total mass `C` of `h` over the domain; `inf` means the stationary
    /// measure is not normalizable.
    pub fn normalizing_constant(&self) -> Result<f64, AnalyticError> {
        self.c.ok_or(AnalyticError::Transient)
    }

    fn finite_c(&self) -> Result<f64, AnalyticError> {
        let c = self.c.ok_or(AnalyticError::Transient)?;
        if c.is_finite() {
            Ok(c)
        } else {
            Err(AnalyticError::NotNormalizable)
        }
    }

    /// Stationary distribution function, measured from the domain's lower
    /// end. Accepts the infinities as limit queries.
    pub fn stationary_cdf(&self, x: f64) -> Result<f64, AnalyticError> {
        let c = self.finite_c()?;
        if x == f64::INFINITY && self.field.domain.upper() == f64::INFINITY {
            return Ok(1.0);
        }
        if x == f64::NEG_INFINITY && self.field.domain == DomainSpec::FullLine {
            return Ok(0.0);
        }
        self.in_domain(x)?;
        Ok((self.piece_at(x).mass_at(x) / c).clamp(0.0, 1.0))
    }

    /// Stationary quantile by bisection: absolute tolerance 1e-12 on `x` for
    /// bounded domains, on the CDF value for unbounded ones.
    pub fn sample_stationary(&self, u: f64) -> Result<f64, AnalyticError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(AnalyticError::BadQuantile { u });
        }
        self.finite_c()?;
        let cdf = |x: f64| self.stationary_cdf(x).expect("x stays inside the domain");

        match self.field.domain {
            DomainSpec::Interval { a } => {
                let (mut lo, mut hi) = (0.0, a);
                while hi - lo > BISECT_TOL {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
            DomainSpec::HalfLine => Ok(bisect_unbounded(&cdf, 0.0, u)),
            DomainSpec::FullLine => {
                let mut lo = -1.0;
                while cdf(lo) > u {
                    lo *= 2.0;
                    if lo < -1e300 {
                        break;
                    }
                }
                Ok(bisect_unbounded(&cdf, lo, u))
            }
        }
    }

    /// Expected boundary regulator rates under the stationary law.
    pub fn regulator_expectations(&self) -> Result<RegulatorExpectations, AnalyticError> {
        let c = self.finite_c()?;
        let ey0 = 0.5 / c;
        let eya = match self.field.domain {
            DomainSpec::Interval { a } => {
                let b_a = self.cumulative_beta(a)?;
                Some(0.5 * b_a.exp() / c)
            }
            _ => None,
        };
        Ok(RegulatorExpectations { ey0, eya })
    }

    /// Mean of `exp(B)` over the window `(level - eps, level + eps)`
    /// intersected with the domain. This is `C` times the stationary
    /// expectation of the occupation-window local-time estimator at `level`
    /// per unit time, i.e. the exact finite-bandwidth analogue of
    /// `sigma^2(level) h(level)`; it converges to `exp(B(level))` as
    /// `eps -> 0`.
    pub fn window_mean_exp_b(&self, level: f64, eps: f64) -> Result<f64, AnalyticError> {
        self.in_domain(level)?;
        let lo = (level - eps).max(self.field.domain.lower());
        let hi = (level + eps).min(self.field.domain.upper());
        let integral = adaptive_simpson(|y| self.piece_at(y).b_at(y).exp(), lo, hi, QUAD_TOL);
        Ok(integral / (hi - lo))
    }

    /// `P[hit c before d]` and its complement for the driving diffusion
    /// started at `x`, via the scale function (odd-extended on a half line).
    pub fn hitting_probabilities(
        &self,
        c: f64,
        x: f64,
        d: f64,
    ) -> Result<HittingProbabilities, AnalyticError> {
        if !(c < x && x < d) {
            return Err(AnalyticError::BadLevelOrder { c, x, d });
        }
        let ec = self.scale_function(c)?;
        let ex = self.scale_function(x)?;
        let ed = self.scale_function(d)?;
        // complementary form keeps the pair an exact distribution even when
        // the scale values span many orders of magnitude
        let upper = ((ex - ec) / (ed - ec)).clamp(0.0, 1.0);
        Ok(HittingProbabilities {
            lower_first: 1.0 - upper,
            upper_first: upper,
        })
    }
}

/// Bisection for an increasing CDF on an unbounded-above domain: bracket by
/// doubling, then shrink until the CDF gap falls under tolerance.
fn bisect_unbounded(cdf: &impl Fn(f64) -> f64, lo0: f64, u: f64) -> f64 {
    let mut lo = lo0;
    let mut hi = if lo0 > 0.0 { 2.0 * lo0 } else { 1.0 };
    while cdf(hi) < u {
        hi = 2.0 * hi.max(0.5);
        if hi > 1e300 {
            break;
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = cdf(mid);
        if (f - u).abs() <= BISECT_TOL || hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            return mid;
        }
        if f < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}
