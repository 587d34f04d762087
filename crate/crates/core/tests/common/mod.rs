//! Shared test fixtures: an independent trapezoid-quadrature oracle and the
//! piecewise-field corpus used by the acceptance suite.
#![allow(dead_code)] // each test target compiles its own copy of this module

use refdiff_core::{CoefficientField, DomainSpec, FuncSpec, Segment};

/// Oracle values at one probe point.
#[derive(Debug, Clone, Copy)]
pub struct OracleProbe {
    pub x: f64,
    pub b_cum: f64,
    pub eta: f64,
    pub h: f64,
}

/// Composite trapezoid quadrature of `beta`, `exp(-B)` and `h = exp(B) /
/// sigma^2` over `[lo, hi]`, anchored at 0. Cells are broken at every
/// coefficient breakpoint (segment bounds and table abscissae), so the
/// integrands are smooth inside each cell and the rule keeps its O(step^2)
/// accuracy despite jumps. Independent of the analytic engine: only
/// pointwise field evaluation is used.
pub struct TrapezoidOracle {
    pub probes: Vec<OracleProbe>,
    /// Integral of `h` over `[lo, hi]`.
    pub mass: f64,
}

/// Finite breakpoints of the coefficients inside `(lo, hi)`, plus 0.
fn breakpoints(field: &CoefficientField, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo, 0.0, hi];
    for seg in &field.segments {
        for bound in [seg.lower, seg.upper] {
            if bound.is_finite() && bound > lo && bound < hi {
                pts.push(bound);
            }
        }
        for spec in [&seg.b, &seg.sigma] {
            if let FuncSpec::Table { points } = spec {
                for &(x, _) in points {
                    if x > lo && x < hi {
                        pts.push(x);
                    }
                }
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

impl TrapezoidOracle {
    /// `lo <= 0 <= hi`. Probes are captured by linear interpolation between
    /// adjacent grid nodes; a probe sitting exactly on a breakpoint takes
    /// the right-continuous value, matching the engine's convention.
    pub fn run(field: &CoefficientField, lo: f64, hi: f64, step: f64, probes: &[f64]) -> Self {
        assert!(lo <= 0.0 && 0.0 <= hi);
        let pts = breakpoints(field, lo, hi);
        let zero_idx = pts.iter().position(|&p| p == 0.0).unwrap();

        let mut sorted: Vec<f64> = probes.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<OracleProbe> = Vec::new();
        let mut mass = 0.0;

        // One smooth cell [p, q): trapezoid with n sub-steps, evaluating the
        // upper endpoint just inside so jump cells take left-limit values.
        // `state` is (B, eta) at p; returns the state at q and captures any
        // probes inside [p, q).
        let mut integrate = |p: f64,
                             q: f64,
                             state: (f64, f64),
                             capture: &mut dyn FnMut(f64, f64, f64, f64)|
         -> (f64, f64) {
            let span = q - p;
            let n = ((span.abs() / step).ceil() as usize).max(1);
            let h = span / n as f64;
            // endpoints are nudged into the open interval so jump cells use
            // one-sided limits; interior nodes evaluate exactly
            let eval_at = |j: usize| -> f64 {
                if j == 0 && span < 0.0 {
                    p + span * 1e-9
                } else if j == n {
                    q - span * 1e-9
                } else {
                    p + h * j as f64
                }
            };
            let (mut b_cum, mut eta) = state;
            let mut x_prev = p;
            let mut beta_prev = field.eval_beta(eval_at(0)).unwrap();
            let mut expnb_prev = (-b_cum).exp();
            let sig = field.eval_sigma(eval_at(0)).unwrap();
            let mut h_prev = b_cum.exp() / (sig * sig);
            capture(x_prev, b_cum, eta, h_prev);
            for j in 1..=n {
                let x = p + h * j as f64;
                let beta = field.eval_beta(eval_at(j)).unwrap();
                b_cum += 0.5 * (beta_prev + beta) * h;
                let expnb = (-b_cum).exp();
                eta += 0.5 * (expnb_prev + expnb) * h;
                let sig = field.eval_sigma(eval_at(j)).unwrap();
                let h_val = b_cum.exp() / (sig * sig);
                mass += 0.5 * (h_prev + h_val) * h.abs();
                if j < n {
                    capture(x, b_cum, eta, h_val);
                }
                x_prev = x;
                beta_prev = beta;
                expnb_prev = expnb;
                h_prev = h_val;
            }
            let _ = x_prev;
            (b_cum, eta)
        };

        // rightward from 0, capturing probes >= 0 by lerp between nodes
        {
            let mut pending: Vec<f64> = sorted.iter().copied().filter(|&p| p >= 0.0).collect();
            pending.reverse(); // pop from the front via pop()
            let mut last: Option<(f64, f64, f64, f64)> = None;
            let mut state = (0.0, 0.0);
            for w in pts[zero_idx..].windows(2) {
                state = integrate(w[0], w[1], state, &mut |x, b, eta, h| {
                    if let Some((x0, b0, e0, h0)) = last {
                        while let Some(&p) = pending.last() {
                            if p >= x0 && p < x {
                                let t = if x > x0 { (p - x0) / (x - x0) } else { 0.0 };
                                out.push(OracleProbe {
                                    x: p,
                                    b_cum: b0 + t * (b - b0),
                                    eta: e0 + t * (eta - e0),
                                    h: h0 + t * (h - h0),
                                });
                                pending.pop();
                            } else {
                                break;
                            }
                        }
                    }
                    last = Some((x, b, eta, h));
                });
            }
            // probes at or beyond the last node: use the final state
            if let Some((x, b, eta, h)) = last {
                while let Some(&p) = pending.last() {
                    if p >= x {
                        out.push(OracleProbe {
                            x: p,
                            b_cum: b,
                            eta,
                            h,
                        });
                        pending.pop();
                    } else {
                        break;
                    }
                }
            }
        }

        // leftward from 0 for negative probes
        if lo < 0.0 {
            let mut pending: Vec<f64> = sorted.iter().copied().filter(|&p| p < 0.0).collect();
            // descending walk captures the largest (closest to 0) first
            pending.sort_by(|a, b| b.partial_cmp(a).unwrap());
            pending.reverse();
            let mut last: Option<(f64, f64, f64, f64)> = None;
            let mut state = (0.0, 0.0);
            for w in pts[..=zero_idx].windows(2).rev() {
                state = integrate(w[1], w[0], state, &mut |x, b, eta, h| {
                    if let Some((x0, b0, e0, h0)) = last {
                        while let Some(&p) = pending.last() {
                            if p <= x0 && p > x {
                                let t = if x < x0 { (p - x0) / (x - x0) } else { 0.0 };
                                out.push(OracleProbe {
                                    x: p,
                                    b_cum: b0 + t * (b - b0),
                                    eta: e0 + t * (eta - e0),
                                    h: h0 + t * (h - h0),
                                });
                                pending.pop();
                            } else {
                                break;
                            }
                        }
                    }
                    last = Some((x, b, eta, h));
                });
            }
            if let Some((x, b, eta, h)) = last {
                while let Some(&p) = pending.last() {
                    if p <= x {
                        out.push(OracleProbe {
                            x: p,
                            b_cum: b,
                            eta,
                            h,
                        });
                        pending.pop();
                    } else {
                        break;
                    }
                }
            }
        }

        TrapezoidOracle { probes: out, mass }
    }
}

pub fn half_line(segments: Vec<Segment>) -> CoefficientField {
    CoefficientField::new(DomainSpec::HalfLine, segments)
}

pub fn seg(lo: f64, hi: f64, b: FuncSpec, sigma: FuncSpec) -> Segment {
    Segment::new(lo, hi, b, sigma)
}

pub fn const_half_line(b: f64, sigma: f64) -> CoefficientField {
    CoefficientField::uniform(
        DomainSpec::HalfLine,
        FuncSpec::constant(b),
        FuncSpec::constant(sigma),
    )
}

pub fn const_interval(a: f64, b: f64, sigma: f64) -> CoefficientField {
    CoefficientField::uniform(
        DomainSpec::Interval { a },
        FuncSpec::constant(b),
        FuncSpec::constant(sigma),
    )
}

pub fn full_line_two_tails(b_low: f64, b_up: f64, sigma: f64) -> CoefficientField {
    CoefficientField::new(
        DomainSpec::FullLine,
        vec![
            seg(
                f64::NEG_INFINITY,
                0.0,
                FuncSpec::constant(b_low),
                FuncSpec::constant(sigma),
            ),
            seg(
                0.0,
                f64::INFINITY,
                FuncSpec::constant(b_up),
                FuncSpec::constant(sigma),
            ),
        ],
    )
}

/// The two-level field from the acceptance suite: drift -1 on [0, 1),
/// -2 afterwards, unit deviation.
pub fn two_level_field() -> CoefficientField {
    half_line(vec![
        seg(0.0, 1.0, FuncSpec::constant(-1.0), FuncSpec::constant(1.0)),
        seg(
            1.0,
            f64::INFINITY,
            FuncSpec::constant(-2.0),
            FuncSpec::constant(1.0),
        ),
    ])
}

/// Positive-recurrent Constant/Affine corpus for the analytic-oracle
/// equivalence criterion; at least 20 fields across all three domains.
pub fn oracle_corpus() -> Vec<(String, CoefficientField)> {
    let mut corpus: Vec<(String, CoefficientField)> = Vec::new();

    for (b, s) in [
        (-1.0, 1.0),
        (-2.0, 1.0),
        (-0.5, 2.0),
        (-3.0, 0.7),
        (-1.0, 3.0),
    ] {
        corpus.push((format!("half b={b} sigma={s}"), const_half_line(b, s)));
    }

    let two_seg = |b0: f64, s0: f64, b1: f64, s1: f64| {
        half_line(vec![
            seg(0.0, 1.0, FuncSpec::constant(b0), FuncSpec::constant(s0)),
            seg(
                1.0,
                f64::INFINITY,
                FuncSpec::constant(b1),
                FuncSpec::constant(s1),
            ),
        ])
    };
    corpus.push(("half two-level".into(), two_level_field()));
    corpus.push(("half jump sigma".into(), two_seg(-0.5, 1.5, -2.0, 0.8)));
    corpus.push(("half up-then-down".into(), two_seg(1.0, 1.0, -3.0, 1.0)));
    corpus.push(("half relax".into(), two_seg(-2.0, 2.0, -1.0, 1.0)));

    corpus.push((
        "half affine drift".into(),
        half_line(vec![
            seg(
                0.0,
                2.0,
                FuncSpec::affine(0.0, -1.0),
                FuncSpec::constant(1.0),
            ),
            seg(
                2.0,
                f64::INFINITY,
                FuncSpec::constant(-2.0),
                FuncSpec::constant(1.0),
            ),
        ]),
    ));
    corpus.push((
        "half affine push-pull".into(),
        half_line(vec![
            seg(
                0.0,
                3.0,
                FuncSpec::affine(1.0, -1.0),
                FuncSpec::constant(1.0),
            ),
            seg(
                3.0,
                f64::INFINITY,
                FuncSpec::constant(-2.0),
                FuncSpec::constant(1.0),
            ),
        ]),
    ));
    corpus.push((
        "half affine sigma".into(),
        half_line(vec![
            seg(
                0.0,
                2.0,
                FuncSpec::constant(-1.0),
                FuncSpec::affine(1.0, 0.5),
            ),
            seg(
                2.0,
                f64::INFINITY,
                FuncSpec::constant(-1.0),
                FuncSpec::constant(2.0),
            ),
        ]),
    ));
    corpus.push((
        "half affine both".into(),
        half_line(vec![
            seg(
                0.0,
                1.5,
                FuncSpec::affine(-0.5, -0.5),
                FuncSpec::affine(0.8, 0.4),
            ),
            seg(
                1.5,
                f64::INFINITY,
                FuncSpec::constant(-1.5),
                FuncSpec::constant(1.4),
            ),
        ]),
    ));

    corpus.push(("interval uniform".into(), const_interval(2.0, 0.0, 1.0)));
    corpus.push(("interval tilted".into(), const_interval(1.0, -1.0, 1.0)));
    corpus.push(("interval upward".into(), const_interval(3.0, 1.0, 1.5)));
    corpus.push((
        "interval affine drift".into(),
        CoefficientField::new(
            DomainSpec::Interval { a: 2.0 },
            vec![seg(
                0.0,
                2.0,
                FuncSpec::affine(1.0, -1.0),
                FuncSpec::constant(1.0),
            )],
        ),
    ));
    corpus.push((
        "interval affine sigma".into(),
        CoefficientField::new(
            DomainSpec::Interval { a: 1.5 },
            vec![seg(
                0.0,
                1.5,
                FuncSpec::constant(-0.5),
                FuncSpec::affine(1.0, 0.2),
            )],
        ),
    ));
    corpus.push((
        "interval split".into(),
        CoefficientField::new(
            DomainSpec::Interval { a: 2.0 },
            vec![
                seg(0.0, 1.0, FuncSpec::constant(1.0), FuncSpec::constant(1.0)),
                seg(1.0, 2.0, FuncSpec::constant(-1.0), FuncSpec::constant(0.5)),
            ],
        ),
    ));

    corpus.push(("full symmetric".into(), full_line_two_tails(1.0, -1.0, 1.0)));
    corpus.push(("full lopsided".into(), full_line_two_tails(2.0, -0.5, 1.2)));
    corpus.push((
        "full affine middle".into(),
        CoefficientField::new(
            DomainSpec::FullLine,
            vec![
                seg(
                    f64::NEG_INFINITY,
                    -1.0,
                    FuncSpec::constant(2.0),
                    FuncSpec::constant(1.0),
                ),
                seg(
                    -1.0,
                    1.0,
                    FuncSpec::affine(0.0, -2.0),
                    FuncSpec::constant(1.0),
                ),
                seg(
                    1.0,
                    f64::INFINITY,
                    FuncSpec::constant(-2.0),
                    FuncSpec::constant(1.0),
                ),
            ],
        ),
    ));
    corpus.push((
        "full sigma jump".into(),
        CoefficientField::new(
            DomainSpec::FullLine,
            vec![
                seg(
                    f64::NEG_INFINITY,
                    0.0,
                    FuncSpec::constant(1.0),
                    FuncSpec::constant(2.0),
                ),
                seg(
                    0.0,
                    f64::INFINITY,
                    FuncSpec::constant(-1.0),
                    FuncSpec::constant(1.0),
                ),
            ],
        ),
    ));

    corpus
}
