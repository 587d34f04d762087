//! Local-time estimation and statistical verification of simulated paths
//! against the analytic stationary quantities.
//!
//! Local time at a level is estimated from the occupation of an
//! epsilon-window weighted by the quadratic variation, the discrete form of
//! the occupation-density limit. The window is intersected with the domain
//! and normalized by its in-domain width, so the estimate at a reflecting
//! boundary converges to the same right-continuous local time that appears
//! in the pathwise identity `Y(t) = L_0(t) / 2`; an unclipped window there
//! would undercount by exactly half.
//!
//! [`verify_stationarity`] ties everything together: stationary-start
//! ensemble, Kolmogorov-Smirnov distance of the pooled endpoints against
//! the analytic CDF, boundary regulator rates against their closed forms,
//! and the local-time identity residual, all with three-standard-error
//! acceptance bands recorded in the report.

use crate::analytic::{AnalyticError, AnalyticProfile, RegulatorExpectations};
use crate::coefficient::{CoefficientField, DomainSpec};
use crate::simulate::{
    run_ensemble, HistogramSpec, PathMode, PathSample, SimConfig, SimError, Start,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("empty sample")]
    EmptySample,
    #[error("path exploded at t = {t}")]
    Exploded { t: f64 },
    #[error("operation requires a {expected} path")]
    WrongMode { expected: &'static str },
    #[error("bandwidth epsilon must be positive")]
    BadWindow,
    #[error("verification window needs horizon >= burn_in + 1")]
    ShortHorizon,
    #[error("all paths exploded")]
    AllExploded,
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Occupation-window estimate of the local time of the reflected state at
/// `level` over the whole path:
///
/// ```text
/// (1 / |W|) * sum_k 1(|z_k - level| < eps) sigma^2(z_k) dt
/// ```
///
/// with `W = (level - eps, level + eps)` intersected with the domain.
pub fn estimate_local_time(
    path: &PathSample,
    field: &CoefficientField,
    level: f64,
    epsilon: f64,
) -> f64 {
    assert!(epsilon > 0.0, "bandwidth must be positive");
    let (lo, hi) = match path.mode {
        PathMode::OneSided => (0.0, f64::INFINITY),
        PathMode::TwoSided { a } => (0.0, a),
        PathMode::Free => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let width = (level + epsilon).min(hi) - (level - epsilon).max(lo);
    let mut occ = 0.0;
    for k in 0..path.dw.len() {
        let z = path.z[k];
        if (z - level).abs() < epsilon {
            let s = field
                .eval_sigma(z)
                .expect("reflected state lies in the domain");
            occ += s * s * path.dt;
        }
    }
    occ / width
}

/// Residual of the boundary identity `Y(T) = L_0(T) / 2` on a one-sided
/// path; small in ensemble mean and shrinking under `(dt, eps)` refinement.
pub fn check_y_half_l0(
    path: &PathSample,
    field: &CoefficientField,
    epsilon: f64,
) -> Result<f64, VerifyError> {
    if let Some(t) = path.exploded {
        return Err(VerifyError::Exploded { t });
    }
    if path.mode != PathMode::OneSided {
        return Err(VerifyError::WrongMode {
            expected: "one-sided",
        });
    }
    let y_final = *path.y_net.last().expect("nonempty path");
    Ok(y_final - 0.5 * estimate_local_time(path, field, 0.0, epsilon))
}

/// Discretized Tanaka identity for the raw driver states:
///
/// ```text
/// |X_T - a| - |X_0 - a| - sum_k sgn(X_k - a)(X_{k+1} - X_k) - L_a(T)
/// ```
///
/// with `sgn(x) = 1(x > 0) - 1(x <= 0)` and the local time estimated from
/// the quadratic-variation increments carried by the path.
pub fn tanaka_residual(path: &PathSample, a: f64, epsilon: f64) -> Result<f64, VerifyError> {
    if let Some(t) = path.exploded {
        return Err(VerifyError::Exploded { t });
    }
    if epsilon <= 0.0 {
        return Err(VerifyError::BadWindow);
    }
    let xs = &path.x_raw;
    let n = path.dw.len();
    let mut martingale = 0.0;
    let mut occ = 0.0;
    for k in 0..n {
        let sgn = if xs[k] - a > 0.0 { 1.0 } else { -1.0 };
        martingale += sgn * (xs[k + 1] - xs[k]);
        if (xs[k] - a).abs() < epsilon {
            occ += path.qv[k + 1] - path.qv[k];
        }
    }
    let lt = occ / (2.0 * epsilon);
    Ok((xs[n] - a).abs() - (xs[0] - a).abs() - martingale - lt)
}

/// Fraction of samples `<= x`.
pub fn empirical_cdf(samples: &[f64], x: f64) -> Result<f64, VerifyError> {
    if samples.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let count = samples.iter().filter(|&&s| s <= x).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Kolmogorov-Smirnov distance between a sample and an analytic CDF by the
/// order-statistics formula.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, VerifyError> {
    if samples.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples are ordered reals"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    ((mean), (var / n).sqrt())
}

/// One Monte Carlo estimate against its analytic target with a
/// three-standard-error acceptance band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl EstimateCheck {
    fn new(name: &str, estimate: f64, se: f64, target: f64) -> Self {
        let tolerance = 3.0 * se;
        EstimateCheck {
            name: name.to_string(),
            estimate,
            se,
            target,
            tolerance,
            passed: (estimate - target).abs() <= tolerance,
        }
    }
}

/// Local-time window check at a boundary level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocaltimeCheck {
    pub level: f64,
    pub estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Analytic values the simulation is held against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTargets {
    pub c: f64,
    pub ey0: f64,
    pub eya: Option<f64>,
}

/// Outcome of [`verify_stationarity`]. `passed` holds iff every recorded
/// check is inside its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ks_distance: f64,
    pub ks_threshold: f64,
    pub n_paths: usize,
    pub exploded_paths: usize,
    pub window_len: f64,
    pub regulator_estimates: Vec<EstimateCheck>,
    pub analytic_targets: AnalyticTargets,
    pub localtime_checks: Vec<LocaltimeCheck>,
    /// Mean and SE of `Y(T) - L_0(T)/2` per path; one-sided runs only.
    pub y_half_l0_residual: Option<EstimateCheck>,
    /// `E[Ya] / E[Y0]` against `exp(B(a))`; interval runs only.
    pub regulator_ratio: Option<EstimateCheck>,
    pub passed: bool,
}

/// Simulates a stationary-start ensemble and checks the pooled endpoint law
/// (KS), the boundary regulator rates, and the local-time identity against
/// the analytic profile.
pub fn verify_stationarity(
    field: &CoefficientField,
    cfg: &SimConfig,
    ks_threshold: f64,
) -> Result<VerificationReport, VerifyError> {
    if cfg.horizon < cfg.burn_in + 1.0 {
        return Err(VerifyError::ShortHorizon);
    }
    let profile = AnalyticProfile::new(field.clone())?;
    let c = profile.normalizing_constant()?;
    if !c.is_finite() {
        return Err(VerifyError::Analytic(AnalyticError::NotNormalizable));
    }
    let RegulatorExpectations { ey0, eya } = profile.regulator_expectations()?;

    let hist = match field.domain {
        DomainSpec::Interval { a } => HistogramSpec {
            lo: 0.0,
            hi: a,
            bins: 200,
        },
        _ => HistogramSpec {
            lo: 0.0,
            hi: profile.sample_stationary(0.999)?,
            bins: 200,
        },
    };
    let ensemble = run_ensemble(field, cfg, Start::Stationary, Some(hist))?;
    let live: Vec<_> = ensemble.stats.iter().filter(|s| !s.exploded).collect();
    if live.is_empty() {
        return Err(VerifyError::AllExploded);
    }

    let endpoints: Vec<f64> = live.iter().map(|s| s.endpoint_z).collect();
    let ks = ks_distance(&endpoints, |x| {
        profile
            .stationary_cdf(x)
            .expect("endpoint lies in the domain")
    })?;

    let w = ensemble.window_len;
    let mut regulator_estimates = Vec::new();
    let mut localtime_checks = Vec::new();
    let mut y_half_l0_residual = None;
    let mut regulator_ratio = None;

    // Window-exact local-time targets: the occupation estimator at bandwidth
    // eps has stationary mean (1/C) mean_W exp(B) per unit time, so the
    // 3 SE bands compare against the exact finite-bandwidth value and the
    // report stays meaningful at any step size.
    let lt0_target = profile.window_mean_exp_b(0.0, ensemble.eps0)? / c;
    match field.domain {
        DomainSpec::HalfLine => {
            let rates: Vec<f64> = live.iter().map(|s| s.y_window / w).collect();
            let (mean, se) = mean_se(&rates);
            regulator_estimates.push(EstimateCheck::new("origin", mean, se, ey0));

            let lt: Vec<f64> = live.iter().map(|s| s.lt0_window / w).collect();
            let (lt_mean, lt_se) = mean_se(&lt);
            let check = EstimateCheck::new("lt0", lt_mean, lt_se, lt0_target);
            localtime_checks.push(LocaltimeCheck {
                level: 0.0,
                estimate: check.estimate,
                target: check.target,
                tolerance: check.tolerance,
                passed: check.passed,
            });

            let residuals: Vec<f64> = live
                .iter()
                .map(|s| s.y_horizon - 0.5 * s.lt0_full)
                .collect();
            let (r_mean, r_se) = mean_se(&residuals);
            let resid_target = 0.5 * cfg.horizon * (2.0 * ey0 - lt0_target);
            y_half_l0_residual = Some(EstimateCheck::new("y_half_l0", r_mean, r_se, resid_target));
        }
        DomainSpec::Interval { a } => {
            let eya = eya.expect("interval profiles have an upper boundary rate");
            let lta_target = profile.window_mean_exp_b(a, ensemble.epsa)? / c;
            let y0: Vec<f64> = live.iter().map(|s| 0.5 * s.lt0_window / w).collect();
            let ya: Vec<f64> = live.iter().map(|s| 0.5 * s.lta_window / w).collect();
            let (m0, se0) = mean_se(&y0);
            let (ma, sea) = mean_se(&ya);
            regulator_estimates.push(EstimateCheck::new("origin", m0, se0, 0.5 * lt0_target));
            regulator_estimates.push(EstimateCheck::new("upper", ma, sea, 0.5 * lta_target));

            localtime_checks.push(LocaltimeCheck {
                level: 0.0,
                estimate: 2.0 * m0,
                target: lt0_target,
                tolerance: 6.0 * se0,
                passed: (2.0 * m0 - lt0_target).abs() <= 6.0 * se0,
            });
            localtime_checks.push(LocaltimeCheck {
                level: a,
                estimate: 2.0 * ma,
                target: lta_target,
                tolerance: 6.0 * sea,
                passed: (2.0 * ma - lta_target).abs() <= 6.0 * sea,
            });

            // ratio of boundary rates cancels the shared normalization;
            // delta-method SE with the sample covariance
            let n = y0.len() as f64;
            let cov = y0
                .iter()
                .zip(&ya)
                .map(|(u, v)| (u - m0) * (v - ma))
                .sum::<f64>()
                / (n - 1.0);
            let v0 = se0 * se0 * n;
            let va = sea * sea * n;
            let ratio = ma / m0;
            let rel_var = va / (ma * ma) + v0 / (m0 * m0) - 2.0 * cov / (m0 * ma);
            let ratio_se = (ratio * ratio * rel_var / n).abs().sqrt();
            let target = eya / ey0;
            let check = EstimateCheck {
                name: "ya_over_y0".to_string(),
                estimate: ratio,
                se: ratio_se,
                target,
                tolerance: 3.0 * ratio_se,
                passed: (ratio - target).abs() <= 3.0 * ratio_se,
            };
            regulator_ratio = Some(check);
        }
        DomainSpec::FullLine => unreachable!("run_ensemble rejects full-line fields"),
    }

    let mut passed = ks <= ks_threshold;
    passed &= regulator_estimates.iter().all(|c| c.passed);
    passed &= localtime_checks.iter().all(|c| c.passed);
    if let Some(r) = &y_half_l0_residual {
        passed &= r.passed;
    }
    if let Some(r) = &regulator_ratio {
        passed &= r.passed;
    }

    Ok(VerificationReport {
        ks_distance: ks,
        ks_threshold,
        n_paths: cfg.path_count,
        exploded_paths: ensemble.exploded_count,
        window_len: w,
        regulator_estimates,
        analytic_targets: AnalyticTargets { c, ey0, eya },
        localtime_checks,
        y_half_l0_residual,
        regulator_ratio,
        passed,
    })
}

/// Per-level statistics of the refinement study, coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub dt: f64,
    pub epsilon: f64,
    /// Local time of the free driver at level 0 over `[0, horizon]`.
    pub lt0_mean: f64,
    pub lt0_se: f64,
    /// Tanaka-identity residual of the free driver at level 0.
    pub tanaka_mean: f64,
    pub tanaka_se: f64,
    /// `Y - L_0/2` residual of the one-sided reflected path.
    pub resid_mean: f64,
    pub resid_se: f64,
}

/// Runs the local-time identity suite at several `(dt, eps = 5 sigma
/// sqrt(dt))` refinement levels with coupled noise: every level of one path
/// consumes block sums of the same finest-grid increments, so level-to-level
/// differences carry almost no Monte Carlo noise.
///
/// `free_field` must be a full-line field and `reflected_field` a
/// positive-recurrent half-line field (paths start stationary). `mults`
/// lists the per-level step multipliers relative to `dt_fine`, e.g.
/// `[4096, 64, 1]` for three levels coarse to fine; each must divide the
/// finest step count.
pub fn refinement_study(
    free_field: &CoefficientField,
    reflected_field: &CoefficientField,
    horizon: f64,
    dt_fine: f64,
    mults: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<RefinementLevel>, VerifyError> {
    use crate::simulate::path_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    let n_fine = (horizon / dt_fine).round() as usize;
    for &m in mults {
        if m == 0 || !n_fine.is_multiple_of(m) {
            return Err(VerifyError::Sim(SimError::BadConfig {
                reason: "each multiplier must divide the finest step count",
            }));
        }
    }
    let profile = AnalyticProfile::new(reflected_field.clone())?;
    if !profile.positive_recurrent() {
        return Err(VerifyError::Analytic(AnalyticError::NotNormalizable));
    }
    let sigma_free = free_field.eval_sigma(0.0).map_err(AnalyticError::from)?;
    let sigma_refl = reflected_field
        .eval_sigma(0.0)
        .map_err(AnalyticError::from)?;

    let levels = mults.len();
    // per path, per level: (lt0, tanaka, resid)
    let rows: Vec<Vec<(f64, f64, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            let mut u: f64 = rng.random();
            while u <= 0.0 {
                u = rng.random();
            }
            let z0 = profile
                .sample_stationary(u)
                .expect("positive recurrent profile");
            let sqrt_fine = dt_fine.sqrt();
            let fine: Vec<f64> = (0..n_fine)
                .map(|_| {
                    let xi: f64 = rng.sample(StandardNormal);
                    xi * sqrt_fine
                })
                .collect();

            let mut out = Vec::with_capacity(levels);
            for &m in mults {
                let dt = dt_fine * m as f64;
                let n = n_fine / m;
                let eps_free = 5.0 * sigma_free * dt.sqrt();
                let eps_refl = 5.0 * sigma_refl * dt.sqrt();

                // free driver from 0
                let mut x = 0.0f64;
                let mut occ = 0.0;
                let mut martingale = 0.0;
                for j in 0..n {
                    let dw: f64 = fine[j * m..(j + 1) * m].iter().sum();
                    let b = free_field.eval_b(x).expect("full line");
                    let s = free_field.eval_sigma(x).expect("full line");
                    if x.abs() < eps_free {
                        occ += s * s * dt;
                    }
                    let sgn = if x > 0.0 { 1.0 } else { -1.0 };
                    let x_next = x + b * dt + s * dw;
                    martingale += sgn * (x_next - x);
                    x = x_next;
                }
                let lt0 = occ / (2.0 * eps_free);
                let tanaka = x.abs() - martingale - lt0;

                // one-sided reflected path, stationary start
                let mut xr = z0;
                let mut y = 0.0;
                let mut occ0 = 0.0;
                for j in 0..n {
                    let dw: f64 = fine[j * m..(j + 1) * m].iter().sum();
                    let z = xr.abs();
                    let sign = if xr > 0.0 {
                        1.0
                    } else if xr < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    let b = reflected_field.eval_b(z).expect("half line");
                    let s = reflected_field.eval_sigma(z).expect("half line");
                    if z < eps_refl {
                        occ0 += s * s * dt;
                    }
                    let x_next = xr + sign * b * dt + s * dw;
                    y += x_next.abs() - z - s * sign * dw - b * dt;
                    xr = x_next;
                }
                let resid = y - 0.5 * occ0 / eps_refl;

                out.push((lt0, tanaka, resid));
            }
            out
        })
        .collect();

    let mut result = Vec::with_capacity(levels);
    for (li, &m) in mults.iter().enumerate() {
        let dt = dt_fine * m as f64;
        let lt: Vec<f64> = rows.iter().map(|r| r[li].0).collect();
        let tk: Vec<f64> = rows.iter().map(|r| r[li].1).collect();
        let rs: Vec<f64> = rows.iter().map(|r| r[li].2).collect();
        let (lt0_mean, lt0_se) = mean_se(&lt);
        let (tanaka_mean, tanaka_se) = mean_se(&tk);
        let (resid_mean, resid_se) = mean_se(&rs);
        result.push(RefinementLevel {
            dt,
            epsilon: 5.0 * sigma_free * dt.sqrt(),
            lt0_mean,
            lt0_se,
            tanaka_mean,
            tanaka_se,
            resid_mean,
            resid_se,
        });
    }
    Ok(result)
}
