//! Euler-Maruyama simulation of reflected paths.
//!
//! One-sided reflection steps the symmetrized full-line driver and maps it
//! through `|.|`; two-sided reflection steps the periodically folded driver
//! and maps it through the fold. The boundary push (regulator) is recovered
//! by rearranging the reflected integral equation step by step:
//!
//! ```text
//! Y_{k+1} - Y_k = z_{k+1} - z_k - sigma(z_k) s_k dW_k - b(z_k) dt
//! ```
//!
//! where `s_k` is the driver's mirror sign, so `s_k dW_k` are increments of
//! the Brownian motion actually driving the reflected equation. A projected
//! scheme (step, then clamp into the domain, regulator = clamp amount) is
//! kept as an independent cross-check of the construction.
//!
//! Every path is driven by its own counter-based RNG stream derived from
//! `(seed, stream index)`, so ensembles are reproducible bit for bit no
//! matter how paths are scheduled across workers; ensemble reductions run
//! in path order.

use crate::analytic::AnalyticProfile;
use crate::coefficient::{CoefficientField, DomainSpec, ValidationReport};
use crate::transform::{fold_map_periodic, fold_slope_periodic, ExtendedField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SymmetrizedEuler,
    ProjectedEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub path_count: usize,
    pub explosion_bound: f64,
    pub scheme: Scheme,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 10.0,
            burn_in: 1.0,
            seed: 1,
            path_count: 1000,
            explosion_bound: 1e6,
            scheme: Scheme::SymmetrizedEuler,
        }
    }
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    fn check(&self) -> Result<(), SimError> {
        let ok = self.dt > 0.0
            && self.dt < self.horizon
            && self.burn_in >= 0.0
            && self.burn_in < self.horizon
            && self.path_count > 0
            && self.explosion_bound > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::BadConfig {
                reason: "need 0 < dt < horizon, 0 <= burn_in < horizon, paths >= 1, bound > 0",
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("field failed validation:\n{0}")]
    InvalidField(ValidationReport),
    #[error("expected a {expected} field")]
    WrongDomain { expected: &'static str },
    #[error("start state x0 = {x0} outside the domain")]
    BadStart { x0: f64 },
    #[error("invalid simulation config: {reason}")]
    BadConfig { reason: &'static str },
    #[error("path exploded at t = {t}")]
    Exploded { t: f64 },
    #[error("operation requires a reflected path")]
    NotReflected,
    #[error("first-passage barriers must satisfy lower < x0 < upper")]
    BadBarriers,
    #[error(transparent)]
    Analytic(#[from] crate::analytic::AnalyticError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathMode {
    OneSided,
    TwoSided { a: f64 },
    Free,
}

/// One simulated trajectory on a uniform grid. `x_raw` holds the full-line
/// driver, `z` the reflected state, `dw` the raw noise increments, `y_net`
/// the cumulative regulator (net of both boundaries on an interval), and
/// `qv` the running quadratic variation `sum sigma^2(z_k) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub mode: PathMode,
    pub scheme: Scheme,
    pub dt: f64,
    pub times: Vec<f64>,
    pub x_raw: Vec<f64>,
    pub z: Vec<f64>,
    pub dw: Vec<f64>,
    pub y_net: Vec<f64>,
    pub qv: Vec<f64>,
    /// Truncation time when `|x_raw|` reached the explosion bound.
    pub exploded: Option<f64>,
}

impl PathSample {
    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("paths hold at least the start state")
    }
}

/// RNG for one path: a counter-based generator keyed by `(seed, stream)`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Driver-side view of the coefficients for the symmetrized schemes.
#[derive(Clone, Copy)]
enum Driver<'a> {
    Symmetrized(&'a CoefficientField),
    Periodic { field: &'a CoefficientField, a: f64 },
    Free(&'a CoefficientField),
}

struct Local {
    /// Drift of the driver at `x`.
    b_eff: f64,
    /// Deviation at the reflected state (equals the driver's deviation).
    sigma: f64,
    /// Reflected state.
    z: f64,
    /// Mirror sign relating driver noise to the reflected equation's noise.
    sign: f64,
    /// Drift of the reflected equation at `z`.
    b_refl: f64,
}

impl Driver<'_> {
    fn reflect(&self, x: f64) -> f64 {
        match self {
            Driver::Symmetrized(_) => x.abs(),
            Driver::Periodic { a, .. } => fold_map_periodic(*a, x),
            Driver::Free(_) => x,
        }
    }

    fn local(&self, x: f64) -> Local {
        match self {
            Driver::Symmetrized(f) => {
                let z = x.abs();
                let sign = sgn0(x);
                let b_refl = f.eval_b(z).expect("|x| lies in the half line");
                Local {
                    b_eff: sign * b_refl,
                    sigma: f.eval_sigma(z).expect("|x| lies in the half line"),
                    z,
                    sign,
                    b_refl,
                }
            }
            Driver::Periodic { field, a } => {
                let z = fold_map_periodic(*a, x);
                let sign = fold_slope_periodic(*a, x);
                let b_refl = field.eval_b(z).expect("fold lands in [0, a]");
                Local {
                    b_eff: sign * b_refl,
                    sigma: field.eval_sigma(z).expect("fold lands in [0, a]"),
                    z,
                    sign,
                    b_refl,
                }
            }
            Driver::Free(f) => {
                let b = f.eval_b(x).expect("free path stays in the domain");
                Local {
                    b_eff: b,
                    sigma: f.eval_sigma(x).expect("free path stays in the domain"),
                    z: x,
                    sign: 1.0,
                    b_refl: b,
                }
            }
        }
    }
}

fn checked(field: &CoefficientField) -> Result<(), SimError> {
    let report = field.validate();
    if report.is_valid() {
        Ok(())
    } else {
        Err(SimError::InvalidField(report))
    }
}

fn build_driver_path(
    driver: Driver<'_>,
    mode: PathMode,
    cfg: &SimConfig,
    x0: f64,
    stream: u64,
) -> PathSample {
    let n = cfg.n_steps();
    let mut rng = path_rng(cfg.seed, stream);
    let sqrt_dt = cfg.dt.sqrt();

    let mut times = Vec::with_capacity(n + 1);
    let mut x_raw = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n + 1);
    let mut dw = Vec::with_capacity(n);
    let mut y_net = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n + 1);

    let mut x = x0;
    let mut y = 0.0;
    let mut q = 0.0;
    times.push(0.0);
    x_raw.push(x);
    z.push(driver.reflect(x));
    y_net.push(0.0);
    qv.push(0.0);
    let mut exploded = None;

    for k in 0..n {
        let loc = driver.local(x);
        let noise: f64 = rng.sample(StandardNormal);
        let d = noise * sqrt_dt;
        let x_next = x + loc.b_eff * cfg.dt + loc.sigma * d;
        let z_next = driver.reflect(x_next);
        let t_next = (k + 1) as f64 * cfg.dt;

        q += loc.sigma * loc.sigma * cfg.dt;
        if !matches!(mode, PathMode::Free) {
            y += z_next - loc.z - loc.sigma * loc.sign * d - loc.b_refl * cfg.dt;
        }

        times.push(t_next);
        x_raw.push(x_next);
        z.push(z_next);
        dw.push(d);
        y_net.push(y);
        qv.push(q);
        x = x_next;

        if x.abs() >= cfg.explosion_bound {
            exploded = Some(t_next);
            break;
        }
    }

    PathSample {
        mode,
        scheme: Scheme::SymmetrizedEuler,
        dt: cfg.dt,
        times,
        x_raw,
        z,
        dw,
        y_net,
        qv,
        exploded,
    }
}

fn build_projected_path(
    field: &CoefficientField,
    mode: PathMode,
    cfg: &SimConfig,
    x0: f64,
    stream: u64,
) -> PathSample {
    let (lo, hi) = match mode {
        PathMode::OneSided => (0.0, f64::INFINITY),
        PathMode::TwoSided { a } => (0.0, a),
        PathMode::Free => unreachable!("projection applies to reflected paths"),
    };
    let n = cfg.n_steps();
    let mut rng = path_rng(cfg.seed, stream);
    let sqrt_dt = cfg.dt.sqrt();

    let mut times = Vec::with_capacity(n + 1);
    let mut z_states = Vec::with_capacity(n + 1);
    let mut dw = Vec::with_capacity(n);
    let mut y_net = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n + 1);

    let mut zc = x0;
    let mut y = 0.0;
    let mut q = 0.0;
    times.push(0.0);
    z_states.push(zc);
    y_net.push(0.0);
    qv.push(0.0);
    let mut exploded = None;

    for k in 0..n {
        let b = field.eval_b(zc).expect("projected state stays in domain");
        let s = field
            .eval_sigma(zc)
            .expect("projected state stays in domain");
        let noise: f64 = rng.sample(StandardNormal);
        let d = noise * sqrt_dt;
        let star = zc + b * cfg.dt + s * d;
        let next = star.clamp(lo, hi);
        let t_next = (k + 1) as f64 * cfg.dt;

        y += next - zc - s * d - b * cfg.dt;
        q += s * s * cfg.dt;

        times.push(t_next);
        z_states.push(next);
        dw.push(d);
        y_net.push(y);
        qv.push(q);
        zc = next;

        if zc.abs() >= cfg.explosion_bound {
            exploded = Some(t_next);
            break;
        }
    }

    PathSample {
        mode,
        scheme: Scheme::ProjectedEuler,
        dt: cfg.dt,
        times,
        x_raw: z_states.clone(),
        z: z_states,
        dw,
        y_net,
        qv,
        exploded,
    }
}

/// Reflected path on the half line: symmetrized driver through `|.|`, or
/// the projected cross-check scheme. Deterministic given `(seed, stream)`.
pub fn simulate_one_sided(
    field: &CoefficientField,
    cfg: &SimConfig,
    x0: f64,
    stream: u64,
) -> Result<PathSample, SimError> {
    cfg.check()?;
    checked(field)?;
    if field.domain != DomainSpec::HalfLine {
        return Err(SimError::WrongDomain {
            expected: "half-line",
        });
    }
    if !field.domain.contains(x0) {
        return Err(SimError::BadStart { x0 });
    }
    Ok(match cfg.scheme {
        Scheme::SymmetrizedEuler => build_driver_path(
            Driver::Symmetrized(field),
            PathMode::OneSided,
            cfg,
            x0,
            stream,
        ),
        Scheme::ProjectedEuler => build_projected_path(field, PathMode::OneSided, cfg, x0, stream),
    })
}

/// Reflected path on `[0, a]`: periodically folded driver through the fold
/// map, or the projected cross-check scheme.
pub fn simulate_two_sided(
    field: &CoefficientField,
    cfg: &SimConfig,
    x0: f64,
    stream: u64,
) -> Result<PathSample, SimError> {
    cfg.check()?;
    checked(field)?;
    let a = match field.domain {
        DomainSpec::Interval { a } => a,
        _ => {
            return Err(SimError::WrongDomain {
                expected: "interval",
            })
        }
    };
    if !field.domain.contains(x0) {
        return Err(SimError::BadStart { x0 });
    }
    Ok(match cfg.scheme {
        Scheme::SymmetrizedEuler => build_driver_path(
            Driver::Periodic { field, a },
            PathMode::TwoSided { a },
            cfg,
            x0,
            stream,
        ),
        Scheme::ProjectedEuler => {
            build_projected_path(field, PathMode::TwoSided { a }, cfg, x0, stream)
        }
    })
}

/// Unreflected full-line path; `z` coincides with the driver.
pub fn simulate_unreflected(
    field: &CoefficientField,
    cfg: &SimConfig,
    x0: f64,
    stream: u64,
) -> Result<PathSample, SimError> {
    cfg.check()?;
    checked(field)?;
    if field.domain != DomainSpec::FullLine {
        return Err(SimError::WrongDomain {
            expected: "full-line",
        });
    }
    if !x0.is_finite() {
        return Err(SimError::BadStart { x0 });
    }
    Ok(build_driver_path(
        Driver::Free(field),
        PathMode::Free,
        cfg,
        x0,
        stream,
    ))
}

/// Recovers the regulator series from a reflected path by rearranging the
/// reflected integral equation on the grid. Agrees with the `y_net` series
/// stored on the path.
pub fn extract_regulator(
    path: &PathSample,
    field: &CoefficientField,
) -> Result<Vec<f64>, SimError> {
    if let Some(t) = path.exploded {
        return Err(SimError::Exploded { t });
    }
    let a = match path.mode {
        PathMode::Free => return Err(SimError::NotReflected),
        PathMode::OneSided => None,
        PathMode::TwoSided { a } => Some(a),
    };
    let mut out = Vec::with_capacity(path.z.len());
    let mut y = 0.0;
    out.push(0.0);
    for k in 0..path.dw.len() {
        let zk = path.z[k];
        let sign = match path.scheme {
            Scheme::ProjectedEuler => 1.0,
            Scheme::SymmetrizedEuler => match a {
                None => sgn0(path.x_raw[k]),
                Some(a) => fold_slope_periodic(a, path.x_raw[k]),
            },
        };
        let b = field
            .eval_b(zk)
            .expect("reflected state lies in the domain");
        let s = field
            .eval_sigma(zk)
            .expect("reflected state lies in the domain");
        y += path.z[k + 1] - zk - s * sign * path.dw[k] - b * path.dt;
        out.push(y);
    }
    Ok(out)
}

/// Initial state policy for ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Fixed(f64),
    /// Inverse-CDF draw from the stationary distribution, one uniform per
    /// path taken from the path's own stream before any noise.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

/// Streaming per-path summary: endpoint state, regulator and occupation
/// statistics over the tail window `[horizon - w, horizon]`, and whole-path
/// regulator/local-time accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    pub endpoint_z: f64,
    pub endpoint_x_raw: f64,
    pub y_horizon: f64,
    pub y_window: f64,
    /// Occupation sum `sum 1(z near 0) sigma^2 dt` over the window, divided
    /// by the in-domain window width.
    pub lt0_window: f64,
    /// Same at the upper boundary; zero on the half line.
    pub lta_window: f64,
    pub lt0_full: f64,
    pub qv_total: f64,
    pub exploded: bool,
    pub hist: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub stats: Vec<PathStats>,
    pub window_len: f64,
    /// Local-time bandwidths used at the two boundary levels.
    pub eps0: f64,
    pub epsa: f64,
    pub hist_spec: Option<HistogramSpec>,
    pub exploded_count: usize,
}

impl EnsembleResult {
    pub fn endpoints(&self) -> Vec<f64> {
        self.stats
            .iter()
            .filter(|s| !s.exploded)
            .map(|s| s.endpoint_z)
            .collect()
    }

    /// Occupation histogram merged over paths in index order. Counts are
    /// integers, so the merge is exactly order-independent.
    pub fn merged_hist(&self) -> Option<Vec<u64>> {
        let spec = self.hist_spec?;
        let mut acc = vec![0u64; spec.bins];
        for s in &self.stats {
            for (a, &c) in acc.iter_mut().zip(&s.hist) {
                *a += u64::from(c);
            }
        }
        Some(acc)
    }
}

/// Runs `cfg.path_count` independent paths with per-path RNG streams and
/// returns their summaries in path order. Paths run in parallel on the
/// ambient rayon pool; results do not depend on the worker count.
pub fn run_ensemble(
    field: &CoefficientField,
    cfg: &SimConfig,
    start: Start,
    hist: Option<HistogramSpec>,
) -> Result<EnsembleResult, SimError> {
    cfg.check()?;
    checked(field)?;
    let a = match field.domain {
        DomainSpec::HalfLine => None,
        DomainSpec::Interval { a } => Some(a),
        DomainSpec::FullLine => {
            return Err(SimError::WrongDomain {
                expected: "half-line or interval",
            })
        }
    };
    if let Start::Fixed(x0) = start {
        if !field.domain.contains(x0) {
            return Err(SimError::BadStart { x0 });
        }
    }

    let profile = match start {
        Start::Stationary => Some(AnalyticProfile::new(field.clone())?),
        Start::Fixed(_) => None,
    };

    let sigma0 = field.eval_sigma(0.0).expect("0 in domain");
    let eps0 = 5.0 * sigma0 * cfg.dt.sqrt();
    let epsa = match a {
        Some(a) => 5.0 * field.eval_sigma(a).expect("a in domain") * cfg.dt.sqrt(),
        None => eps0,
    };
    let width0 = match a {
        Some(a) => eps0.min(a),
        None => eps0,
    };
    let widtha = match a {
        Some(a) => epsa.min(a),
        None => epsa,
    };

    let n = cfg.n_steps();
    let window_len = (cfg.horizon - cfg.burn_in).min(1.0);
    let win_steps = ((window_len / cfg.dt).round() as usize).clamp(1, n);
    let k_window = n - win_steps;
    let k_burn = ((cfg.burn_in / cfg.dt).round() as usize).min(n);

    let stats: Vec<PathStats> = (0..cfg.path_count)
        .into_par_iter()
        .map(|i| {
            let stream = i as u64;
            let mut rng = path_rng(cfg.seed, stream);
            let x0 = match start {
                Start::Fixed(v) => v,
                Start::Stationary => {
                    let profile = profile.as_ref().expect("built for stationary starts");
                    let mut u: f64 = rng.random();
                    while u <= 0.0 {
                        u = rng.random();
                    }
                    profile
                        .sample_stationary(u)
                        .expect("stationary start needs a normalizable profile")
                }
            };

            let driver = match a {
                None => Driver::Symmetrized(field),
                Some(a) => Driver::Periodic { field, a },
            };
            let sqrt_dt = cfg.dt.sqrt();
            let mut x = x0;
            let mut y = 0.0;
            let mut q = 0.0;
            let mut y_at_window = 0.0;
            let mut lt0_win = 0.0;
            let mut lta_win = 0.0;
            let mut lt0_full = 0.0;
            let mut hist_counts = vec![0u32; hist.map_or(0, |h| h.bins)];
            let mut exploded = false;
            let mut zc = driver.reflect(x);

            for k in 0..n {
                if k == k_window {
                    y_at_window = y;
                }
                let loc = match cfg.scheme {
                    Scheme::SymmetrizedEuler => driver.local(x),
                    Scheme::ProjectedEuler => {
                        let b = field.eval_b(zc).expect("state in domain");
                        let s = field.eval_sigma(zc).expect("state in domain");
                        Local {
                            b_eff: b,
                            sigma: s,
                            z: zc,
                            sign: 1.0,
                            b_refl: b,
                        }
                    }
                };

                let occ = loc.sigma * loc.sigma * cfg.dt;
                if loc.z < eps0 {
                    lt0_full += occ;
                    if k >= k_window {
                        lt0_win += occ;
                    }
                }
                if let Some(a) = a {
                    if loc.z > a - epsa && k >= k_window {
                        lta_win += occ;
                    }
                }
                if let Some(h) = hist {
                    if k >= k_burn {
                        let t = (loc.z - h.lo) / (h.hi - h.lo) * h.bins as f64;
                        let bin = (t as usize).min(h.bins - 1);
                        hist_counts[bin] += 1;
                    }
                }

                let noise: f64 = rng.sample(StandardNormal);
                let d = noise * sqrt_dt;
                match cfg.scheme {
                    Scheme::SymmetrizedEuler => {
                        let x_next = x + loc.b_eff * cfg.dt + loc.sigma * d;
                        let z_next = driver.reflect(x_next);
                        y += z_next - loc.z - loc.sigma * loc.sign * d - loc.b_refl * cfg.dt;
                        q += occ;
                        x = x_next;
                        zc = z_next;
                    }
                    Scheme::ProjectedEuler => {
                        let star = zc + loc.b_refl * cfg.dt + loc.sigma * d;
                        let next = match a {
                            None => star.max(0.0),
                            Some(a) => star.clamp(0.0, a),
                        };
                        y += next - zc - loc.sigma * d - loc.b_refl * cfg.dt;
                        q += occ;
                        zc = next;
                        x = next;
                    }
                }
                if x.abs() >= cfg.explosion_bound {
                    exploded = true;
                    break;
                }
            }

            PathStats {
                endpoint_z: zc,
                endpoint_x_raw: x,
                y_horizon: y,
                y_window: y - y_at_window,
                lt0_window: lt0_win / width0,
                lta_window: lta_win / widtha,
                lt0_full: lt0_full / width0,
                qv_total: q,
                exploded,
                hist: hist_counts,
            }
        })
        .collect();

    let exploded_count = stats.iter().filter(|s| s.exploded).count();
    Ok(EnsembleResult {
        stats,
        window_len,
        eps0,
        epsa,
        hist_spec: hist,
        exploded_count,
    })
}

/// First-passage tallies for a driver between two absorbing barriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassage {
    pub lower_hits: usize,
    pub upper_hits: usize,
    pub unabsorbed: usize,
    pub paths: usize,
}

impl FirstPassage {
    pub fn p_lower(&self) -> f64 {
        self.lower_hits as f64 / self.paths as f64
    }

    pub fn p_upper(&self) -> f64 {
        self.upper_hits as f64 / self.paths as f64
    }

    /// Binomial standard error of `p_lower` (equals that of `p_upper`).
    pub fn se(&self) -> f64 {
        let p = self.p_lower();
        (p * (1.0 - p) / self.paths as f64).sqrt()
    }
}

/// Monte Carlo first passage of the extended driver started at `x0`,
/// absorbed at `lower` or `upper`. Each Euler step applies the Brownian
/// bridge crossing probability `exp(-2 (x - c)(x' - c) / (sigma^2 dt))`, so
/// barrier hits between grid points are not missed.
pub fn first_passage_ensemble(
    ext: &ExtendedField,
    x0: f64,
    lower: f64,
    upper: f64,
    cfg: &SimConfig,
) -> Result<FirstPassage, SimError> {
    cfg.check()?;
    if !(lower < x0 && x0 < upper) {
        return Err(SimError::BadBarriers);
    }
    let n_max = cfg.n_steps();
    let sqrt_dt = cfg.dt.sqrt();

    #[derive(Clone, Copy)]
    enum Outcome {
        Lower,
        Upper,
        Open,
    }

    let outcomes: Vec<Outcome> = (0..cfg.path_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i as u64);
            let mut x = x0;
            for _ in 0..n_max {
                let b = ext.eval_b(x);
                let s = ext.eval_sigma(x);
                let noise: f64 = rng.sample(StandardNormal);
                let x_next = x + b * cfg.dt + s * noise * sqrt_dt;
                if x_next <= lower {
                    return Outcome::Lower;
                }
                if x_next >= upper {
                    return Outcome::Upper;
                }
                let var = s * s * cfg.dt;
                let p_low = (-2.0 * (x - lower) * (x_next - lower) / var).exp();
                let p_up = (-2.0 * (upper - x) * (upper - x_next) / var).exp();
                let u: f64 = rng.random();
                if u < p_low {
                    return Outcome::Lower;
                }
                if u < p_low + p_up {
                    return Outcome::Upper;
                }
                x = x_next;
            }
            Outcome::Open
        })
        .collect();

    let mut fp = FirstPassage {
        lower_hits: 0,
        upper_hits: 0,
        unabsorbed: 0,
        paths: cfg.path_count,
    };
    for o in outcomes {
        match o {
            Outcome::Lower => fp.lower_hits += 1,
            Outcome::Upper => fp.upper_hits += 1,
            Outcome::Open => fp.unabsorbed += 1,
        }
    }
    Ok(fp)
}
