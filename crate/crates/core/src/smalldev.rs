//! Spectral gap estimation from simulated paths: survival curves of the
//! first exit time from the unit homogeneous ball, small-deviation curves of
//! `P(max_(0<=t<=1) |g_t| < eps)`, rate-extraction fits for both, and the
//! sandwich check against the closed-form bounds.
//!
//! Discrete monitoring can only miss excursions, so it overestimates both
//! survival and small-ball probabilities; fitted rates therefore
//! underestimate the gap, with a bias that shrinks like `sqrt(dt)`. No
//! boundary-bridge correction is applied (none is known for the
//! homogeneous-norm ball); instead, [`richardson_mean_exit`] exposes a
//! dt-ladder extrapolation for statistics where the bias matters.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::GapBoundResult;
use crate::clifford::HTypeStructure;
use crate::rng::NormalSource;
use crate::scalar::Real;
use crate::sde::{PathEngine, SdeError, STREAMING_STEP_BUDGET};
use crate::stats::{weighted_line_fit, wilson_interval};

/// 97.5% normal quantile: Wilson intervals here are pointwise 95%.
const Z95: f64 = 1.959963984540054;

pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error("every path left the ball before any requested epsilon was reached")]
    AllPathsExited,
    #[error("no stable fit window: {0}")]
    NoStableWindow(String),
    #[error("need at least {need} grid points with a defined rate, got {got}")]
    InsufficientDefinedRates { got: usize, need: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

// ---------------------------------------------------------------------------
// Exit-time ensemble and survival curve
// ---------------------------------------------------------------------------

/// Pointwise survival estimates `P(tau_exit > t)` on a uniform time grid.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve<F> {
    pub t_grid: Vec<F>,
    pub survival: Vec<F>,
    pub ci_low: Vec<F>,
    pub ci_high: Vec<F>,
    pub n_paths: u64,
    pub dt: F,
    pub seed: u64,
}

/// Survival curve plus the exact per-path exit data behind it.
#[derive(Debug, Clone, Serialize)]
pub struct ExitEnsemble<F> {
    pub curve: SurvivalCurve<F>,
    /// Mean of `min(tau_exit, t_max)`.
    pub mean_exit_time: F,
    pub se_exit_time: F,
    pub exited: u64,
    pub t_max: F,
    /// First step index with homogeneous norm >= 1 (`u64::MAX` = censored).
    #[serde(skip)]
    pub exit_steps: Vec<u64>,
}

impl<F: Real> ExitEnsemble<F> {
    /// Exact survival estimate `P(tau_exit > t)` with a 95% Wilson interval,
    /// computed from per-path exit steps rather than the report grid.
    pub fn survival_at(&self, t: F) -> (F, (F, F)) {
        let dt = self.curve.dt;
        let alive = self
            .exit_steps
            .iter()
            .filter(|&&k| k == u64::MAX || F::of(k as f64) * dt > t)
            .count() as u64;
        let n = self.curve.n_paths;
        let (lo, hi) = wilson_interval(alive, n, F::of(Z95));
        (F::of(alive as f64) / F::of(n as f64), (lo, hi))
    }
}

fn run_exit<F: Real>(engine: &PathEngine, max_steps: u64, dt: F, mut src: NormalSource) -> u64 {
    let sqrt_dt = dt.sqrt();
    let mut b = vec![F::zero(); engine.m];
    let mut a = vec![F::zero(); engine.n];
    let mut tau = F::zero();
    let mut db = vec![F::zero(); engine.m];
    for k in 1..=max_steps {
        let b2 = engine.step(&mut b, &mut a, &mut tau, &mut db, sqrt_dt, dt, &mut src);
        let mut a2 = F::zero();
        for v in &a {
            a2 += *v * *v;
        }
        if b2 * b2 + a2 >= F::one() {
            return k;
        }
    }
    u64::MAX
}

/// Simulates `n_paths` until exit from the unit homogeneous ball or `t_max`,
/// returning the survival curve together with exact exit statistics.
#[allow(clippy::needless_range_loop)]
pub fn exit_ensemble<F: Real>(
    s: &HTypeStructure,
    dt: F,
    n_paths: u64,
    t_max: F,
    seed: u64,
) -> Result<ExitEnsemble<F>, EstimateError> {
    if n_paths < 1000 {
        return Err(EstimateError::InvalidParameter(format!(
            "n_paths = {n_paths} < 1000"
        )));
    }
    if t_max < F::one() {
        return Err(EstimateError::InvalidParameter(format!(
            "t_max = {t_max} < 1"
        )));
    }
    let engine = PathEngine::new(s)?;
    let max_steps = (t_max / dt).to_f64_lossy().round() as u64;
    if max_steps > STREAMING_STEP_BUDGET {
        return Err(SdeError::StepBudgetExceeded {
            steps: max_steps,
            budget: STREAMING_STEP_BUDGET,
        }
        .into());
    }
    let exit_steps: Vec<u64> = (0..n_paths)
        .into_par_iter()
        .map(|i| run_exit(&engine, max_steps, dt, NormalSource::for_path(seed, i)))
        .collect();

    let grid_points = DEFAULT_GRID_POINTS;
    let delta = t_max / F::of_usize(grid_points);
    let mut exits_hist = vec![0u64; grid_points + 1];
    let mut sum = F::zero();
    let mut sumsq = F::zero();
    let mut exited = 0u64;
    for &k in &exit_steps {
        let e = if k == u64::MAX {
            t_max
        } else {
            exited += 1;
            let e = F::of(k as f64) * dt;
            let j = ((e / delta).to_f64_lossy() - 1e-9).ceil().max(1.0) as usize;
            exits_hist[j.min(grid_points)] += 1;
            e
        };
        sum += e;
        sumsq += e * e;
    }
    let nf = F::of(n_paths as f64);
    let mean_exit_time = sum / nf;
    let var = (sumsq - sum * sum / nf) / (nf - F::one());
    let se_exit_time = (var / nf).sqrt();

    let mut t_grid = Vec::with_capacity(grid_points + 1);
    let mut survival = Vec::with_capacity(grid_points + 1);
    let mut ci_low = Vec::with_capacity(grid_points + 1);
    let mut ci_high = Vec::with_capacity(grid_points + 1);
    let mut alive = n_paths;
    for i in 0..=grid_points {
        if i > 0 {
            alive -= exits_hist[i];
        }
        t_grid.push(F::of_usize(i) * delta);
        survival.push(F::of(alive as f64) / nf);
        let (lo, hi) = wilson_interval(alive, n_paths, F::of(Z95));
        ci_low.push(lo);
        ci_high.push(hi);
    }
    Ok(ExitEnsemble {
        curve: SurvivalCurve {
            t_grid,
            survival,
            ci_low,
            ci_high,
            n_paths,
            dt,
            seed,
        },
        mean_exit_time,
        se_exit_time,
        exited,
        t_max,
        exit_steps,
    })
}

/// Survival curve only; see [`exit_ensemble`] for the exact exit statistics.
pub fn survival_curve<F: Real>(
    s: &HTypeStructure,
    dt: F,
    n_paths: u64,
    t_max: F,
    seed: u64,
) -> Result<SurvivalCurve<F>, EstimateError> {
    Ok(exit_ensemble(s, dt, n_paths, t_max, seed)?.curve)
}

/// Richardson extrapolation in `sqrt(dt)` of the mean exit time from a
/// coarse and a fine (half-step) ensemble:
/// `(sqrt(2) mean_fine - mean_coarse) / (sqrt(2) - 1)`.
pub fn richardson_mean_exit<F: Real>(coarse: &ExitEnsemble<F>, fine: &ExitEnsemble<F>) -> (F, F) {
    let s2 = F::of(2.0).sqrt();
    let denom = s2 - F::one();
    let mean = (s2 * fine.mean_exit_time - coarse.mean_exit_time) / denom;
    let se = ((s2 * fine.se_exit_time) * (s2 * fine.se_exit_time)
        + coarse.se_exit_time * coarse.se_exit_time)
        .sqrt()
        / denom;
    (mean, se)
}

// ---------------------------------------------------------------------------
// Small-deviation ensemble
// ---------------------------------------------------------------------------

/// Estimates of `P(max_(0<=t<=1) |g_t| < eps)` over an epsilon grid, with the
/// empirical rates `-eps^2 log P`.
#[derive(Debug, Clone, Serialize)]
pub struct SmallDevCurve<F> {
    pub eps_grid: Vec<F>,
    pub prob: Vec<F>,
    pub ci_low: Vec<F>,
    pub ci_high: Vec<F>,
    pub n_paths: u64,
    pub dt: F,
    pub seed: u64,
    /// `-eps^2 log(prob)` where `prob > 0`, undefined otherwise.
    pub rate: Vec<Option<F>>,
}

/// Small-deviation curve plus per-path maxima (homogeneous norm of `g` and
/// Euclidean norm of the horizontal part) for pathwise-domination checks.
#[derive(Debug, Clone, Serialize)]
pub struct SmallDevEnsemble<F> {
    pub curve: SmallDevCurve<F>,
    #[serde(skip)]
    pub max_g: Vec<F>,
    #[serde(skip)]
    pub max_b: Vec<F>,
}

fn run_maxima<F: Real>(engine: &PathEngine, steps: u64, dt: F, mut src: NormalSource) -> (F, F) {
    let sqrt_dt = dt.sqrt();
    let mut b = vec![F::zero(); engine.m];
    let mut a = vec![F::zero(); engine.n];
    let mut tau = F::zero();
    let mut db = vec![F::zero(); engine.m];
    let mut max_q = F::zero();
    let mut max_b2 = F::zero();
    for _ in 0..steps {
        let b2 = engine.step(&mut b, &mut a, &mut tau, &mut db, sqrt_dt, dt, &mut src);
        let mut a2 = F::zero();
        for v in &a {
            a2 += *v * *v;
        }
        let q = b2 * b2 + a2;
        if q > max_q {
            max_q = q;
        }
        if b2 > max_b2 {
            max_b2 = b2;
        }
    }
    (max_q.sqrt().sqrt(), max_b2.sqrt())
}

/// Single shared ensemble on `[0, 1]`; `prob` is monotone in `eps` by
/// construction because every epsilon is evaluated on the same paths.
pub fn small_dev_ensemble<F: Real>(
    s: &HTypeStructure,
    eps_grid: &[F],
    dt: F,
    n_paths: u64,
    seed: u64,
) -> Result<SmallDevEnsemble<F>, EstimateError> {
    if n_paths < 1000 {
        return Err(EstimateError::InvalidParameter(format!(
            "n_paths = {n_paths} < 1000"
        )));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| e.is_nan() || e <= F::zero()) {
        return Err(EstimateError::InvalidParameter(
            "eps grid must be nonempty and positive".into(),
        ));
    }
    if eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimateError::InvalidParameter(
            "eps grid must be strictly increasing".into(),
        ));
    }
    let engine = PathEngine::new(s)?;
    let steps = (F::one() / dt).to_f64_lossy().round() as u64;
    if steps > STREAMING_STEP_BUDGET {
        return Err(SdeError::StepBudgetExceeded {
            steps,
            budget: STREAMING_STEP_BUDGET,
        }
        .into());
    }
    let maxima: Vec<(F, F)> = (0..n_paths)
        .into_par_iter()
        .map(|i| run_maxima(&engine, steps, dt, NormalSource::for_path(seed, i)))
        .collect();
    let (max_g, max_b): (Vec<F>, Vec<F>) = maxima.into_iter().unzip();

    let nf = F::of(n_paths as f64);
    let mut prob = Vec::with_capacity(eps_grid.len());
    let mut ci_low = Vec::with_capacity(eps_grid.len());
    let mut ci_high = Vec::with_capacity(eps_grid.len());
    let mut rate = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let count = max_g.iter().filter(|&&v| v < eps).count() as u64;
        let p = F::of(count as f64) / nf;
        let (lo, hi) = wilson_interval(count, n_paths, F::of(Z95));
        prob.push(p);
        ci_low.push(lo);
        ci_high.push(hi);
        rate.push(if count > 0 {
            Some(-eps * eps * p.ln())
        } else {
            None
        });
    }
    if rate.iter().all(Option::is_none) {
        return Err(EstimateError::AllPathsExited);
    }
    Ok(SmallDevEnsemble {
        curve: SmallDevCurve {
            eps_grid: eps_grid.to_vec(),
            prob,
            ci_low,
            ci_high,
            n_paths,
            dt,
            seed,
            rate,
        },
        max_g,
        max_b,
    })
}

/// Curve-only variant of [`small_dev_ensemble`].
pub fn small_dev_prob<F: Real>(
    s: &HTypeStructure,
    eps_grid: &[F],
    dt: F,
    n_paths: u64,
    seed: u64,
) -> Result<SmallDevCurve<F>, EstimateError> {
    Ok(small_dev_ensemble(s, eps_grid, dt, n_paths, seed)?.curve)
}

// ---------------------------------------------------------------------------
// Rate extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ExitTail,
    SmalldevExtrapolation,
}

/// Fit window selection for the exit-tail regression.
#[derive(Debug, Clone, Copy)]
pub enum WindowPolicy<F> {
    /// Largest suffix window of usable points reaching the prescribed
    /// weighted R^2 with at least `min_points` points.
    Automatic { min_points: usize, r2_min: F },
    /// Fixed time window `[t_lo, t_hi]`.
    Fixed { t_lo: F, t_hi: F },
}

impl<F: Real> Default for WindowPolicy<F> {
    fn default() -> Self {
        WindowPolicy::Automatic {
            min_points: 8,
            r2_min: F::of(0.995),
        }
    }
}

/// Finite-epsilon extrapolation settings for the small-deviation fit.
#[derive(Debug, Clone, Copy)]
pub struct ExtrapolationPolicy {
    /// Grid points with fewer surviving paths than this are excluded.
    pub min_count: u64,
    /// Use uniform instead of binomial (delta-method) weights; intended for
    /// analytically known curves.
    pub uniform_weights: bool,
}

impl Default for ExtrapolationPolicy {
    fn default() -> Self {
        ExtrapolationPolicy {
            min_count: 25,
            uniform_weights: false,
        }
    }
}

/// A rate estimate with its provenance diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapEstimate<F> {
    pub lambda_hat: F,
    pub std_error: F,
    pub method: EstimateMethod,
    /// Time window (exit) or epsilon window (small deviation) of the fit.
    pub window: (F, F),
    pub r_squared: F,
    pub n_paths: u64,
    pub dt: F,
    pub points_used: usize,
    /// Fitted finite-epsilon correction slope (small-deviation method only).
    pub slope: Option<F>,
    /// Intercept of the alternative quadratic-in-epsilon model
    /// (small-deviation method only); its distance from `lambda_hat` enters
    /// `std_error` as extrapolation-model uncertainty.
    pub quadratic_intercept: Option<F>,
}

/// Weighted least squares of `log S(t)` on `t` over a window of usable
/// points, with binomial weights `w = n S / (1 - S)`; the reported rate is
/// minus the slope.
///
/// Under the automatic policy, usable means `25 / n_paths < S <= 1/2`: the
/// exponential-tail model only holds after genuine decay, and points on the
/// early `S ~ 1` plateau would otherwise dominate the weighted fit through
/// their tiny binomial variances. A fixed window is taken as given (minus
/// the floor and the degenerate `S = 1` points).
pub fn estimate_gap_exit<F: Real>(
    curve: &SurvivalCurve<F>,
    policy: WindowPolicy<F>,
) -> Result<GapEstimate<F>, EstimateError> {
    let n = curve.n_paths;
    let floor = F::of(25.0) / F::of(n as f64);
    let ceiling = match policy {
        WindowPolicy::Automatic { .. } => F::of(0.5),
        WindowPolicy::Fixed { .. } => F::one(),
    };
    let usable: Vec<usize> = (0..curve.t_grid.len())
        .filter(|&i| {
            curve.survival[i] > floor
                && curve.survival[i] < F::one()
                && curve.survival[i] <= ceiling
        })
        .collect();
    if usable.len() < 2 {
        return Err(EstimateError::NoStableWindow(format!(
            "only {} usable points above the 25/n floor",
            usable.len()
        )));
    }
    let fit_on = |idx: &[usize]| {
        let t: Vec<F> = idx.iter().map(|&i| curve.t_grid[i]).collect();
        let y: Vec<F> = idx.iter().map(|&i| curve.survival[i].ln()).collect();
        let w: Vec<F> = idx
            .iter()
            .map(|&i| {
                let s = curve.survival[i];
                F::of(n as f64) * s / (F::one() - s)
            })
            .collect();
        weighted_line_fit(&t, &y, &w)
    };
    let (chosen, fit) = match policy {
        WindowPolicy::Fixed { t_lo, t_hi } => {
            let idx: Vec<usize> = usable
                .iter()
                .copied()
                .filter(|&i| curve.t_grid[i] >= t_lo && curve.t_grid[i] <= t_hi)
                .collect();
            if idx.len() < 2 {
                return Err(EstimateError::NoStableWindow(
                    "fixed window holds fewer than 2 usable points".into(),
                ));
            }
            let fit = fit_on(&idx);
            (idx, fit)
        }
        WindowPolicy::Automatic { min_points, r2_min } => {
            if usable.len() < min_points {
                return Err(EstimateError::NoStableWindow(format!(
                    "{} usable points < min_points = {min_points}",
                    usable.len()
                )));
            }
            let mut found = None;
            for start in 0..=(usable.len() - min_points) {
                let idx = &usable[start..];
                let fit = fit_on(idx);
                if fit.r_squared >= r2_min {
                    found = Some((idx.to_vec(), fit));
                    break;
                }
            }
            found.ok_or_else(|| {
                EstimateError::NoStableWindow(format!(
                    "no suffix window of >= {min_points} points reaches R^2 >= {r2_min}"
                ))
            })?
        }
    };
    let lambda_hat = -fit.slope;
    if lambda_hat.is_nan() || lambda_hat <= F::zero() {
        return Err(EstimateError::DegenerateFit(format!(
            "nonpositive fitted rate {lambda_hat}"
        )));
    }
    Ok(GapEstimate {
        lambda_hat,
        std_error: fit.se_slope,
        method: EstimateMethod::ExitTail,
        window: (
            curve.t_grid[chosen[0]],
            curve.t_grid[*chosen.last().unwrap()],
        ),
        r_squared: fit.r_squared,
        n_paths: n,
        dt: curve.dt,
        points_used: chosen.len(),
        slope: None,
        quadratic_intercept: None,
    })
}

/// Fits `rate(eps) = lambda + a eps` over the defined part of the rate array
/// and reports the intercept; the affine term absorbs the leading
/// finite-epsilon correction.
///
/// Because no correction exponent is known a priori, the same data is also
/// fitted with the quadratic model `rate = lambda + a eps^2` (the form an
/// exponential decay with a constant prefactor produces), and the distance
/// between the two intercepts enters `std_error` as extrapolation-model
/// uncertainty alongside the fit error.
pub fn estimate_gap_smalldev<F: Real>(
    curve: &SmallDevCurve<F>,
    policy: ExtrapolationPolicy,
) -> Result<GapEstimate<F>, EstimateError> {
    let n = curve.n_paths;
    let mut eps = Vec::new();
    let mut rate = Vec::new();
    let mut weights = Vec::new();
    for i in 0..curve.eps_grid.len() {
        if let Some(r) = curve.rate[i] {
            let p = curve.prob[i];
            let count = (p.to_f64_lossy() * n as f64).round() as u64;
            if count < policy.min_count {
                continue;
            }
            eps.push(curve.eps_grid[i]);
            rate.push(r);
            if policy.uniform_weights {
                weights.push(F::one());
            } else {
                let e2 = curve.eps_grid[i] * curve.eps_grid[i];
                let var = e2 * e2 * (F::one() - p).max(F::of(1.0) / F::of(n as f64))
                    / (F::of(n as f64) * p);
                weights.push(F::one() / var);
            }
        }
    }
    if eps.len() < 4 {
        return Err(EstimateError::InsufficientDefinedRates {
            got: eps.len(),
            need: 4,
        });
    }
    let fit = weighted_line_fit(&eps, &rate, &weights);
    if fit.intercept.is_nan() || fit.intercept <= F::zero() {
        return Err(EstimateError::DegenerateFit(format!(
            "nonpositive extrapolated rate {}",
            fit.intercept
        )));
    }
    let eps_sq: Vec<F> = eps.iter().map(|&e| e * e).collect();
    let quad = weighted_line_fit(&eps_sq, &rate, &weights);
    let model_spread = (fit.intercept - quad.intercept).abs();
    let std_error = (fit.se_intercept * fit.se_intercept + model_spread * model_spread).sqrt();
    Ok(GapEstimate {
        lambda_hat: fit.intercept,
        std_error,
        method: EstimateMethod::SmalldevExtrapolation,
        window: (eps[0], *eps.last().unwrap()),
        r_squared: fit.r_squared,
        n_paths: n,
        dt: curve.dt,
        points_used: eps.len(),
        slope: Some(fit.slope),
        quadratic_intercept: Some(quad.intercept),
    })
}

// ---------------------------------------------------------------------------
// Sandwich verdict
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailDirection {
    /// Estimate interval entirely below the lower bound: points at
    /// discretization bias.
    BelowLower,
    /// Estimate interval entirely above the upper bound: points at a bug.
    AboveUpper,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichVerdict<F> {
    pub pass: bool,
    pub direction: Option<FailDirection>,
    pub k_sigma: F,
    /// `[lambda_hat - k sigma, lambda_hat + k sigma]`.
    pub estimate_interval: (F, F),
    /// `[lower, upper]` from the closed-form bounds.
    pub bound_interval: (F, F),
    /// `estimate_hi - lower`: nonnegative iff not failing below.
    pub margin_lower: F,
    /// `upper - estimate_lo`: nonnegative iff not failing above.
    pub margin_upper: F,
}

/// PASS iff the `k_sigma` interval around the estimate intersects
/// `[lower, upper]`, boundaries inclusive.
pub fn sandwich_check<F: Real>(
    est: &GapEstimate<F>,
    bounds: &GapBoundResult<F>,
    k_sigma: F,
) -> SandwichVerdict<F> {
    let lo = est.lambda_hat - k_sigma * est.std_error;
    let hi = est.lambda_hat + k_sigma * est.std_error;
    let margin_lower = hi - bounds.lower;
    let margin_upper = bounds.upper - lo;
    let pass = margin_lower >= F::zero() && margin_upper >= F::zero();
    let direction = if pass {
        None
    } else if margin_lower < F::zero() {
        Some(FailDirection::BelowLower)
    } else {
        Some(FailDirection::AboveUpper)
    };
    SandwichVerdict {
        pass,
        direction,
        k_sigma,
        estimate_interval: (lo, hi),
        bound_interval: (bounds.lower, bounds.upper),
        margin_lower,
        margin_upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::gap_bounds;
    use crate::clifford::build_generators;
    use crate::rng::SplitMix64;

    fn synthetic_survival(lambda: f64, n: u64, seed: u64) -> SurvivalCurve<f64> {
        // S(t) = exp(-lambda t) with binomial noise (normal approximation).
        let mut rng = SplitMix64::new(seed);
        let mut normal = || {
            let u1 = rng.uniform();
            let u2 = rng.uniform();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let points = 200;
        let t_max = 4.0;
        let mut t_grid = Vec::new();
        let mut survival = Vec::new();
        let mut ci_low = Vec::new();
        let mut ci_high = Vec::new();
        for i in 0..=points {
            let t = t_max * i as f64 / points as f64;
            let p = (-lambda * t).exp();
            let k = if i == 0 {
                n
            } else {
                let kf = n as f64 * p + (n as f64 * p * (1.0 - p)).sqrt() * normal();
                kf.round().clamp(0.0, n as f64) as u64
            };
            t_grid.push(t);
            survival.push(k as f64 / n as f64);
            let (lo, hi) = wilson_interval(k, n, Z95);
            ci_low.push(lo);
            ci_high.push(hi);
        }
        SurvivalCurve {
            t_grid,
            survival,
            ci_low,
            ci_high,
            n_paths: n,
            dt: 1e-4,
            seed,
        }
    }

    #[test]
    fn survival_starts_at_one_and_is_monotone() {
        let s = build_generators(2, 1).unwrap();
        let ens = exit_ensemble::<f64>(&s, 1e-3, 2000, 2.0, 9).unwrap();
        assert_eq!(ens.curve.survival[0], 1.0);
        for w in ens.curve.survival.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for i in 0..ens.curve.survival.len() {
            assert!(ens.curve.ci_low[i] <= ens.curve.survival[i]);
            assert!(ens.curve.survival[i] <= ens.curve.ci_high[i]);
        }
    }

    #[test]
    fn synthetic_exit_rate_is_recovered() {
        let curve = synthetic_survival(3.0, 100_000, 77);
        let est = estimate_gap_exit(&curve, WindowPolicy::default()).unwrap();
        assert!(
            (est.lambda_hat - 3.0).abs() <= 3.0 * est.std_error,
            "lambda = {} +- {}",
            est.lambda_hat,
            est.std_error
        );
        assert!(est.r_squared > 0.995);
    }

    #[test]
    fn truncated_curve_has_no_stable_window() {
        // All-ones survival: no usable decaying points.
        let curve = SurvivalCurve {
            t_grid: (0..20).map(|i| i as f64 * 0.1).collect(),
            survival: vec![1.0; 20],
            ci_low: vec![1.0; 20],
            ci_high: vec![1.0; 20],
            n_paths: 10_000,
            dt: 1e-3,
            seed: 0,
        };
        assert!(matches!(
            estimate_gap_exit(&curve, WindowPolicy::<f64>::default()),
            Err(EstimateError::NoStableWindow(_))
        ));
    }

    #[test]
    fn smalldev_probabilities_are_monotone_and_rate_well_defined() {
        let s = build_generators(2, 1).unwrap();
        let eps: Vec<f64> = vec![0.8, 1.0, 1.3, 10.0];
        let ens = small_dev_ensemble(&s, &eps, 1e-3, 2000, 4).unwrap();
        for w in ens.curve.prob.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // Huge epsilon: probability ~ 1 and rate ~ 0.
        let last = ens.curve.prob.last().unwrap();
        assert_eq!(*last, 1.0);
        assert!(ens.curve.rate.last().unwrap().unwrap().abs() < 1e-12);
        // Pathwise domination: max |g| < eps implies max |B| < eps.
        for (g, b) in ens.max_g.iter().zip(&ens.max_b) {
            assert!(b <= g);
            for &e in &eps {
                // max |g| < eps implies max |B| < eps, pathwise.
                assert!(*g >= e || *b < e);
            }
        }
    }

    #[test]
    fn smalldev_grid_validation() {
        let s = build_generators(2, 1).unwrap();
        assert!(matches!(
            small_dev_prob::<f64>(&s, &[0.5, 0.5], 1e-2, 2000, 1),
            Err(EstimateError::InvalidParameter(_))
        ));
        assert!(matches!(
            small_dev_prob::<f64>(&s, &[0.2, 0.5], 1e-2, 100, 1),
            Err(EstimateError::InvalidParameter(_))
        ));
        // Tiny epsilons only: every path exits them.
        assert!(matches!(
            small_dev_prob::<f64>(&s, &[1e-6, 2e-6], 1e-2, 2000, 1),
            Err(EstimateError::AllPathsExited)
        ));
    }

    #[test]
    fn smalldev_fit_on_exact_synthetic_probabilities() {
        // P(eps) = exp(-lambda / eps^2) gives a constant rate array equal to
        // lambda; the fit must return intercept lambda and slope ~ 0.
        let lambda = 2.0f64;
        let eps: Vec<f64> = vec![0.3, 0.4, 0.5, 0.6, 0.8];
        let prob: Vec<f64> = eps.iter().map(|e| (-lambda / (e * e)).exp()).collect();
        let rate: Vec<Option<f64>> = eps
            .iter()
            .zip(&prob)
            .map(|(e, p)| Some(-e * e * p.ln()))
            .collect();
        let curve = SmallDevCurve {
            eps_grid: eps,
            prob: prob.clone(),
            ci_low: prob.clone(),
            ci_high: prob,
            n_paths: 1_000_000,
            dt: 1e-4,
            seed: 0,
            rate,
        };
        let est = estimate_gap_smalldev(
            &curve,
            ExtrapolationPolicy {
                min_count: 0,
                uniform_weights: true,
            },
        )
        .unwrap();
        assert!((est.lambda_hat - lambda).abs() < 1e-6);
        assert!(est.slope.unwrap().abs() < 1e-6);
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn smalldev_fit_on_analytic_one_dimensional_curve() {
        // Exact small-ball probabilities for |B| on [0, 1] in d = 1 from the
        // alternating series P = sum_k (-1)^k 4/((2k+1) pi) e^(-(2k+1)^2 pi^2/(8 eps^2)).
        let p_exact = |eps: f64| {
            let mut p = 0.0;
            for k in 0..40 {
                let j = (2 * k + 1) as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                p += sign * 4.0 / (j * std::f64::consts::PI)
                    * (-j * j * std::f64::consts::PI * std::f64::consts::PI
                        / (8.0 * eps * eps))
                        .exp();
            }
            p
        };
        let eps: Vec<f64> = vec![0.15, 0.2, 0.3, 0.4];
        let prob: Vec<f64> = eps.iter().map(|&e| p_exact(e)).collect();
        let rate: Vec<Option<f64>> = eps
            .iter()
            .zip(&prob)
            .map(|(e, p)| Some(-e * e * p.ln()))
            .collect();
        let curve = SmallDevCurve {
            eps_grid: eps,
            prob: prob.clone(),
            ci_low: prob.clone(),
            ci_high: prob,
            n_paths: 1_000_000,
            dt: 1e-4,
            seed: 0,
            rate,
        };
        let est = estimate_gap_smalldev(
            &curve,
            ExtrapolationPolicy {
                min_count: 0,
                uniform_weights: true,
            },
        )
        .unwrap();
        let lambda1 = std::f64::consts::PI * std::f64::consts::PI / 8.0;
        assert!(
            (est.lambda_hat - lambda1).abs() < 0.1 * lambda1,
            "intercept {}",
            est.lambda_hat
        );
    }

    #[test]
    fn insufficient_defined_rates() {
        let curve = SmallDevCurve {
            eps_grid: vec![0.1, 0.2, 0.3],
            prob: vec![0.0, 0.5, 0.9],
            ci_low: vec![0.0; 3],
            ci_high: vec![1.0; 3],
            n_paths: 10_000,
            dt: 1e-3,
            seed: 0,
            rate: vec![None, Some(1.0), Some(2.0)],
        };
        assert!(matches!(
            estimate_gap_smalldev(&curve, ExtrapolationPolicy::default()),
            Err(EstimateError::InsufficientDefinedRates { got: 2, need: 4 })
        ));
    }

    #[test]
    fn sandwich_examples() {
        let bounds = gap_bounds::<f64>(2, 1).unwrap();
        let mk = |lambda_hat: f64, se: f64| GapEstimate {
            lambda_hat,
            std_error: se,
            method: EstimateMethod::ExitTail,
            window: (0.5, 3.0),
            r_squared: 0.999,
            n_paths: 100_000,
            dt: 1e-4,
            points_used: 100,
            slope: None,
            quadratic_intercept: None,
        };
        let v = sandwich_check(&mk(3.4, 0.2), &bounds, 3.0);
        assert!(v.pass);
        assert!(v.direction.is_none());

        let v = sandwich_check(&mk(2.0, 0.1), &bounds, 3.0);
        assert!(!v.pass);
        assert_eq!(v.direction, Some(FailDirection::BelowLower));

        let v = sandwich_check(&mk(9.0, 0.1), &bounds, 3.0);
        assert!(!v.pass);
        assert_eq!(v.direction, Some(FailDirection::AboveUpper));

        // Boundary inclusive: estimate exactly at the lower bound with a
        // zero-width interval.
        let v = sandwich_check(&mk(bounds.lower, 0.1), &bounds, 0.0);
        assert!(v.pass);
    }

    #[test]
    fn exit_estimator_bias_shrinks_with_dt() {
        // Euclidean m = 1 calibration at two step sizes: the finer rate is
        // not lower (within noise), since finer monitoring catches more
        // exits.
        let s = HTypeStructure::euclidean(1);
        let coarse = exit_ensemble::<f64>(&s, 2e-3, 20_000, 6.0, 555).unwrap();
        let fine = exit_ensemble::<f64>(&s, 1e-3, 20_000, 6.0, 556).unwrap();
        let ec = estimate_gap_exit(&coarse.curve, WindowPolicy::default()).unwrap();
        let ef = estimate_gap_exit(&fine.curve, WindowPolicy::default()).unwrap();
        let combined = (ec.std_error.powi(2) + ef.std_error.powi(2)).sqrt();
        assert!(
            ef.lambda_hat >= ec.lambda_hat - 3.0 * combined,
            "coarse {} fine {}",
            ec.lambda_hat,
            ef.lambda_hat
        );
        // Both already in the right ballpark of pi^2/8.
        let lambda1 = std::f64::consts::PI * std::f64::consts::PI / 8.0;
        assert!((ef.lambda_hat - lambda1).abs() < 0.15 * lambda1);
    }

    #[test]
    fn fixed_window_policy_is_honored() {
        let curve = synthetic_survival(3.0, 100_000, 11);
        let est = estimate_gap_exit(
            &curve,
            WindowPolicy::Fixed {
                t_lo: 0.5,
                t_hi: 2.0,
            },
        )
        .unwrap();
        assert!(est.window.0 >= 0.5 && est.window.1 <= 2.0);
        assert!((est.lambda_hat - 3.0).abs() < 0.1);
    }
}
