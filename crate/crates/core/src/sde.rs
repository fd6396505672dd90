//! Simulation of the hypoelliptic Brownian motion `g_t = (B_t, A_t)` of an
//! H-type group and pathwise diagnostics for its time-change representation
//! `A_t = W_(tau(t))`, `tau(t) = (1/4) int_0^t |B_s|^2 ds`.
//!
//! Discretization: Euler with exact Gaussian increments for `B` and
//! left-point (Ito) increments `dA_i = <U^(i) B, dB> / 2`; `tau` accumulates
//! by the left-point rule so the discrete quadratic variation of `A_i` tracks
//! `tau` identically up to the Gaussian quadratic terms.
//!
//! Path generation is embarrassingly parallel and bit-reproducible: each path
//! owns a counter-derived stream, results are collected in path order, and
//! all aggregation is sequential over that order, so output is identical for
//! any worker count.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::clifford::{verify_structure, HTypeStructure};
use crate::rng::NormalSource;
use crate::scalar::Real;
use crate::stats;

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("structure fails verification: {0}")]
    InvalidStructure(String),
    #[error("{steps} steps per path exceeds the step budget {budget}")]
    StepBudgetExceeded { steps: u64, budget: u64 },
    #[error("component index out of range: ({i}, {j}) with n = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("diagnostics need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },
}

/// Per-path step cap for full-path storage.
pub const FULL_PATH_STEP_BUDGET: u64 = 4_000_000;
/// Per-path step cap for streaming (terminal-only) simulation.
pub const STREAMING_STEP_BUDGET: u64 = 100_000_000;

/// One fully stored trajectory of `(B_t, A_t, tau(t))` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<F> {
    pub dt: F,
    pub steps: usize,
    pub seed: u64,
    /// `(steps + 1) x m` horizontal Brownian path, `B[0] = 0`.
    pub b: Vec<Vec<F>>,
    /// `(steps + 1) x n` stochastic-area components, `A[0] = 0`.
    pub a: Vec<Vec<F>>,
    /// Discretized `tau(t)`, nondecreasing, `tau[0] = 0`.
    pub tau: Vec<F>,
}

/// Terminal statistics of one streamed path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalSample<F> {
    /// `A(T)`.
    pub a: Vec<F>,
    /// `tau(T)`.
    pub tau: F,
    /// Pathwise quadratic covariations `sum_k dA_i dA_j`, `n x n`.
    pub cross_qv: Vec<Vec<F>>,
    /// Max over the grid of the homogeneous norm of `g_t`.
    pub max_norm: F,
}

/// Precomputed sparse form of a verified structure: each generator is a
/// signed permutation, one `(column, sign)` pair per row.
pub struct PathEngine {
    pub m: usize,
    pub n: usize,
    sparse: Vec<Vec<(usize, i8)>>,
}

impl PathEngine {
    pub fn new(s: &HTypeStructure) -> Result<Self, SdeError> {
        let report = verify_structure(s);
        if !report.pass() {
            return Err(SdeError::InvalidStructure(report.to_string()));
        }
        let sparse = s
            .u
            .iter()
            .map(|u| {
                u.iter()
                    .map(|row| {
                        let (c, &e) = row
                            .iter()
                            .enumerate()
                            .find(|(_, &e)| e != 0)
                            .expect("verified generator rows have a nonzero entry");
                        (c, e as i8)
                    })
                    .collect()
            })
            .collect();
        Ok(PathEngine {
            m: s.m,
            n: s.n,
            sparse,
        })
    }

    /// One Euler step; `b`, `a`, `tau` are advanced in place, `db` is
    /// scratch of length `m`. Returns `|b|^2` at the *new* time.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step<F: Real>(
        &self,
        b: &mut [F],
        a: &mut [F],
        tau: &mut F,
        db: &mut [F],
        sqrt_dt: F,
        dt: F,
        src: &mut NormalSource,
    ) -> F {
        let mut b2_left = F::zero();
        for v in b.iter() {
            b2_left += *v * *v;
        }
        *tau += F::of(0.25) * b2_left * dt;
        for d in db.iter_mut() {
            *d = F::of(src.sample()) * sqrt_dt;
        }
        let half = F::of(0.5);
        for (ai, rows) in a.iter_mut().zip(&self.sparse) {
            let mut acc = F::zero();
            for (r, &(c, sign)) in rows.iter().enumerate() {
                let ub = if sign > 0 { b[c] } else { -b[c] };
                acc += ub * db[r];
            }
            *ai += half * acc;
        }
        let mut b2 = F::zero();
        for (v, d) in b.iter_mut().zip(db.iter()) {
            *v += *d;
            b2 += *v * *v;
        }
        b2
    }

}

fn step_count<F: Real>(t: F, dt: F) -> u64 {
    (t / dt).to_f64_lossy().round().max(1.0) as u64
}

/// Simulates one full trajectory on `[0, T]` with the stream derived from
/// `(seed, path 0)`; see [`simulate_path_indexed`] for ensemble members.
pub fn simulate_path<F: Real>(
    s: &HTypeStructure,
    t: F,
    dt: F,
    seed: u64,
) -> Result<PathSample<F>, SdeError> {
    simulate_path_indexed(s, t, dt, seed, 0)
}

/// Full trajectory of ensemble member `index` under master seed `seed`:
/// exactly the path that terminal-mode drivers with the same `(seed, index)`
/// traverse.
pub fn simulate_path_indexed<F: Real>(
    s: &HTypeStructure,
    t: F,
    dt: F,
    seed: u64,
    index: u64,
) -> Result<PathSample<F>, SdeError> {
    let engine = PathEngine::new(s)?;
    let steps = step_count(t, dt);
    if steps > FULL_PATH_STEP_BUDGET {
        return Err(SdeError::StepBudgetExceeded {
            steps,
            budget: FULL_PATH_STEP_BUDGET,
        });
    }
    let steps = steps as usize;
    let mut src = NormalSource::for_path(seed, index);
    let sqrt_dt = dt.sqrt();
    let mut b = vec![F::zero(); engine.m];
    let mut a = vec![F::zero(); engine.n];
    let mut tau = F::zero();
    let mut db = vec![F::zero(); engine.m];
    let mut path = PathSample {
        dt,
        steps,
        seed,
        b: Vec::with_capacity(steps + 1),
        a: Vec::with_capacity(steps + 1),
        tau: Vec::with_capacity(steps + 1),
    };
    path.b.push(b.clone());
    path.a.push(a.clone());
    path.tau.push(tau);
    for _ in 0..steps {
        engine.step(&mut b, &mut a, &mut tau, &mut db, sqrt_dt, dt, &mut src);
        path.b.push(b.clone());
        path.a.push(a.clone());
        path.tau.push(tau);
    }
    Ok(path)
}

/// Pathwise quadratic covariation `sum_k dA_i(k) dA_j(k)` over a stored
/// trajectory.
pub fn empirical_quadratic_covariation<F: Real>(
    p: &PathSample<F>,
    i: usize,
    j: usize,
) -> Result<F, SdeError> {
    let n = p.a.first().map_or(0, Vec::len);
    if i >= n || j >= n {
        return Err(SdeError::IndexOutOfRange { i, j, n });
    }
    let mut acc = F::zero();
    for k in 0..p.steps {
        let di = p.a[k + 1][i] - p.a[k][i];
        let dj = p.a[k + 1][j] - p.a[k][j];
        acc += di * dj;
    }
    Ok(acc)
}

fn run_terminal<F: Real>(engine: &PathEngine, steps: usize, dt: F, mut src: NormalSource) -> TerminalSample<F> {
    let sqrt_dt = dt.sqrt();
    let mut b = vec![F::zero(); engine.m];
    let mut a = vec![F::zero(); engine.n];
    let mut a_prev = a.clone();
    let mut tau = F::zero();
    let mut db = vec![F::zero(); engine.m];
    let mut qv = vec![vec![F::zero(); engine.n]; engine.n];
    let mut max_q = F::zero();
    for _ in 0..steps {
        let b2 = engine.step(&mut b, &mut a, &mut tau, &mut db, sqrt_dt, dt, &mut src);
        for i in 0..engine.n {
            let di = a[i] - a_prev[i];
            for j in 0..engine.n {
                qv[i][j] += di * (a[j] - a_prev[j]);
            }
        }
        a_prev.copy_from_slice(&a);
        let mut a2 = F::zero();
        for v in &a {
            a2 += *v * *v;
        }
        let q = b2 * b2 + a2;
        if q > max_q {
            max_q = q;
        }
    }
    TerminalSample {
        a,
        tau,
        cross_qv: qv,
        max_norm: max_q.sqrt().sqrt(),
    }
}

/// Independent terminal samples of `(A(T), tau(T))` (plus pathwise quadratic
/// covariations and the running max of the homogeneous norm) from
/// counter-derived per-path streams; deterministic in `(seed, count)` for
/// any worker count.
pub fn time_change_samples<F: Real>(
    s: &HTypeStructure,
    t: F,
    dt: F,
    seed: u64,
    count: u64,
) -> Result<Vec<TerminalSample<F>>, SdeError> {
    let engine = PathEngine::new(s)?;
    let steps = step_count(t, dt);
    if steps > STREAMING_STEP_BUDGET {
        return Err(SdeError::StepBudgetExceeded {
            steps,
            budget: STREAMING_STEP_BUDGET,
        });
    }
    let steps = steps as usize;
    Ok((0..count)
        .into_par_iter()
        .map(|i| run_terminal(&engine, steps, dt, NormalSource::for_path(seed, i)))
        .collect())
}

/// Fixed-time diagnostics of the time-change representation.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaDiagnostics<F> {
    pub sample_count: usize,
    /// KS distance of `A_i(T) / sqrt(tau(T))` against the standard normal.
    pub ks_statistics: Vec<F>,
    /// Correlation of `A_i(T)^2 / tau(T)` with `tau(T)`.
    pub independence_corr: Vec<F>,
    /// Median over paths of `|<A_i, A_j>| / <A_i>`; exactly 1 on the
    /// diagonal.
    pub cross_covariations: Vec<Vec<F>>,
}

/// Pass/fail summary at a given significance; see
/// [`LemmaDiagnostics::verdicts`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaVerdicts<F> {
    pub alpha: F,
    pub ks_critical: F,
    pub ks_pass: bool,
    pub corr_threshold: F,
    pub corr_pass: bool,
    pub cross_threshold: F,
    pub cross_pass: bool,
}

impl<F: Real> LemmaVerdicts<F> {
    pub fn pass(&self) -> bool {
        self.ks_pass && self.corr_pass && self.cross_pass
    }
}

/// Computes the diagnostics over at least `10^3` terminal samples.
#[allow(clippy::needless_range_loop)]
pub fn lemma_diagnostics<F: Real>(
    samples: &[TerminalSample<F>],
) -> Result<LemmaDiagnostics<F>, SdeError> {
    if samples.len() < 1000 {
        return Err(SdeError::InsufficientSamples {
            got: samples.len(),
            need: 1000,
        });
    }
    let n = samples[0].a.len();
    let taus: Vec<F> = samples.iter().map(|s| s.tau).collect();
    let mut ks_statistics = Vec::with_capacity(n);
    let mut independence_corr = Vec::with_capacity(n);
    for i in 0..n {
        let normalized: Vec<F> = samples.iter().map(|s| s.a[i] / s.tau.sqrt()).collect();
        ks_statistics.push(stats::ks_statistic(&normalized, stats::normal_cdf));
        let sq_over_tau: Vec<F> = samples.iter().map(|s| s.a[i] * s.a[i] / s.tau).collect();
        independence_corr.push(stats::correlation(&sq_over_tau, &taus));
    }
    let mut cross = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                cross[i][j] = F::one();
            } else {
                let ratios: Vec<F> = samples
                    .iter()
                    .map(|s| s.cross_qv[i][j].abs() / s.cross_qv[i][i])
                    .collect();
                cross[i][j] = stats::median(&ratios);
            }
        }
    }
    Ok(LemmaDiagnostics {
        sample_count: samples.len(),
        ks_statistics,
        independence_corr,
        cross_covariations: cross,
    })
}

impl<F: Real> LemmaDiagnostics<F> {
    /// Verdicts at significance `alpha` for the KS battery, `3 / sqrt(N)`
    /// for the correlation battery, and `0.05` for the covariation battery.
    pub fn verdicts(&self, alpha: F) -> LemmaVerdicts<F> {
        let ks_critical = stats::ks_critical_value(alpha, self.sample_count);
        let corr_threshold = F::of(3.0) / F::of_usize(self.sample_count).sqrt();
        let cross_threshold = F::of(0.05);
        let ks_pass = self.ks_statistics.iter().all(|&d| d < ks_critical);
        let corr_pass = self
            .independence_corr
            .iter()
            .all(|&c| c.abs() < corr_threshold);
        let n = self.cross_covariations.len();
        let cross_pass = (0..n).all(|i| {
            (0..n).all(|j| i == j || self.cross_covariations[i][j] < cross_threshold)
        });
        LemmaVerdicts {
            alpha,
            ks_critical,
            ks_pass,
            corr_threshold,
            corr_pass,
            cross_threshold,
            cross_pass,
        }
    }
}
