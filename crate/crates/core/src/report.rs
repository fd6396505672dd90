//! Report documents tying bounds, estimates, verdicts, and curves together,
//! plus the canonical JSON serializer used for every machine-readable
//! artifact: floating-point numbers are printed with 17 significant digits,
//! which round-trips `f64` exactly and makes byte-level hashes meaningful.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::bounds::{gap_bounds, GapBoundResult};
use crate::clifford::HTypeStructure;
use crate::sde::{lemma_diagnostics, time_change_samples, LemmaDiagnostics, LemmaVerdicts};
use crate::smalldev::{
    estimate_gap_exit, estimate_gap_smalldev, exit_ensemble, sandwich_check, small_dev_ensemble,
    EstimateError, ExtrapolationPolicy, GapEstimate, SandwichVerdict, SmallDevCurve,
    SurvivalCurve, WindowPolicy,
};
use crate::stats;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// JSON formatter printing every float with 17 significant digits.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes any document with the canonical float formatting.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value
        .serialize(&mut ser)
        .expect("report documents serialize");
    String::from_utf8(out).expect("canonical JSON is UTF-8")
}

/// Estimation run parameters echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunParams {
    pub m: usize,
    pub n: usize,
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub t_max: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
}

/// One estimator outcome inside a gap report; the verdict is absent in
/// Euclidean calibration mode, where there is no sandwich to check.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateEntry {
    pub estimate: GapEstimate<f64>,
    pub verdict: Option<SandwichVerdict<f64>>,
}

/// Cross-estimator agreement summary when both methods ran.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AgreementCheck {
    pub difference: f64,
    pub combined_se: f64,
    pub within_3_se: bool,
}

/// The `estimate-gap` report document.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub format_version: u32,
    pub params: RunParams,
    /// Absent in Euclidean calibration mode (`n = 0`).
    pub bounds: Option<GapBoundResult<f64>>,
    pub estimates: Vec<EstimateEntry>,
    pub agreement: Option<AgreementCheck>,
    pub survival_curve: Option<SurvivalCurve<f64>>,
    pub smalldev_curve: Option<SmallDevCurve<f64>>,
    pub mean_exit_time: Option<f64>,
    pub se_exit_time: Option<f64>,
}

/// The `check-lemma` report document.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub format_version: u32,
    pub m: usize,
    pub n: usize,
    pub samples: u64,
    pub dt: f64,
    pub seed: u64,
    pub alpha: f64,
    pub diagnostics: LemmaDiagnostics<f64>,
    pub verdicts: LemmaVerdicts<f64>,
    /// Sample means of `A_i(T)^2` next to the Ito-isometry value `m T^2 / 8`.
    pub area_second_moments: Vec<f64>,
    pub area_second_moment_expected: f64,
    pub area_second_moment_ses: Vec<f64>,
}

/// Which estimators an estimation run should execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMethod {
    Exit,
    Smalldev,
    Both,
}

/// Full estimation pipeline behind the `estimate-gap` command: exit-time
/// ensemble and/or small-deviation ensemble (on an independent stream),
/// rate fits, closed-form bounds, sandwich verdicts at `3 sigma`, and the
/// cross-estimator agreement summary. Deterministic in `(params, seed)` for
/// any worker count.
pub fn run_gap_pipeline(
    s: &HTypeStructure,
    method: GapMethod,
    n_paths: u64,
    dt: f64,
    seed: u64,
    t_max: f64,
    eps_grid: &[f64],
) -> Result<GapReport, EstimateError> {
    let bounds = if s.n > 0 {
        Some(gap_bounds::<f64>(s.m, s.n).map_err(|e| {
            EstimateError::InvalidParameter(format!("bounds unavailable for this structure: {e}"))
        })?)
    } else {
        None
    };
    let mut estimates = Vec::new();
    let mut survival_curve = None;
    let mut mean_exit_time = None;
    let mut se_exit_time = None;
    if matches!(method, GapMethod::Exit | GapMethod::Both) {
        let ens = exit_ensemble::<f64>(s, dt, n_paths, t_max, seed)?;
        let est = estimate_gap_exit(&ens.curve, WindowPolicy::default())?;
        estimates.push(EstimateEntry {
            estimate: est,
            verdict: bounds.as_ref().map(|b| sandwich_check(&est, b, 3.0)),
        });
        mean_exit_time = Some(ens.mean_exit_time);
        se_exit_time = Some(ens.se_exit_time);
        survival_curve = Some(ens.curve);
    }
    let mut smalldev_curve = None;
    if matches!(method, GapMethod::Smalldev | GapMethod::Both) {
        // Independent ensemble: a distinct master seed derives unrelated
        // per-path streams.
        let ens = small_dev_ensemble::<f64>(s, eps_grid, dt, n_paths, seed.wrapping_add(1))?;
        let est = estimate_gap_smalldev(&ens.curve, ExtrapolationPolicy::default())?;
        estimates.push(EstimateEntry {
            estimate: est,
            verdict: bounds.as_ref().map(|b| sandwich_check(&est, b, 3.0)),
        });
        smalldev_curve = Some(ens.curve);
    }
    let agreement = if estimates.len() == 2 {
        let a = &estimates[0].estimate;
        let b = &estimates[1].estimate;
        let combined_se = (a.std_error * a.std_error + b.std_error * b.std_error).sqrt();
        let difference = (a.lambda_hat - b.lambda_hat).abs();
        Some(AgreementCheck {
            difference,
            combined_se,
            within_3_se: difference <= 3.0 * combined_se,
        })
    } else {
        None
    };
    Ok(GapReport {
        format_version: REPORT_FORMAT_VERSION,
        params: RunParams {
            m: s.m,
            n: s.n,
            n_paths,
            dt,
            seed,
            t_max: Some(t_max),
            eps_grid: Some(eps_grid.to_vec()),
        },
        bounds,
        estimates,
        agreement,
        survival_curve,
        smalldev_curve,
        mean_exit_time,
        se_exit_time,
    })
}

/// Full diagnostics pipeline behind the `check-lemma` command at horizon
/// `T = 1`.
pub fn run_lemma_pipeline(
    s: &HTypeStructure,
    samples: u64,
    dt: f64,
    seed: u64,
    alpha: f64,
) -> Result<LemmaReport, crate::sde::SdeError> {
    let terminal = time_change_samples::<f64>(s, 1.0, dt, seed, samples)?;
    let diagnostics = lemma_diagnostics(&terminal)?;
    let verdicts = diagnostics.verdicts(alpha);
    let mut area_second_moments = Vec::with_capacity(s.n);
    let mut area_second_moment_ses = Vec::with_capacity(s.n);
    for i in 0..s.n {
        let sq: Vec<f64> = terminal.iter().map(|t| t.a[i] * t.a[i]).collect();
        area_second_moments.push(stats::mean(&sq));
        area_second_moment_ses.push(stats::standard_error(&sq));
    }
    Ok(LemmaReport {
        format_version: REPORT_FORMAT_VERSION,
        m: s.m,
        n: s.n,
        samples,
        dt,
        seed,
        alpha,
        diagnostics,
        verdicts,
        area_second_moments,
        area_second_moment_expected: s.m as f64 / 8.0,
        area_second_moment_ses,
    })
}

/// Curve rows for the flat CSV dump: `(kind, abscissa, estimate, ci_low, ci_high)`.
pub fn curve_csv_rows(
    survival: Option<&SurvivalCurve<f64>>,
    smalldev: Option<&SmallDevCurve<f64>>,
) -> Vec<(String, f64, f64, f64, f64)> {
    let mut rows = Vec::new();
    if let Some(c) = survival {
        for i in 0..c.t_grid.len() {
            rows.push((
                "survival".to_string(),
                c.t_grid[i],
                c.survival[i],
                c.ci_low[i],
                c.ci_high[i],
            ));
        }
    }
    if let Some(c) = smalldev {
        for i in 0..c.eps_grid.len() {
            rows.push((
                "smalldev".to_string(),
                c.eps_grid[i],
                c.prob[i],
                c.ci_low[i],
                c.ci_high[i],
            ));
        }
    }
    rows
}
