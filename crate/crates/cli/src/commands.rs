//! Implementations of the subcommands: parameter merging (flags over config
//! over defaults), validation, computation, and file emission.

use std::io::Write;
use std::path::PathBuf;

use serde_json::json;

use hgap_core::bounds::{gap_bounds, ratio_asymptotics, BoundsError};
use hgap_core::clifford::{build_generators, hurwitz_radon, CliffordError, HTypeStructure};
use hgap_core::eigen::{self, EigenError};
use hgap_core::report::{
    curve_csv_rows, run_gap_pipeline, run_lemma_pipeline, to_canonical_json, GapMethod, GapReport,
};
use hgap_core::sde::{simulate_path_indexed, time_change_samples, SdeError};
use hgap_core::smalldev::EstimateError;

use crate::config::SectionView;
use crate::registry::{hash_file, wildcard_match, OutputEntry, Registry, RunRecord};

/// Errors mapped to exit code 1 (validation) or 2 (computation).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Computation(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Computation(_) => "computation",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Computation(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Computation(_) => 2,
        }
    }
}

impl From<CliffordError> for CliError {
    fn from(e: CliffordError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EigenError> for CliError {
    fn from(e: EigenError) -> Self {
        match e {
            EigenError::Domain { .. } => CliError::Validation(e.to_string()),
            EigenError::ConvergenceFailure { .. } => CliError::Computation(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Eigen(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SdeError> for CliError {
    fn from(e: SdeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::InvalidParameter(_) => CliError::Validation(e.to_string()),
            EstimateError::Sde(inner) => inner.into(),
            EstimateError::AllPathsExited
            | EstimateError::NoStableWindow(_)
            | EstimateError::InsufficientDefinedRates { .. }
            | EstimateError::DegenerateFit(_) => CliError::Computation(e.to_string()),
        }
    }
}

fn io_out(e: std::io::Error, path: &std::path::Path) -> CliError {
    CliError::Computation(format!("cannot write {}: {e}", path.display()))
}

/// Result of one command: registry metadata plus optional stdout text.
pub struct CommandOutput {
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub stdout: Option<String>,
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("missing required parameter --{flag}")))
}

fn merge<T>(flag: Option<T>, cfg: Result<Option<T>, String>) -> Result<Option<T>, CliError> {
    let cfg = cfg.map_err(CliError::Validation)?;
    Ok(flag.or(cfg))
}

fn write_text(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_out(e, path))
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn load_structure(
    structure: Option<PathBuf>,
    euclidean: Option<usize>,
) -> Result<HTypeStructure, CliError> {
    match (structure, euclidean) {
        (Some(path), None) => Ok(HTypeStructure::load(&path)?),
        (None, Some(m)) => {
            if m == 0 {
                return Err(CliError::Validation("--euclidean dimension must be positive".into()));
            }
            Ok(HTypeStructure::euclidean(m))
        }
        (Some(_), Some(_)) => Err(CliError::Validation(
            "--structure and --euclidean are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Validation(
            "one of --structure or --euclidean is required".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// radon / build / verify
// ---------------------------------------------------------------------------

pub fn cmd_radon(m: Option<usize>, mut cfg: SectionView) -> Result<CommandOutput, CliError> {
    let m = require(merge(m, cfg.take_parsed("m"))?, "m")?;
    cfg.finish().map_err(CliError::Validation)?;
    if m == 0 {
        return Err(CliError::Validation("m must be positive".into()));
    }
    Ok(CommandOutput {
        params: json!({ "m": m }),
        seed: None,
        outputs: vec![],
        stdout: Some(format!("{}", hurwitz_radon(m))),
    })
}

pub fn cmd_build(
    m: Option<usize>,
    n: Option<usize>,
    out: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let m = require(merge(m, cfg.take_parsed("m"))?, "m")?;
    let n = require(merge(n, cfg.take_parsed("n"))?, "n")?;
    let out = merge(out, cfg.take_parsed("out"))?;
    cfg.finish().map_err(CliError::Validation)?;
    let s = build_generators(m, n)?;
    let text = s.to_json();
    let mut outputs = Vec::new();
    let stdout = match out {
        Some(path) => {
            write_text(&path, &text)?;
            outputs.push(path);
            None
        }
        None => Some(text),
    };
    Ok(CommandOutput {
        params: json!({ "m": m, "n": n }),
        seed: None,
        outputs,
        stdout,
    })
}

pub fn cmd_verify(
    structure: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let path = require(merge(structure, cfg.take_parsed("structure"))?, "structure")?;
    cfg.finish().map_err(CliError::Validation)?;
    // Parse leniently: verification failures are report contents here, not
    // load errors.
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let s: HTypeStructure =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let report = hgap_core::verify_structure(&s);
    let doc = json!({
        "m": s.m,
        "n": s.n,
        "pass": report.pass(),
        "report": report,
    });
    Ok(CommandOutput {
        params: json!({ "structure": path.display().to_string() }),
        seed: None,
        outputs: vec![],
        stdout: Some(to_canonical_json(&doc)),
    })
}

// ---------------------------------------------------------------------------
// eigen / bounds
// ---------------------------------------------------------------------------

pub fn cmd_eigen(
    d_max: Option<usize>,
    format: Option<String>,
    out: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let d_max = require(merge(d_max, cfg.take_parsed("d-max"))?, "d-max")?;
    let format = merge(format, cfg.take_parsed("format"))?.unwrap_or_else(|| "csv".into());
    let out = merge(out, cfg.take_parsed("out"))?;
    cfg.finish().map_err(CliError::Validation)?;
    if d_max == 0 {
        return Err(CliError::Validation("d-max must be positive".into()));
    }
    let mut rows = Vec::with_capacity(d_max);
    for d in 1..=d_max {
        let r = eigen::eigenvalue::<f64>(d)?;
        rows.push((d, r.nu, r.j_first_zero, r.lambda, eigen::lambda1_asymptotic::<f64>(d)));
    }
    let text = match format.as_str() {
        "csv" => {
            let mut text = String::from("d,nu,j_first_zero,lambda,lambda_paper_asymptotic\n");
            for (d, nu, j, l, a) in &rows {
                text.push_str(&format!(
                    "{d},{},{},{},{}\n",
                    fmt17(*nu),
                    fmt17(*j),
                    fmt17(*l),
                    fmt17(*a)
                ));
            }
            text
        }
        "json" => {
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|(d, nu, j, l, a)| {
                    json!({
                        "d": d,
                        "nu": nu,
                        "j_first_zero": j,
                        "lambda": l,
                        "lambda_paper_asymptotic": a,
                    })
                })
                .collect();
            to_canonical_json(&docs)
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown format {other:?}; expected csv or json"
            )))
        }
    };
    let mut outputs = Vec::new();
    let stdout = match out {
        Some(path) => {
            write_text(&path, &text)?;
            outputs.push(path);
            None
        }
        None => Some(text),
    };
    Ok(CommandOutput {
        params: json!({ "d_max": d_max, "format": format }),
        seed: None,
        outputs,
        stdout,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_bounds(
    m: Option<usize>,
    n: Option<usize>,
    sweep: bool,
    m_list: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let m = merge(m, cfg.take_parsed("m"))?;
    let n = require(merge(n, cfg.take_parsed("n"))?, "n")?;
    let m_list = merge(m_list, cfg.take_parsed("m-list"))?;
    let format = merge(format, cfg.take_parsed("format"))?;
    let out = merge(out, cfg.take_parsed("out"))?;
    let sweep = sweep || cfg.take_parsed::<bool>("sweep").map_err(CliError::Validation)?.unwrap_or(false);
    cfg.finish().map_err(CliError::Validation)?;

    let (params, text) = if sweep {
        let list_text = require(m_list, "m-list")?;
        let ms: Vec<usize> = list_text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::Validation(format!("bad m-list entry {t:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        let rows = ratio_asymptotics::<f64>(&ms, n)?;
        let format = format.unwrap_or_else(|| "csv".into());
        let text = match format.as_str() {
            "csv" => {
                let mut text =
                    String::from("m,lambda_m,lambda_n,c,x_star,lower,upper,ratio\n");
                for r in &rows {
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        r.m,
                        fmt17(r.lambda_m),
                        fmt17(r.lambda_n),
                        fmt17(r.c),
                        fmt17(r.x_star),
                        fmt17(r.lower),
                        fmt17(r.upper),
                        fmt17(r.ratio)
                    ));
                }
                text
            }
            "json" => to_canonical_json(&rows),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown format {other:?}; expected csv or json"
                )))
            }
        };
        (json!({ "sweep": true, "n": n, "m_list": ms }), text)
    } else {
        let m = require(m, "m")?;
        let b = gap_bounds::<f64>(m, n)?;
        let format = format.unwrap_or_else(|| "json".into());
        if format != "json" {
            return Err(CliError::Validation(format!(
                "unknown format {format:?}; single-pair bounds emit json"
            )));
        }
        (json!({ "m": m, "n": n }), to_canonical_json(&b))
    };
    let mut outputs = Vec::new();
    let stdout = match out {
        Some(path) => {
            write_text(&path, &text)?;
            outputs.push(path);
            None
        }
        None => Some(text),
    };
    Ok(CommandOutput {
        params,
        seed: None,
        outputs,
        stdout,
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    structure: Option<PathBuf>,
    euclidean: Option<usize>,
    t: Option<f64>,
    dt: Option<f64>,
    paths: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    full_paths: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let structure = merge(structure, cfg.take_parsed("structure"))?;
    let euclidean = merge(euclidean, cfg.take_parsed("euclidean"))?;
    let t = merge(t, cfg.take_parsed("t"))?.unwrap_or(1.0);
    let dt = require(merge(dt, cfg.take_parsed("dt"))?, "dt")?;
    let paths = require(merge(paths, cfg.take_parsed("paths"))?, "paths")?;
    let seed = require(merge(seed, cfg.take_parsed("seed"))?, "seed")?;
    let out = require(merge(out, cfg.take_parsed("out"))?, "out")?;
    let full_paths = merge(full_paths, cfg.take_parsed("full-paths"))?;
    cfg.finish().map_err(CliError::Validation)?;
    if !dt.is_finite() || dt <= 0.0 || !t.is_finite() || t <= 0.0 || dt > t {
        return Err(CliError::Validation(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t}"
        )));
    }
    if paths == 0 {
        return Err(CliError::Validation("paths must be positive".into()));
    }
    let s = load_structure(structure.clone(), euclidean)?;
    let samples = time_change_samples::<f64>(&s, t, dt, seed, paths)?;

    let mut csv = String::from("path_id");
    for i in 1..=s.n {
        csv.push_str(&format!(",a_{i}"));
    }
    csv.push_str(",tau,max_norm\n");
    for (idx, sample) in samples.iter().enumerate() {
        csv.push_str(&format!("{idx}"));
        for v in &sample.a {
            csv.push(',');
            csv.push_str(&fmt17(*v));
        }
        csv.push(',');
        csv.push_str(&fmt17(sample.tau));
        csv.push(',');
        csv.push_str(&fmt17(sample.max_norm));
        csv.push('\n');
    }
    write_text(&out, &csv)?;
    let mut outputs = vec![out];

    if let Some(bin_path) = full_paths {
        let steps = (t / dt).round() as u32;
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"HGAP");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(s.m as u32).to_le_bytes());
        buf.extend_from_slice(&(s.n as u32).to_le_bytes());
        buf.extend_from_slice(&steps.to_le_bytes());
        buf.extend_from_slice(&dt.to_le_bytes());
        for idx in 0..paths {
            let p = simulate_path_indexed::<f64>(&s, t, dt, seed, idx)?;
            for row in &p.b {
                for v in row {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            for row in &p.a {
                for v in row {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            for v in &p.tau {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(&bin_path).map_err(|e| io_out(e, &bin_path))?;
        file.write_all(&buf).map_err(|e| io_out(e, &bin_path))?;
        outputs.push(bin_path);
    }

    Ok(CommandOutput {
        params: json!({
            "structure": structure.map(|p| p.display().to_string()),
            "euclidean": euclidean,
            "t": t,
            "dt": dt,
            "paths": paths,
        }),
        seed: Some(seed),
        outputs,
        stdout: None,
    })
}

// ---------------------------------------------------------------------------
// estimate-gap / check-lemma
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn cmd_estimate_gap(
    structure: Option<PathBuf>,
    euclidean: Option<usize>,
    method: Option<String>,
    paths: Option<u64>,
    dt: Option<f64>,
    seed: Option<u64>,
    eps_grid: Option<String>,
    t_max: Option<f64>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let structure = merge(structure, cfg.take_parsed("structure"))?;
    let euclidean = merge(euclidean, cfg.take_parsed("euclidean"))?;
    let method_text = merge(method, cfg.take_parsed("method"))?.unwrap_or_else(|| "both".into());
    let paths = require(merge(paths, cfg.take_parsed("paths"))?, "paths")?;
    let dt = require(merge(dt, cfg.take_parsed("dt"))?, "dt")?;
    let seed = require(merge(seed, cfg.take_parsed("seed"))?, "seed")?;
    let eps_text = merge(eps_grid, cfg.take_parsed("eps-grid"))?
        .unwrap_or_else(|| "0.55,0.6,0.65,0.7,0.8,0.9,1.0,1.1".into());
    let t_max = merge(t_max, cfg.take_parsed("t-max"))?.unwrap_or(6.0);
    let out = require(merge(out, cfg.take_parsed("out"))?, "out")?;
    let csv = merge(csv, cfg.take_parsed("csv"))?;
    cfg.finish().map_err(CliError::Validation)?;

    let method = match method_text.as_str() {
        "exit" => GapMethod::Exit,
        "smalldev" => GapMethod::Smalldev,
        "both" => GapMethod::Both,
        other => {
            return Err(CliError::Validation(format!(
                "unknown method {other:?}; expected exit, smalldev, or both"
            )))
        }
    };
    let eps: Vec<f64> = eps_text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("bad eps-grid entry {t:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(CliError::Validation("dt must be positive".into()));
    }
    let s = load_structure(structure.clone(), euclidean)?;
    let report: GapReport = run_gap_pipeline(&s, method, paths, dt, seed, t_max, &eps)?;
    write_text(&out, &to_canonical_json(&report))?;
    let mut outputs = vec![out];
    if let Some(csv_path) = csv {
        let rows = curve_csv_rows(report.survival_curve.as_ref(), report.smalldev_curve.as_ref());
        let mut text = String::from("kind,abscissa,estimate,ci_low,ci_high\n");
        for (kind, x, est, lo, hi) in rows {
            text.push_str(&format!(
                "{kind},{},{},{},{}\n",
                fmt17(x),
                fmt17(est),
                fmt17(lo),
                fmt17(hi)
            ));
        }
        write_text(&csv_path, &text)?;
        outputs.push(csv_path);
    }
    Ok(CommandOutput {
        params: json!({
            "structure": structure.map(|p| p.display().to_string()),
            "euclidean": euclidean,
            "method": method_text,
            "paths": paths,
            "dt": dt,
            "eps_grid": eps,
            "t_max": t_max,
        }),
        seed: Some(seed),
        outputs,
        stdout: None,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_check_lemma(
    structure: Option<PathBuf>,
    samples: Option<u64>,
    dt: Option<f64>,
    seed: Option<u64>,
    alpha: Option<f64>,
    out: Option<PathBuf>,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let structure = require(merge(structure, cfg.take_parsed("structure"))?, "structure")?;
    let samples = require(merge(samples, cfg.take_parsed("samples"))?, "samples")?;
    let dt = require(merge(dt, cfg.take_parsed("dt"))?, "dt")?;
    let seed = require(merge(seed, cfg.take_parsed("seed"))?, "seed")?;
    let alpha = merge(alpha, cfg.take_parsed("alpha"))?.unwrap_or(0.01);
    let out = merge(out, cfg.take_parsed("out"))?;
    cfg.finish().map_err(CliError::Validation)?;
    let s = HTypeStructure::load(&structure)?;
    if s.n == 0 {
        return Err(CliError::Validation(
            "the diagnostics need a structure with a nontrivial center (n >= 1)".into(),
        ));
    }
    if alpha.is_nan() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(CliError::Validation("alpha must be in (0, 1)".into()));
    }
    let report = run_lemma_pipeline(&s, samples, dt, seed, alpha).map_err(|e| match e {
        SdeError::InsufficientSamples { .. } => CliError::Validation(e.to_string()),
        other => CliError::from(other),
    })?;
    let text = to_canonical_json(&report);
    let mut outputs = Vec::new();
    let stdout = match out {
        Some(path) => {
            write_text(&path, &text)?;
            outputs.push(path);
            None
        }
        None => Some(text),
    };
    Ok(CommandOutput {
        params: json!({
            "structure": structure.display().to_string(),
            "samples": samples,
            "dt": dt,
            "alpha": alpha,
        }),
        seed: Some(seed),
        outputs,
        stdout,
    })
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn cmd_report(
    runs: Option<String>,
    glob: Option<String>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    registry: &Registry,
    mut cfg: SectionView,
) -> Result<CommandOutput, CliError> {
    let runs = merge(runs, cfg.take_parsed("runs"))?;
    let glob = merge(glob, cfg.take_parsed("glob"))?;
    let out = merge(out, cfg.take_parsed("out"))?;
    let csv = merge(csv, cfg.take_parsed("csv"))?;
    cfg.finish().map_err(CliError::Validation)?;
    if runs.is_none() && glob.is_none() {
        return Err(CliError::Validation(
            "one of --runs or --glob is required".into(),
        ));
    }
    let records = registry
        .load()
        .map_err(|e| CliError::Validation(format!("cannot read registry: {e}")))?;

    let mut requested: Vec<String> = Vec::new();
    if let Some(list) = &runs {
        requested.extend(list.split(',').map(|t| t.trim().to_string()));
    }
    let mut selected: Vec<&RunRecord> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in &records {
        let id_match = requested.iter().any(|r| rec.run_id.starts_with(r.as_str()))
            || glob
                .as_ref()
                .map(|g| wildcard_match(g, &rec.run_id))
                .unwrap_or(false);
        if !id_match {
            continue;
        }
        if !seen.insert(rec.run_id.clone()) {
            eprintln!("warning: duplicate run id {} deduplicated", rec.run_id);
            continue;
        }
        selected.push(rec);
    }
    for r in &requested {
        if !records.iter().any(|rec| rec.run_id.starts_with(r.as_str())) {
            return Err(CliError::Validation(format!("unknown run id {r}")));
        }
    }
    if selected.is_empty() {
        return Err(CliError::Validation("selection matched no runs".into()));
    }

    // Join bounds and estimates by (m, n).
    #[derive(Default)]
    struct Row {
        bounds: Option<serde_json::Value>,
        estimates: Vec<serde_json::Value>,
        run_ids: Vec<String>,
    }
    let mut rows: std::collections::BTreeMap<(u64, u64), Row> = std::collections::BTreeMap::new();
    for rec in &selected {
        for output in &rec.outputs {
            let Ok(text) = std::fs::read_to_string(&output.path) else {
                eprintln!("warning: output {} of run {} is missing", output.path, rec.run_id);
                continue;
            };
            let Ok(doc) = serde_json::from_str::<serde_json::Value>(&text) else {
                continue;
            };
            if doc.get("estimates").is_some() {
                // estimate-gap report
                let m = doc["params"]["m"].as_u64().unwrap_or(0);
                let n = doc["params"]["n"].as_u64().unwrap_or(0);
                let row = rows.entry((m, n)).or_default();
                if row.bounds.is_none() {
                    row.bounds = doc.get("bounds").filter(|b| !b.is_null()).cloned();
                }
                if let Some(list) = doc["estimates"].as_array() {
                    row.estimates.extend(list.iter().cloned());
                }
                row.run_ids.push(rec.run_id.clone());
            } else if doc.get("x_star").is_some() && doc.get("upper").is_some() {
                // bounds document
                let m = doc["m"].as_u64().unwrap_or(0);
                let n = doc["n"].as_u64().unwrap_or(0);
                let row = rows.entry((m, n)).or_default();
                row.bounds = Some(doc);
                row.run_ids.push(rec.run_id.clone());
            }
        }
    }
    let joined: Vec<serde_json::Value> = rows
        .iter()
        .map(|((m, n), row)| {
            json!({
                "m": m,
                "n": n,
                "bounds": row.bounds,
                "estimates": row.estimates,
                "run_ids": row.run_ids,
            })
        })
        .collect();
    let doc = json!({
        "format_version": 1,
        "selected_runs": selected.iter().map(|r| r.run_id.clone()).collect::<Vec<_>>(),
        "rows": joined,
    });
    let text = to_canonical_json(&doc);

    let mut outputs = Vec::new();
    let stdout = match &out {
        Some(path) => {
            write_text(path, &text)?;
            outputs.push(path.clone());
            None
        }
        None => Some(text),
    };
    if let Some(csv_path) = csv {
        let mut text =
            String::from("m,n,lower,upper,method,lambda_hat,std_error,verdict_pass\n");
        for ((m, n), row) in &rows {
            let (lower, upper) = row
                .bounds
                .as_ref()
                .map(|b| {
                    (
                        b["lower"].as_f64().unwrap_or(f64::NAN),
                        b["upper"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .unwrap_or((f64::NAN, f64::NAN));
            if row.estimates.is_empty() {
                text.push_str(&format!("{m},{n},{},{},,,,\n", fmt17(lower), fmt17(upper)));
            }
            for est in &row.estimates {
                let method = est["estimate"]["method"].as_str().unwrap_or("");
                let lh = est["estimate"]["lambda_hat"].as_f64().unwrap_or(f64::NAN);
                let se = est["estimate"]["std_error"].as_f64().unwrap_or(f64::NAN);
                let pass = est["verdict"]["pass"].as_bool();
                text.push_str(&format!(
                    "{m},{n},{},{},{method},{},{},{}\n",
                    fmt17(lower),
                    fmt17(upper),
                    fmt17(lh),
                    fmt17(se),
                    pass.map(|p| p.to_string()).unwrap_or_default()
                ));
            }
        }
        write_text(&csv_path, &text)?;
        outputs.push(csv_path);
    }
    Ok(CommandOutput {
        params: json!({ "runs": runs, "glob": glob }),
        seed: None,
        outputs,
        stdout,
    })
}

/// Builds the outputs manifest by hashing every emitted file.
pub fn manifest(outputs: &[PathBuf]) -> Vec<OutputEntry> {
    outputs
        .iter()
        .map(|p| OutputEntry {
            path: p.display().to_string(),
            sha256: hash_file(p).unwrap_or_else(|_| "unreadable".into()),
        })
        .collect()
}
