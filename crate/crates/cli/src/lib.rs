//! Configuration parsing, experiment dispatch and deterministic report files.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use vdclab_core::experiments::{
    run_classify, run_counterexample, run_nf, run_orthogonality, run_recurrence, run_rk, run_single_t, run_t1t2,
    run_vdc_suite, run_weighted_vdc, ExperimentError, ExperimentReport, Setting,
};

pub use config::{parse_config, ConfigDocument, Job, Resolved};

/// Exit status for errors that prevent a verdict.
pub const EXIT_ERROR: i32 = 1;

/// Runs the validated experiment and stamps the report with the config echo.
pub fn execute(doc: &ConfigDocument, resolved: &Resolved) -> Result<ExperimentReport, ExperimentError> {
    let setting = Setting::new(resolved.schedule.clone(), resolved.irrationals.clone());
    let mut report = match &resolved.experiment {
        Job::Counterexample { alpha, opts } => run_counterexample(alpha, &setting.schedule, *opts),
        Job::Classify { orbit, expect } => run_classify(orbit, &setting, expect),
        Job::VdcSuite { orbit, tol } => run_vdc_suite(orbit, &setting, *tol),
        Job::WeightedVdc { weights, orbit, tol } => run_weighted_vdc(weights, orbit, &setting, *tol),
        Job::Orthogonality { f, g, tol } => run_orthogonality(f, g, &setting, *tol),
        Job::Nf { input, opts } => run_nf(input, &setting, *opts),
        Job::Recurrence { input, opts } => run_recurrence(input, &setting, *opts),
        Job::Rk { input, opts } => run_rk(input, *opts),
        Job::SingleT { input, tol, lags } => run_single_t(input, &setting, *tol, *lags),
        Job::T1t2 { input, opts } => run_t1t2(input, &setting, *opts),
    }?;
    report.name = doc.name.clone();
    report.config = serde_json::to_value(doc).expect("config serializes");
    Ok(report)
}

/// Decimal with 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per report row: `N,h_or_n,metric,value,error_bound`.
pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("N,h_or_n,metric,value,error_bound\n");
    for r in &report.rows {
        let index = r.index.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.n, index, csv_field(&r.metric), num(r.value), num(r.error_bound));
    }
    out
}

/// `N` against the headline metric. Drivers whose headline is indexed by
/// `n` rather than by cutoff list the indexed rows instead.
pub fn decay_csv(report: &ExperimentReport) -> String {
    let mut out = format!("N,{}\n", csv_field(&report.headline));
    let mut series = report.series(&report.headline);
    if series.is_empty() {
        series = report
            .rows
            .iter()
            .filter(|r| r.metric == report.headline)
            .filter_map(|r| Some((u64::try_from(r.index?).ok()?, r.value)))
            .collect();
    }
    for (n, v) in series {
        let _ = writeln!(out, "{n},{}", num(v));
    }
    out
}

pub fn report_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// The three output files, by name.
pub fn outputs(report: &ExperimentReport) -> Vec<(&'static str, String)> {
    vec![
        ("report.json", report_json(report)),
        ("metrics.csv", metrics_csv(report)),
        ("decay.csv", decay_csv(report)),
    ]
}

pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let mut written = Vec::new();
    for (name, body) in outputs(report) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| format!("writing {}: {e}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
