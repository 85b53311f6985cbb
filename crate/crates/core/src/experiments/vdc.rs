use serde_json::json;

use super::{require_tag, ExperimentError, ExperimentReport, Relation, Rhs, Setting};
use crate::correlate::{averaged_norm, cesaro_cross, Orbit};
use crate::spectral::{classify, Tag};

/// Lags reported individually per cutoff.
const REPORTED_LAGS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VdcTolerances {
    /// Correlations below this count as vanished.
    pub hypothesis: f64,
    /// Bound asserted for the averaged norm.
    pub conclusion: f64,
}

impl Default for VdcTolerances {
    fn default() -> Self {
        VdcTolerances {
            hypothesis: 0.02,
            conclusion: 0.05,
        }
    }
}

/// Correlation decay per lag and the three difference-theorem hypotheses,
/// against the averaged norm `‖(1/N) Σ f_n‖`.
pub fn run_vdc_suite(orbit: &Orbit, setting: &Setting, tol: VdcTolerances) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("vdc_suite", "averaged_norm");
    let hyp_tol = report.tolerance("hypothesis", tol.hypothesis);
    let concl_tol = report.tolerance("conclusion", tol.conclusion);
    report.tolerance("max_instability", setting.thresholds.max_instability);
    let profile = setting.profile(orbit)?;
    let h_max = profile.h_max;
    report.parameters = json!({ "h_max": h_max, "schedule": setting.schedule.cutoffs() });
    let cutoffs = setting.schedule.cutoffs();
    let top = setting.schedule.top();
    for (q, &n) in cutoffs.iter().enumerate() {
        let gammas = &profile.gammas[q];
        for (h, g) in gammas.iter().enumerate().take(REPORTED_LAGS + 1).skip(1) {
            report.row("gamma_abs", n, Some(h as i64), g.norm(), 0.0);
        }
        let worst = gammas.iter().skip(1).map(|g| g.norm()).fold(0.0, f64::max);
        report.row("gamma_max", n, None, worst, 0.0);
    }
    // limsup over N is read off the top cutoffs
    let tail = &profile.gammas[profile.gammas.len().saturating_sub(3)..];
    let upper: Vec<f64> = (0..=h_max)
        .map(|h| tail.iter().map(|g| g[h].norm()).fold(0.0, f64::max))
        .collect();
    let (limsup, cesaro) = if h_max == 0 {
        (0.0, 0.0)
    } else {
        let lo = h_max.div_ceil(2).max(1);
        (
            upper[lo..].iter().copied().fold(0.0, f64::max),
            upper[1..].iter().sum::<f64>() / h_max as f64,
        )
    };
    let first = report.value(&super::RowRef::new("gamma_max", top, None)).unwrap_or(0.0);
    report.row("hypothesis_every_lag", top, None, first, 0.0);
    report.row("hypothesis_lag_limsup", top, None, limsup, 0.0);
    report.row("hypothesis_lag_average", top, None, cesaro, 0.0);
    let best = report.row("hypothesis_best", top, None, first.min(limsup).min(cesaro), 0.0);
    report.row("stability", top, None, profile.stability, 0.0);
    if profile.stability > setting.thresholds.max_instability {
        report.abstain(format!(
            "correlation profile unstable: {:.3e} > {:.3e}",
            profile.stability, setting.thresholds.max_instability
        ));
    }
    report.precondition("some difference hypothesis holds", best, Relation::Lt, Rhs::Value(hyp_tol));

    let norms = averaged_norm(orbit, None, &setting.schedule)?;
    for (&n, v) in cutoffs.iter().zip(&norms) {
        report.row("averaged_norm", n, None, *v, 0.0);
    }
    report.assert(
        "averaged norm vanishes",
        super::RowRef::new("averaged_norm", top, None),
        Relation::Lt,
        Rhs::Value(concl_tol),
    );
    let estimate = classify(&profile, &setting.thresholds, &setting.candidates());
    report.spectral.push(super::NamedEstimate {
        name: "orbit".into(),
        estimate,
    });
    Ok(report.finish())
}

/// `‖(1/N) Σ c_n f_n‖` for singular weights `c` and a Lebesgue orbit `f`.
pub fn run_weighted_vdc(
    weights: &Orbit,
    orbit: &Orbit,
    setting: &Setting,
    tolerance: f64,
) -> Result<ExperimentReport, ExperimentError> {
    if weights.dim() != 0 {
        return Err(ExperimentError::Invalid("weights must be a scalar sequence".into()));
    }
    let mut report = ExperimentReport::new("weighted_vdc", "weighted_norm");
    let tol = report.tolerance("conclusion", tolerance);
    require_tag(&mut report, "weights", weights, setting, Tag::Singular)?;
    require_tag(&mut report, "orbit", orbit, setting, Tag::Lebesgue)?;
    let norms = averaged_norm(orbit, Some(weights), &setting.schedule)?;
    let cutoffs = setting.schedule.cutoffs();
    let refs: Vec<_> = cutoffs
        .iter()
        .zip(&norms)
        .map(|(&n, v)| report.row("weighted_norm", n, None, *v, 0.0))
        .collect();
    let q = refs.len();
    report.assert("weighted norm vanishes", refs[q - 1].clone(), Relation::Lt, Rhs::Value(tol));
    for k in (q.saturating_sub(2)..q).rev() {
        if k == 0 {
            break;
        }
        report.assert(
            "weighted norm decreases",
            refs[k].clone(),
            Relation::Lt,
            Rhs::Row {
                row: refs[k - 1].clone(),
                scale: 1.0,
                offset: 0.0,
            },
        );
    }
    Ok(report.finish())
}

/// `|(1/N) Σ ⟨f_n, g_n⟩|` for a Lebesgue `f` and a singular `g`.
pub fn run_orthogonality(
    f: &Orbit,
    g: &Orbit,
    setting: &Setting,
    tolerance: f64,
) -> Result<ExperimentReport, ExperimentError> {
    if f.dim() != g.dim() {
        return Err(ExperimentError::Invalid("orbits live on different tori".into()));
    }
    let mut report = ExperimentReport::new("orthogonality", "cross_correlation");
    let tol = report.tolerance("conclusion", tolerance);
    require_tag(&mut report, "f", f, setting, Tag::Lebesgue)?;
    require_tag(&mut report, "g", g, setting, Tag::Singular)?;
    let cross = cesaro_cross(f, g, Some(0), &setting.schedule)?;
    for (q, &n) in setting.schedule.cutoffs().iter().enumerate() {
        report.row("cross_correlation", n, None, cross.gammas[q][0].norm(), 0.0);
    }
    report.assert(
        "correlation with singular orbit vanishes",
        super::RowRef::new("cross_correlation", setting.schedule.top(), None),
        Relation::Lt,
        Rhs::Value(tol),
    );
    Ok(report.finish())
}
