use serde_json::json;

use super::{ExperimentError, ExperimentReport, NamedEstimate, Relation, Rhs, Setting};
use crate::correlate::Orbit;
use crate::spectral::Tag;

/// Optional targets for a classification run. Without any, the run only
/// records the estimate and abstains.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassifyExpect {
    pub tag: Option<Tag>,
    /// Candidate label, expected mass, tolerance.
    pub atom: Option<(String, f64, f64)>,
}

/// Rows shown for the low lags of the profile.
const SHOWN_LAGS: usize = 64;

pub fn run_classify(orbit: &Orbit, setting: &Setting, expect: &ClassifyExpect) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("classify", "wiener");
    let profile = setting.profile(orbit)?;
    let estimate = crate::spectral::classify(&profile, &setting.thresholds, &setting.candidates());
    let n = setting.schedule.top();
    report.parameters = json!({
        "h_max": profile.h_max,
        "expected_tag": expect.tag.map(|t| t.to_string()),
        "tag": estimate.tag.to_string(),
    });
    for h in 1..=SHOWN_LAGS.min(profile.h_max) {
        report.row("gamma_abs", n, Some(h as i64), profile.gamma(h as i64).norm(), 0.0);
    }
    report.row("gamma0", n, None, estimate.gamma0, 0.0);
    report.row("wiener", n, None, estimate.wiener, 0.0);
    report.row("atomic_mass", n, None, estimate.atomic_mass, 0.0);
    report.row("top_octave_increment", n, None, estimate.l2.top_octave_increment, 0.0);
    if let Some(v) = estimate.density_min {
        report.row("density_min", n, None, v, 0.0);
    }
    if let Some(v) = estimate.density_integral {
        report.row("density_integral", n, None, v, 0.0);
    }
    for a in &estimate.atoms {
        report.row(&format!("atom_mass[{}]", a.label), n, None, a.mass, 0.0);
    }
    if let Some(note) = &estimate.note {
        report.note(note.clone());
    }
    if let Some(want) = expect.tag {
        let hit = report.row("tag_match", n, None, f64::from(u8::from(estimate.tag == want)), 0.0);
        report.assert(&format!("classified {want}"), hit, Relation::Ge, Rhs::Value(1.0));
    }
    if let Some((label, mass, tol)) = &expect.atom {
        report.tolerance("atom_mass", *tol);
        let found = estimate.atoms.iter().find(|a| &a.label == label).map_or(0.0, |a| a.mass);
        let dev = report.row(&format!("atom_mass_deviation[{label}]"), n, None, (found - mass).abs(), 0.0);
        report.assert(&format!("atom at {label} has mass {mass}"), dev, Relation::Le, Rhs::Value(*tol));
    }
    report.spectral.push(NamedEstimate {
        name: "orbit".into(),
        estimate,
    });
    Ok(report.finish())
}
