//! Drivers that assemble systems, observables and sequences, run the
//! correlation machinery and compare against predicted limits and bounds.
//! Every driver returns a self-auditing [`ExperimentReport`].

mod classify;
mod counter;
mod ergodic;
mod poly;
mod report;
mod rk;
mod vdc;
mod zoo;

use num_complex::Complex64;
use thiserror::Error;

use crate::correlate::{cesaro_correlation, CorrelateError, CorrelationProfile, Orbit, Schedule};
use crate::seq::SeqError;
use crate::spectral::{classify, Candidate, Candidates, SpectralError, SpectralEstimate, Tag, Thresholds};
use crate::torus::{Irrational, TorusError};

pub use classify::{run_classify, ClassifyExpect};
pub use counter::{run_counterexample, CounterexampleOptions};
pub use ergodic::{
    rational_frequency_deviation, run_nf, run_recurrence, NfInput, NfOptions, RecurrenceInput, RecurrenceOptions,
};
pub use poly::{
    essentially_distinct, exact_audit, fingerprint_audit, growth_condition, independence_violation, is_totally_ergodic, is_weakly_mixing, run_single_t,
    run_t1t2, FingerprintAudit, SingleTInput, T1T2Input, T1T2Options,
};
pub use report::{Check, ExperimentReport, NamedEstimate, Relation, Requirement, Rhs, Row, RowRef, Verdict};
pub use rk::{run_rk, RkInput, RkOptions};
pub use vdc::{run_orthogonality, run_vdc_suite, run_weighted_vdc, VdcTolerances};
pub use zoo::{zoo, zoo_entry, zoo_irrationals, ZooEntry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// Shared inputs: averaging cutoffs, classification thresholds and the
/// declared irrationals that span the atom lattice.
#[derive(Clone, Debug)]
pub struct Setting {
    pub schedule: Schedule,
    pub thresholds: Thresholds,
    pub irrationals: Vec<Irrational>,
}

impl Setting {
    pub fn new(schedule: Schedule, irrationals: Vec<Irrational>) -> Setting {
        Setting {
            schedule,
            thresholds: Thresholds::default(),
            irrationals,
        }
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        Candidates::new(self.irrationals.clone()).list()
    }

    /// Lag budget: the full `H` when correlations are window independent,
    /// `⌊√N⌋` otherwise.
    pub fn lags_for(&self, orbit: &Orbit) -> usize {
        if orbit.stationary().is_some() {
            self.thresholds.h_max
        } else {
            self.schedule.default_lag().min(self.thresholds.h_max)
        }
    }

    pub fn profile(&self, orbit: &Orbit) -> Result<CorrelationProfile, CorrelateError> {
        cesaro_correlation(orbit, Some(self.lags_for(orbit)), &self.schedule)
    }

    pub fn classify(&self, orbit: &Orbit) -> Result<SpectralEstimate, CorrelateError> {
        let profile = self.profile(orbit)?;
        Ok(classify(&profile, &self.thresholds, &self.candidates()))
    }
}

/// Classifies `orbit`, records the estimate and a requirement that its tag
/// is `want`. Returns whether it is.
fn require_tag(
    report: &mut ExperimentReport,
    label: &str,
    orbit: &Orbit,
    setting: &Setting,
    want: Tag,
) -> Result<bool, ExperimentError> {
    let estimate = setting.classify(orbit)?;
    let holds = estimate.tag == want;
    let mut detail = format!(
        "classified {} (wiener {:.3e}, atomic mass {:.4}, gamma0 {:.4})",
        estimate.tag, estimate.wiener, estimate.atomic_mass, estimate.gamma0
    );
    if let Some(n) = &estimate.note {
        detail.push_str(&format!("; {n}"));
    }
    report.require(&format!("{label} is {want}"), holds, detail);
    report.spectral.push(NamedEstimate {
        name: label.to_string(),
        estimate,
    });
    Ok(holds)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
