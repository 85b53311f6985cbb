use rayon::prelude::*;
use serde_json::json;

use super::{require_tag, ExperimentError, ExperimentReport, Relation, Rhs, RowRef, Setting};
use crate::correlate::{
    box_measure, interval_measure_exact, orbit_average, CorrelateError, Orbit, Preimage, Region,
};
use crate::numeric::Neumaier;
use crate::seq::{star_discrepancy, SeqSpec};
use crate::spectral::Tag;
use crate::torus::{AffineSystem, CharVector};

#[derive(Clone, Debug)]
pub struct NfInput {
    pub t: AffineSystem,
    pub s: AffineSystem,
    pub k: SeqSpec,
    pub f: CharVector,
    pub g: CharVector,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NfOptions {
    pub tolerance: f64,
    /// Largest star discrepancy accepted for `(k_{n+h} − k_n) x`.
    pub discrepancy: f64,
    /// Largest residue-frequency deviation accepted for rational `x`.
    pub frequency: f64,
    /// Lags `h = 1..=lags` checked.
    pub lags: u64,
    /// Number of terms used for the equidistribution checks.
    pub check_n: u64,
    /// Rational `x = p/q` are checked for `q ≤ max_den`.
    pub max_den: u64,
}

impl Default for NfOptions {
    fn default() -> Self {
        NfOptions {
            tolerance: 0.05,
            discrepancy: 0.05,
            frequency: 0.05,
            lags: 8,
            check_n: 10_080,
            max_den: 6,
        }
    }
}

/// `max_r |#{n ≤ N : k_n ≡ r mod q}/N − 1/q|`.
pub fn rational_frequency_deviation(seq: &SeqSpec, q: u64, n_max: u64) -> Result<f64, ExperimentError> {
    let mut counts = vec![0u64; q as usize];
    for n in 1..=n_max {
        let v = seq.eval(n as i128)?;
        counts[v.rem_euclid(q as i128) as usize] += 1;
    }
    let expect = 1.0 / q as f64;
    Ok(counts
        .iter()
        .map(|&c| (c as f64 / n_max as f64 - expect).abs())
        .fold(0.0, f64::max))
}

/// `‖(1/N) Σ T^n f · S^{k_n} g − P_T f · P_S g‖` along the schedule, where
/// `P` is the projection onto invariant functions.
pub fn run_nf(input: &NfInput, setting: &Setting, opts: NfOptions) -> Result<ExperimentReport, ExperimentError> {
    let d = input.t.dim();
    if input.s.dim() != d || input.f.dim() != d || input.g.dim() != d {
        return Err(ExperimentError::Invalid("systems and observables must share one torus".into()));
    }
    let mut report = ExperimentReport::new("nf", "projection_distance");
    let tol = report.tolerance("conclusion", opts.tolerance);
    let disc_tol = report.tolerance("discrepancy", opts.discrepancy);
    let freq_tol = report.tolerance("frequency", opts.frequency);
    report.parameters = json!({
        "sequence": format!("{:?}", input.k),
        "lags": opts.lags,
        "check_n": opts.check_n,
        "max_den": opts.max_den,
    });
    require_tag(&mut report, "T-orbit of f", &Orbit::system(input.t.clone(), input.f.clone()), setting, Tag::Singular)?;

    // uniform distribution of (k_{n+h} − k_n) x for irrational x
    let mut worst = 0.0f64;
    for x in &setting.irrationals {
        for h in 1..=opts.lags {
            let diff = input.k.diff(h)?;
            let dstar = star_discrepancy(&diff, x, opts.check_n)?;
            report.row(&format!("ud_discrepancy[{}]", x.label()), opts.check_n, Some(h as i64), dstar, 0.0);
            worst = worst.max(dstar);
        }
    }
    if setting.irrationals.is_empty() {
        report.abstain("no irrationals declared for the equidistribution check");
    }
    let w = report.row("ud_discrepancy_max", opts.check_n, None, worst, 0.0);
    report.precondition("differences equidistribute at irrationals", w, Relation::Lt, Rhs::Value(disc_tol));

    // rational x = p/q: the orbit closure is the q-th roots, so residues mod q
    let mut rational = 0.0f64;
    for h in 1..=opts.lags {
        let diff = input.k.diff(h)?;
        for q in 2..=opts.max_den {
            rational = rational.max(rational_frequency_deviation(&diff, q, opts.check_n)?);
        }
    }
    report.row("rational_frequency_max", opts.check_n, None, rational, 0.0);
    if rational >= freq_tol {
        // irrational-only variant: g must see no rational spectrum beyond constants
        let part = input.s.rational_spectrum_part(&input.g)?;
        let gap = part.sub(&input.s.invariant_projection(&part)?).norm();
        report.require(
            "rational-spectrum part of g is S-invariant",
            gap < 1e-12,
            format!("differences are not equidistributed at rationals (deviation {rational:.3e}); non-invariant rational-spectrum mass {gap:.3e}"),
        );
    }

    let orbit = Orbit::Product(vec![
        Orbit::system(input.t.clone(), input.f.clone()),
        Orbit::iterate(input.s.clone(), input.k.clone(), input.g.clone()),
    ]);
    let target = input.t.invariant_projection(&input.f)?.mul(&input.s.invariant_projection(&input.g)?);
    let averages = orbit_average(&orbit, None, &setting.schedule)?;
    let cutoffs = setting.schedule.cutoffs();
    let refs: Vec<RowRef> = cutoffs
        .iter()
        .zip(&averages)
        .map(|(&n, a)| report.row("projection_distance", n, None, a.sub(&target).norm(), 0.0))
        .collect();
    let last = refs.last().expect("schedule").clone();
    report.assert("distance to product of projections vanishes", last.clone(), Relation::Lt, Rhs::Value(tol));
    report.assert(
        "distance decreases along the schedule",
        last,
        Relation::Le,
        Rhs::Row {
            row: refs[0].clone(),
            scale: 1.0,
            offset: 0.0,
        },
    );
    Ok(report.finish())
}

#[derive(Clone, Debug)]
pub struct RecurrenceInput {
    pub t: AffineSystem,
    pub s: AffineSystem,
    pub k: SeqSpec,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecurrenceOptions {
    /// Slack allowed below `μ(A)³`.
    pub tolerance: f64,
    /// Grid resolution per axis when no exact path applies.
    pub resolution: u64,
    /// Largest acceptable grid error bound per term.
    pub grid_tolerance: f64,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions {
            tolerance: 0.01,
            resolution: 1024,
            grid_tolerance: 0.01,
        }
    }
}

/// `(1/N) Σ μ(A ∩ T^{-n} A ∩ S^{-k_n} A)` against `μ(A)³`.
pub fn run_recurrence(
    input: &RecurrenceInput,
    setting: &Setting,
    opts: RecurrenceOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let d = input.t.dim();
    if input.s.dim() != d || input.region.dim() != d {
        return Err(ExperimentError::Invalid("systems and region must share one torus".into()));
    }
    let mut report = ExperimentReport::new("recurrence", "recurrence_average");
    let tol = report.tolerance("conclusion", opts.tolerance);
    let grid_tol = report.tolerance("grid", opts.grid_tolerance);
    let exact = input.t.is_rotation() && input.s.is_rotation() && input.region.cells.len() <= 1;
    report.parameters = json!({
        "sequence": format!("{:?}", input.k),
        "path": if exact { "exact" } else { "grid" },
        "resolution": opts.resolution,
    });
    let mu = input.region.volume();
    let cube = report.row("mu_cubed", setting.schedule.top(), None, mu.powi(3), 0.0);
    let n_top = setting.schedule.top();
    let terms: Vec<Result<(f64, f64), CorrelateError>> = (1..=n_top)
        .into_par_iter()
        .map(|n| {
            let k = input.k.eval(n as i128).map_err(|e| CorrelateError::Generator { n, reason: e.to_string() })?;
            let k = i64::try_from(k).map_err(|_| CorrelateError::Generator {
                n,
                reason: "iterate exceeds 64 bits".into(),
            })?;
            let sets = [
                Preimage { system: input.t.clone(), iterate: 0, region: input.region.clone() },
                Preimage { system: input.t.clone(), iterate: n as i64, region: input.region.clone() },
                Preimage { system: input.s.clone(), iterate: k, region: input.region.clone() },
            ];
            if exact {
                Ok((interval_measure_exact(&sets)?, 0.0))
            } else {
                let m = box_measure(&sets, opts.resolution, Some(grid_tol))?;
                Ok((m.value, m.error_bound))
            }
        })
        .collect();
    // the first failure in n order, so that reruns report the same one
    let terms: Result<Vec<(f64, f64)>, CorrelateError> = terms.into_iter().collect();
    let terms = match terms {
        Ok(t) => t,
        Err(CorrelateError::ResolutionTooSmall { resolution, bound, tolerance, required }) => {
            report.row("required_resolution", n_top, None, required as f64, 0.0);
            report.abstain(format!(
                "grid resolution {resolution} gives error bound {bound:.3e} above {tolerance:.3e}; resolution {required} required"
            ));
            return Ok(report.finish());
        }
        Err(e) => return Err(e.into()),
    };
    let mut value = Neumaier::new();
    let mut error = Neumaier::new();
    let mut next = 0;
    let cutoffs = setting.schedule.cutoffs();
    let mut last = None;
    for (i, (v, e)) in terms.iter().enumerate() {
        value.add(*v);
        error.add(*e);
        let n = i as u64 + 1;
        if n == cutoffs[next] {
            last = Some(report.row("recurrence_average", n, None, value.value() / n as f64, error.value() / n as f64));
            next += 1;
        }
    }
    report.assert(
        "average at least mu(A)^3",
        last.expect("schedule"),
        Relation::Ge,
        Rhs::Row {
            row: cube,
            scale: 1.0,
            offset: -tol,
        },
    );
    Ok(report.finish())
}
