use rayon::prelude::*;
use serde_json::json;

use super::{ExperimentError, ExperimentReport, Relation, Rhs};
use crate::correlate::{box_measure, interval_measure_exact, Arc, BoxMeasure, CorrelateError, Preimage, Region};
use crate::seq::{rk_enumerate, RkSpec};
use crate::torus::{AffineSystem, Irrational};

#[derive(Clone, Debug)]
pub struct RkInput {
    pub k: u32,
    pub alpha: Irrational,
    pub t: AffineSystem,
    pub s_list: Vec<AffineSystem>,
    pub region: Region,
    pub n_max: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkOptions {
    /// Grid points per axis.
    pub resolution: u64,
    /// The positivity witness must exceed this multiple of its grid error.
    pub margin: f64,
    /// Half-width `p/q` of the strip `{|y| < p/q}` in the non-recurrence witness.
    pub strip: (i64, u64),
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions {
            resolution: 2000,
            margin: 10.0,
            strip: (1, 16),
        }
    }
}

fn preimages(region: &Region, systems: &[(&AffineSystem, i64)]) -> Vec<Preimage> {
    systems
        .iter()
        .map(|(s, n)| Preimage {
            system: (*s).clone(),
            iterate: *n,
            region: region.clone(),
        })
        .collect()
}

/// Positivity of `μ(A ∩ T^{-n} A ∩ ∩_i S_i^{-n} A)` along `R_k`, and the
/// vanishing of the triple intersection for the skew product along `R_2`.
pub fn run_rk(input: &RkInput, opts: RkOptions) -> Result<ExperimentReport, ExperimentError> {
    let d = input.t.dim();
    if input.region.dim() != d || input.s_list.iter().any(|s| s.dim() != d) {
        return Err(ExperimentError::Invalid("systems and region must share one torus".into()));
    }
    let mut report = ExperimentReport::new("rk", "positivity_measure");
    report.tolerance("margin", opts.margin);
    let n_max = input.n_max;
    let rk = rk_enumerate(&RkSpec::new(input.k, input.alpha.clone()), n_max)?;
    report.parameters = json!({
        "k": input.k,
        "alpha": input.alpha.label(),
        "n_max": n_max,
        "resolution": opts.resolution,
        "members": rk.members.len(),
    });
    report.row("rk_members", n_max, None, rk.members.len() as f64, 0.0);
    if !rk.boundary.is_empty() {
        report.note(format!(
            "{} values of n lie within truncation error of a window end: {:?}",
            rk.boundary.len(),
            rk.boundary
        ));
    }
    if rk.members.is_empty() {
        report.abstain("R_k has no members in range");
        return Ok(report.finish());
    }

    // positivity: exact arcs for rotations, grid otherwise
    let exact = input.t.is_rotation() && input.s_list.iter().all(AffineSystem::is_rotation) && input.region.cells.len() <= 1;
    let sets_at = |n: u64| {
        let mut systems: Vec<(&AffineSystem, i64)> = vec![(&input.t, 0), (&input.t, n as i64)];
        systems.extend(input.s_list.iter().map(|s| (s, n as i64)));
        preimages(&input.region, &systems)
    };
    let values = rk
        .members
        .par_iter()
        .map(|&n| {
            let sets = sets_at(n);
            if exact {
                interval_measure_exact(&sets).map(|v| (v, 0.0))
            } else {
                box_measure(&sets, opts.resolution, None).map(|m| (m.value, m.error_bound))
            }
        })
        .collect::<Result<Vec<_>, CorrelateError>>()?;
    let mut best = 0;
    for (i, (&n, (v, e))) in rk.members.iter().zip(&values).enumerate() {
        report.row("positivity_measure", n_max, Some(n as i64), *v, *e);
        if *v > values[best].0 {
            best = i;
        }
    }
    let witness = rk.members[best];
    let m = box_measure(&sets_at(witness), opts.resolution, None)?;
    let grid = report.row("positivity_grid", n_max, Some(witness as i64), m.value, m.error_bound);
    report.assert(
        "some n in R_k has positive intersection beyond grid error",
        grid,
        Relation::Gt,
        Rhs::OwnError { scale: opts.margin },
    );

    if input.k == 2 {
        nonrecurrence(&mut report, &input.alpha, &rk.members, n_max, opts)?;
    } else {
        report.note("the non-recurrence witness is the degree-2 skew product and is run for k = 2 only");
    }
    Ok(report.finish())
}

/// `T(x, y) = (x + α, y + x)`, `A = T × (−w, w)`: since
/// `y_0 − 2y_1 + y_2 = n²α` along an orbit, `A ∩ T^{-n} A ∩ T^{-2n} A` is
/// empty whenever `n²α ∈ [1/4, 3/4]` and `w ≤ 1/16`.
fn nonrecurrence(
    report: &mut ExperimentReport,
    alpha: &Irrational,
    members: &[u64],
    n_max: u64,
    opts: RkOptions,
) -> Result<(), ExperimentError> {
    let skew = AffineSystem::skew_product(alpha);
    let (p, q) = opts.strip;
    let strip = Region::single(vec![Arc::full(), Arc::from_ratios((-p, q), (p, q))?]);
    let measures = members
        .par_iter()
        .map(|&n| box_measure(&preimages(&strip, &[(&skew, 0), (&skew, n as i64), (&skew, 2 * n as i64)]), opts.resolution, None))
        .collect::<Result<Vec<BoxMeasure>, CorrelateError>>()?;
    let mut total = 0;
    for (&n, m) in members.iter().zip(&measures) {
        report.row("nonrecurrence_measure", n_max, Some(n as i64), m.value, m.error_bound);
        let c = report.row("nonrecurrence_count", n_max, Some(n as i64), m.grid_count as f64, 0.0);
        report.assert("no grid point survives", c, Relation::Le, Rhs::Value(0.0));
        total += m.grid_count;
    }
    report.row("nonrecurrence_survivors", n_max, None, total as f64, 0.0);
    Ok(())
}
