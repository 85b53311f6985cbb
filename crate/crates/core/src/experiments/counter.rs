use serde_json::json;

use super::{one, ExperimentError, ExperimentReport, Relation, Rhs};
use crate::correlate::{orbit_average, Orbit, Schedule};
use crate::seq::{Rational, SeqSpec};
use crate::torus::{AffineSystem, CharVector, Irrational, Phase};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleOptions {
    pub tolerance: f64,
    /// Also report the average with `g` replaced by `e(2x)` (no assertion).
    pub explore: bool,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions {
            tolerance: 1e-9,
            explore: false,
        }
    }
}

/// `T(x, y) = (x, y + x)` and `S(x, y) = (x + 2α, y + x)`.
fn systems(alpha: &Irrational) -> Result<(AffineSystem, AffineSystem), ExperimentError> {
    let shear = vec![vec![1, 0], vec![1, 1]];
    let t = AffineSystem::new(shear.clone(), vec![Phase::zero(), Phase::zero()])?;
    let s = AffineSystem::new(shear, vec![Phase::irrational(alpha.clone(), 2), Phase::zero()])?;
    Ok((t, s))
}

/// `T^n f · S^n h · S^{(n²−n)/2} g` with `f = e(x − y)`, `h = e(y)`, `g = e(−x)`.
fn product_orbit(alpha: &Irrational, g: CharVector) -> Result<Orbit, ExperimentError> {
    let (t, s) = systems(alpha)?;
    let half = Rational::new(1, 2);
    let pairs = SeqSpec::polynomial_rational(&[Rational::from_integer(0), -half, half])?;
    Ok(Orbit::Product(vec![
        Orbit::system(t, CharVector::character(&[1, -1])),
        Orbit::system(s.clone(), CharVector::character(&[0, 1])),
        Orbit::iterate(s, pairs, g),
    ]))
}

/// The product average of a non-commuting pair whose phases cancel, so the
/// average is the constant 1 at every `N`.
pub fn run_counterexample(
    alpha: &Irrational,
    schedule: &Schedule,
    opts: CounterexampleOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("counterexample", "average_norm");
    let tol = report.tolerance("deviation", opts.tolerance);
    report.parameters = json!({ "alpha": alpha.label(), "alpha_hex": alpha.hex(), "explore": opts.explore });
    report.note("alpha enters S only; T is the shear (x, y) -> (x, y + x)");
    let (t, s) = systems(alpha)?;
    report.require(
        "T and S do not commute",
        !t.commutes_with(&s)?,
        "the pair generates a non-abelian group",
    );
    let orbit = product_orbit(alpha, CharVector::character(&[-1, 0]))?;
    let averages = orbit_average(&orbit, None, schedule)?;
    let constant = CharVector::constant(2, one());
    for (&n, a) in schedule.cutoffs().iter().zip(&averages) {
        report.row("average_norm", n, None, a.norm(), 0.0);
        report.row("average_mean_re", n, None, a.mean().re, 0.0);
        let dev = report.row("deviation", n, None, a.sub(&constant).norm(), 0.0);
        report.assert("average equals the constant 1", dev, Relation::Lt, Rhs::Value(tol));
    }
    if opts.explore {
        let orbit = product_orbit(alpha, CharVector::character(&[2, 0]))?;
        let averages = orbit_average(&orbit, None, schedule)?;
        for (&n, a) in schedule.cutoffs().iter().zip(&averages) {
            report.row("exploratory_norm", n, None, a.norm(), 0.0);
        }
    }
    Ok(report.finish())
}
