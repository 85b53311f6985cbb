use num_complex::Complex64;

use super::spec::{SeqError, SeqSpec};
use crate::numeric::ComplexSum;
use crate::torus::{turns_to_f64, unit, Irrational, Turns};

/// `(1/N) Σ_{n=1}^N e(k_n x)` with every `k_n x` reduced mod 1 exactly.
pub fn weyl_sum(spec: &SeqSpec, x: &Irrational, n_max: u64) -> Result<Complex64, SeqError> {
    assert!(n_max >= 1);
    let mut acc = ComplexSum::new();
    for n in 1..=n_max as i128 {
        acc.add(unit(x.times(spec.eval(n)?)));
    }
    Ok(acc.value() / n_max as f64)
}

/// `{k_n x mod 1}` for `n = 1..=N`, in turns.
pub fn orbit_points(spec: &SeqSpec, x: &Irrational, n_max: u64) -> Result<Vec<Turns>, SeqError> {
    (1..=n_max as i128).map(|n| Ok(x.times(spec.eval(n)?))).collect()
}

pub fn star_discrepancy(spec: &SeqSpec, x: &Irrational, n_max: u64) -> Result<f64, SeqError> {
    Ok(star_discrepancy_of(orbit_points(spec, x, n_max)?))
}

/// `max_i max(i/N − x_(i), x_(i) − (i−1)/N)` over the sorted points.
pub fn star_discrepancy_of(mut points: Vec<Turns>) -> f64 {
    assert!(!points.is_empty());
    points.sort_unstable();
    let n = points.len() as f64;
    points
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let x = turns_to_f64(t);
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::spec::SeqSpec;

    #[test]
    fn zero_frequency() {
        let z = Irrational::new("zero", 0);
        assert_eq!(weyl_sum(&SeqSpec::monomial(2), &z, 17).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn alternating_sum_vanishes() {
        let half = Irrational::new("half", 1u128 << 127);
        assert_eq!(weyl_sum(&SeqSpec::monomial(1), &half, 1000).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn linear_sum_obeys_geometric_bound() {
        let a = Irrational::sqrt2_minus_1("alpha");
        let d = crate::torus::dist_to_integer(a.value());
        for n in [10u64, 1000, 12345] {
            let s = weyl_sum(&SeqSpec::monomial(1), &a, n).unwrap();
            assert!(s.norm() <= 1.0 / (2.0 * n as f64 * d) + 1e-12);
        }
    }

    #[test]
    fn discrepancy_formula() {
        assert_eq!(star_discrepancy_of(vec![1u128 << 127]), 0.5);
        assert_eq!(star_discrepancy_of(vec![0; 10]), 1.0);
        let g = Irrational::golden_conjugate("g");
        assert!(star_discrepancy(&SeqSpec::monomial(1), &g, 10_000).unwrap() < 0.01);
    }
}
