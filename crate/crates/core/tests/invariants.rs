use num_complex::Complex64;
use num_rational::Ratio;
use proptest::prelude::*;

use vdclab_core::correlate::{
    averaged_norm, box_measure, interval_measure_exact, orbit_average, Arc, Orbit, Preimage, Region, Schedule,
};
use vdclab_core::experiments::{zoo, zoo_irrationals};
use vdclab_core::seq::{diff_profile, seq_eval, weyl_sum, Rational, SeqSpec};
use vdclab_core::torus::{char_inner, invariant_projection, pushforward, AffineSystem, CharIndex, CharVector, Irrational, Phase};

fn irr() -> (Irrational, Irrational) {
    let z = zoo_irrationals();
    (z[0].clone(), z[1].clone())
}

/// Products of elementary shears give unimodular matrices with small entries.
fn unimodular(d: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec((0..d, 0..d, -1i64..=1, any::<bool>()), 0..4).prop_map(move |ops| {
        let mut m: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
        for (i, j, c, swap) in ops {
            if swap {
                m.swap(i, j);
            } else if i != j {
                for k in 0..d {
                    m[i][k] += c * m[j][k];
                }
            }
        }
        m
    })
}

fn phase() -> impl Strategy<Value = Phase> {
    (-3i128..=3, -3i128..=3, 0i128..12, 1i128..12).prop_map(|(a, b, p, q)| {
        let (x, y) = irr();
        Phase::irrational(x, a)
            .add(&Phase::irrational(y, b))
            .unwrap()
            .add(&Phase::rational(p, q).unwrap())
            .unwrap()
    })
}

fn system(d: usize) -> impl Strategy<Value = AffineSystem> {
    (unimodular(d), prop::collection::vec(phase(), d)).prop_map(|(m, b)| AffineSystem::new(m, b).unwrap())
}

fn vector(d: usize) -> impl Strategy<Value = CharVector> {
    prop::collection::vec((prop::collection::vec(-4i64..=4, d), -2.0f64..2.0, -2.0f64..2.0), 1..5).prop_map(move |terms| {
        CharVector::from_terms(d, terms.into_iter().map(|(m, re, im)| (CharIndex::new(&m), Complex64::new(re, im))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn characters_are_orthonormal(a in prop::collection::vec(-50i64..50, 3), b in prop::collection::vec(-50i64..50, 3)) {
        let (u, v) = (CharVector::character(&a), CharVector::character(&b));
        prop_assert_eq!(char_inner(&u, &u), Complex64::new(1.0, 0.0));
        let expect = if a == b { 1.0 } else { 0.0 };
        prop_assert_eq!(char_inner(&u, &v), Complex64::new(expect, 0.0));
    }

    #[test]
    fn pushforward_is_unitary(t in system(3), f in vector(3), n in -12i64..=12) {
        let g = pushforward(&t, &f, n).unwrap();
        prop_assert!((g.norm() - f.norm()).abs() <= 1e-14 * f.norm().max(1.0));
    }

    #[test]
    fn group_law_holds_formally(t in system(2), m in prop::collection::vec(-5i64..=5, 2), a in -10i64..=10, b in -10i64..=10) {
        let m = CharIndex::new(&m);
        let (whole, p) = t.pushforward_char(&m, a + b).unwrap();
        let (mid, p1) = t.pushforward_char(&m, b).unwrap();
        let (end, p2) = t.pushforward_char(&mid, a).unwrap();
        prop_assert_eq!(whole, end);
        prop_assert_eq!(p, p1.add(&p2).unwrap());
    }

    #[test]
    fn group_law_holds_numerically(t in system(3), f in vector(3), a in 0i64..=8, b in 0i64..=8) {
        let direct = pushforward(&t, &f, a + b).unwrap();
        let stepped = pushforward(&t, &pushforward(&t, &f, b).unwrap(), a).unwrap();
        prop_assert!(direct.sub(&stepped).norm() < 1e-12);
    }

    #[test]
    fn power_matches_repeated_composition(t in system(3), n in 0u32..=12) {
        let mut acc = AffineSystem::identity(3);
        for _ in 0..n {
            acc = acc.compose(&t).unwrap();
        }
        prop_assert_eq!(t.power(i64::from(n)).unwrap(), acc);
    }

    #[test]
    fn projection_is_idempotent(t in system(2), f in vector(2)) {
        let p = invariant_projection(&t, &f).unwrap();
        let pp = invariant_projection(&t, &p).unwrap();
        prop_assert!(p.sub(&pp).norm() < 1e-12);
        // the projection is invariant
        prop_assert!(pushforward(&t, &p, 1).unwrap().sub(&p).norm() < 1e-12);
    }

    #[test]
    fn binomial_evaluation_matches_direct(coeffs in prop::collection::vec((-20i128..=20, 1i128..=6), 1..5), n in -1_000_000i128..=1_000_000) {
        // keep only integer-valued polynomials by scaling with the common denominator
        let den: i128 = coeffs.iter().map(|c| c.1).product();
        let coeffs: Vec<Rational> = coeffs.iter().map(|&(p, q)| Ratio::new(p * den / q, 1)).collect();
        let spec = SeqSpec::polynomial_rational(&coeffs).unwrap();
        let mut direct = Rational::from_integer(0);
        for c in coeffs.iter().rev() {
            direct = direct * Rational::from_integer(n) + c;
        }
        prop_assert_eq!(seq_eval(&spec, n).unwrap(), direct.to_integer());
    }

    #[test]
    fn half_integer_polynomials_evaluate_exactly(n in -1_000_000i128..=1_000_000) {
        // C(n, 2) has non-integral power-basis coefficients
        let spec = SeqSpec::polynomial_rational(&[Ratio::from_integer(0), Ratio::new(-1, 2), Ratio::new(1, 2)]).unwrap();
        prop_assert_eq!(seq_eval(&spec, n).unwrap(), n * (n - 1) / 2);
    }

    #[test]
    fn grid_measure_brackets_exact_measure(
        n in 1i64..=100_000,
        a in (0i64..8, 1i64..8),
        b in (0i64..8, 1i64..8),
    ) {
        let (x, y) = irr();
        let t = AffineSystem::rotation(vec![Phase::irrational(x, 1), Phase::zero()]);
        let s = AffineSystem::rotation(vec![Phase::zero(), Phase::irrational(y, 1)]);
        let arc = |(lo, len): (i64, i64)| Arc::from_ratios((lo, 8), (lo + len, 8)).unwrap();
        let region = Region::single(vec![arc(a), arc(b)]);
        let sets: Vec<Preimage> = [(&t, 0), (&t, n), (&s, n * n)]
            .iter()
            .map(|(sys, k)| Preimage { system: (*sys).clone(), iterate: *k, region: region.clone() })
            .collect();
        let exact = interval_measure_exact(&sets).unwrap();
        let grid = box_measure(&sets, 256, None).unwrap();
        prop_assert!((grid.value - exact).abs() <= grid.error_bound + 1e-12, "exact {} grid {} ± {}", exact, grid.value, grid.error_bound);
    }
}

#[test]
fn quadratic_differences_have_small_weyl_sums() {
    let (a, b) = irr();
    for h in 1..=8 {
        let diff = diff_profile(&SeqSpec::monomial(2), h).unwrap();
        for x in [&a, &b] {
            let s = weyl_sum(&diff, x, 100_000).unwrap().norm();
            assert!(s < 0.02, "h={h} x={}: {s}", x.label());
        }
    }
}

#[test]
fn averages_converge_to_invariant_projection() {
    let schedule = Schedule::new(vec![1000, 4000, 16_000]).unwrap();
    for entry in zoo() {
        let Some((t, f)) = entry.orbit.stationary() else {
            continue;
        };
        let target = invariant_projection(&t, &f).unwrap();
        let avgs = orbit_average(&entry.orbit, None, &schedule).unwrap();
        let dist: Vec<f64> = avgs.iter().map(|a| a.sub(&target).norm()).collect();
        assert!(dist[2] < 0.02, "{}: {dist:?}", entry.name);
        assert!(dist[2] <= dist[0] + 1e-12, "{}: {dist:?}", entry.name);
    }
}

#[test]
fn weights_commute_with_the_orbit() {
    let (a, _) = irr();
    let schedule = Schedule::new(vec![500, 1000, 2000]).unwrap();
    let weights = Orbit::scalar_phase(SeqSpec::monomial(2), a);
    for entry in zoo() {
        let split = averaged_norm(&entry.orbit, Some(&weights), &schedule).unwrap();
        let joined = averaged_norm(&Orbit::weighted(weights.clone(), entry.orbit.clone()), None, &schedule).unwrap();
        assert_eq!(split, joined, "{}", entry.name);
    }
}

#[test]
fn averages_are_bit_identical_across_runs() {
    let schedule = Schedule::new(vec![1000, 2000, 4000]).unwrap();
    for entry in zoo() {
        let a = orbit_average(&entry.orbit, None, &schedule).unwrap();
        let b = orbit_average(&entry.orbit, None, &schedule).unwrap();
        assert_eq!(a, b, "{}", entry.name);
    }
}
