//! Independent oracles for the derived example values. Each oracle avoids
//! the code path it checks: plain f64 exponential sums, closed forms, naive
//! big-integer iteration.

use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

use vdclab_core::correlate::{interval_measure_exact, Arc, Orbit, Preimage, Region, Schedule};
use vdclab_core::experiments::*;
use vdclab_core::seq::{rk_enumerate, star_discrepancy, RkSpec, SeqSpec};
use vdclab_core::torus::{AffineSystem, CharIndex, CharVector, Irrational, Phase};

fn alpha() -> Irrational {
    zoo_irrationals()[0].clone()
}

fn beta() -> Irrational {
    zoo_irrationals()[1].clone()
}

fn value(r: &ExperimentReport, metric: &str, n: u64) -> f64 {
    r.rows
        .iter()
        .find(|row| row.metric == metric && row.n == n && row.index.is_none())
        .unwrap_or_else(|| panic!("row {metric} at {n}"))
        .value
}

/// `x mod 1` for `x = k·a` computed from the decimal value of `a` with the
/// integer part of `k·a_hi` removed first; `k·a_hi` is exact for `k < 2^34`.
fn frac_mul(k: u64, a: f64) -> f64 {
    let hi = (a * 2f64.powi(19)).floor() / 2f64.powi(19);
    let lo = a - hi;
    let p = ((k as f64) * hi).rem_euclid(1.0);
    (p + (k as f64) * lo).rem_euclid(1.0)
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * x)
}

fn rotation(a: &[Phase]) -> AffineSystem {
    AffineSystem::rotation(a.to_vec())
}

#[test]
fn nf_distance_matches_direct_exponential_sum() {
    let (a, b) = (alpha(), beta());
    let schedule = Schedule::new(vec![1000, 10_000, 100_000]).unwrap();
    let setting = Setting::new(schedule, vec![a.clone(), b.clone()]);
    let input = NfInput {
        t: rotation(&[Phase::irrational(a.clone(), 1), Phase::zero()]),
        s: rotation(&[Phase::zero(), Phase::irrational(b.clone(), 1)]),
        k: SeqSpec::monomial(2),
        f: CharVector::character(&[1, 0]),
        g: CharVector::character(&[0, 1]),
    };
    let r = run_nf(&input, &setting, NfOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.abstain_reason);
    for n in [1000u64, 10_000, 100_000] {
        let mut s = Complex64::default();
        for m in 1..=n {
            s += e(frac_mul(m, a.to_f64()) + frac_mul(m * m, b.to_f64()));
        }
        let oracle = s.norm() / n as f64;
        let got = value(&r, "projection_distance", n);
        assert!((got - oracle).abs() < 1e-6, "N={n}: driver {got} oracle {oracle}");
    }
    // frozen
    let top = value(&r, "projection_distance", 100_000);
    assert!((top - 2.8e-3).abs() < 1e-4, "{top}");
}

/// `|[0,1/2) ∩ ([0,1/2) − x)| = max(0, 1/2 − ‖x‖)`.
fn half_overlap(x: f64) -> f64 {
    let d = x.rem_euclid(1.0);
    (0.5 - d.min(1.0 - d)).max(0.0)
}

#[test]
fn recurrence_average_matches_closed_form() {
    let (a, b) = (alpha(), beta());
    let schedule = Schedule::new(vec![1000, 10_000, 100_000]).unwrap();
    let setting = Setting::new(schedule, vec![a.clone(), b.clone()]);
    let half = Arc::from_ratios((0, 1), (1, 2)).unwrap();
    let input = RecurrenceInput {
        t: rotation(&[Phase::irrational(a.clone(), 1), Phase::zero()]),
        s: rotation(&[Phase::zero(), Phase::irrational(b.clone(), 1)]),
        k: SeqSpec::monomial(2),
        region: Region::single(vec![half, half]),
    };
    let r = run_recurrence(&input, &setting, RecurrenceOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let mut sum = 0.0;
    let mut at = Vec::new();
    for n in 1..=100_000u64 {
        sum += half_overlap(frac_mul(n, a.to_f64())) * half_overlap(frac_mul(n * n, b.to_f64()));
        if [1000, 10_000, 100_000].contains(&n) {
            at.push((n, sum / n as f64));
        }
    }
    for (n, oracle) in at {
        let got = value(&r, "recurrence_average", n);
        assert!((got - oracle).abs() < 1e-7, "N={n}: driver {got} oracle {oracle}");
    }
    // the limit: each coordinate averages ∫ max(0, 1/2 − ‖x‖) dx = 1/4
    let top = value(&r, "recurrence_average", 100_000);
    assert!((top - 1.0 / 16.0).abs() < 0.01, "{top}");
    assert!((top - 0.062471).abs() < 1e-5, "frozen {top}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    /// The three factors of the counterexample multiply to the constant 1 at
    /// every `n`, symbolically.
    #[test]
    fn counterexample_phases_cancel_exactly(n in 1i64..=1_000_000) {
        let a = alpha();
        let shear = vec![vec![1, 0], vec![1, 1]];
        let t = AffineSystem::new(shear.clone(), vec![Phase::zero(), Phase::zero()]).unwrap();
        let s = AffineSystem::new(shear, vec![Phase::irrational(a, 2), Phase::zero()]).unwrap();
        let (i1, p1) = t.pushforward_char(&CharIndex::new(&[1, -1]), n).unwrap();
        let (i2, p2) = s.pushforward_char(&CharIndex::new(&[0, 1]), n).unwrap();
        let (i3, p3) = s.pushforward_char(&CharIndex::new(&[-1, 0]), n * (n - 1) / 2).unwrap();
        prop_assert!(i1.add(&i2).add(&i3).is_zero());
        prop_assert!(p1.add(&p2).unwrap().add(&p3).unwrap().is_zero());
    }

    /// Rotation intersections against the product of two arc overlaps.
    #[test]
    fn exact_interval_measure_matches_overlaps(n in 1i64..=1_000_000_000) {
        let (a, b) = (alpha(), beta());
        let t = rotation(&[Phase::irrational(a.clone(), 1), Phase::zero()]);
        let s = rotation(&[Phase::zero(), Phase::irrational(b.clone(), 1)]);
        let half = Arc::from_ratios((0, 1), (1, 2)).unwrap();
        let region = Region::single(vec![half, half]);
        let pre = |sys: &AffineSystem, k: i64| Preimage { system: sys.clone(), iterate: k, region: region.clone() };
        let got = interval_measure_exact(&[pre(&t, 0), pre(&t, n), pre(&s, n)]).unwrap();
        let oracle = half_overlap(frac_mul(n as u64, a.to_f64())) * half_overlap(frac_mul(n as u64, b.to_f64()));
        prop_assert!((got - oracle).abs() < 1e-6, "n={} got {} oracle {}", n, got, oracle);
    }
}

#[test]
fn rk_density_within_three_discrepancies() {
    let a = alpha();
    for k in 1..=3u32 {
        for n_max in [500u64, 5000] {
            let set = rk_enumerate(&RkSpec::new(k, a.clone()), n_max).unwrap();
            let dstar = star_discrepancy(&SeqSpec::monomial(k as usize), &a, n_max).unwrap();
            let density = set.members.len() as f64 / n_max as f64;
            assert!((density - 0.5).abs() <= 3.0 * dstar, "k={k} N={n_max}: density {density} D* {dstar}");
            // membership by direct f64 evaluation away from the window ends
            for n in 1..=n_max.min(500) {
                let x = frac_mul(n.pow(k), a.to_f64());
                if (x - 0.25).abs() > 1e-6 && (x - 0.75).abs() > 1e-6 {
                    assert_eq!(set.members.contains(&n), (0.25..=0.75).contains(&x), "k={k} n={n}");
                }
            }
        }
    }
}

#[test]
fn quadratic_nonrecurrence_identity() {
    // y_0 − 2y_1 + y_2 = n²α along (x, y) ↦ (x + α, y + x), checked on points
    let a = alpha().to_f64();
    let set = rk_enumerate(&RkSpec::new(2, alpha()), 500).unwrap();
    for &n in &set.members {
        let (x0, y0) = (0.123_f64, 0.456_f64);
        let step = |x: f64, y: f64, m: u64| {
            let m = m as f64;
            ((x + m * a).rem_euclid(1.0), (y + m * x + m * (m - 1.0) / 2.0 * a).rem_euclid(1.0))
        };
        let (_, y1) = step(x0, y0, n);
        let (_, y2) = step(x0, y0, 2 * n);
        let lhs = (y0 - 2.0 * y1 + y2).rem_euclid(1.0);
        let rhs = frac_mul(n * n, a);
        let gap = (lhs - rhs).abs();
        assert!(gap.min(1.0 - gap) < 1e-6, "n={n}");
        // n²α in [1/4, 3/4] keeps the second difference out of (−1/4, 1/4)
        assert!((0.25..=0.75).contains(&rhs) || (rhs - 0.25).abs() < 1e-9 || (rhs - 0.75).abs() < 1e-9);
    }
}

#[test]
fn independence_checker_accepts_square_cube_fifth() {
    let polys = [SeqSpec::monomial(2), SeqSpec::monomial(3), SeqSpec::monomial(5)];
    assert_eq!(independence_violation(&polys, 16).unwrap(), None);
    // n² and 2n² are dependent: 2·p1(n) − p2(n) = 0
    let dependent = [SeqSpec::monomial(2), SeqSpec::polynomial(&[0, 0, 2]).unwrap()];
    assert!(independence_violation(&dependent, 4).unwrap().is_some());
    // linear sequences have constant differences
    assert!(independence_violation(&[SeqSpec::monomial(1)], 4).unwrap().is_some());
}

#[test]
fn constant_weights_decay_like_inverse_root() {
    let a = alpha();
    let schedule = Schedule::new(vec![1000, 4000, 16_000]).unwrap();
    let setting = Setting::new(schedule, vec![a.clone(), beta()]);
    let skew = zoo_entry("skew-lebesgue").unwrap().orbit;
    let ones = Orbit::scalar_phase(SeqSpec::polynomial(&[0]).unwrap(), a);
    let r = run_weighted_vdc(&ones, &skew, &setting, 0.05).unwrap();
    for n in [1000u64, 4000, 16_000] {
        let got = value(&r, "weighted_norm", n);
        // distinct characters are orthonormal, so ‖Σ_{n≤N} T^n e(y)‖ = √N
        assert!((got - 1.0 / (n as f64).sqrt()).abs() < 1e-12, "N={n}: {got}");
    }
}

#[test]
fn skew_rotation_cross_correlation_is_inverse_n() {
    let (a, b) = (alpha(), beta());
    let schedule = Schedule::new(vec![1000, 10_000, 100_000]).unwrap();
    let setting = Setting::new(schedule, vec![a.clone(), b.clone()]);
    let skew = zoo_entry("skew-lebesgue").unwrap().orbit;
    let rot = Orbit::system(
        rotation(&[Phase::irrational(a.clone(), 1), Phase::irrational(b.clone(), 1)]),
        CharVector::character(&[1, 1]),
    );
    let r = run_orthogonality(&skew, &rot, &setting, 0.02).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    for n in [1000u64, 10_000, 100_000] {
        // T^n e(y) = c·e(nx + y) meets e(x + y) only at n = 1
        let got = value(&r, "cross_correlation", n);
        assert!((got - 1.0 / n as f64).abs() < 1e-12, "N={n}: {got}");
    }
}

/// `v ↦ Aᵀ v` with big integers.
fn transpose_step(a: &[Vec<i64>], v: &[BigInt]) -> Vec<BigInt> {
    (0..v.len())
        .map(|i| (0..v.len()).map(|j| BigInt::from(a[j][i]) * &v[j]).sum())
        .collect()
}

#[test]
fn hyperbolic_slots_are_distinct_by_naive_iteration() {
    let s = AffineSystem::cat_map();
    let w = s.power(2).unwrap();
    let input = T1T2Input {
        t: rotation(&[Phase::irrational(alpha(), 1), Phase::zero()]),
        rs: vec![],
        s: s.clone(),
        w,
        polys: vec![SeqSpec::monomial(2)],
        f: CharVector::character(&[1, 0]),
        hs: vec![],
        gs: vec![CharVector::character(&[1, 0])],
    };
    // slot n carries S^{n²} W^n e_(1,0) = S^{n² + 2n} e_(1,0)
    let n_max = 200u64;
    let mut seen = std::collections::BTreeSet::new();
    let mut v = vec![BigInt::from(1), BigInt::from(0)];
    let mut done = 0u64;
    for n in 1..=n_max {
        while done < n * n + 2 * n {
            v = transpose_step(s.matrix(), &v);
            done += 1;
        }
        assert!(seen.insert(v.clone()), "repeated index at n={n}");
    }
    let audit = exact_audit(&input, n_max).unwrap();
    assert_eq!(audit.distinct, n_max);
    assert_eq!(audit.disagreements, 0);
    assert_eq!(audit.residue_mismatches, 0);
    let fp = fingerprint_audit(&input, 2000).unwrap();
    assert_eq!(fp.disagreements, 0);
    assert_eq!(fp.distinct, 2000);
}
