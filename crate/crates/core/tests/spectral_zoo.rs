use vdclab_core::correlate::{cesaro_cross, CorrelationProfile, Schedule};
use vdclab_core::experiments::{zoo, zoo_irrationals, Setting};
use vdclab_core::spectral::{
    atom_scan, classify, cross_spectrum_polarization, fejer_density, is_psd_within, min_eigenvalue, psd_tolerance,
    wiener_statistic, Tag,
};

fn setting() -> Setting {
    Setting::new(Schedule::geometric(100_000).unwrap(), zoo_irrationals())
}

fn profiles() -> Vec<(String, Tag, CorrelationProfile)> {
    let s = setting();
    zoo().into_iter().map(|e| (e.name.to_string(), e.expected, s.profile(&e.orbit).unwrap())).collect()
}

#[test]
fn zoo_profiles_satisfy_spectral_invariants() {
    let s = setting();
    let candidates = s.candidates();
    for (name, expected, p) in profiles() {
        // Hermitian extension
        for h in 1..=8 {
            assert_eq!(p.gamma(-h), p.gamma(h).conj(), "{name} h={h}");
        }
        let d = fejer_density(&p, (p.h_max + 1).next_power_of_two() * 2, s.thresholds.max_instability).unwrap();
        assert!(d.min() >= -1e-8, "{name}: density min {}", d.min());
        assert!((d.integral() - p.gamma0()).abs() <= 1e-10, "{name}: integral {}", d.integral());

        let atoms = atom_scan(&p, &candidates);
        let squares: f64 = atoms.iter().map(|a| a.mass * a.mass).sum();
        assert!(wiener_statistic(&p) >= squares - 0.05, "{name}: wiener below atom squares");

        let top = p.top();
        assert!(is_psd_within(top, psd_tolerance(&p)), "{name}: Toeplitz not PSD");
        if p.h_max <= 512 {
            assert!(min_eigenvalue(top) >= -10.0 * p.stability - 1e-9, "{name}");
        }

        let est = classify(&p, &s.thresholds, &candidates);
        assert_eq!(est.tag, expected, "{name}: {:?}", est.note);
    }
}

#[test]
fn skew_lebesgue_correlations_vanish_exactly() {
    let s = setting();
    let skew = zoo().into_iter().find(|e| e.name == "skew-lebesgue").unwrap();
    let p = cesaro_cross(&skew.orbit, &skew.orbit, Some(64), &s.schedule).unwrap();
    for h in 1..=64 {
        assert!(p.gamma(h).norm() < 1e-12, "h={h}: {}", p.gamma(h));
    }
}

#[test]
fn polarization_agrees_on_zoo_pairs() {
    // an algebraic identity at every N, so a short schedule suffices
    let schedule = Schedule::geometric(10_000).unwrap();
    let s = setting();
    let entries = zoo();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i..] {
            if a.orbit.dim() != b.orbit.dim() {
                continue;
            }
            let pol = cross_spectrum_polarization(&a.orbit, &b.orbit, 64, &schedule, s.thresholds.max_instability).unwrap();
            assert!(pol.discrepancy < 1e-9, "{} vs {}: {}", a.name, b.name, pol.discrepancy);
        }
    }
}
