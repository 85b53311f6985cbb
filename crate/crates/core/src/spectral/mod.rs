//! Spectral measures from correlation profiles: Fejér densities, atoms on a
//! declared lattice, Wiener and ℓ² statistics, and a four-way classification.

mod fejer;
mod toeplitz;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::correlate::{cesaro_correlation, cesaro_cross, CorrelateError, CorrelationProfile, Orbit, Schedule};
use crate::numeric::{ComplexSum, Neumaier};
use crate::torus::{turns_to_f64, unit, Irrational, Turns};

pub use fejer::{fejer_density, Density};
pub use toeplitz::{is_psd_within, min_eigenvalue, negative_count};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("profile unstable: oscillation {stability:.3e} across the top cutoffs exceeds {limit:.3e}")]
    Unstable { stability: f64, limit: f64 },
    #[error("grid of {grid} points cannot resolve lags up to {h_max}")]
    Grid { grid: usize, h_max: usize },
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// Wiener statistic below this is required for a Lebesgue tag.
    pub w_tol: f64,
    /// Top-octave ℓ² increment, as a fraction of `γ(0)²`.
    pub l2_frac: f64,
    pub s_tol: f64,
    pub tol_neg: f64,
    /// Atoms lighter than this fraction of `γ(0)` are ignored.
    pub atom_floor: f64,
    pub h_max: usize,
    pub grid: usize,
    /// Profiles oscillating more than `10·w_tol` are not classified.
    pub max_instability: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            w_tol: 0.02,
            l2_frac: 0.02,
            s_tol: 0.05,
            tol_neg: 1e-8,
            atom_floor: 0.01,
            h_max: 4096,
            grid: 8192,
            max_instability: 0.2,
        }
    }
}

/// Candidate atom locations: integer combinations `Σ k_i α_i` with
/// `|k_i| ≤ k_max`, and rationals `p/q` with `q ≤ max_den`.
#[derive(Clone, Debug)]
pub struct Candidates {
    pub irrationals: Vec<Irrational>,
    pub k_max: i64,
    pub max_den: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub label: String,
    #[serde(skip)]
    pub turns: Turns,
}

impl Candidates {
    pub fn new(irrationals: Vec<Irrational>) -> Candidates {
        Candidates {
            irrationals,
            k_max: 4,
            max_den: 6,
        }
    }

    pub fn list(&self) -> Vec<Candidate> {
        let mut out: Vec<Candidate> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for q in 1..=self.max_den.max(1) {
            for p in 0..q {
                if num_integer::gcd(p, q) != 1 {
                    continue;
                }
                let t = crate::torus::ratio_to_turns(p as u128, q as u128).0;
                if seen.insert(t) {
                    out.push(Candidate {
                        label: format!("{p}/{q}"),
                        turns: t,
                    });
                }
            }
        }
        let r = self.irrationals.len();
        let span = (2 * self.k_max + 1) as usize;
        let total = span.pow(r as u32);
        for code in 0..total {
            let mut c = code;
            let mut t: Turns = 0;
            let mut label = String::new();
            for a in &self.irrationals {
                let k = (c % span) as i64 - self.k_max;
                c /= span;
                if k == 0 {
                    continue;
                }
                t = t.wrapping_add(a.times(k as i128));
                let sign = if k < 0 { "-" } else if label.is_empty() { "" } else { "+" };
                let mag = k.unsigned_abs();
                if mag == 1 {
                    label.push_str(&format!("{sign}{}", a.label()));
                } else {
                    label.push_str(&format!("{sign}{mag}*{}", a.label()));
                }
            }
            if !label.is_empty() && seen.insert(t) {
                out.push(Candidate { label, turns: t });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub label: String,
    pub location: f64,
    pub mass: f64,
    pub imag_residue: f64,
}

/// `mass(a) = Re (1/H) Σ_{h=1}^H γ(h) e(−ha)` at each candidate.
pub fn atom_scan(profile: &CorrelationProfile, candidates: &[Candidate]) -> Vec<Atom> {
    let gamma = profile.top();
    let h_max = profile.h_max.max(1);
    candidates
        .iter()
        .map(|c| {
            let mut acc = ComplexSum::new();
            for (h, g) in gamma.iter().enumerate().skip(1) {
                acc.add(g * unit((h as u128).wrapping_mul(c.turns).wrapping_neg()));
            }
            let m = acc.value() / h_max as f64;
            Atom {
                label: c.label.clone(),
                location: turns_to_f64(c.turns),
                mass: m.re,
                imag_residue: m.im.abs(),
            }
        })
        .collect()
}

/// `(1/(2H+1)) Σ_{|h|≤H} |γ(h)|²`.
pub fn wiener_statistic(profile: &CorrelationProfile) -> f64 {
    let gamma = profile.top();
    let mut s = Neumaier::new();
    s.add(gamma[0].norm_sqr());
    for g in &gamma[1..] {
        s.add(2.0 * g.norm_sqr());
    }
    s.value() / (2 * profile.h_max + 1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2Tail {
    /// `S(H') = Σ_{1≤h≤H'} |γ(h)|²` for `H' = 0..=H`.
    pub partial: Vec<f64>,
    /// `S(H) − S(⌊H/2⌋)`.
    pub top_octave_increment: f64,
    /// Least-squares slope of `log |γ(h)|²` against `log h` over the top octave.
    pub increment_slope: Option<f64>,
    /// Same for `log S(h)`; 1 for a divergent series with constant increments.
    pub partial_slope: Option<f64>,
}

pub fn l2_tail(profile: &CorrelationProfile) -> L2Tail {
    let gamma = profile.top();
    let h_max = profile.h_max;
    let mut partial = Vec::with_capacity(h_max + 1);
    let mut s = Neumaier::new();
    partial.push(0.0);
    for g in &gamma[1..] {
        s.add(g.norm_sqr());
        partial.push(s.value());
    }
    let lo = (h_max / 2).max(1);
    let top_octave_increment = partial[h_max] - partial[lo.min(h_max)];
    let inc: Vec<(f64, f64)> = (lo..=h_max)
        .filter(|&h| gamma[h].norm_sqr() > 1e-300)
        .map(|h| ((h as f64).ln(), gamma[h].norm_sqr().ln()))
        .collect();
    let sums: Vec<(f64, f64)> = (lo..=h_max)
        .filter(|&h| partial[h] > 1e-300)
        .map(|h| ((h as f64).ln(), partial[h].ln()))
        .collect();
    L2Tail {
        partial,
        top_octave_increment,
        increment_slope: ls_slope(&inc),
        partial_slope: ls_slope(&sums),
    }
}

fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Lebesgue,
    Singular,
    Mixed,
    Inconclusive,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tag::Lebesgue => "lebesgue",
            Tag::Singular => "singular",
            Tag::Mixed => "mixed",
            Tag::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralEstimate {
    pub tag: Tag,
    pub gamma0: f64,
    pub h_max: usize,
    pub stability: f64,
    /// Atoms above the floor, heaviest first.
    pub atoms: Vec<Atom>,
    pub atomic_mass: f64,
    pub wiener: f64,
    pub l2: L2Tail,
    #[serde(skip)]
    pub density: Option<Density>,
    pub density_min: Option<f64>,
    pub density_integral: Option<f64>,
    pub thresholds: Thresholds,
    pub note: Option<String>,
}

pub fn classify(profile: &CorrelationProfile, thresholds: &Thresholds, candidates: &[Candidate]) -> SpectralEstimate {
    let gamma0 = profile.gamma0();
    let wiener = wiener_statistic(profile);
    let l2 = l2_tail(profile);
    let mut atoms: Vec<Atom> = atom_scan(profile, candidates)
        .into_iter()
        .filter(|a| a.mass > thresholds.atom_floor * gamma0)
        .collect();
    atoms.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.location.total_cmp(&b.location)));
    let atomic_mass: f64 = atoms.iter().map(|a| a.mass).sum();
    let mut estimate = SpectralEstimate {
        tag: Tag::Inconclusive,
        gamma0,
        h_max: profile.h_max,
        stability: profile.stability,
        atoms,
        atomic_mass,
        wiener,
        l2,
        density: None,
        density_min: None,
        density_integral: None,
        thresholds: thresholds.clone(),
        note: None,
    };
    let density = if thresholds.grid > profile.h_max {
        fejer_density(profile, thresholds.grid, thresholds.max_instability)
    } else {
        // coarse grids alias; evaluate on the smallest adequate power of two
        fejer_density(profile, (profile.h_max + 1).next_power_of_two(), thresholds.max_instability)
    };
    match density {
        Ok(d) => {
            estimate.density_min = Some(d.min());
            estimate.density_integral = Some(d.integral());
            estimate.density = Some(d);
        }
        Err(e) => {
            estimate.note = Some(e.to_string());
            return estimate;
        }
    }
    let lebesgue = wiener < thresholds.w_tol && estimate.l2.top_octave_increment < thresholds.l2_frac * gamma0 * gamma0;
    let s = thresholds.s_tol * gamma0;
    estimate.tag = if lebesgue {
        Tag::Lebesgue
    } else if atomic_mass >= gamma0 - s {
        Tag::Singular
    } else if atomic_mass > s && gamma0 - atomic_mass > s {
        Tag::Mixed
    } else {
        Tag::Inconclusive
    };
    estimate
}

#[derive(Clone, Debug, Serialize)]
pub struct Polarization {
    /// `(1/N) Σ ⟨f_{n+h}, g_n⟩` at the top cutoff.
    pub direct: Vec<Complex64>,
    /// `¼ (γ_1 − γ_{−1} + iγ_i − iγ_{−i})` with `γ_a` the profile of `f + a g`.
    pub polarized: Vec<Complex64>,
    pub discrepancy: f64,
}

pub fn cross_spectrum_polarization(
    f: &Orbit,
    g: &Orbit,
    h_max: usize,
    schedule: &Schedule,
    max_instability: f64,
) -> Result<Polarization, SpectralError> {
    let direct = cesaro_cross(f, g, Some(h_max), schedule)?;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut polarized = vec![Complex64::default(); h_max + 1];
    for a in [one, -one, i, -i] {
        let sum = Orbit::Sum(vec![(one, f.clone()), (a, g.clone())]);
        let p = cesaro_correlation(&sum, Some(h_max), schedule)?;
        if p.stability > max_instability {
            return Err(SpectralError::Unstable {
                stability: p.stability,
                limit: max_instability,
            });
        }
        for (acc, v) in polarized.iter_mut().zip(p.top()) {
            *acc += a * v * 0.25;
        }
    }
    let direct = direct.top().to_vec();
    let discrepancy = direct
        .iter()
        .zip(&polarized)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(Polarization {
        direct,
        polarized,
        discrepancy,
    })
}

/// Smallest tolerated Toeplitz eigenvalue for a profile: `−10·stability`,
/// floored by a rounding allowance relative to `γ(0)`.
pub fn psd_tolerance(profile: &CorrelationProfile) -> f64 {
    (10.0 * profile.stability).max(1e-9 * profile.gamma0().abs().max(1.0))
}
