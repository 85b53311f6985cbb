use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::orbit::Orbit;
use super::CorrelateError;
use crate::numeric::ComplexSum;
use crate::torus::{CharIndex, CharVector};

/// Strictly increasing averaging cutoffs `N_1 < … < N_Q`, `Q ≥ 3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule(Vec<u64>);

impl Schedule {
    pub fn new(cutoffs: Vec<u64>) -> Result<Schedule, CorrelateError> {
        if cutoffs.len() < 3 {
            return Err(CorrelateError::Schedule(format!("need at least 3 cutoffs, got {}", cutoffs.len())));
        }
        if cutoffs[0] == 0 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorrelateError::Schedule(format!("cutoffs must be positive and strictly increasing: {cutoffs:?}")));
        }
        Ok(Schedule(cutoffs))
    }

    /// `1000·2^q` below the budget, then the budget itself. Budgets too small
    /// for three such entries use `budget/4, budget/2, budget`.
    pub fn geometric(budget: u64) -> Result<Schedule, CorrelateError> {
        let mut v: Vec<u64> = (0..)
            .map(|q| 1000u64 << q)
            .take_while(|&n| n < budget)
            .collect();
        v.push(budget);
        if v.len() < 3 {
            v = vec![budget / 4, budget / 2, budget];
        }
        Schedule::new(v)
    }

    pub fn cutoffs(&self) -> &[u64] {
        &self.0
    }

    pub fn top(&self) -> u64 {
        *self.0.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Default lag budget `⌊√N_Q⌋`.
    pub fn default_lag(&self) -> usize {
        (self.top() as f64).sqrt().floor() as usize
    }
}

/// `γ_N(h) = (1/N) Σ_{n≤N} ⟨f_{n+h}, g_n⟩` for `0 ≤ h ≤ H` and every `N` of a
/// schedule.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationProfile {
    pub h_max: usize,
    pub schedule: Vec<u64>,
    /// `gammas[q][h]`.
    pub gammas: Vec<Vec<Complex64>>,
    /// `max_h |γ_{N_Q}(h) − γ_{N_{Q−1}}(h)|`.
    pub stability: f64,
    /// Values were obtained from `⟨U^h f, g⟩`, which every window reproduces.
    pub stationary: bool,
}

impl CorrelationProfile {
    pub fn from_top(gammas: Vec<Complex64>) -> CorrelationProfile {
        CorrelationProfile {
            h_max: gammas.len() - 1,
            schedule: vec![1],
            gammas: vec![gammas],
            stability: 0.0,
            stationary: true,
        }
    }

    pub fn top(&self) -> &[Complex64] {
        self.gammas.last().expect("non-empty")
    }

    /// `γ(h)` at the top cutoff, with `γ(−h) = conj γ(h)`.
    pub fn gamma(&self, h: i64) -> Complex64 {
        let g = self.top()[h.unsigned_abs() as usize];
        if h < 0 {
            g.conj()
        } else {
            g
        }
    }

    pub fn gamma0(&self) -> f64 {
        self.top()[0].re
    }

    /// Restriction to lags `0..=h`.
    pub fn truncated(&self, h: usize) -> CorrelationProfile {
        let h = h.min(self.h_max);
        let gammas: Vec<Vec<Complex64>> = self.gammas.iter().map(|g| g[..=h].to_vec()).collect();
        CorrelationProfile {
            h_max: h,
            stability: stability_of(&gammas),
            schedule: self.schedule.clone(),
            gammas,
            stationary: self.stationary,
        }
    }
}

fn stability_of(gammas: &[Vec<Complex64>]) -> f64 {
    match gammas {
        [.., a, b] => a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max),
        _ => 0.0,
    }
}

pub fn cesaro_correlation(
    orbit: &Orbit,
    h_max: Option<usize>,
    schedule: &Schedule,
) -> Result<CorrelationProfile, CorrelateError> {
    cesaro_cross(orbit, orbit, h_max, schedule)
}

/// Cross-correlations `(1/N) Σ ⟨f_{n+h}, g_n⟩`.
pub fn cesaro_cross(
    f: &Orbit,
    g: &Orbit,
    h_max: Option<usize>,
    schedule: &Schedule,
) -> Result<CorrelationProfile, CorrelateError> {
    let h_max = h_max.unwrap_or_else(|| schedule.default_lag());
    if let (Some((s, u)), Some((t, v))) = (f.stationary(), g.stationary()) {
        if s == t {
            // ⟨U^{n+h}u, U^n v⟩ = ⟨U^h u, v⟩ by unitarity
            let top = (0..=h_max)
                .into_par_iter()
                .map(|h| {
                    let uh = s
                        .pushforward(&u, h as i64)
                        .map_err(|e| CorrelateError::Generator { n: h as u64, reason: e.to_string() })?;
                    Ok(uh.inner(&v))
                })
                .collect::<Result<Vec<_>, CorrelateError>>()?;
            return Ok(CorrelationProfile {
                h_max,
                schedule: schedule.cutoffs().to_vec(),
                gammas: vec![top; schedule.len()],
                stability: 0.0,
                stationary: true,
            });
        }
    }
    let n_top = schedule.top() as usize;
    let fs = materialize(f, 1, n_top + h_max)?;
    let gs = if std::ptr::eq(f, g) { None } else { Some(materialize(g, 1, n_top)?) };
    let gs = gs.as_ref().unwrap_or(&fs);
    let cutoffs = schedule.cutoffs();
    let per_lag: Vec<Vec<Complex64>> = (0..=h_max)
        .into_par_iter()
        .map(|h| {
            let mut acc = ComplexSum::new();
            let mut out = Vec::with_capacity(cutoffs.len());
            let mut next = 0;
            for n in 0..n_top {
                acc.add(sparse_inner(&fs[n + h], &gs[n]));
                if n + 1 == cutoffs[next] as usize {
                    out.push(acc.value() / cutoffs[next] as f64);
                    next += 1;
                }
            }
            out
        })
        .collect();
    let gammas: Vec<Vec<Complex64>> = (0..cutoffs.len())
        .map(|q| per_lag.iter().map(|v| v[q]).collect())
        .collect();
    Ok(CorrelationProfile {
        h_max,
        schedule: cutoffs.to_vec(),
        stability: stability_of(&gammas),
        gammas,
        stationary: false,
    })
}

type Sparse = Vec<(CharIndex, Complex64)>;

/// `f_n` for `n ∈ [from, to]` as sorted coefficient lists.
fn materialize(orbit: &Orbit, from: usize, to: usize) -> Result<Vec<Sparse>, CorrelateError> {
    (from..=to)
        .into_par_iter()
        .map(|n| Ok(orbit.at(n as u64)?.iter().map(|(m, c)| (m.clone(), *c)).collect()))
        .collect()
}

fn sparse_inner(u: &Sparse, v: &Sparse) -> Complex64 {
    if let ([(a, x)], [(b, y)]) = (u.as_slice(), v.as_slice()) {
        return if a == b { x * y.conj() } else { Complex64::default() };
    }
    let (mut i, mut j) = (0, 0);
    let mut acc = Complex64::default();
    while i < u.len() && j < v.len() {
        match u[i].0.cmp(&v[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += u[i].1 * v[j].1.conj();
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// `(1/N) Σ_{n≤N} c_n f_n` at every cutoff, accumulated per character index.
pub fn orbit_average(
    orbit: &Orbit,
    weights: Option<&Orbit>,
    schedule: &Schedule,
) -> Result<Vec<CharVector>, CorrelateError> {
    let n_top = schedule.top();
    let mut acc: std::collections::BTreeMap<CharIndex, ComplexSum> = std::collections::BTreeMap::new();
    let mut out = Vec::with_capacity(schedule.len());
    let mut next = 0;
    const CHUNK: u64 = 4096;
    let mut start = 1u64;
    while start <= n_top {
        let end = (start + CHUNK - 1).min(n_top);
        let terms = (start..=end)
            .into_par_iter()
            .map(|n| {
                let v = orbit.at(n)?;
                let c = match weights {
                    Some(w) => Some(w.scalar_at(n)?),
                    None => None,
                };
                Ok((v, c))
            })
            .collect::<Result<Vec<_>, CorrelateError>>()?;
        for (k, (v, c)) in terms.into_iter().enumerate() {
            let n = start + k as u64;
            for (m, a) in v.iter() {
                let a = match c {
                    Some(c) => a * c,
                    None => *a,
                };
                acc.entry(m.clone()).or_default().add(a);
            }
            if n == schedule.cutoffs()[next] {
                let scale = Complex64::new(1.0 / n as f64, 0.0);
                out.push(CharVector::from_terms(
                    orbit.dim(),
                    acc.iter().map(|(m, s)| (m.clone(), s.value() * scale)),
                ));
                next += 1;
            }
        }
        start = end + 1;
    }
    Ok(out)
}

/// `‖(1/N) Σ_{n≤N} c_n f_n‖` at every cutoff.
pub fn averaged_norm(orbit: &Orbit, weights: Option<&Orbit>, schedule: &Schedule) -> Result<Vec<f64>, CorrelateError> {
    Ok(orbit_average(orbit, weights, schedule)?.iter().map(CharVector::norm).collect())
}

/// `(1/N) Σ_{n≤N} Π_j U_j^{s_j(n)} f_j`.
pub fn product_average(
    factors: &[(crate::torus::AffineSystem, crate::seq::SeqSpec, CharVector)],
    n: u64,
) -> Result<CharVector, CorrelateError> {
    let orbit = Orbit::Product(
        factors
            .iter()
            .map(|(t, s, f)| Orbit::iterate(t.clone(), s.clone(), f.clone()))
            .collect(),
    );
    let schedule = Schedule(vec![n]);
    Ok(orbit_average(&orbit, None, &schedule)?.pop().expect("one cutoff"))
}
