use num_complex::Complex64;
use rayon::prelude::*;

use super::SpectralError;
use crate::correlate::CorrelationProfile;
use crate::numeric::ComplexSum;
use crate::torus::{unit, Turns};

#[derive(Clone, Debug, serde::Serialize)]
pub struct Density {
    pub values: Vec<f64>,
    /// Largest `|Im σ_H(x_j)|` seen before taking the real part.
    pub imag_residue: f64,
}

impl Density {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(1/G) Σ_j σ(x_j)`.
    pub fn integral(&self) -> f64 {
        let mut s = crate::numeric::Neumaier::new();
        for v in &self.values {
            s.add(*v);
        }
        s.value() / self.values.len() as f64
    }
}

/// `σ_H(j/G) = Σ_{|h|≤H} (1 − |h|/(H+1)) γ(h) e(hj/G)`.
pub fn fejer_density(profile: &CorrelationProfile, grid: usize, max_instability: f64) -> Result<Density, SpectralError> {
    if profile.stability > max_instability {
        return Err(SpectralError::Unstable {
            stability: profile.stability,
            limit: max_instability,
        });
    }
    let h_max = profile.h_max;
    if grid == 0 || h_max >= grid {
        return Err(SpectralError::Grid { grid, h_max });
    }
    let roots: Vec<Complex64> = (0..grid).map(|k| unit(grid_turns(k, grid))).collect();
    let weights: Vec<f64> = (0..=h_max).map(|h| 1.0 - h as f64 / (h_max + 1) as f64).collect();
    let gamma = profile.top();
    let cells: Vec<Complex64> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let mut acc = ComplexSum::new();
            acc.add(gamma[0]);
            for h in 1..=h_max {
                let r = roots[(h * j) % grid];
                acc.add(weights[h] * gamma[h] * r);
                acc.add(weights[h] * gamma[h].conj() * r.conj());
            }
            acc.value()
        })
        .collect();
    Ok(Density {
        imag_residue: cells.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        values: cells.iter().map(|z| z.re).collect(),
    })
}

fn grid_turns(k: usize, grid: usize) -> Turns {
    crate::torus::ratio_to_turns(k as u128, grid as u128).0
}
