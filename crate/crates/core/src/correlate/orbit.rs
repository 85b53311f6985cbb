//! Indexed generators `n ↦ f_n ∈ L²(T^d)`.

use num_complex::Complex64;

use super::CorrelateError;
use crate::seq::SeqSpec;
use crate::torus::{AffineSystem, CharVector, Irrational};

#[derive(Clone, Debug)]
pub enum Orbit {
    /// `U_1^{s_1(n)} ⋯ U_k^{s_k(n)} f`, the last step applied first.
    Chain {
        steps: Vec<(AffineSystem, SeqSpec)>,
        f: CharVector,
    },
    /// `e(k_n x)·f`. With `f` of dimension 0 this is a scalar sequence.
    Phase { seq: SeqSpec, x: Irrational, f: CharVector },
    /// `Σ a_i f^{(i)}_n`.
    Sum(Vec<(Complex64, Orbit)>),
    /// Pointwise product `Π f^{(i)}_n`.
    Product(Vec<Orbit>),
    /// `c_n f_n` for a scalar orbit `c`.
    Weighted { weights: Box<Orbit>, orbit: Box<Orbit> },
}

impl Orbit {
    /// `U^n f`.
    pub fn system(system: AffineSystem, f: CharVector) -> Orbit {
        Orbit::Chain {
            steps: vec![(system, SeqSpec::monomial(1))],
            f,
        }
    }

    /// `U^{k_n} f`.
    pub fn iterate(system: AffineSystem, seq: SeqSpec, f: CharVector) -> Orbit {
        Orbit::Chain {
            steps: vec![(system, seq)],
            f,
        }
    }

    pub fn constant(f: CharVector) -> Orbit {
        Orbit::Chain { steps: Vec::new(), f }
    }

    /// The scalar sequence `e(k_n x)`.
    pub fn scalar_phase(seq: SeqSpec, x: Irrational) -> Orbit {
        Orbit::Phase {
            seq,
            x,
            f: CharVector::constant(0, Complex64::new(1.0, 0.0)),
        }
    }

    pub fn weighted(weights: Orbit, orbit: Orbit) -> Orbit {
        Orbit::Weighted {
            weights: Box::new(weights),
            orbit: Box::new(orbit),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Orbit::Chain { f, .. } | Orbit::Phase { f, .. } => f.dim(),
            Orbit::Sum(parts) => parts.first().map_or(0, |(_, o)| o.dim()),
            Orbit::Product(parts) => parts.first().map_or(0, Orbit::dim),
            Orbit::Weighted { orbit, .. } => orbit.dim(),
        }
    }

    pub fn at(&self, n: u64) -> Result<CharVector, CorrelateError> {
        match self {
            Orbit::Chain { steps, f } => {
                let mut v = f.clone();
                for (system, seq) in steps.iter().rev() {
                    let k = seq_at(seq, n)?;
                    v = system.pushforward(&v, k).map_err(|e| generator(n, e))?;
                }
                Ok(v)
            }
            Orbit::Phase { seq, x, f } => {
                let k = seq.eval(n as i128).map_err(|e| generator(n, e))?;
                Ok(f.scale(crate::torus::unit(x.times(k))))
            }
            Orbit::Sum(parts) => {
                let vs = parts
                    .iter()
                    .map(|(a, o)| Ok((*a, o.at(n)?)))
                    .collect::<Result<Vec<_>, CorrelateError>>()?;
                Ok(CharVector::combine(self.dim(), vs.iter().map(|(a, v)| (*a, v))))
            }
            Orbit::Product(parts) => {
                let mut acc = CharVector::constant(self.dim(), Complex64::new(1.0, 0.0));
                for o in parts {
                    acc = acc.mul(&o.at(n)?);
                }
                Ok(acc)
            }
            Orbit::Weighted { weights, orbit } => {
                let c = weights.scalar_at(n)?;
                let v = orbit.at(n)?;
                Ok(CharVector::from_terms(v.dim(), v.iter().map(|(m, a)| (m.clone(), a * c))))
            }
        }
    }

    /// The value of a dimension-0 orbit.
    pub fn scalar_at(&self, n: u64) -> Result<Complex64, CorrelateError> {
        Ok(self.at(n)?.mean())
    }

    /// `(T, f)` when `f_n = U_T^n f` for every n, so that correlations
    /// do not depend on the averaging window.
    pub fn stationary(&self) -> Option<(AffineSystem, CharVector)> {
        match self {
            Orbit::Chain { steps, f } => match steps.as_slice() {
                [(system, seq)] if *seq == SeqSpec::monomial(1) => Some((system.clone(), f.clone())),
                [] => Some((crate::torus::AffineSystem::identity(f.dim()), f.clone())),
                _ => None,
            },
            Orbit::Sum(parts) => {
                let mut system: Option<AffineSystem> = None;
                let mut terms = Vec::with_capacity(parts.len());
                for (a, o) in parts {
                    let (s, f) = o.stationary()?;
                    match &system {
                        None => system = Some(s),
                        Some(t) if *t == s => {}
                        Some(_) => return None,
                    }
                    terms.push((*a, f));
                }
                let system = system?;
                let f = CharVector::combine(system.dim(), terms.iter().map(|(a, f)| (*a, f)));
                Some((system, f))
            }
            _ => None,
        }
    }

    /// `sup_n ‖f_n‖_∞` bound from coefficient ℓ¹ norms, when it is uniform.
    pub fn sup_bound(&self) -> Option<f64> {
        let l1 = |v: &CharVector| v.iter().map(|(_, c)| c.norm()).sum::<f64>();
        match self {
            Orbit::Chain { f, .. } | Orbit::Phase { f, .. } => Some(l1(f)),
            Orbit::Sum(parts) => parts
                .iter()
                .map(|(a, o)| o.sup_bound().map(|b| a.norm() * b))
                .sum(),
            Orbit::Product(parts) => parts.iter().map(Orbit::sup_bound).product(),
            Orbit::Weighted { weights, orbit } => Some(weights.sup_bound()? * orbit.sup_bound()?),
        }
    }
}

fn seq_at(seq: &SeqSpec, n: u64) -> Result<i64, CorrelateError> {
    let k = seq.eval(n as i128).map_err(|e| generator(n, e))?;
    i64::try_from(k).map_err(|_| CorrelateError::Generator {
        n,
        reason: format!("iterate exponent {k} exceeds 64 bits"),
    })
}

fn generator(n: u64, e: impl std::fmt::Display) -> CorrelateError {
    CorrelateError::Generator { n, reason: e.to_string() }
}
