//! Labeled orbits with known spectral type.

use num_complex::Complex64;

use super::one;
use crate::correlate::Orbit;
use crate::seq::SeqSpec;
use crate::spectral::Tag;
use crate::torus::{AffineSystem, CharVector, Irrational, Phase};

#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub expected: Tag,
    pub orbit: Orbit,
}

/// `alpha = √2 − 1` and `beta = (√5 − 1)/2`.
pub fn zoo_irrationals() -> Vec<Irrational> {
    vec![Irrational::sqrt2_minus_1("alpha"), Irrational::golden_conjugate("beta")]
}

pub fn zoo() -> Vec<ZooEntry> {
    let [alpha, beta]: [Irrational; 2] = zoo_irrationals().try_into().expect("two symbols");
    let skew = AffineSystem::skew_product(&alpha);
    let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mixed_system = skew.product(&AffineSystem::rotation(vec![Phase::irrational(beta.clone(), 1)]));
    let mixed_f = CharVector::combine(
        3,
        [(half, &CharVector::character(&[0, 1, 0])), (half, &CharVector::character(&[0, 0, 1]))],
    );
    let pair = CharVector::combine(2, [(one(), &CharVector::character(&[1, 0])), (one(), &CharVector::character(&[0, 1]))]);
    vec![
        ZooEntry {
            name: "rotation",
            description: "x -> x + alpha on the circle, f = e(x)",
            expected: Tag::Singular,
            orbit: Orbit::system(
                AffineSystem::rotation(vec![Phase::irrational(alpha.clone(), 1)]),
                CharVector::character(&[1]),
            ),
        },
        ZooEntry {
            name: "rotation2",
            description: "(x, y) -> (x + alpha, y + beta), f = e(x) + e(y)",
            expected: Tag::Singular,
            orbit: Orbit::system(
                AffineSystem::rotation(vec![Phase::irrational(alpha.clone(), 1), Phase::irrational(beta.clone(), 1)]),
                pair,
            ),
        },
        ZooEntry {
            name: "skew-lebesgue",
            description: "(x, y) -> (x + alpha, y + x), f = e(y)",
            expected: Tag::Lebesgue,
            orbit: Orbit::system(skew.clone(), CharVector::character(&[0, 1])),
        },
        ZooEntry {
            name: "skew-eigen",
            description: "(x, y) -> (x + alpha, y + x), f = e(x)",
            expected: Tag::Singular,
            orbit: Orbit::system(skew, CharVector::character(&[1, 0])),
        },
        ZooEntry {
            name: "mixed",
            description: "skew product times rotation by beta on the 3-torus, f = (e(y) + e(z))/sqrt 2",
            expected: Tag::Mixed,
            orbit: Orbit::system(mixed_system, mixed_f),
        },
        ZooEntry {
            name: "quadratic-phase",
            description: "f_n = e(n^2 alpha) e(x)",
            expected: Tag::Lebesgue,
            orbit: Orbit::Phase {
                seq: SeqSpec::monomial(2),
                x: alpha,
                f: CharVector::character(&[1]),
            },
        },
        ZooEntry {
            name: "constant",
            description: "f_n = 1",
            expected: Tag::Singular,
            orbit: Orbit::constant(CharVector::constant(1, one())),
        },
        ZooEntry {
            name: "cat-map",
            description: "hyperbolic automorphism [[2,1],[1,1]], f = e(x)",
            expected: Tag::Lebesgue,
            orbit: Orbit::system(AffineSystem::cat_map(), CharVector::character(&[1, 0])),
        },
    ]
}

pub fn zoo_entry(name: &str) -> Option<ZooEntry> {
    zoo().into_iter().find(|e| e.name == name)
}
