//! Character indices `m ∈ ℤ^d` for `e_m(x) = e^{2πi m·x}`.
//!
//! Every index carries its coordinates reduced modulo three 61-bit primes.
//! Equality, ordering and hashing use only these residues, so indices produced
//! by high powers of hyperbolic automorphisms (thousands or millions of bits)
//! compare in O(d). Exact coordinates are kept while they are affordable.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Which triple of primes a fingerprint lives in. Indices from different
/// sets never compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimeSet {
    Primary,
    Audit,
}

const PRIMARY: [u64; 3] = [2305843009213693951, 2305843009213693921, 2305843009213693907];
const AUDIT: [u64; 3] = [2305843009213693723, 2305843009213693693, 2305843009213693669];

impl PrimeSet {
    pub const fn moduli(self) -> [u64; 3] {
        match self {
            PrimeSet::Primary => PRIMARY,
            PrimeSet::Audit => AUDIT,
        }
    }
}

pub type Residues = [u64; 3];

#[derive(Clone, Debug)]
pub enum Coords {
    Small(SmallVec<[i64; 3]>),
    Big(Vec<BigInt>),
    /// Only the residues are known.
    Residual,
}

#[derive(Clone)]
pub struct CharIndex {
    set: PrimeSet,
    residues: SmallVec<[Residues; 3]>,
    coords: Coords,
}

pub(crate) fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn residues_of_i64(x: i64, moduli: [u64; 3]) -> Residues {
    moduli.map(|p| x.rem_euclid(p as i64) as u64)
}

fn residues_of_big(x: &BigInt, moduli: [u64; 3]) -> Residues {
    moduli.map(|p| x.mod_floor(&BigInt::from(p)).to_u64().unwrap_or(0))
}

impl CharIndex {
    pub fn new(m: &[i64]) -> Self {
        CharIndex::with_set(m, PrimeSet::Primary)
    }

    pub fn with_set(m: &[i64], set: PrimeSet) -> Self {
        let moduli = set.moduli();
        CharIndex {
            set,
            residues: m.iter().map(|&x| residues_of_i64(x, moduli)).collect(),
            coords: Coords::Small(m.iter().copied().collect()),
        }
    }

    pub fn zero(dim: usize) -> Self {
        CharIndex::new(&vec![0; dim])
    }

    /// Exact big-integer coordinates; demoted to 64-bit storage when they fit.
    pub fn from_big(m: Vec<BigInt>, set: PrimeSet) -> Self {
        if let Some(small) = m.iter().map(|x| x.to_i64()).collect::<Option<Vec<_>>>() {
            return CharIndex::with_set(&small, set);
        }
        let moduli = set.moduli();
        CharIndex {
            set,
            residues: m.iter().map(|x| residues_of_big(x, moduli)).collect(),
            coords: Coords::Big(m),
        }
    }

    pub fn from_residues(residues: Vec<Residues>, set: PrimeSet) -> Self {
        CharIndex {
            set,
            residues: residues.into_iter().collect(),
            coords: Coords::Residual,
        }
    }

    pub fn dim(&self) -> usize {
        self.residues.len()
    }

    pub fn prime_set(&self) -> PrimeSet {
        self.set
    }

    pub fn residues(&self) -> &[Residues] {
        &self.residues
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    pub fn small(&self) -> Option<&[i64]> {
        match &self.coords {
            Coords::Small(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.coords, Coords::Residual)
    }

    /// Exact coordinates as big integers, if known.
    pub fn exact(&self) -> Option<Vec<BigInt>> {
        match &self.coords {
            Coords::Small(v) => Some(v.iter().map(|&x| BigInt::from(x)).collect()),
            Coords::Big(v) => Some(v.clone()),
            Coords::Residual => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|r| *r == [0, 0, 0])
    }

    /// Bit length of the largest exact coordinate.
    pub fn bits(&self) -> Option<u64> {
        match &self.coords {
            Coords::Small(v) => Some(v.iter().map(|x| 64 - x.unsigned_abs().leading_zeros() as u64).max().unwrap_or(0)),
            Coords::Big(v) => Some(v.iter().map(|x| x.bits()).max().unwrap_or(0)),
            Coords::Residual => None,
        }
    }

    /// Same index fingerprinted with another prime set.
    pub fn rebased(&self, set: PrimeSet) -> Option<CharIndex> {
        match &self.coords {
            Coords::Small(v) => Some(CharIndex::with_set(v, set)),
            Coords::Big(v) => Some(CharIndex::from_big(v.clone(), set)),
            Coords::Residual => None,
        }
    }

    pub fn add(&self, other: &CharIndex) -> CharIndex {
        assert_eq!(self.dim(), other.dim(), "character indices of different dimension");
        assert_eq!(self.set, other.set, "character indices from different prime sets");
        let moduli = self.set.moduli();
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .map(|(a, b)| [0, 1, 2].map(|k| (a[k] + b[k]) % moduli[k]))
            .collect();
        let coords = match (&self.coords, &other.coords) {
            (Coords::Small(a), Coords::Small(b)) => {
                match a.iter().zip(b).map(|(x, y)| x.checked_add(*y)).collect::<Option<SmallVec<_>>>() {
                    Some(v) => Coords::Small(v),
                    None => Coords::Big(a.iter().zip(b).map(|(x, y)| BigInt::from(*x) + y).collect()),
                }
            }
            (Coords::Residual, _) | (_, Coords::Residual) => Coords::Residual,
            _ => {
                let a = self.exact().expect("exact");
                let b = other.exact().expect("exact");
                let v: Vec<BigInt> = a.into_iter().zip(b).map(|(x, y)| x + y).collect();
                return CharIndex::from_big(v, self.set);
            }
        };
        CharIndex {
            set: self.set,
            residues,
            coords,
        }
    }

    pub fn neg(&self) -> CharIndex {
        let moduli = self.set.moduli();
        let residues = self
            .residues
            .iter()
            .map(|r| [0, 1, 2].map(|k| (moduli[k] - r[k]) % moduli[k]))
            .collect();
        let coords = match &self.coords {
            Coords::Small(v) => match v.iter().map(|x| x.checked_neg()).collect::<Option<SmallVec<_>>>() {
                Some(n) => Coords::Small(n),
                None => Coords::Big(v.iter().map(|&x| -BigInt::from(x)).collect()),
            },
            Coords::Big(v) => Coords::Big(v.iter().map(|x| -x).collect()),
            Coords::Residual => Coords::Residual,
        };
        CharIndex {
            set: self.set,
            residues,
            coords,
        }
    }

    /// `M·m` for an integer matrix given row-major. Exact coordinates are kept
    /// (promoted to big integers on overflow).
    pub fn apply_matrix(&self, rows: &[Vec<i64>]) -> CharIndex {
        let d = self.dim();
        debug_assert_eq!(rows.len(), d);
        match &self.coords {
            Coords::Small(v) => {
                let mut out: SmallVec<[i64; 3]> = SmallVec::with_capacity(d);
                let mut ok = true;
                for row in rows {
                    let acc = row
                        .iter()
                        .zip(v.iter())
                        .try_fold(0i128, |acc, (a, x)| acc.checked_add(*a as i128 * *x as i128));
                    match acc.and_then(|acc| i64::try_from(acc).ok()) {
                        Some(x) => out.push(x),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return CharIndex::with_set(&out, self.set);
                }
                let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
                CharIndex::from_big(mat_vec_big(rows, &big), self.set)
            }
            Coords::Big(v) => CharIndex::from_big(mat_vec_big(rows, v), self.set),
            Coords::Residual => {
                let moduli = self.set.moduli();
                let rows_mod: Vec<Vec<Residues>> = rows
                    .iter()
                    .map(|r| r.iter().map(|&a| residues_of_i64(a, moduli)).collect())
                    .collect();
                self.apply_residue_matrix(&rows_mod)
            }
        }
    }

    /// Applies a matrix known only modulo the three primes; the result keeps
    /// residues only.
    pub fn apply_residue_matrix(&self, rows: &[Vec<Residues>]) -> CharIndex {
        let moduli = self.set.moduli();
        let residues = rows
            .iter()
            .map(|row| {
                [0, 1, 2].map(|k| {
                    let p = moduli[k];
                    row.iter()
                        .zip(&self.residues)
                        .fold(0u64, |acc, (a, x)| (acc + mulmod(a[k], x[k], p)) % p)
                })
            })
            .collect();
        CharIndex {
            set: self.set,
            residues,
            coords: Coords::Residual,
        }
    }
}

fn mat_vec_big(rows: &[Vec<i64>], v: &[BigInt]) -> Vec<BigInt> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(BigInt::zero(), |acc, (a, x)| acc + x * BigInt::from(*a))
        })
        .collect()
}

impl PartialEq for CharIndex {
    fn eq(&self, other: &Self) -> bool {
        self.set == other.set && self.residues == other.residues
    }
}

impl Eq for CharIndex {}

impl Hash for CharIndex {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.set.hash(state);
        self.residues.hash(state);
    }
}

impl PartialOrd for CharIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CharIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.set, &self.residues[..]).cmp(&(other.set, &other.residues[..]))
    }
}

impl fmt::Display for CharIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.coords {
            Coords::Small(v) => write!(f, "{v:?}"),
            Coords::Big(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|x| if x.bits() <= 128 { x.to_string() } else { format!("<{}-bit>", x.bits()) })
                    .collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Coords::Residual => {
                let parts: Vec<String> = self.residues.iter().map(|r| format!("#{:x}", r[0])).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

impl fmt::Debug for CharIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime(n: u64) -> bool {
        // deterministic Miller–Rabin for 64-bit inputs
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if n % p == 0 {
                return n == p;
            }
        }
        let mut d = n - 1;
        let mut s = 0;
        while d % 2 == 0 {
            d /= 2;
            s += 1;
        }
        let pow = |mut b: u64, mut e: u64| {
            let mut r = 1u64;
            b %= n;
            while e > 0 {
                if e & 1 == 1 {
                    r = mulmod(r, b, n);
                }
                b = mulmod(b, b, n);
                e >>= 1;
            }
            r
        };
        'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            let mut x = pow(a, d);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 1..s {
                x = mulmod(x, x, n);
                if x == n - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }

    #[test]
    fn moduli_are_distinct_61_bit_primes() {
        let all: Vec<u64> = PRIMARY.iter().chain(AUDIT.iter()).copied().collect();
        for (i, &p) in all.iter().enumerate() {
            assert!(is_prime(p), "{p}");
            assert_eq!(64 - p.leading_zeros(), 61);
            assert!(!all[..i].contains(&p));
        }
    }

    #[test]
    fn addition_adds_fingerprints() {
        let a = CharIndex::new(&[3, -7]);
        let b = CharIndex::new(&[-3, 9]);
        assert_eq!(a.add(&b), CharIndex::new(&[0, 2]));
        assert!(a.add(&a.neg()).is_zero());
    }

    #[test]
    fn overflow_promotes_to_big() {
        let a = CharIndex::new(&[i64::MAX, 1]);
        let s = a.add(&a);
        assert!(matches!(s.coords(), Coords::Big(_)));
        let expected = CharIndex::from_big(vec![BigInt::from(i64::MAX) * 2, BigInt::from(2)], PrimeSet::Primary);
        assert_eq!(s, expected);
        assert_eq!(s.add(&a.neg()), a);
    }

    #[test]
    fn residue_matrix_agrees_with_exact() {
        let m = CharIndex::new(&[5, -2]);
        let rows = vec![vec![2, 1], vec![1, 1]];
        let exact = m.apply_matrix(&rows);
        let residual = CharIndex::from_residues(m.residues().to_vec(), PrimeSet::Primary).apply_matrix(&rows);
        assert_eq!(exact, residual);
        assert_eq!(exact.small(), Some(&[8, 3][..]));
    }

    #[test]
    fn prime_sets_do_not_mix() {
        let a = CharIndex::new(&[1]);
        let b = a.rebased(PrimeSet::Audit).unwrap();
        assert_ne!(a, b);
        assert_eq!(b.rebased(PrimeSet::Primary).unwrap(), a);
    }
}
