//! Affine automorphisms `x ↦ Ax + b` of T^d and their Koopman action
//! `Uf = f∘T` on characters.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::error::{overflow, TorusError};
use super::index::{mulmod, CharIndex, Coords, PrimeSet, Residues};
use super::irrational::Irrational;
use super::phase::Phase;
use super::vector::CharVector;

pub type IntMatrix = Vec<Vec<i64>>;

/// Iteration cap for orbit certification.
pub const ORBIT_CAP: u64 = 10_000;
/// An index whose coordinates exceed this many bits lies on an infinite orbit.
pub const ORBIT_BITS: u64 = 200;
/// Above this estimated size, iterated indices keep residues only.
const EXACT_INDEX_BITS: f64 = 4096.0;

#[derive(Clone, PartialEq, Eq)]
pub struct AffineSystem {
    matrix: IntMatrix,
    translation: Vec<Phase>,
}

impl AffineSystem {
    pub fn new(matrix: IntMatrix, translation: Vec<Phase>) -> Result<Self, TorusError> {
        let d = translation.len();
        if matrix.len() != d {
            return Err(TorusError::Dimension {
                expected: d,
                found: matrix.len(),
            });
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != d) {
            return Err(TorusError::Dimension {
                expected: d,
                found: row.len(),
            });
        }
        let det = determinant(&matrix);
        if det.abs() != BigInt::one() {
            return Err(TorusError::NotUnimodular {
                det: det.to_i128().unwrap_or(i128::MAX),
            });
        }
        Ok(AffineSystem { matrix, translation })
    }

    pub fn identity(d: usize) -> Self {
        AffineSystem {
            matrix: identity_matrix(d),
            translation: vec![Phase::zero(); d],
        }
    }

    /// Rotation `x ↦ x + b`.
    pub fn rotation(translation: Vec<Phase>) -> Self {
        AffineSystem {
            matrix: identity_matrix(translation.len()),
            translation,
        }
    }

    /// `(x, y) ↦ (x + α, y + x)`.
    pub fn skew_product(alpha: &Irrational) -> Self {
        AffineSystem {
            matrix: vec![vec![1, 0], vec![1, 1]],
            translation: vec![Phase::irrational(alpha.clone(), 1), Phase::zero()],
        }
    }

    /// The hyperbolic automorphism `[[2,1],[1,1]]`.
    pub fn cat_map() -> Self {
        AffineSystem {
            matrix: vec![vec![2, 1], vec![1, 1]],
            translation: vec![Phase::zero(), Phase::zero()],
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn translation(&self) -> &[Phase] {
        &self.translation
    }

    pub fn is_rotation(&self) -> bool {
        self.matrix == identity_matrix(self.dim())
    }

    pub fn has_zero_translation(&self) -> bool {
        self.translation.iter().all(Phase::is_zero)
    }

    /// `self ∘ other`: `x ↦ A(A'x + b') + b`.
    pub fn compose(&self, other: &AffineSystem) -> Result<AffineSystem, TorusError> {
        self.check_dim(other.dim())?;
        let matrix = mat_mul(&self.matrix, &other.matrix).ok_or_else(|| overflow("matrix product"))?;
        let moved = mat_phase(&self.matrix, &other.translation)?;
        let translation = moved
            .iter()
            .zip(&self.translation)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_, _>>()?;
        Ok(AffineSystem { matrix, translation })
    }

    pub fn inverse(&self) -> Result<AffineSystem, TorusError> {
        let inv = integer_inverse(&self.matrix).ok_or_else(|| overflow("matrix inverse"))?;
        let moved = mat_phase(&inv, &self.translation)?;
        Ok(AffineSystem {
            matrix: inv,
            translation: moved.iter().map(Phase::neg).collect(),
        })
    }

    /// Block-diagonal product system on T^{d+d'}.
    pub fn product(&self, other: &AffineSystem) -> AffineSystem {
        let (d, e) = (self.dim(), other.dim());
        let mut matrix = vec![vec![0; d + e]; d + e];
        for i in 0..d {
            matrix[i][..d].copy_from_slice(&self.matrix[i]);
        }
        for i in 0..e {
            matrix[d + i][d..].copy_from_slice(&other.matrix[i]);
        }
        let translation = self.translation.iter().chain(&other.translation).cloned().collect();
        AffineSystem { matrix, translation }
    }

    pub fn commutes_with(&self, other: &AffineSystem) -> Result<bool, TorusError> {
        Ok(self.compose(other)? == other.compose(self)?)
    }

    pub fn matrices_commute(&self, other: &AffineSystem) -> bool {
        match (mat_mul(&self.matrix, &other.matrix), mat_mul(&other.matrix, &self.matrix)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// `T^n` in closed form, by affine exponentiation by squaring. Negative
    /// `n` iterates the inverse.
    pub fn power(&self, n: i64) -> Result<AffineSystem, TorusError> {
        if n < 0 {
            return self.inverse()?.power_unsigned(n.unsigned_abs());
        }
        self.power_unsigned(n as u64)
    }

    fn power_unsigned(&self, n: u64) -> Result<AffineSystem, TorusError> {
        if let Some(fast) = FlatAffine::new(self).and_then(|f| f.power(n)) {
            return fast.into_system();
        }
        self.power_by_compose(n)
    }

    fn power_by_compose(&self, mut n: u64) -> Result<AffineSystem, TorusError> {
        let mut acc = AffineSystem::identity(self.dim());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }

    /// `U e_m = e(m·b) e_{Aᵀm}` for this (already iterated) system.
    pub fn apply_char(&self, m: &CharIndex) -> Result<(CharIndex, Phase), TorusError> {
        self.check_dim(m.dim())?;
        let phase = index_phase(m, &self.translation)?;
        Ok((m.apply_matrix(&transpose(&self.matrix)), phase))
    }

    pub fn apply(&self, f: &CharVector) -> Result<CharVector, TorusError> {
        self.check_dim(f.dim())?;
        let at = transpose(&self.matrix);
        let mut out = CharVector::zero(f.dim());
        for (m, c) in f.iter() {
            let phase = index_phase(m, &self.translation)?;
            out.add_term(m.apply_matrix(&at), c * phase.unit());
        }
        Ok(out)
    }

    /// `U^n e_m`. Falls back to big-integer or residue-only indices when the
    /// matrix power leaves 64-bit range and the translation vanishes.
    pub fn pushforward_char(&self, m: &CharIndex, n: i64) -> Result<(CharIndex, Phase), TorusError> {
        match self.power(n) {
            Ok(p) => p.apply_char(m),
            Err(TorusError::Overflow { what }) => {
                if !self.has_zero_translation() {
                    return Err(TorusError::Overflow { what });
                }
                Ok((self.transpose_power_index(m, n)?, Phase::zero()))
            }
            Err(e) => Err(e),
        }
    }

    fn transpose_power_index(&self, m: &CharIndex, n: i64) -> Result<CharIndex, TorusError> {
        let base = if n < 0 {
            integer_inverse(&self.matrix).ok_or_else(|| overflow("matrix inverse"))?
        } else {
            self.matrix.clone()
        };
        let at = transpose(&base);
        let e = n.unsigned_abs();
        let norm = at.iter().map(|r| r.iter().map(|x| x.unsigned_abs()).sum::<u64>()).max().unwrap_or(1).max(2);
        let estimate = e as f64 * (norm as f64).log2() + m.bits().unwrap_or(u64::MAX) as f64;
        if m.is_exact() && estimate <= EXACT_INDEX_BITS {
            Ok(big_power_index(&at, e, m))
        } else {
            Ok(m.apply_residue_matrix(&residue_matrix_power(&at, e, m.prime_set())))
        }
    }

    /// `(Aᵀ)^n m` with exact big-integer coordinates regardless of size.
    pub fn exact_orbit_index(&self, m: &CharIndex, n: u64) -> CharIndex {
        big_power_index(&transpose(&self.matrix), n, m)
    }

    /// `(Aᵀ)^n m` through residues only.
    pub fn residue_orbit_index(&self, m: &CharIndex, n: u64) -> CharIndex {
        m.apply_residue_matrix(&residue_matrix_power(&transpose(&self.matrix), n, m.prime_set()))
    }

    pub fn pushforward(&self, f: &CharVector, n: i64) -> Result<CharVector, TorusError> {
        self.check_dim(f.dim())?;
        let mut out = CharVector::zero(f.dim());
        match self.power(n) {
            Ok(p) => return p.apply(f),
            Err(TorusError::Overflow { what }) if !self.has_zero_translation() => {
                return Err(TorusError::Overflow { what })
            }
            Err(TorusError::Overflow { .. }) => {}
            Err(e) => return Err(e),
        }
        for (m, c) in f.iter() {
            out.add_term(self.transpose_power_index(m, n)?, *c);
        }
        Ok(out)
    }

    /// Orthogonal projection onto the `U`-invariant functions.
    pub fn invariant_projection(&self, f: &CharVector) -> Result<CharVector, TorusError> {
        self.check_dim(f.dim())?;
        let at = transpose(&self.matrix);
        let horizon = finite_order_bound(self.dim());
        let mut out = CharVector::zero(f.dim());
        for (m, c) in f.iter() {
            if !m.is_exact() {
                return Err(TorusError::InexactIndex { index: m.to_string() });
            }
            match orbit_period(&at, m, horizon)? {
                None => {}
                Some(p) => {
                    let cycle = self.power(p as i64)?;
                    if !index_phase(m, cycle.translation())?.is_zero() {
                        continue;
                    }
                    let w = c / p as f64;
                    let mut step = AffineSystem::identity(self.dim());
                    for _ in 0..p {
                        let (k, phase) = step.apply_char(m)?;
                        out.add_term(k, w * phase.unit());
                        step = step.compose(self)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Component of `f` spanned by eigenfunctions with root-of-unity
    /// eigenvalues: the characters on finite orbits whose cycle phase is
    /// rational.
    pub fn rational_spectrum_part(&self, f: &CharVector) -> Result<CharVector, TorusError> {
        self.check_dim(f.dim())?;
        let at = transpose(&self.matrix);
        let horizon = finite_order_bound(self.dim());
        let mut out = CharVector::zero(f.dim());
        for (m, c) in f.iter() {
            if !m.is_exact() {
                return Err(TorusError::InexactIndex { index: m.to_string() });
            }
            if let Some(p) = orbit_period(&at, m, horizon)? {
                let cycle = self.power(p as i64)?;
                if !index_phase(m, cycle.translation())?.has_irrational_part() {
                    out.add_term(m.clone(), *c);
                }
            }
        }
        Ok(out)
    }

    fn check_dim(&self, d: usize) -> Result<(), TorusError> {
        if d != self.dim() {
            return Err(TorusError::Dimension {
                expected: self.dim(),
                found: d,
            });
        }
        Ok(())
    }
}

/// Integer form of an affine map for fast powers: one coefficient vector per
/// irrational symbol plus a rational vector over a common denominator.
/// Every operation is checked, and `None` sends callers to the phase path.
struct FlatAffine {
    matrix: IntMatrix,
    symbols: Vec<Irrational>,
    coeffs: Vec<Vec<i128>>,
    rat: Vec<i128>,
    den: i128,
}

impl FlatAffine {
    fn new(t: &AffineSystem) -> Option<FlatAffine> {
        let d = t.dim();
        let mut symbols: Vec<Irrational> = Vec::new();
        for b in &t.translation {
            for (s, _) in b.terms() {
                if !symbols.contains(s) {
                    symbols.push(s.clone());
                }
            }
        }
        symbols.sort();
        let coeffs = symbols
            .iter()
            .map(|s| t.translation.iter().map(|b| b.coefficient(s)).collect())
            .collect();
        let mut den: i128 = 1;
        for b in &t.translation {
            let q = b.rational_part().1 as i128;
            den = den.checked_mul(q / den.gcd(&q))?;
        }
        if den > 1 << 62 {
            return None;
        }
        let rat = t
            .translation
            .iter()
            .map(|b| {
                let (p, q) = b.rational_part();
                p as i128 * (den / q as i128)
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(rat.len(), d);
        Some(FlatAffine {
            matrix: t.matrix.clone(),
            symbols,
            coeffs,
            rat,
            den,
        })
    }

    fn identity(&self) -> FlatAffine {
        let d = self.matrix.len();
        FlatAffine {
            matrix: identity_matrix(d),
            symbols: self.symbols.clone(),
            coeffs: vec![vec![0; d]; self.symbols.len()],
            rat: vec![0; d],
            den: self.den,
        }
    }

    fn compose(&self, other: &FlatAffine) -> Option<FlatAffine> {
        let matrix = mat_mul(&self.matrix, &other.matrix)?;
        let apply = |v: &[i128], w: &[i128]| -> Option<Vec<i128>> {
            self.matrix
                .iter()
                .zip(w)
                .map(|(row, &wi)| {
                    row.iter()
                        .zip(v)
                        .try_fold(wi, |acc, (&a, &x)| acc.checked_add((a as i128).checked_mul(x)?))
                })
                .collect()
        };
        let coeffs = other
            .coeffs
            .iter()
            .zip(&self.coeffs)
            .map(|(v, w)| apply(v, w))
            .collect::<Option<Vec<_>>>()?;
        let den = self.den;
        let reduced: Vec<Vec<i128>> = self
            .matrix
            .iter()
            .map(|row| row.iter().map(|&a| (a as i128).rem_euclid(den)).collect())
            .collect();
        let rat = reduced
            .iter()
            .zip(&self.rat)
            .map(|(row, &wi)| {
                row.iter().zip(&other.rat).try_fold(wi, |acc, (&a, &x)| {
                    Some((acc + mulmod_i128(a, x, den)?).rem_euclid(den))
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(FlatAffine {
            matrix,
            symbols: self.symbols.clone(),
            coeffs,
            rat,
            den,
        })
    }

    fn power(&self, mut n: u64) -> Option<FlatAffine> {
        let mut acc = self.identity();
        let mut base = FlatAffine {
            matrix: self.matrix.clone(),
            symbols: self.symbols.clone(),
            coeffs: self.coeffs.clone(),
            rat: self.rat.clone(),
            den: self.den,
        };
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base)?;
            }
        }
        Some(acc)
    }

    fn into_system(self) -> Result<AffineSystem, TorusError> {
        let d = self.matrix.len();
        let mut translation = Vec::with_capacity(d);
        for i in 0..d {
            let mut b = Phase::rational(self.rat[i], self.den)?;
            for (s, v) in self.symbols.iter().zip(&self.coeffs) {
                b = b.add(&Phase::irrational(s.clone(), v[i]))?;
            }
            translation.push(b);
        }
        Ok(AffineSystem {
            matrix: self.matrix,
            translation,
        })
    }
}

/// `a·b mod m` for `0 ≤ a, b < m ≤ 2^62`.
fn mulmod_i128(a: i128, b: i128, m: i128) -> Option<i128> {
    Some(a.checked_mul(b)?.rem_euclid(m))
}

impl fmt::Debug for AffineSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x ↦ {:?}x + (", self.matrix)?;
        for (i, b) in self.translation.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(")")
    }
}

/// Free-function forms used by the drivers.
pub fn system_power(t: &AffineSystem, n: i64) -> Result<AffineSystem, TorusError> {
    t.power(n)
}

pub fn pushforward(t: &AffineSystem, f: &CharVector, n: i64) -> Result<CharVector, TorusError> {
    t.pushforward(f, n)
}

pub fn invariant_projection(t: &AffineSystem, f: &CharVector) -> Result<CharVector, TorusError> {
    t.invariant_projection(f)
}

/// `m·b` as a formal phase.
pub fn index_phase(m: &CharIndex, b: &[Phase]) -> Result<Phase, TorusError> {
    if b.iter().all(Phase::is_zero) {
        return Ok(Phase::zero());
    }
    let mut acc = Phase::zero();
    match m.coords() {
        Coords::Small(v) => {
            for (x, p) in v.iter().zip(b) {
                acc = acc.add(&p.scale(*x as i128)?)?;
            }
        }
        Coords::Big(v) => {
            for (x, p) in v.iter().zip(b) {
                acc = acc.add(&p.scale_big(x)?)?;
            }
        }
        Coords::Residual => return Err(TorusError::InexactIndex { index: m.to_string() }),
    }
    Ok(acc)
}

/// lcm of all k with φ(k) ≤ d. The period of any finite orbit of a d×d
/// integer matrix divides it.
pub fn finite_order_bound(d: usize) -> u64 {
    let mut l: u64 = 1;
    // φ(k) ≥ √(k/2), so k ≤ 2d² covers every candidate
    for k in 1..=(2 * d * d + 2) as u64 {
        if totient(k) <= d as u64 {
            l = l.lcm(&k);
        }
    }
    l
}

fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Period of `m` under `at`, `None` when the orbit is certified infinite.
fn orbit_period(at: &IntMatrix, m: &CharIndex, horizon: u64) -> Result<Option<u64>, TorusError> {
    if m.is_zero() {
        return Ok(Some(1));
    }
    let mut k = m.apply_matrix(at);
    let mut steps = 1u64;
    loop {
        if k == *m {
            return Ok(Some(steps));
        }
        if steps >= horizon || k.bits().is_some_and(|b| b > ORBIT_BITS) {
            return Ok(None);
        }
        if steps >= ORBIT_CAP {
            return Err(TorusError::OrbitCap {
                index: m.to_string(),
                steps,
            });
        }
        k = k.apply_matrix(at);
        steps += 1;
    }
}

fn identity_matrix(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn transpose(a: &IntMatrix) -> IntMatrix {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| a[j][i]).collect()).collect()
}

fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    let d = a.len();
    let mut out = vec![vec![0i64; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc: i128 = 0;
            for k in 0..d {
                acc = acc.checked_add(a[i][k] as i128 * b[k][j] as i128)?;
            }
            out[i][j] = i64::try_from(acc).ok()?;
        }
    }
    Some(out)
}

fn mat_phase(a: &IntMatrix, b: &[Phase]) -> Result<Vec<Phase>, TorusError> {
    a.iter()
        .map(|row| {
            row.iter().zip(b).try_fold(Phase::zero(), |acc, (x, p)| {
                if *x == 0 || p.is_zero() {
                    Ok(acc)
                } else {
                    acc.add(&p.scale(*x as i128)?)
                }
            })
        })
        .collect()
}

fn to_rational(a: &IntMatrix) -> Vec<Vec<BigRational>> {
    a.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect()
}

pub fn determinant(a: &IntMatrix) -> BigInt {
    big_determinant(to_rational(a))
}

/// Whether some eigenvalue of `a` is a root of unity, i.e. `det(a^k − I) = 0`
/// for some `k` with `φ(k) ≤ d`.
pub fn has_root_of_unity_eigenvalue(a: &IntMatrix) -> bool {
    let d = a.len();
    let big: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut power = big.clone();
    for k in 1..=(2 * d * d + 2) as u64 {
        if k > 1 {
            power = big_mat_mul(&power, &big);
        }
        if totient(k) > d as u64 {
            continue;
        }
        let shifted: Vec<Vec<BigRational>> = power
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, x)| BigRational::from_integer(if i == j { x - 1 } else { x.clone() }))
                    .collect()
            })
            .collect();
        if big_determinant(shifted).is_zero() {
            return true;
        }
    }
    false
}

fn big_determinant(mut m: Vec<Vec<BigRational>>) -> BigInt {
    let d = m.len();
    let mut det = BigRational::one();
    for col in 0..d {
        let Some(pivot) = (col..d).find(|&r| !m[r][col].is_zero()) else {
            return BigInt::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col].clone();
        for r in col + 1..d {
            let factor = &m[r][col] / &m[col][col];
            for c in col..d {
                let v = &factor * &m[col][c];
                m[r][c] -= v;
            }
        }
    }
    det.to_integer()
}

fn integer_inverse(a: &IntMatrix) -> Option<IntMatrix> {
    let d = a.len();
    let mut m = to_rational(a);
    let mut inv: Vec<Vec<BigRational>> = to_rational(&identity_matrix(d));
    for col in 0..d {
        let pivot = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        inv.swap(pivot, col);
        let p = m[col][col].clone();
        for c in 0..d {
            m[col][c] = &m[col][c] / &p;
            inv[col][c] = &inv[col][c] / &p;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..d {
                    let v = &factor * &m[col][c];
                    m[r][c] -= v;
                    let w = &factor * &inv[col][c];
                    inv[r][c] -= w;
                }
            }
        }
    }
    inv.iter()
        .map(|row| {
            row.iter()
                .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
                .collect()
        })
        .collect()
}

fn big_power_index(at: &IntMatrix, mut e: u64, m: &CharIndex) -> CharIndex {
    let mut v: Vec<BigInt> = m.exact().expect("exact index");
    let mut base: Vec<Vec<BigInt>> = at.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    while e > 0 {
        if e & 1 == 1 {
            v = base
                .iter()
                .map(|row| row.iter().zip(&v).fold(BigInt::zero(), |acc, (a, x)| acc + a * x))
                .collect();
        }
        e >>= 1;
        if e > 0 {
            base = big_mat_mul(&base, &base);
        }
    }
    CharIndex::from_big(v, m.prime_set())
}

fn big_mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).fold(BigInt::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

/// `at^e` reduced modulo each prime of `set`.
fn residue_matrix_power(at: &IntMatrix, mut e: u64, set: PrimeSet) -> Vec<Vec<Residues>> {
    let moduli = set.moduli();
    let d = at.len();
    let reduce = |x: i64| moduli.map(|p| x.rem_euclid(p as i64) as u64);
    let mut base: Vec<Vec<Residues>> = at.iter().map(|r| r.iter().map(|&x| reduce(x)).collect()).collect();
    let mut acc: Vec<Vec<Residues>> = identity_matrix(d)
        .iter()
        .map(|r| r.iter().map(|&x| reduce(x)).collect())
        .collect();
    let mul = |a: &Vec<Vec<Residues>>, b: &Vec<Vec<Residues>>| -> Vec<Vec<Residues>> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        [0, 1, 2].map(|s| {
                            let p = moduli[s];
                            (0..d).fold(0u64, |t, k| (t + mulmod(a[i][k][s], b[k][j][s], p)) % p)
                        })
                    })
                    .collect()
            })
            .collect()
    };
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base);
        }
    }
    acc
}

/// Evaluates a trigonometric polynomial at a point given in turns.
pub fn evaluate(f: &CharVector, x: &[f64]) -> Complex64 {
    f.iter()
        .map(|(m, c)| {
            let v = m.small().expect("small index");
            let t: f64 = v.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
            c * Complex64::from_polar(1.0, std::f64::consts::TAU * t.rem_euclid(1.0))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alpha() -> Irrational {
        Irrational::sqrt2_minus_1("alpha")
    }

    fn skew() -> AffineSystem {
        AffineSystem::skew_product(&alpha())
    }

    #[test]
    fn skew_power_two() {
        let t2 = skew().power(2).unwrap();
        assert_eq!(t2.matrix(), &vec![vec![1, 0], vec![2, 1]]);
        assert_eq!(t2.translation()[0], Phase::irrational(alpha(), 2));
        assert_eq!(t2.translation()[1], Phase::irrational(alpha(), 1));
    }

    #[test]
    fn skew_translation_is_binomial() {
        for n in [0i64, 1, 3, 10, 1000, 123_457] {
            let t = skew().power(n).unwrap();
            let c2 = (n as i128) * (n as i128 - 1) / 2;
            assert_eq!(t.translation()[0], Phase::irrational(alpha(), n as i128));
            assert_eq!(t.translation()[1], Phase::irrational(alpha(), c2));
        }
    }

    #[test]
    fn power_zero_is_identity() {
        assert_eq!(skew().power(0).unwrap(), AffineSystem::identity(2));
        assert_eq!(AffineSystem::cat_map().power(0).unwrap(), AffineSystem::identity(2));
    }

    #[test]
    fn rotation_power() {
        let r = AffineSystem::rotation(vec![Phase::irrational(alpha(), 1)]);
        assert_eq!(r.power(5).unwrap().translation()[0], Phase::irrational(alpha(), 5));
        assert_eq!(r.power(-3).unwrap().translation()[0], Phase::irrational(alpha(), -3));
    }

    #[test]
    fn negative_powers_invert() {
        let t = skew();
        let back = t.power(-7).unwrap().compose(&t.power(7).unwrap()).unwrap();
        assert_eq!(back, AffineSystem::identity(2));
        let c = AffineSystem::cat_map();
        assert_eq!(c.power(-5).unwrap().compose(&c.power(5).unwrap()).unwrap(), AffineSystem::identity(2));
    }

    #[test]
    fn overflow_names_multiplier() {
        // the third translation coordinate grows like C(n,3)·α
        let t = AffineSystem::new(
            vec![vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]],
            vec![Phase::irrational(alpha(), 1), Phase::zero(), Phase::zero()],
        )
        .unwrap();
        assert!(t.power(1_000_000).is_ok());
        let err = t.power(100_000_000_000_000).unwrap_err();
        assert!(matches!(err, TorusError::Overflow { .. }), "{err}");
    }

    #[test]
    fn non_unimodular_rejected() {
        let err = AffineSystem::new(vec![vec![2, 0], vec![0, 1]], vec![Phase::zero(), Phase::zero()]).unwrap_err();
        assert_eq!(err, TorusError::NotUnimodular { det: 2 });
        assert!(err.to_string().contains("det ≠ ±1"));
    }

    #[test]
    fn skew_pushforward_of_fiber_character() {
        let f = CharVector::character(&[0, 1]);
        let g = skew().pushforward(&f, 2).unwrap();
        let expected = CharVector::from_index(CharIndex::new(&[2, 1]), Phase::irrational(alpha(), 1).unit());
        assert_eq!(g, expected);
        assert_eq!(skew().pushforward(&f, 0).unwrap(), f);
    }

    #[test]
    fn pushforward_matches_pointwise_composition() {
        // f∘T∘T evaluated on a 64×64 grid
        let f = CharVector::character(&[0, 1]);
        let g = skew().pushforward(&f, 2).unwrap();
        let a = alpha().to_f64();
        let mut worst: f64 = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let (x, y) = (i as f64 / 64.0, j as f64 / 64.0);
                let (x1, y1) = (x + a, y + x);
                let (x2, y2) = (x1 + a, y1 + x1);
                let direct = evaluate(&f, &[x2, y2]);
                worst = worst.max((direct - evaluate(&g, &[x, y])).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn rotation_eigenfunction() {
        let r = AffineSystem::rotation(vec![Phase::irrational(alpha(), 1)]);
        let f = CharVector::character(&[1]);
        let g = r.pushforward(&f, 9).unwrap();
        assert_eq!(g, f.scale(Phase::irrational(alpha(), 9).unit()));
    }

    #[test]
    fn projection_examples() {
        let r = AffineSystem::rotation(vec![Phase::irrational(alpha(), 1)]);
        let c = Complex64::new(0.3, -0.2);
        let f = CharVector::constant(1, c).add(&CharVector::character(&[1]));
        assert_eq!(r.invariant_projection(&f).unwrap(), CharVector::constant(1, c));
        let e = CharVector::character(&[3, 0]);
        assert!(skew().invariant_projection(&e).unwrap().is_empty());
        let g = CharVector::character(&[2, -5]).add(&CharVector::character(&[0, 1]));
        assert_eq!(AffineSystem::identity(2).invariant_projection(&g).unwrap(), g);
    }

    #[test]
    fn projection_averages_finite_cycles() {
        // the flip x ↦ -x has cycles {m, -m}
        let flip = AffineSystem::new(vec![vec![-1]], vec![Phase::zero()]).unwrap();
        let p = flip.invariant_projection(&CharVector::character(&[2])).unwrap();
        let half = Complex64::new(0.5, 0.0);
        assert_eq!(p, CharVector::from_terms(1, [(CharIndex::new(&[2]), half), (CharIndex::new(&[-2]), half)]));
        // with a half-turn translation the cycle phase is e(2·1/2) = 1 for even m only
        let shifted = AffineSystem::new(vec![vec![-1]], vec![Phase::rational(1, 2).unwrap()]).unwrap();
        assert!(shifted.invariant_projection(&CharVector::character(&[1])).is_ok());
    }

    #[test]
    fn projection_drops_hyperbolic_orbits() {
        let f = CharVector::character(&[1, 0]).add(&CharVector::constant(2, Complex64::new(2.0, 0.0)));
        let p = AffineSystem::cat_map().invariant_projection(&f).unwrap();
        assert_eq!(p, CharVector::constant(2, Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn skew_mean_is_direct_average() {
        // Cesàro average of e(3nα) for n ≤ 10^5
        let n = 100_000;
        let a = alpha();
        let s: Complex64 = (1..=n).map(|k| Phase::irrational(a.clone(), 3 * k as i128).unit()).sum();
        assert!((s / n as f64).norm() < 1e-3);
        assert!(skew().invariant_projection(&CharVector::character(&[3, 0])).unwrap().is_empty());
    }

    #[test]
    fn finite_order_bounds() {
        assert_eq!(finite_order_bound(1), 2);
        assert_eq!(finite_order_bound(2), 12);
        assert_eq!(finite_order_bound(3), 12);
        assert_eq!(finite_order_bound(4), 120);
    }

    #[test]
    fn finite_order_matrix_cycles() {
        // order-6 element of GL(2,Z)
        let r = AffineSystem::new(vec![vec![1, -1], vec![1, 0]], vec![Phase::zero(), Phase::zero()]).unwrap();
        assert_eq!(r.power(6).unwrap(), AffineSystem::identity(2));
        let p = r.invariant_projection(&CharVector::character(&[1, 0])).unwrap();
        assert_eq!(p.len(), 6);
        assert!((p.norm_sqr() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn cat_map_large_powers_agree_across_paths() {
        let c = AffineSystem::cat_map();
        let m = CharIndex::new(&[1, 0]);
        for n in [10u64, 90, 200, 3000] {
            let exact = c.exact_orbit_index(&m, n);
            let residual = c.residue_orbit_index(&m, n);
            assert_eq!(exact, residual);
            let (auto, phase) = c.pushforward_char(&m, n as i64).unwrap();
            assert_eq!(auto, exact);
            assert!(phase.is_zero());
        }
        assert_ne!(c.residue_orbit_index(&m, 3000), c.residue_orbit_index(&m, 3001));
    }

    #[test]
    fn commutation() {
        let c = AffineSystem::cat_map();
        assert!(c.commutes_with(&c.power(2).unwrap()).unwrap());
        assert!(!c.matrices_commute(&skew()));
        let r1 = AffineSystem::rotation(vec![Phase::irrational(alpha(), 1), Phase::zero()]);
        assert!(r1.commutes_with(&AffineSystem::rotation(vec![Phase::zero(), Phase::rational(1, 3).unwrap()])).unwrap());
    }

    #[test]
    fn product_system_is_block_diagonal() {
        let r = AffineSystem::rotation(vec![Phase::irrational(alpha(), 1)]);
        let p = skew().product(&r);
        assert_eq!(p.matrix(), &vec![vec![1, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]);
        assert_eq!(p.dim(), 3);
    }

    fn arb_system() -> impl Strategy<Value = AffineSystem> {
        prop_oneof![
            Just(AffineSystem::skew_product(&Irrational::sqrt2_minus_1("alpha"))),
            Just(AffineSystem::rotation(vec![
                Phase::irrational(Irrational::golden_conjugate("beta"), 1),
                Phase::rational(1, 3).unwrap()
            ])),
            Just(AffineSystem::cat_map()),
            Just(
                AffineSystem::new(
                    vec![vec![1, -1], vec![1, 0]],
                    vec![Phase::irrational(Irrational::sqrt2_minus_1("alpha"), 1), Phase::zero()]
                )
                .unwrap()
            ),
        ]
    }

    fn arb_vector() -> impl Strategy<Value = CharVector> {
        proptest::collection::vec((-5i64..5, -5i64..5, -1.0f64..1.0, -1.0f64..1.0), 1..6).prop_map(|t| {
            CharVector::from_terms(2, t.into_iter().map(|(a, b, re, im)| (CharIndex::new(&[a, b]), Complex64::new(re, im))))
        })
    }

    proptest! {
        #[test]
        fn unitarity(t in arb_system(), f in arb_vector(), n in -40i64..40) {
            let g = t.pushforward(&f, n).unwrap();
            prop_assert!((g.norm_sqr() - f.norm_sqr()).abs() <= 1e-14 * f.norm_sqr().max(1.0));
            prop_assert_eq!(g.len(), f.len());
        }

        #[test]
        fn group_law(t in arb_system(), f in arb_vector(), m in -20i64..20, n in -20i64..20) {
            let lhs = t.pushforward(&f, m + n).unwrap();
            let rhs = t.pushforward(&t.pushforward(&f, n).unwrap(), m).unwrap();
            prop_assert_eq!(lhs.len(), rhs.len());
            for (k, c) in lhs.iter() {
                prop_assert!((rhs.get(k) - c).norm() < 1e-12);
            }
            // formal phases of iterates compose exactly
            let p = t.power(m).unwrap().compose(&t.power(n).unwrap()).unwrap();
            prop_assert_eq!(p, t.power(m + n).unwrap());
        }

        #[test]
        fn projection_is_idempotent(t in arb_system(), f in arb_vector()) {
            let p = t.invariant_projection(&f).unwrap();
            let pp = t.invariant_projection(&p).unwrap();
            prop_assert_eq!(p.len(), pp.len());
            for (k, c) in p.iter() {
                prop_assert!((pp.get(k) - c).norm() < 1e-12);
            }
        }
    }
}
