//! Finite trigonometric polynomials on the d-torus, as vectors of L²(T^d) in
//! the orthonormal character basis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::index::CharIndex;

/// Sparse map from character index to complex amplitude. Zero amplitudes are
/// never stored; iteration order is deterministic.
#[derive(Clone, PartialEq, Default)]
pub struct CharVector {
    dim: usize,
    coeffs: BTreeMap<CharIndex, Complex64>,
}

impl CharVector {
    pub fn zero(dim: usize) -> Self {
        CharVector {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// The character `e_m`.
    pub fn character(m: &[i64]) -> Self {
        CharVector::from_index(CharIndex::new(m), Complex64::new(1.0, 0.0))
    }

    /// The constant function `c` on T^dim.
    pub fn constant(dim: usize, c: Complex64) -> Self {
        CharVector::from_index(CharIndex::zero(dim), c)
    }

    pub fn from_index(index: CharIndex, c: Complex64) -> Self {
        let mut v = CharVector::zero(index.dim());
        v.add_term(index, c);
        v
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (CharIndex, Complex64)>) -> Self {
        let mut v = CharVector::zero(dim);
        for (m, c) in terms {
            v.add_term(m, c);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CharIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn get(&self, m: &CharIndex) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    /// ∫ f dμ, the coefficient of the constant character.
    pub fn mean(&self) -> Complex64 {
        self.get(&CharIndex::zero(self.dim))
    }

    pub fn add_term(&mut self, m: CharIndex, c: Complex64) {
        assert_eq!(m.dim(), self.dim, "index dimension {} in a {}-torus vector", m.dim(), self.dim);
        if c == Complex64::default() {
            return;
        }
        match self.coeffs.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == Complex64::default() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// ⟨u, v⟩ = Σ u_m · conj(v_m).
    pub fn inner(&self, other: &CharVector) -> Complex64 {
        if self.coeffs.len() <= other.coeffs.len() {
            self.coeffs
                .iter()
                .filter_map(|(m, a)| other.coeffs.get(m).map(|b| a * b.conj()))
                .sum()
        } else {
            other
                .coeffs
                .iter()
                .filter_map(|(m, b)| self.coeffs.get(m).map(|a| a * b.conj()))
                .sum()
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> CharVector {
        CharVector::from_terms(self.dim, self.coeffs.iter().map(|(m, c)| (m.clone(), c * s)))
    }

    pub fn conj(&self) -> CharVector {
        CharVector::from_terms(self.dim, self.coeffs.iter().map(|(m, c)| (m.neg(), c.conj())))
    }

    pub fn add(&self, other: &CharVector) -> CharVector {
        let mut out = self.clone();
        for (m, c) in &other.coeffs {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &CharVector) -> CharVector {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Σ a_i v_i with zero-coefficient pruning.
    pub fn combine<'a>(dim: usize, terms: impl IntoIterator<Item = (Complex64, &'a CharVector)>) -> CharVector {
        let mut out = CharVector::zero(dim);
        for (a, v) in terms {
            for (m, c) in &v.coeffs {
                out.add_term(m.clone(), a * c);
            }
        }
        out
    }

    /// Pointwise product of functions: coefficient convolution, indices add.
    pub fn mul(&self, other: &CharVector) -> CharVector {
        assert_eq!(self.dim, other.dim);
        let mut out = CharVector::zero(self.dim);
        for (m, a) in &self.coeffs {
            for (k, b) in &other.coeffs {
                out.add_term(m.add(k), a * b);
            }
        }
        out
    }

    pub fn map_indices(&self, mut f: impl FnMut(&CharIndex) -> CharIndex) -> CharVector {
        CharVector::from_terms(self.dim, self.coeffs.iter().map(|(m, c)| (f(m), *c)))
    }
}

impl fmt::Debug for CharVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()
    }
}

/// Free-function forms of the basic operations.
pub fn char_inner(u: &CharVector, v: &CharVector) -> Complex64 {
    u.inner(v)
}

pub fn char_combine(dim: usize, terms: &[(Complex64, CharVector)]) -> CharVector {
    CharVector::combine(dim, terms.iter().map(|(a, v)| (*a, v)))
}

pub fn char_mul(u: &CharVector, v: &CharVector) -> CharVector {
    u.mul(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthonormal_characters() {
        let e10 = CharVector::character(&[1, 0]);
        let e01 = CharVector::character(&[0, 1]);
        assert_eq!(char_inner(&e10, &e10), c(1.0, 0.0));
        assert_eq!(char_inner(&e10, &e01), c(0.0, 0.0));
    }

    #[test]
    fn inner_is_linear_in_first_slot() {
        let u = char_combine(1, &[(c(2.0, 0.0), CharVector::character(&[1])), (c(0.0, 1.0), CharVector::character(&[2]))]);
        assert_eq!(char_inner(&u, &CharVector::character(&[2])), c(0.0, 1.0));
    }

    #[test]
    fn combine_prunes_and_sums() {
        let e1 = CharVector::character(&[1]);
        let e2 = CharVector::character(&[2]);
        assert!(char_combine(1, &[(c(1.0, 0.0), e1.clone()), (c(-1.0, 0.0), e1.clone())]).is_empty());
        let two = char_combine(1, &[(c(2.0, 0.0), e1.clone())]);
        assert_eq!(two.len(), 1);
        assert_eq!(two.get(&CharIndex::new(&[1])), c(2.0, 0.0));
        assert_eq!(char_combine(1, &[(c(1.0, 0.0), e1), (c(1.0, 0.0), e2)]).norm_sqr(), 2.0);
    }

    #[test]
    fn products_of_characters() {
        let p = char_mul(&CharVector::character(&[1, 0]), &CharVector::character(&[0, 1]));
        assert_eq!(p, CharVector::character(&[1, 1]));
        let q = char_mul(&CharVector::character(&[3, -2]), &CharVector::character(&[-3, 2]));
        assert_eq!(q, CharVector::constant(2, c(1.0, 0.0)));
    }

    #[test]
    fn cross_terms_cancel() {
        // (e1 + e2)(e1 − e2) = e2 − e4
        let e1 = CharVector::character(&[1]);
        let e2 = CharVector::character(&[2]);
        let a = e1.add(&e2);
        let b = e1.sub(&e2);
        let p = char_mul(&a, &b);
        let expected = CharVector::character(&[2]).sub(&CharVector::character(&[4]));
        assert_eq!(p, expected);
        assert_eq!(p.len(), 2);
    }

    proptest! {
        #[test]
        fn distinct_indices_are_orthogonal(a in -1000i64..1000, b in -1000i64..1000, x in -1000i64..1000, y in -1000i64..1000) {
            let u = CharVector::character(&[a, b]);
            let v = CharVector::character(&[x, y]);
            let expected = if (a, b) == (x, y) { 1.0 } else { 0.0 };
            prop_assert_eq!(u.inner(&v), c(expected, 0.0));
        }

        #[test]
        fn inner_is_conjugate_symmetric(coeffs in proptest::collection::vec((-3i64..3, -2.0f64..2.0, -2.0f64..2.0), 1..8),
                                        others in proptest::collection::vec((-3i64..3, -2.0f64..2.0, -2.0f64..2.0), 1..8)) {
            let u = CharVector::from_terms(1, coeffs.iter().map(|(m, re, im)| (CharIndex::new(&[*m]), c(*re, *im))));
            let v = CharVector::from_terms(1, others.iter().map(|(m, re, im)| (CharIndex::new(&[*m]), c(*re, *im))));
            let uv = u.inner(&v);
            let vu = v.inner(&u);
            prop_assert!((uv - vu.conj()).norm() < 1e-12);
            prop_assert!(u.inner(&u).im.abs() < 1e-12);
            prop_assert!((u.inner(&u).re - u.norm_sqr()).abs() < 1e-12);
        }
    }
}
