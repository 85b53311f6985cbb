//! Integer sequences `k_n` and their lagged differences.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::fixed;

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("sequence value overflows 128 bits at n = {n}")]
    Overflow { n: i128 },
    #[error("floor of n^c is ambiguous at n = {n} (within 2^-64 of {candidate})")]
    Ambiguous { n: i128, candidate: i128 },
    #[error("polynomial is not integer-valued: p({n}) = {value}")]
    NotIntegerValued { n: i128, value: String },
    #[error("table has no entry for n = {n}")]
    OutOfTable { n: i128 },
    #[error("sequences are indexed from n = 1, got {n}")]
    NonPositive { n: i128 },
    #[error("invalid exponent: {0}")]
    Exponent(String),
}

/// A real exponent `c = int + frac/2^128`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    int: u64,
    frac: u128,
}

impl Exponent {
    pub fn new(int: u64, frac: u128) -> Result<Self, SeqError> {
        if int == 0 && frac == 0 {
            return Err(SeqError::Exponent("c must be positive".into()));
        }
        Ok(Exponent { int, frac })
    }

    /// Parses a decimal such as `1.5` or `2.71828`, truncating to 128 bits.
    pub fn from_decimal(text: &str) -> Result<Self, SeqError> {
        let bad = || SeqError::Exponent(format!("`{text}` is not a positive decimal"));
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let digits = frac.trim_end_matches('0');
        let frac = if digits.is_empty() {
            0
        } else {
            let num = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
            let den = BigUint::from(10u32).pow(digits.len() as u32);
            ((num << 128usize) / den).to_u128().ok_or_else(bad)?
        };
        Exponent::new(int, frac)
    }

    pub fn int_part(&self) -> u64 {
        self.int
    }

    pub fn frac_part(&self) -> u128 {
        self.frac
    }

    pub fn to_f64(&self) -> f64 {
        self.int as f64 + crate::torus::turns_to_f64(self.frac)
    }

    pub fn is_integer(&self) -> bool {
        self.frac == 0
    }

    /// `c = a / 2^k` with `k ≤ 6`, when the exponent is such a dyadic.
    fn small_dyadic(&self) -> Option<(u64, u32)> {
        let k = if self.frac == 0 { 0 } else { 128 - self.frac.trailing_zeros() };
        if k > 6 {
            return None;
        }
        if k == 0 {
            return Some((self.int, 0));
        }
        Some(((self.int << k) + (self.frac >> (128 - k)) as u64, k))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.small_dyadic() {
            Some((a, k)) if k > 0 => write!(f, "{a}/{}", 1u64 << k),
            _ if self.frac == 0 => write!(f, "{}", self.int),
            _ => write!(f, "{}+0x{:032x}/2^128", self.int, self.frac),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum SeqSpec {
    /// `Σ_j c_j·C(n, j)`.
    Polynomial { binomial: Vec<i128> },
    /// `⌊n^c⌋`.
    FloorPower { exponent: Exponent },
    /// `k_1, k_2, …` listed explicitly.
    Table { values: Vec<i128> },
    /// `k_{n+lag} − k_n` of another sequence.
    Difference { base: Box<SeqSpec>, lag: u64 },
}

fn binomial(n: i128, j: usize) -> Option<i128> {
    let mut b: i128 = 1;
    for i in 0..j as i128 {
        b = b.checked_mul(n - i)? / (i + 1);
    }
    Some(b)
}

impl SeqSpec {
    /// Integer power-basis coefficients, lowest degree first.
    pub fn polynomial(coeffs: &[i128]) -> Result<SeqSpec, SeqError> {
        let r: Vec<Rational> = coeffs.iter().map(|&c| Rational::from_integer(c)).collect();
        SeqSpec::polynomial_rational(&r)
    }

    /// Rational power-basis coefficients; the polynomial must take integer
    /// values on the integers.
    pub fn polynomial_rational(coeffs: &[Rational]) -> Result<SeqSpec, SeqError> {
        let deg = coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
        let mut values: Vec<i128> = Vec::with_capacity(deg + 1);
        for n in 0..=deg as i128 {
            let mut v = Rational::zero();
            for c in coeffs[..=deg.min(coeffs.len().saturating_sub(1))].iter().rev() {
                v = v * Rational::from_integer(n) + c;
            }
            if !v.is_integer() {
                return Err(SeqError::NotIntegerValued { n, value: v.to_string() });
            }
            values.push(v.to_integer());
        }
        Ok(SeqSpec::Polynomial {
            binomial: forward_differences(values),
        })
    }

    /// `n^k`.
    pub fn monomial(k: usize) -> SeqSpec {
        let mut c = vec![0; k + 1];
        c[k] = 1;
        SeqSpec::polynomial(&c).expect("monomial")
    }

    pub fn floor_power(exponent: Exponent) -> SeqSpec {
        SeqSpec::FloorPower { exponent }
    }

    pub fn table(values: Vec<i128>) -> SeqSpec {
        SeqSpec::Table { values }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            SeqSpec::Polynomial { binomial } => Some(binomial.iter().rposition(|c| *c != 0).unwrap_or(0)),
            _ => None,
        }
    }

    /// Power-basis coefficients of a polynomial sequence, lowest first.
    pub fn power_coeffs(&self) -> Option<Vec<Rational>> {
        let SeqSpec::Polynomial { binomial } = self else {
            return None;
        };
        let mut out = vec![Rational::zero(); binomial.len().max(1)];
        // C(n,j) = n(n−1)…(n−j+1)/j!
        let mut falling = vec![Rational::from_integer(1)];
        let mut fact: i128 = 1;
        for (j, &c) in binomial.iter().enumerate() {
            if j > 0 {
                fact *= j as i128;
                let shift = Rational::from_integer(-(j as i128 - 1));
                let mut next = vec![Rational::zero(); falling.len() + 1];
                for (i, a) in falling.iter().enumerate() {
                    next[i + 1] += *a;
                    next[i] += *a * shift;
                }
                falling = next;
            }
            for (i, a) in falling.iter().enumerate() {
                out[i] += *a * Rational::new(c, fact);
            }
        }
        Some(out)
    }

    /// Exact `k_n`. Floors of `n^c` that cannot be certified are errors.
    pub fn eval(&self, n: i128) -> Result<i128, SeqError> {
        match self.eval_flagged(n)? {
            (v, false) => Ok(v),
            (v, true) => Err(SeqError::Ambiguous { n, candidate: v }),
        }
    }

    /// `k_n` together with the floor-ambiguity flag.
    pub fn eval_flagged(&self, n: i128) -> Result<(i128, bool), SeqError> {
        match self {
            SeqSpec::Polynomial { binomial } => {
                let mut acc: i128 = 0;
                for (j, &c) in binomial.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let term = binomial_of(n, j)?.checked_mul(c).ok_or(SeqError::Overflow { n })?;
                    acc = acc.checked_add(term).ok_or(SeqError::Overflow { n })?;
                }
                Ok((acc, false))
            }
            SeqSpec::FloorPower { exponent } => floor_power(*exponent, n),
            SeqSpec::Table { values } => {
                if n < 1 || n as usize > values.len() {
                    return Err(SeqError::OutOfTable { n });
                }
                Ok((values[n as usize - 1], false))
            }
            SeqSpec::Difference { base, lag } => {
                let (a, fa) = base.eval_flagged(n + *lag as i128)?;
                let (b, fb) = base.eval_flagged(n)?;
                Ok((a.checked_sub(b).ok_or(SeqError::Overflow { n })?, fa || fb))
            }
        }
    }

    /// `n ↦ k_{n+h} − k_n`. Polynomials stay in closed form, tables shrink by `h`.
    pub fn diff(&self, h: u64) -> Result<SeqSpec, SeqError> {
        match self {
            SeqSpec::Polynomial { binomial } => {
                let deg = binomial.len();
                let values = (0..deg.max(1) as i128)
                    .map(|n| Ok(self.eval(n + h as i128)? - self.eval(n)?))
                    .collect::<Result<Vec<_>, SeqError>>()?;
                Ok(SeqSpec::Polynomial {
                    binomial: forward_differences(values),
                })
            }
            SeqSpec::Table { values } => Ok(SeqSpec::Table {
                values: values
                    .iter()
                    .zip(values.iter().skip(h as usize))
                    .map(|(a, b)| b - a)
                    .collect(),
            }),
            _ => Ok(SeqSpec::Difference {
                base: Box::new(self.clone()),
                lag: h,
            }),
        }
    }
}

fn binomial_of(n: i128, j: usize) -> Result<i128, SeqError> {
    binomial(n, j).ok_or(SeqError::Overflow { n })
}

fn forward_differences(mut values: Vec<i128>) -> Vec<i128> {
    let mut out = Vec::with_capacity(values.len());
    while !values.is_empty() {
        out.push(values[0]);
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

fn floor_power(c: Exponent, n: i128) -> Result<(i128, bool), SeqError> {
    if n < 1 {
        return Err(SeqError::NonPositive { n });
    }
    let base = BigUint::from(n as u128);
    if let Some((a, k)) = c.small_dyadic() {
        let v = base.pow(a as u32).nth_root(1u32 << k);
        return v.to_i128().map(|v| (v, false)).ok_or(SeqError::Overflow { n });
    }
    let y = (fixed::from_parts(c.int, c.frac) * fixed::ln_int(&base)) >> fixed::PREC;
    let (floor, frac) = fixed::split(&fixed::exp(&y));
    let v = floor.to_i128().ok_or(SeqError::Overflow { n })?;
    if fixed::near_integer(&frac, 64) {
        return Ok((if frac > (num_bigint::BigInt::from(1) << (fixed::PREC - 1)) { v + 1 } else { v }, true));
    }
    Ok((v, false))
}

impl fmt::Debug for SeqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqSpec::Polynomial { .. } => {
                let coeffs = self.power_coeffs().unwrap_or_default();
                let mut first = true;
                for (i, c) in coeffs.iter().enumerate().rev() {
                    if c.is_zero() && !(i == 0 && first) {
                        continue;
                    }
                    if !first {
                        f.write_str(" + ")?;
                    }
                    first = false;
                    match i {
                        0 => write!(f, "{c}")?,
                        1 => write!(f, "{c}·n")?,
                        _ => write!(f, "{c}·n^{i}")?,
                    }
                }
                Ok(())
            }
            SeqSpec::FloorPower { exponent } => write!(f, "⌊n^{exponent}⌋"),
            SeqSpec::Table { values } => write!(f, "table{values:?}"),
            SeqSpec::Difference { base, lag } => write!(f, "Δ_{lag}[{base:?}]"),
        }
    }
}

/// `k_n` for `n = 1..=N`.
pub fn seq_values(spec: &SeqSpec, n_max: u64) -> Result<Vec<i128>, SeqError> {
    (1..=n_max as i128).map(|n| spec.eval(n)).collect()
}

pub fn seq_eval(spec: &SeqSpec, n: i128) -> Result<i128, SeqError> {
    spec.eval(n)
}

pub fn diff_profile(spec: &SeqSpec, h: u64) -> Result<SeqSpec, SeqError> {
    spec.diff(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn examples() {
        assert_eq!(SeqSpec::monomial(2).eval(7), Ok(49));
        let c = Exponent::from_decimal("1.5").unwrap();
        assert_eq!(SeqSpec::floor_power(c).eval(4), Ok(8));
        let tri = SeqSpec::polynomial_rational(&[r(0, 1), r(-1, 2), r(1, 2)]).unwrap();
        assert_eq!(tri.eval(5), Ok(10));
    }

    #[test]
    fn non_integer_valued_rejected() {
        assert!(matches!(
            SeqSpec::polynomial_rational(&[r(0, 1), r(1, 2)]),
            Err(SeqError::NotIntegerValued { .. })
        ));
    }

    #[test]
    fn differences() {
        let sq = SeqSpec::monomial(2);
        assert_eq!(sq.diff(1).unwrap(), SeqSpec::polynomial(&[1, 2]).unwrap());
        assert_eq!(sq.diff(3).unwrap(), SeqSpec::polynomial(&[9, 6]).unwrap());
        let t = SeqSpec::table(vec![1, 4, 9, 16]);
        assert_eq!(t.diff(2).unwrap(), SeqSpec::table(vec![8, 12]));
        let cube = SeqSpec::monomial(3);
        assert_eq!(cube.diff(1).unwrap().degree(), Some(2));
    }

    #[test]
    fn floor_power_difference_is_lazy() {
        let s = SeqSpec::floor_power(Exponent::from_decimal("1.5").unwrap());
        let d = s.diff(2).unwrap();
        assert_eq!(d.eval(2), Ok(8 - 2));
    }

    #[test]
    fn dyadic_exponents_are_exact() {
        let s = SeqSpec::floor_power(Exponent::from_decimal("1.5").unwrap());
        for n in 1..2000i128 {
            let v = s.eval(n).unwrap();
            // v = ⌊√(n³)⌋
            assert!(v * v <= n * n * n && (v + 1) * (v + 1) > n * n * n);
        }
    }

    #[test]
    fn general_exponents_agree_with_exact_dyadic_path() {
        // 1.5 − 2^-128 takes the log/exp path
        let c = Exponent::new(1, (1u128 << 127) - 1).unwrap();
        let exact = SeqSpec::floor_power(Exponent::from_decimal("1.5").unwrap());
        let general = SeqSpec::floor_power(c);
        for n in 2..500i128 {
            let e = exact.eval(n).unwrap();
            match general.eval_flagged(n).unwrap() {
                (v, false) => assert_eq!(v, e, "{n}"),
                // n^1.5 is an integer exactly when n is a square
                (_, true) => assert_eq!(e * e, n * n * n, "{n}"),
            }
        }
    }

    #[test]
    fn irrational_exponent_against_f64() {
        let c = Exponent::from_decimal("2.5819").unwrap();
        let s = SeqSpec::floor_power(c);
        for n in 1..3000i128 {
            let x = (n as f64).powf(2.5819);
            if (x - x.round()).abs() < 1e-6 {
                continue;
            }
            assert_eq!(s.eval(n).unwrap(), x.floor() as i128, "{n}");
        }
    }

    #[test]
    fn power_coeffs_round_trip() {
        let p = SeqSpec::polynomial_rational(&[r(3, 1), r(-1, 6), r(0, 1), r(1, 6)]).unwrap();
        assert_eq!(p.power_coeffs().unwrap(), vec![r(3, 1), r(-1, 6), r(0, 1), r(1, 6)]);
    }

    #[test]
    fn table_bounds() {
        let t = SeqSpec::table(vec![5]);
        assert_eq!(t.eval(2), Err(SeqError::OutOfTable { n: 2 }));
    }

    #[test]
    fn overflow_reported() {
        assert_eq!(SeqSpec::monomial(9).eval(1i128 << 20), Err(SeqError::Overflow { n: 1 << 20 }));
    }

    proptest! {
        #[test]
        fn binomial_basis_matches_rational_evaluation(
            num in proptest::collection::vec(-50i128..50, 1..5),
            n in -100_000i128..100_000,
        ) {
            // p(n) = Σ a_j C(n,j) is integer-valued; compare against its power form
            let spec = SeqSpec::Polynomial { binomial: num.clone() };
            let coeffs = spec.power_coeffs().unwrap();
            let mut direct = Rational::zero();
            for c in coeffs.iter().rev() {
                direct = direct * Rational::from_integer(n) + c;
            }
            prop_assert!(direct.is_integer());
            prop_assert_eq!(spec.eval(n).unwrap(), direct.to_integer());
        }
    }
}
