//! Named real numbers held as 128-bit fractions of a turn.
//!
//! A value `v` represents `v / 2^128 ∈ [0,1)`. Multiplying by an integer and
//! reducing mod 1 is a wrapping multiply on `u128`, which is exact for every
//! integer multiplier: `(k·v) mod 2^128` depends only on `k mod 2^128`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex64;

/// 2π as used when turning a fraction of a turn into an angle.
const TAU: f64 = std::f64::consts::TAU;

/// A point of the circle, `turns / 2^128`.
pub type Turns = u128;

/// A declared symbol with a pinned fixed-point value in [0,1).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Irrational {
    label: Arc<str>,
    value: Turns,
}

impl Irrational {
    pub fn new(label: impl Into<Arc<str>>, value: Turns) -> Self {
        Irrational {
            label: label.into(),
            value,
        }
    }

    /// √2 − 1 truncated to 128 fractional bits.
    pub fn sqrt2_minus_1(label: impl Into<Arc<str>>) -> Self {
        // floor(√2 · 2^128) = isqrt(2 · 2^256)
        let root = (BigUint::from(2u32) << 256usize).sqrt();
        let frac = root - (BigUint::from(1u32) << 128usize);
        Irrational::new(label, biguint_to_u128(&frac))
    }

    /// (√5 − 1)/2, the fractional part of the golden ratio, truncated to 128 bits.
    pub fn golden_conjugate(label: impl Into<Arc<str>>) -> Self {
        let root = (BigUint::from(5u32) << 256usize).sqrt();
        let frac = (root - (BigUint::from(1u32) << 128usize)) >> 1usize;
        Irrational::new(label, biguint_to_u128(&frac))
    }

    /// floor(p/q · 2^128) for 0 ≤ p < q. Used for test doubles and rational points.
    pub fn from_ratio(label: impl Into<Arc<str>>, p: u64, q: u64) -> Self {
        assert!(q > 0 && p < q, "ratio must lie in [0,1)");
        let (t, _) = ratio_to_turns(p as u128, q as u128);
        Irrational::new(label, t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self) -> Turns {
        self.value
    }

    /// `k·value mod 1`, exact.
    pub fn times(&self, k: i128) -> Turns {
        (k as u128).wrapping_mul(self.value)
    }

    pub fn to_f64(&self) -> f64 {
        turns_to_f64(self.value)
    }

    /// Fixed-point value as 32 hex digits, the pinned form used in configs.
    pub fn hex(&self) -> String {
        format!("0x{:032x}", self.value)
    }

    pub fn parse_hex(text: &str) -> Option<Turns> {
        let digits = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")).unwrap_or(text);
        if digits.is_empty() || digits.len() > 32 {
            return None;
        }
        u128::from_str_radix(digits, 16).ok()
    }
}

impl fmt::Debug for Irrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.label, self.hex())
    }
}

impl fmt::Display for Irrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn biguint_to_u128(x: &BigUint) -> u128 {
    let digits = x.to_u64_digits();
    assert!(digits.len() <= 2, "value does not fit 128 bits");
    let lo = digits.first().copied().unwrap_or(0) as u128;
    let hi = digits.get(1).copied().unwrap_or(0) as u128;
    (hi << 64) | lo
}

/// floor(p/q · 2^128) for p < q < 2^64, and whether the division was exact.
pub fn ratio_to_turns(p: u128, q: u128) -> (Turns, bool) {
    assert!(q > 0 && q < (1u128 << 64) && p < q);
    let num = p << 64;
    let hi = num / q;
    let r1 = num % q;
    let num = r1 << 64;
    let lo = num / q;
    let r2 = num % q;
    ((hi << 64) | lo, r2 == 0)
}

pub fn turns_to_f64(t: Turns) -> f64 {
    // top 64 bits carry all the precision an f64 can hold
    ((t >> 64) as u64) as f64 / 18446744073709551616.0 + ((t as u64) as f64) / 3.402823669209385e38
}

/// e^{2πi t}. Quarter turns are exact; elsewhere the angle is reduced to
/// [0, π/2) in fixed point before calling `sin_cos`.
pub fn unit(t: Turns) -> Complex64 {
    let quadrant = (t >> 126) as u8;
    let rest = t & ((1u128 << 126) - 1);
    let (c, s) = if rest == 0 {
        (1.0, 0.0)
    } else {
        let (s, c) = (turns_to_f64(rest) * TAU).sin_cos();
        (c, s)
    };
    match quadrant {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// Circular distance from `t` to the nearest integer, in turns.
pub fn dist_to_integer(t: Turns) -> f64 {
    let x = turns_to_f64(t);
    x.min(1.0 - x)
}
