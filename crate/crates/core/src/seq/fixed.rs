//! Big-integer fixed point with `PREC` fractional bits, enough for `n^c`
//! with `n^c < 2^128` to be correct to far below 2^-64.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const PREC: usize = 320;

fn one() -> BigInt {
    BigInt::one() << PREC
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> PREC
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << PREC) / b
}

/// atanh(z) for 0 ≤ z ≤ 1/3.
fn atanh(z: &BigInt) -> BigInt {
    let z2 = mul(z, z);
    let mut power = z.clone();
    let mut sum = BigInt::zero();
    let mut k = 1u32;
    while !power.is_zero() {
        sum += &power / k;
        power = mul(&power, &z2);
        k += 2;
    }
    sum
}

fn ln2() -> BigInt {
    atanh(&(one() / 3)) * 2
}

/// ln n for an integer n ≥ 1.
pub fn ln_int(n: &BigUint) -> BigInt {
    assert!(!n.is_zero());
    let e = n.bits() - 1;
    let m = (BigInt::from_biguint(Sign::Plus, n.clone()) << PREC) >> e as usize;
    let z = div(&(&m - one()), &(&m + one()));
    ln2() * BigInt::from(e) + atanh(&z) * 2
}

/// e^y for y ≥ 0.
pub fn exp(y: &BigInt) -> BigInt {
    assert!(!y.is_negative());
    let l2 = ln2();
    let k = (y / &l2).to_usize().expect("exponent range");
    let r = y - &l2 * BigInt::from(k);
    const HALVINGS: usize = 24;
    let r = r >> HALVINGS;
    let mut term = one();
    let mut sum = one();
    let mut i = 1u32;
    while !term.is_zero() {
        term = mul(&term, &r) / i;
        sum += &term;
        i += 1;
    }
    for _ in 0..HALVINGS {
        sum = mul(&sum, &sum);
    }
    sum << k
}

/// Fixed-point form of `int + frac/2^128`.
pub fn from_parts(int: u64, frac: u128) -> BigInt {
    (BigInt::from(int) << PREC) + (BigInt::from(frac) << (PREC - 128))
}

/// (floor, fractional part as a fraction of 2^PREC) of a non-negative value.
pub fn split(x: &BigInt) -> (BigInt, BigInt) {
    let mask = one() - 1;
    (x >> PREC, x & mask)
}

/// Whether the fractional part lies within 2^-bits of an integer.
pub fn near_integer(frac: &BigInt, bits: usize) -> bool {
    let eps = BigInt::one() << (PREC - bits);
    frac < &eps || frac > &(one() - eps)
}
