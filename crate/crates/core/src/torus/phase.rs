//! Formal phases: integer combinations of declared irrationals plus a
//! rational, reduced mod 1. Equality to zero is decided symbolically; the
//! fixed-point value is only used when a phase is turned into a unit complex.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use smallvec::SmallVec;

use super::error::{overflow, TorusError};
use super::irrational::{ratio_to_turns, unit, Irrational, Turns};

const MAX_DEN: u128 = 1 << 62;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase {
    // sorted by symbol, no zero coefficients
    terms: SmallVec<[(Irrational, i128); 2]>,
    // num/den in [0,1), reduced
    num: u64,
    den: u64,
}

impl Phase {
    pub fn zero() -> Self {
        Phase {
            terms: SmallVec::new(),
            num: 0,
            den: 1,
        }
    }

    pub fn irrational(symbol: Irrational, coeff: i128) -> Self {
        let mut p = Phase::zero();
        if coeff != 0 {
            p.terms.push((symbol, coeff));
        }
        p
    }

    /// The rational p/q reduced mod 1.
    pub fn rational(p: i128, q: i128) -> Result<Self, TorusError> {
        if q == 0 {
            return Err(TorusError::PhaseSyntax {
                text: format!("{p}/{q}"),
                reason: "zero denominator".into(),
            });
        }
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        let q = q as u128;
        if q > MAX_DEN {
            return Err(TorusError::Denominator { den: q });
        }
        let r = p.rem_euclid(q as i128) as u128;
        let g = r.gcd(&q);
        Ok(Phase {
            terms: SmallVec::new(),
            num: (r / g) as u64,
            den: (q / g) as u64,
        })
    }

    pub fn terms(&self) -> &[(Irrational, i128)] {
        &self.terms
    }

    /// Rational part as (numerator, denominator), numerator in [0, denominator).
    pub fn rational_part(&self) -> (u64, u64) {
        (self.num, self.den)
    }

    pub fn coefficient(&self, symbol: &Irrational) -> i128 {
        self.terms
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    }

    /// Formally zero mod 1: no irrational part and an integral rational part.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.num == 0
    }

    pub fn has_irrational_part(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn add(&self, other: &Phase) -> Result<Phase, TorusError> {
        let mut terms: SmallVec<[(Irrational, i128); 2]> = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, _) => std::cmp::Ordering::Greater,
            };
            match take_left {
                std::cmp::Ordering::Less => {
                    terms.push(self.terms[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    terms.push(other.terms[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = self.terms[i]
                        .1
                        .checked_add(other.terms[j].1)
                        .ok_or_else(|| overflow(format!("coefficient of {}", self.terms[i].0)))?;
                    if c != 0 {
                        terms.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        let (num, den) = add_rational(self.num, self.den, other.num, other.den)?;
        Ok(Phase { terms, num, den })
    }

    pub fn neg(&self) -> Phase {
        let terms = self.terms.iter().map(|(s, c)| (s.clone(), -c)).collect();
        let num = if self.num == 0 { 0 } else { self.den - self.num };
        Phase {
            terms,
            num,
            den: self.den,
        }
    }

    pub fn sub(&self, other: &Phase) -> Result<Phase, TorusError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i128) -> Result<Phase, TorusError> {
        if k == 0 {
            return Ok(Phase::zero());
        }
        let mut terms = SmallVec::new();
        for (s, c) in &self.terms {
            let v = c
                .checked_mul(k)
                .ok_or_else(|| overflow(format!("coefficient {c}·{k} of {s}")))?;
            terms.push((s.clone(), v));
        }
        let den = self.den as i128;
        let num = (k.rem_euclid(den) * self.num as i128).rem_euclid(den) as u64;
        Ok(Phase {
            terms,
            num,
            den: self.den,
        }
        .normalized())
    }

    pub fn scale_big(&self, k: &BigInt) -> Result<Phase, TorusError> {
        if let Some(small) = k.to_i128() {
            return self.scale(small);
        }
        if self.terms.is_empty() {
            let den = BigInt::from(self.den);
            let r = k.mod_floor(&den).to_i128().unwrap_or(0);
            return self.scale(r);
        }
        let bits = k.bits();
        Err(overflow(format!(
            "{}-bit multiplier {} of phase {}",
            bits,
            if k.is_negative() { "(negative)" } else { "" },
            self
        )))
    }

    fn normalized(mut self) -> Phase {
        if self.num == 0 {
            self.den = 1;
        } else {
            let g = self.num.gcd(&self.den);
            self.num /= g;
            self.den /= g;
        }
        self
    }

    /// Fixed-point value mod 1.
    pub fn turns(&self) -> Turns {
        let mut t: Turns = 0;
        for (s, c) in &self.terms {
            t = t.wrapping_add(s.times(*c));
        }
        if self.num != 0 {
            t = t.wrapping_add(ratio_to_turns(self.num as u128, self.den as u128).0);
        }
        t
    }

    pub fn unit(&self) -> Complex64 {
        unit(self.turns())
    }

    /// Parses expressions such as `1/2+2*alpha`, `-alpha`, `3*beta-1/3`.
    pub fn parse(
        text: &str,
        lookup: impl Fn(&str) -> Option<Irrational>,
    ) -> Result<Phase, TorusError> {
        let syntax = |reason: &str| TorusError::PhaseSyntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(syntax("empty expression"));
        }
        let mut acc = Phase::zero();
        let mut rest = compact.as_str();
        let mut first = true;
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1i128, &rest[1..]),
                b'-' => (-1i128, &rest[1..]),
                _ if first => (1i128, rest),
                _ => return Err(syntax("expected + or -")),
            };
            first = false;
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let term = &body[..end];
            rest = &body[end..];
            if term.is_empty() {
                return Err(syntax("empty term"));
            }
            let phase = parse_term(term, &lookup).map_err(|e| match e {
                TorusError::PhaseSyntax { reason, .. } => syntax(&reason),
                other => other,
            })?;
            acc = acc.add(&phase.scale(sign)?)?;
        }
        Ok(acc)
    }
}

fn parse_term(
    term: &str,
    lookup: &impl Fn(&str) -> Option<Irrational>,
) -> Result<Phase, TorusError> {
    let bad = |reason: String| TorusError::PhaseSyntax {
        text: term.to_string(),
        reason,
    };
    let (coeff, symbol) = match term.split_once('*') {
        Some((c, s)) => (Some(c), s),
        None => {
            if term.starts_with(|c: char| c.is_ascii_digit()) {
                (None, "")
            } else {
                (Some("1"), term)
            }
        }
    };
    if symbol.is_empty() {
        // pure rational: `p` or `p/q`
        let (p, q) = match term.split_once('/') {
            Some((p, q)) => (p, q),
            None => (term, "1"),
        };
        let p: i128 = p.parse().map_err(|_| bad(format!("bad numerator `{p}`")))?;
        let q: i128 = q.parse().map_err(|_| bad(format!("bad denominator `{q}`")))?;
        return Phase::rational(p, q);
    }
    let k: i128 = coeff
        .unwrap_or("1")
        .parse()
        .map_err(|_| bad("coefficient must be an integer".into()))?;
    if !symbol.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        || symbol.starts_with(|c: char| c.is_ascii_digit())
    {
        return Err(bad(format!("bad symbol `{symbol}`")));
    }
    let irr = lookup(symbol).ok_or_else(|| TorusError::UndeclaredSymbol {
        symbol: symbol.to_string(),
    })?;
    Ok(Phase::irrational(irr, k))
}

fn add_rational(a: u64, b: u64, c: u64, d: u64) -> Result<(u64, u64), TorusError> {
    if a == 0 {
        return Ok((c, d));
    }
    if c == 0 {
        return Ok((a, b));
    }
    let l = (b as u128).lcm(&(d as u128));
    if l > MAX_DEN {
        return Err(TorusError::Denominator { den: l });
    }
    let n = (a as u128 * (l / b as u128) + c as u128 * (l / d as u128)) % l;
    if n == 0 {
        return Ok((0, 1));
    }
    let g = n.gcd(&l);
    Ok(((n / g) as u64, (l / g) as u64))
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if self.num != 0 {
            write!(f, "{}/{}", self.num, self.den)?;
            wrote = true;
        }
        for (s, c) in &self.terms {
            let sign = if *c < 0 { "-" } else if wrote { "+" } else { "" };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}{s}")?;
            } else {
                write!(f, "{sign}{mag}*{s}")?;
            }
            wrote = true;
        }
        if !wrote {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phase({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> Irrational {
        Irrational::sqrt2_minus_1("alpha")
    }

    fn lookup(name: &str) -> Option<Irrational> {
        (name == "alpha").then(alpha)
    }

    #[test]
    fn parse_and_display() {
        let p = Phase::parse("1/2+2*alpha", lookup).unwrap();
        assert_eq!(p.coefficient(&alpha()), 2);
        assert_eq!(p.rational_part(), (1, 2));
        assert_eq!(p.to_string(), "1/2+2*alpha");
        assert_eq!(Phase::parse("-alpha + 3/2", lookup).unwrap().to_string(), "1/2-alpha");
        assert!(Phase::parse("0", lookup).unwrap().is_zero());
        assert_eq!(
            Phase::parse("beta", lookup),
            Err(TorusError::UndeclaredSymbol {
                symbol: "beta".into()
            })
        );
        assert!(Phase::parse("2**alpha", lookup).is_err());
        assert!(Phase::parse("", lookup).is_err());
    }

    #[test]
    fn cancellation_is_formal() {
        let a = Phase::irrational(alpha(), 7);
        assert!(a.sub(&a).unwrap().is_zero());
        let r = Phase::rational(1, 3).unwrap();
        assert!(r.scale(3).unwrap().is_zero());
        assert!(!r.scale(2).unwrap().is_zero());
    }

    #[test]
    fn rational_scaling_reduces_mod_one() {
        let r = Phase::rational(3, 8).unwrap();
        assert_eq!(r.scale(-5).unwrap().rational_part(), (1, 8));
        assert_eq!(r.scale(i128::MAX).unwrap().rational_part(), ((i128::MAX % 8 * 3 % 8) as u64, 8));
    }

    #[test]
    fn overflow_names_the_symbol() {
        let p = Phase::irrational(alpha(), i128::MAX / 2);
        let err = p.scale(3).unwrap_err();
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn turns_of_combination() {
        let p = Phase::parse("1/4+alpha", lookup).unwrap();
        assert_eq!(p.turns(), alpha().value().wrapping_add(1u128 << 126));
    }
}
