//! The sets `R_k = {n : n^k α mod 1 ∈ window}`.

use super::spec::SeqError;
use crate::torus::{ratio_to_turns, Irrational, Turns};

/// A closed window `[lo_num/lo_den, hi_num/hi_den] ⊆ [0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: (u64, u64),
    pub hi: (u64, u64),
}

impl Window {
    pub fn new(lo: (u64, u64), hi: (u64, u64)) -> Option<Window> {
        let ok = lo.1 > 0 && hi.1 > 0 && lo.0 <= lo.1 && hi.0 <= hi.1 && (lo.0 as u128 * hi.1 as u128) <= (hi.0 as u128 * lo.1 as u128);
        ok.then_some(Window { lo, hi })
    }

    pub fn quarter_to_three_quarters() -> Window {
        Window { lo: (1, 4), hi: (3, 4) }
    }

    pub fn full() -> Window {
        Window { lo: (0, 1), hi: (1, 1) }
    }

    pub fn length(&self) -> f64 {
        self.hi.0 as f64 / self.hi.1 as f64 - self.lo.0 as f64 / self.lo.1 as f64
    }

    /// Smallest turn value at or above the lower end, and whether the end is
    /// representable exactly.
    fn lower(&self) -> Option<(Turns, bool)> {
        let (p, q) = self.lo;
        if p == q {
            return None;
        }
        let (t, exact) = ratio_to_turns(p as u128, q as u128);
        Some(if exact { (t, true) } else { (t + 1, false) })
    }

    /// Largest turn value at or below the upper end; `None` means 1.
    fn upper(&self) -> Option<(Turns, bool)> {
        let (p, q) = self.hi;
        if p == q {
            return None;
        }
        Some(ratio_to_turns(p as u128, q as u128))
    }

    pub fn contains(&self, t: Turns) -> bool {
        let above = match self.lower() {
            Some((lo, _)) => t >= lo,
            None => t == 0 && self.hi.0 == self.hi.1,
        };
        let below = match self.upper() {
            Some((hi, _)) => t <= hi,
            None => true,
        };
        above && below
    }
}

#[derive(Clone, Debug)]
pub struct RkSpec {
    pub k: u32,
    pub alpha: Irrational,
    pub window: Window,
}

impl RkSpec {
    pub fn new(k: u32, alpha: Irrational) -> RkSpec {
        RkSpec {
            k,
            alpha,
            window: Window::quarter_to_three_quarters(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RkSet {
    pub members: Vec<u64>,
    /// `n` whose value lies within the fixed-point truncation error of
    /// `n^k α` from a window end; membership there is decided on the
    /// truncated value.
    pub boundary: Vec<u64>,
}

pub fn rk_enumerate(spec: &RkSpec, n_max: u64) -> Result<RkSet, SeqError> {
    let mut out = RkSet::default();
    let ends: Vec<Turns> = [spec.window.lower(), spec.window.upper()]
        .into_iter()
        .flatten()
        .map(|(t, _)| t)
        .collect();
    for n in 1..=n_max {
        let power = (n as i128).checked_pow(spec.k).ok_or(SeqError::Overflow { n: n as i128 })?;
        let t = spec.alpha.times(power);
        if spec.window.contains(t) {
            out.members.push(n);
        }
        // truncating α to 128 bits moves n^k α by less than n^k·2^-128
        let margin = power as u128 + 1;
        if ends.iter().any(|&e| t.abs_diff(e) <= margin) {
            out.boundary.push(n);
        }
    }
    Ok(out)
}
