//! Exact search intervals.
//!
//! Endpoints are stored as integers over a common denominator `4^depth`.
//! Every trim multiplies the denominator by 4, so the new endpoints and the
//! interior arms `lo + k (hi - lo) / 4` stay exact no matter how many phases
//! run.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// `[lo / 4^depth, hi / 4^depth]` with `lo < hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactInterval {
    lo: BigUint,
    hi: BigUint,
    depth: u32,
}

impl ExactInterval {
    /// The unit interval [0, 1].
    pub fn unit() -> Self {
        Self { lo: BigUint::zero(), hi: BigUint::from(1u32), depth: 0 }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn lower(&self) -> f64 {
        to_f64(&self.lo, 2 * self.depth)
    }

    pub fn upper(&self) -> f64 {
        to_f64(&self.hi, 2 * self.depth)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower(), self.upper())
    }

    pub fn len(&self) -> f64 {
        to_f64(&(&self.hi - &self.lo), 2 * self.depth)
    }

    /// The three quartile points `lo + k (hi - lo) / 4`, `k = 1, 2, 3`.
    pub fn quartiles(&self) -> [f64; 3] {
        let width = &self.hi - &self.lo;
        let base = &self.lo << 2u32;
        let bits = 2 * (self.depth + 1);
        [1u32, 2, 3].map(|k| to_f64(&(&base + &width * k), bits))
    }

    /// Drops the left quarter: `[x1, hi]`.
    pub fn trim_left(&self) -> Self {
        Self {
            lo: (&self.lo << 2u32) + (&self.hi - &self.lo),
            hi: &self.hi << 2u32,
            depth: self.depth + 1,
        }
    }

    /// Drops the right quarter: `[lo, x3]`.
    pub fn trim_right(&self) -> Self {
        Self {
            lo: &self.lo << 2u32,
            hi: (&self.hi << 2u32) - (&self.hi - &self.lo),
            depth: self.depth + 1,
        }
    }

    /// True when `inner` is contained in `self` and its length is exactly
    /// `3/4` of this interval's length.
    pub fn is_quarter_trim_of(&self, inner: &ExactInterval) -> bool {
        if inner.depth != self.depth + 1 {
            return false;
        }
        let (lo, hi) = (&self.lo << 2u32, &self.hi << 2u32);
        let outer_len = &hi - &lo;
        let inner_len = &inner.hi - &inner.lo;
        lo <= inner.lo && inner.hi <= hi && &inner_len * 4u32 == outer_len * 3u32
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

impl fmt::Display for ExactInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower(), self.upper())
    }
}

/// `num / 2^bits` rounded to the nearest double.
fn to_f64(num: &BigUint, bits: u32) -> f64 {
    let width = num.bits();
    if width <= 64 {
        let n = num.to_u64().expect("fits in 64 bits");
        return n as f64 * 2f64.powi(-(bits as i32));
    }
    // Keep the top 64 bits; the dropped tail is below double precision.
    let shift = (width - 64) as u32;
    let top = (num >> shift).to_u64().expect("fits in 64 bits");
    top as f64 * 2f64.powi(shift as i32 - bits as i32)
}
