//! Constant-resolved affine address functions: the program an address
//! generation unit executes. A function emits the stream
//! `addr(i2, i1) = base + s2*i2 + s1*i1` for `i2 in 0..n2`, `i1 in 0..n1`,
//! one address per step, outer level optional.

use std::fmt;

/// Optional second (outer) level of an address function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level2 {
    pub s2: i64,
    pub n2: u32,
}

/// Up-to-two-level affine address stream generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AffineAddressFn {
    pub base: i64,
    pub s1: i64,
    pub n1: u32,
    pub level2: Option<Level2>,
}

impl AffineAddressFn {
    pub fn one_level(base: i64, s1: i64, n1: u32) -> Self {
        assert!(n1 >= 1, "count must be positive");
        AffineAddressFn {
            base,
            s1,
            n1,
            level2: None,
        }
    }

    pub fn two_level(base: i64, s1: i64, n1: u32, s2: i64, n2: u32) -> Self {
        assert!(n1 >= 1 && n2 >= 1, "counts must be positive");
        AffineAddressFn {
            base,
            s1,
            n1,
            level2: Some(Level2 { s2, n2 }),
        }
    }

    /// Total number of addresses in the stream.
    pub fn total(&self) -> u64 {
        self.n1 as u64 * self.level2.map(|l| l.n2 as u64).unwrap_or(1)
    }

    /// The address visited at stream position `pos` (`0 <= pos < total`).
    pub fn at(&self, pos: u64) -> i64 {
        let n1 = self.n1 as u64;
        let (i2, i1) = (pos / n1, pos % n1);
        let s2 = self.level2.map(|l| l.s2).unwrap_or(0);
        self.base + s2 * i2 as i64 + self.s1 * i1 as i64
    }

    /// Enumerate the full address stream in visit order.
    pub fn stream(&self) -> Vec<i64> {
        (0..self.total()).map(|p| self.at(p)).collect()
    }

    /// Smallest and largest address visited.
    pub fn bounds(&self) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        // Extremes occur at corner index combinations.
        let n2 = self.level2.map(|l| l.n2 as i64 - 1).unwrap_or(0);
        let s2 = self.level2.map(|l| l.s2).unwrap_or(0);
        for i2 in [0, n2] {
            for i1 in [0, self.n1 as i64 - 1] {
                let a = self.base + s2 * i2 + self.s1 * i1;
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        (lo, hi)
    }

    /// True when no address is visited twice.
    pub fn is_injective(&self) -> bool {
        let mut s = self.stream();
        let len = s.len();
        s.sort_unstable();
        s.dedup();
        s.len() == len
    }
}

impl fmt::Display for AffineAddressFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level2 {
            None => write!(f, "base={}, s1={}, n1={}", self.base, self.s1, self.n1),
            Some(l2) => write!(
                f,
                "base={}, s1={}, n1={}, s2={}, n2={}",
                self.base, self.s1, self.n1, l2.s2, l2.n2
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_level_stream() {
        let f = AffineAddressFn::one_level(4, 2, 4);
        assert_eq!(f.stream(), vec![4, 6, 8, 10]);
        assert_eq!(f.total(), 4);
        assert_eq!(f.bounds(), (4, 10));
        assert!(f.is_injective());
    }

    #[test]
    fn two_level_stream_row_major() {
        let f = AffineAddressFn::two_level(0, 1, 2, 8, 3);
        assert_eq!(f.stream(), vec![0, 1, 8, 9, 16, 17]);
    }

    #[test]
    fn zero_step_is_not_injective() {
        let f = AffineAddressFn::one_level(5, 0, 3);
        assert_eq!(f.stream(), vec![5, 5, 5]);
        assert!(!f.is_injective());
    }

    #[test]
    fn negative_step_bounds() {
        let f = AffineAddressFn::one_level(10, -2, 4);
        assert_eq!(f.stream(), vec![10, 8, 6, 4]);
        assert_eq!(f.bounds(), (4, 10));
    }

    #[test]
    fn overlapping_two_level() {
        // windows of 4 sliding by 1: addresses repeat
        let f = AffineAddressFn::two_level(0, 1, 4, 1, 4);
        assert!(!f.is_injective());
        assert_eq!(f.at(4), 1);
    }
}
