//! Three-way classification of vector data hazards.
//!
//! Given predecessor and successor access patterns, a dependency is *fake*
//! when the two address sets are disjoint (the edge can be removed), *weak*
//! when the successor traverses the same stream shifted by a constant
//! address delta and never reaches a shared location before the
//! predecessor does (the successor may start one cycle after the
//! predecessor starts), and *strong* otherwise (the successor must start
//! after the predecessor ends). Symbolic patterns are classified strong by
//! the caller.

use std::collections::BTreeMap;

use crate::affine::AffineAddressFn;

/// Constant-resolved access pattern of one READ or WRITE vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessPattern {
    pub fn_: AffineAddressFn,
    pub write: bool,
}

impl AccessPattern {
    pub fn read(fn_: AffineAddressFn) -> Self {
        AccessPattern { fn_, write: false }
    }
    pub fn write(fn_: AffineAddressFn) -> Self {
        AccessPattern { fn_, write: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepClass {
    Strong,
    Weak,
    Fake,
}

/// Streams longer than this are classified strong without enumeration.
const ENUM_LIMIT: u64 = 1 << 16;

/// Classify a dependency edge from `pred` to `succ`.
pub fn classify_dependency(pred: &AccessPattern, succ: &AccessPattern) -> DepClass {
    if pred.fn_.total() > ENUM_LIMIT || succ.fn_.total() > ENUM_LIMIT {
        return DepClass::Strong;
    }
    let sp = pred.fn_.stream();
    let ss = succ.fn_.stream();

    // visit positions per address
    let mut pred_pos: BTreeMap<i64, (u64, u64)> = BTreeMap::new(); // (first, last)
    for (k, a) in sp.iter().enumerate() {
        let e = pred_pos.entry(*a).or_insert((k as u64, k as u64));
        e.1 = k as u64;
    }
    let mut succ_pos: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for (k, a) in ss.iter().enumerate() {
        let e = succ_pos.entry(*a).or_insert((k as u64, k as u64));
        e.1 = k as u64;
    }

    let disjoint = pred_pos.keys().all(|a| !succ_pos.contains_key(a));
    if disjoint {
        return DepClass::Fake;
    }

    // uniform shift: equal-length streams with a constant elementwise delta
    if sp.len() == ss.len() && !sp.is_empty() {
        let delta = ss[0] - sp[0];
        let uniform = sp.iter().zip(ss.iter()).all(|(p, s)| s - p == delta);
        if uniform {
            // the predecessor must visit every shared address no later than
            // the successor does
            let dominated = pred_pos.iter().all(|(addr, (pf, pl))| {
                match succ_pos.get(addr) {
                    None => true,
                    Some((sf, sl)) => pf <= sf && pl <= sl,
                }
            });
            if dominated {
                return DepClass::Weak;
            }
        }
    }
    DepClass::Strong
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(base: i64, s1: i64, n1: u32) -> AffineAddressFn {
        AffineAddressFn::one_level(base, s1, n1)
    }

    #[test]
    fn disjoint_is_fake() {
        let p = AccessPattern::write(one(0, 1, 8));
        let s = AccessPattern::read(one(8, 1, 8));
        assert_eq!(classify_dependency(&p, &s), DepClass::Fake);
    }

    #[test]
    fn identical_is_weak() {
        let p = AccessPattern::write(one(0, 1, 8));
        let s = AccessPattern::read(one(0, 1, 8));
        assert_eq!(classify_dependency(&p, &s), DepClass::Weak);
    }

    #[test]
    fn overlapping_different_shape_is_strong() {
        let p = AccessPattern::write(one(0, 1, 8));
        let s = AccessPattern::read(one(0, 2, 4));
        assert_eq!(classify_dependency(&p, &s), DepClass::Strong);
    }

    #[test]
    fn forward_shift_is_weak_backward_is_strong() {
        let p = AccessPattern::write(one(0, 1, 8));
        let fwd = AccessPattern::read(one(1, 1, 8));
        let bwd = AccessPattern::read(one(-1, 1, 8));
        assert_eq!(classify_dependency(&p, &fwd), DepClass::Weak);
        // shifting backward makes the successor reach shared addresses first
        assert_eq!(classify_dependency(&p, &bwd), DepClass::Strong);
    }

    #[test]
    fn self_pattern_is_weak_even_with_revisits() {
        let f = AffineAddressFn::two_level(0, 1, 4, 1, 4);
        let p = AccessPattern::write(f);
        let s = AccessPattern::read(f);
        assert_eq!(classify_dependency(&p, &s), DepClass::Weak);
    }

    #[test]
    fn reversed_direction_same_footprint_is_strong() {
        let p = AccessPattern::write(one(7, -1, 8));
        let s = AccessPattern::read(one(0, 1, 8));
        assert_eq!(classify_dependency(&p, &s), DepClass::Strong);
    }

    #[test]
    fn fake_is_symmetric() {
        let a = AccessPattern::write(one(0, 2, 4));
        let b = AccessPattern::read(one(1, 2, 4));
        assert_eq!(classify_dependency(&a, &b), DepClass::Fake);
        assert_eq!(classify_dependency(&b, &a), DepClass::Fake);
    }
}
