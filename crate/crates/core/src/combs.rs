//! Closed intervals of a leaf set, their comb classification and the
//! maximal combs `I_X`.
//!
//! Everything here is determined by the gap sequence `δ(x_i, x_{i+1})`:
//! a slice is closed iff both outside neighbours attach strictly above the
//! slice's own ancestor, and a closed slice splits at its unique minimum gap.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, internal, Result};
use crate::tree::{ancestor_raw, descendants, gaps_of, LeafSet, TreeParams};

/// 1-based inclusive slice `x_lo..x_hi` of a host leaf set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntervalRef {
    pub lo: usize,
    pub hi: usize,
}

impl IntervalRef {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return domain(format!("bad interval {lo}..{hi}"));
        }
        Ok(IntervalRef { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn check_in(&self, len: usize) -> Result<()> {
        if self.lo == 0 || self.lo > self.hi || self.hi > len {
            return domain(format!("interval {self} outside a set of size {len}"));
        }
        Ok(())
    }

    pub fn slice<'a>(&self, x: &'a [u32]) -> &'a [u32] {
        &x[self.lo - 1..self.hi]
    }
}

impl fmt::Display for IntervalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CombKind {
    Left,
    Right,
    Broken,
}

impl fmt::Display for CombKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombKind::Left => "Left",
            CombKind::Right => "Right",
            CombKind::Broken => "Broken",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombDescriptor {
    pub interval: IntervalRef,
    pub kind: CombKind,
    pub handle_len: usize,
    pub handle: IntervalRef,
    pub teeth: Option<IntervalRef>,
}

/// Comb on 0-based inclusive positions, as produced by [`Shape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RawComb {
    pub lo: usize,
    pub hi: usize,
    pub kind: CombKind,
    /// handle size; 0 for broken combs
    pub ell: usize,
}

impl RawComb {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Handle positions, 0-based inclusive.
    pub fn handle(&self) -> (usize, usize) {
        match self.kind {
            CombKind::Left => (self.lo, self.lo + self.ell - 1),
            CombKind::Right => (self.hi + 1 - self.ell, self.hi),
            CombKind::Broken => (self.lo, self.hi),
        }
    }

    pub fn teeth(&self) -> Option<(usize, usize)> {
        match self.kind {
            CombKind::Left => Some((self.lo + self.ell, self.hi)),
            CombKind::Right => Some((self.lo, self.hi - self.ell)),
            CombKind::Broken => None,
        }
    }

    pub fn descriptor(&self) -> CombDescriptor {
        let (hl, hh) = self.handle();
        CombDescriptor {
            interval: IntervalRef { lo: self.lo + 1, hi: self.hi + 1 },
            kind: self.kind,
            handle_len: self.ell,
            handle: IntervalRef { lo: hl + 1, hi: hh + 1 },
            teeth: self.teeth().map(|(a, b)| IntervalRef { lo: a + 1, hi: b + 1 }),
        }
    }

    /// The same comb seen in the index-reversed set.
    pub fn reversed(&self, t: usize) -> RawComb {
        let kind = match self.kind {
            CombKind::Left => CombKind::Right,
            CombKind::Right => CombKind::Left,
            CombKind::Broken => CombKind::Broken,
        };
        RawComb { lo: t - 1 - self.hi, hi: t - 1 - self.lo, kind, ell: self.ell }
    }
}

impl CombDescriptor {
    pub fn raw(&self) -> RawComb {
        RawComb { lo: self.interval.lo - 1, hi: self.interval.hi - 1, kind: self.kind, ell: self.handle_len }
    }
}

/// Gap sequence of a leaf set together with the leaf level `N + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    gaps: Vec<u8>,
    top: u8,
}

impl Shape {
    pub fn new(params: TreeParams, leaves: &[u32]) -> Shape {
        Shape { gaps: gaps_of(params.n_bits(), leaves), top: params.leaf_level() as u8 }
    }

    pub fn from_gaps(gaps: Vec<u8>, top: u8) -> Shape {
        Shape { gaps, top }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.gaps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn gaps(&self) -> &[u8] {
        &self.gaps
    }

    pub fn top(&self) -> u8 {
        self.top
    }

    pub fn reversed(&self) -> Shape {
        let mut gaps = self.gaps.clone();
        gaps.reverse();
        Shape { gaps, top: self.top }
    }

    /// Level of `a(x_lo, x_hi)`.
    #[inline]
    pub fn level(&self, lo: usize, hi: usize) -> u8 {
        if lo == hi {
            self.top
        } else {
            *self.gaps[lo..hi].iter().min().unwrap()
        }
    }

    #[inline]
    pub fn is_closed(&self, lo: usize, hi: usize) -> bool {
        let l = self.level(lo, hi);
        (lo == 0 || self.gaps[lo - 1] < l) && (hi + 1 == self.len() || self.gaps[hi] < l)
    }

    /// Position `j` of the root split: children are `lo..=j` and `j+1..=hi`.
    #[inline]
    pub fn split(&self, lo: usize, hi: usize) -> usize {
        let mut j = lo;
        for i in lo + 1..hi {
            if self.gaps[i] < self.gaps[j] {
                j = i;
            }
        }
        j
    }

    /// The `2t - 1` closed intervals, sorted by `(lo, hi)`.
    pub fn closed_intervals(&self) -> Vec<(usize, usize)> {
        let t = self.len();
        let mut out: Vec<(usize, usize)> = (0..t).map(|i| (i, i)).collect();
        for i in 0..self.gaps.len() {
            let g = self.gaps[i];
            let mut lo = i;
            while lo > 0 && self.gaps[lo - 1] > g {
                lo -= 1;
            }
            let mut hi = i + 1;
            while hi < self.gaps.len() && self.gaps[hi] > g {
                hi += 1;
            }
            out.push((lo, hi));
        }
        out.sort_unstable();
        out
    }

    /// Classification of a closed interval.
    pub fn classify(&self, lo: usize, hi: usize) -> RawComb {
        if lo == hi {
            return RawComb { lo, hi, kind: CombKind::Broken, ell: 0 };
        }
        let j = self.split(lo, hi);
        if j + 1 == hi {
            // peel singleton right children off the handle
            let mut a = j;
            while a > lo {
                let s = self.split(lo, a);
                if s + 1 != a {
                    break;
                }
                a = s;
            }
            RawComb { lo, hi, kind: CombKind::Left, ell: a - lo + 1 }
        } else if j == lo {
            let mut a = lo + 1;
            while a < hi {
                let s = self.split(a, hi);
                if s != a {
                    break;
                }
                a = s + 1;
            }
            RawComb { lo, hi, kind: CombKind::Right, ell: hi - a + 1 }
        } else {
            RawComb { lo, hi, kind: CombKind::Broken, ell: 0 }
        }
    }

    pub fn is_maximal(&self, c: &RawComb) -> bool {
        let right_ok = c.hi + 1 == self.len() || !self.is_closed(c.lo, c.hi + 1);
        let left_ok = c.lo == 0 || !self.is_closed(c.lo - 1, c.hi);
        match c.kind {
            CombKind::Left => right_ok,
            CombKind::Right => left_ok,
            CombKind::Broken => right_ok && left_ok,
        }
    }

    /// `I_X`, sorted by `(lo, hi)`.
    pub fn maximal_combs(&self) -> Vec<RawComb> {
        self.closed_intervals()
            .into_iter()
            .map(|(lo, hi)| self.classify(lo, hi))
            .filter(|c| self.is_maximal(c))
            .collect()
    }
}

fn check_set(params: TreeParams, x: &LeafSet) -> Result<()> {
    if x.is_empty() {
        return domain("empty leaf set");
    }
    for &v in x.iter() {
        params.check_leaf(v)?;
    }
    Ok(())
}

/// Closedness by both definitions: `I = X(a(x_p, x_q))`, and `a(x_p, x_q)` is
/// an ancestor of no outside element. The two are asserted to agree with
/// each other and with the gap criterion.
pub fn is_closed(params: TreeParams, x: &LeafSet, i: IntervalRef) -> Result<bool> {
    check_set(params, x)?;
    i.check_in(x.len())?;
    let u = ancestor_raw(params.n_bits(), x[i.lo - 1], x[i.hi - 1]);
    let by_descendants = descendants(params, x, &u).as_slice() == i.slice(x);
    let by_outside =
        x.iter().enumerate().filter(|(p, _)| !i.contains(p + 1)).all(|(_, &y)| !u.is_ancestor_of(params, y));
    let by_gaps = Shape::new(params, x).is_closed(i.lo - 1, i.hi - 1);
    if by_descendants != by_outside || by_outside != by_gaps {
        return internal(format!(
            "closedness disagreement on {x} slice {i}: (ii)={by_descendants} (ii*)={by_outside} gaps={by_gaps}"
        ));
    }
    Ok(by_descendants)
}

pub fn closed_intervals(params: TreeParams, x: &LeafSet) -> Result<Vec<IntervalRef>> {
    check_set(params, x)?;
    Ok(Shape::new(params, x)
        .closed_intervals()
        .into_iter()
        .map(|(lo, hi)| IntervalRef { lo: lo + 1, hi: hi + 1 })
        .collect())
}

pub fn classify(params: TreeParams, x: &LeafSet, i: IntervalRef) -> Result<CombDescriptor> {
    if !is_closed(params, x, i)? {
        return domain(format!("slice {i} of {x} is not closed"));
    }
    Ok(Shape::new(params, x).classify(i.lo - 1, i.hi - 1).descriptor())
}

pub fn is_maximal(params: TreeParams, x: &LeafSet, d: &CombDescriptor) -> bool {
    Shape::new(params, x).is_maximal(&d.raw())
}

pub fn maximal_combs(params: TreeParams, x: &LeafSet) -> Result<Vec<CombDescriptor>> {
    check_set(params, x)?;
    Ok(Shape::new(params, x).maximal_combs().iter().map(RawComb::descriptor).collect())
}

/// Outcome of the defining conditions for one candidate handle size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainCheck {
    pub handle_closed: bool,
    /// strict monotonicity of the δ chain through the teeth
    pub chain_by_delta: bool,
    /// every handle-plus-teeth-prefix is closed
    pub chain_by_closed: bool,
}

/// Left-comb conditions for handle size `ell` on the slice `i`.
pub fn left_conditions(params: TreeParams, x: &LeafSet, i: IntervalRef, ell: usize) -> Result<ChainCheck> {
    i.check_in(x.len())?;
    if ell == 0 || ell >= i.len() {
        return domain(format!("handle size {ell} invalid for {i}"));
    }
    let n = params.n_bits();
    let a_hi = i.lo + ell - 1;
    let handle_closed = is_closed(params, x, IntervalRef { lo: i.lo, hi: a_hi })?;
    let chain: Vec<u32> = (a_hi..i.hi).map(|p| crate::tree::delta_raw(n, x[p - 1], x[p])).collect();
    let chain_by_delta = chain.windows(2).all(|w| w[0] > w[1]);
    let mut chain_by_closed = true;
    for q in a_hi + 1..=i.hi {
        chain_by_closed &= is_closed(params, x, IntervalRef { lo: i.lo, hi: q })?;
    }
    Ok(ChainCheck { handle_closed, chain_by_delta, chain_by_closed })
}

/// Right-comb conditions for handle size `ell` on the slice `i`.
pub fn right_conditions(params: TreeParams, x: &LeafSet, i: IntervalRef, ell: usize) -> Result<ChainCheck> {
    i.check_in(x.len())?;
    if ell == 0 || ell >= i.len() {
        return domain(format!("handle size {ell} invalid for {i}"));
    }
    let n = params.n_bits();
    let a_lo = i.hi + 1 - ell;
    let handle_closed = is_closed(params, x, IntervalRef { lo: a_lo, hi: i.hi })?;
    // δ(b_1,b_2) < ... < δ(b_s, z) with z = min A
    let chain: Vec<u32> = (i.lo..a_lo).map(|p| crate::tree::delta_raw(n, x[p - 1], x[p])).collect();
    let chain_by_delta = chain.windows(2).all(|w| w[0] < w[1]);
    let mut chain_by_closed = true;
    for q in i.lo..a_lo {
        chain_by_closed &= is_closed(params, x, IntervalRef { lo: q, hi: i.hi })?;
    }
    Ok(ChainCheck { handle_closed, chain_by_delta, chain_by_closed })
}
