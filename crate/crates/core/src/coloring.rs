//! Stepping-up colorings: the classical ψ on `k`-sets and the comb-based
//! χ₀ / χ on `(k + r)`-sets of `[2^N]`, driven by a family φ of colorings of
//! subsets of the level set `[N]`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combs::{CombDescriptor, CombKind, IntervalRef, RawComb, Shape};
use crate::error::{config, domain, internal, Result};
use crate::subsets::BinomTable;
use crate::tree::{ancestor_raw, LeafSet, TreeNode, TreeParams};

/// Largest `N` for which φ tables are stored explicitly.
pub const MAX_TABLE_LEVELS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Backing {
    Bits(Vec<u64>),
    Seeded(u64),
}

/// A 2-coloring of the `arity`-subsets of `[n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiTable {
    n: u32,
    arity: u32,
    backing: Backing,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

thread_local! {
    static LEVEL_BINOM: BinomTable = BinomTable::new(32);
}

/// Colex rank of the set encoded by a bit mask (bit `v - 1` for element `v`).
#[inline]
pub fn mask_rank(mask: u32) -> u64 {
    LEVEL_BINOM.with(|t| {
        let mut m = mask;
        let mut j = 1;
        let mut r = 0u64;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            r += t.get(v, j);
            j += 1;
            m &= m - 1;
        }
        r
    })
}

pub fn set_to_mask(set: &[u32]) -> u32 {
    set.iter().fold(0u32, |m, &v| m | 1 << (v - 1))
}

pub fn mask_to_set(mask: u32) -> Vec<u32> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

impl PhiTable {
    pub fn table_len(n: u32, arity: u32) -> u64 {
        crate::subsets::binom(n as u64, arity as u64).unwrap() as u64
    }

    pub fn from_fn(n: u32, arity: u32, mut f: impl FnMut(&[u32]) -> u8) -> Result<Self> {
        if n > MAX_TABLE_LEVELS {
            return config(format!("explicit tables need N <= {MAX_TABLE_LEVELS}"));
        }
        let len = Self::table_len(n, arity);
        let mut bits = vec![0u64; (len as usize).div_ceil(64)];
        let mut idx = 0usize;
        crate::subsets::for_each_subset(&(1..=n).collect::<Vec<_>>(), arity as usize, |s| {
            if f(s) & 1 == 1 {
                bits[idx / 64] |= 1 << (idx % 64);
            }
            idx += 1;
        });
        Ok(PhiTable { n, arity, backing: Backing::Bits(bits) })
    }

    pub fn from_bits(n: u32, arity: u32, bits: Vec<u64>) -> Result<Self> {
        let len = Self::table_len(n, arity) as usize;
        if bits.len() != len.div_ceil(64) {
            return config(format!("table for C({n},{arity}) needs {} words", len.div_ceil(64)));
        }
        Ok(PhiTable { n, arity, backing: Backing::Bits(bits) })
    }

    pub fn constant(n: u32, arity: u32, c: u8) -> Result<Self> {
        Self::from_fn(n, arity, |_| c)
    }

    pub fn random(n: u32, arity: u32, rng: &mut impl Rng) -> Result<Self> {
        Self::from_fn(n, arity, |_| rng.gen_range(0..2))
    }

    pub fn seeded(n: u32, arity: u32, seed: u64) -> Self {
        PhiTable { n, arity, backing: Backing::Seeded(seed) }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn bits(&self) -> Option<&[u64]> {
        match &self.backing {
            Backing::Bits(b) => Some(b),
            Backing::Seeded(_) => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.backing {
            Backing::Seeded(s) => Some(s),
            Backing::Bits(_) => None,
        }
    }

    #[inline]
    pub fn color_rank(&self, rank: u64) -> u8 {
        match &self.backing {
            Backing::Bits(b) => (b[(rank / 64) as usize] >> (rank % 64)) as u8 & 1,
            Backing::Seeded(s) => (mix64(s ^ mix64(((self.arity as u64) << 48) ^ rank)) & 1) as u8,
        }
    }

    /// Color of the set whose bit mask is `mask`; the caller guarantees the arity.
    #[inline]
    pub fn color_mask(&self, mask: u32) -> u8 {
        self.color_rank(mask_rank(mask))
    }

    pub fn color(&self, set: &[u32]) -> Result<u8> {
        if set.len() != self.arity as usize {
            return config(format!("φ of arity {} applied to {} elements", self.arity, set.len()));
        }
        if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&v| v == 0 || v > self.n) {
            return domain(format!("{set:?} is not a sorted subset of [{}]", self.n));
        }
        Ok(self.color_mask(set_to_mask(set)))
    }

    pub fn set_rank(&mut self, rank: u64, c: u8) -> Result<()> {
        match &mut self.backing {
            Backing::Bits(b) => {
                let (w, o) = ((rank / 64) as usize, rank % 64);
                b[w] = (b[w] & !(1 << o)) | ((c as u64 & 1) << o);
                Ok(())
            }
            Backing::Seeded(_) => config("seeded φ tables are read-only"),
        }
    }
}

/// The family `φ_i`, `r - 1 <= i <= k + r - 1`, on subsets of `[N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiFamily {
    n_levels: u32,
    r: u32,
    k: u32,
    tables: Vec<PhiTable>,
}

impl PhiFamily {
    pub fn new(n_levels: u32, r: u32, k: u32, tables: Vec<PhiTable>) -> Result<Self> {
        if r < 2 || n_levels == 0 {
            return config(format!("bad family parameters N={n_levels} r={r}"));
        }
        if tables.len() != k as usize + 1 {
            return config(format!("family needs {} tables, got {}", k + 1, tables.len()));
        }
        for (j, t) in tables.iter().enumerate() {
            if t.arity != r - 1 + j as u32 || t.n != n_levels {
                return config(format!(
                    "table {j} has arity {} on [{}], expected arity {} on [{n_levels}]",
                    t.arity,
                    t.n,
                    r - 1 + j as u32
                ));
            }
        }
        Ok(PhiFamily { n_levels, r, k, tables })
    }

    pub fn from_fn(n_levels: u32, r: u32, k: u32, mut f: impl FnMut(u32, &[u32]) -> u8) -> Result<Self> {
        let tables =
            (r - 1..=k + r - 1).map(|i| PhiTable::from_fn(n_levels, i, |s| f(i, s))).collect::<Result<Vec<_>>>()?;
        Self::new(n_levels, r, k, tables)
    }

    pub fn constant(n_levels: u32, r: u32, k: u32, c: u8) -> Result<Self> {
        Self::from_fn(n_levels, r, k, |_, _| c)
    }

    /// Uniformly random family; explicit tables when `N <= 16`, seeded hashing otherwise.
    pub fn random(n_levels: u32, r: u32, k: u32, seed: u64) -> Result<Self> {
        if n_levels > MAX_TABLE_LEVELS {
            let tables =
                (r - 1..=k + r - 1).map(|i| PhiTable::seeded(n_levels, i, seed.wrapping_add(i as u64))).collect();
            return Self::new(n_levels, r, k, tables);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tables =
            (r - 1..=k + r - 1).map(|i| PhiTable::random(n_levels, i, &mut rng)).collect::<Result<Vec<_>>>()?;
        Self::new(n_levels, r, k, tables)
    }

    pub fn n_levels(&self) -> u32 {
        self.n_levels
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn arity_range(&self) -> (u32, u32) {
        (self.r - 1, self.k + self.r - 1)
    }

    pub fn tables(&self) -> &[PhiTable] {
        &self.tables
    }

    pub fn table(&self, arity: u32) -> Result<&PhiTable> {
        let (lo, hi) = self.arity_range();
        if arity < lo || arity > hi {
            return config(format!("φ arity {arity} outside [{lo}, {hi}]"));
        }
        Ok(&self.tables[(arity - lo) as usize])
    }

    pub fn table_mut(&mut self, arity: u32) -> Result<&mut PhiTable> {
        let (lo, hi) = self.arity_range();
        if arity < lo || arity > hi {
            return config(format!("φ arity {arity} outside [{lo}, {hi}]"));
        }
        Ok(&mut self.tables[(arity - lo) as usize])
    }

    /// `φ_{|S|}(S)` for a set of levels given as a bit mask.
    #[inline]
    pub fn color_mask(&self, mask: u32) -> Result<u8> {
        Ok(self.table(mask.count_ones())?.color_mask(mask))
    }

    pub fn color(&self, set: &[u32]) -> Result<u8> {
        self.table(set.len() as u32)?.color(set)
    }
}

#[derive(Clone, Debug)]
pub struct StepupConfig {
    pub params: TreeParams,
    pub r: u32,
    pub k: u32,
    pub phi: Arc<PhiFamily>,
}

impl StepupConfig {
    pub fn new(params: TreeParams, r: u32, k: u32, phi: Arc<PhiFamily>) -> Result<Self> {
        if r < 4 {
            return config(format!(
                "r = {r}: the comb coloring needs r >= 4; smaller petal sizes are handled only by direct search"
            ));
        }
        if k < 1 {
            return config("kernel size k must be at least 1");
        }
        if phi.n_levels() != params.n_bits() {
            return config(format!("φ lives on [{}] but the tree has height {}", phi.n_levels(), params.n_bits()));
        }
        if phi.arity_range() != (r - 1, k + r - 1) {
            return config(format!("φ arities {:?} do not match [{}, {}]", phi.arity_range(), r - 1, k + r - 1));
        }
        Ok(StepupConfig { params, r, k, phi })
    }

    pub fn edge_size(&self) -> usize {
        (self.k + self.r) as usize
    }
}

pub fn mirror(params: TreeParams, x: &LeafSet) -> LeafSet {
    let top = params.leaf_count() + 1;
    LeafSet::new(x.iter().rev().map(|&v| top - v).collect()).expect("mirror keeps order")
}

/// The classical stepping-up coloring of `k`-sets.
pub fn ehr_psi(phi: &PhiTable, params: TreeParams, x: &LeafSet, k: usize) -> Result<u8> {
    if k < 4 {
        return domain(format!("ψ needs k >= 4, got {k}"));
    }
    if x.len() != k {
        return domain(format!("ψ expects {k} leaves, got {}", x.len()));
    }
    if phi.arity() as usize != k - 1 || phi.n() != params.n_bits() {
        return config("ψ needs a coloring of (k-1)-subsets of [N]");
    }
    let shape = Shape::new(params, x);
    let d = |i: usize| shape.gaps()[i - 1];
    let (a, b, c) = (d(k - 3), d(k - 2), d(k - 1));
    if a > b && b < c {
        return Ok(0);
    }
    if a < b && b > c {
        return Ok(1);
    }
    let mask = shape.gaps().iter().fold(0u32, |m, &g| m | 1 << (g - 1));
    if mask.count_ones() as usize == k - 1 {
        Ok(phi.color_mask(mask))
    } else {
        Ok(0)
    }
}

/// Longest strictly monotone run of `gaps[start..]`, as 0-based inclusive
/// gap positions; leftmost among the longest.
pub fn longest_monotone_run(gaps: &[u8], start: usize) -> Option<(usize, usize)> {
    if start >= gaps.len() {
        return None;
    }
    let mut best = (start, start);
    let mut run_lo = start;
    for i in start + 1..gaps.len() {
        if i >= start + 2 {
            let prev = gaps[i - 1] > gaps[i - 2];
            let cur = gaps[i] > gaps[i - 1];
            if prev != cur {
                run_lo = i - 1;
            }
        }
        if i - run_lo > best.1 - best.0 {
            best = (run_lo, i);
        }
    }
    Some(best)
}

/// Longest interval of `y` whose gaps from index `k - 3` on are strictly monotone.
pub fn find_monotone_interval(params: TreeParams, y: &LeafSet, k: usize) -> Result<IntervalRef> {
    if y.len() < k.max(2) {
        return domain(format!("need at least {} leaves, got {}", k.max(2), y.len()));
    }
    let shape = Shape::new(params, y);
    let start = k.saturating_sub(4);
    let (p, q) = longest_monotone_run(shape.gaps(), start)
        .ok_or_else(|| crate::Error::Domain("no gaps at or beyond k-3".into()))?;
    // gap p joins x_{p+1} and x_{p+2} (1-based)
    Ok(IntervalRef { lo: p + 1, hi: q + 2 })
}

/// Comb types 1 to 6.
pub type CombType = u8;

/// Per-comb evaluation inside one edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CombReport {
    pub comb: CombDescriptor,
    pub comb_type: CombType,
    pub color: u8,
    /// 0-based gap positions of the coloring data, left to right
    pub data_gaps: Vec<usize>,
}

/// The maximal combs of one edge with their types, computed once.
#[derive(Clone, Debug)]
pub struct EdgeCombs {
    pub shape: Shape,
    pub combs: Vec<RawComb>,
    pub types: Vec<CombType>,
}

impl EdgeCombs {
    pub fn new(shape: Shape, r: u32) -> EdgeCombs {
        let combs = shape.maximal_combs();
        let types = combs.iter().map(|c| type_of(&combs, c, r as usize)).collect();
        EdgeCombs { shape, combs, types }
    }

    pub fn position(&self, lo: usize, hi: usize) -> Option<usize> {
        self.combs.iter().position(|c| c.lo == lo && c.hi == hi)
    }

    /// χ₀ of comb `idx`.
    pub fn chi0(&self, idx: usize, phi: &PhiFamily, r: u32) -> Result<u8> {
        chi0_raw(&self.shape, &self.combs[idx], self.types[idx], phi, r as usize)
    }

    /// Parity of χ₀ over all maximal combs.
    pub fn chi(&self, phi: &PhiFamily, r: u32) -> Result<u8> {
        let mut acc = 0u8;
        for i in 0..self.combs.len() {
            if matches!(self.types[i], 2 | 6) {
                continue;
            }
            acc ^= self.chi0(i, phi, r)?;
        }
        Ok(acc)
    }

    pub fn data_gaps(&self, idx: usize) -> Vec<usize> {
        data_gaps_raw(&self.combs[idx], self.types[idx])
    }
}

fn type_of(all: &[RawComb], c: &RawComb, r: usize) -> CombType {
    let s = c.len();
    let ell = c.ell;
    let is_handle = all.iter().any(|o| o != c && o.kind != CombKind::Broken && o.handle() == (c.lo, c.hi));
    let left = c.kind != CombKind::Broken;
    match () {
        _ if s == r && !is_handle => 1,
        _ if left && s == r => 2,
        _ if left && ell <= r && (r + 1..=2 * r - 2).contains(&s) => 3,
        _ if left && ell <= r && s >= 2 * r - 1 => 4,
        _ if left && ell > r && s - ell >= r => 5,
        _ => 6,
    }
}

/// Gap reader in the comb's own orientation: `d(i)` is `δ_i` for left and
/// broken combs and `δ_{s-i}` for right combs (1-based `i`).
#[inline]
fn oriented_gap(shape: &Shape, c: &RawComb, i: usize) -> u8 {
    let g = shape.gaps();
    if c.kind == CombKind::Right {
        g[c.hi - i]
    } else {
        g[c.lo + i - 1]
    }
}

fn range_mask(shape: &Shape, c: &RawComb, from: usize, to: usize) -> u32 {
    (from..=to).fold(0u32, |m, i| m | 1 << (oriented_gap(shape, c, i) - 1))
}

pub(crate) fn chi0_raw(shape: &Shape, c: &RawComb, t: CombType, phi: &PhiFamily, r: usize) -> Result<u8> {
    if matches!(t, 2 | 6) {
        return Ok(0);
    }
    let s = c.len();
    debug_assert!(s >= 3, "size-2 combs never carry data");
    let d = |i: usize| oriented_gap(shape, c, i);
    let (a, b, e) = (d(r - 3), d(r - 2), d(r - 1));
    let valley = a > b && b < e;
    let peak = a < b && b > e;
    match t {
        1 | 3 => {
            if valley {
                return Ok(0);
            }
            if peak {
                return Ok(1);
            }
            let mask = range_mask(shape, c, 1, s - 1);
            let distinct = mask.count_ones() as usize;
            let ok = if t == 1 { distinct == r - 1 } else { distinct >= r - 1 };
            if ok {
                phi.color_mask(mask)
            } else {
                Ok(0)
            }
        }
        4 => {
            if valley || peak {
                let mask = range_mask(shape, c, r, s - 1);
                if mask.count_ones() as usize != s - r {
                    return internal(format!("type-4 chain of {c:?} has repeated levels"));
                }
                let v = phi.color_mask(mask)?;
                Ok(if peak { v ^ 1 } else { v })
            } else {
                phi.color_mask(range_mask(shape, c, 1, s - 1))
            }
        }
        5 => {
            let mask = range_mask(shape, c, c.ell, s - 1);
            if mask.count_ones() as usize != s - c.ell {
                return internal(format!("type-5 teeth of {c:?} have repeated levels"));
            }
            phi.color_mask(mask)
        }
        _ => internal(format!("unknown comb type {t}")),
    }
}

fn data_gaps_raw(c: &RawComb, t: CombType) -> Vec<usize> {
    match t {
        1 | 3 | 4 => (c.lo..c.hi).collect(),
        5 => match c.kind {
            CombKind::Right => (c.lo..=c.hi - c.ell).collect(),
            _ => (c.lo + c.ell - 1..c.hi).collect(),
        },
        _ => Vec::new(),
    }
}

fn check_edge(x: &LeafSet, cfg: &StepupConfig) -> Result<()> {
    if x.len() != cfg.edge_size() {
        return domain(format!("edge {x} has {} leaves, expected k + r = {}", x.len(), cfg.edge_size()));
    }
    for &v in x.iter() {
        cfg.params.check_leaf(v)?;
    }
    Ok(())
}

fn locate(x: &LeafSet, c: &CombDescriptor, cfg: &StepupConfig) -> Result<(EdgeCombs, usize)> {
    check_edge(x, cfg)?;
    let e = EdgeCombs::new(Shape::new(cfg.params, x), cfg.r);
    let raw = c.raw();
    match e.combs.iter().position(|o| *o == raw) {
        Some(i) => Ok((e, i)),
        None => domain(format!("{:?} is not a maximal comb of {x}", c.interval)),
    }
}

pub fn comb_type(c: &CombDescriptor, x: &LeafSet, cfg: &StepupConfig) -> Result<CombType> {
    let (e, i) = locate(x, c, cfg)?;
    Ok(e.types[i])
}

/// Coloring data `F(I)`: the ancestors whose levels decide `χ₀(I)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ColoringData {
    pub ancestors: Vec<TreeNode>,
}

pub fn coloring_data(c: &CombDescriptor, x: &LeafSet, cfg: &StepupConfig) -> Result<ColoringData> {
    let (e, i) = locate(x, c, cfg)?;
    let n = cfg.params.n_bits();
    Ok(ColoringData { ancestors: e.data_gaps(i).into_iter().map(|g| ancestor_raw(n, x[g], x[g + 1])).collect() })
}

pub fn chi0(c: &CombDescriptor, x: &LeafSet, cfg: &StepupConfig) -> Result<u8> {
    let (e, i) = locate(x, c, cfg)?;
    e.chi0(i, &cfg.phi, cfg.r)
}

pub fn chi(x: &LeafSet, cfg: &StepupConfig) -> Result<u8> {
    check_edge(x, cfg)?;
    EdgeCombs::new(Shape::new(cfg.params, x), cfg.r).chi(&cfg.phi, cfg.r)
}

/// χ on a sorted slice without the range checks of [`chi`].
#[inline]
pub fn chi_slice(leaves: &[u32], cfg: &StepupConfig) -> Result<u8> {
    EdgeCombs::new(Shape::new(cfg.params, leaves), cfg.r).chi(&cfg.phi, cfg.r)
}

/// Every maximal comb of the edge with its type, χ₀ and coloring data.
pub fn analyze_edge(x: &LeafSet, cfg: &StepupConfig) -> Result<Vec<CombReport>> {
    check_edge(x, cfg)?;
    let e = EdgeCombs::new(Shape::new(cfg.params, x), cfg.r);
    (0..e.combs.len())
        .map(|i| {
            Ok(CombReport {
                comb: e.combs[i].descriptor(),
                comb_type: e.types[i],
                color: e.chi0(i, &cfg.phi, cfg.r)?,
                data_gaps: e.data_gaps(i),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32) -> TreeParams {
        TreeParams::new(n).unwrap()
    }

    fn set(v: &[u32]) -> LeafSet {
        LeafSet::new(v.to_vec()).unwrap()
    }

    fn cfg_with(n: u32, r: u32, k: u32, f: impl FnMut(u32, &[u32]) -> u8) -> StepupConfig {
        let phi = PhiFamily::from_fn(n, r, k, f).unwrap();
        StepupConfig::new(p(n), r, k, Arc::new(phi)).unwrap()
    }

    #[test]
    fn mask_rank_is_colex() {
        let t = BinomTable::new(10);
        for s in crate::subsets::Colex::new(10, 4) {
            let set: Vec<u32> = s.iter().map(|&i| i as u32 + 1).collect();
            assert_eq!(mask_rank(set_to_mask(&set)), t.rank(&set));
        }
    }

    #[test]
    fn psi_examples() {
        let phi = PhiTable::from_fn(3, 3, |_| 1).unwrap();
        assert_eq!(ehr_psi(&phi, p(3), &set(&[2, 3, 4, 8]), 4).unwrap(), 1);
        assert_eq!(ehr_psi(&phi, p(3), &set(&[1, 2, 5, 6]), 4).unwrap(), 0);
        assert_eq!(ehr_psi(&phi, p(3), &set(&[1, 5, 7, 8]), 4).unwrap(), 1);
        let phi0 = PhiTable::from_fn(3, 3, |_| 0).unwrap();
        assert_eq!(ehr_psi(&phi0, p(3), &set(&[1, 5, 7, 8]), 4).unwrap(), 0);
        assert!(ehr_psi(&phi, p(3), &set(&[1, 5, 7]), 3).is_err());
    }

    #[test]
    fn monotone_interval_examples() {
        // δ = (4,3,2,1)
        assert_eq!(find_monotone_interval(p(4), &set(&[1, 2, 3, 5, 9]), 4).unwrap(), IntervalRef { lo: 1, hi: 5 });
        // δ = (1,2,3)
        assert_eq!(find_monotone_interval(p(3), &set(&[1, 5, 7, 8]), 4).unwrap(), IntervalRef { lo: 1, hi: 4 });
        assert_eq!(longest_monotone_run(&[3, 1, 3, 2, 1], 0), Some((2, 4)));
        assert_eq!(longest_monotone_run(&[3, 1, 3, 2, 1], 3), Some((3, 4)));
        assert_eq!(longest_monotone_run(&[2, 5], 0), Some((0, 1)));
    }

    #[test]
    fn monotone_run_matches_scan() {
        // every gap word over a 4-letter alphabet without equal neighbours
        let mut words = vec![vec![]];
        for _ in 0..7 {
            let mut next = Vec::new();
            for w in &words {
                for a in 1..=4u8 {
                    if w.last() != Some(&a) {
                        let mut v: Vec<u8> = w.clone();
                        v.push(a);
                        next.push(v);
                    }
                }
            }
            words.extend(next);
            words.sort();
            words.dedup();
        }
        for w in words.iter().filter(|w| !w.is_empty()) {
            for start in 0..w.len() {
                let got = longest_monotone_run(w, start).unwrap();
                let mut best: Option<(usize, usize)> = None;
                for lo in start..w.len() {
                    for hi in lo..w.len() {
                        let inc = w[lo..=hi].windows(2).all(|p| p[0] < p[1]);
                        let dec = w[lo..=hi].windows(2).all(|p| p[0] > p[1]);
                        if (inc || dec) && best.is_none_or(|b| hi - lo > b.1 - b.0) {
                            best = Some((lo, hi));
                        }
                    }
                }
                assert_eq!(Some(got), best, "{w:?} from {start}");
            }
        }
    }

    #[test]
    fn chi_examples() {
        let c = cfg_with(4, 4, 1, |_, _| 1);
        let x = set(&[1, 2, 3, 4, 16]);
        let reports = analyze_edge(&x, &c).unwrap();
        let whole = reports.iter().find(|r| r.comb.interval == IntervalRef { lo: 1, hi: 5 }).unwrap();
        assert_eq!((whole.comb.kind, whole.comb.handle_len, whole.comb_type), (CombKind::Left, 4, 3));
        assert_eq!(whole.color, 0);
        assert_eq!(chi(&x, &c).unwrap(), 0);

        let x = set(&[1, 2, 3, 5, 9]);
        for v in 0..2u8 {
            let c = cfg_with(4, 4, 1, |i, s| if i == 4 && s == [1, 2, 3, 4] { v } else { 1 - v });
            assert_eq!(chi(&x, &c).unwrap(), v);
            let reports = analyze_edge(&x, &c).unwrap();
            assert_eq!(reports[0].comb_type, 3);
            assert_eq!(reports.iter().filter(|r| r.comb_type != 6).count(), 1);
            let data = coloring_data(&reports[0].comb, &x, &c).unwrap();
            assert_eq!(data.ancestors.iter().map(|a| a.level).collect::<Vec<_>>(), vec![4, 3, 2, 1]);
        }
        assert!(chi(&set(&[1, 2, 3, 5]), &c).is_err());
    }

    #[test]
    fn small_combs_are_type_six() {
        let c = cfg_with(4, 4, 1, |_, _| 1);
        for r in analyze_edge(&set(&[1, 2, 3, 4, 16]), &c).unwrap() {
            if r.comb.interval.len() < 4 {
                assert_eq!(r.comb_type, 6);
                assert_eq!(r.color, 0);
                assert!(r.data_gaps.is_empty());
            }
        }
    }

    #[test]
    fn broken_comb_of_size_r_is_type_one() {
        // {1,2,3,4} is broken inside {1,2,3,4,9,16}
        let c = cfg_with(4, 4, 2, |_, _| 0);
        let x = set(&[1, 2, 3, 4, 9, 16]);
        let reports = analyze_edge(&x, &c).unwrap();
        let found: Vec<_> = reports.iter().map(|r| (r.comb.interval, r.comb.kind, r.comb_type)).collect();
        assert!(found.contains(&(IntervalRef { lo: 1, hi: 4 }, CombKind::Broken, 1)), "{found:?}");
    }

    #[test]
    fn config_validation() {
        let phi = Arc::new(PhiFamily::constant(4, 3, 1, 0).unwrap());
        assert!(StepupConfig::new(p(4), 3, 1, phi).is_err());
        let phi = Arc::new(PhiFamily::constant(4, 4, 1, 0).unwrap());
        assert!(StepupConfig::new(p(5), 4, 1, phi.clone()).is_err());
        assert!(StepupConfig::new(p(4), 4, 2, phi).is_err());
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror(p(3), &set(&[1, 2, 3, 8])), set(&[1, 6, 7, 8]));
        let x = set(&[2, 3, 7]);
        assert_eq!(mirror(p(3), &mirror(p(3), &x)), x);
    }

    #[test]
    fn seeded_tables_are_pure() {
        let a = PhiTable::seeded(20, 5, 7);
        let b = PhiTable::seeded(20, 5, 7);
        for rank in 0..1000 {
            assert_eq!(a.color_rank(rank), b.color_rank(rank));
        }
        let ones: u32 = (0..1000).map(|q| a.color_rank(q) as u32).sum();
        assert!((300..700).contains(&ones));
    }
}
