//! Daisies, simple daisies, and brute-force searches for monochromatic copies
//! under an arbitrary edge coloring.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coloring::{set_to_mask, PhiFamily, PhiTable, StepupConfig};
use crate::error::{config, domain, Error, Result};
use crate::subsets::{binom, BinomTable, Colex};
use crate::tree::LeafSet;

/// A 2-coloring of the `uniformity()`-subsets of `[ground()]`. Must be pure.
pub trait EdgeColoring: Sync {
    fn ground(&self) -> u32;
    fn uniformity(&self) -> usize;
    /// Color of a strictly increasing edge.
    fn color(&self, edge: &[u32]) -> Result<u8>;
}

impl<T: EdgeColoring + ?Sized> EdgeColoring for &T {
    fn ground(&self) -> u32 {
        (**self).ground()
    }
    fn uniformity(&self) -> usize {
        (**self).uniformity()
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        (**self).color(edge)
    }
}

/// Coloring given by a closure.
pub struct FnColoring<F> {
    n: u32,
    u: usize,
    f: F,
}

impl<F: Fn(&[u32]) -> u8 + Sync> FnColoring<F> {
    pub fn new(n: u32, uniformity: usize, f: F) -> Self {
        FnColoring { n, u: uniformity, f }
    }
}

impl<F: Fn(&[u32]) -> u8 + Sync> EdgeColoring for FnColoring<F> {
    fn ground(&self) -> u32 {
        self.n
    }
    fn uniformity(&self) -> usize {
        self.u
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        Ok((self.f)(edge) & 1)
    }
}

/// Largest number of edges an explicit coloring table may hold.
pub const MAX_TABLE_EDGES: u128 = 1 << 33;

/// Explicit coloring stored as one bit per edge in colex order.
#[derive(Clone, Debug)]
pub struct TableColoring {
    n: u32,
    u: usize,
    binom: BinomTable,
    bits: Vec<u64>,
}

impl TableColoring {
    pub fn edge_count(n: u32, u: usize) -> Result<u64> {
        match binom(n as u64, u as u64) {
            Some(c) if c <= MAX_TABLE_EDGES => Ok(c as u64),
            _ => config(format!("C({n},{u}) edges exceed the table limit of 2^33")),
        }
    }

    pub fn new(n: u32, u: usize, bits: Vec<u64>) -> Result<Self> {
        let len = Self::edge_count(n, u)?;
        if bits.len() as u64 != len.div_ceil(64) {
            return config(format!("table for C({n},{u}) needs {} words", len.div_ceil(64)));
        }
        Ok(TableColoring { n, u, binom: BinomTable::new(n as usize), bits })
    }

    pub fn from_coloring(c: &impl EdgeColoring) -> Result<Self> {
        let (n, u) = (c.ground(), c.uniformity());
        let len = Self::edge_count(n, u)?;
        let mut bits = vec![0u64; len.div_ceil(64) as usize];
        let mut it = Colex::new(n as usize, u);
        let mut edge = Vec::with_capacity(u);
        let mut i = 0usize;
        while let Some(idx) = it.next_ref() {
            edge.clear();
            edge.extend(idx.iter().map(|&j| j as u32 + 1));
            if c.color(&edge)? == 1 {
                bits[i / 64] |= 1 << (i % 64);
            }
            i += 1;
            it.advance();
        }
        Self::new(n, u, bits)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> &[u64] {
        &self.bits
    }
}

impl EdgeColoring for TableColoring {
    fn ground(&self) -> u32 {
        self.n
    }
    fn uniformity(&self) -> usize {
        self.u
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        let rank = self.binom.rank(edge);
        Ok((self.bits[(rank / 64) as usize] >> (rank % 64)) as u8 & 1)
    }
}

impl EdgeColoring for PhiTable {
    fn ground(&self) -> u32 {
        self.n()
    }
    fn uniformity(&self) -> usize {
        self.arity() as usize
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        Ok(self.color_mask(set_to_mask(edge)))
    }
}

/// χ on `(k + r)`-subsets of the leaves.
pub struct ChiColoring {
    pub cfg: StepupConfig,
}

impl EdgeColoring for ChiColoring {
    fn ground(&self) -> u32 {
        self.cfg.params.leaf_count()
    }
    fn uniformity(&self) -> usize {
        self.cfg.edge_size()
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        crate::coloring::chi_slice(edge, &self.cfg)
    }
}

/// Colex-rank memo in front of a coloring: two bits per edge, shared across threads.
pub struct Memo<'a, C: ?Sized> {
    inner: &'a C,
    binom: Option<BinomTable>,
    words: Vec<AtomicU64>,
}

impl<'a, C: EdgeColoring + ?Sized> Memo<'a, C> {
    pub fn new(inner: &'a C, budget_bytes: usize) -> Self {
        let n = inner.ground();
        let fits = binom(n as u64, inner.uniformity() as u64).filter(|&e| e.div_ceil(32) * 8 <= budget_bytes as u128);
        match fits {
            Some(e) => Memo {
                inner,
                binom: Some(BinomTable::new(n as usize)),
                words: (0..e.div_ceil(32)).map(|_| AtomicU64::new(0)).collect(),
            },
            None => Memo { inner, binom: None, words: Vec::new() },
        }
    }

    pub fn enabled(&self) -> bool {
        self.binom.is_some()
    }
}

impl<C: EdgeColoring + ?Sized> EdgeColoring for Memo<'_, C> {
    fn ground(&self) -> u32 {
        self.inner.ground()
    }
    fn uniformity(&self) -> usize {
        self.inner.uniformity()
    }
    fn color(&self, edge: &[u32]) -> Result<u8> {
        let Some(b) = &self.binom else {
            return self.inner.color(edge);
        };
        let rank = b.rank(edge);
        let word = &self.words[(rank / 32) as usize];
        let shift = (rank % 32) * 2;
        let state = (word.load(Ordering::Relaxed) >> shift) & 3;
        if state != 0 {
            return Ok(state as u8 - 1);
        }
        let c = self.inner.color(edge)?;
        word.fetch_or((c as u64 + 1) << shift, Ordering::Relaxed);
        Ok(c)
    }
}

/// A daisy: kernel `K₀ ∪ K₁`, universe of petals `M`, petal size `r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DaisyInstance {
    pub k0: LeafSet,
    pub m_set: LeafSet,
    pub k1: LeafSet,
    pub r: usize,
}

impl DaisyInstance {
    /// Simple daisy with `K₀ < M < K₁`.
    pub fn simple(k0: LeafSet, m_set: LeafSet, k1: LeafSet, r: usize) -> Result<Self> {
        if let (Some(a), Some(b)) = (k0.max_leaf(), m_set.min_leaf()) {
            if a >= b {
                return domain(format!("K0 {k0} is not below M {m_set}"));
            }
        }
        if let (Some(a), Some(b)) = (m_set.max_leaf(), k1.min_leaf()) {
            if a >= b {
                return domain(format!("M {m_set} is not below K1 {k1}"));
            }
        }
        Self::check_sizes(&m_set, r)?;
        Ok(DaisyInstance { k0, m_set, k1, r })
    }

    /// General daisy; the kernel is stored in `k0` and `k1` is empty.
    pub fn general(kernel: LeafSet, m_set: LeafSet, r: usize) -> Result<Self> {
        if kernel.iter().any(|&v| m_set.contains(v)) {
            return domain(format!("kernel {kernel} meets M {m_set}"));
        }
        Self::check_sizes(&m_set, r)?;
        Ok(DaisyInstance { k0: kernel, m_set, k1: LeafSet::default(), r })
    }

    fn check_sizes(m_set: &LeafSet, r: usize) -> Result<()> {
        if r == 0 || m_set.len() < r {
            return domain(format!("|M| = {} is smaller than r = {r}", m_set.len()));
        }
        Ok(())
    }

    pub fn is_simple(&self) -> bool {
        self.k0.max_leaf().zip(self.m_set.min_leaf()).is_none_or(|(a, b)| a < b)
    }

    pub fn kernel(&self) -> LeafSet {
        self.k0.union(&self.k1)
    }

    pub fn k(&self) -> usize {
        self.k0.len() + self.k1.len()
    }

    pub fn m(&self) -> usize {
        self.m_set.len()
    }

    pub fn edge_count(&self) -> u128 {
        binom(self.m() as u64, self.r as u64).unwrap_or(u128::MAX)
    }

    /// All edges `K ∪ P`, sorted, in colex order of `P`.
    pub fn edges(&self) -> impl Iterator<Item = LeafSet> + '_ {
        let kernel = self.kernel();
        Colex::new(self.m(), self.r).map(move |idx| {
            let mut e: Vec<u32> = kernel.iter().copied().chain(idx.iter().map(|&i| self.m_set[i])).collect();
            e.sort_unstable();
            LeafSet::new(e).expect("kernel and petals are disjoint")
        })
    }

    /// The petal `P` of an edge, i.e. the edge minus the kernel.
    pub fn petal(&self, edge: &LeafSet) -> Vec<u32> {
        edge.iter().copied().filter(|v| self.m_set.contains(*v)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NotFound,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Witness {
    pub instance: DaisyInstance,
    pub color: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub status: SearchStatus,
    pub found: bool,
    pub witness: Option<Witness>,
    pub edges_checked: u64,
    pub nodes: u64,
    pub shards: u64,
    pub reason: Option<String>,
    pub elapsed_ms: u64,
}

/// Search limits. Node budgets are deterministic; the time budget is not.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub node_budget: Option<u64>,
    pub time_budget: Option<Duration>,
    pub memo_bytes: usize,
    pub batch_size: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { node_budget: None, time_budget: None, memo_bytes: 64 << 20, batch_size: 256 }
    }
}

/// Lex-ordered `t`-subsets of `lo..=hi`.
struct LexSubsets {
    lo: u32,
    n: usize,
    cur: Option<Vec<usize>>,
}

impl LexSubsets {
    fn new(lo: u32, hi: u32, t: usize) -> Self {
        let n = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
        LexSubsets { lo, n, cur: (t <= n).then(|| (0..t).collect()) }
    }
}

impl Iterator for LexSubsets {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let cur = self.cur.as_mut()?;
        let out = cur.iter().map(|&i| self.lo + i as u32).collect();
        if cur.is_empty() || !crate::subsets::next_lex(cur, self.n) {
            self.cur = None;
        }
        Some(out)
    }
}

/// One independent unit of work: fixed kernel, candidates for `M`.
#[derive(Clone, Debug)]
struct Shard {
    k0: Vec<u32>,
    k1: Vec<u32>,
    cand: Vec<u32>,
    general: bool,
}

fn simple_shards(n: u32, m: usize, k: usize) -> impl Iterator<Item = Shard> {
    let m32 = m as u32;
    (0..=k).rev().flat_map(move |k0| {
        let k1 = k - k0;
        let top = n.saturating_sub(m32 + k1 as u32);
        LexSubsets::new(1, top, k0).flat_map(move |a| {
            let lo = a.last().copied().unwrap_or(0);
            LexSubsets::new(lo + m32 + 1, n, k1).map(move |b| {
                let hi = b.first().copied().unwrap_or(n + 1);
                Shard { k0: a.clone(), k1: b, cand: (lo + 1..hi).collect(), general: false }
            })
        })
    })
}

fn general_shards(n: u32, k: usize) -> impl Iterator<Item = Shard> {
    LexSubsets::new(1, n, k).map(move |kernel| Shard {
        cand: (1..=n).filter(|v| kernel.binary_search(v).is_err()).collect(),
        k0: kernel,
        k1: Vec::new(),
        general: true,
    })
}

struct ShardResult {
    witness: Option<(Vec<u32>, u8)>,
    edges: u64,
    nodes: u64,
    aborted: bool,
}

struct Dfs<'a, C: ?Sized> {
    col: &'a C,
    shard: &'a Shard,
    r: usize,
    m: usize,
    cap: u64,
    edges: u64,
    nodes: u64,
    chosen: Vec<u32>,
    edge: Vec<u32>,
}

enum Step {
    Found(u8),
    Exhausted,
    Aborted,
}

impl<C: EdgeColoring + ?Sized> Dfs<'_, C> {
    fn edge_color(&mut self, sub: &[usize], v: u32) -> Result<u8> {
        self.edge.clear();
        self.edge.extend_from_slice(&self.shard.k0);
        self.edge.extend(sub.iter().map(|&i| self.chosen[i]));
        self.edge.push(v);
        self.edge.extend_from_slice(&self.shard.k1);
        if self.shard.general {
            self.edge.sort_unstable();
        }
        self.edges += 1;
        self.col.color(&self.edge)
    }

    fn rec(&mut self, start: usize, color: Option<u8>) -> Result<Step> {
        let j = self.chosen.len();
        if j == self.m {
            return Ok(Step::Found(color.expect("m >= r fixes a color")));
        }
        let cand_len = self.shard.cand.len();
        for idx in start..=cand_len - (self.m - j) {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Ok(Step::Aborted);
            }
            let v = self.shard.cand[idx];
            let mut c = color;
            let mut ok = true;
            if j + 1 >= self.r {
                let mut it = Colex::new(j, self.r - 1);
                while let Some(sub) = it.next_ref() {
                    let sub = sub.to_vec();
                    let got = self.edge_color(&sub, v)?;
                    match c {
                        None => c = Some(got),
                        Some(x) if x != got => {
                            ok = false;
                            break;
                        }
                        _ => {}
                    }
                    it.advance();
                }
            }
            if ok {
                self.chosen.push(v);
                match self.rec(idx + 1, c)? {
                    Step::Exhausted => {}
                    s => return Ok(s),
                }
                self.chosen.pop();
            }
        }
        Ok(Step::Exhausted)
    }
}

fn search_shard<C: EdgeColoring + ?Sized>(col: &C, shard: &Shard, r: usize, m: usize, cap: u64) -> Result<ShardResult> {
    let mut d = Dfs { col, shard, r, m, cap, edges: 0, nodes: 0, chosen: Vec::with_capacity(m), edge: Vec::new() };
    let step = if shard.cand.len() < m { Step::Exhausted } else { d.rec(0, None)? };
    Ok(match step {
        Step::Found(c) => ShardResult { witness: Some((d.chosen, c)), edges: d.edges, nodes: d.nodes, aborted: false },
        Step::Exhausted => ShardResult { witness: None, edges: d.edges, nodes: d.nodes, aborted: false },
        Step::Aborted => ShardResult { witness: None, edges: d.edges, nodes: d.nodes, aborted: true },
    })
}

/// All shard-first witnesses, in enumeration order, up to a limit.
#[derive(Clone, Debug, Serialize)]
pub struct Enumeration {
    pub status: SearchStatus,
    pub witnesses: Vec<Witness>,
    pub truncated: bool,
    pub edges_checked: u64,
    pub nodes: u64,
    pub shards: u64,
    pub reason: Option<String>,
}

fn drive<C: EdgeColoring + ?Sized>(
    col: &C,
    shards: impl Iterator<Item = Shard>,
    r: usize,
    m: usize,
    opts: &SearchOptions,
    limit: usize,
) -> Result<Enumeration> {
    let started = Instant::now();
    let budget = opts.node_budget.unwrap_or(u64::MAX);
    let mut out = Enumeration {
        status: SearchStatus::NotFound,
        witnesses: Vec::new(),
        truncated: false,
        edges_checked: 0,
        nodes: 0,
        shards: 0,
        reason: None,
    };
    let mut shards = shards.peekable();
    let batch_size = opts.batch_size.max(1);
    while shards.peek().is_some() {
        let batch: Vec<Shard> = shards.by_ref().take(batch_size).collect();
        let cap = budget.saturating_sub(out.nodes);
        let results: Vec<Result<ShardResult>> = batch.par_iter().map(|s| search_shard(col, s, r, m, cap)).collect();
        for (shard, res) in batch.iter().zip(results) {
            let res = res?;
            out.shards += 1;
            out.edges_checked += res.edges;
            out.nodes += res.nodes;
            if res.aborted {
                out.status = SearchStatus::Inconclusive;
                out.reason = Some(format!("node budget of {budget} exhausted"));
                return Ok(out);
            }
            if let Some((mset, color)) = res.witness {
                let k0 = LeafSet::new(shard.k0.clone())?;
                let m_set = LeafSet::new(mset)?;
                let instance = if shard.general {
                    DaisyInstance::general(k0, m_set, r)?
                } else {
                    DaisyInstance::simple(k0, m_set, LeafSet::new(shard.k1.clone())?, r)?
                };
                out.witnesses.push(Witness { instance, color });
                out.status = SearchStatus::Found;
                if out.witnesses.len() >= limit {
                    out.truncated = shards.peek().is_some() || out.shards < batch.len() as u64;
                    return Ok(out);
                }
            }
        }
        if out.nodes > budget {
            out.status = SearchStatus::Inconclusive;
            out.reason = Some(format!("node budget of {budget} exhausted"));
            return Ok(out);
        }
        if opts.time_budget.is_some_and(|t| started.elapsed() > t) && shards.peek().is_some() {
            out.status = SearchStatus::Inconclusive;
            out.reason = Some("time budget exhausted".into());
            return Ok(out);
        }
    }
    if out.status == SearchStatus::Found {
        out.truncated = false;
    }
    Ok(out)
}

fn check_feasible(col: &impl EdgeColoring, n: u32, r: usize, m: usize, k: usize) -> Result<()> {
    if r == 0 || m < r {
        return domain(format!("need 1 <= r <= m, got r = {r}, m = {m}"));
    }
    if (n as usize) < m + k {
        return domain(format!("ground size {n} is below m + k = {}", m + k));
    }
    if n > col.ground() {
        return domain(format!("ground size {n} exceeds the coloring's {}", col.ground()));
    }
    if col.uniformity() != k + r {
        return domain(format!("coloring is {}-uniform but k + r = {}", col.uniformity(), k + r));
    }
    Ok(())
}

fn report(e: Enumeration, started: Instant) -> SearchReport {
    let witness = e.witnesses.into_iter().next();
    SearchReport {
        status: e.status,
        found: witness.is_some(),
        witness,
        edges_checked: e.edges_checked,
        nodes: e.nodes,
        shards: e.shards,
        reason: e.reason,
        elapsed_ms: started.elapsed().as_millis() as u64,
    }
}

/// Least monochromatic simple `(r, m, k)`-daisy in `[n]`, scanning splits
/// `|K₀| = k, …, 0` and, within a split, `(K₀, K₁, M)` lexicographically.
pub fn find_mono_simple_daisy(
    col: &impl EdgeColoring,
    n: u32,
    r: usize,
    m: usize,
    k: usize,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    check_feasible(col, n, r, m, k)?;
    let started = Instant::now();
    let memo = Memo::new(col, opts.memo_bytes);
    Ok(report(drive(&memo, simple_shards(n, m, k), r, m, opts, 1)?, started))
}

/// Least monochromatic `(r, m, k)`-daisy with arbitrary kernel placement,
/// scanning `(K, M)` lexicographically.
pub fn find_mono_daisy(
    col: &impl EdgeColoring,
    n: u32,
    r: usize,
    m: usize,
    k: usize,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    check_feasible(col, n, r, m, k)?;
    let started = Instant::now();
    let memo = Memo::new(col, opts.memo_bytes);
    Ok(report(drive(&memo, general_shards(n, k), r, m, opts, 1)?, started))
}

/// The first monochromatic simple daisy of every kernel placement, in search order.
pub fn enumerate_mono_simple_daisies(
    col: &impl EdgeColoring,
    n: u32,
    r: usize,
    m: usize,
    k: usize,
    opts: &SearchOptions,
    limit: usize,
) -> Result<Enumeration> {
    check_feasible(col, n, r, m, k)?;
    let memo = Memo::new(col, opts.memo_bytes);
    drive(&memo, simple_shards(n, m, k), r, m, opts, limit.max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseStrategy {
    /// Fresh ChaCha tables from `seed, seed + 1, …`.
    SeededRandom { seed: u64, retries: u32 },
    /// Start from a random table and flip one edge of each witness found.
    Greedy { seed: u64, max_flips: u32 },
    /// All tables in counting order; only for at most `max_edges` sets.
    Exhaustive { max_edges: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub arity: u32,
    pub n: u32,
    pub r: usize,
    pub m_target: usize,
    pub k_eff: usize,
    pub strategy: BaseStrategy,
    pub seed: Option<u64>,
    pub attempts: u64,
    pub vacuous: bool,
    pub edges_checked: u64,
}

#[derive(Clone, Debug)]
pub struct BaseColoring {
    pub table: PhiTable,
    pub certificate: Certificate,
}

enum Verdict {
    Clean(u64),
    Witness(Witness),
}

fn verify_table(t: &PhiTable, r: usize, m: usize, k: usize, opts: &SearchOptions) -> Result<Verdict> {
    let rep = find_mono_simple_daisy(t, t.n(), r, m, k, opts)?;
    match rep.status {
        SearchStatus::NotFound => Ok(Verdict::Clean(rep.edges_checked)),
        SearchStatus::Found => Ok(Verdict::Witness(rep.witness.expect("found"))),
        SearchStatus::Inconclusive => Err(Error::Budget(rep.reason.unwrap_or_default())),
    }
}

/// A coloring of `[n]^{(arity)}` with no monochromatic simple `(r, m_target, k_eff)`-daisy,
/// certified by re-running the search.
pub fn make_base_coloring(
    arity: u32,
    n: u32,
    r: usize,
    m_target: usize,
    k_eff: usize,
    strategy: BaseStrategy,
    opts: &SearchOptions,
) -> Result<BaseColoring> {
    if arity as usize != r + k_eff {
        return config(format!("arity {arity} must equal r + k = {}", r + k_eff));
    }
    if m_target < r || r == 0 {
        return config(format!("need 1 <= r <= m_target, got r = {r}, m_target = {m_target}"));
    }
    let mut cert = Certificate {
        arity,
        n,
        r,
        m_target,
        k_eff,
        strategy,
        seed: None,
        attempts: 0,
        vacuous: false,
        edges_checked: 0,
    };
    if (n as usize) < m_target + k_eff {
        cert.vacuous = true;
        return Ok(BaseColoring { table: PhiTable::constant(n, arity, 0)?, certificate: cert });
    }
    let finish = |table: PhiTable, mut cert: Certificate, edges: u64| {
        cert.edges_checked = edges;
        Ok(BaseColoring { table, certificate: cert })
    };
    match strategy {
        BaseStrategy::SeededRandom { seed, retries } => {
            for a in 0..retries.max(1) {
                let s = seed.wrapping_add(a as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let t = PhiTable::random(n, arity, &mut rng)?;
                cert.attempts += 1;
                if let Verdict::Clean(e) = verify_table(&t, r, m_target, k_eff, opts)? {
                    cert.seed = Some(s);
                    return finish(t, cert, e);
                }
            }
        }
        BaseStrategy::Greedy { seed, max_flips } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = PhiTable::random(n, arity, &mut rng)?;
            cert.seed = Some(seed);
            let binom = BinomTable::new(n as usize);
            for _ in 0..=max_flips {
                cert.attempts += 1;
                match verify_table(&t, r, m_target, k_eff, opts)? {
                    Verdict::Clean(e) => return finish(t, cert, e),
                    Verdict::Witness(w) => {
                        let edges: Vec<LeafSet> = w.instance.edges().collect();
                        let pick = &edges[rng.gen_range(0..edges.len())];
                        t.set_rank(binom.rank(pick), 1 - w.color)?;
                    }
                }
            }
        }
        BaseStrategy::Exhaustive { max_edges } => {
            let len = PhiTable::table_len(n, arity);
            if len > max_edges as u64 || len > 32 {
                return config(format!("exhaustive search over 2^{len} tables exceeds the limit"));
            }
            for code in 0..1u64 << len {
                let t = PhiTable::from_bits(n, arity, vec![code])?;
                cert.attempts += 1;
                if let Verdict::Clean(e) = verify_table(&t, r, m_target, k_eff, opts)? {
                    return finish(t, cert, e);
                }
            }
        }
    }
    Err(Error::Budget(format!(
        "no {arity}-coloring of [{n}] avoids a monochromatic simple ({r},{m_target},{k_eff})-daisy after {} attempts",
        cert.attempts
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct ArityVerdict {
    pub arity: u32,
    pub r: usize,
    pub m_target: usize,
    pub k_eff: usize,
    pub status: SearchStatus,
    pub vacuous: bool,
    pub witness: Option<Witness>,
}

impl ArityVerdict {
    pub fn passed(&self) -> bool {
        self.status == SearchStatus::NotFound
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub passed: bool,
    pub arities: Vec<ArityVerdict>,
}

/// Checks every `φ_i` against monochromatic simple `(r - 1, m_target, i - r + 1)`-daisies.
pub fn verify_phi_family(phi: &PhiFamily, m_target: usize, opts: &SearchOptions) -> Result<FamilyReport> {
    let r = phi.r() as usize - 1;
    let mut arities = Vec::new();
    for t in phi.tables() {
        let k_eff = t.arity() as usize - r;
        let mut v = ArityVerdict {
            arity: t.arity(),
            r,
            m_target,
            k_eff,
            status: SearchStatus::NotFound,
            vacuous: false,
            witness: None,
        };
        if (t.n() as usize) < m_target + k_eff {
            v.vacuous = true;
        } else {
            let rep = find_mono_simple_daisy(t, t.n(), r, m_target, k_eff, opts)?;
            v.status = rep.status;
            v.witness = rep.witness;
        }
        arities.push(v);
    }
    Ok(FamilyReport { passed: arities.iter().all(ArityVerdict::passed), arities })
}

/// A family `φ_{r-1}, …, φ_{k+r-1}` assembled from certified base colorings.
pub fn make_phi_family(
    n: u32,
    r: u32,
    k: u32,
    m_target: usize,
    strategy: BaseStrategy,
    opts: &SearchOptions,
) -> Result<(PhiFamily, Vec<Certificate>)> {
    let mut tables = Vec::new();
    let mut certs = Vec::new();
    for i in r - 1..=k + r - 1 {
        let b = make_base_coloring(i, n, r as usize - 1, m_target, (i + 1 - r) as usize, strategy, opts)?;
        tables.push(b.table);
        certs.push(b.certificate);
    }
    Ok((PhiFamily::new(n, r, k, tables)?, certs))
}
