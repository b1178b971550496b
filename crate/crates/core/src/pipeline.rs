//! From a χ-monochromatic simple daisy to a φ-monochromatic one in the level
//! set: preprocessing, the interval transfer Ψ, the comb locator `J`, the comb
//! daisy `G`, and the projection onto `[N]`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::coloring::{longest_monotone_run, mirror, EdgeCombs, StepupConfig};
use crate::combs::{CombDescriptor, CombKind, IntervalRef, RawComb, Shape};
use crate::daisy::DaisyInstance;
use crate::error::{domain, internal, Result};
use crate::subsets::binom;
use crate::tree::{ancestor_raw, LeafSet, TreeParams};

/// Smallest `θ` with `θ >= (1/2) k^{-1/2} m^{1/2}`, i.e. `4kθ² >= m`.
pub fn petal_threshold(m: usize, k: usize) -> usize {
    let k = k.max(1) as u128;
    let m = m as u128;
    let mut t = ((m as f64 / (4.0 * k as f64)).sqrt() as u128).saturating_sub(1);
    while 4 * k * t * t < m {
        t += 1;
    }
    t.max(1) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `θ` itself.
    Theta,
    /// `max(θ, r)`, so closed outcomes always carry petals.
    FloorR,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    P1,
    P2,
    A1,
    A2,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OutcomeCase {
    ClosedInterval,
    TeethOfMaximalComb,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreprocessOutcome {
    pub m_prime: LeafSet,
    pub case: OutcomeCase,
    /// maximal comb of `V' = K₀ ∪ M' ∪ K₁` whose teeth contain `M'`
    pub host_comb: Option<CombDescriptor>,
    pub trace: Vec<Rule>,
    /// stage 2 ran on the mirrored tree (stage 1 exhausted `K₀` first)
    pub mirrored: bool,
    /// stage-2 positions of the chosen A1 run, half-open
    pub a1_run: Option<(usize, usize)>,
    pub theta: usize,
    pub theta_used: usize,
    pub floor_applied: bool,
    pub bound_met: bool,
    pub note: Option<String>,
}

impl PreprocessOutcome {
    /// The subdaisy `H' = H[K₀ ∪ M' ∪ K₁]`; it has no edges when `|M'| < r`.
    pub fn subdaisy(&self, d: &DaisyInstance) -> DaisyInstance {
        DaisyInstance { k0: d.k0.clone(), m_set: self.m_prime.clone(), k1: d.k1.clone(), r: d.r }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    K0,
    M,
    K1,
}

struct Stage2 {
    m_prime: Vec<u32>,
    closed: bool,
    trace: Vec<Rule>,
    a1_run: Option<(usize, usize)>,
    note: Option<String>,
}

fn count(roles: &[Role], lo: usize, hi: usize, r: Role) -> usize {
    roles[lo..=hi].iter().filter(|&&x| x == r).count()
}

/// Stage 2 on a closed block `Y` free of `K₁`.
fn stage2(shape: &Shape, leaves: &[u32], roles: &[Role], y: (usize, usize), theta: usize) -> Result<Stage2> {
    let (mut lo, mut hi) = y;
    let mut trace = Vec::new();
    let mut blocks: Vec<Option<(usize, usize)>> = Vec::new();
    if lo == hi {
        if roles[lo] != Role::M {
            return internal("stage 2 started on a kernel singleton");
        }
        return Ok(Stage2 { m_prime: vec![leaves[lo]], closed: true, trace, a1_run: None, note: None });
    }
    while lo < hi {
        let j = shape.split(lo, hi);
        let (rlo, rhi) = (j + 1, hi);
        if count(roles, rlo, rhi, Role::K0) == 0 {
            if rhi - rlo + 1 < theta {
                trace.push(Rule::A1);
                blocks.push(Some((rlo, rhi)));
                hi = j;
            } else {
                trace.push(Rule::A2);
                return Ok(Stage2 {
                    m_prime: leaves[rlo..=rhi].to_vec(),
                    closed: true,
                    trace,
                    a1_run: None,
                    note: None,
                });
            }
        } else {
            trace.push(Rule::B);
            blocks.push(None);
            lo = rlo;
        }
    }
    // singleton: longest earliest run of A1 steps
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < trace.len() {
        if trace[i] == Rule::A1 {
            let s = i;
            while i < trace.len() && trace[i] == Rule::A1 {
                i += 1;
            }
            if best.is_none_or(|(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        } else {
            i += 1;
        }
    }
    let Some((s, e)) = best else {
        if roles[lo] == Role::M {
            return Ok(Stage2 {
                m_prime: vec![leaves[lo]],
                closed: true,
                trace,
                a1_run: None,
                note: Some("no A1 step; the final singleton is kept".into()),
            });
        }
        return internal("stage 2 ended on a kernel point without any A1 step");
    };
    let m_prime: Vec<u32> = blocks[s..e].iter().rev().map(|b| leaves[b.expect("A1 block").0]).collect();
    // replay to Z at the end of the run
    let (mut zlo, mut zhi) = y;
    for step in &trace[..e] {
        let j = shape.split(zlo, zhi);
        match step {
            Rule::A1 => zhi = j,
            _ => zlo = j + 1,
        }
    }
    let kernel_left = count(roles, zlo, zhi, Role::K0);
    let mut m_sorted = m_prime;
    m_sorted.sort_unstable();
    if kernel_left == 0 {
        return Ok(Stage2 {
            m_prime: m_sorted,
            closed: true,
            trace,
            a1_run: Some((s, e)),
            note: Some("no kernel point precedes the A1 run; M' is closed".into()),
        });
    }
    Ok(Stage2 { m_prime: m_sorted, closed: false, trace, a1_run: Some((s, e)), note: None })
}

/// Preprocessing: a sub-universe `M'` that is closed in `V'` or sits
/// in the teeth of a maximal comb of `V'`.
pub fn preprocess(d: &DaisyInstance, params: TreeParams, mode: ThresholdMode) -> Result<PreprocessOutcome> {
    if d.k() == 0 {
        return domain("preprocessing needs a nonempty kernel");
    }
    if !d.is_simple() || !d.k1.min_leaf().zip(d.m_set.max_leaf()).is_none_or(|(a, b)| b < a) {
        return domain("preprocessing needs a simple daisy");
    }
    for &v in d.k0.iter().chain(d.m_set.iter()).chain(d.k1.iter()) {
        params.check_leaf(v)?;
    }
    let (m, k) = (d.m(), d.k());
    let theta = petal_threshold(m, k);
    let theta_used = match mode {
        ThresholdMode::Theta => theta,
        ThresholdMode::FloorR => theta.max(d.r),
    };
    let v: Vec<u32> = d.k0.iter().chain(d.m_set.iter()).chain(d.k1.iter()).copied().collect();
    let roles: Vec<Role> = std::iter::repeat_n(Role::K0, d.k0.len())
        .chain(std::iter::repeat_n(Role::M, m))
        .chain(std::iter::repeat_n(Role::K1, d.k1.len()))
        .collect();
    let shape = Shape::new(params, &v);
    let mut trace = Vec::new();
    let (mut lo, mut hi) = (0, v.len() - 1);
    while count(&roles, lo, hi, Role::K0) > 0 && count(&roles, lo, hi, Role::K1) > 0 {
        let j = shape.split(lo, hi);
        if count(&roles, lo, j, Role::M) >= count(&roles, j + 1, hi, Role::M) {
            trace.push(Rule::P1);
            hi = j;
        } else {
            trace.push(Rule::P2);
            lo = j + 1;
        }
    }
    let mirrored = count(&roles, lo, hi, Role::K1) > 0;
    let s2 = if mirrored {
        let mv = mirror(params, &LeafSet::new(v.clone())?);
        let t = v.len();
        let mroles: Vec<Role> = roles
            .iter()
            .rev()
            .map(|r| match r {
                Role::K0 => Role::K1,
                Role::K1 => Role::K0,
                Role::M => Role::M,
            })
            .collect();
        let mut s = stage2(&Shape::new(params, &mv), &mv, &mroles, (t - 1 - hi, t - 1 - lo), theta_used)?;
        let top = params.leaf_count() + 1;
        s.m_prime = s.m_prime.iter().rev().map(|&x| top - x).collect();
        s
    } else {
        stage2(&shape, &v, &roles, (lo, hi), theta_used)?
    };
    trace.extend_from_slice(&s2.trace);
    let m_prime = LeafSet::new(s2.m_prime)?;
    let mut out = PreprocessOutcome {
        bound_met: m_prime.len() >= theta,
        m_prime,
        case: if s2.closed { OutcomeCase::ClosedInterval } else { OutcomeCase::TeethOfMaximalComb },
        host_comb: None,
        trace,
        mirrored,
        a1_run: s2.a1_run,
        theta,
        theta_used,
        floor_applied: theta_used != theta,
        note: s2.note,
    };
    let vp: Vec<u32> = d.k0.iter().chain(out.m_prime.iter()).chain(d.k1.iter()).copied().collect();
    let sp = Shape::new(params, &vp);
    let (mlo, mhi) = (d.k0.len(), d.k0.len() + out.m_prime.len() - 1);
    match out.case {
        OutcomeCase::ClosedInterval => {
            if !sp.is_closed(mlo, mhi) {
                return internal(format!("M' = {} is not closed in V'", out.m_prime));
            }
        }
        OutcomeCase::TeethOfMaximalComb => {
            let holds = |c: &RawComb, lo: usize, hi: usize| {
                c.kind != CombKind::Broken && c.teeth().is_some_and(|(a, b)| a <= lo && hi <= b)
            };
            let mut host = sp.maximal_combs().into_iter().find(|c| holds(c, mlo, mhi));
            if host.is_none() && mirrored {
                // symmetric small combs are labelled left; read them from the other end
                let t = vp.len();
                let mv = mirror(params, &LeafSet::new(vp.clone())?);
                host = Shape::new(params, &mv)
                    .maximal_combs()
                    .into_iter()
                    .find(|c| holds(c, t - 1 - mhi, t - 1 - mlo))
                    .map(|c| c.reversed(t));
            }
            match host {
                Some(c) => out.host_comb = Some(c.descriptor()),
                None => return internal(format!("no maximal comb of V' has M' = {} in its teeth", out.m_prime)),
            }
        }
    }
    Ok(out)
}

/// `Ψ(I) = I ∩ X` for an interval `I` of `V'` that contains or avoids `M'`.
pub fn transfer_interval(v_prime: &LeafSet, m_prime: &LeafSet, x: &LeafSet, i: IntervalRef) -> Result<IntervalRef> {
    i.check_in(v_prime.len())?;
    let part = i.slice(v_prime);
    let inside = m_prime.iter().filter(|v| part.contains(v)).count();
    if inside != 0 && inside != m_prime.len() {
        return domain(format!("{i} straddles M'"));
    }
    let pos: Vec<usize> = part.iter().filter_map(|&v| x.position(v)).collect();
    match (pos.first(), pos.last()) {
        (Some(&a), Some(&b)) if b - a + 1 == pos.len() => IntervalRef::new(a + 1, b + 1),
        _ => domain(format!("{i} does not meet X in an interval")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JCase {
    /// `M'` closed and `M' ∪ {z₁}` closed
    Case1_1Left,
    /// `M'` closed and `{x_{k₀}} ∪ M'` closed
    Case1_1Right,
    /// `M'` closed and maximal
    Case1_2,
    /// `M'` in the teeth of a maximal comb
    Case2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JLocator {
    /// positions within `[k + r]`, 1-based
    pub j_interval: IntervalRef,
    /// `None` when the kind varies between edges (only in Case 1.2)
    pub kind: Option<CombKind>,
    pub comb_type: u8,
    pub case_tag: JCase,
    pub edges_validated: usize,
}

/// The unique `J` with `X_J` a maximal comb of fixed type and `a(P) ⊆ F(X_J)`,
/// validated on every edge of `H'`.
pub fn locate_j(
    h: &DaisyInstance,
    case: OutcomeCase,
    host: Option<&CombDescriptor>,
    params: TreeParams,
    r: u32,
) -> Result<JLocator> {
    let (k0, m, k1) = (h.k0.len(), h.m(), h.k1.len());
    if m < h.r {
        return domain(format!("|M'| = {m} < r = {}: H' has no edges", h.r));
    }
    let v: Vec<u32> = h.k0.iter().chain(h.m_set.iter()).chain(h.k1.iter()).copied().collect();
    let s = Shape::new(params, &v);
    let (mlo, mhi) = (k0, k0 + m - 1);
    let rr = h.r;
    let (j_interval, case_tag) = match case {
        OutcomeCase::ClosedInterval => {
            if !s.is_closed(mlo, mhi) {
                return internal("closed outcome with M' not closed in V'");
            }
            if k1 > 0 && s.is_closed(mlo, mhi + 1) {
                let mut t = 1;
                while t < k1 && s.is_closed(mlo, mhi + t + 1) {
                    t += 1;
                }
                (IntervalRef::new(k0 + 1, k0 + rr + t)?, JCase::Case1_1Left)
            } else if k0 > 0 && s.is_closed(mlo - 1, mhi) {
                let mut t = 1;
                while t < k0 && s.is_closed(mlo - t - 1, mhi) {
                    t += 1;
                }
                (IntervalRef::new(k0 - t + 1, k0 + rr)?, JCase::Case1_1Right)
            } else {
                (IntervalRef::new(k0 + 1, k0 + rr)?, JCase::Case1_2)
            }
        }
        OutcomeCase::TeethOfMaximalComb => {
            let q = host.ok_or_else(|| crate::Error::Domain("teeth outcome without a host comb".into()))?;
            (IntervalRef::new(q.interval.lo, q.interval.hi - m + rr)?, JCase::Case2)
        }
    };
    let (jlo, jhi) = (j_interval.lo - 1, j_interval.hi - 1);
    let mut seen: Option<(CombKind, u8)> = None;
    let mut kind_varies = false;
    let mut n = 0;
    for x in h.edges() {
        let e = EdgeCombs::new(Shape::new(params, &x), r);
        let fail = |what: &str| internal(format!("J = {j_interval} fails on edge {x}: {what}"));
        let Some(idx) = e.position(jlo, jhi) else {
            return fail("not a maximal comb");
        };
        let c = e.combs[idx];
        let t = e.types[idx];
        match seen {
            None => seen = Some((c.kind, t)),
            Some((kind, ty)) => {
                if ty != t {
                    return fail("comb type differs from the first edge");
                }
                if kind != c.kind {
                    kind_varies = true;
                }
            }
        }
        let data: BTreeSet<_> =
            e.data_gaps(idx).into_iter().map(|g| ancestor_raw(params.n_bits(), x[g], x[g + 1])).collect();
        let petal_ok = (k0..k0 + rr - 1).all(|g| data.contains(&ancestor_raw(params.n_bits(), x[g], x[g + 1])));
        if !petal_ok {
            return fail("a(P) is not inside F(X_J)");
        }
        let (plo, phi) = (k0, k0 + rr - 1);
        match case_tag {
            JCase::Case2 => {
                if !c.teeth().is_some_and(|(a, b)| a <= plo && phi <= b) {
                    return fail("P is not inside the teeth");
                }
            }
            _ => {
                let (a, b) = c.handle();
                if a < plo || b > phi {
                    return fail("handle is not inside P");
                }
            }
        }
        n += 1;
    }
    let (kind, comb_type) = seen.expect("at least one edge");
    if kind_varies && case_tag != JCase::Case1_2 {
        return internal(format!("comb kind varies across edges in {case_tag:?}"));
    }
    Ok(JLocator { j_interval, kind: (!kind_varies).then_some(kind), comb_type, case_tag, edges_validated: n })
}

/// The daisy `G` whose edges are the combs `X_J`.
pub fn build_g(h: &DaisyInstance, j: &JLocator) -> Result<DaisyInstance> {
    let k0 = h.k0.len();
    let (jlo, jhi) = (j.j_interval.lo - 1, j.j_interval.hi - 1);
    let a: Vec<u32> = (jlo..k0.min(jhi + 1)).map(|i| h.k0[i]).collect();
    let b: Vec<u32> = (jlo.max(k0 + h.r)..=jhi).map(|i| h.k1[i - k0 - h.r]).collect();
    DaisyInstance::simple(LeafSet::new(a)?, h.m_set.clone(), LeafSet::new(b)?, h.r)
}

/// A longest interval of `M'` with strictly monotone gaps: a 1-comb.
pub fn find_1comb_m2(g: &DaisyInstance, params: TreeParams) -> Result<LeafSet> {
    let m = g.m_set.as_slice();
    if m.len() < 2 {
        return Ok(g.m_set.clone());
    }
    let shape = Shape::new(params, m);
    let (p, q) = longest_monotone_run(shape.gaps(), 0).expect("nonempty gaps");
    LeafSet::new(m[p..=q + 1].to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExtractCase {
    /// `M'` closed: projection of `G[K_J ∪ M'']`
    Closed,
    /// type 3 host
    Type3,
    /// type 4 with a valley or peak and `|A ∪ B₀| = r - 1`
    Type4TurnShort,
    /// type 4 with a valley or peak and `|A ∪ B₀| >= r`
    Type4TurnLong,
    /// type 4 with monotone pattern
    Type4Monotone,
    Type5,
}

#[derive(Clone, Debug, Serialize)]
pub struct Projection {
    pub case: ExtractCase,
    /// the φ that must be monochromatic on `daisy`
    pub arity: u32,
    /// added to φ to get χ₀ (1 exactly for peaks in type 4)
    pub flip: u8,
    /// projected simple daisy in `[N]`, after any reduction to petal size `r - 1`
    pub daisy: Option<DaisyInstance>,
    /// projection before the reduction, when one was applied
    pub unreduced: Option<DaisyInstance>,
    pub m_double_prime: Option<LeafSet>,
    /// `2|M''| >= |M'| - r + 6`, checked only when `G` is monochromatic
    pub size_bound_ok: Option<bool>,
    /// edges of `G` checked against the projection identities
    pub edges_checked: usize,
    /// colors `φ_arity` takes on the edges of `daisy`
    pub phi_colors: Vec<u8>,
}

impl Projection {
    pub fn phi_mono(&self) -> Option<u8> {
        match self.phi_colors.as_slice() {
            [c] => Some(*c),
            _ => None,
        }
    }
}

fn levels(mask: u32) -> LeafSet {
    LeafSet::new(crate::coloring::mask_to_set(mask)).expect("mask bits are increasing")
}

fn mask_of(it: impl IntoIterator<Item = u8>) -> u32 {
    it.into_iter().fold(0, |m, g| m | 1 << (g - 1))
}

/// Projects the combs `X_J` onto the levels and checks, on every edge, that
/// `χ₀(X_J) = φ_arity(projection) + flip` and that the projections are
/// exactly the edges of a simple daisy in `[N]`.
pub fn extract_projection(
    h: &DaisyInstance,
    j: &JLocator,
    g: &DaisyInstance,
    cfg: &StepupConfig,
) -> Result<Projection> {
    if j.kind == Some(CombKind::Right) {
        return domain("extraction expects a left or broken X_J; mirror the instance first");
    }
    let params = cfg.params;
    let r = h.r;
    let gv: Vec<u32> = g.k0.iter().chain(g.m_set.iter()).chain(g.k1.iter()).copied().collect();
    let gs = Shape::new(params, &gv);
    // δ^G_i, 1-based
    let dg = |i: usize| gs.gaps()[i - 1];
    let m = g.m();
    let t = g.k1.len();
    let (jlo, jhi) = (j.j_interval.lo - 1, j.j_interval.hi - 1);
    let k0 = h.k0.len();

    struct Plan {
        case: ExtractCase,
        lo: u32,
        hi: u32,
        universe: Vec<u8>,
        petal: usize,
        reduce: bool,
        flip: u8,
        /// first X_J gap (1-based) read by χ₀
        read_from: usize,
        /// G index of the element before the petals
        base: usize,
    }

    let first = h.edges().next().expect("H' has edges");
    let e0 = EdgeCombs::new(Shape::new(params, &first), cfg.r);
    let c0: RawComb = e0.combs[e0.position(jlo, jhi).expect("validated")];
    let mut m2 = None;
    let plan = match j.case_tag {
        JCase::Case1_1Left | JCase::Case1_2 => {
            if !g.k0.is_empty() {
                return internal("closed case with kernel left of M'");
            }
            let mm = find_1comb_m2(g, params)?;
            let off = g.m_set.position(mm[0]).unwrap();
            let universe: Vec<u8> = (off + 1..off + mm.len()).map(dg).collect();
            m2 = Some(mm);
            Plan {
                case: ExtractCase::Closed,
                lo: mask_of((m..m + t).map(dg)),
                hi: 0,
                universe,
                petal: r - 1,
                reduce: false,
                flip: 0,
                read_from: 1,
                base: 0,
            }
        }
        JCase::Case2 => {
            let ell = c0.ell;
            let p = k0 - jlo - ell;
            let lp = ell + p;
            let lo = mask_of((lp + m..lp + m + t).map(dg));
            let universe: Vec<u8> = (lp..lp + m).map(dg).collect();
            let d = |i: usize| e0.shape.gaps()[c0.lo + i - 1];
            let (a, b, c) = (d(r - 3), d(r - 2), d(r - 1));
            let valley = a > b && b < c;
            let peak = a < b && b > c;
            match j.comb_type {
                3 => Plan {
                    case: ExtractCase::Type3,
                    lo,
                    hi: mask_of((1..lp).map(dg)),
                    universe,
                    petal: r,
                    reduce: true,
                    flip: 0,
                    read_from: 1,
                    base: lp,
                },
                4 if !(valley || peak) => Plan {
                    case: ExtractCase::Type4Monotone,
                    lo,
                    hi: mask_of((1..lp).map(dg)),
                    universe,
                    petal: r,
                    reduce: true,
                    flip: 0,
                    read_from: 1,
                    base: lp,
                },
                4 if lp + 1 == r => Plan {
                    case: ExtractCase::Type4TurnShort,
                    lo,
                    hi: 0,
                    universe: universe[1..].to_vec(),
                    petal: r - 1,
                    reduce: false,
                    flip: peak as u8,
                    read_from: r,
                    base: lp + 1,
                },
                4 => Plan {
                    case: ExtractCase::Type4TurnLong,
                    lo,
                    hi: mask_of((r..lp).map(dg)),
                    universe,
                    petal: r,
                    reduce: true,
                    flip: peak as u8,
                    read_from: r,
                    base: lp,
                },
                5 => Plan {
                    case: ExtractCase::Type5,
                    lo,
                    hi: mask_of((ell..lp).map(dg)),
                    universe,
                    petal: r,
                    reduce: true,
                    flip: 0,
                    read_from: ell,
                    base: lp,
                },
                other => return internal(format!("type {other} cannot host M'")),
            }
        }
        JCase::Case1_1Right => return internal("Case 1.1 right must be mirrored first"),
    };
    let flip = plan.flip;
    let umask = mask_of(plan.universe.iter().copied());
    if umask.count_ones() as usize != plan.universe.len() || umask & (plan.lo | plan.hi) != 0 || plan.lo & plan.hi != 0
    {
        return internal("projected kernel and universe overlap");
    }
    let arity = plan.lo.count_ones() + plan.hi.count_ones() + plan.petal as u32;
    let inst = |lo: u32, u: u32, hi: u32, petal: usize| -> Result<Option<DaisyInstance>> {
        if (u.count_ones() as usize) < petal {
            return Ok(None);
        }
        DaisyInstance::simple(levels(lo), levels(u), levels(hi), petal).map(Some)
    };
    let unreduced = inst(plan.lo, umask, plan.hi, plan.petal)?;
    let daisy = if plan.reduce {
        let low = 1u32 << umask.trailing_zeros();
        inst(plan.lo | low, umask & !low, plan.hi, plan.petal - 1)?
    } else {
        unreduced.clone()
    };

    // per-edge identities
    let mut checked = 0;
    let mut projected: BTreeSet<u32> = BTreeSet::new();
    let mut g_colors = BTreeSet::new();
    let n_bits = params.n_bits();
    for x in h.edges() {
        let petal = h.petal(&x);
        if let Some(mm) = &m2 {
            if !petal.iter().all(|v| mm.contains(*v)) {
                continue;
            }
        }
        let e = EdgeCombs::new(Shape::new(params, &x), cfg.r);
        let idx = e.position(jlo, jhi).expect("validated");
        let c = e.combs[idx];
        let xg = |i: usize| e.shape.gaps()[c.lo + i - 1];
        let s = c.len();
        let read = mask_of((plan.read_from..s).map(xg));
        let petal_levels: u32 = match plan.case {
            ExtractCase::Closed | ExtractCase::Type4TurnShort => {
                mask_of(petal.windows(2).map(|w| crate::tree::delta_raw(n_bits, w[0], w[1]) as u8))
            }
            _ => {
                let before = gv[plan.base - 1];
                mask_of(
                    std::iter::once(before)
                        .chain(petal.iter().copied())
                        .collect::<Vec<_>>()
                        .windows(2)
                        .map(|w| crate::tree::delta_raw(n_bits, w[0], w[1]) as u8),
                )
            }
        };
        let formula = plan.lo | plan.hi | petal_levels;
        if read != formula {
            return internal(format!(
                "edge {x}: χ₀ reads levels {} but the projection formula gives {}",
                levels(read),
                levels(formula)
            ));
        }
        if petal_levels & !umask != 0 || petal_levels.count_ones() as usize != plan.petal {
            return internal(format!("edge {x}: petal levels {} leave the universe", levels(petal_levels)));
        }
        let chi0 = e.chi0(idx, &cfg.phi, cfg.r)?;
        let phi = cfg.phi.table(arity)?.color_mask(formula);
        if chi0 != phi ^ flip {
            return internal(format!("edge {x}: χ₀(X_J) = {chi0} but φ_{arity} + {flip} = {}", phi ^ flip));
        }
        g_colors.insert(chi0);
        projected.insert(formula);
        checked += 1;
    }
    if let Some(u) = &unreduced {
        let expect = binom(u.m() as u64, u.r as u64).unwrap() as usize;
        let all_in = u.edges().all(|e| projected.contains(&crate::coloring::set_to_mask(&e)));
        if projected.len() != expect || !all_in {
            return internal("projections of G do not form the whole projected daisy");
        }
    }
    let g_mono = g_colors.len() == 1;
    let size_bound_ok = match (&m2, g_mono) {
        (Some(mm), true) => Some(2 * mm.len() + r >= m + 6),
        _ => None,
    };
    let phi_colors: Vec<u8> = match &daisy {
        Some(d) => {
            let t = cfg.phi.table(arity)?;
            d.edges()
                .map(|e| t.color_mask(crate::coloring::set_to_mask(&e)))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        }
        None => Vec::new(),
    };
    Ok(Projection {
        case: plan.case,
        arity,
        flip,
        unreduced: if plan.reduce { unreduced } else { None },
        daisy,
        m_double_prime: m2,
        size_bound_ok,
        edges_checked: checked,
        phi_colors,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub instance: DaisyInstance,
    pub outcome: PreprocessOutcome,
    pub h_prime: DaisyInstance,
    /// extraction ran on the mirrored `H'` because `X_J` is a right comb
    pub mirrored_for_extraction: bool,
    pub j: Option<JLocator>,
    pub g: Option<DaisyInstance>,
    /// distinct values of χ over `H'`
    pub chi_colors: Vec<u8>,
    /// distinct values of χ₀(X_J) over `H'`
    pub chi0_colors: Vec<u8>,
    /// `χ(X) + χ₀(X_J)` is the same on every edge of `H'`
    pub transport_constant: Option<bool>,
    pub projection: Option<Projection>,
    pub degenerate: Option<String>,
}

impl PipelineReport {
    /// For a χ-monochromatic input with a nonempty projection: is the
    /// projected daisy φ-monochromatic in the color the argument predicts?
    pub fn sound(&self) -> Option<bool> {
        let p = self.projection.as_ref()?;
        p.daisy.as_ref()?;
        let [c] = self.chi0_colors.as_slice() else {
            return None;
        };
        if self.chi_colors.len() != 1 {
            return None;
        }
        Some(p.phi_mono() == Some(c ^ p.flip))
    }
}

fn mirrored_daisy(params: TreeParams, h: &DaisyInstance) -> Result<DaisyInstance> {
    DaisyInstance::simple(mirror(params, &h.k1), mirror(params, &h.m_set), mirror(params, &h.k0), h.r)
}

/// Preprocess, locate `J`, build `G` and project, checking every identity on the way.
pub fn run_pipeline(d: &DaisyInstance, cfg: &StepupConfig, mode: ThresholdMode) -> Result<PipelineReport> {
    let params = cfg.params;
    if d.r != cfg.r as usize || d.k() != cfg.k as usize {
        return domain(format!("instance has (r, k) = ({}, {}), coloring expects ({}, {})", d.r, d.k(), cfg.r, cfg.k));
    }
    let outcome = preprocess(d, params, mode)?;
    let h = outcome.subdaisy(d);
    let mut rep = PipelineReport {
        instance: d.clone(),
        outcome: outcome.clone(),
        h_prime: h.clone(),
        mirrored_for_extraction: false,
        j: None,
        g: None,
        chi_colors: Vec::new(),
        chi0_colors: Vec::new(),
        transport_constant: None,
        projection: None,
        degenerate: None,
    };
    if h.m() < h.r {
        rep.degenerate = Some(format!("|M'| = {} < r = {}: H' has no edges", h.m(), h.r));
        return Ok(rep);
    }
    let j = locate_j(&h, outcome.case, outcome.host_comb.as_ref(), params, cfg.r)?;
    let (jlo, jhi) = (j.j_interval.lo - 1, j.j_interval.hi - 1);
    let mut chi = BTreeSet::new();
    let mut chi0 = BTreeSet::new();
    let mut sums = BTreeSet::new();
    for x in h.edges() {
        let e = EdgeCombs::new(Shape::new(params, &x), cfg.r);
        let c = e.chi(&cfg.phi, cfg.r)?;
        let c0 = e.chi0(e.position(jlo, jhi).expect("validated"), &cfg.phi, cfg.r)?;
        chi.insert(c);
        chi0.insert(c0);
        sums.insert(c ^ c0);
    }
    rep.chi_colors = chi.into_iter().collect();
    rep.chi0_colors = chi0.into_iter().collect();
    rep.transport_constant = Some(sums.len() == 1);
    let (hw, jw) = if j.kind == Some(CombKind::Right) {
        rep.mirrored_for_extraction = true;
        let hm = mirrored_daisy(params, &h)?;
        let host = outcome.host_comb.map(|c| c.raw().reversed(hm.k() + hm.m()).descriptor());
        let jm = locate_j(&hm, outcome.case, host.as_ref(), params, cfg.r)?;
        if jm.kind == Some(CombKind::Right) || jm.comb_type != j.comb_type {
            return internal("mirroring did not turn X_J into a left comb of the same type");
        }
        (hm, jm)
    } else {
        (h, j.clone())
    };
    let g = build_g(&hw, &jw)?;
    rep.projection = Some(extract_projection(&hw, &jw, &g, cfg)?);
    if rep.projection.as_ref().is_some_and(|p| p.daisy.is_none()) {
        rep.degenerate = Some("the projected universe is smaller than the petal size".into());
    }
    rep.j = Some(j);
    rep.g = Some(g);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::coloring::PhiFamily;
    use crate::combs::is_closed;

    fn p(n: u32) -> TreeParams {
        TreeParams::new(n).unwrap()
    }

    fn set(v: &[u32]) -> LeafSet {
        LeafSet::new(v.to_vec()).unwrap()
    }

    fn daisy(k0: &[u32], m: &[u32], k1: &[u32], r: usize) -> DaisyInstance {
        DaisyInstance::simple(set(k0), set(m), set(k1), r).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert_eq!(petal_threshold(4, 1), 1);
        assert_eq!(petal_threshold(5, 1), 2);
        assert_eq!(petal_threshold(16, 1), 2);
        assert_eq!(petal_threshold(17, 1), 3);
        assert_eq!(petal_threshold(8, 2), 1);
        assert_eq!(petal_threshold(9, 2), 2);
        for m in 1..500 {
            for k in 1..6 {
                let t = petal_threshold(m, k);
                assert!(4 * k * t * t >= m && (t == 1 || 4 * k * (t - 1) * (t - 1) < m));
            }
        }
    }

    #[test]
    fn single_step_closed_example() {
        let d = daisy(&[1], &[5, 6, 7, 8], &[16], 3);
        let out = preprocess(&d, p(4), ThresholdMode::Theta).unwrap();
        assert_eq!(out.trace, vec![Rule::P1, Rule::A2]);
        assert_eq!(out.case, OutcomeCase::ClosedInterval);
        assert_eq!(out.m_prime, set(&[5, 6, 7, 8]));
        assert!(!out.mirrored && out.bound_met && !out.floor_applied);
        let v = set(&[1, 5, 6, 7, 8, 16]);
        assert!(is_closed(p(4), &v, IntervalRef::new(2, 5).unwrap()).unwrap());
    }

    #[test]
    fn comb_shaped_instance_gives_teeth() {
        // K₀ at the bottom of a descending spine, one M point per spine level
        let d = daisy(&[1], &[2, 3, 5, 9, 17], &[], 4);
        let out = preprocess(&d, p(6), ThresholdMode::Theta).unwrap();
        assert_eq!(out.case, OutcomeCase::TeethOfMaximalComb, "{out:?}");
        assert_eq!(out.trace, vec![Rule::A1; 5]);
        assert_eq!(out.m_prime, set(&[2, 3, 5, 9, 17]));
        let host = out.host_comb.unwrap();
        assert_eq!((host.interval, host.kind, host.handle_len), (IntervalRef::new(1, 6).unwrap(), CombKind::Left, 1));
        let h = out.subdaisy(&d);
        let j = locate_j(&h, out.case, Some(&host), p(6), 4).unwrap();
        assert_eq!((j.case_tag, j.j_interval), (JCase::Case2, IntervalRef::new(1, 5).unwrap()));
    }

    #[test]
    fn floor_is_reported() {
        let d = daisy(&[1], &[5, 6, 7, 8], &[16], 4);
        let out = preprocess(&d, p(4), ThresholdMode::FloorR).unwrap();
        assert!(out.floor_applied);
        assert_eq!((out.theta, out.theta_used), (1, 4));
    }

    #[test]
    fn preprocess_rejects_bad_input() {
        let d = daisy(&[], &[5, 6, 7, 8], &[], 3);
        assert!(preprocess(&d, p(4), ThresholdMode::Theta).is_err());
    }

    #[test]
    fn transfer_examples() {
        let v = set(&[1, 5, 6, 7, 8, 16]);
        let mp = set(&[5, 6, 7, 8]);
        let x = set(&[1, 5, 7, 8, 16]);
        assert_eq!(
            transfer_interval(&v, &mp, &x, IntervalRef::new(1, 1).unwrap()).unwrap(),
            IntervalRef::new(1, 1).unwrap()
        );
        assert_eq!(
            transfer_interval(&v, &mp, &x, IntervalRef::new(1, 5).unwrap()).unwrap(),
            IntervalRef::new(1, 4).unwrap()
        );
        assert_eq!(
            transfer_interval(&v, &mp, &x, IntervalRef::new(2, 6).unwrap()).unwrap(),
            IntervalRef::new(2, 5).unwrap()
        );
        assert!(transfer_interval(&v, &mp, &x, IntervalRef::new(1, 3).unwrap()).is_err());
    }

    #[test]
    fn case_1_2_locator() {
        // M' = {5,6,7,8} closed; neither {2} ∪ M' nor M' ∪ {16} is closed
        let h = daisy(&[1, 2], &[5, 6, 7, 8], &[16], 4);
        let j = locate_j(&h, OutcomeCase::ClosedInterval, None, p(4), 4).unwrap();
        assert_eq!(j.case_tag, JCase::Case1_2);
        assert_eq!(j.j_interval, IntervalRef::new(3, 6).unwrap());
        assert_eq!(j.comb_type, 1);
        let g = build_g(&h, &j).unwrap();
        assert!(g.k0.is_empty() && g.k1.is_empty());
    }

    #[test]
    fn case_1_1_locator() {
        // M' = {1,2,3,4} and M' ∪ {5}, M' ∪ {5,6}... with a spine to the right
        let h = daisy(&[], &[1, 2, 3, 4], &[5, 9], 4);
        let out_case = OutcomeCase::ClosedInterval;
        let j = locate_j(&h, out_case, None, p(4), 4).unwrap();
        assert_eq!(j.case_tag, JCase::Case1_1Left);
        assert_eq!(j.j_interval, IntervalRef::new(1, 6).unwrap());
        assert!(matches!(j.comb_type, 3 | 4));
        assert_eq!(build_g(&h, &j).unwrap().edges().next().unwrap().len(), 6);
    }

    #[test]
    fn monotone_m2() {
        let g = daisy(&[], &[1, 2, 3, 5, 9], &[], 4);
        assert_eq!(find_1comb_m2(&g, p(4)).unwrap(), set(&[1, 2, 3, 5, 9]));
    }

    #[test]
    fn pipeline_closed_case_identities() {
        for seed in 0..20 {
            let phi = PhiFamily::random(4, 4, 2, seed).unwrap();
            let cfg = StepupConfig::new(p(4), 4, 2, Arc::new(phi)).unwrap();
            let d = daisy(&[1], &[5, 6, 7, 8], &[16], 4);
            let rep = run_pipeline(&d, &cfg, ThresholdMode::FloorR).unwrap();
            assert_eq!(rep.transport_constant, Some(true));
            assert!(rep.mirrored_for_extraction);
            assert_eq!(rep.j.unwrap().case_tag, JCase::Case1_1Right);
            let proj = rep.projection.unwrap();
            assert_eq!(proj.case, ExtractCase::Closed);
            // M'' has 3 points, fewer than r, so nothing projects
            assert_eq!(proj.m_double_prime.as_ref().map(LeafSet::len), Some(3));
            assert!(proj.daisy.is_none() && rep.degenerate.is_some());
        }
    }

    #[test]
    fn pipeline_reaches_every_teeth_extraction() {
        type Case<'a> = (u32, &'a [u32], &'a [u32], &'a [u32], ExtractCase);
        let cases: [Case; 4] = [
            (6, &[1, 2, 4], &[7, 11, 19, 60], &[], ExtractCase::Type4Monotone),
            (6, &[], &[17, 28, 34, 52, 56, 59], &[61, 62, 64], ExtractCase::Type4TurnShort),
            (6, &[1, 2, 3, 4], &[6, 9, 12, 26, 37, 48], &[], ExtractCase::Type4TurnLong),
            (7, &[], &[41, 59, 70, 76, 107, 108, 115, 119], &[121, 122, 124, 125, 127], ExtractCase::Type5),
        ];
        for (n, k0, m, k1, want) in cases {
            let d = daisy(k0, m, k1, 4);
            let k = d.k() as u32;
            for seed in 0..4 {
                let phi = PhiFamily::random(n, 4, k, seed).unwrap();
                let cfg = StepupConfig::new(p(n), 4, k, Arc::new(phi)).unwrap();
                let rep = run_pipeline(&d, &cfg, ThresholdMode::FloorR).unwrap();
                assert_eq!(rep.outcome.case, OutcomeCase::TeethOfMaximalComb);
                assert_eq!(rep.transport_constant, Some(true));
                let proj = rep.projection.as_ref().unwrap();
                assert_eq!(proj.case, want);
                assert!(rep.degenerate.is_none());
                assert_ne!(rep.sound(), Some(false));
            }
        }
    }

    #[test]
    fn symmetric_host_found_from_mirrored_side() {
        let d = daisy(&[9, 15], &[16, 37, 44, 46], &[57], 4);
        let out = preprocess(&d, p(6), ThresholdMode::FloorR).unwrap();
        assert!(out.mirrored);
        assert_eq!(out.m_prime, set(&[46]));
        let host = out.host_comb.unwrap();
        assert_eq!((host.interval, host.kind), (IntervalRef::new(3, 4).unwrap(), CombKind::Right));
    }
}
