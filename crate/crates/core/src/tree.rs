//! Complete binary tree over the leaves `[2^N]`: levels, common ancestors,
//! gap projections and auxiliary (Steiner) trees of leaf sets.
//!
//! Leaf `x` is encoded by the `N`-bit big-endian string of `x - 1`. The root
//! sits at level 1 and leaves at level `N + 1`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const DEFAULT_MAX_HEIGHT: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    n_bits: u32,
}

impl TreeParams {
    pub fn new(n_bits: u32) -> Result<Self> {
        Self::with_cap(n_bits, DEFAULT_MAX_HEIGHT)
    }

    pub fn with_cap(n_bits: u32, cap: u32) -> Result<Self> {
        if n_bits == 0 || n_bits > cap.min(31) {
            return domain(format!("tree height {n_bits} outside [1, {}]", cap.min(31)));
        }
        Ok(TreeParams { n_bits })
    }

    #[inline]
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    #[inline]
    pub fn leaf_count(&self) -> u32 {
        1u32 << self.n_bits
    }

    #[inline]
    pub fn leaf_level(&self) -> u32 {
        self.n_bits + 1
    }

    pub fn check_leaf(&self, x: u32) -> Result<()> {
        if x == 0 || x > self.leaf_count() {
            return domain(format!("leaf {x} outside [1, {}]", self.leaf_count()));
        }
        Ok(())
    }
}

/// A vertex of the tree. `prefix` holds the `level - 1` leading bits shared by
/// every leaf below it, right-aligned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeNode {
    pub level: u32,
    pub prefix: u32,
}

impl TreeNode {
    pub fn root() -> Self {
        TreeNode { level: 1, prefix: 0 }
    }

    pub fn leaf(params: TreeParams, x: u32) -> Result<Self> {
        params.check_leaf(x)?;
        Ok(TreeNode { level: params.leaf_level(), prefix: x - 1 })
    }

    pub fn is_leaf(&self, params: TreeParams) -> bool {
        self.level == params.leaf_level()
    }

    pub fn bits(&self) -> String {
        let len = self.level - 1;
        (0..len).map(|i| if (self.prefix >> (len - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut prefix = 0u32;
        for c in bits.chars() {
            prefix = match c {
                '0' => prefix << 1,
                '1' => (prefix << 1) | 1,
                _ => return domain(format!("bad bit string {bits:?}")),
            };
        }
        Ok(TreeNode { level: bits.len() as u32 + 1, prefix })
    }

    pub fn check(&self, params: TreeParams) -> Result<()> {
        if self.level == 0 || self.level > params.leaf_level() {
            return domain(format!("node level {} outside [1, {}]", self.level, params.leaf_level()));
        }
        if self.level <= 32 && (self.prefix as u64) >= (1u64 << (self.level - 1)) {
            return domain(format!("prefix {} too long for level {}", self.prefix, self.level));
        }
        Ok(())
    }

    #[inline]
    pub fn is_ancestor_of(&self, params: TreeParams, x: u32) -> bool {
        let shift = params.leaf_level() - self.level;
        (x - 1) >> shift == self.prefix
    }

    /// Side of `x` below this node: 0 for the left subtree, 1 for the right.
    #[inline]
    pub fn side_of(&self, params: TreeParams, x: u32) -> Option<u32> {
        if self.level >= params.leaf_level() || !self.is_ancestor_of(params, x) {
            return None;
        }
        Some(((x - 1) >> (params.leaf_level() - self.level - 1)) & 1)
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},\"{}\")", self.level, self.bits())
    }
}

/// Level of `a(x, y)` without range checks.
#[inline]
pub fn delta_raw(n_bits: u32, x: u32, y: u32) -> u32 {
    let z = (x - 1) ^ (y - 1);
    if z == 0 {
        n_bits + 1
    } else {
        n_bits + 1 - (32 - z.leading_zeros())
    }
}

pub fn delta(params: TreeParams, x: u32, y: u32) -> Result<u32> {
    params.check_leaf(x)?;
    params.check_leaf(y)?;
    Ok(delta_raw(params.n_bits, x, y))
}

#[inline]
pub fn ancestor_raw(n_bits: u32, x: u32, y: u32) -> TreeNode {
    let level = delta_raw(n_bits, x, y);
    TreeNode { level, prefix: (x - 1) >> (n_bits + 1 - level) }
}

pub fn ancestor(params: TreeParams, x: u32, y: u32) -> Result<TreeNode> {
    params.check_leaf(x)?;
    params.check_leaf(y)?;
    Ok(ancestor_raw(params.n_bits, x, y))
}

/// Strictly increasing sequence of leaves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct LeafSet(Vec<u32>);

impl LeafSet {
    pub fn new(leaves: Vec<u32>) -> Result<Self> {
        if leaves.contains(&0) {
            return domain("leaves are 1-based");
        }
        if leaves.windows(2).any(|w| w[0] >= w[1]) {
            return domain(format!("leaf sequence {leaves:?} is not strictly increasing"));
        }
        Ok(LeafSet(leaves))
    }

    pub fn from_unsorted(mut leaves: Vec<u32>) -> Result<Self> {
        leaves.sort_unstable();
        leaves.dedup();
        Self::new(leaves)
    }

    pub fn in_tree(self, params: TreeParams) -> Result<Self> {
        for &x in &self.0 {
            params.check_leaf(x)?;
        }
        Ok(self)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_leaf(&self) -> Option<u32> {
        self.0.first().copied()
    }

    pub fn max_leaf(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, x: u32) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn position(&self, x: u32) -> Option<usize> {
        self.0.binary_search(&x).ok()
    }

    pub fn union(&self, other: &LeafSet) -> LeafSet {
        let mut v: Vec<u32> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        LeafSet(v)
    }
}

impl TryFrom<Vec<u32>> for LeafSet {
    type Error = crate::error::Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        LeafSet::new(v)
    }
}

impl From<LeafSet> for Vec<u32> {
    fn from(s: LeafSet) -> Vec<u32> {
        s.0
    }
}

impl std::ops::Deref for LeafSet {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for LeafSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// Gap levels `δ(x_i, x_{i+1})` of a sorted leaf slice.
pub fn gaps_of(n_bits: u32, leaves: &[u32]) -> Vec<u8> {
    leaves.windows(2).map(|w| delta_raw(n_bits, w[0], w[1]) as u8).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuxTree {
    pub params: TreeParams,
    pub leaves: LeafSet,
    pub ancestors: Vec<TreeNode>,
    pub deltas: Vec<u32>,
    pub delta_set: BTreeSet<u32>,
}

pub fn aux_tree(params: TreeParams, x: &LeafSet) -> Result<AuxTree> {
    if x.is_empty() {
        return domain("auxiliary tree of an empty leaf set");
    }
    for &v in x.iter() {
        params.check_leaf(v)?;
    }
    let n = params.n_bits();
    let ancestors: Vec<TreeNode> = x.windows(2).map(|w| ancestor_raw(n, w[0], w[1])).collect();
    let deltas: Vec<u32> = ancestors.iter().map(|a| a.level).collect();
    let delta_set = deltas.iter().copied().collect();
    Ok(AuxTree { params, leaves: x.clone(), ancestors, deltas, delta_set })
}

impl AuxTree {
    /// Graphviz rendering: ancestors labeled by level, leaves by index.
    pub fn to_dot(&self) -> String {
        self.to_dot_with(|_| None)
    }

    /// As [`AuxTree::to_dot`], with optional fill colors for leaf positions (0-based).
    pub fn to_dot_with(&self, leaf_color: impl Fn(usize) -> Option<String>) -> String {
        let mut out = String::from("digraph aux {\n  node [shape=circle];\n");
        let leaves = self.leaves.as_slice();
        for (i, &x) in leaves.iter().enumerate() {
            let fill = leaf_color(i).map(|c| format!(", style=filled, fillcolor=\"{c}\"")).unwrap_or_default();
            let _ = writeln!(out, "  x{x} [shape=box, label=\"{x}\"{fill}];");
        }
        let mut seen = BTreeSet::new();
        for a in &self.ancestors {
            if seen.insert(*a) {
                let _ = writeln!(out, "  {} [label=\"{}\"];", node_id(a), a.level);
            }
        }
        let mut edges = Vec::new();
        self.collect_edges(0, leaves.len() - 1, &mut edges);
        for (p, c) in edges {
            let _ = writeln!(out, "  {p} -> {c};");
        }
        out.push_str("}\n");
        out
    }

    fn subtree_id(&self, lo: usize, hi: usize) -> String {
        if lo == hi {
            format!("x{}", self.leaves[lo])
        } else {
            node_id(&ancestor_raw(self.params.n_bits(), self.leaves[lo], self.leaves[hi]))
        }
    }

    fn collect_edges(&self, lo: usize, hi: usize, out: &mut Vec<(String, String)>) {
        if lo == hi {
            return;
        }
        let j = (lo..hi).min_by_key(|&i| self.deltas[i]).unwrap();
        let me = self.subtree_id(lo, hi);
        out.push((me.clone(), self.subtree_id(lo, j)));
        out.push((me, self.subtree_id(j + 1, hi)));
        self.collect_edges(lo, j, out);
        self.collect_edges(j + 1, hi, out);
    }
}

fn node_id(a: &TreeNode) -> String {
    format!("n{}_{}", a.level, a.bits())
}

/// `X(u)`: the members of `x` below `u`.
pub fn descendants(params: TreeParams, x: &LeafSet, u: &TreeNode) -> LeafSet {
    LeafSet(x.iter().copied().filter(|&v| u.is_ancestor_of(params, v)).collect())
}

/// `(X_L(u), X_R(u))`, split by the bit following `u`'s prefix.
pub fn split_descendants(params: TreeParams, x: &LeafSet, u: &TreeNode) -> (LeafSet, LeafSet) {
    let mut l = Vec::new();
    let mut r = Vec::new();
    for &v in x.iter() {
        match u.side_of(params, v) {
            Some(0) => l.push(v),
            Some(_) => r.push(v),
            None => {}
        }
    }
    (LeafSet(l), LeafSet(r))
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

    // common leading bits counted one position at a time
    fn lcp_oracle(n: u32, x: u32, y: u32) -> u32 {
        let mut c = 0;
        for i in (0..n).rev() {
            if ((x - 1) >> i) & 1 != ((y - 1) >> i) & 1 {
                break;
            }
            c += 1;
        }
        c + 1
    }

    #[test]
    fn ancestor_examples() {
        let t = p(3);
        assert_eq!(ancestor(t, 2, 3).unwrap(), TreeNode::from_bits("0").unwrap());
        assert_eq!(ancestor(t, 3, 7).unwrap(), TreeNode::root());
        let leaf = ancestor(t, 5, 5).unwrap();
        assert_eq!((leaf.level, leaf.bits()), (4, "100".to_string()));
        assert!(leaf.is_leaf(t));
        assert!(ancestor(t, 0, 3).is_err());
        assert!(ancestor(t, 9, 3).is_err());
    }

    #[test]
    fn delta_examples_and_oracle() {
        let t = p(3);
        assert_eq!(delta(t, 2, 3).unwrap(), 2);
        assert_eq!(delta(t, 1, 2).unwrap(), 3);
        assert_eq!(delta(t, 3, 7).unwrap(), 1);
        for n in 1..=6 {
            for x in 1..=(1u32 << n) {
                for y in 1..=(1u32 << n) {
                    assert_eq!(delta_raw(n, x, y), lcp_oracle(n, x, y));
                }
            }
        }
    }

    #[test]
    fn aux_tree_examples() {
        let t = p(3);
        let a = aux_tree(t, &set(&[2, 3, 7])).unwrap();
        assert_eq!(a.ancestors, vec![TreeNode::from_bits("0").unwrap(), TreeNode::root()]);
        assert_eq!(a.deltas, vec![2, 1]);
        assert_eq!(a.delta_set, [1, 2].into_iter().collect());
        assert_eq!(aux_tree(t, &set(&[1, 2, 3, 8])).unwrap().deltas, vec![3, 2, 1]);
        let s = aux_tree(t, &set(&[5])).unwrap();
        assert!(s.ancestors.is_empty() && s.deltas.is_empty());
        assert!(aux_tree(t, &set(&[])).is_err());
    }

    #[test]
    fn descendants_examples() {
        let t = p(3);
        let x = set(&[1, 2, 3, 8]);
        assert_eq!(descendants(t, &x, &TreeNode::from_bits("0").unwrap()), set(&[1, 2, 3]));
        assert_eq!(descendants(t, &x, &TreeNode::root()), x);
        let (l, r) = split_descendants(t, &x, &TreeNode::root());
        assert_eq!((l, r), (set(&[1, 2, 3]), set(&[8])));
        assert_eq!(descendants(t, &x, &TreeNode::from_bits("11").unwrap()), set(&[8]));
    }

    #[test]
    fn leafset_rejects_unsorted() {
        assert!(LeafSet::new(vec![3, 2]).is_err());
        assert!(LeafSet::new(vec![2, 2]).is_err());
        assert!(LeafSet::new(vec![0, 2]).is_err());
        assert_eq!(LeafSet::from_unsorted(vec![3, 1, 3]).unwrap(), set(&[1, 3]));
    }

    #[test]
    fn params_bounds() {
        assert!(TreeParams::new(0).is_err());
        assert!(TreeParams::new(25).is_err());
        assert_eq!(p(24).leaf_count(), 1 << 24);
    }

    #[test]
    fn dot_has_every_vertex() {
        let a = aux_tree(p(3), &set(&[2, 3, 7])).unwrap();
        let dot = a.to_dot();
        assert!(dot.contains("x2") && dot.contains("x3") && dot.contains("x7"));
        assert_eq!(dot.matches("->").count(), 4);
    }
}
