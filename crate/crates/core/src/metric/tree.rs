//! Depth-truncated rooted trees whose leaves are the strategies.
//!
//! Level-`i` nodes carry weight `w_i = 2^(-i d)`, and the distance between
//! two distinct leaves is the weight of their least common ancestor. Open
//! balls are therefore whole subtrees, and a covering query is a search for
//! a leaf that is not below any ball's subtree root.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of high-degree ("fat") nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FatSpec {
    /// Every node has the base branching factor.
    None,
    /// One fat node per level; the fat nodes form the all-zeros path.
    Leaf,
    /// `2^i` fat nodes on level `i`, forming the binary subtree of paths
    /// with entries in `{0, 1}`.
    Subtree,
}

/// A subset of leaves with a cheap membership test and node predicate, used
/// by level covering oracles of fat decompositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSet {
    All,
    /// The all-zeros leaf.
    FatLeaf,
    /// Leaves whose path uses only child indices 0 and 1.
    FatSubtree,
}

impl LeafSet {
    fn meets(self, prefix: &[u64]) -> bool {
        match self {
            LeafSet::All => true,
            LeafSet::FatLeaf => prefix.iter().all(|&c| c == 0),
            LeafSet::FatSubtree => prefix.iter().all(|&c| c < 2),
        }
    }

    pub fn contains(self, leaf: &[u64]) -> bool {
        self.meets(leaf)
    }

    /// Child indices of a node meeting the set that still meet it, or
    /// `None` when every child qualifies.
    fn restricted_children(self) -> Option<&'static [u64]> {
        match self {
            LeafSet::All => None,
            LeafSet::FatLeaf => Some(&[0]),
            LeafSet::FatSubtree => Some(&[0, 1]),
        }
    }
}

pub(crate) const MAX_FAT_DEPTH: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeParams", into = "TreeParams")]
pub struct TreeMetric {
    d: f64,
    depth: usize,
    branching: u64,
    fat: FatSpec,
    weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TreeParams {
    d: f64,
    depth: usize,
    branching: u64,
    fat: FatSpec,
}

impl TryFrom<TreeParams> for TreeMetric {
    type Error = Error;

    fn try_from(p: TreeParams) -> Result<Self> {
        TreeMetric::new(p.d, p.depth, p.branching, p.fat)
    }
}

impl From<TreeMetric> for TreeParams {
    fn from(t: TreeMetric) -> Self {
        TreeParams {
            d: t.d,
            depth: t.depth,
            branching: t.branching,
            fat: t.fat,
        }
    }
}

impl TreeMetric {
    pub fn new(d: f64, depth: usize, branching: u64, fat: FatSpec) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "tree weight exponent d must be > 0, got {d}"
            )));
        }
        if depth == 0 {
            return Err(Error::InvalidMetric("tree depth must be >= 1".into()));
        }
        if branching < 2 {
            return Err(Error::InvalidMetric(format!(
                "tree branching must be >= 2, got {branching}"
            )));
        }
        if fat != FatSpec::None {
            if branching != 2 {
                return Err(Error::InvalidMetric(
                    "fat trees are defined for base branching 2 (4^i nodes on level i)".into(),
                ));
            }
            if depth > MAX_FAT_DEPTH {
                return Err(Error::InvalidMetric(format!(
                    "fat tree depth {depth} exceeds the supported maximum {MAX_FAT_DEPTH}"
                )));
            }
        }
        let weights = (0..depth).map(|i| (-(i as f64) * d).exp2()).collect();
        Ok(Self {
            d,
            depth,
            branching,
            fat,
            weights,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branching(&self) -> u64 {
        self.branching
    }

    pub fn fat(&self) -> FatSpec {
        self.fat
    }

    /// Weight of a level-`level` node (`level < depth`).
    pub fn weight(&self, level: usize) -> f64 {
        self.weights[level]
    }

    pub fn is_fat_node(&self, prefix: &[u64]) -> bool {
        match self.fat {
            FatSpec::None => false,
            FatSpec::Leaf => LeafSet::FatLeaf.meets(prefix),
            FatSpec::Subtree => LeafSet::FatSubtree.meets(prefix),
        }
    }

    /// Out-degree of the node identified by `prefix`.
    pub fn degree(&self, prefix: &[u64]) -> u64 {
        if !self.is_fat_node(prefix) {
            return self.branching;
        }
        let i = prefix.len() as u32;
        match self.fat {
            FatSpec::None => self.branching,
            // 4^(i+1) nodes on the next level: 2 * (4^i - 1) thin children plus the fat ones
            FatSpec::Leaf => 2 * 4u64.pow(i) + 2,
            FatSpec::Subtree => 2u64.pow(i + 1) + 2,
        }
    }

    pub fn validate_path(&self, path: &[u64]) -> Result<()> {
        if path.len() != self.depth {
            return Err(Error::InvalidPoint(format!(
                "tree leaf path has length {}, expected {}",
                path.len(),
                self.depth
            )));
        }
        for level in 0..path.len() {
            let deg = self.degree(&path[..level]);
            if path[level] >= deg {
                return Err(Error::InvalidPoint(format!(
                    "child index {} at level {level} exceeds degree {deg}",
                    path[level]
                )));
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: &[u64], b: &[u64]) -> f64 {
        let lcp = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        if lcp >= self.depth || (lcp == a.len() && lcp == b.len()) {
            0.0
        } else {
            self.weights[lcp]
        }
    }

    /// Level of the subtree forming the open ball of radius `r`, or `None`
    /// for an empty ball.
    pub(crate) fn open_ball_level(&self, r: f64) -> Option<usize> {
        if !(r > 0.0) {
            return None;
        }
        Some(
            self.weights
                .iter()
                .position(|&w| w < r)
                .unwrap_or(self.depth),
        )
    }

    /// Level of the subtree forming the closed ball of radius `rho >= 0`.
    pub(crate) fn closed_ball_level(&self, rho: f64) -> usize {
        self.weights
            .iter()
            .position(|&w| w <= rho)
            .unwrap_or(self.depth)
    }

    /// Leftmost leaf of `set` below `region` (the whole tree if absent) that
    /// lies outside every ball, if any.
    pub(crate) fn find_uncovered(
        &self,
        balls: &[(&[u64], f64)],
        region: Option<(&[u64], f64)>,
        set: LeafSet,
    ) -> Option<Vec<u64>> {
        let start: Vec<u64> = match region {
            Some((c, rho)) => {
                if rho < 0.0 {
                    return None;
                }
                c[..self.closed_ball_level(rho)].to_vec()
            }
            None => Vec::new(),
        };
        if !set.meets(&start) {
            return None;
        }
        let mut prefixes: Vec<&[u64]> = Vec::with_capacity(balls.len());
        for &(center, r) in balls {
            let Some(level) = self.open_ball_level(r) else {
                continue;
            };
            let p = &center[..level];
            if p.len() <= start.len() {
                if start.starts_with(p) {
                    return None;
                }
            } else if p.starts_with(&start) {
                prefixes.push(p);
            }
        }
        prefixes.sort_unstable();
        prefixes.dedup();
        let mut node = start;
        if self.search(&mut node, &prefixes, set) {
            Some(node)
        } else {
            None
        }
    }

    /// Depth-first search below `node`; on success `node` holds the leaf.
    fn search(&self, node: &mut Vec<u64>, prefixes: &[&[u64]], set: LeafSet) -> bool {
        if prefixes.first().is_some_and(|p| p.len() == node.len()) {
            return false;
        }
        if node.len() == self.depth {
            return true;
        }
        if prefixes.is_empty() {
            self.extend_to_leaf(node, set);
            return true;
        }
        let level = node.len();
        let groups = group_by_child(prefixes, level);
        let group_of = |child: u64| -> &[&[u64]] {
            match groups.binary_search_by_key(&child, |g| g.0) {
                Ok(i) => groups[i].1,
                Err(_) => &[],
            }
        };
        if let Some(children) = set.restricted_children() {
            for &child in children {
                node.push(child);
                if self.search(node, group_of(child), set) {
                    return true;
                }
                node.pop();
            }
            return false;
        }
        let degree = self.degree(node);
        let mut next = 0u64;
        for &(child, group) in &groups {
            if next < child {
                // `next` holds no ball centers, so its whole subtree is uncovered
                node.push(next);
                self.extend_to_leaf(node, set);
                return true;
            }
            node.push(child);
            if self.search(node, group, set) {
                return true;
            }
            node.pop();
            next = child + 1;
        }
        if next < degree {
            node.push(next);
            self.extend_to_leaf(node, set);
            return true;
        }
        false
    }

    fn extend_to_leaf(&self, node: &mut Vec<u64>, set: LeafSet) {
        while node.len() < self.depth {
            let child = set.restricted_children().map_or(0, |c| c[0]);
            node.push(child);
        }
    }

    pub(crate) fn sample_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut path = Vec::with_capacity(self.depth);
        while path.len() < self.depth {
            let deg = self.degree(&path);
            path.push(rng.random_range(0..deg));
        }
        path
    }

    /// Random leaf sharing the prefix of `leaf` down to the closed ball of
    /// radius `scale`.
    pub(crate) fn sample_near<R: Rng + ?Sized>(
        &self,
        leaf: &[u64],
        scale: f64,
        rng: &mut R,
    ) -> Vec<u64> {
        let keep = self.closed_ball_level(scale).min(leaf.len());
        let mut path = leaf[..keep].to_vec();
        while path.len() < self.depth {
            let deg = self.degree(&path);
            path.push(rng.random_range(0..deg));
        }
        path
    }

    /// Number of level-`level` nodes.
    pub(crate) fn nodes_on_level(&self, level: usize) -> u128 {
        match self.fat {
            FatSpec::None => (self.branching as u128).saturating_pow(level as u32),
            FatSpec::Leaf | FatSpec::Subtree => 4u128.pow(level as u32),
        }
    }

    /// Visit one representative leaf (the leftmost) below each node of the
    /// given level, in lexicographic order.
    pub(crate) fn visit_level(&self, level: usize, f: &mut dyn FnMut(Vec<u64>)) {
        let mut prefix = Vec::with_capacity(self.depth);
        self.visit_rec(level, &mut prefix, f);
    }

    fn visit_rec(&self, level: usize, prefix: &mut Vec<u64>, f: &mut dyn FnMut(Vec<u64>)) {
        if prefix.len() == level {
            let mut leaf = prefix.clone();
            leaf.resize(self.depth, 0);
            f(leaf);
            return;
        }
        for c in 0..self.degree(prefix) {
            prefix.push(c);
            self.visit_rec(level, prefix, f);
            prefix.pop();
        }
    }

    /// Covering dimension of the truncated-away infinite tree.
    pub fn covering_dimension(&self) -> f64 {
        match self.fat {
            FatSpec::None => (self.branching as f64).log2() / self.d,
            FatSpec::Leaf | FatSpec::Subtree => 2.0 / self.d,
        }
    }

    /// Infimum of the covering dimension over open subsets.
    pub fn min_covering_dimension(&self) -> f64 {
        (self.branching as f64).log2() / self.d
    }
}

fn group_by_child<'a>(prefixes: &'a [&'a [u64]], level: usize) -> Vec<(u64, &'a [&'a [u64]])> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < prefixes.len() {
        let key = prefixes[start][level];
        let mut end = start + 1;
        while end < prefixes.len() && prefixes[end][level] == key {
            end += 1;
        }
        groups.push((key, &prefixes[start..end]));
        start = end;
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(depth: usize) -> TreeMetric {
        TreeMetric::new(1.0, depth, 2, FatSpec::None).unwrap()
    }

    #[test]
    fn distance_is_lca_weight() {
        let t = binary(5);
        assert_eq!(t.distance(&[0, 0, 1, 0, 0], &[0, 0, 0, 1, 1]), 0.25);
        assert_eq!(t.distance(&[1, 0, 1, 0, 0], &[0, 0, 1, 0, 0]), 1.0);
        assert_eq!(t.distance(&[1, 0, 1, 0, 0], &[1, 0, 1, 0, 0]), 0.0);
    }

    #[test]
    fn fat_leaf_levels_have_four_to_the_i_nodes() {
        let t = TreeMetric::new(1.0, 6, 2, FatSpec::Leaf).unwrap();
        for level in 0..5 {
            let mut count = 0u128;
            t.visit_level(level, &mut |_| count += 1);
            assert_eq!(count, 4u128.pow(level as u32));
            assert_eq!(count, t.nodes_on_level(level));
        }
    }

    #[test]
    fn fat_subtree_levels_have_four_to_the_i_nodes() {
        let t = TreeMetric::new(1.0, 6, 2, FatSpec::Subtree).unwrap();
        for level in 0..5 {
            let mut count = 0u128;
            t.visit_level(level, &mut |_| count += 1);
            assert_eq!(count, 4u128.pow(level as u32));
        }
    }

    #[test]
    fn ball_levels() {
        let t = binary(4);
        assert_eq!(t.open_ball_level(1.5), Some(0));
        assert_eq!(t.open_ball_level(1.0), Some(1));
        assert_eq!(t.open_ball_level(0.3), Some(2));
        assert_eq!(t.open_ball_level(0.01), Some(4));
        assert_eq!(t.open_ball_level(0.0), None);
        assert_eq!(t.closed_ball_level(0.25), 2);
    }

    #[test]
    fn uncovered_search_skips_covered_subtrees() {
        let t = binary(3);
        let a = [0u64, 0, 0];
        let b = [1u64, 1, 1];
        assert_eq!(
            t.find_uncovered(&[], None, LeafSet::All),
            Some(vec![0, 0, 0])
        );
        // a covers subtree [0], b covers subtree [1, 1]
        let w = t.find_uncovered(&[(&a, 0.9), (&b, 0.4)], None, LeafSet::All);
        assert_eq!(w, Some(vec![1, 0, 0]));
        let c = [1u64, 0, 1];
        let w = t.find_uncovered(&[(&a, 0.9), (&b, 0.4), (&c, 0.4)], None, LeafSet::All);
        assert_eq!(w, None);
    }

    #[test]
    fn restricted_search_finds_fat_leaf() {
        let t = TreeMetric::new(1.0, 4, 2, FatSpec::Leaf).unwrap();
        let thin = [1u64, 0, 0, 0];
        assert_eq!(
            t.find_uncovered(&[(&thin, 0.9)], None, LeafSet::FatLeaf),
            Some(vec![0, 0, 0, 0])
        );
        let fat = [0u64, 0, 0, 0];
        assert_eq!(
            t.find_uncovered(&[(&fat, 0.01)], None, LeafSet::FatLeaf),
            None
        );
    }

    #[test]
    fn region_restricts_witness() {
        let t = binary(3);
        let a = [0u64, 0, 0];
        let w = t.find_uncovered(&[(&a, 0.4)], Some((&[0, 1, 1], 0.5)), LeafSet::All);
        assert_eq!(w, Some(vec![0, 1, 0]));
        let w = t.find_uncovered(&[(&a, 0.9)], Some((&[0, 1, 1], 0.5)), LeafSet::All);
        assert_eq!(w, None);
    }
}
