//! Finite graded posets given by their cover relations.

use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("cover ({0}, {1}) refers to an element outside the poset")]
    IndexOutOfRange(usize, usize),
    #[error("element {0} covers itself")]
    SelfCover(usize),
    #[error("cover ({0}, {1}) is listed twice")]
    DuplicateCover(usize, usize),
    #[error("duplicate element label {0:?}")]
    DuplicateLabel(String),
    #[error("cover relation contains a cycle")]
    Cycle,
    #[error("poset has {0} minimal elements; a unique bottom is required")]
    NoUniqueBottom(usize),
    #[error("cover ({lo}, {hi}) is inconsistent with a rank function")]
    NotGraded { lo: usize, hi: usize },
}

/// A finite graded poset with a unique minimum.
///
/// Elements are indices `0..len()`, each with a stable string label.
/// `below[y]` holds every `x <= y`, so order queries are bit lookups.
#[derive(Clone, Debug)]
pub struct GradedPoset {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    rank: Vec<u32>,
    bottom: Option<usize>,
    top: Option<usize>,
    below: Vec<FixedBitSet>,
}

#[derive(Serialize, Deserialize)]
struct PosetJson {
    elements: Vec<String>,
    covers: Vec<[usize; 2]>,
}

impl PartialEq for GradedPoset {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.down == other.down
    }
}

impl Eq for GradedPoset {}

impl GradedPoset {
    pub fn empty() -> Self {
        GradedPoset {
            labels: Vec::new(),
            index: HashMap::new(),
            up: Vec::new(),
            down: Vec::new(),
            rank: Vec::new(),
            bottom: None,
            top: None,
            below: Vec::new(),
        }
    }

    /// Build from labels and `(lower, upper)` cover pairs.
    pub fn from_covers(labels: Vec<String>, covers: &[(usize, usize)]) -> Result<Self, PosetError> {
        let n = labels.len();
        if n == 0 {
            return Ok(Self::empty());
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(PosetError::DuplicateLabel(l.clone()));
            }
        }
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for &(lo, hi) in covers {
            if lo >= n || hi >= n {
                return Err(PosetError::IndexOutOfRange(lo, hi));
            }
            if lo == hi {
                return Err(PosetError::SelfCover(lo));
            }
            if up[lo].contains(&hi) {
                return Err(PosetError::DuplicateCover(lo, hi));
            }
            up[lo].push(hi);
            down[hi].push(lo);
        }
        for v in up.iter_mut().chain(down.iter_mut()) {
            v.sort_unstable();
        }

        // Kahn's algorithm gives a linear extension and detects cycles.
        let mut indegree: Vec<usize> = down.iter().map(Vec::len).collect();
        let minimal: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        let mut stack = minimal.clone();
        while let Some(x) = stack.pop() {
            order.push(x);
            for &y in &up[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    stack.push(y);
                }
            }
        }
        if order.len() != n {
            return Err(PosetError::Cycle);
        }
        if minimal.len() != 1 {
            return Err(PosetError::NoUniqueBottom(minimal.len()));
        }
        let bottom = minimal[0];

        let mut rank = vec![u32::MAX; n];
        rank[bottom] = 0;
        for &x in &order {
            for &y in &up[x] {
                let r = rank[x] + 1;
                if rank[y] == u32::MAX {
                    rank[y] = r;
                } else if rank[y] != r {
                    return Err(PosetError::NotGraded { lo: x, hi: y });
                }
            }
        }
        let mut below = vec![FixedBitSet::with_capacity(n); n];
        for &y in &order {
            let mut set = FixedBitSet::with_capacity(n);
            set.insert(y);
            for &x in &down[y] {
                set.union_with(&below[x]);
            }
            below[y] = set;
        }
        let maximal: Vec<usize> = (0..n).filter(|&i| up[i].is_empty()).collect();
        let top = (maximal.len() == 1).then(|| maximal[0]);

        Ok(GradedPoset { labels, index, up, down, rank, bottom: Some(bottom), top, below })
    }

    /// Build from a strict order relation, computing the covers as its
    /// transitive reduction. `less` must be a strict partial order.
    pub fn from_relation<F>(labels: Vec<String>, less: F) -> Result<Self, PosetError>
    where
        F: Fn(usize, usize) -> bool,
    {
        let n = labels.len();
        let strictly_below: Vec<FixedBitSet> = (0..n)
            .map(|v| {
                let mut s = FixedBitSet::with_capacity(n);
                for u in 0..n {
                    if u != v && less(u, v) {
                        s.insert(u);
                    }
                }
                s
            })
            .collect();
        let mut covers = Vec::new();
        for v in 0..n {
            let mut implied = FixedBitSet::with_capacity(n);
            for y in strictly_below[v].ones() {
                implied.union_with(&strictly_below[y]);
            }
            for x in strictly_below[v].difference(&implied) {
                covers.push((x, v));
            }
        }
        Self::from_covers(labels, &covers)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn rank(&self, x: usize) -> u32 {
        self.rank[x]
    }

    /// `rank(y) - rank(x)`; only meaningful for `x <= y`.
    pub fn rank_between(&self, x: usize, y: usize) -> u32 {
        self.rank[y] - self.rank[x]
    }

    pub fn max_rank(&self) -> u32 {
        self.rank.iter().copied().max().unwrap_or(0)
    }

    pub fn bottom(&self) -> Option<usize> {
        self.bottom
    }

    pub fn top(&self) -> Option<usize> {
        self.top
    }

    /// Elements covering `x`.
    pub fn up_covers(&self, x: usize) -> &[usize] {
        &self.up[x]
    }

    /// Elements covered by `x`.
    pub fn down_covers(&self, x: usize) -> &[usize] {
        &self.down[x]
    }

    /// `x ⋖ y`.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        self.down[y].binary_search(&x).is_ok()
    }

    pub fn cover_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|x| self.up[x].iter().map(move |&y| (x, y))).collect()
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.below[y].contains(x)
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq(x, y)
    }

    pub fn below_set(&self, y: usize) -> &FixedBitSet {
        &self.below[y]
    }

    /// Indices of `{z : z <= w}` in increasing order.
    pub fn ideal_members(&self, w: usize) -> Vec<usize> {
        self.below[w].ones().collect()
    }

    /// Indices of `{z : x <= z <= y}` in increasing order.
    pub fn interval_members(&self, x: usize, y: usize) -> Vec<usize> {
        if !self.leq(x, y) {
            return Vec::new();
        }
        self.below[y].ones().filter(|&z| self.leq(x, z)).collect()
    }

    /// Elements sorted by rank, ties by index.
    pub fn by_rank(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&x| (self.rank[x], x));
        order
    }

    pub fn elements_of_rank(&self, r: u32) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.rank[x] == r).collect()
    }

    /// The induced subposet on `members` (assumed convex, e.g. an interval),
    /// keeping labels. Covers of a convex subset are inherited.
    pub fn induced_convex(&self, members: &[usize]) -> GradedPoset {
        if members.is_empty() {
            return GradedPoset::empty();
        }
        let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let labels = members.iter().map(|&m| self.labels[m].clone()).collect();
        let covers: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|&m| {
                self.up[m].iter().filter_map(|y| pos.get(y).map(|&j| (pos[&m], j))).collect::<Vec<_>>()
            })
            .collect();
        GradedPoset::from_covers(labels, &covers).expect("convex subposet of a graded poset")
    }

    /// `[x, y]` as a poset; empty when `x` is not below `y`.
    pub fn interval(&self, x: usize, y: usize) -> GradedPoset {
        self.induced_convex(&self.interval_members(x, y))
    }

    /// `P_{<= w}`.
    pub fn order_ideal(&self, w: usize) -> GradedPoset {
        self.induced_convex(&self.ideal_members(w))
    }

    pub fn is_chain(&self) -> bool {
        !self.is_empty() && (0..=self.max_rank()).all(|r| self.elements_of_rank(r).len() == 1)
    }

    /// Whether the poset is isomorphic to a Bruhat interval in a rank-two
    /// Coxeter group: rank profile `1, 2, ..., 2, 1` with every element
    /// covering all elements one rank below.
    pub fn is_dihedral(&self) -> bool {
        let (Some(_), Some(_)) = (self.bottom, self.top) else {
            return false;
        };
        let k = self.max_rank();
        if k <= 1 {
            return self.is_chain();
        }
        let levels: Vec<Vec<usize>> = (0..=k).map(|r| self.elements_of_rank(r)).collect();
        let profile_ok = levels
            .iter()
            .enumerate()
            .all(|(r, l)| l.len() == if r == 0 || r == k as usize { 1 } else { 2 });
        profile_ok
            && (1..=k as usize).all(|r| levels[r].iter().all(|&y| self.down[y] == levels[r - 1]))
    }

    pub fn is_dihedral_interval(&self, x: usize, y: usize) -> bool {
        self.leq(x, y) && self.interval(x, y).is_dihedral()
    }

    /// Graphviz rendering with edges pointing up. When `matching` is given
    /// (the image of each element, `None` outside its domain), matched cover
    /// edges are drawn bold and fixed points get a double circle.
    pub fn to_dot(&self, matching: Option<&[Option<usize>]>) -> String {
        let mut out = String::from("digraph poset {\n  rankdir=BT;\n  node [shape=circle];\n");
        for x in 0..self.len() {
            let fixed = matching.is_some_and(|m| m[x] == Some(x));
            let style = if fixed { ", shape=doublecircle" } else { "" };
            let _ = writeln!(out, "  n{x} [label={:?}, rank={}{style}];", self.labels[x], self.rank[x]);
        }
        for (x, y) in self.cover_pairs() {
            let matched = matching.is_some_and(|m| m[x] == Some(y));
            let style = if matched { " [style=bold, penwidth=3, dir=none, color=red]" } else { " [dir=none]" };
            let _ = writeln!(out, "  n{x} -> n{y}{style};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let json = PosetJson {
            elements: self.labels.clone(),
            covers: self.cover_pairs().into_iter().map(|(a, b)| [a, b]).collect(),
        };
        serde_json::to_value(json).expect("poset serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, PosetJsonError> {
        let json: PosetJson = serde_json::from_value(value.clone())?;
        let covers: Vec<(usize, usize)> = json.covers.iter().map(|c| (c[0], c[1])).collect();
        Ok(Self::from_covers(json.elements, &covers)?)
    }
}

#[derive(Debug, Error)]
pub enum PosetJsonError {
    #[error("malformed poset JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Poset(#[from] PosetError),
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_ranks() {
        let p = chain(2);
        assert_eq!((p.rank(0), p.rank(1)), (0, 1));
        assert_eq!((p.bottom(), p.top()), (Some(0), Some(1)));
    }

    #[test]
    fn diamond_is_dihedral() {
        let p = diamond();
        assert_eq!(p.max_rank(), 2);
        assert!(p.is_dihedral());
        assert!(p.is_dihedral_interval(0, 3));
        assert!(p.is_dihedral_interval(0, 1));
        assert!(chain(2).is_dihedral());
        for m in 2..6 {
            assert!(dihedral(m).is_dihedral(), "I2({m})");
        }
    }

    #[test]
    fn three_atoms_not_dihedral() {
        let p = GradedPoset::from_covers(labels(5), &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]).unwrap();
        assert!(!p.is_dihedral());
        assert!(!chain(3).is_dihedral());
    }

    #[test]
    fn rejects_bad_inputs() {
        // 0 < 1 < 2 together with 0 < 2 skips a rank.
        assert!(matches!(
            GradedPoset::from_covers(labels(3), &[(0, 1), (1, 2), (0, 2)]),
            Err(PosetError::NotGraded { .. })
        ));
        assert_eq!(GradedPoset::from_covers(labels(2), &[(0, 1), (1, 0)]), Err(PosetError::Cycle));
        assert_eq!(GradedPoset::from_covers(labels(3), &[(0, 2), (1, 2)]), Err(PosetError::NoUniqueBottom(2)));
        assert_eq!(GradedPoset::from_covers(labels(2), &[(0, 5)]), Err(PosetError::IndexOutOfRange(0, 5)));
        assert!(matches!(
            GradedPoset::from_covers(vec!["a".into(), "a".into()], &[(0, 1)]),
            Err(PosetError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn intervals_and_ideals() {
        let p = diamond();
        assert!(p.leq(2, 2));
        assert_eq!(p.order_ideal(3), p);
        assert!(p.interval(1, 2).is_empty());
        let iv = p.interval(1, 3);
        assert_eq!(iv.len(), 2);
        assert_eq!(iv.labels(), &["p1".to_string(), "p3".to_string()]);
        assert_eq!(iv.rank(iv.index_of("p3").unwrap()), 1);
        let ideal = p.order_ideal(1);
        assert_eq!(ideal.top(), ideal.index_of("p1"));
    }

    #[test]
    fn relation_builder_reduces() {
        let p = GradedPoset::from_relation(labels(4), |a, b| a < b).unwrap();
        assert_eq!(p, chain(4));
    }

    #[test]
    fn dot_rendering() {
        let single = GradedPoset::from_covers(labels(1), &[]).unwrap();
        let dot = single.to_dot(None);
        assert_eq!(dot.matches("label=").count(), 1);
        assert!(!dot.contains("->"));
        assert_eq!(chain(2).to_dot(None).matches("->").count(), 1);
        let m = [Some(2), Some(3), Some(0), Some(1)];
        let dot = diamond().to_dot(Some(&m));
        assert_eq!(dot.matches("label=").count(), 4);
        assert_eq!(dot.matches("style=bold").count(), 2);
    }

    #[test]
    fn json_round_trip() {
        let p = diamond();
        let v = p.to_json();
        assert_eq!(v["covers"], serde_json::json!([[0, 1], [0, 2], [1, 3], [2, 3]]));
        assert_eq!(GradedPoset::from_json(&v).unwrap(), p);
    }

    fn arb_poset() -> impl Strategy<Value = GradedPoset> {
        // Random graded posets: each element of rank r > 0 covers a nonempty
        // subset of rank r - 1.
        prop::collection::vec(1usize..4, 1..5).prop_flat_map(|widths| {
            let total: usize = widths.iter().sum();
            prop::collection::vec(any::<u8>(), total * 4).prop_map(move |bits| {
                let mut levels = vec![vec![0usize]];
                let mut next = 1;
                for &w in &widths {
                    levels.push((next..next + w).collect());
                    next += w;
                }
                let mut covers = Vec::new();
                let mut k = 0;
                for r in 1..levels.len() {
                    for &hi in &levels[r] {
                        let prev = &levels[r - 1];
                        let mut any = false;
                        for (j, &lo) in prev.iter().enumerate() {
                            if bits[k % bits.len()] >> (j % 8) & 1 == 1 {
                                covers.push((lo, hi));
                                any = true;
                            }
                        }
                        if !any {
                            covers.push((prev[0], hi));
                        }
                        k += 1;
                    }
                }
                GradedPoset::from_covers(labels(next), &covers).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn leq_is_a_partial_order(p in arb_poset()) {
            let n = p.len();
            for x in 0..n {
                prop_assert!(p.leq(x, x));
                for y in 0..n {
                    if x != y && p.leq(x, y) {
                        prop_assert!(!p.leq(y, x));
                        prop_assert!(p.rank(x) < p.rank(y));
                    }
                    for z in 0..n {
                        if p.leq(x, y) && p.leq(y, z) {
                            prop_assert!(p.leq(x, z));
                        }
                    }
                }
            }
        }

        #[test]
        fn intervals_shift_ranks(p in arb_poset()) {
            for x in 0..p.len() {
                for y in 0..p.len() {
                    if !p.leq(x, y) { continue; }
                    let iv = p.interval(x, y);
                    for (i, l) in iv.labels().iter().enumerate() {
                        let z = p.index_of(l).unwrap();
                        prop_assert_eq!(iv.rank(i), p.rank(z) - p.rank(x));
                    }
                }
                let ideal = p.order_ideal(x);
                prop_assert_eq!(ideal.top(), ideal.index_of(p.label(x)));
            }
        }
    }
}
