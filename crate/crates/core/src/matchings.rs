//! Special partial matchings (SPMs) and quasi SPMs of graded posets.
//!
//! A matching is stored over the whole host poset: `images[x]` is `Some(y)`
//! when `x` is in the domain and maps to `y`. An SPM of `w` is a matching
//! whose domain is exactly `P_{<= w}`.

use std::collections::{BTreeMap, VecDeque};

use fixedbitset::FixedBitSet;
use serde_json::{json, Value};
use thiserror::Error;

use crate::coxeter::{ParabolicQuotient, Side};
use crate::exec;
use crate::poset::GradedPoset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Up,
    Down,
    Fixed,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("matching covers {got} elements but the poset has {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("element {0} is not mapped back to itself by the involution")]
    NotInvolution(usize),
    #[error("element {0} is not mapped to itself or to a cover neighbour")]
    NotNeighbor(usize),
    #[error("compatibility fails on the cover {0} < {1}")]
    Incompatible(usize, usize),
    #[error("element {0} is not matched down")]
    TopNotMatchedDown(usize),
    #[error("domain differs from the order ideal of {top} at element {element}")]
    WrongDomain { top: usize, element: usize },
    #[error("domain is not an order ideal: {0} is missing below {1}")]
    NotIdeal(usize, usize),
    #[error("lifting property fails for {x} < {y}")]
    Lifting { x: usize, y: usize },
    #[error("left multiplication moves {0} down out of the quotient")]
    NotHSpecial(usize),
}

/// An involution on an order ideal of a host poset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialMatching {
    images: Vec<Option<usize>>,
}

impl PartialMatching {
    pub fn new(images: Vec<Option<usize>>) -> Self {
        PartialMatching { images }
    }

    /// Identity on the given members, undefined elsewhere.
    pub fn identity_on(host_len: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut images = vec![None; host_len];
        for x in members {
            images[x] = Some(x);
        }
        PartialMatching { images }
    }

    pub fn images(&self) -> &[Option<usize>] {
        &self.images
    }

    pub fn host_len(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, x: usize) -> Option<usize> {
        self.images.get(x).copied().flatten()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.image(x).is_some()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().enumerate().filter_map(|(x, m)| m.map(|_| x))
    }

    pub fn kind(&self, p: &GradedPoset, x: usize) -> Option<Kind> {
        let y = self.image(x)?;
        Some(match p.rank(y).cmp(&p.rank(x)) {
            std::cmp::Ordering::Greater => Kind::Up,
            std::cmp::Ordering::Less => Kind::Down,
            std::cmp::Ordering::Equal => Kind::Fixed,
        })
    }

    pub fn is_fixed(&self, x: usize) -> bool {
        self.image(x) == Some(x)
    }

    /// Restriction to `P_{<= w}`, or `None` if some element of the ideal is
    /// outside the domain or is sent outside the ideal.
    pub fn restrict_to_ideal(&self, p: &GradedPoset, w: usize) -> Option<PartialMatching> {
        let ideal = p.below_set(w);
        let mut images = vec![None; self.images.len()];
        for x in ideal.ones() {
            let y = self.image(x)?;
            if !ideal.contains(y) {
                return None;
            }
            images[x] = Some(y);
        }
        Some(PartialMatching { images })
    }

    /// `{"poset": reference, "map": [image index or null]}`.
    pub fn to_json(&self, poset_ref: &str) -> Value {
        json!({ "poset": poset_ref, "map": self.images })
    }

    pub fn from_json(value: &Value) -> Result<Self, serde_json::Error> {
        let map = value.get("map").cloned().unwrap_or(Value::Null);
        Ok(PartialMatching { images: serde_json::from_value(map)? })
    }
}

/// Check the quasi SPM axioms on the domain of `m`, which must be an order
/// ideal of `p`.
pub fn verify_qspm(p: &GradedPoset, m: &PartialMatching) -> Result<(), Violation> {
    if m.host_len() != p.len() {
        return Err(Violation::SizeMismatch { got: m.host_len(), expected: p.len() });
    }
    for x in m.domain() {
        for &d in p.down_covers(x) {
            if !m.contains(d) {
                return Err(Violation::NotIdeal(d, x));
            }
        }
        let y = m.image(x).expect("x in domain");
        if m.image(y) != Some(x) {
            return Err(Violation::NotInvolution(x));
        }
        if y != x && !p.covers(x, y) && !p.covers(y, x) {
            return Err(Violation::NotNeighbor(x));
        }
    }
    for x in m.domain() {
        let mx = m.image(x).expect("x in domain");
        for &y in p.up_covers(x) {
            if let Some(my) = m.image(y) {
                if mx != y && !p.lt(mx, my) {
                    return Err(Violation::Incompatible(x, y));
                }
            }
        }
    }
    Ok(())
}

/// Check that `m` is an SPM of `w`: a quasi SPM with domain `P_{<= w}` and
/// `m(w)` covered by `w`.
pub fn verify_spm(p: &GradedPoset, m: &PartialMatching, w: usize) -> Result<(), Violation> {
    if m.host_len() != p.len() {
        return Err(Violation::SizeMismatch { got: m.host_len(), expected: p.len() });
    }
    let ideal = p.below_set(w);
    if let Some(element) = (0..p.len()).find(|&x| ideal.contains(x) != m.contains(x)) {
        return Err(Violation::WrongDomain { top: w, element });
    }
    verify_qspm(p, m)?;
    match m.image(w) {
        Some(v) if p.covers(v, w) => Ok(()),
        _ => Err(Violation::TopNotMatchedDown(w)),
    }
}

/// Check the lifting property for every `x < y` in the domain with
/// `m(y) <= y`: `m(x) <= y`; `m(x) <= x` implies `m(x) < m(y)`; `m(x) >= x`
/// implies `x <= m(y)`.
pub fn check_lifting(p: &GradedPoset, m: &PartialMatching) -> Result<(), Violation> {
    let domain: Vec<usize> = m.domain().collect();
    exec::try_for_each(&domain, |&y| {
        let my = m.image(y).expect("y in domain");
        if !p.leq(my, y) {
            return Ok(());
        }
        for x in p.below_set(y).ones().filter(|&x| x != y) {
            let Some(mx) = m.image(x) else { continue };
            let ok = p.leq(mx, y)
                && (!p.leq(mx, x) || p.lt(mx, my))
                && (!p.leq(x, mx) || p.leq(x, my));
            if !ok {
                return Err(Violation::Lifting { x, y });
            }
        }
        Ok(())
    })
}

/// All SPMs of `w`, sorted by their image vectors.
pub fn enumerate_spms(p: &GradedPoset, w: usize) -> Vec<PartialMatching> {
    let mut out = Vec::new();
    search_spms(p, w, usize::MAX, &mut out);
    out.sort();
    out
}

/// Some SPM of `w`, if there is one.
pub fn find_spm(p: &GradedPoset, w: usize) -> Option<PartialMatching> {
    let mut out = Vec::new();
    search_spms(p, w, 1, &mut out);
    out.pop()
}

// Top-down backtracking: elements are decided in decreasing rank, each one
// either fixed or matched to a still-free lower cover. Compatibility is
// checked on every cover pair as soon as both ends have images.
fn search_spms(p: &GradedPoset, w: usize, limit: usize, out: &mut Vec<PartialMatching>) {
    let ideal = p.below_set(w).clone();
    let mut order: Vec<usize> = ideal.ones().collect();
    order.sort_by_key(|&x| (std::cmp::Reverse(p.rank(x)), x));
    let mut images = vec![None; p.len()];
    let mut st = Search { p, ideal: &ideal, order: &order, top: w, limit, out };
    st.go(0, &mut images);
}

struct Search<'a> {
    p: &'a GradedPoset,
    ideal: &'a FixedBitSet,
    order: &'a [usize],
    top: usize,
    limit: usize,
    out: &'a mut Vec<PartialMatching>,
}

impl Search<'_> {
    fn go(&mut self, k: usize, images: &mut Vec<Option<usize>>) {
        if self.out.len() >= self.limit {
            return;
        }
        let Some(&x) = self.order.get(k) else {
            self.out.push(PartialMatching { images: images.clone() });
            return;
        };
        if images[x].is_some() {
            self.go(k + 1, images);
            return;
        }
        if x != self.top {
            images[x] = Some(x);
            if self.consistent(images, x) {
                self.go(k + 1, images);
            }
            images[x] = None;
        }
        for &y in self.p.down_covers(x) {
            if images[y].is_some() {
                continue;
            }
            images[x] = Some(y);
            images[y] = Some(x);
            if self.consistent(images, x) && self.consistent(images, y) {
                self.go(k + 1, images);
            }
            images[x] = None;
            images[y] = None;
        }
    }

    fn consistent(&self, images: &[Option<usize>], x: usize) -> bool {
        let p = self.p;
        let ok = |a: usize, b: usize| match (images[a], images[b]) {
            (Some(ma), Some(mb)) => ma == b || p.lt(ma, mb),
            _ => true,
        };
        p.up_covers(x).iter().filter(|&&y| self.ideal.contains(y)).all(|&y| ok(x, y))
            && p.down_covers(x).iter().all(|&d| ok(d, x))
    }
}

/// The left multiplication matching `u -> su` on all of `W^H`, with `u`
/// fixed when `su` leaves `W^H`.
pub fn lambda_matching(quot: &ParabolicQuotient, s: usize) -> Result<PartialMatching, Violation> {
    let sys = quot.system();
    let p = quot.poset();
    let mut images = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let u = quot.group_element(i);
        let su = sys.mult_gen(u, s, Side::Left);
        match quot.position(su) {
            Some(j) => images.push(Some(j)),
            None if sys.length(su) < sys.length(u) => return Err(Violation::NotHSpecial(i)),
            None => images.push(Some(i)),
        }
    }
    let m = PartialMatching { images };
    verify_qspm(p, &m)?;
    Ok(m)
}

/// `lambda_matching` restricted to `[e, w]^H`; verified as an SPM of `w`
/// when `s` is a left descent of `w`, and as a quasi SPM otherwise.
pub fn lambda_partial(quot: &ParabolicQuotient, s: usize, w: usize) -> Result<PartialMatching, Violation> {
    let p = quot.poset();
    let full = lambda_matching(quot, s)?;
    let restricted = full.restrict_to_ideal(p, w).ok_or(Violation::WrongDomain { top: w, element: w })?;
    if full.kind(p, w) == Some(Kind::Down) {
        verify_spm(p, &restricted, w)?;
    } else {
        verify_qspm(p, &restricted)?;
    }
    Ok(restricted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitShape {
    Dihedral,
    ChainLike,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitReport {
    /// Orbit members in increasing index order.
    pub orbit: Vec<usize>,
    pub bottom: usize,
    pub top: usize,
    pub shape: OrbitShape,
    pub m_value: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("a matching is undefined at element {0} of the orbit")]
    Undefined(usize),
    #[error("orbit {0:?} is not an interval")]
    NotInterval(Vec<usize>),
    #[error("orbit {0:?} is neither dihedral nor chain-like")]
    Unclassified(Vec<usize>),
}

/// The `<M, N>`-orbit of `u`, its shape and its `m`-value.
pub fn orbit_analysis(
    p: &GradedPoset,
    m: &PartialMatching,
    n: &PartialMatching,
    u: usize,
) -> Result<OrbitReport, OrbitError> {
    let mut seen = vec![u];
    let mut queue = VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        for f in [m, n] {
            let y = f.image(x).ok_or(OrbitError::Undefined(x))?;
            if !seen.contains(&y) {
                seen.push(y);
                queue.push_back(y);
            }
        }
    }
    seen.sort_unstable();
    let bottom = *seen.iter().min_by_key(|&&x| (p.rank(x), x)).expect("nonempty");
    let top = *seen.iter().max_by_key(|&&x| (p.rank(x), x)).expect("nonempty");
    if p.interval_members(bottom, top) != seen {
        return Err(OrbitError::NotInterval(seen));
    }
    let interval = p.interval(bottom, top);
    let rank = p.rank_between(bottom, top);
    let moved = |x: usize| m.image(x) != Some(x) && n.image(x) != Some(x);
    let fixed_somewhere = |x: usize| !moved(x);
    let (shape, m_value) = if interval.is_dihedral() && seen.iter().all(|&x| moved(x)) {
        (OrbitShape::Dihedral, rank)
    } else if interval.is_chain() && fixed_somewhere(bottom) && fixed_somewhere(top) {
        (OrbitShape::ChainLike, rank + 1)
    } else {
        return Err(OrbitError::Unclassified(seen));
    };
    Ok(OrbitReport { orbit: seen, bottom, top, shape, m_value })
}

/// All orbits of `<M, N>` on the common domain, ordered by least element.
pub fn orbits(p: &GradedPoset, m: &PartialMatching, n: &PartialMatching) -> Result<Vec<OrbitReport>, OrbitError> {
    let mut covered = vec![false; p.len()];
    let mut out = Vec::new();
    for u in m.domain() {
        if covered[u] {
            continue;
        }
        let report = orbit_analysis(p, m, n, u)?;
        for &x in &report.orbit {
            covered[x] = true;
        }
        out.push(report);
    }
    Ok(out)
}

/// Whether the restrictions of `m` and `n` to `P_{<= w}` are strictly
/// coherent: every orbit's `m`-value divides that of the orbit of `w`.
/// Returns `Ok(false)` when either matching does not restrict.
pub fn strictly_coherent(
    p: &GradedPoset,
    m: &PartialMatching,
    n: &PartialMatching,
    w: usize,
) -> Result<bool, OrbitError> {
    let (Some(m), Some(n)) = (m.restrict_to_ideal(p, w), n.restrict_to_ideal(p, w)) else {
        return Ok(false);
    };
    let all = orbits(p, &m, &n)?;
    let top = all.iter().find(|o| o.orbit.contains(&w)).expect("w is in the domain").m_value;
    Ok(all.iter().all(|o| top % o.m_value == 0))
}

/// Whether `m` and `n` are joined by a path of strictly coherent pairs in
/// `pool` (normally every SPM of `w`).
pub fn coherent(
    p: &GradedPoset,
    m: &PartialMatching,
    n: &PartialMatching,
    w: usize,
    pool: &[PartialMatching],
) -> Result<bool, OrbitError> {
    let (Some(m), Some(n)) = (m.restrict_to_ideal(p, w), n.restrict_to_ideal(p, w)) else {
        return Ok(false);
    };
    if m == n || strictly_coherent(p, &m, &n, w)? {
        return Ok(true);
    }
    let mut nodes: Vec<PartialMatching> = pool.iter().filter_map(|x| x.restrict_to_ideal(p, w)).collect();
    for x in [&m, &n] {
        if !nodes.contains(x) {
            nodes.push(x.clone());
        }
    }
    let start = nodes.iter().position(|x| *x == m).expect("m was added");
    let goal = nodes.iter().position(|x| *x == n).expect("n was added");
    let mut visited = vec![false; nodes.len()];
    visited[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for j in 0..nodes.len() {
            if !visited[j] && strictly_coherent(p, &nodes[i], &nodes[j], w)? {
                if j == goal {
                    return Ok(true);
                }
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(false)
}

/// Components of the strict-coherence graph on the SPMs of `w`.
pub fn coherence_components(p: &GradedPoset, w: usize) -> Result<Vec<Vec<usize>>, OrbitError> {
    let pool = enumerate_spms(p, w);
    let mut comp = vec![usize::MAX; pool.len()];
    let mut out = Vec::new();
    for s in 0..pool.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut members = vec![s];
        let mut k = 0;
        while k < members.len() {
            let i = members[k];
            for j in 0..pool.len() {
                if comp[j] == usize::MAX && strictly_coherent(p, &pool[i], &pool[j], w)? {
                    comp[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    Ok(out)
}

/// First element `w` at which two SPMs of `w` fail to be coherent.
pub fn dircon_violation(p: &GradedPoset) -> Option<usize> {
    let elems: Vec<usize> = (0..p.len()).filter(|&w| Some(w) != p.bottom()).collect();
    exec::find_map_first(&elems, |&w| match coherence_components(p, w) {
        Ok(c) if c.len() <= 1 => None,
        _ => Some(w),
    })
}

pub fn is_dircon(p: &GradedPoset) -> bool {
    dircon_violation(p).is_none()
}

/// First non-minimal element whose lower ideal has no SPM.
pub fn pircon_violation(p: &GradedPoset) -> Option<usize> {
    let elems: Vec<usize> = (0..p.len()).filter(|&w| Some(w) != p.bottom()).collect();
    exec::find_map_first(&elems, |&w| find_spm(p, w).is_none().then_some(w))
}

pub fn verify_pircon(p: &GradedPoset) -> bool {
    pircon_violation(p).is_none()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefinementError {
    #[error("no matching assigned to element {0}")]
    Missing(usize),
    #[error("matching assigned to element {0} is invalid: {1}")]
    Invalid(usize, Violation),
    #[error("unknown element label {0:?}")]
    UnknownLabel(String),
    #[error("malformed refinement JSON: {0}")]
    Json(String),
}

/// One SPM of `w` for every non-minimal `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    assignment: Vec<Option<PartialMatching>>,
}

impl Refinement {
    pub fn new(p: &GradedPoset, assignment: Vec<Option<PartialMatching>>) -> Result<Self, RefinementError> {
        for w in 0..p.len() {
            if Some(w) == p.bottom() {
                continue;
            }
            let m = assignment.get(w).and_then(Option::as_ref).ok_or(RefinementError::Missing(w))?;
            verify_spm(p, m, w).map_err(|v| RefinementError::Invalid(w, v))?;
        }
        let mut assignment = assignment;
        assignment.resize(p.len(), None);
        if let Some(b) = p.bottom() {
            assignment[b] = None;
        }
        Ok(Refinement { assignment })
    }

    /// Build by choosing, for each non-minimal `w`, the SPM returned by `pick`.
    pub fn from_fn<F>(p: &GradedPoset, pick: F) -> Result<Self, RefinementError>
    where
        F: Fn(usize) -> Option<PartialMatching>,
    {
        let assignment = (0..p.len()).map(|w| if Some(w) == p.bottom() { None } else { pick(w) }).collect();
        Self::new(p, assignment)
    }

    /// The first SPM (in enumeration order) of every element.
    pub fn first_spm(p: &GradedPoset) -> Result<Self, RefinementError> {
        Self::from_fn(p, |w| find_spm(p, w))
    }

    pub fn matching(&self, w: usize) -> Option<&PartialMatching> {
        self.assignment.get(w).and_then(Option::as_ref)
    }

    /// `{label: [image index or null, ...]}` over the host poset.
    pub fn to_json(&self, p: &GradedPoset) -> Value {
        let map: BTreeMap<&str, &[Option<usize>]> = self
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(w, m)| m.as_ref().map(|m| (p.label(w), m.images())))
            .collect();
        serde_json::to_value(map).expect("refinement serializes")
    }

    pub fn from_json(p: &GradedPoset, value: &Value) -> Result<Self, RefinementError> {
        let map: BTreeMap<String, Value> =
            serde_json::from_value(value.clone()).map_err(|e| RefinementError::Json(e.to_string()))?;
        let mut assignment = vec![None; p.len()];
        for (label, v) in map {
            let w = p.index_of(&label).ok_or_else(|| RefinementError::UnknownLabel(label.clone()))?;
            let images = match v.get("map") {
                Some(m) => m.clone(),
                None => v,
            };
            let images: Vec<Option<usize>> =
                serde_json::from_value(images).map_err(|e| RefinementError::Json(e.to_string()))?;
            assignment[w] = Some(PartialMatching::new(images));
        }
        Self::new(p, assignment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coxeter::{CoxeterSystem, CoxeterType};
    use crate::poset::fixtures::{chain, diamond, dihedral, labels};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn pm(images: &[Option<usize>]) -> PartialMatching {
        PartialMatching::new(images.to_vec())
    }

    fn full(images: &[usize]) -> PartialMatching {
        PartialMatching::new(images.iter().map(|&i| Some(i)).collect())
    }

    fn quotient(t: CoxeterType, h: &[usize]) -> ParabolicQuotient {
        Arc::new(CoxeterSystem::build(&t).unwrap()).quotient(h).unwrap()
    }

    #[test]
    fn verify_spm_examples() {
        let c2 = chain(2);
        assert_eq!(verify_spm(&c2, &full(&[1, 0]), 1), Ok(()));
        assert_eq!(verify_spm(&c2, &full(&[0, 1]), 1), Err(Violation::TopNotMatchedDown(1)));
        // Top with atom 1; the other atom fixed: 2 < 3 but M(2)=2 is not below M(3)=1.
        let d = diamond();
        assert_eq!(verify_spm(&d, &full(&[0, 3, 2, 1]), 3), Err(Violation::Incompatible(2, 3)));
        assert_eq!(verify_spm(&d, &full(&[2, 3, 0, 1]), 3), Ok(()));
    }

    #[test]
    fn verify_qspm_examples() {
        let c3 = chain(3);
        assert_eq!(verify_qspm(&c3, &full(&[0, 1, 2])), Ok(()));
        assert_eq!(verify_qspm(&c3, &full(&[1, 0, 2])), Ok(()));
        // Middle matched up to the top, bottom fixed: 0 < 1 needs M(0)=0 < M(1)=2.
        assert_eq!(verify_qspm(&c3, &full(&[0, 2, 1])), Ok(()));
        assert_eq!(verify_qspm(&c3, &pm(&[Some(0), None, Some(2)])), Err(Violation::NotIdeal(1, 2)));
        assert_eq!(verify_qspm(&c3, &full(&[2, 1, 0])), Err(Violation::NotNeighbor(0)));
        assert_eq!(verify_qspm(&c3, &full(&[1, 1, 2])), Err(Violation::NotInvolution(0)));
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_spms(&chain(2), 1), vec![full(&[1, 0])]);
        assert_eq!(enumerate_spms(&diamond(), 3), vec![full(&[1, 0, 3, 2]), full(&[2, 3, 0, 1])]);
        // Rank-2 chain: top matched with the middle, bottom fixed.
        assert_eq!(enumerate_spms(&chain(3), 2), vec![full(&[0, 2, 1])]);
        let c3 = chain(3);
        assert_eq!(enumerate_spms(&c3, 1), vec![pm(&[Some(1), Some(0), None])]);
    }

    #[test]
    fn no_spm_on_three_atoms() {
        let p = GradedPoset::from_covers(labels(5), &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]).unwrap();
        assert!(enumerate_spms(&p, 4).is_empty());
        assert!(!verify_pircon(&p));
        assert_eq!(pircon_violation(&p), Some(4));
        assert!(verify_pircon(&diamond()));
        assert!(verify_pircon(&chain(1)));
    }

    #[test]
    fn lambda_examples() {
        let q = quotient(CoxeterType::A(2), &[1]);
        let (e, s1, s21) = (0, q.position_of_word(&[0]).unwrap(), q.position_of_word(&[1, 0]).unwrap());
        let l2 = lambda_matching(&q, 1).unwrap();
        assert_eq!((l2.image(e), l2.image(s1), l2.image(s21)), (Some(e), Some(s21), Some(s1)));
        let l1 = lambda_matching(&q, 0).unwrap();
        assert_eq!((l1.image(e), l1.image(s1), l1.image(s21)), (Some(s1), Some(e), Some(s21)));
        assert!(lambda_partial(&q, 1, s21).is_ok());
        let full_q = quotient(CoxeterType::A(2), &[]);
        for s in 0..2 {
            let l = lambda_matching(&full_q, s).unwrap();
            assert!((0..6).all(|u| !l.is_fixed(u)));
        }
    }

    #[test]
    fn orbit_examples() {
        let c2 = chain(2);
        let swap = full(&[1, 0]);
        let id = full(&[0, 1]);
        let r = orbit_analysis(&c2, &swap, &swap, 0).unwrap();
        assert_eq!((r.shape, r.m_value), (OrbitShape::Dihedral, 1));
        let r = orbit_analysis(&c2, &swap, &id, 1).unwrap();
        assert_eq!((r.shape, r.m_value), (OrbitShape::ChainLike, 2));
        let r = orbit_analysis(&c2, &id, &id, 0).unwrap();
        assert_eq!((r.shape, r.m_value, r.orbit.len()), (OrbitShape::ChainLike, 1, 1));
    }

    // Two matchings on a rank-3 dihedral interval stacked under a rank-2
    // chain-like orbit, in the spirit of the standard picture: lambda_s1 and
    // lambda_s2 on S3 restricted appropriately.
    #[test]
    fn rank_three_dihedral_orbit() {
        let q = quotient(CoxeterType::A(2), &[]);
        let (m, n) = (lambda_matching(&q, 0).unwrap(), lambda_matching(&q, 1).unwrap());
        let all = orbits(q.poset(), &m, &n).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].shape, all[0].m_value), (OrbitShape::Dihedral, 3));
        let q = quotient(CoxeterType::A(3), &[1, 2]);
        let (m, n) = (lambda_matching(&q, 0).unwrap(), lambda_matching(&q, 1).unwrap());
        let all = orbits(q.poset(), &m, &n).unwrap();
        let chainlike: Vec<_> = all.iter().filter(|o| o.shape == OrbitShape::ChainLike).collect();
        assert!(chainlike.iter().any(|o| o.m_value == 3 && o.orbit.len() == 3));
    }

    #[test]
    fn coherence_examples() {
        let q = quotient(CoxeterType::A(2), &[]);
        let p = q.poset();
        let top = p.top().unwrap();
        let (m, n) = (lambda_matching(&q, 0).unwrap(), lambda_matching(&q, 1).unwrap());
        assert!(strictly_coherent(p, &m, &m, top).unwrap());
        assert!(strictly_coherent(p, &m, &n, top).unwrap());
        let pool = enumerate_spms(p, top);
        assert!(coherent(p, &m, &n, top, &pool).unwrap());
        assert!(is_dircon(p));
        assert!(is_dircon(&chain(3)));
        assert!(is_dircon(&dihedral(4)));
    }

    // Left multiplication by s1 against right multiplication by s2 on S3:
    // the top orbit is a rank-1 dihedral orbit (m = 1) while {e, s1, s2, s1s2}
    // is a rank-2 dihedral orbit (m = 2).
    #[test]
    fn left_against_right_is_not_strictly_coherent() {
        let q = quotient(CoxeterType::A(2), &[]);
        let p = q.poset();
        let sys = q.system();
        let top = p.top().unwrap();
        let lambda = lambda_matching(&q, 0).unwrap();
        let rho = PartialMatching::new(
            (0..p.len()).map(|i| q.position(sys.mult_gen(q.group_element(i), 1, Side::Right))).collect(),
        );
        assert_eq!(verify_spm(p, &rho, top), Ok(()));
        assert!(!strictly_coherent(p, &lambda, &rho, top).unwrap());
        let m_values: Vec<u32> = orbits(p, &lambda, &rho).unwrap().iter().map(|o| o.m_value).collect();
        assert_eq!(m_values, vec![2, 1]);
        // Joined through the other two multiplication matchings.
        assert!(coherent(p, &lambda, &rho, top, &enumerate_spms(p, top)).unwrap());
    }

    // On a chain of rank 3 the two SPMs of the top differ only on the
    // bottom pair, which forms a chain-like orbit of m = 2 under a top orbit
    // of m = 1.
    #[test]
    fn chain_of_rank_three_is_not_a_dircon() {
        let c = chain(4);
        let pool = enumerate_spms(&c, 3);
        assert_eq!(pool, vec![full(&[0, 1, 3, 2]), full(&[1, 0, 3, 2])]);
        assert!(!strictly_coherent(&c, &pool[0], &pool[1], 3).unwrap());
        assert!(!coherent(&c, &pool[0], &pool[1], 3, &pool).unwrap());
        assert_eq!(dircon_violation(&c), Some(3));
        assert!(verify_pircon(&c));
    }

    #[test]
    fn lifting_detects_corruption() {
        let q = quotient(CoxeterType::A(3), &[]);
        let p = q.poset();
        let m = lambda_matching(&q, 1).unwrap();
        assert_eq!(check_lifting(p, &m), Ok(()));
        assert_eq!(check_lifting(&chain(1), &full(&[0])), Ok(()));
        let d = diamond();
        let bad = full(&[0, 3, 2, 1]);
        assert!(verify_qspm(&d, &bad).is_err());
        assert!(check_lifting(&d, &bad).is_err());
    }

    #[test]
    fn refinement_json_round_trip() {
        let q = quotient(CoxeterType::A(2), &[]);
        let p = q.poset();
        let r = Refinement::first_spm(p).unwrap();
        let back = Refinement::from_json(p, &r.to_json(p)).unwrap();
        assert_eq!(r, back);
        assert!(matches!(Refinement::new(p, vec![None; 6]), Err(RefinementError::Missing(1))));
        let m = full(&[1, 0]);
        assert_eq!(PartialMatching::from_json(&m.to_json("c2")).unwrap(), m);
    }

    #[test]
    fn lambda_orbit_values_divide_m() {
        for (t, h) in [(CoxeterType::A(3), vec![1]), (CoxeterType::B(3), vec![0]), (CoxeterType::I2(5), vec![])] {
            let q = quotient(t, &h);
            let sys = q.system().clone();
            for s in 0..sys.rank() {
                for r in 0..sys.rank() {
                    let (m, n) = (lambda_matching(&q, s).unwrap(), lambda_matching(&q, r).unwrap());
                    for o in orbits(q.poset(), &m, &n).unwrap() {
                        assert!(o.m_value == 1 || o.m_value == sys.m(s, r), "{o:?}");
                    }
                }
            }
        }
    }

    fn arb_quotient() -> impl Strategy<Value = (CoxeterType, Vec<usize>)> {
        let types = prop_oneof![
            Just(CoxeterType::A(3)),
            Just(CoxeterType::B(3)),
            Just(CoxeterType::I2(5)),
            Just(CoxeterType::A(2)),
        ];
        (types, 0u32..8).prop_map(|(t, mask)| {
            let h = (0..t.rank()).filter(|s| mask >> s & 1 == 1).collect();
            (t, h)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn enumerated_spms_are_valid((t, h) in arb_quotient(), pick in 0usize..1000) {
            let q = quotient(t, &h);
            let p = q.poset();
            let w = pick % p.len();
            for m in enumerate_spms(p, w) {
                prop_assert_eq!(verify_spm(p, &m, w), Ok(()));
                prop_assert_eq!(check_lifting(p, &m), Ok(()));
            }
        }

        #[test]
        fn strict_coherence_is_symmetric((t, h) in arb_quotient(), pick in 0usize..1000) {
            let q = quotient(t, &h);
            let p = q.poset();
            let w = pick % p.len();
            let pool = enumerate_spms(p, w);
            for a in &pool {
                for b in &pool {
                    prop_assert_eq!(strictly_coherent(p, a, b, w), strictly_coherent(p, b, a, w));
                }
            }
        }

        #[test]
        fn orbits_partition_domain((t, h) in arb_quotient(), s in 0usize..3, r in 0usize..3) {
            let q = quotient(t, &h);
            let rank = q.system().rank();
            let (m, n) = (lambda_matching(&q, s % rank).unwrap(), lambda_matching(&q, r % rank).unwrap());
            let all = orbits(q.poset(), &m, &n).unwrap();
            let mut members: Vec<usize> = all.iter().flat_map(|o| o.orbit.clone()).collect();
            members.sort_unstable();
            prop_assert_eq!(members, (0..q.poset().len()).collect::<Vec<_>>());
        }
    }
}
