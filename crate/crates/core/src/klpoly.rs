//! R^x-polynomials of refined pircons, the checks built on them, and
//! Kazhdan–Lusztig–Stanley inversion to P^x-polynomials.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::{json, Value};
use thiserror::Error;

use crate::coxeter::{ParabolicQuotient, Side};
use crate::exec;
use crate::matchings::{
    coherent, enumerate_spms, lambda_matching, strictly_coherent, verify_qspm, verify_spm, Kind, OrbitError,
    PartialMatching, Refinement, Violation,
};
use crate::poly::{HalfLaurent, QPoly};
use crate::poset::GradedPoset;

/// The parameter `x` of the R^x family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum XParam {
    Q,
    MinusOne,
}

impl XParam {
    pub const BOTH: [XParam; 2] = [XParam::Q, XParam::MinusOne];

    /// The other element of `{q, -1}`.
    pub fn complement(self) -> XParam {
        match self {
            XParam::Q => XParam::MinusOne,
            XParam::MinusOne => XParam::Q,
        }
    }

    pub fn value(self) -> QPoly {
        match self {
            XParam::Q => QPoly::q(),
            XParam::MinusOne => QPoly::constant(-1),
        }
    }

    /// `q - 1 - x`: `-1` for `x = q` and `q` for `x = -1`.
    pub fn fixed_factor(self) -> QPoly {
        match self {
            XParam::Q => QPoly::constant(-1),
            XParam::MinusOne => QPoly::q(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            XParam::Q => "q",
            XParam::MinusOne => "-1",
        }
    }
}

impl fmt::Display for XParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for XParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "q" => Ok(XParam::Q),
            "-1" | "minus-one" | "m1" => Ok(XParam::MinusOne),
            other => Err(format!("x must be \"q\" or \"-1\", got {other:?}")),
        }
    }
}

fn q_minus_one() -> QPoly {
    QPoly::from_coeffs([-1, 1])
}

/// Polynomials indexed by comparable pairs `u <= w` of a poset.
///
/// Entries are stored for every comparable pair, including computed zeros;
/// `get` returns `None` exactly when `u` is not below `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyTable {
    poset: Arc<GradedPoset>,
    x: XParam,
    entries: Vec<Option<QPoly>>,
    from_system: bool,
}

impl PolyTable {
    fn empty(poset: Arc<GradedPoset>, x: XParam) -> Self {
        let n = poset.len();
        PolyTable { poset, x, entries: vec![None; n * n], from_system: false }
    }

    pub fn poset(&self) -> &Arc<GradedPoset> {
        &self.poset
    }

    pub fn x(&self) -> XParam {
        self.x
    }

    /// Whether the refinement came from a verified pircon system, in which
    /// case the table does not depend on the refinement.
    pub fn from_system(&self) -> bool {
        self.from_system
    }

    pub fn get(&self, u: usize, w: usize) -> Option<&QPoly> {
        self.entries[u * self.poset.len() + w].as_ref()
    }

    /// The entry, or zero when `u` is not below `w`.
    pub fn value(&self, u: usize, w: usize) -> QPoly {
        self.get(u, w).cloned().unwrap_or_else(QPoly::zero)
    }

    fn set(&mut self, u: usize, w: usize, p: QPoly) {
        let n = self.poset.len();
        self.entries[u * n + w] = Some(p);
    }

    /// Comparable pairs `(u, w)` with `u <= w`, ordered by `w` then `u`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let p = &self.poset;
        (0..p.len()).flat_map(|w| p.below_set(w).ones().map(move |u| (u, w))).collect()
    }

    pub fn to_json(&self, poset_ref: &str) -> Value {
        let p = &self.poset;
        let entries: Vec<Value> = self
            .pairs()
            .into_iter()
            .map(|(u, w)| json!([p.label(u), p.label(w), self.value(u, w)]))
            .collect();
        json!({
            "poset": poset_ref,
            "x": self.x.as_str(),
            "pircon_system": self.from_system,
            "entries": entries,
        })
    }

    /// CSV with header `u,w,rank,coefficients`; coefficients ascending,
    /// separated by spaces.
    pub fn to_csv(&self) -> String {
        let p = &self.poset;
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(["u", "w", "rank", "coefficients"]).expect("in-memory write");
        for (u, w) in self.pairs() {
            let coeffs: Vec<String> = self.value(u, w).coeffs().iter().map(BigInt::to_string).collect();
            wr.write_record([p.label(u), p.label(w), &p.rank_between(u, w).to_string(), &coeffs.join(" ")])
                .expect("in-memory write");
        }
        String::from_utf8(wr.into_inner().expect("in-memory flush")).expect("labels are UTF-8")
    }
}

/// RHS of the recursion at `(u, w)` for a matching `m` with `m(w)` covered
/// by `w`.
fn recursion_rhs(table: &PolyTable, m: &PartialMatching, u: usize, w: usize) -> QPoly {
    let p = &table.poset;
    let w1 = m.image(w).expect("w in domain");
    let mu = m.image(u).expect("u in domain");
    match m.kind(p, u).expect("u in domain") {
        Kind::Down => table.value(mu, w1),
        Kind::Up => &(&q_minus_one() * &table.value(u, w1)) + &(&QPoly::q() * &table.value(mu, w1)),
        Kind::Fixed => &table.x.fixed_factor() * &table.value(u, w1),
    }
}

/// The R^x family of a refined pircon, computed rank level by rank level.
pub fn r_polynomials(poset: &Arc<GradedPoset>, refinement: &Refinement, x: XParam) -> PolyTable {
    let p = poset.as_ref();
    let mut table = PolyTable::empty(Arc::clone(poset), x);
    if let Some(b) = p.bottom() {
        table.set(b, b, QPoly::one());
    }
    for r in 1..=p.max_rank() {
        let level = p.elements_of_rank(r);
        let columns = exec::map(&level, |&w| {
            let m = refinement.matching(w).expect("refinement covers every non-minimal element");
            p.below_set(w)
                .ones()
                .map(|u| (u, if u == w { QPoly::one() } else { recursion_rhs(&table, m, u, w) }))
                .collect::<Vec<_>>()
        });
        for (&w, col) in level.iter().zip(columns) {
            for (u, v) in col {
                table.set(u, w, v);
            }
        }
    }
    table
}

/// Whether the SPM `m` of `w` satisfies the R-recursion at every `u <= w`;
/// the error is the first failing `u`.
pub fn is_calculating(table: &PolyTable, m: &PartialMatching, w: usize) -> Result<(), usize> {
    let p = &table.poset;
    for u in p.below_set(w).ones() {
        if u != w && table.value(u, w) != recursion_rhs(table, m, u, w) {
            return Err(u);
        }
    }
    Ok(())
}

/// Whether the restriction of `m` to every `P_{<= z}` with `m(z)` covered
/// by `z` is calculating; the error is `(z, u)`.
pub fn is_strongly_calculating(table: &PolyTable, m: &PartialMatching) -> Result<(), (usize, usize)> {
    let p = &table.poset;
    let tops: Vec<usize> = m.domain().filter(|&z| m.kind(p, z) == Some(Kind::Down)).collect();
    exec::try_for_each(&tops, |&z| {
        let restricted = m.restrict_to_ideal(p, z).ok_or((z, z))?;
        is_calculating(table, &restricted, z).map_err(|u| (z, u))
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("matching {0} is not a quasi special partial matching: {1}")]
    NotQuasiSpm(usize, Violation),
    #[error("no matching moves element {0} down")]
    NoDownMatching(usize),
    #[error("restriction of matching {m} to the ideal of {w} is not an SPM: {violation}")]
    BadRestriction { m: usize, w: usize, violation: Violation },
    #[error("matchings {m} and {n} are not coherent below element {w}")]
    NotCoherent { w: usize, m: usize, n: usize },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// A poset with a family of quasi SPMs of order ideals satisfying the
/// pircon-system conditions.
#[derive(Clone, Debug)]
pub struct PirconSystem {
    poset: Arc<GradedPoset>,
    matchings: Vec<PartialMatching>,
    names: Vec<String>,
}

/// Which down-matching a refinement takes at each element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementChoice {
    First,
    Last,
    /// First on even ranks, last on odd ranks.
    Alternating,
    /// Last on even ranks, first on odd ranks.
    AlternatingReversed,
}

impl PirconSystem {
    pub fn new(
        poset: Arc<GradedPoset>,
        matchings: Vec<PartialMatching>,
        names: Vec<String>,
    ) -> Result<Self, SystemError> {
        verify_pircon_system(&poset, &matchings)?;
        Ok(PirconSystem { poset, matchings, names })
    }

    /// `W^H` with every left multiplication matching.
    pub fn from_quotient(quot: &ParabolicQuotient) -> Result<Self, SystemError> {
        let rank = quot.system().rank();
        let mut matchings = Vec::with_capacity(rank);
        for s in 0..rank {
            matchings.push(lambda_matching(quot, s).map_err(|v| SystemError::NotQuasiSpm(s, v))?);
        }
        let names = (0..rank).map(|s| format!("lambda_s{}", s + 1)).collect();
        Self::new(Arc::clone(quot.poset()), matchings, names)
    }

    pub fn poset(&self) -> &Arc<GradedPoset> {
        &self.poset
    }

    pub fn matchings(&self) -> &[PartialMatching] {
        &self.matchings
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Indices of the matchings that move `w` down.
    pub fn down_matchings(&self, w: usize) -> Vec<usize> {
        down_matchings(&self.poset, &self.matchings, w)
    }

    pub fn refinement(&self, choice: RefinementChoice) -> Refinement {
        let p = &self.poset;
        Refinement::from_fn(p, |w| {
            let cands = self.down_matchings(w);
            let even = p.rank(w) % 2 == 0;
            let first = match choice {
                RefinementChoice::First => true,
                RefinementChoice::Last => false,
                RefinementChoice::Alternating => even,
                RefinementChoice::AlternatingReversed => !even,
            };
            let k = if first { cands.first() } else { cands.last() };
            k.and_then(|&k| self.matchings[k].restrict_to_ideal(p, w))
        })
        .expect("a verified system yields a refinement")
    }

    /// Distinct refinements drawn from the system.
    pub fn refinements(&self) -> Vec<Refinement> {
        let mut out: Vec<Refinement> = Vec::new();
        for choice in [
            RefinementChoice::First,
            RefinementChoice::Last,
            RefinementChoice::Alternating,
            RefinementChoice::AlternatingReversed,
        ] {
            let r = self.refinement(choice);
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out
    }

    /// The R^x table of the first-choice refinement.
    pub fn r_table(&self, x: XParam) -> PolyTable {
        let mut t = r_polynomials(&self.poset, &self.refinement(RefinementChoice::First), x);
        t.from_system = true;
        t
    }
}

fn down_matchings(p: &GradedPoset, matchings: &[PartialMatching], w: usize) -> Vec<usize> {
    (0..matchings.len()).filter(|&i| matchings[i].kind(p, w) == Some(Kind::Down)).collect()
}

/// Check the four pircon-system conditions. Condition (1) follows from (3)
/// once each down-matching restricts to an SPM of `w`, which is checked.
pub fn verify_pircon_system(p: &GradedPoset, matchings: &[PartialMatching]) -> Result<(), SystemError> {
    for (i, m) in matchings.iter().enumerate() {
        verify_qspm(p, m).map_err(|v| SystemError::NotQuasiSpm(i, v))?;
    }
    let elems: Vec<usize> = (0..p.len()).filter(|&w| Some(w) != p.bottom()).collect();
    exec::try_for_each(&elems, |&w| {
        let down = down_matchings(p, matchings, w);
        if down.is_empty() {
            return Err(SystemError::NoDownMatching(w));
        }
        let mut restricted = Vec::with_capacity(down.len());
        for &i in &down {
            let r = matchings[i]
                .restrict_to_ideal(p, w)
                .ok_or(SystemError::BadRestriction { m: i, w, violation: Violation::WrongDomain { top: w, element: w } })?;
            verify_spm(p, &r, w).map_err(|violation| SystemError::BadRestriction { m: i, w, violation })?;
            restricted.push(r);
        }
        let mut pool: Option<Vec<PartialMatching>> = None;
        for a in 0..down.len() {
            for b in a + 1..down.len() {
                if strictly_coherent(p, &restricted[a], &restricted[b], w)? {
                    continue;
                }
                let pool = pool.get_or_insert_with(|| enumerate_spms(p, w));
                if !coherent(p, &restricted[a], &restricted[b], w, pool)? {
                    return Err(SystemError::NotCoherent { w, m: down[a], n: down[b] });
                }
            }
        }
        Ok(())
    })
}

/// Witness of a failed identity on a pair of elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairWitness {
    pub matching: Option<usize>,
    pub u: usize,
    pub w: usize,
    pub expected: QPoly,
    pub actual: QPoly,
}

impl fmt::Display for PairWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = self.matching {
            write!(f, "matching {m}, ")?;
        }
        write!(f, "pair ({}, {}): expected {}, got {}", self.u, self.w, self.expected, self.actual)
    }
}

/// The up-down symmetry: for every matching `M` and all `u, w` in its
/// domain with `M(u)` above `u`, the flipped recursion holds.
pub fn check_updown(system: &PirconSystem, table: &PolyTable) -> Result<(), PairWitness> {
    let p = &table.poset;
    let jobs: Vec<(usize, usize)> = system
        .matchings
        .iter()
        .enumerate()
        .flat_map(|(i, m)| m.domain().filter(|&u| m.kind(p, u) == Some(Kind::Up)).map(move |u| (i, u)))
        .collect();
    exec::try_for_each(&jobs, |&(i, u)| {
        let m = &system.matchings[i];
        let mu = m.image(u).expect("u in domain");
        for w in m.domain() {
            let mw = m.image(w).expect("w in domain");
            let expected = match m.kind(p, w).expect("w in domain") {
                Kind::Up => table.value(mu, mw),
                Kind::Down => &(&q_minus_one() * &table.value(mu, w)) + &(&QPoly::q() * &table.value(mu, mw)),
                Kind::Fixed => &table.x.fixed_factor() * &table.value(mu, w),
            };
            let actual = table.value(u, w);
            if actual != expected {
                return Err(PairWitness { matching: Some(i), u, w, expected, actual });
            }
        }
        Ok(())
    })
}

fn tilde_half(r: &QPoly, rank: u32) -> HalfLaurent {
    HalfLaurent::from(r).bar().shift_half(2 * rank as i64)
}

/// `sum_z R_{u,z} q^{rho(z,v)} bar(R_{z,v}) = delta_{u,v}` for all `u <= v`;
/// the error is the first failing pair `(u, v)`.
pub fn check_pkernel(table: &PolyTable) -> Result<(), (usize, usize)> {
    let p = table.poset.as_ref();
    let elems: Vec<usize> = (0..p.len()).collect();
    exec::try_for_each(&elems, |&v| {
        for u in p.below_set(v).ones() {
            let mut sum = HalfLaurent::zero();
            for z in p.interval_members(u, v) {
                sum += &(&HalfLaurent::from(&table.value(u, z)) * &tilde_half(&table.value(z, v), p.rank_between(z, v)));
            }
            let expected = if u == v { HalfLaurent::one() } else { HalfLaurent::zero() };
            if sum != expected {
                return Err((u, v));
            }
        }
        Ok(())
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("inversion is inconsistent at ({u}, {v}): the table is not a P-kernel")]
pub struct KlsError {
    pub u: usize,
    pub v: usize,
}

/// Kazhdan–Lusztig–Stanley polynomials of an R-table that is a P-kernel.
///
/// For `u < v`, with `G = sum_{u < z <= v} R_{u,z} P_{z,v}`, `P_{u,v}` is
/// minus the part of `G` of degree below `rho(u,v)/2`, and the whole of `G`
/// must equal `tilde(P_{u,v}) - P_{u,v}`.
pub fn kls_polynomials(r: &PolyTable) -> Result<PolyTable, KlsError> {
    let p = r.poset.as_ref();
    let elems: Vec<usize> = (0..p.len()).collect();
    let columns = exec::map(&elems, |&v| -> Result<Vec<(usize, QPoly)>, KlsError> {
        let mut members = p.ideal_members(v);
        members.sort_by_key(|&u| std::cmp::Reverse(p.rank(u)));
        let mut col: Vec<Option<QPoly>> = vec![None; p.len()];
        col[v] = Some(QPoly::one());
        for u in members.into_iter().filter(|&u| u != v) {
            let rank = p.rank_between(u, v);
            let mut g = QPoly::zero();
            for z in p.interval_members(u, v).into_iter().filter(|&z| z != u) {
                g += &(&r.value(u, z) * col[z].as_ref().expect("higher elements done"));
            }
            let bound = (rank as usize).div_ceil(2);
            let pu = -&g.truncate_below(bound);
            let expected = &pu.tilde(rank as usize).map_err(|_| KlsError { u, v })? - &pu;
            if g != expected {
                return Err(KlsError { u, v });
            }
            col[u] = Some(pu);
        }
        Ok(col.into_iter().enumerate().filter_map(|(u, c)| c.map(|c| (u, c))).collect())
    });
    let mut out = PolyTable::empty(Arc::clone(&r.poset), r.x);
    out.from_system = r.from_system;
    for (v, col) in elems.into_iter().zip(columns) {
        for (u, poly) in col? {
            out.set(u, v, poly);
        }
    }
    Ok(out)
}

/// Which part of the R-property check failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RProperty {
    /// `deg R^{-1}_{u,w} = rho(u,w)`.
    Degree,
    /// `R^q_{u,w}(0) = (-1)^{rho(u,w)}`.
    ConstantTerm,
    /// `R^x_{u,w}(q) = (-q)^{rho(u,w)} R^z_{u,w}(1/q)`.
    Reflection,
}

/// The three R-properties at every comparable pair; `r_minus` and `r_q`
/// must be the R^{-1} and R^q tables of the same poset.
pub fn verify_r_properties(r_minus: &PolyTable, r_q: &PolyTable) -> Result<(), (RProperty, usize, usize)> {
    assert_eq!(r_minus.x, XParam::MinusOne);
    assert_eq!(r_q.x, XParam::Q);
    let p = r_minus.poset.as_ref();
    for (u, w) in r_minus.pairs() {
        let rank = p.rank_between(u, w);
        let (a, b) = (r_minus.value(u, w), r_q.value(u, w));
        if a.degree() != Some(rank as usize) {
            return Err((RProperty::Degree, u, w));
        }
        let sign = if rank % 2 == 0 { 1 } else { -1 };
        if b.eval_at_zero() != BigInt::from(sign) {
            return Err((RProperty::ConstantTerm, u, w));
        }
        let reflect = |t: &QPoly| t.tilde(rank as usize).map(|t| t.scale(&BigInt::from(sign)));
        if reflect(&b).as_ref() != Ok(&a) || reflect(&a).as_ref() != Ok(&b) {
            return Err((RProperty::Reflection, u, w));
        }
    }
    Ok(())
}

/// `R_{u,w} = (q-1-x) R_{su,w}` whenever `u < su` in `W^H` and `sw`, above
/// `w`, leaves `W^H`. The error is `(s, u, w)`.
pub fn brenti_identity(quot: &ParabolicQuotient, table: &PolyTable) -> Result<(), (usize, usize, usize)> {
    let sys = quot.system();
    let p = quot.poset();
    let n = p.len();
    let lift = |s: usize, i: usize| -> (Option<usize>, bool) {
        let g = quot.group_element(i);
        let sg = sys.mult_gen(g, s, Side::Left);
        (quot.position(sg), sys.length(sg) > sys.length(g))
    };
    for s in 0..sys.rank() {
        let fixed_tops: Vec<usize> = (0..n).filter(|&w| matches!(lift(s, w), (None, true))).collect();
        for u in 0..n {
            let (Some(su), true) = lift(s, u) else { continue };
            for &w in &fixed_tops {
                let expected = &table.x.fixed_factor() * &table.value(su, w);
                if table.value(u, w) != expected {
                    return Err((s, u, w));
                }
            }
        }
    }
    Ok(())
}

/// Whether every refinement yields the same R^x table; the error is the
/// index of the first refinement that differs from the first one.
pub fn refinement_independence(
    poset: &Arc<GradedPoset>,
    refinements: &[Refinement],
    x: XParam,
) -> Result<(), usize> {
    let tables = exec::map(refinements, |r| r_polynomials(poset, r, x));
    match tables.iter().position(|t| t.entries != tables[0].entries) {
        Some(i) => Err(i),
        None => Ok(()),
    }
}
