//! The Hecke module `M_P` of a pircon system: the two actions of the Hecke
//! algebra, the involutions `iota^x` and `j_P`, both Kazhdan–Lusztig bases,
//! and the recursions for `C'` and `P`.
//!
//! Hecke algebra elements are never stored; only `T_M`, `T_M^{-1}` and
//! `C'_M` act on vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exec;
use crate::klpoly::{check_pkernel, check_updown, kls_polynomials, KlsError, PairWitness, PirconSystem, PolyTable, XParam};
use crate::matchings::Kind;
use crate::poly::{HalfLaurent, QPoly};
use crate::poset::GradedPoset;

/// A finitely supported combination of basis vectors `m_u`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct ModuleVector {
    coeffs: BTreeMap<usize, HalfLaurent>,
}

impl ModuleVector {
    pub fn zero() -> Self {
        ModuleVector::default()
    }

    /// The basis vector `m_u`.
    pub fn basis(u: usize) -> Self {
        Self::term(u, HalfLaurent::one())
    }

    pub fn term(u: usize, a: HalfLaurent) -> Self {
        let mut v = ModuleVector::zero();
        v.add_term(u, &a);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, u: usize) -> HalfLaurent {
        self.coeffs.get(&u).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &HalfLaurent)> {
        self.coeffs.iter().map(|(u, a)| (*u, a))
    }

    pub fn add_term(&mut self, u: usize, a: &HalfLaurent) {
        if a.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(u).or_default();
        *slot += a;
        if slot.is_zero() {
            self.coeffs.remove(&u);
        }
    }

    pub fn scale(&self, a: &HalfLaurent) -> ModuleVector {
        let mut out = ModuleVector::zero();
        for (u, c) in &self.coeffs {
            out.add_term(*u, &(c * a));
        }
        out
    }

    /// `{"coeffs": [[label, [[half_exponent, coefficient], ...]], ...]}`.
    pub fn to_json(&self, p: &GradedPoset) -> Value {
        let coeffs: Vec<Value> = self.coeffs.iter().map(|(u, a)| json!([p.label(*u), a])).collect();
        json!({ "coeffs": coeffs })
    }
}

impl Add<&ModuleVector> for &ModuleVector {
    type Output = ModuleVector;
    fn add(self, rhs: &ModuleVector) -> ModuleVector {
        let mut out = self.clone();
        for (u, a) in &rhs.coeffs {
            out.add_term(*u, a);
        }
        out
    }
}

impl Neg for &ModuleVector {
    type Output = ModuleVector;
    fn neg(self) -> ModuleVector {
        ModuleVector { coeffs: self.coeffs.iter().map(|(u, a)| (*u, -a)).collect() }
    }
}

impl Sub<&ModuleVector> for &ModuleVector {
    type Output = ModuleVector;
    fn sub(self, rhs: &ModuleVector) -> ModuleVector {
        self + &(-rhs)
    }
}

impl fmt::Debug for ModuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().map(|(u, a)| format!("({a})·m{u}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Debug, Error)]
pub enum HeckeError {
    #[error("matching {0} is not defined on the whole poset")]
    PartialDomain(usize),
    #[error("up-down symmetry fails for x = {x}: {witness}")]
    UpDown { x: XParam, witness: PairWitness },
    #[error("R^{x} is not a P-kernel at ({u}, {v})")]
    PKernel { x: XParam, u: usize, v: usize },
    #[error(transparent)]
    Kls(#[from] KlsError),
}

/// A failed identity, with the elements involved as labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckeFailure {
    pub identity: &'static str,
    pub x: Option<XParam>,
    pub detail: String,
}

impl fmt::Display for HeckeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.x {
            Some(x) => write!(f, "{} (x = {x}): {}", self.identity, self.detail),
            None => write!(f, "{}: {}", self.identity, self.detail),
        }
    }
}

fn slot(x: XParam) -> usize {
    match x {
        XParam::Q => 0,
        XParam::MinusOne => 1,
    }
}

fn sign(k: u32) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A pircon system whose matchings are defined on the whole poset, with
/// both R-tables (checked for up-down symmetry and the kernel property) and
/// both P-tables.
pub struct HeckeContext {
    system: PirconSystem,
    r: [PolyTable; 2],
    p: [PolyTable; 2],
    m_orders: Vec<Vec<usize>>,
    iota_basis: [Vec<ModuleVector>; 2],
}

impl HeckeContext {
    pub fn new(system: PirconSystem) -> Result<Self, HeckeError> {
        let poset = system.poset().clone();
        for (i, m) in system.matchings().iter().enumerate() {
            if m.domain().count() != poset.len() {
                return Err(HeckeError::PartialDomain(i));
            }
        }
        let r = XParam::BOTH.map(|x| system.r_table(x));
        for t in &r {
            check_updown(&system, t).map_err(|witness| HeckeError::UpDown { x: t.x(), witness })?;
            check_pkernel(t).map_err(|(u, v)| HeckeError::PKernel { x: t.x(), u, v })?;
        }
        let [pq, pm] = [kls_polynomials(&r[0])?, kls_polynomials(&r[1])?];
        let k = system.matchings().len();
        let m_orders = (0..k)
            .map(|a| (0..k).map(|b| permutation_order(&system, a, b)).collect())
            .collect();
        let elems: Vec<usize> = (0..poset.len()).collect();
        let iota_basis = [0, 1].map(|i| {
            let t = &r[i];
            exec::map(&elems, |&v| {
                let mut out = ModuleVector::zero();
                for u in poset.below_set(v).ones() {
                    let c = HalfLaurent::from(&t.value(u, v)).scale(&BigInt::from(sign(poset.rank_between(u, v))));
                    out.add_term(u, &c.shift_half(-2 * poset.rank(v) as i64));
                }
                out
            })
        });
        Ok(HeckeContext { system, r, p: [pq, pm], m_orders, iota_basis })
    }

    pub fn system(&self) -> &PirconSystem {
        &self.system
    }

    pub fn poset(&self) -> &GradedPoset {
        self.system.poset()
    }

    pub fn r_table(&self, x: XParam) -> &PolyTable {
        &self.r[slot(x)]
    }

    pub fn p_table(&self, x: XParam) -> &PolyTable {
        &self.p[slot(x)]
    }

    /// Order of `MN` as a permutation of the poset.
    pub fn m_order(&self, m: usize, n: usize) -> usize {
        self.m_orders[m][n]
    }

    fn label(&self, u: usize) -> &str {
        self.poset().label(u)
    }

    /// `T_M` acting on `v` through the `x`-structure.
    pub fn t_action(&self, m: usize, v: &ModuleVector, x: XParam) -> ModuleVector {
        let p = self.poset();
        let mat = &self.system.matchings()[m];
        let q = HalfLaurent::q_pow(1);
        let q_minus_one = &q - &HalfLaurent::one();
        let xv = HalfLaurent::from(&x.value());
        let mut out = ModuleVector::zero();
        for (u, a) in v.terms() {
            let mu = mat.image(u).expect("matchings are total");
            match mat.kind(p, u).expect("matchings are total") {
                Kind::Up => out.add_term(mu, a),
                Kind::Down => {
                    out.add_term(mu, &(a * &q));
                    out.add_term(u, &(a * &q_minus_one));
                }
                Kind::Fixed => out.add_term(u, &(a * &xv)),
            }
        }
        out
    }

    /// `T_M^{-1} = q^{-1} T_M + (q^{-1} - 1)`.
    pub fn t_inverse_action(&self, m: usize, v: &ModuleVector, x: XParam) -> ModuleVector {
        let qinv = HalfLaurent::q_pow(-1);
        &self.t_action(m, v, x).scale(&qinv) + &v.scale(&(&qinv - &HalfLaurent::one()))
    }

    /// `C'_M = q^{-1/2} (T_M + 1)`.
    pub fn c_prime_m_action(&self, m: usize, v: &ModuleVector, x: XParam) -> ModuleVector {
        (&self.t_action(m, v, x) + v).scale(&HalfLaurent::q_half_pow(-1))
    }

    /// Quadratic relation for every matching and braid relation of length
    /// `m(M, N)` for every pair, on every basis vector.
    pub fn verify_hecke_relations(&self, x: XParam) -> Result<(), HeckeFailure> {
        let n = self.poset().len();
        let k = self.system.matchings().len();
        let q = HalfLaurent::q_pow(1);
        let q_minus_one = &q - &HalfLaurent::one();
        let elems: Vec<usize> = (0..n).collect();
        exec::try_for_each(&elems, |&u| {
            let mu = ModuleVector::basis(u);
            for m in 0..k {
                let t = self.t_action(m, &mu, x);
                let lhs = self.t_action(m, &t, x);
                let rhs = &t.scale(&q_minus_one) + &mu.scale(&q);
                if lhs != rhs {
                    return Err(self.failure("quadratic", Some(x), format!("{} on m_{}", self.name(m), self.label(u))));
                }
                for nn in m + 1..k {
                    let len = self.m_orders[m][nn];
                    let word = |first: usize, second: usize| {
                        (0..len).rev().fold(mu.clone(), |acc, i| {
                            self.t_action(if i % 2 == 0 { first } else { second }, &acc, x)
                        })
                    };
                    if word(m, nn) != word(nn, m) {
                        return Err(self.failure(
                            "braid",
                            Some(x),
                            format!("{}, {} (m = {len}) on m_{}", self.name(m), self.name(nn), self.label(u)),
                        ));
                    }
                }
            }
            Ok(())
        })
    }

    fn name(&self, m: usize) -> &str {
        &self.system.names()[m]
    }

    fn failure(&self, identity: &'static str, x: Option<XParam>, detail: String) -> HeckeFailure {
        HeckeFailure { identity, x, detail }
    }

    /// `iota^x`, semilinear: coefficients are barred.
    pub fn iota(&self, v: &ModuleVector, x: XParam) -> ModuleVector {
        let images = &self.iota_basis[slot(x)];
        let mut out = ModuleVector::zero();
        for (u, a) in v.terms() {
            out = &out + &images[u].scale(&a.bar());
        }
        out
    }

    /// `j_P(a m_w) = bar(a) (-q^{-1})^{rho(w)} m_w`.
    pub fn j_map(&self, v: &ModuleVector) -> ModuleVector {
        let p = self.poset();
        let mut out = ModuleVector::zero();
        for (w, a) in v.terms() {
            let r = p.rank(w);
            let c = a.bar().shift_half(-2 * r as i64).scale(&BigInt::from(sign(r)));
            out.add_term(w, &c);
        }
        out
    }

    /// `C^x_w = q^{rho(w)/2} sum_v (-1)^{rho(v,w)} q^{-rho(v)} bar(P^x_{v,w}) m_v`.
    pub fn kl_element_c(&self, w: usize, x: XParam) -> ModuleVector {
        let p = self.poset();
        let t = self.p_table(x);
        let mut out = ModuleVector::zero();
        for v in p.below_set(w).ones() {
            let c = HalfLaurent::from(&t.value(v, w))
                .bar()
                .scale(&BigInt::from(sign(p.rank_between(v, w))))
                .shift_half(p.rank(w) as i64 - 2 * p.rank(v) as i64);
            out.add_term(v, &c);
        }
        out
    }

    /// `C'^x_w = q^{-rho(w)/2} sum_v P^z_{v,w} m_v`, built from the opposite
    /// family `z`.
    pub fn kl_element_cprime(&self, w: usize, x: XParam) -> ModuleVector {
        let p = self.poset();
        let t = self.p_table(x.complement());
        let mut out = ModuleVector::zero();
        for v in p.below_set(w).ones() {
            out.add_term(v, &HalfLaurent::from(&t.value(v, w)).shift_half(-(p.rank(w) as i64)));
        }
        out
    }

    /// Coefficient of `q^{(rho(u,w)-1)/2}` in `P^family_{u,w}` when
    /// `rho(u,w)` is odd, zero otherwise.
    pub fn mu(&self, u: usize, w: usize, family: XParam) -> BigInt {
        let p = self.poset();
        if u == w || !p.leq(u, w) {
            return BigInt::zero();
        }
        let k = p.rank_between(u, w);
        if k % 2 == 0 {
            return BigInt::zero();
        }
        self.p_table(family).value(u, w).coeff(((k - 1) / 2) as i64)
    }

    // Elements u < M(w) in the correction sum: M(u) <= u for x = q, M(u) < u
    // for x = -1.
    fn correction_terms(&self, m: usize, mw: usize, x: XParam) -> Vec<(usize, BigInt)> {
        let p = self.poset();
        let mat = &self.system.matchings()[m];
        p.below_set(mw)
            .ones()
            .filter(|&u| match mat.kind(p, u) {
                Some(Kind::Down) => true,
                Some(Kind::Fixed) => x == XParam::Q,
                _ => false,
            })
            .map(|u| (u, self.mu(u, mw, x.complement())))
            .filter(|(_, c)| !c.is_zero())
            .collect()
    }

    /// `C'_M C'^x_{M(w)} - sum_u mu(u, M(w)) C'^x_u`; requires `M(w)`
    /// covered by `w`.
    pub fn cprime_recursion(&self, w: usize, m: usize, x: XParam) -> ModuleVector {
        let mw = self.system.matchings()[m].image(w).expect("matchings are total");
        let mut out = self.c_prime_m_action(m, &self.kl_element_cprime(mw, x), x);
        for (u, c) in self.correction_terms(m, mw, x) {
            out = &out - &self.kl_element_cprime(u, x).scale(&HalfLaurent::monomial(c, 0));
        }
        out
    }

    /// `P^z_{v',M(w)} + x_v P^z_{v'',M(w)} - sum_u mu(u, M(w)) q^{rho(u,w)/2}
    /// P^z_{v,u}` with `z` the complement of `x`.
    pub fn p_recursion(&self, v: usize, w: usize, m: usize, x: XParam) -> QPoly {
        let p = self.poset();
        let mat = &self.system.matchings()[m];
        let mw = mat.image(w).expect("matchings are total");
        let mv = mat.image(v).expect("matchings are total");
        let t = self.p_table(x.complement());
        let (lo, hi) = if p.rank(mv) < p.rank(v) { (mv, v) } else { (v, mv) };
        let xv = if mv == v { x.value() } else { QPoly::q() };
        let mut out = &t.value(lo, mw) + &(&xv * &t.value(hi, mw));
        for (u, c) in self.correction_terms(m, mw, x) {
            let shift = (p.rank_between(u, w) / 2) as usize;
            out -= &t.value(v, u).scale(&c).shift(shift);
        }
        out
    }

    /// Whether `d` satisfies the characterization conditions for `w`:
    /// `iota^x`-invariance and `q^{rho(w)/2} d = sum Q_v m_v` with `Q_v` in
    /// `Z[q]`, `Q_w = 1`, `deg Q_v < rho(v,w)/2`. When they hold, `d` must be
    /// `C'^x_w`; anything else is reported as an error.
    pub fn characterize(&self, d: &ModuleVector, w: usize, x: XParam) -> Result<bool, HeckeFailure> {
        if self.iota(d, x) != *d {
            return Ok(false);
        }
        let p = self.poset();
        let rw = p.rank(w) as i64;
        for (v, a) in d.terms() {
            let Ok(qv) = a.shift_half(rw).to_qpoly() else { return Ok(false) };
            if v == w {
                if !qv.is_one() {
                    return Ok(false);
                }
                continue;
            }
            let gap = rw - p.rank(v) as i64;
            // deg Q < gap / 2, i.e. 2 deg Q < gap.
            if qv.degree().is_some_and(|deg| 2 * deg as i64 >= gap) {
                return Ok(false);
            }
        }
        if d.coeff(w).is_zero() {
            return Ok(false);
        }
        if *d != self.kl_element_cprime(w, x) {
            return Err(self.failure(
                "characterization",
                Some(x),
                format!("a vector for {} meets the conditions but is not C'", self.label(w)),
            ));
        }
        Ok(true)
    }

    /// Every duality identity on every basis vector and every element.
    pub fn verify_duality(&self) -> Result<(), HeckeFailure> {
        let n = self.poset().len();
        let k = self.system.matchings().len();
        let elems: Vec<usize> = (0..n).collect();
        let minus_qinv = HalfLaurent::q_pow(-1).scale(&BigInt::from(-1));
        exec::try_for_each(&elems, |&v| {
            let mv = ModuleVector::basis(v);
            let lv = self.label(v).to_string();
            if self.j_map(&self.j_map(&mv)) != mv {
                return Err(self.failure("j-involution", None, format!("m_{lv}")));
            }
            for x in XParam::BOTH {
                let z = x.complement();
                let iv = self.iota(&mv, x);
                if self.iota(&iv, x) != mv {
                    return Err(self.failure("iota-involution", Some(x), format!("m_{lv}")));
                }
                for m in 0..k {
                    let lhs = self.iota(&self.t_action(m, &mv, x), x);
                    let rhs = self.t_inverse_action(m, &iv, x);
                    if lhs != rhs {
                        return Err(self.failure("iota-equivariance", Some(x), format!("{} on m_{lv}", self.name(m))));
                    }
                    let lhs = self.j_map(&self.t_action(m, &mv, x));
                    let rhs = self.t_action(m, &self.j_map(&mv), z).scale(&minus_qinv);
                    if lhs != rhs {
                        return Err(self.failure(
                            "j-twisted-equivariance",
                            Some(x),
                            format!("{} on m_{lv}", self.name(m)),
                        ));
                    }
                }
                if self.iota(&self.j_map(&mv), x) != self.j_map(&self.iota(&mv, z)) {
                    return Err(self.failure("iota-j-conjugation", Some(x), format!("m_{lv}")));
                }
                let c = self.kl_element_c(v, x);
                let cp = self.kl_element_cprime(v, x);
                let signed = self.kl_element_cprime(v, z).scale(&HalfLaurent::constant(sign(self.poset().rank(v))));
                if self.j_map(&c) != signed {
                    return Err(self.failure("j-C-to-Cprime", Some(x), format!("w = {lv}")));
                }
                if self.iota(&cp, x) != cp {
                    return Err(self.failure("iota-Cprime-invariance", Some(x), format!("w = {lv}")));
                }
                if self.iota(&c, x) != c {
                    return Err(self.failure("iota-C-invariance", Some(x), format!("w = {lv}")));
                }
            }
            Ok(())
        })
    }

    /// Both recursions for every `w` and every matching moving `w` down.
    pub fn verify_recursions(&self, x: XParam) -> Result<(), HeckeFailure> {
        let p = self.poset();
        let z = x.complement();
        let jobs: Vec<(usize, usize)> = (0..p.len())
            .flat_map(|w| self.system.down_matchings(w).into_iter().map(move |m| (w, m)))
            .collect();
        exec::try_for_each(&jobs, |&(w, m)| {
            if self.cprime_recursion(w, m, x) != self.kl_element_cprime(w, x) {
                return Err(self.failure(
                    "cprime-recursion",
                    Some(x),
                    format!("w = {}, {}", self.label(w), self.name(m)),
                ));
            }
            for v in p.below_set(w).ones() {
                if self.p_recursion(v, w, m, x) != self.p_table(z).value(v, w) {
                    return Err(self.failure(
                        "p-recursion",
                        Some(x),
                        format!("v = {}, w = {}, {}", self.label(v), self.label(w), self.name(m)),
                    ));
                }
            }
            Ok(())
        })
    }
}

fn permutation_order(system: &PirconSystem, a: usize, b: usize) -> usize {
    let (ma, mb) = (&system.matchings()[a], &system.matchings()[b]);
    let n = system.poset().len();
    let perm: Vec<usize> = (0..n).map(|u| ma.image(mb.image(u).expect("total")).expect("total")).collect();
    let mut seen = vec![false; n];
    let mut order = 1usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut u = start;
        while !seen[u] {
            seen[u] = true;
            u = perm[u];
            len += 1;
        }
        order = num_integer::lcm(order, len);
    }
    order
}
