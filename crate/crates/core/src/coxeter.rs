//! Finite Coxeter groups realized as permutation groups, their Bruhat order,
//! and parabolic quotients `W^H`.
//!
//! Supported types are `A_n` (permutations of `n + 1` points), `B_n` (signed
//! permutations), `D_n` (even-signed permutations), `I2(m)` (symmetries of a
//! `2m`-cycle) and direct products of these. The whole group is tabulated by
//! breadth-first closure, so length, descents and generator multiplication
//! are table lookups.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::GradedPoset;

/// Environment variable overriding [`DEFAULT_MAX_GROUP_SIZE`].
pub const MAX_GROUP_SIZE_ENV: &str = "PIRCON_MAX_GROUP_SIZE";
pub const DEFAULT_MAX_GROUP_SIZE: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoxeterError {
    #[error("unsupported Coxeter type: {0}")]
    Unsupported(String),
    #[error("group of order {order} exceeds the size bound {bound}")]
    TooLarge { order: u128, bound: usize },
    #[error("malformed Coxeter matrix: {0}")]
    BadMatrix(String),
    #[error("realization does not match the Coxeter matrix at ({0}, {1})")]
    Realization(usize, usize),
    #[error("generator index {0} out of range")]
    BadGenerator(usize),
}

pub fn max_group_size_from_env() -> usize {
    std::env::var(MAX_GROUP_SIZE_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_GROUP_SIZE)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoxeterType {
    A(usize),
    B(usize),
    D(usize),
    I2(usize),
    Product(Vec<CoxeterType>),
}

#[derive(Serialize, Deserialize)]
struct CoxeterTypeJson {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<CoxeterTypeJson>>,
}

impl CoxeterType {
    pub fn rank(&self) -> usize {
        match self {
            CoxeterType::A(n) | CoxeterType::B(n) | CoxeterType::D(n) => *n,
            CoxeterType::I2(_) => 2,
            CoxeterType::Product(fs) => fs.iter().map(CoxeterType::rank).sum(),
        }
    }

    /// Group order, or `None` on overflow.
    pub fn order(&self) -> Option<u128> {
        let fact = |n: usize| (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k));
        match self {
            CoxeterType::A(n) => fact(n + 1),
            CoxeterType::B(n) => fact(*n)?.checked_mul(1u128.checked_shl(*n as u32)?),
            CoxeterType::D(n) => fact(*n)?.checked_mul(1u128.checked_shl(n.saturating_sub(1) as u32)?),
            CoxeterType::I2(m) => Some(2 * *m as u128),
            CoxeterType::Product(fs) => fs.iter().try_fold(1u128, |acc, f| acc.checked_mul(f.order()?)),
        }
    }

    fn validate(&self) -> Result<(), CoxeterError> {
        match self {
            CoxeterType::A(n) | CoxeterType::B(n) if *n >= 1 => Ok(()),
            CoxeterType::D(n) if *n >= 2 => Ok(()),
            CoxeterType::I2(m) if *m >= 2 => Ok(()),
            CoxeterType::Product(fs) if !fs.is_empty() => fs.iter().try_for_each(CoxeterType::validate),
            other => Err(CoxeterError::Unsupported(other.to_string())),
        }
    }

    /// Coxeter matrix in the generator numbering used by [`CoxeterSystem`].
    pub fn matrix(&self) -> Vec<Vec<u32>> {
        let n = self.rank();
        let mut m = vec![vec![2u32; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1;
        }
        let mut set = |a: usize, b: usize, v: u32| {
            m[a][b] = v;
            m[b][a] = v;
        };
        match self {
            CoxeterType::A(n) => (1..*n).for_each(|i| set(i - 1, i, 3)),
            CoxeterType::B(n) => {
                if *n >= 2 {
                    set(0, 1, 4);
                }
                (2..*n).for_each(|i| set(i - 1, i, 3));
            }
            CoxeterType::D(n) => {
                if *n >= 3 {
                    set(0, 2, 3);
                }
                (2..*n).for_each(|i| set(i - 1, i, 3));
            }
            CoxeterType::I2(k) => set(0, 1, *k as u32),
            CoxeterType::Product(fs) => {
                let mut off = 0;
                for f in fs {
                    let sub = f.matrix();
                    for (i, row) in sub.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            m[off + i][off + j] = *v;
                        }
                    }
                    off += f.rank();
                }
            }
        }
        m
    }

    /// Generators as permutations of `0..points`.
    fn generators(&self) -> (usize, Vec<Vec<u16>>) {
        let swap = |points: usize, pairs: &[(usize, usize)]| {
            let mut p: Vec<u16> = (0..points as u16).collect();
            for &(a, b) in pairs {
                p.swap(a, b);
            }
            p
        };
        match self {
            CoxeterType::A(n) => {
                let pts = n + 1;
                (pts, (0..*n).map(|i| swap(pts, &[(i, i + 1)])).collect())
            }
            // Point `i` is `+(i+1)`, point `n + i` is `-(i+1)`.
            CoxeterType::B(n) => {
                let pts = 2 * n;
                let mut gens = vec![swap(pts, &[(0, *n)])];
                gens.extend((1..*n).map(|i| swap(pts, &[(i - 1, i), (n + i - 1, n + i)])));
                (pts, gens)
            }
            CoxeterType::D(n) => {
                let pts = 2 * n;
                let mut gens = vec![swap(pts, &[(0, n + 1), (1, *n)])];
                gens.extend((1..*n).map(|i| swap(pts, &[(i - 1, i), (n + i - 1, n + i)])));
                (pts, gens)
            }
            CoxeterType::I2(m) => {
                let pts = 2 * m;
                let reflect = |c: usize| -> Vec<u16> { (0..pts).map(|i| ((c + pts - i) % pts) as u16).collect() };
                (pts, vec![reflect(0), reflect(2)])
            }
            CoxeterType::Product(fs) => {
                let parts: Vec<(usize, Vec<Vec<u16>>)> = fs.iter().map(CoxeterType::generators).collect();
                let total: usize = parts.iter().map(|p| p.0).sum();
                let mut gens = Vec::new();
                let mut off = 0;
                for (pts, gs) in parts {
                    for g in gs {
                        let mut p: Vec<u16> = (0..total as u16).collect();
                        for (i, v) in g.iter().enumerate() {
                            p[off + i] = *v + off as u16;
                        }
                        gens.push(p);
                    }
                    off += pts;
                }
                (total, gens)
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_json_struct()).expect("type serializes")
    }

    fn to_json_struct(&self) -> CoxeterTypeJson {
        let simple = |kind: &str, rank: usize| CoxeterTypeJson { kind: kind.into(), rank: Some(rank), m: None, factors: None };
        match self {
            CoxeterType::A(n) => simple("A", *n),
            CoxeterType::B(n) => simple("B", *n),
            CoxeterType::D(n) => simple("D", *n),
            CoxeterType::I2(m) => CoxeterTypeJson { kind: "I2".into(), rank: Some(2), m: Some(*m), factors: None },
            CoxeterType::Product(fs) => CoxeterTypeJson {
                kind: "product".into(),
                rank: None,
                m: None,
                factors: Some(fs.iter().map(CoxeterType::to_json_struct).collect()),
            },
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, CoxeterError> {
        let json: CoxeterTypeJson =
            serde_json::from_value(value.clone()).map_err(|e| CoxeterError::BadMatrix(e.to_string()))?;
        Self::from_json_struct(&json)
    }

    fn from_json_struct(json: &CoxeterTypeJson) -> Result<Self, CoxeterError> {
        let rank = || json.rank.ok_or_else(|| CoxeterError::BadMatrix(format!("type {} needs a rank", json.kind)));
        let t = match json.kind.as_str() {
            "A" => CoxeterType::A(rank()?),
            "B" => CoxeterType::B(rank()?),
            "D" => CoxeterType::D(rank()?),
            "I2" => CoxeterType::I2(json.m.ok_or_else(|| CoxeterError::BadMatrix("I2 needs m".into()))?),
            "product" => CoxeterType::Product(
                json.factors
                    .as_ref()
                    .ok_or_else(|| CoxeterError::BadMatrix("product needs factors".into()))?
                    .iter()
                    .map(Self::from_json_struct)
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(CoxeterError::Unsupported(other.to_string())),
        };
        t.validate()?;
        Ok(t)
    }
}

impl fmt::Display for CoxeterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoxeterType::A(n) => write!(f, "A{n}"),
            CoxeterType::B(n) => write!(f, "B{n}"),
            CoxeterType::D(n) => write!(f, "D{n}"),
            CoxeterType::I2(m) => write!(f, "I2({m})"),
            CoxeterType::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join("x"))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A finite Coxeter group with its full element table.
///
/// Elements are indices into the table; `0` is the identity. Generators are
/// numbered `0..rank()` and printed 1-based (`s1`, `s2`, ...).
pub struct CoxeterSystem {
    description: String,
    matrix: Vec<Vec<u32>>,
    perms: Vec<Vec<u16>>,
    lookup: HashMap<Vec<u16>, usize>,
    length: Vec<u32>,
    right: Vec<Vec<usize>>,
    left: Vec<Vec<usize>>,
    right_descents: Vec<u64>,
    left_descents: Vec<u64>,
    ideals: Vec<OnceLock<FixedBitSet>>,
}

impl fmt::Debug for CoxeterSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoxeterSystem")
            .field("type", &self.description)
            .field("order", &self.order())
            .finish()
    }
}

impl CoxeterSystem {
    pub fn build(t: &CoxeterType) -> Result<Self, CoxeterError> {
        Self::build_with_bound(t, max_group_size_from_env())
    }

    pub fn build_with_bound(t: &CoxeterType, bound: usize) -> Result<Self, CoxeterError> {
        t.validate()?;
        let order = t.order().ok_or(CoxeterError::TooLarge { order: u128::MAX, bound })?;
        if order > bound as u128 {
            return Err(CoxeterError::TooLarge { order, bound });
        }
        let (_, gens) = t.generators();
        Self::from_generators(t.to_string(), t.matrix(), gens)
    }

    /// Recognize a Coxeter matrix as a product of supported types, with
    /// generators numbered as in the matrix. Entries `0` stand for infinity.
    pub fn from_matrix(matrix: &[Vec<u32>]) -> Result<Self, CoxeterError> {
        Self::from_matrix_with_bound(matrix, max_group_size_from_env())
    }

    pub fn from_matrix_with_bound(matrix: &[Vec<u32>], bound: usize) -> Result<Self, CoxeterError> {
        let n = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(CoxeterError::BadMatrix("matrix is not square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != matrix[j][i] {
                    return Err(CoxeterError::BadMatrix(format!("asymmetric at ({i}, {j})")));
                }
                if (i == j) != (v == 1) {
                    return Err(CoxeterError::BadMatrix(format!("entry ({i}, {j}) = {v}")));
                }
                if i != j && v == 0 {
                    return Err(CoxeterError::Unsupported("infinite Coxeter group".into()));
                }
            }
        }
        let components = recognize_components(matrix)?;
        let types: Vec<CoxeterType> = components.iter().map(|(t, _)| t.clone()).collect();
        let whole = if types.len() == 1 { types[0].clone() } else { CoxeterType::Product(types) };
        let order = whole.order().ok_or(CoxeterError::TooLarge { order: u128::MAX, bound })?;
        if order > bound as u128 {
            return Err(CoxeterError::TooLarge { order, bound });
        }
        let (points, flat) = whole.generators();
        // `flat` lists generators component by component; move each to the
        // matrix position it was recognized at.
        let mut gens = vec![Vec::new(); n];
        let mut k = 0;
        for (_, positions) in &components {
            for &p in positions {
                gens[p] = flat[k].clone();
                k += 1;
            }
        }
        debug_assert!(gens.iter().all(|g| g.len() == points));
        Self::from_generators(whole.to_string(), matrix.to_vec(), gens)
    }

    fn from_generators(description: String, matrix: Vec<Vec<u32>>, gens: Vec<Vec<u16>>) -> Result<Self, CoxeterError> {
        let rank = gens.len();
        if rank > 64 {
            return Err(CoxeterError::Unsupported("more than 64 generators".into()));
        }
        let points = gens.first().map_or(0, Vec::len);
        let identity: Vec<u16> = (0..points as u16).collect();
        let mut perms = vec![identity.clone()];
        let mut lookup = HashMap::from([(identity, 0usize)]);
        let mut length = vec![0u32];
        let mut right: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(w) = queue.pop_front() {
            let mut row = Vec::with_capacity(rank);
            for g in &gens {
                let p: Vec<u16> = g.iter().map(|&i| perms[w][i as usize]).collect();
                let idx = match lookup.get(&p) {
                    Some(&i) => i,
                    None => {
                        let i = perms.len();
                        lookup.insert(p.clone(), i);
                        perms.push(p);
                        length.push(length[w] + 1);
                        queue.push_back(i);
                        i
                    }
                };
                row.push(idx);
            }
            right.push(row);
        }
        let left: Vec<Vec<usize>> = perms
            .iter()
            .map(|w| {
                gens.iter()
                    .map(|g| lookup[&w.iter().map(|&i| g[i as usize]).collect::<Vec<u16>>()])
                    .collect()
            })
            .collect();
        let descents = |table: &Vec<Vec<usize>>| -> Vec<u64> {
            (0..perms.len())
                .map(|w| {
                    (0..rank)
                        .filter(|&s| length[table[w][s]] < length[w])
                        .fold(0u64, |acc, s| acc | (1 << s))
                })
                .collect()
        };
        let right_descents = descents(&right);
        let left_descents = descents(&left);
        let ideals = (0..perms.len()).map(|_| OnceLock::new()).collect();
        let sys = CoxeterSystem {
            description,
            matrix,
            perms,
            lookup,
            length,
            right,
            left,
            right_descents,
            left_descents,
            ideals,
        };
        for s in 0..rank {
            for t in 0..rank {
                let st = sys.mult_gen(sys.generator(s), t, Side::Right);
                if sys.element_order(st) != sys.matrix[s][t] as usize {
                    return Err(CoxeterError::Realization(s, t));
                }
            }
        }
        Ok(sys)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn matrix(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    pub fn m(&self, s: usize, t: usize) -> u32 {
        self.matrix[s][t]
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    /// Number of group elements.
    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn generator(&self, s: usize) -> usize {
        self.right[0][s]
    }

    pub fn length(&self, w: usize) -> u32 {
        self.length[w]
    }

    pub fn right_descents(&self, w: usize) -> u64 {
        self.right_descents[w]
    }

    pub fn left_descents(&self, w: usize) -> u64 {
        self.left_descents[w]
    }

    pub fn has_right_descent(&self, w: usize, s: usize) -> bool {
        self.right_descents[w] >> s & 1 == 1
    }

    pub fn has_left_descent(&self, w: usize, s: usize) -> bool {
        self.left_descents[w] >> s & 1 == 1
    }

    pub fn mult_gen(&self, w: usize, s: usize, side: Side) -> usize {
        match side {
            Side::Left => self.left[w][s],
            Side::Right => self.right[w][s],
        }
    }

    /// Underlying permutation of the realization.
    pub fn permutation(&self, w: usize) -> &[u16] {
        &self.perms[w]
    }

    pub fn element_of_permutation(&self, p: &[u16]) -> Option<usize> {
        self.lookup.get(p).copied()
    }

    pub fn multiply(&self, u: usize, v: usize) -> usize {
        let p: Vec<u16> = self.perms[v].iter().map(|&i| self.perms[u][i as usize]).collect();
        self.lookup[&p]
    }

    pub fn inverse(&self, w: usize) -> usize {
        let mut inv = vec![0u16; self.perms[w].len()];
        for (i, &v) in self.perms[w].iter().enumerate() {
            inv[v as usize] = i as u16;
        }
        self.lookup[&inv]
    }

    pub fn element_order(&self, w: usize) -> usize {
        let mut k = 1;
        let mut x = w;
        while x != 0 {
            x = self.multiply(x, w);
            k += 1;
        }
        k
    }

    pub fn from_word(&self, word: &[usize]) -> Result<usize, CoxeterError> {
        word.iter().try_fold(0, |w, &s| {
            if s >= self.rank() {
                Err(CoxeterError::BadGenerator(s))
            } else {
                Ok(self.right[w][s])
            }
        })
    }

    /// Lexicographically least reduced word (0-based generator indices).
    pub fn reduced_word(&self, w: usize) -> Vec<usize> {
        let mut word = Vec::with_capacity(self.length[w] as usize);
        let mut x = w;
        while x != 0 {
            let s = self.left_descents[x].trailing_zeros() as usize;
            word.push(s);
            x = self.left[x][s];
        }
        word
    }

    /// `e`, or the least reduced word written `s1s2...` with 1-based indices.
    pub fn label(&self, w: usize) -> String {
        if w == 0 {
            return "e".into();
        }
        self.reduced_word(w).iter().map(|s| format!("s{}", s + 1)).collect()
    }

    pub fn longest_element(&self) -> usize {
        (0..self.order()).max_by_key(|&w| self.length[w]).unwrap_or(0)
    }

    /// `{u : u <= w}` in Bruhat order, built from `[e, ws] ∪ [e, ws]·s` for a
    /// right descent `s` and memoized per element.
    pub fn lower_ideal(&self, w: usize) -> &FixedBitSet {
        self.ideals[w].get_or_init(|| {
            let mut set = FixedBitSet::with_capacity(self.order());
            if w == 0 {
                set.insert(0);
                return set;
            }
            let s = self.right_descents[w].trailing_zeros() as usize;
            let below = self.lower_ideal(self.right[w][s]);
            for u in below.ones() {
                set.insert(u);
                set.insert(self.right[u][s]);
            }
            set
        })
    }

    pub fn bruhat_leq(&self, u: usize, w: usize) -> bool {
        self.length[u] <= self.length[w] && self.lower_ideal(w).contains(u)
    }

    /// Bruhat comparison by the descent-lift recursion, without memoization.
    pub fn bruhat_leq_descent_lift(&self, u: usize, w: usize) -> bool {
        if self.length[u] > self.length[w] {
            return false;
        }
        if w == 0 {
            return u == 0;
        }
        let s = self.right_descents[w].trailing_zeros() as usize;
        let ws = self.right[w][s];
        if self.has_right_descent(u, s) {
            self.bruhat_leq_descent_lift(self.right[u][s], ws)
        } else {
            self.bruhat_leq_descent_lift(u, ws)
        }
    }

    /// Minimal left coset representatives for the parabolic subgroup
    /// generated by `h`, ordered by Bruhat order.
    pub fn quotient(self: &Arc<Self>, h: &[usize]) -> Result<ParabolicQuotient, CoxeterError> {
        ParabolicQuotient::new(Arc::clone(self), h)
    }
}

/// Split a Coxeter matrix into connected components and recognize each one.
/// Returns each component's type and the matrix positions of its generators
/// in the type's own numbering.
fn recognize_components(matrix: &[Vec<u32>]) -> Result<Vec<(CoxeterType, Vec<usize>)>, CoxeterError> {
    let n = matrix.len();
    let adj = |i: usize| -> Vec<usize> { (0..n).filter(|&j| j != i && matrix[i][j] >= 3).collect() };
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < comp.len() {
            for j in adj(comp[k]) {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(recognize_connected(matrix, &comp)?);
    }
    Ok(out)
}

fn recognize_connected(matrix: &[Vec<u32>], comp: &[usize]) -> Result<(CoxeterType, Vec<usize>), CoxeterError> {
    let unsupported = || CoxeterError::Unsupported(format!("Coxeter diagram on generators {comp:?}"));
    let k = comp.len();
    if k == 1 {
        return Ok((CoxeterType::A(1), comp.to_vec()));
    }
    if k == 2 {
        let m = matrix[comp[0]][comp[1]] as usize;
        return Ok(if m == 3 { (CoxeterType::A(2), comp.to_vec()) } else { (CoxeterType::I2(m), comp.to_vec()) });
    }
    let nbrs = |i: usize| -> Vec<usize> { comp.iter().copied().filter(|&j| j != i && matrix[i][j] >= 3).collect() };
    let edges: Vec<(usize, usize, u32)> = comp
        .iter()
        .flat_map(|&i| comp.iter().filter(move |&&j| j > i).map(move |&j| (i, j, matrix[i][j])))
        .filter(|e| e.2 >= 3)
        .collect();
    if edges.len() != k - 1 {
        return Err(unsupported());
    }
    let fours: Vec<&(usize, usize, u32)> = edges.iter().filter(|e| e.2 == 4).collect();
    if edges.iter().any(|e| e.2 != 3 && e.2 != 4) || fours.len() > 1 {
        return Err(unsupported());
    }
    let degree = |i: usize| nbrs(i).len();
    // Walk a path from `start`, avoiding `avoid`.
    let walk = |start: usize, avoid: &[usize]| -> Vec<usize> {
        let mut path = vec![start];
        let mut prev: Option<usize> = None;
        let mut cur = start;
        loop {
            let next: Vec<usize> =
                nbrs(cur).into_iter().filter(|&j| Some(j) != prev && !avoid.contains(&j)).collect();
            match next.as_slice() {
                [j] => {
                    prev = Some(cur);
                    cur = *j;
                    path.push(cur);
                }
                _ => return path,
            }
        }
    };
    let max_degree = comp.iter().map(|&i| degree(i)).max().unwrap_or(0);
    if max_degree <= 2 {
        let ends: Vec<usize> = comp.iter().copied().filter(|&i| degree(i) == 1).collect();
        if let Some(&&(a, b, _)) = fours.first() {
            let end = if degree(a) == 1 { a } else if degree(b) == 1 { b } else { return Err(unsupported()) };
            let path = walk(end, &[]);
            return Ok((CoxeterType::B(k), path));
        }
        let path = walk(ends[0], &[]);
        return Ok((CoxeterType::A(k), path));
    }
    if max_degree == 3 && fours.is_empty() {
        let branch = comp.iter().copied().find(|&i| degree(i) == 3).ok_or_else(unsupported)?;
        if comp.iter().filter(|&&i| degree(i) == 3).count() != 1 {
            return Err(unsupported());
        }
        let leaves: Vec<usize> = nbrs(branch).into_iter().filter(|&j| degree(j) == 1).collect();
        if leaves.len() < 2 {
            return Err(unsupported());
        }
        let (l0, l1) = (leaves[0], leaves[1]);
        let tail = walk(branch, &[l0, l1]);
        if tail.len() + 2 != k {
            return Err(unsupported());
        }
        let mut order = vec![l0, l1];
        order.extend(tail);
        return Ok((CoxeterType::D(k), order));
    }
    Err(unsupported())
}

/// The parabolic quotient `W^H` as a graded poset.
///
/// Poset element `i` is group element `reps[i]`; reps are sorted by length
/// and then by group index, so the identity is element `0`.
#[derive(Debug)]
pub struct ParabolicQuotient {
    system: Arc<CoxeterSystem>,
    h: Vec<usize>,
    h_mask: u64,
    reps: Vec<usize>,
    position: HashMap<usize, usize>,
    poset: Arc<GradedPoset>,
}

impl ParabolicQuotient {
    pub fn new(system: Arc<CoxeterSystem>, h: &[usize]) -> Result<Self, CoxeterError> {
        let mut h = h.to_vec();
        h.sort_unstable();
        h.dedup();
        if let Some(&s) = h.iter().find(|&&s| s >= system.rank()) {
            return Err(CoxeterError::BadGenerator(s));
        }
        let h_mask = h.iter().fold(0u64, |acc, &s| acc | 1 << s);
        let mut reps: Vec<usize> =
            (0..system.order()).filter(|&w| system.right_descents(w) & h_mask == 0).collect();
        reps.sort_by_key(|&w| (system.length(w), w));
        let position: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let labels: Vec<String> = reps.iter().map(|&w| system.label(w)).collect();
        let mut covers = Vec::new();
        for (j, &v) in reps.iter().enumerate() {
            let ideal = system.lower_ideal(v);
            for u in ideal.ones() {
                if system.length(u) + 1 == system.length(v) {
                    if let Some(&i) = position.get(&u) {
                        covers.push((i, j));
                    }
                }
            }
        }
        let poset = GradedPoset::from_covers(labels, &covers)
            .map_err(|e| CoxeterError::BadMatrix(format!("quotient poset: {e}")))?;
        Ok(ParabolicQuotient { system, h, h_mask, reps, position, poset: Arc::new(poset) })
    }

    pub fn system(&self) -> &Arc<CoxeterSystem> {
        &self.system
    }

    pub fn h(&self) -> &[usize] {
        &self.h
    }

    pub fn poset(&self) -> &Arc<GradedPoset> {
        &self.poset
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    pub fn contains(&self, w: usize) -> bool {
        self.system.right_descents(w) & self.h_mask == 0
    }

    /// Poset index of a group element, if it lies in `W^H`.
    pub fn position(&self, w: usize) -> Option<usize> {
        self.position.get(&w).copied()
    }

    /// Group element at a poset index.
    pub fn group_element(&self, i: usize) -> usize {
        self.reps[i]
    }

    pub fn position_of_word(&self, word: &[usize]) -> Option<usize> {
        self.system.from_word(word).ok().and_then(|w| self.position(w))
    }

    /// `[e, w]^H` with `e` as bottom and `w` as top.
    pub fn lower_interval(&self, i: usize) -> GradedPoset {
        self.poset.order_ideal(i)
    }

    /// Image of poset element `i` under left multiplication by `s`, if it
    /// stays in `W^H`.
    pub fn left_multiply(&self, s: usize, i: usize) -> Option<usize> {
        self.position(self.system.mult_gen(self.reps[i], s, Side::Left))
    }
}
