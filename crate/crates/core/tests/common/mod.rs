#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use pircon::coxeter::{CoxeterSystem, CoxeterType, ParabolicQuotient};
use pircon::matchings::{enumerate_spms, PartialMatching, Refinement};
use pircon::poset::GradedPoset;
use pircon::QPoly;

pub fn criterion_types() -> Vec<CoxeterType> {
    vec![CoxeterType::A(2), CoxeterType::A(3), CoxeterType::B(2), CoxeterType::B(3), CoxeterType::I2(5)]
}

/// Every parabolic quotient of every type in the suite.
pub fn all_quotients() -> Vec<ParabolicQuotient> {
    let mut out = Vec::new();
    for t in criterion_types() {
        let w = Arc::new(CoxeterSystem::build(&t).unwrap());
        let r = w.rank();
        for mask in 0u32..(1 << r) {
            let h: Vec<usize> = (0..r).filter(|&s| mask >> s & 1 == 1).collect();
            out.push(w.quotient(&h).unwrap());
        }
    }
    out
}

pub fn quotient_name(q: &ParabolicQuotient) -> String {
    let hs: Vec<String> = q.h().iter().map(|s| format!("s{}", s + 1)).collect();
    format!("{}/H={{{}}}", q.system().description(), hs.join(","))
}

/// Every refinement of `p`, built as the product of all SPM choices; `None`
/// when there are more than `limit`.
pub fn all_refinements(p: &GradedPoset, limit: usize) -> Option<Vec<Refinement>> {
    let pools: Vec<Vec<PartialMatching>> =
        (0..p.len()).map(|w| if Some(w) == p.bottom() { Vec::new() } else { enumerate_spms(p, w) }).collect();
    let mut total = 1usize;
    for pool in pools.iter().filter(|pl| !pl.is_empty()) {
        total = total.checked_mul(pool.len())?;
        if total > limit {
            return None;
        }
    }
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let assignment = pools
            .iter()
            .map(|pool| {
                if pool.is_empty() {
                    return None;
                }
                let pick = k % pool.len();
                k /= pool.len();
                Some(pool[pick].clone())
            })
            .collect();
        out.push(Refinement::new(p, assignment).unwrap());
    }
    Some(out)
}

/// Classical Kazhdan–Lusztig polynomials of `S_n`, computed on one-line
/// permutations with the tableau criterion for Bruhat order and the standard
/// left-descent recursion.
pub struct ClassicalKl {
    pub perms: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    p: HashMap<(usize, usize), QPoly>,
}

pub fn inversions(w: &[u8]) -> usize {
    (0..w.len()).flat_map(|i| (i + 1..w.len()).map(move |j| (i, j))).filter(|&(i, j)| w[i] > w[j]).count()
}

/// `u <= w` iff for every k the sorted prefixes of length k compare entrywise.
pub fn bruhat_leq(u: &[u8], w: &[u8]) -> bool {
    (1..u.len()).all(|k| {
        let mut a = u[..k].to_vec();
        let mut b = w[..k].to_vec();
        a.sort_unstable();
        b.sort_unstable();
        a.iter().zip(&b).all(|(x, y)| x <= y)
    })
}

/// `s_i w`: swap the values `i` and `i+1` (0-based `i`).
pub fn left_mult(i: usize, w: &[u8]) -> Vec<u8> {
    w.iter()
        .map(|&v| match v as usize {
            x if x == i => (i + 1) as u8,
            x if x == i + 1 => i as u8,
            _ => v,
        })
        .collect()
}

/// Permutation of a word in the generators (0-based), multiplied left to right.
pub fn perm_of_word(n: usize, word: &[usize]) -> Vec<u8> {
    let mut w: Vec<u8> = (0..n as u8).collect();
    for &s in word.iter().rev() {
        w = left_mult(s, &w);
    }
    w
}

fn all_perms(n: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for v in 0..n as u8 {
                if !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

impl ClassicalKl {
    pub fn new(n: usize) -> Self {
        let mut perms = all_perms(n);
        perms.sort_by_key(|w| (inversions(w), w.clone()));
        let index = perms.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut kl = ClassicalKl { perms, index, p: HashMap::new() };
        let total = kl.perms.len();
        for w in 0..total {
            for x in 0..total {
                let value = kl.compute(x, w);
                kl.p.insert((x, w), value);
            }
        }
        kl
    }

    pub fn index(&self, w: &[u8]) -> usize {
        self.index[w]
    }

    pub fn p(&self, x: usize, w: usize) -> QPoly {
        self.p.get(&(x, w)).cloned().unwrap_or_else(QPoly::zero)
    }

    fn leq(&self, x: usize, w: usize) -> bool {
        bruhat_leq(&self.perms[x], &self.perms[w])
    }

    fn len(&self, w: usize) -> usize {
        inversions(&self.perms[w])
    }

    fn left_descent(&self, w: usize) -> Option<usize> {
        let n = self.perms[w].len();
        (0..n - 1).find(|&i| self.len(self.index(&left_mult(i, &self.perms[w]))) < self.len(w))
    }

    fn mu(&self, z: usize, v: usize) -> i64 {
        let gap = self.len(v) as i64 - self.len(z) as i64;
        if gap <= 0 || gap % 2 == 0 || !self.leq(z, v) {
            return 0;
        }
        let c = self.p(z, v).coeff((gap - 1) / 2);
        i64::try_from(c).unwrap()
    }

    // Relies on every P_{.,v} with l(v) < l(w) being filled already.
    fn compute(&self, x: usize, w: usize) -> QPoly {
        if !self.leq(x, w) {
            return QPoly::zero();
        }
        if x == w {
            return QPoly::one();
        }
        let s = self.left_descent(w).expect("w is not the identity");
        let v = self.index(&left_mult(s, &self.perms[w]));
        let sx = self.index(&left_mult(s, &self.perms[x]));
        let c = usize::from(self.len(sx) < self.len(x));
        let mut out = &self.p(sx, v).shift(1 - c) + &self.p(x, v).shift(c);
        for z in 0..self.perms.len() {
            if z == v || !self.leq(z, v) || self.len(self.index(&left_mult(s, &self.perms[z]))) > self.len(z) {
                continue;
            }
            let m = self.mu(z, v);
            if m != 0 {
                let shift = (self.len(w) - self.len(z)) / 2;
                out -= &self.p(x, z).shift(shift).scale(&m.into());
            }
        }
        out
    }
}

/// Parse a label like `s2s1s3s2` into 0-based generators.
pub fn word_of_label(label: &str) -> Vec<usize> {
    if label == "e" {
        return Vec::new();
    }
    label.split('s').filter(|t| !t.is_empty()).map(|t| t.parse::<usize>().unwrap() - 1).collect()
}
