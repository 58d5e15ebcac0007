//! Twisted identities `{theta(w^-1) w : w in S_2n}` under the induced Bruhat
//! order, with `theta(w) = w0 w w0`, and their conjugation matchings.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::coxeter::{max_group_size_from_env, CoxeterError, CoxeterSystem, CoxeterType};
use crate::klpoly::{PirconSystem, PolyTable, SystemError, XParam};
use crate::matchings::{verify_spm, PartialMatching, Violation};
use crate::poset::{GradedPoset, PosetError};

#[derive(Debug, Error)]
pub enum TwistedError {
    #[error("n must be positive")]
    ZeroN,
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error("induced order is not graded: {0}")]
    Poset(#[from] PosetError),
    #[error(transparent)]
    System(#[from] SystemError),
}

pub struct TwistedIdentities {
    n: usize,
    host: Arc<CoxeterSystem>,
    elements: Vec<usize>,
    position: HashMap<usize, usize>,
    poset: Arc<GradedPoset>,
    system: PirconSystem,
}

impl TwistedIdentities {
    pub fn build(n: usize) -> Result<Self, TwistedError> {
        Self::build_with_bound(n, max_group_size_from_env())
    }

    pub fn build_with_bound(n: usize, bound: usize) -> Result<Self, TwistedError> {
        if n == 0 {
            return Err(TwistedError::ZeroN);
        }
        let host = Arc::new(CoxeterSystem::build_with_bound(&CoxeterType::A(2 * n - 1), bound)?);
        let w0 = host.longest_element();
        let theta = |w: usize| host.multiply(host.multiply(w0, w), w0);
        let mut elements: Vec<usize> =
            (0..host.order()).map(|w| host.multiply(theta(host.inverse(w)), w)).collect();
        elements.sort_unstable_by_key(|&u| (host.length(u), u));
        elements.dedup();
        let position: HashMap<usize, usize> = elements.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let labels = elements.iter().map(|&u| one_line(host.permutation(u))).collect();
        let poset = Arc::new(GradedPoset::from_relation(labels, |a, b| {
            a != b && host.bruhat_leq(elements[a], elements[b])
        })?);
        let k = host.rank();
        let mut matchings = Vec::with_capacity(k);
        for i in 0..k {
            let left = host.generator(k - 1 - i);
            let right = host.generator(i);
            let images = elements
                .iter()
                .map(|&u| Some(position[&host.multiply(host.multiply(left, u), right)]))
                .collect();
            matchings.push(PartialMatching::new(images));
        }
        let names = (0..k).map(|i| format!("conj_s{}", i + 1)).collect();
        let system = PirconSystem::new(Arc::clone(&poset), matchings, names)?;
        Ok(TwistedIdentities { n, host, elements, position, poset, system })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn host(&self) -> &Arc<CoxeterSystem> {
        &self.host
    }

    pub fn poset(&self) -> &Arc<GradedPoset> {
        &self.poset
    }

    /// Host group element of poset element `i`.
    pub fn element(&self, i: usize) -> usize {
        self.elements[i]
    }

    pub fn position(&self, host_element: usize) -> Option<usize> {
        self.position.get(&host_element).copied()
    }

    /// The conjugation matchings `u -> theta(s_i) u s_i` on the whole poset.
    pub fn system(&self) -> &PirconSystem {
        &self.system
    }

    pub fn into_system(self) -> PirconSystem {
        self.system
    }

    /// The conjugation matching for generator `i` (0-based) restricted to the
    /// ideal of `w`, if it is an SPM there.
    pub fn conjugation_matching(&self, i: usize, w: usize) -> Result<PartialMatching, Violation> {
        let m = self.system.matchings()[i]
            .restrict_to_ideal(&self.poset, w)
            .ok_or(Violation::WrongDomain { top: w, element: w })?;
        verify_spm(&self.poset, &m, w)?;
        Ok(m)
    }

    /// Kazhdan–Lusztig–Vogan R (`x = q`) or Q (`x = -1`) polynomials.
    pub fn klv_polynomials(&self, x: XParam) -> PolyTable {
        self.system.r_table(x)
    }
}

fn one_line(perm: &[u16]) -> String {
    let digits: Vec<String> = perm.iter().map(|&v| (v + 1).to_string()).collect();
    if perm.len() <= 9 {
        digits.concat()
    } else {
        digits.join(",")
    }
}

pub fn build_twisted(n: usize) -> Result<TwistedIdentities, TwistedError> {
    TwistedIdentities::build(n)
}
