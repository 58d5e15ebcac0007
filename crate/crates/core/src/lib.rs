//! Kazhdan–Lusztig theory on pircons with exact integer arithmetic.
//!
//! The crate builds finite graded posets that admit special partial matchings
//! (parabolic quotients of finite Coxeter groups, twisted identities of
//! `S_2n`, or posets read from JSON), computes their R- and P-polynomial
//! tables for both parameters `x = q` and `x = -1`, checks the up-down
//! symmetry and kernel properties, and realizes the two Hecke module
//! structures together with their involutions and Kazhdan–Lusztig bases.
//!
//! Heavy verification loops run through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and can be switched to sequential at runtime.

macro_rules! forward_binops {
    ($t:ty) => {
        impl std::ops::Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                &self + &rhs
            }
        }
        impl std::ops::Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                &self - &rhs
            }
        }
        impl std::ops::Mul for $t {
            type Output = $t;
            fn mul(self, rhs: $t) -> $t {
                &self * &rhs
            }
        }
        impl std::ops::Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                -&self
            }
        }
    };
}

pub mod cli;
pub mod coxeter;
pub mod exec;
pub mod hecke;
pub mod klpoly;
pub mod matchings;
pub mod poly;
pub mod poset;
pub mod twisted;

pub use coxeter::{CoxeterSystem, CoxeterType, ParabolicQuotient};
pub use hecke::{HeckeContext, ModuleVector};
pub use klpoly::{PirconSystem, PolyTable, XParam};
pub use matchings::{PartialMatching, Refinement};
pub use poly::{HalfLaurent, QPoly};
pub use poset::GradedPoset;
pub use twisted::TwistedIdentities;
