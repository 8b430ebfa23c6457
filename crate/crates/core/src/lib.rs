//! Finite differences for non-divergence elliptic operators
//! `Σ aᵢⱼ∂ᵢⱼu + Σ bⱼ∂ⱼu + cu` on planar domains: monotone assembly, elliptic
//! and resolvent solves, semigroup evolution, and a seeded battery of
//! numerical checks for the maximum principles and semigroup properties
//! these operators satisfy.
//!
//! The guide in `book/` walks through the modules in order; its snippets
//! run as doctests of this crate.

pub mod coeff;
pub mod elliptic;
pub mod expr;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod operator;
pub mod semigroup;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/coefficients.md")]
    mod coefficients {}
    #[doc = include_str!("../../../book/src/operator.md")]
    mod operator {}
    #[doc = include_str!("../../../book/src/elliptic.md")]
    mod elliptic {}
    #[doc = include_str!("../../../book/src/resolvents.md")]
    mod resolvents {}
    #[doc = include_str!("../../../book/src/semigroup.md")]
    mod semigroup {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
