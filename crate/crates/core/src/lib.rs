//! Independence certificates and nonlinear Bell inequalities for
//! multi-source quantum networks.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`network`] describes who receives which particle from which source.
//! 2. [`independence`] finds parties whose source sets are pairwise disjoint.
//! 3. [`quantum`] builds resource states and dichotomic observables and
//!    evaluates correlators, either per resource or on the full tensor product.
//! 4. [`bell`] turns the correlators into `F = |I|^(1/k) + |J|^(1/k)` and compares
//!    it with the classical bound 1 and the quantum bound √2. [`lhv`] searches
//!    local hidden variable models to confirm the classical bound.

pub mod bell;
pub mod error;
pub mod independence;
pub mod lhv;
pub mod network;
pub mod quantum;

pub use error::{Error, Result};
