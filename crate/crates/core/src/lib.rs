//! Constructive best approximation against nested subspace chains.
//!
//! The crate builds, in a concrete finite-dimensional coordinate space under
//! an L1, L2 or L∞ norm, elements whose distances to a strictly nested chain
//! of subspaces match a prescribed non-increasing deviation sequence — either
//! exactly (when the sequence dominates its own tail sums) or within
//! two-sided multiplicative bounds after interleaving a geometric subsequence.
//! Every reported distance is backed by an independently checkable
//! primal/dual certificate.
//!
//! Module map:
//! - [`space`]: points, norms, subspaces, chains and deviation sequences;
//! - [`oracle`]: exact distances, norming functionals and certificates;
//! - [`finite`]: prescribed distances to a finite chain with an anchor;
//! - [`pair`]: two-distance elements, the delta search and functional probes;
//! - [`engine`]: the exact construction via level elements and a backward
//!   intermediate-value sweep;
//! - [`bounds`]: geometric interleaving for arbitrary null sequences.

pub mod bounds;
pub mod engine;
mod error;
pub mod finite;
pub mod oracle;
pub mod pair;
mod simplex;
pub mod space;

pub use error::{Error, Result};
