//! Invariants of trees and of the automorphism groups of the right-angled
//! Artin groups they define.
//!
//! The crate has five parts:
//!
//! * [`tree`] — labeled trees, Prüfer coding, boundary distances, deep
//!   nodes, the invariant `upsilon`, and the vertex partial order;
//! * [`enumerate`] — exhaustive enumeration and uniform sampling of labeled
//!   trees with exact or Monte-Carlo statistics;
//! * [`series`] — exact rational truncated power series: the Cayley EGF,
//!   Lagrange inversion, the distance/height recurrences, Stirling
//!   identities, and the limiting constants `c3` and `d3`;
//! * [`raag`] — Whitehead automorphisms over the RAAG of a tree, word
//!   normal forms, and the projection onto the deep partial conjugations;
//! * [`homology`] — the finite presentation of the transvection/conjugation
//!   subgroup of the automorphism group, its abelianization, and exact
//!   first-Betti-number computations.

pub mod discrepancy;
pub mod enumerate;
pub mod error;
pub mod homology;
pub mod raag;
pub mod series;
pub mod tree;

pub use enumerate::{
    enumerate_rooted, enumerate_unrooted, estimate, rooted_unrooted_bridge_check, sample_uniform,
    Mode, RootedTree, StatReport, Statistic,
};
pub use error::{AutError, BudgetError, SeriesError, TreeError};
pub use tree::{BoundaryProfile, LabeledTree, PruferCode};
