//! Growth of Schreier coset graphs of free groups.
//!
//! The crate models the free group `F_n` through freely reduced words
//! ([`words`]), builds rooted coset graphs `H\F_n` from several backends
//! ([`schreier`]), estimates the growth rates of the ambient group, the
//! quotient and the subgroup ([`growth`]), and constructs the coset
//! inflation map that inserts conjugated confining elements into a coset
//! representative ([`insertion`]). [`report`] assembles the JSON documents
//! emitted by the `confgrowth` command-line tool.

pub mod error;
pub mod growth;
pub mod insertion;
pub mod report;
pub mod schreier;
pub mod words;

pub use error::{Error, Result};
pub use growth::{
    appendix1_bound, appendix2_bound, certify_gap, estimate_rate, find_gap_omega, poincare_partial, rho,
    verify_inequalities, CountKind, GapCertificate, GapFunctionParams, GapOmega, GrowthEstimate, InequalityReport,
    RateMethod, SphereBound, WindowPolicy,
};
pub use insertion::{
    choose_insertions, decompose, exponential_count_report, generate_images, phi, verify_coset, verify_injective,
    verify_injective_sampled, Decomposition, InjectivityReport, InsertionScheme, PhiImage,
};
pub use schreier::{
    bfs_ball, confinement_check, hashimoto_growth, loop_counts, shell, tree_ball_radius, BallTable, ConfinementReport,
    CosetGraph, TreeRadius, VertexId,
};
pub use words::{conjugate, enumerate_ball, multiply, reduce, Alphabet, Letter, ReducedWord};

/// Default cap on the number of words produced by ball enumeration.
pub const DEFAULT_WORD_BUDGET: usize = 10_000_000;

/// Default cap on the number of vertices materialized by a BFS.
pub const DEFAULT_VERTEX_BUDGET: usize = 5_000_000;
