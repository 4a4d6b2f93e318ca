//! Portfolios of scalarized-objective optimizers.
//!
//! Users weight `d` objectives with a point of the probability simplex. For a
//! finite universe of policies, each summarised by its expected-reward vector
//! and a regularizer value, this crate builds a small set of policies such
//! that every weight vector has a near-optimal member:
//!
//! 1. [`simplex`] builds a grid that is geometric in the interior of the
//!    simplex and additive near its boundary.
//! 2. [`objective`] supplies the exact argmax oracle for each grid weight.
//! 3. [`pipeline`] prunes the resulting policies with a set cover.
//!
//! [`baselines`] provides the uniformly spaced and Dirichlet weight baselines
//! and [`evaluation`] the gap, usage, coverage and guarantee audits.

pub mod baselines;
pub mod cover;
pub mod error;
pub mod evaluation;
pub mod objective;
pub mod pipeline;
pub mod simplex;

pub use baselines::{build_baseline_portfolio, dirichlet_weights, uniform_weights};
pub use error::{PalmError, Result};
pub use evaluation::{
    compare_methods, coverage_figure, gap_report, usage_report, verify_lemma, verify_theorem,
    CompareSettings, ComparisonRow, CoverageFigureRow, GapReport, LemmaAudit, Method, TheoremAudit,
    UsageReport,
};
pub use objective::{
    exact_oracle, f_max, generate_universe, opt_value, r_max, scalarized_objective, PolicyProfile,
    PolicyUniverse, UniverseShape,
};
pub use pipeline::{
    build_initial_portfolio, covers, palm, prune_exact, prune_greedy, CoverageMatrix, Portfolio,
    PortfolioEntry, PortfolioFile, PruneParams,
};
pub use simplex::{
    box_lift, construct_box_grid, construct_weight_grid, coordinatewise_close, one_d_grid,
    project_to_simplex, verify_grid_covers, BoxVector, CoverageReport, GridParams, WeightVector,
};

/// Additive slack carried by every closeness and covering predicate.
pub const TOL: f64 = 1e-12;
