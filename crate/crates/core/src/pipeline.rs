//! Grid → oracle → prune.
//!
//! Every grid weight gets its exact optimum. The distinct optima then go
//! through a set cover in which policy `π` covers weight `w` when
//!
//! ```text
//! J_w(π) ≥ (1 − μ′)·opt_w − α′
//! ```
//!
//! With `(μ′, α′) = (μ, 0)` the pruned portfolio is a `(4μ, 2(dαR_max + μf_max))`
//! approximation over the whole simplex.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{exact_cover, greedy_cover};
use crate::error::{check_dim, PalmError, Result};
use crate::objective::{PolicyProfile, PolicyUniverse};
use crate::simplex::{construct_weight_grid, GridParams, WeightVector};
use crate::TOL;

pub use crate::cover::{CoverageMatrix, EXACT_COVER_LIMIT};

/// Pruning tolerance. An infinite `alpha_prime` marks an unconstrained
/// portfolio and is written as `null` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPruneParams", into = "RawPruneParams")]
pub struct PruneParams {
    pub mu_prime: f64,
    pub alpha_prime: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPruneParams {
    mu_prime: f64,
    alpha_prime: Option<f64>,
}

impl TryFrom<RawPruneParams> for PruneParams {
    type Error = PalmError;

    fn try_from(raw: RawPruneParams) -> Result<Self> {
        Self::new(raw.mu_prime, raw.alpha_prime.unwrap_or(f64::INFINITY))
    }
}

impl From<PruneParams> for RawPruneParams {
    fn from(p: PruneParams) -> Self {
        Self {
            mu_prime: p.mu_prime,
            alpha_prime: p.alpha_prime.is_finite().then_some(p.alpha_prime),
        }
    }
}

impl PruneParams {
    pub fn new(mu_prime: f64, alpha_prime: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu_prime) {
            return Err(PalmError::InvalidParameter(format!(
                "mu' must lie in [0, 1], got {mu_prime}"
            )));
        }
        if alpha_prime.is_nan() || alpha_prime < 0.0 {
            return Err(PalmError::InvalidParameter(format!(
                "alpha' must be nonnegative, got {alpha_prime}"
            )));
        }
        Ok(Self {
            mu_prime,
            alpha_prime,
        })
    }

    /// `(μ, 0)`, the setting under which the approximation guarantee holds.
    pub fn for_grid(gp: &GridParams) -> Self {
        Self {
            mu_prime: gp.mu,
            alpha_prime: 0.0,
        }
    }

    /// `(0, ∞)`: every policy covers every weight.
    pub fn unconstrained() -> Self {
        Self {
            mu_prime: 0.0,
            alpha_prime: f64::INFINITY,
        }
    }

    #[inline]
    fn accepts(&self, value: f64, opt: f64) -> bool {
        value >= (1.0 - self.mu_prime) * opt - self.alpha_prime - TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioEntry {
    pub policy: PolicyProfile,
    /// First grid weight whose oracle call returned this policy.
    pub source_weight: WeightVector,
    /// Every grid index whose oracle call returned this policy.
    pub source_indices: Vec<usize>,
    /// Grid indices this policy covers under the portfolio's prune parameters.
    pub covered_weights: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub entries: Vec<PortfolioEntry>,
    pub grid: Vec<WeightVector>,
    pub grid_params: Option<GridParams>,
    pub prune_params: PruneParams,
}

impl Portfolio {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn policy_ids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.policy.id).collect()
    }

    pub fn policies(&self) -> impl Iterator<Item = &PolicyProfile> {
        self.entries.iter().map(|e| &e.policy)
    }

    /// Best portfolio member for `w` and its value, lowest id on ties.
    pub fn best_for(&self, w: &[f64]) -> (usize, f64) {
        let mut best: Option<(usize, f64)> = None;
        for p in self.policies() {
            let j = p.objective(w);
            best = match best {
                Some((id, b)) if b > j || (b == j && id < p.id) => Some((id, b)),
                _ => Some((p.id, j)),
            };
        }
        best.expect("portfolio is nonempty")
    }

    /// First grid index not covered by any entry under the recorded prune
    /// parameters, recomputed from the universe.
    pub fn first_uncovered(&self, u: &PolicyUniverse) -> Option<usize> {
        let opts = grid_optima(u, &self.grid);
        (0..self.grid.len()).find(|&j| {
            !self.policies().any(|p| {
                self.prune_params
                    .accepts(p.objective(self.grid[j].coords()), opts[j])
            })
        })
    }

    pub fn to_file(&self, universe_ref: &str) -> PortfolioFile {
        PortfolioFile {
            grid_params: self.grid_params,
            prune_params: self.prune_params,
            universe_ref: universe_ref.to_string(),
            grid: self.grid.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| FileEntry {
                    policy_id: e.policy.id,
                    source_weight: e.source_weight.clone(),
                    source_weight_indices: e.source_indices.clone(),
                    covered_weight_indices: e.covered_weights.clone(),
                })
                .collect(),
        }
    }
}

/// On-disk portfolio. Policies are stored by id and resolved against the
/// universe named by `universe_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioFile {
    pub grid_params: Option<GridParams>,
    pub prune_params: PruneParams,
    pub universe_ref: String,
    pub grid: Vec<WeightVector>,
    pub entries: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub policy_id: usize,
    pub source_weight: WeightVector,
    pub source_weight_indices: Vec<usize>,
    pub covered_weight_indices: Vec<usize>,
}

impl PortfolioFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PalmError::InvalidPortfolio(e.to_string()))
    }

    /// Resolves policy ids against `u` and checks structural consistency.
    /// Cover validity is left to the audits.
    pub fn resolve(&self, u: &PolicyUniverse) -> Result<Portfolio> {
        let bad = |msg: String| Err(PalmError::InvalidPortfolio(msg));
        if self.entries.is_empty() {
            return bad("portfolio has no entries".into());
        }
        if self.grid.is_empty() {
            return bad("portfolio has an empty grid".into());
        }
        for w in &self.grid {
            check_dim(u.dim(), w.dim())?;
        }
        if let Some(gp) = &self.grid_params {
            check_dim(u.dim(), gp.dim)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let Some(policy) = u.policy(e.policy_id) else {
                return bad(format!("policy id {} not in universe", e.policy_id));
            };
            if !seen.insert(e.policy_id) {
                return bad(format!("policy id {} listed twice", e.policy_id));
            }
            check_dim(u.dim(), e.source_weight.dim())?;
            let n = self.grid.len();
            if let Some(i) = e
                .source_weight_indices
                .iter()
                .chain(&e.covered_weight_indices)
                .find(|i| **i >= n)
            {
                return bad(format!("weight index {i} out of range for a grid of {n}"));
            }
            entries.push(PortfolioEntry {
                policy: policy.clone(),
                source_weight: e.source_weight.clone(),
                source_indices: e.source_weight_indices.clone(),
                covered_weights: e.covered_weight_indices.clone(),
            });
        }
        Ok(Portfolio {
            entries,
            grid: self.grid.clone(),
            grid_params: self.grid_params,
            prune_params: self.prune_params,
        })
    }
}

/// `J_w(p) ≥ (1 − μ′)·opt_w − α′`, with [`TOL`] slack.
pub fn covers(
    p: &PolicyProfile,
    w: &WeightVector,
    u: &PolicyUniverse,
    pp: &PruneParams,
) -> Result<bool> {
    check_dim(u.dim(), w.dim())?;
    check_dim(u.dim(), p.rewards.len())?;
    let opt = u.argmax(w.coords()).1;
    Ok(pp.accepts(p.objective(w.coords()), opt))
}

fn grid_optima(u: &PolicyUniverse, grid: &[WeightVector]) -> Vec<f64> {
    grid.par_iter().map(|w| u.argmax(w.coords()).1).collect()
}

/// One oracle call per grid weight; repeated winners merge into one entry,
/// in order of first appearance.
pub fn build_initial_portfolio(
    u: &PolicyUniverse,
    grid: &[WeightVector],
) -> Result<Vec<PortfolioEntry>> {
    if grid.is_empty() {
        return Err(PalmError::InvalidParameter("grid is empty".into()));
    }
    for w in grid {
        check_dim(u.dim(), w.dim())?;
    }
    let winners: Vec<usize> = grid.par_iter().map(|w| u.argmax(w.coords()).0).collect();
    let mut slot = vec![usize::MAX; u.len()];
    let mut entries: Vec<PortfolioEntry> = Vec::new();
    for (j, &id) in winners.iter().enumerate() {
        if slot[id] == usize::MAX {
            slot[id] = entries.len();
            entries.push(PortfolioEntry {
                policy: u.policies()[id].clone(),
                source_weight: grid[j].clone(),
                source_indices: Vec::new(),
                covered_weights: Vec::new(),
            });
        }
        let e = &mut entries[slot[id]];
        e.source_indices.push(j);
        e.covered_weights.push(j);
    }
    Ok(entries)
}

/// `|entries| × |grid|` matrix of the covering predicate.
pub fn coverage_matrix(
    entries: &[PortfolioEntry],
    grid: &[WeightVector],
    u: &PolicyUniverse,
    pp: &PruneParams,
) -> CoverageMatrix {
    let opts = grid_optima(u, grid);
    let rows: Vec<Vec<bool>> = entries
        .par_iter()
        .map(|e| {
            grid.iter()
                .zip(&opts)
                .map(|(w, opt)| pp.accepts(e.policy.objective(w.coords()), *opt))
                .collect()
        })
        .collect();
    CoverageMatrix::from_rows(grid.len(), &rows)
}

fn assemble(
    entries: &[PortfolioEntry],
    picked: &[usize],
    matrix: &CoverageMatrix,
    grid: &[WeightVector],
    pp: PruneParams,
) -> Portfolio {
    let entries = picked
        .iter()
        .map(|&r| {
            let mut e = entries[r].clone();
            e.covered_weights = matrix.covered_by(r);
            e
        })
        .collect();
    Portfolio {
        entries,
        grid: grid.to_vec(),
        grid_params: None,
        prune_params: pp,
    }
}

fn check_entries(entries: &[PortfolioEntry], u: &PolicyUniverse) -> Result<Vec<usize>> {
    let mut seen = std::collections::BTreeSet::new();
    for e in entries {
        check_dim(u.dim(), e.policy.rewards.len())?;
        if !seen.insert(e.policy.id) {
            return Err(PalmError::InvalidPortfolio(format!(
                "policy id {} appears twice",
                e.policy.id
            )));
        }
    }
    Ok(entries.iter().map(|e| e.policy.id).collect())
}

/// Greedy set cover of the grid, in pick order.
pub fn prune_greedy(
    entries: &[PortfolioEntry],
    grid: &[WeightVector],
    u: &PolicyUniverse,
    pp: &PruneParams,
) -> Result<Portfolio> {
    let keys = check_entries(entries, u)?;
    let matrix = coverage_matrix(entries, grid, u, pp);
    let picked = greedy_cover(&matrix, &keys)?;
    Ok(assemble(entries, &picked, &matrix, grid, *pp))
}

/// Minimum set cover, limited to [`EXACT_COVER_LIMIT`] entries.
pub fn prune_exact(
    entries: &[PortfolioEntry],
    grid: &[WeightVector],
    u: &PolicyUniverse,
    pp: &PruneParams,
) -> Result<Portfolio> {
    let keys = check_entries(entries, u)?;
    if entries.len() > EXACT_COVER_LIMIT {
        return Err(PalmError::InstanceTooLarge {
            limit: EXACT_COVER_LIMIT,
            got: entries.len(),
        });
    }
    let matrix = coverage_matrix(entries, grid, u, pp);
    let picked = exact_cover(&matrix, &keys)?;
    Ok(assemble(entries, &picked, &matrix, grid, *pp))
}

/// Builds the weight grid, solves every grid weight exactly and prunes greedily.
pub fn palm(u: &PolicyUniverse, gp: &GridParams, pp: &PruneParams) -> Result<Portfolio> {
    check_dim(u.dim(), gp.dim)?;
    let grid = construct_weight_grid(gp);
    let initial = build_initial_portfolio(u, &grid)?;
    let mut portfolio = prune_greedy(&initial, &grid, u, pp)?;
    portfolio.grid_params = Some(*gp);
    Ok(portfolio)
}
