//! Portfolio quality metrics and audits of the approximation guarantees.
//!
//! Gaps are measured over a finite probe set `V`:
//!
//! ```text
//! ε(P) = max_{w∈V} 1 − best_P(w) / opt(w)
//! δ(P) = max_{w∈V} opt(w) − best_P(w)
//! ```
//!
//! Probes whose optimum is below [`RATIO_FLOOR`] only enter `δ`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{build_baseline_portfolio, dirichlet_weights, uniform_weights};
use crate::error::{check_dim, PalmError, Result};
use crate::objective::{f_max, r_max, PolicyUniverse};
use crate::pipeline::{build_initial_portfolio, prune_greedy, Portfolio, PruneParams};
use crate::simplex::{
    close_unchecked, construct_weight_grid, coverage_at, GridParams, WeightVector,
};

/// Optima below this are excluded from the multiplicative gap.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Slack allowed in the guarantee audits.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub eps_gap: f64,
    pub delta_gap: f64,
    pub witness_eps: WeightVector,
    pub witness_delta: WeightVector,
    pub probe_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    /// Probes won by each portfolio member, including members that won none.
    pub counts: BTreeMap<usize, usize>,
    pub perplexity: f64,
}

fn check_probes(u: &PolicyUniverse, probes: &[WeightVector]) -> Result<()> {
    if probes.is_empty() {
        return Err(PalmError::EmptyProbes);
    }
    probes.iter().try_for_each(|v| check_dim(u.dim(), v.dim()))
}

/// `(opt, portfolio best)` at every probe.
fn values(p: &Portfolio, u: &PolicyUniverse, probes: &[WeightVector]) -> Vec<(f64, f64)> {
    probes
        .par_iter()
        .map(|v| (u.argmax(v.coords()).1, p.best_for(v.coords()).1))
        .collect()
}

pub fn gap_report(p: &Portfolio, u: &PolicyUniverse, probes: &[WeightVector]) -> Result<GapReport> {
    check_probes(u, probes)?;
    let vals = values(p, u, probes);
    let (mut eps, mut eps_at) = (0.0, 0);
    let (mut delta, mut delta_at) = (0.0, 0);
    for (i, &(opt, best)) in vals.iter().enumerate() {
        if opt >= RATIO_FLOOR {
            // a member with a negative value is a 100% loss, not more
            let e = (1.0 - best / opt).clamp(0.0, 1.0);
            if e > eps {
                eps = e;
                eps_at = i;
            }
        }
        let d = opt - best;
        if d > delta {
            delta = d;
            delta_at = i;
        }
    }
    Ok(GapReport {
        eps_gap: eps,
        delta_gap: delta,
        witness_eps: probes[eps_at].clone(),
        witness_delta: probes[delta_at].clone(),
        probe_count: probes.len(),
    })
}

pub fn usage_report(
    p: &Portfolio,
    u: &PolicyUniverse,
    probes: &[WeightVector],
) -> Result<UsageReport> {
    check_probes(u, probes)?;
    let winners: Vec<usize> = probes
        .par_iter()
        .map(|v| p.best_for(v.coords()).0)
        .collect();
    let mut counts: BTreeMap<usize, usize> = p.policy_ids().into_iter().map(|id| (id, 0)).collect();
    for id in winners {
        *counts.entry(id).or_default() += 1;
    }
    let perplexity = perplexity(counts.values().copied());
    Ok(UsageReport { counts, perplexity })
}

/// Exponentiated entropy of the empirical distribution given by `counts`.
pub fn perplexity(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let entropy: f64 = counts
        .iter()
        .filter(|c| **c > 0)
        .map(|&c| {
            let q = c as f64 / total as f64;
            -q * q.ln()
        })
        .sum();
    entropy.exp()
}

/// Outcome of checking a pruned portfolio against its size and
/// `((1 − 4μ)·opt − 2(dαR_max + μf_max))` guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremAudit {
    pub size: usize,
    pub size_bound: f64,
    /// Smallest `best − guaranteed` over the probes.
    pub min_slack: f64,
    pub witness: WeightVector,
    pub r_max: f64,
    pub f_max: f64,
    pub probe_count: usize,
}

/// Guaranteed additive loss `2(dαR_max + μf_max)`.
fn additive_term(gp: &GridParams, r: f64, f: f64) -> f64 {
    2.0 * (gp.dim as f64 * gp.alpha * r + gp.mu * f)
}

fn audit_failure(clause: &str, detail: String) -> PalmError {
    PalmError::AuditFailure {
        clause: clause.into(),
        detail,
    }
}

/// Audits a portfolio produced with `gp` and prune parameters `(μ, 0)`.
pub fn verify_theorem(
    u: &PolicyUniverse,
    gp: &GridParams,
    p: &Portfolio,
    probes: &[WeightVector],
) -> Result<TheoremAudit> {
    check_probes(u, probes)?;
    check_dim(u.dim(), gp.dim)?;
    let size_bound = gp.size_bound();
    if p.len() as f64 > size_bound {
        return Err(audit_failure(
            "size bound",
            format!("portfolio has {} entries, bound is {size_bound}", p.len()),
        ));
    }
    let (r, f) = (r_max(u), f_max(u));
    let additive = additive_term(gp, r, f);
    let factor = 1.0 - 4.0 * gp.mu;
    let vals = values(p, u, probes);
    let mut worst = (f64::INFINITY, 0);
    for (i, &(opt, best)) in vals.iter().enumerate() {
        let slack = best - (factor * opt - additive);
        if slack < worst.0 {
            worst = (slack, i);
        }
    }
    let witness = probes[worst.1].clone();
    if worst.0 < -AUDIT_TOL {
        let (opt, best) = vals[worst.1];
        return Err(audit_failure(
            "approximation guarantee",
            format!(
                "at probe {:?}: portfolio best {best} < (1 - 4*{})*{opt} - {additive} (slack {})",
                witness.coords(),
                gp.mu,
                worst.0
            ),
        ));
    }
    Ok(TheoremAudit {
        size: p.len(),
        size_bound,
        min_slack: worst.0,
        witness,
        r_max: r,
        f_max: f,
        probe_count: probes.len(),
    })
}

/// Outcome of checking unpruned grid optima against the
/// `((1 − 2μ)·opt − 2(dαR_max + μf_max))` guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub min_slack: f64,
    pub witness: WeightVector,
    pub probe_count: usize,
}

/// For each probe `v`, takes the first grid weight `w` within `(μ, dα)` of
/// `v` and checks the optimum for `w` against the guarantee at `v`.
pub fn verify_lemma(
    u: &PolicyUniverse,
    gp: &GridParams,
    grid: &[WeightVector],
    probes: &[WeightVector],
) -> Result<LemmaAudit> {
    check_probes(u, probes)?;
    check_dim(u.dim(), gp.dim)?;
    let additive = additive_term(gp, r_max(u), f_max(u));
    let factor = 1.0 - 2.0 * gp.mu;
    let delta = gp.dim as f64 * gp.alpha;
    let slacks: Vec<Option<f64>> = probes
        .par_iter()
        .map(|v| {
            let w = grid
                .iter()
                .find(|w| close_unchecked(w.coords(), v.coords(), gp.mu, delta))?;
            let winner = &u.policies()[u.argmax(w.coords()).0];
            let opt = u.argmax(v.coords()).1;
            Some(winner.objective(v.coords()) - (factor * opt - additive))
        })
        .collect();
    let mut worst = (f64::INFINITY, 0);
    for (i, s) in slacks.iter().enumerate() {
        let Some(s) = *s else {
            return Err(audit_failure(
                "grid coverage",
                format!(
                    "probe {:?} has no grid weight within (mu, d*alpha)",
                    probes[i].coords()
                ),
            ));
        };
        if s < worst.0 {
            worst = (s, i);
        }
    }
    let witness = probes[worst.1].clone();
    if worst.0 < -AUDIT_TOL {
        return Err(audit_failure(
            "neighbour guarantee",
            format!("at probe {:?}: slack {}", witness.coords(), worst.0),
        ));
    }
    Ok(LemmaAudit {
        min_slack: worst.0,
        witness,
        probe_count: probes.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFigureRow {
    pub name: String,
    pub size: usize,
    pub fraction: f64,
    pub grid: Vec<WeightVector>,
    pub uncovered: Vec<WeightVector>,
}

/// Covered fraction of `probes` for each named grid at tolerance `(eps, delta)`.
pub fn coverage_figure(
    grids: &[(String, Vec<WeightVector>)],
    eps: f64,
    delta: f64,
    probes: &[WeightVector],
) -> Result<Vec<CoverageFigureRow>> {
    grids
        .iter()
        .map(|(name, grid)| {
            let report = coverage_at(grid, eps, delta, probes)?;
            Ok(CoverageFigureRow {
                name: name.clone(),
                size: grid.len(),
                fraction: report.fraction,
                grid: grid.clone(),
                uncovered: report.uncovered,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Palm,
    Uniform,
    Random,
    UniformPalm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Palm => "palm",
            Method::Uniform => "uniform",
            Method::Random => "random",
            Method::UniformPalm => "uniform_palm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub size: usize,
    pub eps_gap: f64,
    pub delta_gap: f64,
    pub perplexity: f64,
    pub seed: Option<u64>,
}

impl ComparisonRow {
    pub fn evaluate(
        method: Method,
        size: usize,
        p: &Portfolio,
        u: &PolicyUniverse,
        probes: &[WeightVector],
        seed: Option<u64>,
    ) -> Result<Self> {
        let gaps = gap_report(p, u, probes)?;
        let usage = usage_report(p, u, probes)?;
        Ok(Self {
            method,
            size,
            eps_gap: gaps.eps_gap,
            delta_gap: gaps.delta_gap,
            perplexity: usage.perplexity,
            seed,
        })
    }
}

pub const CSV_HEADER: &str = "method,size,eps_gap,delta_gap,perplexity,seed";

/// Rows as CSV with [`CSV_HEADER`]; floats use shortest round-trip formatting.
pub fn rows_to_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?},{}\n",
            r.method, r.size, r.eps_gap, r.delta_gap, r.perplexity, seed
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSettings {
    pub grid: GridParams,
    pub prune_list: Vec<PruneParams>,
    /// The first seed drives the uniform subsample; the random baseline is
    /// averaged over all of them.
    pub baseline_seeds: Vec<u64>,
    pub probe_count: usize,
    pub probe_seed: u64,
}

/// Uniform weights of size `k`; a single weight is the simplex centroid.
pub fn uniform_or_centroid(dim: usize, k: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if k == 1 {
        Ok(vec![WeightVector::centroid(dim)])
    } else {
        uniform_weights(dim, k, seed)
    }
}

/// For every prune setting: the PALM portfolio, then uniform and random
/// portfolios with as many weights as PALM kept policies, all evaluated on
/// one shared Dirichlet probe set. Three rows per prune setting.
pub fn compare_methods(u: &PolicyUniverse, s: &CompareSettings) -> Result<Vec<ComparisonRow>> {
    check_dim(u.dim(), s.grid.dim)?;
    if s.baseline_seeds.is_empty() {
        return Err(PalmError::InvalidParameter(
            "need at least one baseline seed".into(),
        ));
    }
    let d = u.dim();
    let probes = dirichlet_weights(d, s.probe_count, 1.0, s.probe_seed)?;
    let grid = construct_weight_grid(&s.grid);
    let initial = build_initial_portfolio(u, &grid)?;
    let seed = u.seed();
    let mut rows = Vec::with_capacity(3 * s.prune_list.len());
    for pp in &s.prune_list {
        let palm = prune_greedy(&initial, &grid, u, pp)?;
        let k = palm.len();
        rows.push(ComparisonRow::evaluate(
            Method::Palm,
            k,
            &palm,
            u,
            &probes,
            seed,
        )?);

        let uniform =
            build_baseline_portfolio(u, &uniform_or_centroid(d, k, s.baseline_seeds[0])?)?;
        rows.push(ComparisonRow::evaluate(
            Method::Uniform,
            k,
            &uniform,
            u,
            &probes,
            seed,
        )?);

        let mut acc = (0.0, 0.0, 0.0);
        for &bs in &s.baseline_seeds {
            let random = build_baseline_portfolio(u, &dirichlet_weights(d, k, 1.0, bs)?)?;
            let r = ComparisonRow::evaluate(Method::Random, k, &random, u, &probes, seed)?;
            acc = (acc.0 + r.eps_gap, acc.1 + r.delta_gap, acc.2 + r.perplexity);
        }
        let n = s.baseline_seeds.len() as f64;
        rows.push(ComparisonRow {
            method: Method::Random,
            size: k,
            eps_gap: acc.0 / n,
            delta_gap: acc.1 / n,
            perplexity: acc.2 / n,
            seed,
        });
    }
    Ok(rows)
}
