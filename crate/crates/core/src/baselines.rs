//! Weight-selection baselines: evenly spaced weights and symmetric-Dirichlet
//! samples, turned into portfolios without pruning.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{PalmError, Result};
use crate::objective::PolicyUniverse;
use crate::pipeline::{build_initial_portfolio, Portfolio, PruneParams};
use crate::simplex::WeightVector;

/// `n` evenly spaced weights.
///
/// For `d = 2` these are `w₁ ∈ {0, 1/(n−1), …, 1}`. Otherwise the smallest
/// barycentric grid `{k/m : Σk = m}` with at least `n` points is built and
/// `n` of its points are drawn without replacement, kept in grid order.
pub fn uniform_weights(dim: usize, n: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if n < 2 {
        return Err(PalmError::InvalidParameter(format!(
            "need at least 2 uniform weights, got {n}"
        )));
    }
    if dim < 2 {
        return Err(PalmError::InvalidParameter(format!(
            "dimension must be at least 2, got {dim}"
        )));
    }
    if dim == 2 {
        return (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                WeightVector::new(vec![t, 1.0 - t])
            })
            .collect();
    }
    let mut m = 1;
    while barycentric_count(m, dim) < n as f64 {
        m += 1;
    }
    let grid = barycentric_grid(m, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, grid.len(), n).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| grid[i].clone()).collect())
}

/// `C(m + d − 1, d − 1)`.
fn barycentric_count(m: usize, dim: usize) -> f64 {
    (1..dim).fold(1.0, |acc, k| acc * (m + k) as f64 / k as f64)
}

/// All points `(k₁/m, …, k_d/m)` with `Σk = m`, in lexicographic order of `k`.
pub fn barycentric_grid(m: usize, dim: usize) -> Vec<WeightVector> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    fill(&mut out, &mut counts, 0, m, m);
    out
}

fn fill(out: &mut Vec<WeightVector>, counts: &mut [usize], pos: usize, left: usize, m: usize) {
    if pos == counts.len() - 1 {
        counts[pos] = left;
        let coords = counts.iter().map(|k| *k as f64 / m as f64).collect();
        out.push(WeightVector::normalized(coords).expect("barycentric point"));
        return;
    }
    for k in 0..=left {
        counts[pos] = k;
        fill(out, counts, pos + 1, left - k, m);
    }
}

/// `n` i.i.d. symmetric-Dirichlet samples, drawn as normalised unit-scale
/// gamma variates.
pub fn dirichlet_weights(
    dim: usize,
    n: usize,
    concentration: f64,
    seed: u64,
) -> Result<Vec<WeightVector>> {
    if n < 1 {
        return Err(PalmError::InvalidParameter(
            "need at least one Dirichlet sample".into(),
        ));
    }
    if dim < 2 {
        return Err(PalmError::InvalidParameter(format!(
            "dimension must be at least 2, got {dim}"
        )));
    }
    let invalid = || {
        PalmError::InvalidParameter(format!(
            "concentration must be positive, got {concentration}"
        ))
    };
    if concentration.is_nan() || concentration <= 0.0 {
        return Err(invalid());
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|_| invalid())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(&mut rng)).collect();
        // all-zero draws only happen through underflow at tiny concentrations
        if let Ok(w) = WeightVector::normalized(draws) {
            out.push(w);
        }
    }
    Ok(out)
}

/// One oracle call per weight, duplicates merged, no pruning.
pub fn build_baseline_portfolio(u: &PolicyUniverse, weights: &[WeightVector]) -> Result<Portfolio> {
    let mut entries = build_initial_portfolio(u, weights)?;
    let all: Vec<usize> = (0..weights.len()).collect();
    for e in &mut entries {
        e.covered_weights = all.clone();
    }
    Ok(Portfolio {
        entries,
        grid: weights.to_vec(),
        grid_params: None,
        prune_params: PruneParams::unconstrained(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::PolicyProfile;

    #[test]
    fn uniform_two_dimensional() {
        let w = uniform_weights(2, 3, 0).unwrap();
        let coords: Vec<&[f64]> = w.iter().map(|w| w.coords()).collect();
        assert_eq!(coords, vec![&[0.0, 1.0][..], &[0.5, 0.5], &[1.0, 0.0]]);
        let w = uniform_weights(2, 2, 0).unwrap();
        assert_eq!(w[0].coords(), &[0.0, 1.0]);
        assert_eq!(w[1].coords(), &[1.0, 0.0]);
        assert!(uniform_weights(2, 1, 0).is_err());
    }

    #[test]
    fn uniform_three_dimensional_full_grid() {
        let w = uniform_weights(3, 6, 99).unwrap();
        let got: Vec<Vec<f64>> = w.into_iter().map(Vec::from).collect();
        let expected = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.0],
            vec![1.0, 0.0, 0.0],
        ];
        assert_eq!(got, expected);
    }

    #[test]
    fn uniform_higher_dimensions_subsample_grid() {
        // C(m+3, 3) ≥ 30 first holds at m = 4 (35 points)
        let w = uniform_weights(4, 30, 5).unwrap();
        assert_eq!(w.len(), 30);
        for v in &w {
            assert!(v
                .coords()
                .iter()
                .all(|c| (c * 4.0 - (c * 4.0).round()).abs() < 1e-9));
        }
        assert_eq!(w, uniform_weights(4, 30, 5).unwrap());
        assert_eq!(barycentric_grid(4, 4).len(), 35);
    }

    #[test]
    fn dirichlet_determinism_and_validity() {
        let a = dirichlet_weights(3, 50, 1.0, 8).unwrap();
        assert_eq!(a, dirichlet_weights(3, 50, 1.0, 8).unwrap());
        assert_ne!(a, dirichlet_weights(3, 50, 1.0, 9).unwrap());
        assert!(dirichlet_weights(3, 10, 0.0, 0).is_err());
        assert!(dirichlet_weights(3, 0, 1.0, 0).is_err());
        let sparse = dirichlet_weights(4, 200, 0.05, 1).unwrap();
        assert_eq!(sparse.len(), 200);
    }

    #[test]
    fn dirichlet_two_dimensional_mean() {
        let w = dirichlet_weights(2, 100_000, 1.0, 2024).unwrap();
        let mean = w.iter().map(|v| v.coords()[0]).sum::<f64>() / w.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn baseline_portfolio_merges_but_does_not_prune() {
        let u = PolicyUniverse::new(
            2,
            vec![
                PolicyProfile::new(0, vec![1.0, 0.0], 0.0),
                PolicyProfile::new(1, vec![0.0, 1.0], 0.0),
            ],
        )
        .unwrap();
        let p = build_baseline_portfolio(&u, &uniform_weights(2, 3, 0).unwrap()).unwrap();
        assert_eq!(p.policy_ids(), vec![1, 0]);
        assert_eq!(p.prune_params, PruneParams::unconstrained());

        let one = build_baseline_portfolio(&u, &[WeightVector::vertex(2, 1)]).unwrap();
        assert_eq!(one.len(), 1);
        let same = vec![
            WeightVector::vertex(2, 0),
            WeightVector::new(vec![0.9, 0.1]).unwrap(),
        ];
        assert_eq!(build_baseline_portfolio(&u, &same).unwrap().len(), 1);
    }
}
