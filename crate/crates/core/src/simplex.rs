//! Weight vectors, the box set of nonnegative vectors with maximum entry one,
//! and the combined multiplicative/additive grid over the simplex.
//!
//! The grid is built in box space: for each coordinate `i`, coordinate `i` is
//! pinned to 1 and every other coordinate ranges over the one-dimensional grid
//!
//! ```text
//! {0} ∪ {α, α(1+μ), α(1+μ)², …, 1}
//! ```
//!
//! The box vectors are then normalised onto the simplex. Every `v` in the
//! simplex has a grid point `w` with `|w_i − v_i| ≤ μ·v_i + d·α` in every
//! coordinate.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PalmError, Result};
use crate::TOL;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(PalmError::InvalidWeight("no coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(PalmError::InvalidWeight(format!(
                "coordinate {c} is negative or not finite"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(PalmError::InvalidWeight(format!(
                "coordinates sum to {sum}, not 1"
            )));
        }
        Ok(Self(coords))
    }

    /// Normalises a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        let sum: f64 = coords.iter().sum();
        if sum.is_nan() || sum <= 0.0 || coords.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(PalmError::InvalidWeight(
                "cannot normalise onto the simplex".into(),
            ));
        }
        Self::new(coords.into_iter().map(|c| c / sum).collect())
    }

    /// The simplex vertex `e_i`.
    pub fn vertex(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self(coords)
    }

    pub fn centroid(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::normalized(coords)
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = PalmError;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// A nonnegative vector whose largest coordinate is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxVector(Vec<f64>);

impl BoxVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(PalmError::InvalidWeight(
                "box coordinates must lie in [0, 1]".into(),
            ));
        }
        if !coords.contains(&1.0) {
            return Err(PalmError::InvalidWeight(
                "box vector needs a coordinate equal to 1".into(),
            ));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Grid resolution: multiplicative step `mu`, additive floor `alpha`, dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridParams")]
pub struct GridParams {
    pub mu: f64,
    pub alpha: f64,
    pub dim: usize,
}

#[derive(Deserialize)]
struct RawGridParams {
    mu: f64,
    alpha: f64,
    dim: usize,
}

impl TryFrom<RawGridParams> for GridParams {
    type Error = PalmError;

    fn try_from(raw: RawGridParams) -> Result<Self> {
        Self::new(raw.mu, raw.alpha, raw.dim)
    }
}

impl GridParams {
    pub fn new(mu: f64, alpha: f64, dim: usize) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(PalmError::InvalidParameter(format!(
                "mu must lie in (0, 1], got {mu}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(PalmError::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if dim < 2 {
            return Err(PalmError::InvalidParameter(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self { mu, alpha, dim })
    }

    /// Upper bound on the number of grid weights, `d·(3 + (2/μ)·ln(1/α))^(d−1)`.
    ///
    /// The constant is 3 rather than 2 because the number of geometric steps
    /// is rounded up.
    pub fn size_bound(&self) -> f64 {
        let base = 3.0 + (2.0 / self.mu) * (1.0 / self.alpha).ln();
        self.dim as f64 * base.powi(self.dim as i32 - 1)
    }
}

/// `{0} ∪ {min(α(1+μ)^k, 1) : k = 0..N}` with `N = ⌈ln(1/α)/ln(1+μ)⌉`, ascending.
///
/// Powers within [`TOL`] of 1 are merged into 1.
pub fn one_d_grid(params: &GridParams) -> Vec<f64> {
    let GridParams { mu, alpha, .. } = *params;
    let mut values = vec![0.0];
    let mut k = 0;
    loop {
        let p = alpha * (1.0 + mu).powi(k);
        if p >= 1.0 - TOL {
            break;
        }
        values.push(p);
        k += 1;
    }
    values.push(1.0);
    values
}

/// All box vectors with some coordinate pinned to 1 and the rest drawn from
/// [`one_d_grid`]. Vectors with several unit coordinates appear once, under
/// the lowest pinned coordinate.
pub fn construct_box_grid(params: &GridParams) -> Vec<BoxVector> {
    let values = one_d_grid(params);
    let d = params.dim;
    let g = values.len();
    let mut out = Vec::new();
    let mut digits = vec![0usize; d - 1];
    for pinned in 0..d {
        digits.iter_mut().for_each(|x| *x = 0);
        'odometer: loop {
            let mut coords = Vec::with_capacity(d);
            let mut other = digits.iter();
            for j in 0..d {
                if j == pinned {
                    coords.push(1.0);
                } else {
                    coords.push(values[*other.next().unwrap()]);
                }
            }
            // an earlier pinned coordinate already produced this vector
            if !coords[..pinned].contains(&1.0) {
                out.push(BoxVector(coords));
            }
            for digit in digits.iter_mut().rev() {
                *digit += 1;
                if *digit < g {
                    continue 'odometer;
                }
                *digit = 0;
            }
            break;
        }
    }
    out
}

/// `w / ‖w‖₁`.
pub fn project_to_simplex(w: &BoxVector) -> WeightVector {
    let norm: f64 = w.0.iter().sum();
    WeightVector(w.0.iter().map(|c| c / norm).collect())
}

/// `v / ‖v‖_∞`.
pub fn box_lift(v: &WeightVector) -> BoxVector {
    let max = v.0.iter().cloned().fold(f64::MIN, f64::max);
    let coords =
        v.0.iter()
            .map(|c| if *c == max { 1.0 } else { c / max })
            .collect();
    BoxVector(coords)
}

/// The projected grid, deduplicated under coordinatewise equality within [`TOL`].
pub fn construct_weight_grid(params: &GridParams) -> Vec<WeightVector> {
    let projected: Vec<WeightVector> = construct_box_grid(params)
        .iter()
        .map(project_to_simplex)
        .collect();
    dedup_weights(projected)
}

/// Removes near-duplicates while keeping first occurrences in their original order.
pub(crate) fn dedup_weights(weights: Vec<WeightVector>) -> Vec<WeightVector> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&weights[a], &weights[b]).then(a.cmp(&b)));
    let mut keep = vec![true; weights.len()];
    let mut last_kept: Option<usize> = None;
    for &i in &order {
        match last_kept {
            Some(j) if approx_equal(&weights[i], &weights[j]) => keep[i] = false,
            _ => last_kept = Some(i),
        }
    }
    weights
        .into_iter()
        .zip(keep)
        .filter_map(|(w, k)| k.then_some(w))
        .collect()
}

fn lex_cmp(a: &WeightVector, b: &WeightVector) -> Ordering {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn approx_equal(a: &WeightVector, b: &WeightVector) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= TOL)
}

/// `|w_i − v_i| ≤ eps·v_i + delta` in every coordinate, with [`TOL`] slack.
pub fn coordinatewise_close(
    w: &WeightVector,
    v: &WeightVector,
    eps: f64,
    delta: f64,
) -> Result<bool> {
    check_dim(v.dim(), w.dim())?;
    Ok(close_unchecked(w.coords(), v.coords(), eps, delta))
}

#[inline]
pub(crate) fn close_unchecked(w: &[f64], v: &[f64], eps: f64, delta: f64) -> bool {
    w.iter()
        .zip(v)
        .all(|(wi, vi)| (wi - vi).abs() <= eps * vi + delta + TOL)
}

/// Fraction of probes that have a coordinatewise-close grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
    pub uncovered: Vec<WeightVector>,
}

/// Checks every probe against the grid at tolerance `(μ, d·α)`.
pub fn verify_grid_covers(
    grid: &[WeightVector],
    params: &GridParams,
    probes: &[WeightVector],
) -> Result<CoverageReport> {
    coverage_at(grid, params.mu, params.dim as f64 * params.alpha, probes)
}

/// Brute-force coverage of `probes` by `grid` at tolerance `(eps, delta)`.
pub fn coverage_at(
    grid: &[WeightVector],
    eps: f64,
    delta: f64,
    probes: &[WeightVector],
) -> Result<CoverageReport> {
    if probes.is_empty() {
        return Err(PalmError::EmptyProbes);
    }
    let dim = probes[0].dim();
    for w in grid.iter().chain(probes) {
        check_dim(dim, w.dim())?;
    }
    let hit: Vec<bool> = probes
        .par_iter()
        .map(|v| grid.iter().any(|w| close_unchecked(&w.0, &v.0, eps, delta)))
        .collect();
    let uncovered: Vec<WeightVector> = probes
        .iter()
        .zip(&hit)
        .filter(|(_, h)| !**h)
        .map(|(v, _)| v.clone())
        .collect();
    let covered = probes.len() - uncovered.len();
    Ok(CoverageReport {
        covered,
        total: probes.len(),
        fraction: covered as f64 / probes.len() as f64,
        uncovered,
    })
}

/// Serialises weights as a JSON array of coordinate arrays.
pub fn weights_to_json(weights: &[WeightVector]) -> Result<String> {
    Ok(serde_json::to_string(weights)?)
}

pub fn weights_from_json(text: &str) -> Result<Vec<WeightVector>> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(c: &[f64]) -> WeightVector {
        WeightVector::new(c.to_vec()).unwrap()
    }

    fn gp(mu: f64, alpha: f64, dim: usize) -> GridParams {
        GridParams::new(mu, alpha, dim).unwrap()
    }

    #[test]
    fn one_d_grid_powers_of_two() {
        assert_eq!(one_d_grid(&gp(1.0, 0.25, 2)), vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(one_d_grid(&gp(1.0, 1.0, 2)), vec![0.0, 1.0]);
    }

    #[test]
    fn one_d_grid_clamps_last_power() {
        let grid = one_d_grid(&gp(8.0 / 30.0, 0.2, 2));
        let expected = [
            0.0, 0.2, 0.25333, 0.32089, 0.40646, 0.51485, 0.65214, 0.82605, 1.0,
        ];
        assert_eq!(grid.len(), 9);
        for (g, e) in grid.iter().zip(expected) {
            assert!((g - e).abs() < 1e-5, "{g} vs {e}");
        }
    }

    #[test]
    fn grid_params_reject_out_of_range() {
        assert!(GridParams::new(0.0, 0.5, 2).is_err());
        assert!(GridParams::new(-0.1, 0.5, 2).is_err());
        assert!(GridParams::new(0.5, 1.5, 2).is_err());
        assert!(GridParams::new(0.5, 0.0, 2).is_err());
        assert!(GridParams::new(0.5, 0.5, 1).is_err());
        assert!(serde_json::from_str::<GridParams>(r#"{"mu":2.0,"alpha":0.5,"dim":2}"#).is_err());
    }

    #[test]
    fn box_grid_small_cases() {
        let got: Vec<Vec<f64>> = construct_box_grid(&gp(1.0, 0.25, 2))
            .into_iter()
            .map(|b| b.0)
            .collect();
        let expected = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.25],
            vec![1.0, 0.5],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.25, 1.0],
            vec![0.5, 1.0],
        ];
        assert_eq!(got, expected);

        assert_eq!(construct_box_grid(&gp(1.0, 1.0, 2)).len(), 3);

        let cube = construct_box_grid(&gp(1.0, 1.0, 3));
        assert_eq!(cube.len(), 7);
        assert!(cube
            .iter()
            .all(|b| b.0.iter().all(|c| *c == 0.0 || *c == 1.0)));
    }

    #[test]
    fn projection_and_lift() {
        let b = |c: &[f64]| BoxVector::new(c.to_vec()).unwrap();
        assert_eq!(project_to_simplex(&b(&[1.0, 0.0])).coords(), &[1.0, 0.0]);
        assert_eq!(project_to_simplex(&b(&[1.0, 1.0])).coords(), &[0.5, 0.5]);
        let p = project_to_simplex(&b(&[1.0, 0.25]));
        assert!((p.coords()[0] - 0.8).abs() < 1e-15 && (p.coords()[1] - 0.2).abs() < 1e-15);

        assert_eq!(box_lift(&wv(&[0.5, 0.5])).coords(), &[1.0, 1.0]);
        let l = box_lift(&wv(&[0.8, 0.2]));
        assert_eq!(l.coords()[0], 1.0);
        assert!((l.coords()[1] - 0.25).abs() < 1e-15);
        assert_eq!(box_lift(&wv(&[1.0, 0.0, 0.0])).coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn box_vector_invariants() {
        assert!(BoxVector::new(vec![0.5, 0.5]).is_err());
        assert!(BoxVector::new(vec![1.0, 1.5]).is_err());
        assert!(BoxVector::new(vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn weight_grid_small_cases() {
        let grid = construct_weight_grid(&gp(1.0, 0.25, 2));
        let expected = [
            [1.0, 0.0],
            [0.8, 0.2],
            [2.0 / 3.0, 1.0 / 3.0],
            [0.5, 0.5],
            [0.0, 1.0],
            [0.2, 0.8],
            [1.0 / 3.0, 2.0 / 3.0],
        ];
        assert_eq!(grid.len(), 7);
        for (g, e) in grid.iter().zip(expected) {
            assert!(
                g.coords().iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-12),
                "{g:?}"
            );
        }

        let tiny = construct_weight_grid(&gp(1.0, 1.0, 2));
        assert_eq!(tiny.len(), 3);
        assert_eq!(construct_weight_grid(&gp(8.0 / 30.0, 0.2, 2)).len(), 17);
    }

    #[test]
    fn dedup_merges_near_duplicates() {
        let a = wv(&[0.5, 0.5]);
        let b = WeightVector(vec![0.5 + 1e-14, 0.5 - 1e-14]);
        let c = wv(&[1.0, 0.0]);
        let out = dedup_weights(vec![c.clone(), a.clone(), b, c]);
        assert_eq!(out, vec![wv(&[1.0, 0.0]), a]);
    }

    #[test]
    fn closeness_examples() {
        let w = wv(&[0.9, 0.1]);
        let v = wv(&[0.95, 0.05]);
        assert!(coordinatewise_close(&v, &v, 0.0, 0.0).unwrap());
        assert!(!coordinatewise_close(&w, &v, 0.1, 0.0).unwrap());
        assert!(coordinatewise_close(&w, &v, 0.0, 0.05).unwrap());
        assert!(matches!(
            coordinatewise_close(&w, &wv(&[1.0, 0.0, 0.0]), 0.1, 0.1),
            Err(PalmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coverage_reports_uncovered_probe() {
        let params = gp(0.1, 0.01, 2);
        let report = verify_grid_covers(&[wv(&[0.5, 0.5])], &params, &[wv(&[1.0, 0.0])]).unwrap();
        assert_eq!(report.fraction, 0.0);
        assert_eq!(report.uncovered, vec![wv(&[1.0, 0.0])]);

        let probe = wv(&[0.3, 0.7]);
        let report = verify_grid_covers(
            std::slice::from_ref(&probe),
            &params,
            std::slice::from_ref(&probe),
        )
        .unwrap();
        assert_eq!(report.fraction, 1.0);
        assert!(verify_grid_covers(&[], &params, &[]).is_err());
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(serde_json::from_str::<WeightVector>("[0.2,0.2]").is_err());
    }

    #[test]
    fn json_uses_shortest_round_trip_decimals() {
        let grid = construct_weight_grid(&gp(1.0, 0.25, 2));
        let text = weights_to_json(&grid).unwrap();
        assert!(text.starts_with("[[1.0,0.0],[0.8,0.2],[0.6666666666666666,0.3333333333333333]"));
        assert_eq!(weights_from_json(&text).unwrap(), grid);
    }
}
