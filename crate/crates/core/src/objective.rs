//! Policies as expected-reward vectors, the scalarized objective
//! `J_w(π) = w·π − f(π)`, and the exact argmax oracle over a finite universe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PalmError, Result};
use crate::simplex::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile {
    pub id: usize,
    /// Expected reward per objective.
    pub rewards: Vec<f64>,
    /// Regularizer value `f(π)`, nonnegative.
    pub reg: f64,
}

impl PolicyProfile {
    pub fn new(id: usize, rewards: Vec<f64>, reg: f64) -> Self {
        Self { id, rewards, reg }
    }

    /// Zero regularizer and nonnegative rewards, so `J_w ≥ 0` for every `w`.
    pub fn is_reference(&self) -> bool {
        self.reg == 0.0 && self.rewards.iter().all(|r| *r >= 0.0)
    }

    #[inline]
    pub(crate) fn objective(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.rewards).map(|(a, b)| a * b).sum::<f64>() - self.reg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniverseShape {
    /// I.i.d. uniform rewards in the unit box.
    UniformBox,
    /// Rewards on or just below the positive part of the unit sphere, so
    /// different weights prefer different policies.
    ConcaveFrontier,
}

/// A finite candidate set of policies. Policy ids equal their positions, and
/// at least one member is a reference policy (see
/// [`PolicyProfile::is_reference`]), which keeps every optimum nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UniverseFile", into = "UniverseFile")]
pub struct PolicyUniverse {
    dim: usize,
    policies: Vec<PolicyProfile>,
    seed: Option<u64>,
    shape: Option<UniverseShape>,
    reg_scale: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniverseFile {
    dim: usize,
    seed: Option<u64>,
    shape: Option<UniverseShape>,
    reg_scale: Option<f64>,
    policies: Vec<PolicyProfile>,
}

impl TryFrom<UniverseFile> for PolicyUniverse {
    type Error = PalmError;

    fn try_from(f: UniverseFile) -> Result<Self> {
        let mut u = Self::new(f.dim, f.policies)?;
        u.seed = f.seed;
        u.shape = f.shape;
        u.reg_scale = f.reg_scale;
        Ok(u)
    }
}

impl From<PolicyUniverse> for UniverseFile {
    fn from(u: PolicyUniverse) -> Self {
        Self {
            dim: u.dim,
            seed: u.seed,
            shape: u.shape,
            reg_scale: u.reg_scale,
            policies: u.policies,
        }
    }
}

impl PolicyUniverse {
    pub fn new(dim: usize, policies: Vec<PolicyProfile>) -> Result<Self> {
        if dim < 1 {
            return Err(PalmError::InvalidUniverse(
                "dimension must be positive".into(),
            ));
        }
        if policies.is_empty() {
            return Err(PalmError::EmptyUniverse);
        }
        for (pos, p) in policies.iter().enumerate() {
            if p.id != pos {
                return Err(PalmError::InvalidUniverse(format!(
                    "policy at position {pos} has id {}; ids must be contiguous from 0",
                    p.id
                )));
            }
            if p.rewards.len() != dim {
                return Err(PalmError::InvalidUniverse(format!(
                    "policy {} has {} rewards, universe dimension is {dim}",
                    p.id,
                    p.rewards.len()
                )));
            }
            if p.rewards.iter().any(|r| !r.is_finite()) {
                return Err(PalmError::InvalidUniverse(format!(
                    "policy {} has a non-finite reward",
                    p.id
                )));
            }
            if !(p.reg >= 0.0 && p.reg.is_finite()) {
                return Err(PalmError::InvalidUniverse(format!(
                    "policy {} has regularizer {}, must be finite and nonnegative",
                    p.id, p.reg
                )));
            }
        }
        if !policies.iter().any(PolicyProfile::is_reference) {
            return Err(PalmError::InvalidUniverse(
                "no reference policy (zero regularizer, nonnegative rewards)".into(),
            ));
        }
        Ok(Self {
            dim,
            policies,
            seed: None,
            shape: None,
            reg_scale: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn policies(&self) -> &[PolicyProfile] {
        &self.policies
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn policy(&self, id: usize) -> Option<&PolicyProfile> {
        self.policies.get(id)
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn shape(&self) -> Option<UniverseShape> {
        self.shape
    }

    pub fn reg_scale(&self) -> Option<f64> {
        self.reg_scale
    }

    /// Multiplies every reward and regularizer by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c.is_nan() || c <= 0.0 {
            return Err(PalmError::InvalidParameter(format!(
                "scale must be positive, got {c}"
            )));
        }
        let policies = self
            .policies
            .iter()
            .map(|p| PolicyProfile::new(p.id, p.rewards.iter().map(|r| r * c).collect(), p.reg * c))
            .collect();
        Self::new(self.dim, policies)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PalmError::InvalidUniverse(e.to_string()))
    }

    /// Index of the maximiser of `J_w` over the universe, lowest id on ties.
    pub(crate) fn argmax(&self, w: &[f64]) -> (usize, f64) {
        let mut best = (0, self.policies[0].objective(w));
        for p in &self.policies[1..] {
            let j = p.objective(w);
            if j > best.1 {
                best = (p.id, j);
            }
        }
        best
    }
}

pub fn scalarized_objective(w: &WeightVector, p: &PolicyProfile) -> Result<f64> {
    check_dim(w.dim(), p.rewards.len())?;
    Ok(p.objective(w.coords()))
}

/// The policy maximising `J_w`; ties go to the lowest id.
pub fn exact_oracle<'u>(u: &'u PolicyUniverse, w: &WeightVector) -> Result<&'u PolicyProfile> {
    if u.is_empty() {
        return Err(PalmError::EmptyUniverse);
    }
    check_dim(u.dim, w.dim())?;
    Ok(&u.policies[u.argmax(w.coords()).0])
}

pub fn opt_value(u: &PolicyUniverse, w: &WeightVector) -> Result<f64> {
    if u.is_empty() {
        return Err(PalmError::EmptyUniverse);
    }
    check_dim(u.dim, w.dim())?;
    Ok(u.argmax(w.coords()).1)
}

/// Largest total absolute reward, `max_π Σ_i |π_i|`.
pub fn r_max(u: &PolicyUniverse) -> f64 {
    max_total_abs_reward(&u.policies)
}

pub fn max_total_abs_reward(policies: &[PolicyProfile]) -> f64 {
    policies
        .iter()
        .map(|p| p.rewards.iter().map(|r| r.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest regularizer magnitude, `max_π |f(π)|`.
pub fn f_max(u: &PolicyUniverse) -> f64 {
    max_abs_reg(&u.policies)
}

pub fn max_abs_reg(policies: &[PolicyProfile]) -> f64 {
    policies.iter().map(|p| p.reg.abs()).fold(0.0, f64::max)
}

/// Synthetic universe of `n` random policies followed by the reference policy
/// `(0.5, …, 0.5)` with zero regularizer.
pub fn generate_universe(
    dim: usize,
    n: usize,
    reg_scale: f64,
    shape: UniverseShape,
    seed: u64,
) -> Result<PolicyUniverse> {
    if dim < 2 {
        return Err(PalmError::InvalidParameter(format!(
            "dimension must be at least 2, got {dim}"
        )));
    }
    if !(reg_scale >= 0.0 && reg_scale.is_finite()) {
        return Err(PalmError::InvalidParameter(format!(
            "reg_scale must be nonnegative, got {reg_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policies = Vec::with_capacity(n + 1);
    for id in 0..n {
        let rewards = match shape {
            UniverseShape::UniformBox => (0..dim).map(|_| rng.gen::<f64>()).collect(),
            UniverseShape::ConcaveFrontier => frontier_point(dim, &mut rng),
        };
        let reg = if reg_scale > 0.0 {
            rng.gen_range(0.0..=reg_scale)
        } else {
            0.0
        };
        policies.push(PolicyProfile::new(id, rewards, reg));
    }
    policies.push(PolicyProfile::new(n, vec![0.5; dim], 0.0));
    let mut u = PolicyUniverse::new(dim, policies)?;
    u.seed = Some(seed);
    u.shape = Some(shape);
    u.reg_scale = Some(reg_scale);
    Ok(u)
}

/// A point of the unit sphere in the positive orthant, pulled inwards by at
/// most 20%, with most mass near the sphere.
fn frontier_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
            .collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            let u: f64 = rng.gen();
            let radius = 1.0 - 0.2 * u * u;
            return dir.iter().map(|x| (x / norm * radius).min(1.0)).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(c: &[f64]) -> WeightVector {
        WeightVector::new(c.to_vec()).unwrap()
    }

    pub(crate) fn universe(rows: &[(&[f64], f64)]) -> PolicyUniverse {
        let dim = rows[0].0.len();
        let policies = rows
            .iter()
            .enumerate()
            .map(|(i, (r, f))| PolicyProfile::new(i, r.to_vec(), *f))
            .collect();
        PolicyUniverse::new(dim, policies).unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = PolicyProfile::new(0, vec![1.0, 0.0], 0.0);
        assert_eq!(scalarized_objective(&wv(&[0.5, 0.5]), &p).unwrap(), 0.5);
        let q = PolicyProfile::new(0, vec![0.3, 0.9], 0.1);
        assert!((scalarized_objective(&wv(&[1.0, 0.0]), &q).unwrap() - 0.2).abs() < 1e-15);
        let r = PolicyProfile::new(0, vec![123.0, 0.25], 0.0);
        assert_eq!(scalarized_objective(&wv(&[0.0, 1.0]), &r).unwrap(), 0.25);
        assert!(scalarized_objective(&wv(&[1.0, 0.0, 0.0]), &r).is_err());
    }

    #[test]
    fn oracle_examples() {
        let u = universe(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        assert_eq!(exact_oracle(&u, &wv(&[1.0, 0.0])).unwrap().id, 0);
        assert_eq!(exact_oracle(&u, &wv(&[0.5, 0.5])).unwrap().id, 0);
        assert!((opt_value(&u, &wv(&[0.3, 0.7])).unwrap() - 0.7).abs() < 1e-15);

        let u = universe(&[(&[1.0, 0.0], 0.6), (&[0.5, 0.5], 0.0)]);
        assert_eq!(exact_oracle(&u, &wv(&[1.0, 0.0])).unwrap().id, 1);
    }

    #[test]
    fn reference_only_universe_has_zero_optimum() {
        let u = generate_universe(3, 0, 0.0, UniverseShape::UniformBox, 5).unwrap();
        let u0 = universe(&[(&[0.0, 0.0, 0.0], 0.0)]);
        assert_eq!(u.len(), 1);
        assert_eq!(u.policies()[0].rewards, vec![0.5; 3]);
        for w in [wv(&[1.0, 0.0, 0.0]), wv(&[0.2, 0.3, 0.5])] {
            assert_eq!(opt_value(&u0, &w).unwrap(), 0.0);
        }
    }

    #[test]
    fn reward_and_regularizer_bounds() {
        let u = universe(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        assert_eq!(r_max(&u), 1.0);
        assert_eq!(f_max(&u), 0.0);
        assert_eq!(
            max_total_abs_reward(&[PolicyProfile::new(0, vec![0.5, -0.5], 0.0)]),
            1.0
        );
        let u = universe(&[(&[0.2, 0.3], 0.0), (&[0.9, 0.4], 0.05), (&[0.1, 0.1], 0.2)]);
        assert!((r_max(&u) - 1.3).abs() < 1e-15);
        assert_eq!(f_max(&u), 0.2);
        assert_eq!(
            max_abs_reg(&[PolicyProfile::new(0, vec![0.0, 0.0], 0.07)]),
            0.07
        );
    }

    #[test]
    fn universe_validation() {
        let bad_ids = vec![PolicyProfile::new(1, vec![0.0, 0.0], 0.0)];
        assert!(PolicyUniverse::new(2, bad_ids).is_err());
        let no_ref = vec![PolicyProfile::new(0, vec![1.0, 1.0], 0.1)];
        assert!(PolicyUniverse::new(2, no_ref).is_err());
        let bad_reg = vec![
            PolicyProfile::new(0, vec![0.0, 0.0], 0.0),
            PolicyProfile::new(1, vec![0.0, 0.0], -0.1),
        ];
        assert!(PolicyUniverse::new(2, bad_reg).is_err());
        assert!(matches!(
            PolicyUniverse::new(2, vec![]),
            Err(PalmError::EmptyUniverse)
        ));
        let bad_dim = vec![PolicyProfile::new(0, vec![0.0], 0.0)];
        assert!(PolicyUniverse::new(2, bad_dim).is_err());
    }

    #[test]
    fn generated_universe_has_reference_floor() {
        let u = generate_universe(2, 100, 0.1, UniverseShape::ConcaveFrontier, 7).unwrap();
        assert_eq!(u.len(), 101);
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let w = wv(&[t, 1.0 - t]);
            assert!(opt_value(&u, &w).unwrap() >= 0.5 - 1e-15);
        }
        for p in u.policies() {
            assert!(p.rewards.iter().all(|r| (0.0..=1.0).contains(r)));
            assert!((0.0..=0.1).contains(&p.reg));
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        for shape in [UniverseShape::UniformBox, UniverseShape::ConcaveFrontier] {
            let a = generate_universe(3, 40, 0.2, shape, 11).unwrap();
            let b = generate_universe(3, 40, 0.2, shape, 11).unwrap();
            let c = generate_universe(3, 40, 0.2, shape, 12).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
        assert!(generate_universe(1, 4, 0.0, UniverseShape::UniformBox, 0).is_err());
        assert!(generate_universe(2, 4, -1.0, UniverseShape::UniformBox, 0).is_err());
    }

    #[test]
    fn universe_json_round_trip_and_validation() {
        let u = generate_universe(2, 5, 0.1, UniverseShape::UniformBox, 3).unwrap();
        let text = u.to_json().unwrap();
        assert_eq!(PolicyUniverse::from_json(&text).unwrap(), u);

        let err = PolicyUniverse::from_json(
            r#"{"dim":2,"seed":null,"shape":null,"reg_scale":null,"policies":[{"id":0,"rewards":[1.0,1.0],"reg":0.5}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("reference policy"), "{err}");
        let err = PolicyUniverse::from_json(r#"{"dim":2,"policies":[],"colour":1}"#).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }
}
