//! Flat JSON configs, one per subcommand. Unknown keys are rejected and every
//! random stream needs an explicit seed.

use std::path::{Path, PathBuf};

use palm_core::{Method, UniverseShape};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::io::read_to_string;

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_probe_count() -> usize {
    1000
}

fn default_concentration() -> f64 {
    1.0
}

fn default_shape() -> UniverseShape {
    UniverseShape::UniformBox
}

pub fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    let config: T = serde_json::from_str(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    if config.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Invalid(format!(
            "{}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            path.display(),
            config.schema_version()
        )));
    }
    Ok(config)
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(GenUniverseConfig, RunConfig, CompareConfig, VerifyConfig);

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenUniverseConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub reg_scale: f64,
    #[serde(default = "default_shape")]
    pub shape: UniverseShape,
    pub seed: u64,
    /// File name inside the output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub universe: PathBuf,
    pub method: Method,
    pub seed: u64,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub mu_prime: Option<f64>,
    #[serde(default)]
    pub alpha_prime: Option<f64>,
    /// Weight count for the uniform, random and uniform_palm methods. For
    /// uniform_palm it defaults to the size of the (mu, alpha) grid.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    pub probe_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub universe: PathBuf,
    pub mu: f64,
    pub alpha: f64,
    pub mu_primes: Vec<f64>,
    #[serde(default)]
    pub alpha_prime: f64,
    pub baseline_seeds: Vec<u64>,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    pub probe_seed: u64,
    /// Coverage dump: PALM grid at (coverage_mu, coverage_alpha) against
    /// uniform and random grids of coverage_size points.
    #[serde(default)]
    pub coverage_size: Option<usize>,
    #[serde(default)]
    pub coverage_mu: Option<f64>,
    #[serde(default)]
    pub coverage_alpha: Option<f64>,
    #[serde(default)]
    pub coverage_eps: Option<f64>,
    #[serde(default)]
    pub coverage_delta: Option<f64>,
    #[serde(default)]
    pub coverage_probe_count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioCheck {
    pub universe: PathBuf,
    pub portfolio: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub mus: Vec<f64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Universe seeds; each (dim, mu, alpha, seed) is one sweep point.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_universe_size")]
    pub n: usize,
    #[serde(default = "default_reg_scale")]
    pub reg_scale: f64,
    #[serde(default = "default_shape")]
    pub shape: UniverseShape,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    pub probe_seed: u64,
    #[serde(default)]
    pub portfolios: Vec<PortfolioCheck>,
}

fn default_universe_size() -> usize {
    50
}

fn default_reg_scale() -> f64 {
    0.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err =
            serde_json::from_str::<GenUniverseConfig>(r#"{"d":2,"n":3,"seed":1,"colour":"red"}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn seeds_are_mandatory() {
        let err = serde_json::from_str::<GenUniverseConfig>(r#"{"d":2,"n":3}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("seed"), "{err}");
        let err =
            serde_json::from_str::<RunConfig>(r#"{"universe":"u.json","method":"palm","seed":1}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("probe_seed"), "{err}");
    }

    #[test]
    fn minimal_gen_config_uses_defaults() {
        let c: GenUniverseConfig = serde_json::from_str(r#"{"d":2,"n":10,"seed":1}"#).unwrap();
        assert_eq!(c.schema_version, SCHEMA_VERSION);
        assert_eq!(c.shape, UniverseShape::UniformBox);
        assert_eq!(c.reg_scale, 0.0);
    }

    #[test]
    fn bad_method_is_rejected() {
        let err = serde_json::from_str::<RunConfig>(
            r#"{"universe":"u.json","method":"annealing","seed":1,"probe_seed":2}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("annealing"), "{err}");
    }
}
