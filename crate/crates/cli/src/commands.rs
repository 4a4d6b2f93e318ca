use std::path::{Path, PathBuf};

use palm_core::evaluation::{rows_to_csv, uniform_or_centroid};
use palm_core::*;
use serde::Serialize;

use crate::config::{self, CompareConfig, GenUniverseConfig, RunConfig, VerifyConfig};
use crate::error::{CliError, Result};
use crate::io::{read_to_string, resolve, write_atomic};

/// Values given on the command line; each replaces its config counterpart.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: PathBuf,
    pub probes: Option<usize>,
    pub seed: Option<u64>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(PalmError::from)?;
    s.push('\n');
    Ok(s)
}

fn load_universe(config_path: &Path, target: &Path) -> Result<PolicyUniverse> {
    let path = resolve(config_path, target);
    Ok(PolicyUniverse::from_json(&read_to_string(&path)?)?)
}

fn required<T>(value: Option<T>, key: &str, method: Method) -> Result<T> {
    value.ok_or_else(|| CliError::Invalid(format!("method {method} needs `{key}`")))
}

pub fn gen_universe(config_path: &Path, o: &Overrides) -> Result<PathBuf> {
    let c: GenUniverseConfig = config::load(config_path)?;
    let seed = o.seed.unwrap_or(c.seed);
    let u = generate_universe(c.d, c.n, c.reg_scale, c.shape, seed)?;
    let path = o
        .out
        .join(c.output.unwrap_or_else(|| "universe.json".into()));
    let mut text = u.to_json()?;
    text.push('\n');
    write_atomic(&path, &text)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct RunReport {
    method: Method,
    gaps: GapReport,
    usage: UsageReport,
}

pub fn run(config_path: &Path, o: &Overrides) -> Result<Vec<PathBuf>> {
    let c: RunConfig = config::load(config_path)?;
    let seed = o.seed.unwrap_or(c.seed);
    let probe_count = o.probes.unwrap_or(c.probe_count);
    let u = load_universe(config_path, &c.universe)?;
    let d = u.dim();
    let m = c.method;

    let grid_params = || -> Result<GridParams> {
        Ok(GridParams::new(
            required(c.mu, "mu", m)?,
            required(c.alpha, "alpha", m)?,
            d,
        )?)
    };
    let prune_params = || -> Result<PruneParams> {
        let mu_prime = match c.mu_prime {
            Some(v) => v,
            None => required(c.mu, "mu_prime", m)?,
        };
        Ok(PruneParams::new(mu_prime, c.alpha_prime.unwrap_or(0.0))?)
    };

    let (portfolio, size) = match m {
        Method::Palm => {
            let p = palm(&u, &grid_params()?, &prune_params()?)?;
            let k = p.len();
            (p, k)
        }
        Method::Uniform | Method::Random => {
            let n = required(c.n, "n", m)?;
            let weights = if m == Method::Uniform {
                uniform_or_centroid(d, n, seed)?
            } else {
                dirichlet_weights(d, n, c.concentration, seed)?
            };
            (build_baseline_portfolio(&u, &weights)?, n)
        }
        Method::UniformPalm => {
            // same oracle budget as PALM: one call per grid weight
            let n = match c.n {
                Some(n) => n,
                None => construct_weight_grid(&grid_params()?).len(),
            };
            let weights = uniform_or_centroid(d, n, seed)?;
            let initial = build_initial_portfolio(&u, &weights)?;
            let p = prune_greedy(&initial, &weights, &u, &prune_params()?)?;
            let k = p.len();
            (p, k)
        }
    };

    let probes = dirichlet_weights(d, probe_count, 1.0, c.probe_seed)?;
    let row = ComparisonRow::evaluate(m, size, &portfolio, &u, &probes, u.seed())?;
    let report = RunReport {
        method: m,
        gaps: gap_report(&portfolio, &u, &probes)?,
        usage: usage_report(&portfolio, &u, &probes)?,
    };

    let universe_ref = c.universe.to_string_lossy();
    let mut portfolio_json = portfolio.to_file(&universe_ref).to_json()?;
    portfolio_json.push('\n');
    let outputs = [
        (o.out.join("portfolio.json"), portfolio_json),
        (o.out.join("metrics.csv"), rows_to_csv(&[row])),
        (o.out.join("gaps.json"), to_json(&report)?),
    ];
    for (path, text) in &outputs {
        write_atomic(path, text)?;
    }
    Ok(outputs.into_iter().map(|(p, _)| p).collect())
}

pub fn compare(config_path: &Path, o: &Overrides) -> Result<Vec<PathBuf>> {
    let c: CompareConfig = config::load(config_path)?;
    let probe_seed = o.seed.unwrap_or(c.probe_seed);
    let probe_count = o.probes.unwrap_or(c.probe_count);
    let u = load_universe(config_path, &c.universe)?;
    let d = u.dim();
    if c.mu_primes.is_empty() {
        return Err(CliError::Invalid("`mu_primes` is empty".into()));
    }
    let settings = CompareSettings {
        grid: GridParams::new(c.mu, c.alpha, d)?,
        prune_list: c
            .mu_primes
            .iter()
            .map(|&mp| PruneParams::new(mp, c.alpha_prime))
            .collect::<palm_core::Result<_>>()?,
        baseline_seeds: c.baseline_seeds.clone(),
        probe_count,
        probe_seed,
    };
    let rows = compare_methods(&u, &settings)?;
    let csv_path = o.out.join("compare.csv");
    write_atomic(&csv_path, &rows_to_csv(&rows))?;
    let mut written = vec![csv_path];

    let wants_coverage = c.coverage_mu.is_some()
        || c.coverage_alpha.is_some()
        || c.coverage_eps.is_some()
        || c.coverage_delta.is_some()
        || c.coverage_size.is_some()
        || c.coverage_probe_count.is_some();
    if wants_coverage {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Invalid(format!("coverage dump needs `{key}`")))
        };
        let gp = GridParams::new(
            need(c.coverage_mu, "coverage_mu")?,
            need(c.coverage_alpha, "coverage_alpha")?,
            d,
        )?;
        let palm_grid = construct_weight_grid(&gp);
        let size = c.coverage_size.unwrap_or(palm_grid.len());
        let mut grids = vec![
            ("palm".to_string(), palm_grid),
            (
                "uniform".to_string(),
                uniform_or_centroid(d, size, c.baseline_seeds[0])?,
            ),
        ];
        for &s in &c.baseline_seeds {
            grids.push((
                format!("random_seed{s}"),
                dirichlet_weights(d, size, 1.0, s)?,
            ));
        }
        let probes = dirichlet_weights(
            d,
            c.coverage_probe_count.unwrap_or(probe_count),
            1.0,
            probe_seed,
        )?;
        let fig = coverage_figure(
            &grids,
            need(c.coverage_eps, "coverage_eps")?,
            need(c.coverage_delta, "coverage_delta")?,
            &probes,
        )?;
        let path = o.out.join("coverage.json");
        write_atomic(&path, &to_json(&fig)?)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRecord {
    pub label: String,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
    pub witness: Option<WeightVector>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: usize,
    pub failures: usize,
    pub records: Vec<VerifyRecord>,
}

fn record(
    label: &str,
    check: &'static str,
    outcome: palm_core::Result<(String, WeightVector)>,
) -> Result<VerifyRecord> {
    match outcome {
        Ok((detail, witness)) => Ok(VerifyRecord {
            label: label.into(),
            check,
            passed: true,
            detail,
            witness: Some(witness),
        }),
        Err(e @ PalmError::AuditFailure { .. }) => Ok(VerifyRecord {
            label: label.into(),
            check,
            passed: false,
            detail: e.to_string(),
            witness: None,
        }),
        Err(e) => Err(e.into()),
    }
}

fn theorem_record(
    label: &str,
    u: &PolicyUniverse,
    gp: &GridParams,
    p: &Portfolio,
    probes: &[WeightVector],
) -> Result<VerifyRecord> {
    record(
        label,
        "theorem",
        verify_theorem(u, gp, p, probes).map(|a| {
            (
                format!(
                    "size {} <= {:.3}, min slack {:e}",
                    a.size, a.size_bound, a.min_slack
                ),
                a.witness,
            )
        }),
    )
}

pub fn verify(config_path: &Path, o: &Overrides) -> Result<(PathBuf, VerifyReport)> {
    let c: VerifyConfig = config::load(config_path)?;
    let probe_seed = o.seed.unwrap_or(c.probe_seed);
    let probe_count = o.probes.unwrap_or(c.probe_count);
    let sweep_len = c.dims.len() * c.mus.len() * c.alphas.len() * c.seeds.len();
    if sweep_len == 0 && c.portfolios.is_empty() {
        return Err(CliError::Invalid("nothing to verify".into()));
    }

    let mut records = Vec::new();
    for &dim in &c.dims {
        let probes = dirichlet_weights(dim, probe_count, 1.0, probe_seed)?;
        for &mu in &c.mus {
            for &alpha in &c.alphas {
                let gp = GridParams::new(mu, alpha, dim)?;
                let grid = construct_weight_grid(&gp);
                let cover = verify_grid_covers(&grid, &gp, &probes)?;
                let label = format!("d={dim} mu={mu} alpha={alpha}");
                records.push(VerifyRecord {
                    label: label.clone(),
                    check: "grid coverage",
                    passed: cover.fraction == 1.0,
                    detail: format!("{}/{} probes covered", cover.covered, cover.total),
                    witness: cover.uncovered.first().cloned(),
                });
                for &seed in &c.seeds {
                    let u = generate_universe(dim, c.n, c.reg_scale, c.shape, seed)?;
                    let label = format!("{label} seed={seed}");
                    let p = palm(&u, &gp, &PruneParams::for_grid(&gp))?;
                    records.push(theorem_record(&label, &u, &gp, &p, &probes)?);
                    records.push(record(
                        &label,
                        "lemma",
                        verify_lemma(&u, &gp, &grid, &probes)
                            .map(|a| (format!("min slack {:e}", a.min_slack), a.witness)),
                    )?);
                }
            }
        }
    }

    for check in &c.portfolios {
        let u = load_universe(config_path, &check.universe)?;
        let path = resolve(config_path, &check.portfolio);
        let p = PortfolioFile::from_json(&read_to_string(&path)?)?.resolve(&u)?;
        let gp = p.grid_params.ok_or_else(|| {
            CliError::Invalid(format!(
                "{}: portfolio has no grid_params to audit against",
                path.display()
            ))
        })?;
        let probes = dirichlet_weights(u.dim(), probe_count, 1.0, probe_seed)?;
        records.push(theorem_record(
            &path.display().to_string(),
            &u,
            &gp,
            &p,
            &probes,
        )?);
    }

    let report = VerifyReport {
        checks: records.len(),
        failures: records.iter().filter(|r| !r.passed).count(),
        records,
    };
    let path = o.out.join("verify.json");
    write_atomic(&path, &to_json(&report)?)?;
    Ok((path, report))
}
