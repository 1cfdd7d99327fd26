//! Artifact plumbing: parameter hashing, manifests, CSV/JSON writers, and a
//! content-addressed cache for the Monte-Carlo tables.
//!
//! Every artifact carries the hash of the parameters that produced it and
//! the seed, so a run can be reproduced byte-for-byte from its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cauchy::{build_base_tables, BaseTables, CauchyError, CauchyTable, McConfig};
use crate::config::{ConfigError, ScenarioConfig, TableConfig};
use crate::game::{
    aggregate_losses, run_realization, run_summaries, GameError, LossDistribution,
    RealizationSummary, SimResult,
};
use crate::model::{InvestorParams, MarketParams};

#[derive(Error, Debug)]
pub enum ArtifactError {
    #[error("artifact i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact serialization failure: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv write failure: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Cauchy(#[from] CauchyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Hex SHA-256 of the canonical JSON encoding of `value`.
pub fn params_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serializable parameters");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The manifest written next to every artifact set; re-running from it
/// reproduces the artifacts byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub params_hash: String,
    pub seed: u64,
    /// The fully resolved configuration (all defaults expanded).
    pub config: ScenarioConfig,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn for_config(config: &ScenarioConfig, artifacts: Vec<String>) -> Manifest {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            params_hash: params_hash(config),
            seed: config.simulation.seed,
            config: config.clone(),
            artifacts,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Manifest, ArtifactError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// `loss_hist.csv`: one row per default count k with the realization count.
pub fn write_loss_hist_csv(path: &Path, dist: &LossDistribution) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "count"])?;
    for (k, count) in dist.histogram.iter().enumerate() {
        w.write_record([k.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `wealth.csv`: (realization, t, i, wealth, strategy), keeping every
/// `stride`-th grid point plus the terminal point.
pub fn write_wealth_csv(path: &Path, sims: &[SimResult], stride: usize) -> Result<(), ArtifactError> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["realization", "t", "i", "wealth", "strategy"])?;
    for sim in sims {
        let n_steps = sim.grid.n_steps;
        for k in (0..=n_steps).filter(|k| k % stride == 0 || *k == n_steps) {
            let t = sim.grid.time(k);
            for (i, path) in sim.wealth.iter().enumerate() {
                // at t = T the last decision still applies over the final step
                let pi = sim.strategy[i][k.min(n_steps - 1)];
                w.write_record([
                    sim.realization.to_string(),
                    format!("{t}"),
                    i.to_string(),
                    format!("{}", path[k]),
                    format!("{pi}"),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `posterior.csv`: (realization, t, posterior, innovation increment),
/// downsampled like [`write_wealth_csv`].
pub fn write_posterior_csv(
    path: &Path,
    sims: &[SimResult],
    stride: usize,
) -> Result<(), ArtifactError> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["realization", "t", "posterior", "innovation"])?;
    for sim in sims {
        let n_steps = sim.grid.n_steps;
        for k in (0..=n_steps).filter(|k| k % stride == 0 || *k == n_steps) {
            let innovation = if k < n_steps { sim.posterior.innovations[k] } else { 0.0 };
            w.write_record([
                sim.realization.to_string(),
                format!("{}", sim.grid.time(k)),
                format!("{}", sim.posterior.values[k]),
                format!("{innovation}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The JSON run summary: headline probabilities, terminal-wealth moments,
/// and clamp telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params_hash: String,
    pub seed: u64,
    pub n_realizations: usize,
    pub loss_histogram: Vec<usize>,
    pub all_default_probability: f64,
    pub any_default_probability: f64,
    pub mean_terminal_wealth: Vec<f64>,
    pub sd_terminal_wealth: Vec<f64>,
    pub total_clamp_events: usize,
    pub total_filter_steps: usize,
}

pub fn summarize_run(
    config: &ScenarioConfig,
    summaries: &[RealizationSummary],
    dist: &LossDistribution,
) -> RunSummary {
    let n_inv = config.investors.build().len();
    let r = summaries.len().max(1) as f64;
    let mut mean = vec![0.0f64; n_inv];
    for s in summaries {
        for (i, &x) in s.terminal_wealth.iter().enumerate() {
            mean[i] += x / r;
        }
    }
    let mut sd = vec![0.0f64; n_inv];
    if summaries.len() > 1 {
        for s in summaries {
            for (i, &x) in s.terminal_wealth.iter().enumerate() {
                sd[i] += (x - mean[i]).powi(2) / (r - 1.0);
            }
        }
        for v in &mut sd {
            *v = v.sqrt();
        }
    }
    RunSummary {
        params_hash: params_hash(config),
        seed: config.simulation.seed,
        n_realizations: summaries.len(),
        loss_histogram: dist.histogram.clone(),
        all_default_probability: dist.all_default_probability(),
        any_default_probability: dist.any_default_probability(),
        mean_terminal_wealth: mean,
        sd_terminal_wealth: sd,
        total_clamp_events: summaries.iter().map(|s| s.clamp_events).sum(),
        total_filter_steps: summaries.len() * config.n_steps(),
    }
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<(), ArtifactError> {
    fs::write(path, serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

/// The cached/serialized Monte-Carlo table set for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSet {
    /// Hash of (market, investors, table config) that produced the tables.
    pub params_hash: String,
    pub provenance: String,
    pub kappa: Vec<f64>,
    pub base: BaseTables,
}

impl TableSet {
    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TableSet, ArtifactError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Versioned CSV dump: per-investor rows (t, p, i, c, dc_dp, se_c,
    /// se_dc) with a `#`-prefixed provenance header line.
    pub fn write_csv(&self, path: &Path) -> Result<(), ArtifactError> {
        let mut body = String::new();
        body.push_str(&format!(
            "# params_hash={} provenance={} investors={}\n",
            self.params_hash,
            self.provenance,
            self.kappa.len()
        ));
        body.push_str("t,p,i,c,dc_dp,se_c,se_dc\n");
        let np = self.base.c.p_nodes.len();
        for (it, &t) in self.base.c.t_nodes.iter().enumerate() {
            for (ip, &p) in self.base.c.p_nodes.iter().enumerate() {
                let idx = it * np + ip;
                for (i, &k) in self.kappa.iter().enumerate() {
                    body.push_str(&format!(
                        "{t},{p},{i},{},{},{},{}\n",
                        k * self.base.c.values[idx],
                        k * self.base.dc.values[idx],
                        k * self.base.se_c.values[idx],
                        k * self.base.se_dc.values[idx],
                    ));
                }
            }
        }
        fs::write(path, body)?;
        Ok(())
    }
}

/// Key identifying a table build (market + investors + grids + budget).
#[derive(Serialize)]
struct TableKey<'a> {
    market: &'a MarketParams,
    investors: &'a [InvestorParams],
    tables: &'a TableConfig,
}

pub fn table_cache_key(
    market: &MarketParams,
    investors: &[InvestorParams],
    tables: &TableConfig,
) -> String {
    params_hash(&TableKey { market, investors, tables })
}

/// Loads the table set from `cache_dir` if a build with identical
/// parameters exists there, otherwise builds and caches it.
pub fn load_or_build_tables(
    market: &MarketParams,
    investors: &[InvestorParams],
    kappa: &[f64],
    tables: &TableConfig,
    clamp_eps: f64,
    cache_dir: &Path,
) -> Result<TableSet, ArtifactError> {
    let key = table_cache_key(market, investors, tables);
    let cache_path = cache_dir.join(format!("tables-{key}.json"));
    if cache_path.is_file() {
        let cached = TableSet::load(&cache_path)?;
        if cached.params_hash == key {
            return Ok(cached);
        }
    }
    let mc = McConfig {
        n_paths: tables.n_paths,
        n_steps: tables.n_steps,
        seed: 0x7ab1e5,
        clamp_eps,
    };
    let base = build_base_tables(market, &tables.t_nodes(market.horizon), &tables.p_nodes(), &mc)?;
    let set = TableSet {
        params_hash: key,
        provenance: "mc".to_string(),
        kappa: kappa.to_vec(),
        base,
    };
    fs::create_dir_all(cache_dir)?;
    set.save(&cache_path)?;
    Ok(set)
}

/// Convenience: the cached ∂ₚc base table wrapped for the game setup.
pub fn dc_base_arc(set: &TableSet) -> std::sync::Arc<CauchyTable> {
    std::sync::Arc::new(set.base.dc.clone())
}

/// The full simulate pipeline: resolve tables (cached in `cache_dir`) when
/// the strategy needs them, run every realization, and write the artifact
/// set (wealth.csv, posterior.csv, loss_hist.csv, summary.json,
/// manifest.json) into `out_dir`.
///
/// `detail_paths` realizations are kept at full path resolution for
/// wealth.csv/posterior.csv, downsampled to every `stride`-th grid point.
/// Re-running with the manifest's embedded config reproduces every artifact
/// byte-for-byte.
pub fn run_simulate_pipeline(
    config: &ScenarioConfig,
    out_dir: &Path,
    cache_dir: &Path,
    detail_paths: usize,
    stride: usize,
) -> Result<RunSummary, ArtifactError> {
    config.validate()?;
    let out = prepare_out_dir(out_dir)?;
    let dc_base = if config.needs_tables() {
        let investors = config.investors.build();
        let coeff = crate::model::compute_coefficients(&investors)
            .map_err(|e| ConfigError::Model(e))?;
        let set = load_or_build_tables(
            &config.market,
            &investors,
            &coeff.kappa,
            &config.tables,
            config.simulation.clamp_eps,
            cache_dir,
        )?;
        Some(dc_base_arc(&set))
    } else {
        None
    };
    let setup = config.to_setup(dc_base)?;
    let realizations = config.simulation.realizations;
    let summaries = run_summaries(&setup, realizations)?;
    let dist = aggregate_losses(&summaries, setup.investors.len());
    let sims: Result<Vec<SimResult>, GameError> = (0..detail_paths.min(realizations) as u64)
        .map(|r| run_realization(&setup, r))
        .collect();
    let sims = sims?;
    write_wealth_csv(&out.join("wealth.csv"), &sims, stride)?;
    write_posterior_csv(&out.join("posterior.csv"), &sims, stride)?;
    write_loss_hist_csv(&out.join("loss_hist.csv"), &dist)?;
    let summary = summarize_run(config, &summaries, &dist);
    write_summary_json(&out.join("summary.json"), &summary)?;
    let manifest = Manifest::for_config(
        config,
        vec![
            "wealth.csv".into(),
            "posterior.csv".into(),
            "loss_hist.csv".into(),
            "summary.json".into(),
        ],
    );
    manifest.save(&out.join("manifest.json"))?;
    Ok(summary)
}

/// Resolves an output path inside `out_dir`, creating the directory.
pub fn prepare_out_dir(out_dir: &Path) -> Result<PathBuf, ArtifactError> {
    fs::create_dir_all(out_dir)?;
    Ok(out_dir.to_path_buf())
}
