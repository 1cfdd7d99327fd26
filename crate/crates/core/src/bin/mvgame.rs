//! Command-line front end: scenario simulation, table solving, a filter
//! demonstration, and the verification gate.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 verification failure (always for `verify`; for the other commands only
//! under `--strict`, which promotes telemetry warnings to failures).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mvgame::artifacts::{
    load_or_build_tables, prepare_out_dir, run_simulate_pipeline, ArtifactError, Manifest,
    TableSet,
};
use mvgame::config::{ConfigError, ScenarioConfig};
use mvgame::game::{run_realization, SimResult};
use mvgame::model::compute_coefficients;
use mvgame::verify::{all_criteria, default_cache_dir, Suite, Verifier};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "mvgame", version, about = "Mean-variance portfolio games under relative performance: equilibria, filtering, and systemic-risk simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Promote telemetry warnings (e.g. excessive filter clamping) to
    /// failures with exit code 4.
    #[arg(long)]
    strict: bool,
    /// Size of the worker thread pool (defaults to the core count).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and write wealth, posterior, and loss
    /// artifacts plus a reproducibility manifest.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Realizations kept at full path resolution in wealth.csv.
        #[arg(long, default_value_t = 5)]
        detail_paths: usize,
        /// Keep every n-th grid point in the path CSVs.
        #[arg(long, default_value_t = 50)]
        stride: usize,
    },
    /// Build (or load from cache) the c/∂ₚc tables for the configured
    /// market and write them with standard errors.
    SolveCauchy {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate a few market paths and write the filter's posterior
    /// trajectory against them.
    FilterDemo {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of demonstration paths.
        #[arg(long, default_value_t = 5)]
        paths: usize,
    },
    /// Run the verification criteria and print one verdict per criterion.
    Verify {
        /// Restrict to one suite: filter, cauchy, equilibrium, or figures.
        suite: Option<String>,
        /// Write the machine-readable JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for cached table builds.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Size of the worker thread pool (defaults to the core count).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Config-shaped problems exit 2; everything else is a numerical or i/o
/// failure and exits 3.
fn classify(err: &ArtifactError) -> u8 {
    match err {
        ArtifactError::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // A later duplicate initialization is harmless for our use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, ArtifactError> {
    let mut config = ScenarioConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.simulation.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, ArtifactError> {
    match cli.command {
        Command::Simulate { common, detail_paths, stride } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            let summary = run_simulate_pipeline(
                &config,
                &common.out,
                &default_cache_dir(),
                detail_paths,
                stride,
            )?;
            println!(
                "simulated {} realizations: P(all default) = {:.3}, P(any default) = {:.3}, clamp events {}/{} steps",
                summary.n_realizations,
                summary.all_default_probability,
                summary.any_default_probability,
                summary.total_clamp_events,
                summary.total_filter_steps
            );
            let clamp_rate =
                summary.total_clamp_events as f64 / summary.total_filter_steps.max(1) as f64;
            if common.strict && clamp_rate >= 1e-3 {
                eprintln!("strict: clamp rate {clamp_rate:.2e} exceeds 1e-3");
                return Ok(ExitCode::from(EXIT_VERIFY));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveCauchy { common } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            let investors = config.investors.build();
            let coeff = compute_coefficients(&investors).map_err(ConfigError::Model)?;
            let set: TableSet = load_or_build_tables(
                &config.market,
                &investors,
                &coeff.kappa,
                &config.tables,
                config.simulation.clamp_eps,
                &default_cache_dir(),
            )?;
            let out = prepare_out_dir(&common.out)?;
            set.write_csv(&out.join("tables.csv"))?;
            set.save(&out.join("tables.json"))?;
            Manifest::for_config(&config, vec!["tables.csv".into(), "tables.json".into()])
                .save(&out.join("manifest.json"))?;
            println!(
                "tables on {}×{} nodes written to {} (params hash {})",
                set.base.c.t_nodes.len(),
                set.base.c.p_nodes.len(),
                out.display(),
                set.params_hash
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::FilterDemo { common, paths } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            // The demo only needs truth + filter, so force the trivial
            // strategy: no tables required regardless of the scenario.
            let mut demo = config.clone();
            demo.strategy.variant = mvgame::config::StrategyVariant::Zero;
            let setup = demo.to_setup(None)?;
            let sims: Result<Vec<SimResult>, _> =
                (0..paths as u64).map(|r| run_realization(&setup, r)).collect();
            let sims = sims?;
            let out = prepare_out_dir(&common.out)?;
            mvgame::artifacts::write_posterior_csv(&out.join("posterior.csv"), &sims, 1)?;
            Manifest::for_config(&demo, vec!["posterior.csv".into()])
                .save(&out.join("manifest.json"))?;
            let terminal: Vec<f64> =
                sims.iter().map(|s| *s.posterior.values.last().unwrap()).collect();
            println!("{paths} filter paths written to {}; terminal posteriors {terminal:?}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, out, cache_dir, threads } => {
            init_threads(threads);
            let ids = match suite.as_deref() {
                Some(name) => {
                    let suite: Suite = name.parse().map_err(|e| {
                        ArtifactError::Config(ConfigError::Invalid(format!("{e}")))
                    })?;
                    suite.criteria().to_vec()
                }
                None => all_criteria(),
            };
            let verifier = Verifier::new(cache_dir.unwrap_or_else(default_cache_dir));
            let mut all_passed = true;
            let mut results = Vec::new();
            for id in ids {
                let res = verifier.criterion(id);
                println!(
                    "criterion {:2} {:28} {} ({:.1}s) — {}",
                    res.id,
                    res.name,
                    if res.passed { "PASS" } else { "FAIL" },
                    res.seconds,
                    res.details
                );
                all_passed &= res.passed;
                results.push(res);
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&results)?)?;
            }
            Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
        }
    }
}
