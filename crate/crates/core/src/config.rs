//! Scenario configuration: a single TOML file describing the market, the
//! investor population, the strategy assignment, simulation sizes, and the
//! table-building budget. Every field has an explicit default so emitted
//! manifests are fully resolved.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::CauchyTable;
use crate::engine::DEFAULT_CLAMP_EPS;
use crate::equilibrium::StrategyKind;
use crate::game::{GameError, GameSetup, InvestorStrategy};
use crate::model::{
    compute_coefficients, investors_gamma_ramp, DriftMode, InvestorParams, MarketParams,
    ModelError,
};

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which information set the assigned strategy uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InformationMode {
    Full,
    Partial,
}

/// Which strategy family to assign within the information mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyVariant {
    /// The equilibrium strategy of the chosen information mode.
    #[default]
    Equilibrium,
    /// Partial information, myopic first term only.
    FirstTermOnly,
    /// No stock position.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub information: InformationMode,
    #[serde(default)]
    pub variant: StrategyVariant,
}

/// Investor population: an explicit list or a γ-ramp generator
/// (γᵢ = gamma0 + gamma_step·i for i = 1..count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InvestorsConfig {
    Generator {
        count: usize,
        gamma0: f64,
        gamma_step: f64,
        lambda_m: f64,
        lambda_v: f64,
    },
    List {
        list: Vec<InvestorParams>,
    },
}

impl InvestorsConfig {
    pub fn build(&self) -> Vec<InvestorParams> {
        match self {
            InvestorsConfig::Generator { count, gamma0, gamma_step, lambda_m, lambda_v } => {
                investors_gamma_ramp(*count, *gamma0, *gamma_step, *lambda_m, *lambda_v)
            }
            InvestorsConfig::List { list } => list.clone(),
        }
    }
}

fn default_realizations() -> usize {
    100
}
fn default_prior() -> f64 {
    0.5
}
fn default_initial_wealth() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    42
}
fn default_clamp_eps() -> f64 {
    DEFAULT_CLAMP_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Euler steps over [0, T]; default 1000·T (dt = 10⁻³·T per unit).
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_prior")]
    pub prior: f64,
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_clamp_eps")]
    pub clamp_eps: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_steps: None,
            realizations: default_realizations(),
            prior: default_prior(),
            initial_wealth: default_initial_wealth(),
            seed: default_seed(),
            clamp_eps: default_clamp_eps(),
        }
    }
}

fn default_p_min() -> f64 {
    0.01
}
fn default_p_max() -> f64 {
    0.99
}
fn default_n_p() -> usize {
    41
}
fn default_n_t() -> usize {
    64
}
fn default_table_paths() -> usize {
    20_000
}
fn default_table_steps() -> usize {
    1000
}

/// Budget for the Monte-Carlo table build of the first Cauchy problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    #[serde(default = "default_n_p")]
    pub n_p: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_table_paths")]
    pub n_paths: usize,
    #[serde(default = "default_table_steps")]
    pub n_steps: usize,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            p_min: default_p_min(),
            p_max: default_p_max(),
            n_p: default_n_p(),
            n_t: default_n_t(),
            n_paths: default_table_paths(),
            n_steps: default_table_steps(),
        }
    }
}

impl TableConfig {
    pub fn p_nodes(&self) -> Vec<f64> {
        let step = (self.p_max - self.p_min) / (self.n_p - 1) as f64;
        (0..self.n_p).map(|k| self.p_min + k as f64 * step).collect()
    }

    pub fn t_nodes(&self, horizon: f64) -> Vec<f64> {
        let step = horizon / (self.n_t - 1) as f64;
        (0..self.n_t).map(|k| (k as f64 * step).min(horizon)).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0 < self.p_min && self.p_min < self.p_max && self.p_max < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "table p-range [{}, {}] must satisfy 0 < p_min < p_max < 1",
                self.p_min, self.p_max
            )));
        }
        if self.n_p < 2 || self.n_t < 2 || self.n_paths == 0 || self.n_steps == 0 {
            return Err(ConfigError::Invalid("table grid/budget fields must be ≥ minimal sizes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub market: MarketParams,
    pub investors: InvestorsConfig,
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub tables: TableConfig,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.market.validate()?;
        let investors = self.investors.build();
        if investors.is_empty() {
            return Err(ConfigError::Invalid("investor list is empty".into()));
        }
        for inv in &investors {
            inv.validate()?;
        }
        if !(self.simulation.prior > 0.0 && self.simulation.prior < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "simulation.prior {} outside (0,1)",
                self.simulation.prior
            )));
        }
        if self.simulation.realizations == 0 {
            return Err(ConfigError::Invalid("simulation.realizations must be ≥ 1".into()));
        }
        self.tables.validate()?;
        Ok(())
    }

    /// Resolved step count: configured value or 1000 steps per unit time.
    pub fn n_steps(&self) -> usize {
        self.simulation
            .n_steps
            .unwrap_or(((self.market.horizon * 1000.0).round() as usize).max(1))
    }

    /// The per-investor strategy kind implied by (information, variant).
    pub fn strategy_kind(&self) -> Result<StrategyKind, ConfigError> {
        match (self.strategy.information, self.strategy.variant) {
            (_, StrategyVariant::Zero) => Ok(StrategyKind::Zero),
            (InformationMode::Full, StrategyVariant::Equilibrium) => match self.market.drift_mode {
                DriftMode::ConstantUnknown { high } => Ok(StrategyKind::FullInfoConstant {
                    mu: self.market.mu_of_state(if high { 1 } else { 2 }),
                }),
                DriftMode::Alternating { .. } => Ok(StrategyKind::FullInfoMarkov),
            },
            (InformationMode::Partial, StrategyVariant::Equilibrium) => Ok(StrategyKind::PartialInfo),
            (InformationMode::Partial, StrategyVariant::FirstTermOnly) => {
                Ok(StrategyKind::PartialInfoFirstTermOnly)
            }
            (InformationMode::Full, StrategyVariant::FirstTermOnly) => Err(ConfigError::Invalid(
                "first_term_only is a partial-information variant".into(),
            )),
        }
    }

    /// Whether this scenario needs the ∂ₚc table built before simulating.
    pub fn needs_tables(&self) -> bool {
        matches!(self.strategy_kind(), Ok(StrategyKind::PartialInfo))
    }

    /// Assembles the runnable setup (the ∂ₚc table must be supplied when
    /// [`Self::needs_tables`] is true).
    pub fn to_setup(&self, dc_base: Option<Arc<CauchyTable>>) -> Result<GameSetup, ConfigError> {
        let investors = self.investors.build();
        let coeff = compute_coefficients(&investors)?;
        let kind = self.strategy_kind()?;
        let n = investors.len();
        let setup = GameSetup {
            market: self.market.clone(),
            investors,
            coeff,
            strategies: vec![InvestorStrategy::unperturbed(kind); n],
            dc_base,
            initial_wealth: vec![self.simulation.initial_wealth; n],
            prior: self.simulation.prior,
            n_steps: self.n_steps(),
            clamp_eps: self.simulation.clamp_eps,
            seed: self.simulation.seed,
        };
        setup.validate()?;
        Ok(setup)
    }
}
