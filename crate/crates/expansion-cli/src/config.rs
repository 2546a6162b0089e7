//! Scenario files: one TOML document holding the model parameters plus
//! optional numerical blocks.
//!
//! Model parameters carry no defaults — a scenario spells out every field
//! of its `[market]` or `[insurance]` table, and exactly one of the two
//! must be present, matching `mode`. The numerical blocks (`[solver]`,
//! `[mc]`) default field-by-field to the settings the verification suite
//! runs with. Unknown keys anywhere are rejected with the offending line.

use std::path::Path;

use expansion_core::model::MarketParams;
use expansion_core::reinsurance::InsuranceParams;
use expansion_core::simulator::McConfig;
use expansion_core::vi_solver::{Grid, SolverConfig};
use serde::Deserialize;

use crate::CliError;

/// Which instantiation of the model a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Diffusion market: `[market]` table, investment vocabulary.
    Investment,
    /// Claims book: `[insurance]` table, reinsurance vocabulary.
    Reinsurance,
}

impl Mode {
    /// Stable lowercase label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Mode::Investment => "investment",
            Mode::Reinsurance => "reinsurance",
        }
    }
}

/// `[market]`: the diffusion-model parameters, all required.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketTable {
    /// Risk-free growth rate of surplus (per year).
    pub r: f64,
    /// Excess return per unit of scale.
    pub mu: f64,
    /// Volatility per unit of scale.
    pub sigma: f64,
    /// Running cost rate paid throughout.
    pub delta: f64,
    /// Additional running cost rate after expansion.
    pub rho: f64,
    /// Scale cap before expansion.
    pub beta: f64,
    /// Absolute risk aversion.
    pub m: f64,
    /// Terminal time in years.
    pub horizon: f64,
    /// Initial surplus.
    pub x0: f64,
}

impl MarketTable {
    /// Plain parameter struct (not yet domain-checked).
    pub fn to_params(self) -> MarketParams {
        MarketParams {
            r: self.r,
            mu: self.mu,
            sigma: self.sigma,
            delta: self.delta,
            rho: self.rho,
            beta: self.beta,
            m: self.m,
            horizon: self.horizon,
            x0: self.x0,
        }
    }

    /// Overwrites one field by name; `false` when the name is unknown.
    pub fn set(&mut self, field: &str, value: f64) -> bool {
        match field {
            "r" => self.r = value,
            "mu" => self.mu = value,
            "sigma" => self.sigma = value,
            "delta" => self.delta = value,
            "rho" => self.rho = value,
            "beta" => self.beta = value,
            "m" => self.m = value,
            "horizon" => self.horizon = value,
            "x0" => self.x0 = value,
            _ => return false,
        }
        true
    }
}

/// `[insurance]`: the claims-book parameters, all required.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsuranceTable {
    /// Claim arrival intensity (claims per year).
    pub lambda: f64,
    /// Mean claim size.
    pub z1: f64,
    /// Second raw moment of the claim size.
    pub z2: f64,
    /// Insurer safety loading.
    pub eta: f64,
    /// Reinsurer safety loading.
    pub theta: f64,
    /// Risk-free rate earned on surplus.
    pub r: f64,
    /// Running cost of writing reinsurance.
    pub rho: f64,
    /// Absolute risk aversion.
    pub m: f64,
    /// Planning horizon in years.
    pub horizon: f64,
    /// Initial surplus.
    pub x0hat: f64,
}

impl InsuranceTable {
    /// Plain parameter struct (not yet domain-checked).
    pub fn to_params(self) -> InsuranceParams {
        InsuranceParams {
            lambda: self.lambda,
            z1: self.z1,
            z2: self.z2,
            eta: self.eta,
            theta: self.theta,
            r: self.r,
            rho: self.rho,
            m: self.m,
            horizon: self.horizon,
            x0hat: self.x0hat,
        }
    }

    /// Overwrites one field by name; `false` when the name is unknown.
    pub fn set(&mut self, field: &str, value: f64) -> bool {
        match field {
            "lambda" => self.lambda = value,
            "z1" => self.z1 = value,
            "z2" => self.z2 = value,
            "eta" => self.eta = value,
            "theta" => self.theta = value,
            "r" => self.r = value,
            "rho" => self.rho = value,
            "m" => self.m = value,
            "horizon" => self.horizon = value,
            "x0hat" => self.x0hat = value,
            _ => return false,
        }
        true
    }
}

fn default_nt() -> usize {
    800
}
fn default_nx() -> usize {
    800
}
fn default_pad_below() -> f64 {
    7.0
}
fn default_pad_above() -> f64 {
    9.0
}
fn default_pde_tol() -> f64 {
    0.01
}
fn default_psor_tol() -> f64 {
    SolverConfig::default().psor_tol
}
fn default_policy_tol() -> f64 {
    SolverConfig::default().policy_tol
}
fn default_max_iters() -> usize {
    SolverConfig::default().max_iters
}
fn default_obstacle_tol() -> f64 {
    SolverConfig::default().obstacle_tol
}
fn default_omega() -> f64 {
    SolverConfig::default().omega
}
fn default_f_cap_factor() -> f64 {
    SolverConfig::default().f_cap_factor
}
fn default_rannacher_steps() -> usize {
    SolverConfig::default().rannacher_steps
}

/// `[solver]`: finite-difference grid and tolerances, all optional.
///
/// The grid spans `x0 - pad_below <= x <= x0 + pad_above`; the default
/// pads and step counts are the ones the acceptance checks run with.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverTable {
    /// Time steps.
    #[serde(default = "default_nt")]
    pub nt: usize,
    /// Surplus steps.
    #[serde(default = "default_nx")]
    pub nx: usize,
    /// Grid extent below the initial surplus.
    #[serde(default = "default_pad_below")]
    pub pad_below: f64,
    /// Grid extent above the initial surplus.
    #[serde(default = "default_pad_above")]
    pub pad_above: f64,
    /// Max relative error allowed against the closed forms (central 60%).
    #[serde(default = "default_pde_tol")]
    pub pde_tol: f64,
    /// Projected-SOR stop tolerance.
    #[serde(default = "default_psor_tol")]
    pub psor_tol: f64,
    /// Policy-iteration stop tolerance.
    #[serde(default = "default_policy_tol")]
    pub policy_tol: f64,
    /// Iteration budget per loop.
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Relative gap below which a node counts as exercised.
    #[serde(default = "default_obstacle_tol")]
    pub obstacle_tol: f64,
    /// SOR relaxation factor.
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Post-expansion control cap, as a multiple of the terminal scale.
    #[serde(default = "default_f_cap_factor")]
    pub f_cap_factor: f64,
    /// Implicit-Euler startup steps before Crank–Nicolson.
    #[serde(default = "default_rannacher_steps")]
    pub rannacher_steps: usize,
}

impl Default for SolverTable {
    fn default() -> Self {
        toml::from_str("").expect("empty solver table must deserialize")
    }
}

impl SolverTable {
    /// The uniform grid this block describes for `params`.
    pub fn grid(&self, params: &MarketParams) -> Result<Grid, CliError> {
        Grid::new(
            params.horizon,
            self.nt,
            params.x0 - self.pad_below,
            params.x0 + self.pad_above,
            self.nx,
        )
        .map_err(CliError::from)
    }

    /// The solver tolerances this block describes.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            psor_tol: self.psor_tol,
            policy_tol: self.policy_tol,
            max_iters: self.max_iters,
            obstacle_tol: self.obstacle_tol,
            omega: self.omega,
            f_cap_factor: self.f_cap_factor,
            rannacher_steps: self.rannacher_steps,
        }
    }
}

fn default_n_paths() -> usize {
    McConfig::default().n_paths
}
fn default_n_steps() -> usize {
    McConfig::default().n_steps
}
fn default_seed() -> u64 {
    McConfig::default().seed
}
fn default_antithetic() -> bool {
    McConfig::default().antithetic
}
fn default_budget() -> u64 {
    McConfig::default().budget
}

/// `[mc]`: Monte Carlo settings, all optional.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McTable {
    /// Simulated paths.
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Euler steps per path (diffusion engine).
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// RNG seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Average antithetic path pairs.
    #[serde(default = "default_antithetic")]
    pub antithetic: bool,
    /// Hard ceiling on `n_paths * n_steps`.
    #[serde(default = "default_budget")]
    pub budget: u64,
}

impl Default for McTable {
    fn default() -> Self {
        toml::from_str("").expect("empty mc table must deserialize")
    }
}

impl McTable {
    /// The simulator configuration this block describes.
    pub fn to_config(self) -> McConfig {
        McConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed: self.seed,
            antithetic: self.antithetic,
            budget: self.budget,
        }
    }
}

/// A parsed scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Model instantiation; decides which parameter table must be present.
    pub mode: Mode,
    /// Diffusion parameters (`mode = "investment"` only).
    pub market: Option<MarketTable>,
    /// Claims-book parameters (`mode = "reinsurance"` only).
    pub insurance: Option<InsuranceTable>,
    /// Finite-difference settings.
    #[serde(default)]
    pub solver: SolverTable,
    /// Monte Carlo settings.
    #[serde(default)]
    pub mc: McTable,
}

impl ScenarioConfig {
    /// Parses a TOML document and checks the mode/table pairing.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match cfg.mode {
            Mode::Investment => {
                if cfg.market.is_none() {
                    return Err(CliError::Config(
                        "mode = \"investment\" requires a [market] table".into(),
                    ));
                }
                if cfg.insurance.is_some() {
                    return Err(CliError::Config(
                        "[insurance] table is not allowed when mode = \"investment\"".into(),
                    ));
                }
            }
            Mode::Reinsurance => {
                if cfg.insurance.is_none() {
                    return Err(CliError::Config(
                        "mode = \"reinsurance\" requires an [insurance] table".into(),
                    ));
                }
                if cfg.market.is_some() {
                    return Err(CliError::Config(
                        "[market] table is not allowed when mode = \"reinsurance\"".into(),
                    ));
                }
            }
        }
        Ok(cfg)
    }

    /// Reads and parses a scenario file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The claims book of a reinsurance scenario, domain-checked.
    pub fn insurance_params(&self) -> Result<InsuranceParams, CliError> {
        let table = self.insurance.as_ref().ok_or_else(|| {
            CliError::Config("scenario has no [insurance] table".into())
        })?;
        Ok(table.to_params().validated()?)
    }

    /// The diffusion parameters the scenario's closed forms run on:
    /// the `[market]` table directly, or the book's diffusion
    /// approximation, both domain-checked.
    pub fn effective_market(&self) -> Result<MarketParams, CliError> {
        match self.mode {
            Mode::Investment => {
                let table = self.market.as_ref().ok_or_else(|| {
                    CliError::Config("scenario has no [market] table".into())
                })?;
                Ok(table.to_params().validated()?)
            }
            Mode::Reinsurance => Ok(self.insurance_params()?.to_diffusion()?),
        }
    }
}
