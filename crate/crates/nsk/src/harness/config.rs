//! TOML experiment configuration.
//!
//! A config file carries a `[params]` block (physics, grid, model, stepping),
//! an `[init]` block (initial-data profile), and optional `[sweep]`,
//! `[weak_strong]` and `[output]` blocks for the two studies. Pressure models
//! are selected by preset name or spelled out as coefficient lists.

use crate::grid::{BcMode, Grid1D};
use crate::solver::{SimParams, SolverError};
use crate::thermo::{LipschitzPart, MonotonePart, PressureModel, ThermoError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config error: {0}")]
    Invalid(String),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Container(#[from] crate::solver::container::ContainerError),
}

/// Pressure model selection: a preset name, or explicit parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub preset: Option<String>,
    /// Power-law exponent of the monotone part (with `preset = "powerlaw"`
    /// this overrides the default exponent 2).
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Coefficient of the monotone power law (custom models).
    #[serde(default)]
    pub h_coeff: Option<f64>,
    /// Ascending-power coefficients of the Lipschitz polynomial part
    /// (custom models; constant term must be zero).
    #[serde(default)]
    pub q_coeffs: Option<Vec<f64>>,
    /// Density beyond which the polynomial part continues linearly.
    #[serde(default)]
    pub q_continue_at: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<PressureModel, HarnessError> {
        if let Some(name) = &self.preset {
            if name == "powerlaw" {
                if let Some(g) = self.gamma {
                    return Ok(PressureModel::powerlaw(g)?);
                }
            }
            return Ok(PressureModel::preset(name)?);
        }
        let coeff = self.h_coeff.ok_or_else(|| {
            HarnessError::Invalid("custom model needs h_coeff (or use a preset)".into())
        })?;
        let gamma = self
            .gamma
            .ok_or_else(|| HarnessError::Invalid("custom model needs gamma".into()))?;
        let q = match &self.q_coeffs {
            None => LipschitzPart::Zero,
            Some(coeffs) => LipschitzPart::Polynomial {
                coeffs: coeffs.clone(),
                continue_at: self.q_continue_at.unwrap_or(8.0),
            },
        };
        let model = PressureModel::new(MonotonePart { coeff, gamma }, q)?;
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n_cells: usize,
    #[serde(default = "default_bc")]
    pub bc: BcMode,
}

fn default_bc() -> BcMode {
    BcMode::Periodic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub max_dt: Option<f64>,
    #[serde(default = "default_c_disp")]
    pub c_disp: f64,
    pub grid: GridConfig,
    pub model: ModelConfig,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_snapshot_every() -> usize {
    50
}

fn default_c_disp() -> f64 {
    0.25
}

impl ParamsConfig {
    pub fn build(&self) -> Result<SimParams, HarnessError> {
        Ok(SimParams {
            mu: self.mu,
            lambda: self.lambda,
            kappa: self.kappa,
            alpha: self.alpha,
            beta: self.beta,
            cfl: self.cfl,
            t_end: self.t_end,
            model: self.model.build()?,
            grid: Grid1D::new(self.grid.length, self.grid.n_cells, self.grid.bc)?,
            snapshot_every: self.snapshot_every,
            max_dt: self.max_dt,
            c_disp: self.c_disp,
        })
    }
}

/// Initial-data profile selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// Constant density and velocity.
    Uniform {
        rho: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `rho = rho_bar + amplitude sin(2 pi mode x / L)`, resting or with a
    /// uniform velocity.
    Sine {
        rho_bar: f64,
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: usize,
        #[serde(default)]
        velocity: f64,
    },
    /// Smooth compactly supported density bump.
    Bump {
        rho_bar: f64,
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Two-phase profile: tanh transition between two densities.
    TwoPhase {
        rho_left: f64,
        rho_right: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
}

fn default_mode() -> usize {
    1
}

fn default_width() -> f64 {
    0.1
}

/// How `beta` is derived from `alpha` in a sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaRule {
    /// `beta = coefficient / alpha` (vanishes in the limit).
    Inverse { coefficient: f64 },
    /// `beta = coefficient` independently of alpha; outside the hypotheses
    /// of the convergence estimate and flagged as such in reports.
    Constant { coefficient: f64 },
}

impl BetaRule {
    pub fn beta(&self, alpha: f64) -> f64 {
        match self {
            BetaRule::Inverse { coefficient } => coefficient / alpha,
            BetaRule::Constant { coefficient } => *coefficient,
        }
    }

    /// Whether the rule sends beta to zero as alpha grows.
    pub fn vanishes(&self) -> bool {
        matches!(self, BetaRule::Inverse { .. })
    }
}

fn default_beta_rule() -> BetaRule {
    BetaRule::Inverse { coefficient: 1.0 }
}

fn default_alphas() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0, 10000.0]
}

fn default_refine_levels() -> usize {
    3
}

fn default_snapshot_count() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_beta_rule")]
    pub beta_rule: BetaRule,
    #[serde(default = "default_refine_levels")]
    pub refine_levels: usize,
    /// Number of equispaced snapshot times shared by all runs.
    #[serde(default = "default_snapshot_count")]
    pub snapshots: usize,
    /// Run sweep members on separate threads.
    #[serde(default)]
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alphas: default_alphas(),
            beta_rule: default_beta_rule(),
            refine_levels: default_refine_levels(),
            snapshots: default_snapshot_count(),
            parallel: false,
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_noise_modes() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakStrongConfig {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise_modes")]
    pub noise_modes: usize,
    #[serde(default = "default_snapshot_count")]
    pub snapshots: usize,
}

impl Default for WeakStrongConfig {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            seed: 0,
            noise_modes: default_noise_modes(),
            snapshots: default_snapshot_count(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_outdir")]
    pub dir: String,
}

fn default_outdir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_outdir(),
        }
    }
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub weak_strong: Option<WeakStrongConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(sweep) = &self.sweep {
            if sweep.alphas.is_empty() {
                return Err(HarnessError::Invalid("sweep alpha list is empty".into()));
            }
            for w in sweep.alphas.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(HarnessError::Invalid(
                        "sweep alpha list must be strictly increasing".into(),
                    ));
                }
            }
            for &a in &sweep.alphas {
                if !(sweep.beta_rule.beta(a) > 0.0) {
                    return Err(HarnessError::Invalid(format!(
                        "beta rule yields non-positive beta at alpha = {a}"
                    )));
                }
            }
        }
        if let Some(ws) = &self.weak_strong {
            for &e in &ws.epsilons {
                if !(e >= 0.0) {
                    return Err(HarnessError::Invalid(format!("negative epsilon {e}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[params]
mu = 0.01
lambda = 0.01
kappa = 0.01
alpha = 100.0
beta = 0.01
t_end = 0.2

[params.grid]
length = 1.0
n_cells = 512

[params.model]
preset = "figure1"

[init]
preset = "sine"
rho_bar = 1.0
amplitude = 0.1

[sweep]
alphas = [10.0, 100.0]

[output]
dir = "results"
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let params = cfg.params.build().unwrap();
        assert_eq!(params.grid.n_cells, 512);
        assert_eq!(params.cfl, 0.4);
        assert!((params.model.h_inf() - 0.5184).abs() < 1e-12);
        assert_eq!(cfg.output.dir, "results");
    }

    #[test]
    fn rejects_unsorted_alphas() {
        let text = SAMPLE.replace("[10.0, 100.0]", "[100.0, 10.0]");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn custom_polynomial_model() {
        let text = SAMPLE.replace(
            "preset = \"figure1\"",
            "gamma = 3.0\nh_coeff = 0.1728\nq_coeffs = [0.0, 3.36, -1.44]\nq_continue_at = 8.0",
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let params = cfg.params.build().unwrap();
        assert_eq!(params.model, crate::thermo::PressureModel::figure1());
    }

    #[test]
    fn beta_rules() {
        let inv = BetaRule::Inverse { coefficient: 2.0 };
        assert_eq!(inv.beta(100.0), 0.02);
        assert!(inv.vanishes());
        let cst = BetaRule::Constant { coefficient: 0.5 };
        assert_eq!(cst.beta(1e6), 0.5);
        assert!(!cst.vanishes());
    }
}
