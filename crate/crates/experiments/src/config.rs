//! Experiment configuration: JSON-compatible, strictly validated.
//!
//! Unknown keys are rejected so a typo never silently falls back to a
//! default. Field presence is validated per experiment kind before any
//! compute starts; numeric guards that depend on runtime quantities
//! (detailed-balance residual, step-size guard) live in the drivers.

use std::path::PathBuf;

use lindblad_core::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Which experiment a config drives. Serialized names match the CLI
/// subcommands one-to-one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ScalingAverage,
    ScalingRandom,
    Gibbs,
    DaviesVerify,
    GapCert,
    Spectrum,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ScalingAverage => "scaling-average",
            Self::ScalingRandom => "scaling-random",
            Self::Gibbs => "gibbs",
            Self::DaviesVerify => "davies-verify",
            Self::GapCert => "gap-cert",
            Self::Spectrum => "spectrum",
        }
    }
}

/// Hamiltonian selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Diagonal two-level system with eigenvalues `{0, splitting}`.
    TwoLevel { splitting: f64 },
    /// Transverse-field Ising chain, open boundary.
    Tfim { n: usize, j: f64, g: f64 },
    /// Heisenberg chain, open boundary.
    Heisenberg { n: usize, j: f64 },
    /// Normalized sum of `m` iid random Pauli strings on `n` qubits.
    PauliStrings { n: usize, m: usize },
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::TwoLevel { .. } => 2,
            Self::Tfim { n, .. } | Self::Heisenberg { n, .. } | Self::PauliStrings { n, .. } => {
                1usize << n
            }
        }
    }
}

/// Sign-variant names for the random-involution sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVariantConfig {
    Haar,
    PerQubit,
}

/// Detailed-balance weight names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKindConfig {
    Metropolis,
    Glauber,
    Zero,
}

/// Ensemble selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleConfig {
    /// One damping jump `sqrt(rate) |0><1|` on a two-level system.
    SingleDamping { rate: f64 },
    /// Two-term thermal pair on a two-level system: decay at `base_rate`,
    /// excitation at `base_rate * e^{-beta * splitting}`, weights 1/2 each.
    ThermalPair { base_rate: f64 },
    /// Continuous random-jump ensemble: one filtered involution per draw.
    DaviesRandom {
        variant: SignVariantConfig,
        gamma: WeightKindConfig,
    },
}

impl EnsembleConfig {
    pub fn requires_beta(&self) -> bool {
        matches!(self, Self::ThermalPair { .. } | Self::DaviesRandom { .. })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::SingleDamping { .. } | Self::ThermalPair { .. })
    }
}

/// Initial state for trajectory-driven experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    MaximallyMixed,
    /// Computational-basis projector `|index><index|`.
    BasisState {
        index: usize,
    },
    /// The Gibbs state of the configured system at the configured beta.
    Gibbs,
    /// A seeded Haar-random pure state.
    RandomPure,
}

/// Step algorithm names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlgKind {
    #[default]
    ExactExp,
    TrotterSplit,
    DilationHs,
}

/// Full experiment description. One config drives one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub alg: AlgKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<u64>,
    /// Sample count for Monte Carlo estimates of the average step channel
    /// (continuous ensembles only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    /// Per-jump rate scale for gap certificates; defaults to `1/N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Input(msg.into())
}

fn require_positive_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_err(format!("config: {name} must be nonempty")));
    }
    if grid.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(config_err(format!(
            "config: {name} entries must be finite and > 0"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err(format!(
            "config: {name} must be strictly increasing"
        )));
    }
    Ok(())
}

fn require_count_grid(name: &str, grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_err(format!("config: {name} must be nonempty")));
    }
    if grid.contains(&0) {
        return Err(config_err(format!("config: {name} entries must be >= 1")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err(format!(
            "config: {name} must be strictly increasing"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse a JSON config. Unknown keys and missing mandatory keys
    /// (including `seed`) are parse errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| config_err(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON used for the `config_sha256` in every output file.
    /// The output directory is excluded: the hash identifies the experiment,
    /// not where its files land.
    pub fn to_canonical_json(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        serde_json::to_string_pretty(&canonical).expect("config serializes")
    }

    pub fn beta_required(&self) -> Result<f64> {
        match self.beta {
            Some(b) if b.is_finite() && b >= 0.0 => Ok(b),
            Some(b) => Err(config_err(format!(
                "config: beta = {b} must be finite and >= 0"
            ))),
            None => Err(config_err("config: beta is required for this experiment")),
        }
    }

    pub fn t_total_required(&self) -> Result<f64> {
        match self.t_total {
            Some(t) if t.is_finite() && t > 0.0 => Ok(t),
            Some(t) => Err(config_err(format!(
                "config: t_total = {t} must be finite and > 0"
            ))),
            None => Err(config_err(
                "config: t_total is required for this experiment",
            )),
        }
    }

    pub fn m_grid_required(&self) -> Result<&[u64]> {
        match &self.m_grid {
            Some(g) => Ok(g),
            None => Err(config_err("config: m_grid is required for this experiment")),
        }
    }

    pub fn n_traj_required(&self) -> Result<u64> {
        match self.n_traj {
            Some(n) if n >= 2 => Ok(n),
            Some(n) => Err(config_err(format!("config: n_traj = {n} must be >= 2"))),
            None => Err(config_err("config: n_traj is required for this experiment")),
        }
    }

    pub fn ensemble_required(&self) -> Result<&EnsembleConfig> {
        self.ensemble
            .as_ref()
            .ok_or_else(|| config_err("config: ensemble is required for this experiment"))
    }

    /// The tau values this run sweeps (singleton when `tau` is given).
    pub fn tau_values(&self) -> Result<Vec<f64>> {
        match (&self.tau, &self.tau_grid) {
            (Some(t), None) => {
                require_positive_grid("tau", std::slice::from_ref(t))?;
                Ok(vec![*t])
            }
            (None, Some(g)) => Ok(g.clone()),
            (Some(_), Some(_)) => Err(config_err("config: give tau or tau_grid, not both")),
            (None, None) => Err(config_err("config: tau or tau_grid is required")),
        }
    }

    /// Steps for a given tau, enforcing `tau * M = T` whenever both a step
    /// count and a total time are pinned.
    pub fn steps_for_tau(&self, tau: f64) -> Result<u64> {
        match (self.m_steps, self.t_total) {
            (Some(m), Some(t)) => {
                let defect = (m as f64 * tau - t).abs();
                if defect > 1e-9 * t.abs().max(1.0) {
                    return Err(config_err(format!(
                        "config: tau * m_steps = {} does not match t_total = {t}",
                        m as f64 * tau
                    )));
                }
                Ok(m)
            }
            (Some(m), None) => Ok(m),
            (None, Some(t)) => {
                let ratio = t / tau;
                let m = ratio.round();
                if m < 1.0 || (m * tau - t).abs() > 1e-9 * t.abs().max(1.0) {
                    return Err(config_err(format!(
                        "config: t_total / tau = {ratio} is not a whole number of steps"
                    )));
                }
                Ok(m as u64)
            }
            (None, None) => Err(config_err("config: m_steps or t_total is required")),
        }
    }

    /// Static validation: field presence and grid shape per experiment kind.
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.tau_grid {
            require_positive_grid("tau_grid", g)?;
        }
        if let Some(t) = self.tau {
            require_positive_grid("tau", &[t])?;
        }
        if let Some(g) = &self.m_grid {
            require_count_grid("m_grid", g)?;
        }
        if let Some(g) = &self.s_grid {
            require_count_grid("s_grid", g)?;
        }
        if let Some(s) = self.sigma2 {
            if !s.is_finite() || s <= 0.0 {
                return Err(config_err(format!(
                    "config: sigma2 = {s} must be finite and > 0"
                )));
            }
        }
        if let Some(e) = &self.ensemble {
            if e.requires_beta() {
                self.beta_required()?;
            }
            match e {
                EnsembleConfig::SingleDamping { rate } => {
                    if !rate.is_finite() || *rate <= 0.0 {
                        return Err(config_err("config: single_damping rate must be > 0"));
                    }
                    if !matches!(self.system, SystemSpec::TwoLevel { .. }) {
                        return Err(config_err(
                            "config: single_damping requires the two_level system",
                        ));
                    }
                }
                EnsembleConfig::ThermalPair { base_rate } => {
                    if !base_rate.is_finite() || *base_rate <= 0.0 {
                        return Err(config_err("config: thermal_pair base_rate must be > 0"));
                    }
                    if !matches!(self.system, SystemSpec::TwoLevel { .. }) {
                        return Err(config_err(
                            "config: thermal_pair requires the two_level system",
                        ));
                    }
                }
                EnsembleConfig::DaviesRandom { .. } => {}
            }
        }
        match self.experiment {
            ExperimentKind::ScalingAverage => {
                let ens = self.ensemble_required()?;
                if !ens.is_discrete() {
                    return Err(config_err(
                        "config: scaling-average needs a discrete ensemble (its average \
                         channel must be enumerable)",
                    ));
                }
                self.t_total_required()?;
                self.m_grid_required()?;
            }
            ExperimentKind::ScalingRandom => {
                self.ensemble_required()?;
                self.beta_required()?;
                self.t_total_required()?;
                self.m_grid_required()?;
                self.n_traj_required()?;
            }
            ExperimentKind::Gibbs => {
                self.ensemble_required()?;
                self.beta_required()?;
                self.n_traj_required()?;
                for tau in self.tau_values()? {
                    self.steps_for_tau(tau)?;
                }
            }
            ExperimentKind::DaviesVerify => {
                let ens = self.ensemble_required()?;
                if !matches!(ens, EnsembleConfig::DaviesRandom { .. }) {
                    return Err(config_err(
                        "config: davies-verify needs the davies_random ensemble",
                    ));
                }
                self.beta_required()?;
                if self.s_grid.is_none() {
                    return Err(config_err("config: s_grid is required for davies-verify"));
                }
            }
            ExperimentKind::GapCert => {
                self.beta_required()?;
                if let Some(e) = &self.ensemble {
                    if !matches!(e, EnsembleConfig::DaviesRandom { .. }) {
                        return Err(config_err(
                            "config: gap-cert ensemble, when given, must be davies_random",
                        ));
                    }
                }
            }
            ExperimentKind::Spectrum => {}
        }
        Ok(())
    }
}

/// Runtime guard thresholds, overridable via `--tolerances <path>` (JSON
/// with the same field names; unknown keys rejected).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Maximum admissible detailed-balance residual of the mean generator
    /// before a Gibbs-convergence run starts.
    pub db_residual: f64,
    /// Step-size guard for random-channel runs: require
    /// `tau <= tau_guard_factor / (lambda^2 * t_total)`.
    pub tau_guard_factor: f64,
    /// Slope acceptance bands, reported informationally by the CLI.
    pub slope_average: f64,
    pub slope_random: f64,
    pub slope_davies: f64,
    pub slope_truncation: f64,
    /// Kolmogorov-Smirnov acceptance distance for spectral-density checks.
    pub ks_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            db_residual: 1e-6,
            tau_guard_factor: 1.0,
            slope_average: 0.15,
            slope_random: 0.2,
            slope_davies: 0.15,
            slope_truncation: 0.2,
            ks_threshold: 0.05,
        }
    }
}

impl Tolerances {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("tolerances parse error: {e}")))
    }
}
