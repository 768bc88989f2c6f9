//! Materialize configs into concrete operators: Hamiltonians, sampling
//! ensembles, and probe / initial states.

use std::sync::Arc;

use lindblad_core::davies::{RandomJumpSampler, SignVariant, WeightFunction, WeightKind};
use lindblad_core::hamiltonians::{
    pauli_string_hamiltonian, spin_chain_hamiltonian, SpinChainKind,
};
use lindblad_core::linalg::{herm_eig, CMat, CVec};
use lindblad_core::lindblad::DensityMatrix;
use lindblad_core::metrics::GibbsContext;
use lindblad_core::qdrift::{Bounds, EnsembleSpec, LindbladTerm, StepAlgorithm};
use lindblad_core::stream::{domain, stream};
use lindblad_core::{Result, SimError};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{
    AlgKind, EnsembleConfig, ExperimentConfig, InitialState, SignVariantConfig, SystemSpec,
    WeightKindConfig,
};

pub fn step_algorithm(alg: AlgKind) -> StepAlgorithm {
    match alg {
        AlgKind::ExactExp => StepAlgorithm::ExactExp,
        AlgKind::TrotterSplit => StepAlgorithm::TrotterSplit,
        AlgKind::DilationHs => StepAlgorithm::DilationHS,
    }
}

pub fn sign_variant(v: SignVariantConfig) -> SignVariant {
    match v {
        SignVariantConfig::Haar => SignVariant::HaarConjugatedSigns,
        SignVariantConfig::PerQubit => SignVariant::PerQubitPhaseSigns,
    }
}

pub fn weight_kind(k: WeightKindConfig) -> WeightKind {
    match k {
        WeightKindConfig::Metropolis => WeightKind::Metropolis,
        WeightKindConfig::Glauber => WeightKind::Glauber,
        WeightKindConfig::Zero => WeightKind::Zero,
    }
}

/// Build the configured Hamiltonian. Random Pauli-string systems draw from
/// the dedicated spectrum stream of the run seed, so the sampled operator
/// is part of the reproducible run definition.
pub fn build_hamiltonian(cfg: &ExperimentConfig) -> Result<CMat> {
    match &cfg.system {
        SystemSpec::TwoLevel { splitting } => {
            if !splitting.is_finite() || *splitting <= 0.0 {
                return Err(SimError::Input(format!(
                    "config: two_level splitting = {splitting} must be finite and > 0"
                )));
            }
            let mut h = CMat::zeros(2, 2);
            h[(1, 1)] = Complex64::new(*splitting, 0.0);
            Ok(h)
        }
        SystemSpec::Tfim { n, j, g } => spin_chain_hamiltonian(SpinChainKind::Tfim, *n, *j, *g),
        SystemSpec::Heisenberg { n, j } => {
            spin_chain_hamiltonian(SpinChainKind::Heisenberg, *n, *j, 0.0)
        }
        SystemSpec::PauliStrings { n, m } => {
            let mut rng = stream(cfg.seed, domain::SPECTRUM, 0, 0);
            Ok(pauli_string_hamiltonian(*n, *m, &mut rng)?.0)
        }
    }
}

fn basis_jump(dim: usize, to: usize, from: usize, rate: f64) -> CMat {
    let mut v = CMat::zeros(dim, dim);
    v[(to, from)] = Complex64::new(rate.sqrt(), 0.0);
    v
}

/// Build the configured sampling ensemble over Lindblad terms.
pub fn build_ensemble(cfg: &ExperimentConfig, h: &CMat) -> Result<EnsembleSpec> {
    match cfg.ensemble_required()? {
        EnsembleConfig::SingleDamping { rate } => {
            let term = LindbladTerm::new(None, Some(basis_jump(2, 0, 1, *rate)))?;
            EnsembleSpec::discrete(
                vec![term],
                vec![1.0],
                Some(Bounds {
                    lambda: *rate,
                    lambda_weighted: None,
                }),
            )
        }
        EnsembleConfig::ThermalPair { base_rate } => {
            let beta = cfg.beta_required()?;
            let splitting = match cfg.system {
                SystemSpec::TwoLevel { splitting } => splitting,
                _ => unreachable!("validated: thermal_pair implies two_level"),
            };
            let down = basis_jump(2, 0, 1, *base_rate);
            let up = basis_jump(2, 1, 0, *base_rate * (-beta * splitting).exp());
            let terms = vec![
                LindbladTerm::new(None, Some(down))?,
                LindbladTerm::new(None, Some(up))?,
            ];
            EnsembleSpec::discrete(
                terms,
                vec![0.5, 0.5],
                Some(Bounds {
                    lambda: *base_rate,
                    lambda_weighted: None,
                }),
            )
        }
        EnsembleConfig::DaviesRandom { variant, gamma } => {
            let beta = cfg.beta_required()?;
            let eig = herm_eig(h)?;
            let dim = eig.dim();
            let sampler = RandomJumpSampler::new(
                sign_variant(*variant),
                eig,
                WeightFunction::new(weight_kind(*gamma), beta)?,
            )?;
            // ||K||_F^2 <= max gamma * ||A||_F^2 = N for an involution, so N
            // bounds every sampled jump strength.
            EnsembleSpec::sampler(
                Arc::new(sampler),
                Some(Bounds {
                    lambda: dim as f64,
                    lambda_weighted: None,
                }),
            )
        }
    }
}

/// Seeded Haar-random pure state: a normalized complex Gaussian vector.
pub fn random_pure_state(dim: usize, seed: u64, index: u64) -> Result<DensityMatrix> {
    let mut rng = stream(seed, domain::PROBE, index, 0);
    let v = CVec::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    DensityMatrix::pure(&v)
}

/// Resolve the configured initial state (default: maximally mixed).
pub fn initial_state(
    cfg: &ExperimentConfig,
    ctx: Option<&GibbsContext>,
    dim: usize,
) -> Result<DensityMatrix> {
    match cfg
        .initial_state
        .as_ref()
        .unwrap_or(&InitialState::MaximallyMixed)
    {
        InitialState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(dim)),
        InitialState::BasisState { index } => {
            if *index >= dim {
                return Err(SimError::Input(format!(
                    "config: basis_state index {index} out of range for dimension {dim}"
                )));
            }
            let mut v = CVec::zeros(dim);
            v[*index] = Complex64::new(1.0, 0.0);
            DensityMatrix::pure(&v)
        }
        InitialState::Gibbs => match ctx {
            Some(ctx) => ctx.density(),
            None => Err(SimError::Input(
                "config: gibbs initial state needs beta for this experiment".into(),
            )),
        },
        InitialState::RandomPure => random_pure_state(dim, cfg.seed, 1),
    }
}
