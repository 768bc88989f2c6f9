//! Randomized (qDRIFT-type) product-formula simulation of Lindblad
//! dynamics.
//!
//! An ensemble of single-jump Lindblad terms is sampled independently at
//! each step; the resulting random product of single-term channels
//! approximates the semigroup of the ensemble-averaged generator. Three
//! single-term step implementations are provided: the exact exponential, a
//! Hamiltonian/dissipator Trotter split, and a unitary dilation of the
//! dissipator.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::linalg::{
    expm, hermiticity_defect, identity, kron, partial_trace_ancilla, spectral_norm, vectorize,
    CMat, I, ONE,
};
use crate::lindblad::{DensityMatrix, Lindbladian, Superoperator};
use crate::stream::{domain, stream};

/// Which implementation of the single-term channel `F_tau` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepAlgorithm {
    /// Exact exponential of the single-term generator.
    ExactExp,
    /// Coherent half exactly, then the exact dissipator exponential
    /// (first-order split).
    TrotterSplit,
    /// Coherent half exactly, then a Hamiltonian dilation of the jump run
    /// for time sqrt(tau) with an ancilla traced out. Exactly CPTP.
    DilationHS,
}

/// One ensemble member: an optional Hamiltonian piece and at most one jump.
#[derive(Debug, Clone)]
pub struct LindbladTerm {
    hamiltonian: Option<CMat>,
    jump: Option<CMat>,
    dim: usize,
}

impl LindbladTerm {
    pub fn new(hamiltonian: Option<CMat>, jump: Option<CMat>) -> Result<Self> {
        let lind = Lindbladian::new(hamiltonian, jump.into_iter().collect())?;
        let dim = lind.dim();
        let (h, mut js) = (lind.hamiltonian().cloned(), lind.jumps().to_vec());
        Ok(Self {
            hamiltonian: h,
            jump: js.pop(),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> Option<&CMat> {
        self.hamiltonian.as_ref()
    }

    pub fn jump(&self) -> Option<&CMat> {
        self.jump.as_ref()
    }

    pub fn to_lindbladian(&self) -> Lindbladian {
        Lindbladian::new(
            self.hamiltonian.clone(),
            self.jump.iter().cloned().collect(),
        )
        .expect("term was validated on construction")
    }

    /// Check the declared strength bound: `||H|| <= lambda`, `||V||^2 <= lambda`
    /// in spectral norm.
    fn check_bounds(&self, lambda: f64) -> Result<()> {
        if let Some(h) = &self.hamiltonian {
            let n = spectral_norm(h)?;
            if n > lambda * (1.0 + 1e-12) {
                return Err(SimError::Input(format!(
                    "ensemble bound violated: ||H|| = {n:.6e} > lambda = {lambda:.6e}"
                )));
            }
        }
        if let Some(v) = &self.jump {
            let n = spectral_norm(v)?;
            if n * n > lambda * (1.0 + 1e-12) {
                return Err(SimError::Input(format!(
                    "ensemble bound violated: ||V||^2 = {:.6e} > lambda = {lambda:.6e}",
                    n * n
                )));
            }
        }
        Ok(())
    }
}

/// Declared strength bounds for an ensemble.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    /// Spectral-norm bound: `||H_a|| <= lambda` and `||V_a||^2 <= lambda`.
    pub lambda: f64,
    /// Optional weighted-norm bound entering step-size guards for
    /// finite-temperature targets.
    pub lambda_weighted: Option<f64>,
}

/// Source of random terms that cannot be enumerated, e.g. a continuous
/// random-jump ensemble.
pub trait TermSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut ChaCha12Rng) -> LindbladTerm;
    fn description(&self) -> String;
    /// Superoperator of the ensemble-averaged generator, if known in closed
    /// form.
    fn mean_superoperator(&self) -> Result<Superoperator>;
}

#[derive(Clone)]
pub enum EnsembleVariant {
    Discrete {
        terms: Vec<LindbladTerm>,
        weights: Vec<f64>,
    },
    Sampler(Arc<dyn TermSampler>),
}

impl std::fmt::Debug for EnsembleVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Discrete { terms, weights } => f
                .debug_struct("Discrete")
                .field("terms", &terms.len())
                .field("weights", weights)
                .finish(),
            Self::Sampler(s) => f.debug_tuple("Sampler").field(&s.description()).finish(),
        }
    }
}

/// A sampling ensemble of Lindblad terms with optional strength bounds.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    variant: EnsembleVariant,
    bounds: Option<Bounds>,
    dim: usize,
}

impl EnsembleSpec {
    pub fn discrete(
        terms: Vec<LindbladTerm>,
        weights: Vec<f64>,
        bounds: Option<Bounds>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(SimError::Input("EnsembleSpec: empty term list".into()));
        }
        if terms.len() != weights.len() {
            return Err(SimError::Dimension(
                "EnsembleSpec: weights length differs from term count".into(),
            ));
        }
        let dim = terms[0].dim();
        if terms.iter().any(|t| t.dim() != dim) {
            return Err(SimError::Dimension(
                "EnsembleSpec: mixed term dimensions".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SimError::Input(
                "EnsembleSpec: weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SimError::Input(format!(
                "EnsembleSpec: weights sum to {total}, expected 1"
            )));
        }
        if let Some(b) = &bounds {
            for t in &terms {
                t.check_bounds(b.lambda)?;
            }
        }
        Ok(Self {
            variant: EnsembleVariant::Discrete { terms, weights },
            bounds,
            dim,
        })
    }

    pub fn sampler(sampler: Arc<dyn TermSampler>, bounds: Option<Bounds>) -> Result<Self> {
        let dim = sampler.dim();
        if dim == 0 {
            return Err(SimError::Dimension(
                "EnsembleSpec: sampler reports dimension 0".into(),
            ));
        }
        Ok(Self {
            variant: EnsembleVariant::Sampler(sampler),
            bounds,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }

    pub fn variant(&self) -> &EnsembleVariant {
        &self.variant
    }

    /// Draw one term; for discrete ensembles also returns its index
    /// (inverse-CDF over the weight vector).
    pub fn sample_term(&self, rng: &mut ChaCha12Rng) -> (LindbladTerm, Option<usize>) {
        match &self.variant {
            EnsembleVariant::Discrete { terms, weights } => {
                let idx = sample_index(weights, rng);
                (terms[idx].clone(), Some(idx))
            }
            EnsembleVariant::Sampler(s) => (s.draw(rng), None),
        }
    }

    /// Superoperator of the ensemble-averaged generator.
    pub fn mean_generator(&self) -> Result<Superoperator> {
        match &self.variant {
            EnsembleVariant::Discrete { terms, weights } => {
                let linds: Vec<Lindbladian> = terms.iter().map(|t| t.to_lindbladian()).collect();
                let parts: Vec<(f64, &Lindbladian)> =
                    weights.iter().copied().zip(linds.iter()).collect();
                Lindbladian::mix(&parts)?.superoperator()
            }
            EnsembleVariant::Sampler(s) => s.mean_superoperator(),
        }
    }
}

/// Inverse-CDF sampling from a normalized weight vector. Zero-weight entries
/// are never selected; rounding at the top of the CDF falls back to the last
/// positive-weight index.
fn sample_index(weights: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .expect("validated ensemble has at least one positive weight")
}

/// Exact single-term channel: `rho -> e^{tau L_a} rho`.
pub fn step_exact(term: &LindbladTerm, tau: f64, rho: &CMat) -> Result<CMat> {
    term.to_lindbladian().apply_exp(tau, rho)
}

/// First-order split: coherent half exactly, then the exact dissipator
/// exponential.
pub fn step_trotter(term: &LindbladTerm, tau: f64, rho: &CMat) -> Result<CMat> {
    if tau.is_nan() || tau < 0.0 {
        return Err(SimError::Input(format!(
            "step_trotter: tau = {tau} must be >= 0"
        )));
    }
    let mut state = coherent_half(term, tau, rho)?;
    if let Some(v) = term.jump() {
        let diss = Lindbladian::new(None, vec![v.clone()])?;
        state = diss.apply_exp(tau, &state)?;
    }
    Ok(state)
}

/// Dilation step: coherent half exactly; the jump implemented by evolving
/// `[[0, V^dag], [V, 0]]` on an ancilla-extended space for time sqrt(tau)
/// and tracing the ancilla out. Exactly CPTP by construction.
pub fn step_dilation(term: &LindbladTerm, tau: f64, rho: &CMat) -> Result<CMat> {
    if tau.is_nan() || tau < 0.0 {
        return Err(SimError::Input(format!(
            "step_dilation: tau = {tau} must be >= 0"
        )));
    }
    let state = coherent_half(term, tau, rho)?;
    match term.jump() {
        Some(v) => {
            let w = dilation_unitary(v, tau)?;
            apply_dilation(&w, &state)
        }
        None => Ok(state),
    }
}

fn coherent_half(term: &LindbladTerm, tau: f64, rho: &CMat) -> Result<CMat> {
    match term.hamiltonian() {
        Some(h) => {
            let u = expm(&h.scale(tau).map(|z| z * (-I)))?;
            Ok(&u * rho * u.adjoint())
        }
        None => Ok(rho.clone()),
    }
}

/// `W = exp(-i sqrt(tau) [[0, V^dag], [V, 0]])` with the ancilla as the
/// slow (first) tensor factor.
fn dilation_unitary(v: &CMat, tau: f64) -> Result<CMat> {
    let n = v.nrows();
    let mut vt = CMat::zeros(2 * n, 2 * n);
    vt.view_mut((0, n), (n, n)).copy_from(&v.adjoint());
    vt.view_mut((n, 0), (n, n)).copy_from(v);
    expm(&vt.scale(tau.sqrt()).map(|z| z * (-I)))
}

fn apply_dilation(w: &CMat, rho: &CMat) -> Result<CMat> {
    let n = rho.nrows();
    let mut ext = CMat::zeros(2 * n, 2 * n);
    ext.view_mut((0, 0), (n, n)).copy_from(rho);
    partial_trace_ancilla(&(w * ext * w.adjoint()))
}

/// Dense superoperator of the single-term channel `F_tau` for a given
/// algorithm.
pub fn term_step_superop(term: &LindbladTerm, alg: StepAlgorithm, tau: f64) -> Result<CMat> {
    if tau.is_nan() || tau < 0.0 {
        return Err(SimError::Input(format!(
            "term_step_superop: tau = {tau} must be >= 0"
        )));
    }
    let n = term.dim();
    let coherent = match term.hamiltonian() {
        Some(h) => {
            let u = expm(&h.scale(tau).map(|z| z * (-I)))?;
            kron(&u.map(|z| z.conj()), &u)?
        }
        None => identity(n * n),
    };
    match alg {
        StepAlgorithm::ExactExp => {
            let l = term.to_lindbladian().superoperator()?;
            expm(&l.mat().scale(tau))
        }
        StepAlgorithm::TrotterSplit => match term.jump() {
            Some(v) => {
                let diss = Lindbladian::new(None, vec![v.clone()])?.superoperator()?;
                Ok(expm(&diss.mat().scale(tau))? * coherent)
            }
            None => Ok(coherent),
        },
        StepAlgorithm::DilationHS => match term.jump() {
            Some(v) => {
                let w = dilation_unitary(v, tau)?;
                let mut s = CMat::zeros(n * n, n * n);
                for l in 0..n {
                    for k in 0..n {
                        let mut e = CMat::zeros(n, n);
                        e[(k, l)] = ONE;
                        let out = apply_dilation(&w, &e)?;
                        s.column_mut(l * n + k).copy_from(&vectorize(&out));
                    }
                }
                Ok(s * coherent)
            }
            None => Ok(coherent),
        },
    }
}

/// Reusable stepping machine: precomputes per-term channels for discrete
/// ensembles so trajectory steps reduce to a matrix-vector product.
pub struct Stepper {
    kind: StepperKind,
    alg: StepAlgorithm,
    tau: f64,
    dim: usize,
}

enum StepperKind {
    Discrete {
        superops: Vec<CMat>,
        weights: Vec<f64>,
    },
    Sampler(Arc<dyn TermSampler>),
}

impl Stepper {
    pub fn new(ensemble: &EnsembleSpec, alg: StepAlgorithm, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(SimError::Input(format!(
                "Stepper: tau = {tau} must be finite and >= 0"
            )));
        }
        if let Some(b) = ensemble.bounds() {
            if b.lambda > 0.0 && tau > 0.5 / b.lambda {
                log::warn!(
                    "step size tau = {tau:.3e} exceeds 0.5/lambda = {:.3e}; \
                     truncation bounds degrade",
                    0.5 / b.lambda
                );
            }
        }
        let kind = match ensemble.variant() {
            EnsembleVariant::Discrete { terms, weights } => {
                let superops = terms
                    .iter()
                    .map(|t| term_step_superop(t, alg, tau))
                    .collect::<Result<Vec<_>>>()?;
                StepperKind::Discrete {
                    superops,
                    weights: weights.clone(),
                }
            }
            EnsembleVariant::Sampler(s) => StepperKind::Sampler(Arc::clone(s)),
        };
        Ok(Self {
            kind,
            alg,
            tau,
            dim: ensemble.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advance the state by one sampled step. Returns the term index for
    /// discrete ensembles.
    pub fn step(&self, rng: &mut ChaCha12Rng, rho: &CMat) -> Result<(CMat, Option<usize>)> {
        match &self.kind {
            StepperKind::Discrete { superops, weights } => {
                let idx = sample_index(weights, rng);
                let out = &superops[idx] * vectorize(rho);
                Ok((crate::linalg::devectorize(&out)?, Some(idx)))
            }
            StepperKind::Sampler(s) => {
                let term = s.draw(rng);
                let out = match self.alg {
                    StepAlgorithm::ExactExp => step_exact(&term, self.tau, rho)?,
                    StepAlgorithm::TrotterSplit => step_trotter(&term, self.tau, rho)?,
                    StepAlgorithm::DilationHS => step_dilation(&term, self.tau, rho)?,
                };
                Ok((out, None))
            }
        }
    }

    /// Weighted average of the per-term step channels (discrete only).
    pub fn average_superop(&self) -> Result<Superoperator> {
        match &self.kind {
            StepperKind::Discrete { superops, weights } => {
                let mut acc = CMat::zeros(self.dim * self.dim, self.dim * self.dim);
                for (s, w) in superops.iter().zip(weights) {
                    acc += s.scale(*w);
                }
                Superoperator::new(acc)
            }
            StepperKind::Sampler(_) => Err(SimError::Input(
                "average_superop: sampler ensembles have no enumerable average; \
                 use mc_average_channel"
                    .into(),
            )),
        }
    }

    /// Run one trajectory of `m` sampled steps from `rho0`.
    ///
    /// Step `k` of trajectory `id` draws from the dedicated stream
    /// `(seed, TRAJECTORY, id, k)`, so trajectories are reproducible and
    /// independent of scheduling. State invariants (trace, Hermiticity) are
    /// monitored at every step and violations beyond 1e-6 abort.
    pub fn run_trajectory(
        &self,
        m: u64,
        rho0: &DensityMatrix,
        seed: u64,
        trajectory_id: u64,
        snapshot_every: Option<u64>,
    ) -> Result<TrajectoryRecord> {
        if rho0.dim() != self.dim {
            return Err(SimError::Dimension(
                "run_trajectory: state dimension mismatch".into(),
            ));
        }
        let mut rho = rho0.matrix().clone();
        let mut indices: Option<Vec<usize>> = match self.kind {
            StepperKind::Discrete { .. } => Some(Vec::with_capacity(m as usize)),
            StepperKind::Sampler(_) => None,
        };
        let mut snapshots = Vec::new();
        for k in 0..m {
            let mut rng = stream(seed, domain::TRAJECTORY, trajectory_id, k);
            let (next, idx) = self.step(&mut rng, &rho)?;
            rho = next;
            if let (Some(list), Some(i)) = (indices.as_mut(), idx) {
                list.push(i);
            }
            let trace_defect = (rho.trace() - ONE).norm();
            let herm_defect = hermiticity_defect(&rho);
            if trace_defect > 1e-6 || herm_defect > 1e-6 {
                return Err(SimError::Range(format!(
                    "trajectory {trajectory_id} step {k}: state invariants violated \
                     (trace defect {trace_defect:.3e}, hermiticity defect {herm_defect:.3e})"
                )));
            }
            if let Some(every) = snapshot_every {
                if every > 0 && (k + 1) % every == 0 {
                    snapshots.push((k + 1, rho.clone()));
                }
            }
        }
        let final_state = DensityMatrix::with_tolerance(rho, 1e-8)?;
        Ok(TrajectoryRecord {
            seed,
            trajectory_id,
            term_indices: indices,
            snapshots,
            final_state,
        })
    }
}

/// Output of one randomized trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub trajectory_id: u64,
    /// Sampled term indices (discrete ensembles only; sampler draws are
    /// reproducible from the per-step streams).
    pub term_indices: Option<Vec<usize>>,
    /// `(step, state)` pairs recorded every `snapshot_every` steps.
    pub snapshots: Vec<(u64, CMat)>,
    pub final_state: DensityMatrix,
}

/// One trajectory from an ensemble spec (convenience wrapper that builds a
/// fresh [`Stepper`]).
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory(
    ensemble: &EnsembleSpec,
    alg: StepAlgorithm,
    tau: f64,
    m: u64,
    rho0: &DensityMatrix,
    seed: u64,
    trajectory_id: u64,
    snapshot_every: Option<u64>,
) -> Result<TrajectoryRecord> {
    Stepper::new(ensemble, alg, tau)?.run_trajectory(m, rho0, seed, trajectory_id, snapshot_every)
}

/// Weighted average of single-step channels for a discrete ensemble.
pub fn average_step_superop(
    ensemble: &EnsembleSpec,
    alg: StepAlgorithm,
    tau: f64,
) -> Result<Superoperator> {
    Stepper::new(ensemble, alg, tau)?.average_superop()
}

/// `(average step)^M` by repeated squaring.
pub fn average_channel_power(
    ensemble: &EnsembleSpec,
    alg: StepAlgorithm,
    tau: f64,
    m: u64,
) -> Result<Superoperator> {
    Ok(average_step_superop(ensemble, alg, tau)?.pow(m))
}

/// Monte Carlo estimate of the average channel applied to a state.
#[derive(Debug, Clone)]
pub struct McAverage {
    pub mean: DensityMatrix,
    /// Per-entry standard error of the mean (complex deviations folded into
    /// one real magnitude per entry).
    pub entry_se: nalgebra::DMatrix<f64>,
    /// Frobenius aggregate of the per-entry standard errors.
    pub se_frobenius: f64,
}

/// Mean of `n_traj` independent trajectory finals with a standard-error
/// estimate. Trajectories fan out across the thread pool and are reduced in
/// trajectory-id order, so results do not depend on scheduling.
pub fn mc_average_channel(
    ensemble: &EnsembleSpec,
    alg: StepAlgorithm,
    tau: f64,
    m: u64,
    rho0: &DensityMatrix,
    n_traj: u64,
    seed: u64,
) -> Result<McAverage> {
    if n_traj < 2 {
        return Err(SimError::Input(
            "mc_average_channel: need n_traj >= 2".into(),
        ));
    }
    let stepper = Stepper::new(ensemble, alg, tau)?;
    let finals: Vec<CMat> = (0..n_traj)
        .into_par_iter()
        .map(|id| {
            stepper
                .run_trajectory(m, rho0, seed, id, None)
                .map(|r| r.final_state.into_matrix())
        })
        .collect::<Result<Vec<_>>>()?;

    let n = ensemble.dim();
    let mut mean = CMat::zeros(n, n);
    for f in &finals {
        mean += f;
    }
    mean /= num_complex::Complex64::new(n_traj as f64, 0.0);

    let mut var = nalgebra::DMatrix::<f64>::zeros(n, n);
    for f in &finals {
        let d = f - &mean;
        var.zip_apply(&d, |v, z| *v += z.norm_sqr());
    }
    let entry_se = var.map(|v| (v / ((n_traj - 1) as f64 * n_traj as f64)).sqrt());
    let se_frobenius = entry_se.iter().map(|s| s * s).sum::<f64>().sqrt();

    Ok(McAverage {
        mean: DensityMatrix::with_tolerance(mean, 1e-8)?,
        entry_se,
        se_frobenius,
    })
}
