//! Random-jump thermalization toward a Gibbs state.
//!
//! A random Hermitian involution `A` is filtered in the Hamiltonian
//! eigenbasis by a square-root detailed-balance weight, giving a random jump
//! operator `K`. The ensemble average of the resulting single-jump
//! generators is an explicit Davies-type generator that is block diagonal in
//! the eigenbasis: populations follow a classical master equation and each
//! coherence decays at an explicit rate. This module provides the samplers,
//! the analytic average, the classical-chain reductions, and spectral-gap
//! certificates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, SimError};
use crate::linalg::{haar_unitary, kron, CMat, HermEig, ONE};
use crate::lindblad::{Lindbladian, Superoperator};
use crate::qdrift::{LindbladTerm, TermSampler};
use crate::stream::{domain, stream};

/// Detailed-balance weight `gamma(omega)` evaluated on Bohr frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `min(1, e^{-beta omega})`.
    Metropolis,
    /// `1 / (1 + e^{beta omega})`.
    Glauber,
    /// `gamma == 0`: every jump is annihilated and the generator vanishes.
    Zero,
}

#[derive(Debug, Clone, Copy)]
pub struct WeightFunction {
    kind: WeightKind,
    beta: f64,
}

impl WeightFunction {
    pub fn new(kind: WeightKind, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(SimError::Input(format!(
                "WeightFunction: beta = {beta} must be finite and >= 0"
            )));
        }
        Ok(Self { kind, beta })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, omega: f64) -> f64 {
        match self.kind {
            WeightKind::Metropolis => (-self.beta * omega).exp().min(1.0),
            WeightKind::Glauber => 1.0 / (1.0 + (self.beta * omega).exp()),
            WeightKind::Zero => 0.0,
        }
    }
}

/// How the random involution `A = U D U^dag` gets its signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignVariant {
    /// `D` has iid uniform +-1 diagonal entries.
    HaarConjugatedSigns,
    /// `D = (x)_k diag(1, eps_k)` with iid +-1 `eps_k` per qubit; requires a
    /// power-of-two dimension.
    PerQubitPhaseSigns,
}

/// Draw a random Hermitian involution `A = U D U^dag` with `U` Haar and `D`
/// a +-1 diagonal per the variant. The unitary is drawn before the signs, so
/// a given stream position always yields the same sample.
pub fn sample_a(variant: SignVariant, dim: usize, rng: &mut ChaCha12Rng) -> Result<CMat> {
    if dim == 0 {
        return Err(SimError::Dimension("sample_a: dimension 0".into()));
    }
    let u = haar_unitary(dim, rng);
    let signs: Vec<f64> = match variant {
        SignVariant::HaarConjugatedSigns => (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
        SignVariant::PerQubitPhaseSigns => {
            if !dim.is_power_of_two() {
                return Err(SimError::Dimension(format!(
                    "sample_a: per-qubit signs need a power-of-two dimension, got {dim}"
                )));
            }
            let n_qubits = dim.trailing_zeros();
            let eps: Vec<f64> = (0..n_qubits)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            (0..dim)
                .map(|b| {
                    (0..n_qubits)
                        .filter(|k| b >> k & 1 == 1)
                        .map(|k| eps[k as usize])
                        .product()
                })
                .collect()
        }
    };
    let mut scaled = u.clone();
    for (c, s) in signs.iter().enumerate() {
        scaled.column_mut(c).scale_mut(*s);
    }
    Ok(&scaled * u.adjoint())
}

/// Filter a Hermitian `A` into a jump operator in the Hamiltonian eigenbasis:
/// `K_ij = sqrt(gamma(lambda_i - lambda_j)) <psi_i|A|psi_j>`, rotated back to
/// the computational basis. Entries with `lambda_i < lambda_j` (downward
/// transitions) keep full weight.
pub fn build_jump_k(a: &CMat, eig: &HermEig, gamma: &WeightFunction) -> Result<CMat> {
    let n = eig.values.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(SimError::Dimension(
            "build_jump_k: dimension mismatch".into(),
        ));
    }
    let mut k_eig = eig.to_eigenbasis(a);
    for i in 0..n {
        for j in 0..n {
            let w = gamma.eval(eig.values[i] - eig.values[j]).sqrt();
            k_eig[(i, j)] *= w;
        }
    }
    Ok(eig.from_eigenbasis(&k_eig))
}

/// Classical generator on populations: `Q_ki = sigma2 gamma(lambda_k -
/// lambda_i)` for `k != i` (rate of `i -> k`), diagonal fixed so columns sum
/// to zero. Acts on probability column vectors.
pub fn pauli_master_matrix(values: &[f64], gamma: &WeightFunction, sigma2: f64) -> DMatrix<f64> {
    let n = values.len();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut out = 0.0;
        for k in 0..n {
            if k != i {
                let rate = sigma2 * gamma.eval(values[k] - values[i]);
                q[(k, i)] = rate;
                out += rate;
            }
        }
        q[(i, i)] = -out;
    }
    q
}

/// Decay rate of the coherence `|psi_i><psi_j|` under the averaged random-
/// jump generator: `sigma2/2 sum_k (gamma(lambda_k - lambda_i) +
/// gamma(lambda_k - lambda_j))`, sum over all `k` including `i` and `j`.
pub fn coherence_decay_rate(
    i: usize,
    j: usize,
    values: &[f64],
    gamma: &WeightFunction,
    sigma2: f64,
) -> Result<f64> {
    if i == j {
        return Err(SimError::Input("coherence_decay_rate: need i != j".into()));
    }
    if i >= values.len() || j >= values.len() {
        return Err(SimError::Dimension(
            "coherence_decay_rate: index out of range".into(),
        ));
    }
    Ok(coherence_rate_unchecked(i, j, values, gamma, sigma2, true))
}

fn coherence_rate_unchecked(
    i: usize,
    j: usize,
    values: &[f64],
    gamma: &WeightFunction,
    sigma2: f64,
    include_self: bool,
) -> f64 {
    let mut sum = 0.0;
    for (k, &lk) in values.iter().enumerate() {
        if include_self || k != i {
            sum += gamma.eval(lk - values[i]);
        }
        if include_self || k != j {
            sum += gamma.eval(lk - values[j]);
        }
    }
    0.5 * sigma2 * sum
}

/// The ensemble-averaged random-jump generator, assembled from its block
/// structure in the Hamiltonian eigenbasis and rotated to the computational
/// basis.
///
/// With `include_self = true` the coherence sums run over all `k`; this is
/// the exact mean of the sampled single-jump generators when the involution
/// moments are the Haar ones (`E|A_ij|^2 = sigma2 = 1/(N+1)` off diagonal,
/// `E|A_ii|^2 = 2 sigma2`, `E A_ii conj(A_jj) = sigma2`): the diagonal-moment
/// excess exactly supplies the `k = i, j` terms. With `include_self = false`
/// the self terms are dropped, which corresponds to involutions with zero
/// diagonal moments; the two variants differ by `gamma(0) sigma2` on every
/// coherence rate.
pub fn analytic_davies(
    eig: &HermEig,
    gamma: &WeightFunction,
    sigma2: f64,
    include_self: bool,
) -> Result<Superoperator> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(SimError::Input(format!(
            "analytic_davies: sigma2 = {sigma2} must be > 0"
        )));
    }
    let n = eig.values.len();
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let q = pauli_master_matrix(&values, gamma, sigma2);
    let mut s_eig = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            s_eig[(k * n + k, i * n + i)] = q[(k, i)] * ONE;
        }
    }
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let rate = coherence_rate_unchecked(i, j, &values, gamma, sigma2, include_self);
                s_eig[(j * n + i, j * n + i)] = -rate * ONE;
            }
        }
    }
    let w = kron(&eig.vectors.map(|z| z.conj()), &eig.vectors)?;
    Superoperator::new(&w * s_eig * w.adjoint())
}

/// Reversible Metropolis-Hastings chain on the spectrum with uniform
/// proposals: `p_ij = min(1, e^{-beta(lambda_j - lambda_i)}) / (2N)` for
/// `i != j`.
#[derive(Debug, Clone)]
pub struct ClassicalChain {
    /// Row-stochastic transition matrix (row i = from state i).
    pub transition: DMatrix<f64>,
    /// Stationary Gibbs distribution over the spectrum.
    pub pi: DVector<f64>,
}

pub fn mh_chain(values: &[f64], beta: f64) -> Result<ClassicalChain> {
    if values.is_empty() {
        return Err(SimError::Input("mh_chain: empty spectrum".into()));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(SimError::Input(format!(
            "mh_chain: beta = {beta} must be finite and >= 0"
        )));
    }
    let n = values.len();
    let lambda_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = values
        .iter()
        .map(|&l| (-beta * (l - lambda_min)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let pi = DVector::from_iterator(n, weights.iter().map(|w| w / z));

    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j {
                let accept = (-beta * (values[j] - values[i])).exp().min(1.0);
                p[(i, j)] = accept / (2.0 * n as f64);
                off += p[(i, j)];
            }
        }
        p[(i, i)] = 1.0 - off;
    }
    Ok(ClassicalChain { transition: p, pi })
}

impl ClassicalChain {
    /// Max row-sum deviation from 1.
    pub fn row_sum_defect(&self) -> f64 {
        (0..self.transition.nrows())
            .map(|i| (self.transition.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Max deviation of `pi_i p_ij - pi_j p_ji` over pairs.
    pub fn reversibility_defect(&self) -> f64 {
        let n = self.transition.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = (self.pi[i] * self.transition[(i, j)]
                    - self.pi[j] * self.transition[(j, i)])
                    .abs();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Sorted-ascending eigenvalues of the symmetrized form of a reversible
/// stochastic matrix or generator.
fn symmetrized_spectrum(m: &DMatrix<f64>, pi: &DVector<f64>, negate: bool) -> Vec<f64> {
    let n = m.nrows();
    let s = DMatrix::from_fn(n, n, |a, b| {
        let v = m[(a, b)] * (pi[b] / pi[a]).sqrt();
        if negate {
            -v
        } else {
            v
        }
    });
    let sym = (&s + s.transpose()).scale(0.5);
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    eigs
}

/// Chain-level gap diagnostics for a spectrum at inverse temperature beta.
#[derive(Debug, Clone)]
pub struct GapBounds {
    /// `(1/N) sum_i e^{-beta(lambda_i - lambda_min)}`.
    pub alpha: f64,
    /// `min_{i != j} p_ij / pi_j`, the classical comparison bound.
    pub min_ratio: f64,
    /// `1 -` second-largest eigenvalue of the symmetrized transition matrix.
    pub exact_chain_gap: f64,
}

pub fn gap_bounds(values: &[f64], beta: f64) -> Result<GapBounds> {
    let chain = mh_chain(values, beta)?;
    let n = values.len();
    let lambda_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha = values
        .iter()
        .map(|&l| (-beta * (l - lambda_min)).exp())
        .sum::<f64>()
        / n as f64;

    let mut min_ratio = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                min_ratio = min_ratio.min(chain.transition[(i, j)] / chain.pi[j]);
            }
        }
    }
    if n == 1 {
        min_ratio = 0.0;
    }

    // The transition matrix is row-stochastic; its reversible symmetrization
    // is the transpose-direction similarity, i.e. the column convention used
    // by `symmetrized_spectrum` applied to the transpose.
    let eigs = symmetrized_spectrum(&chain.transition.transpose(), &chain.pi, false);
    // Largest eigenvalue is 1; the gap is measured from the second largest.
    let exact_chain_gap = if n > 1 { 1.0 - eigs[n - 2] } else { 0.0 };
    Ok(GapBounds {
        alpha,
        min_ratio,
        exact_chain_gap,
    })
}

/// Gap certificate for the averaged random-jump generator, computed from its
/// eigenbasis block structure (an N-dimensional classical eigenproblem plus
/// an O(N^2) minimum over coherence rates — no superoperator assembly).
#[derive(Debug, Clone)]
pub struct GapCertificate {
    /// Spectral gap of the averaged generator.
    pub exact_gap: f64,
    /// `alpha` scaled by `sigma2 N`; equals `alpha` under the `sigma2 = 1/N`
    /// normalization.
    pub lower_bound: f64,
    /// Fraction of eigenvalues within `1/beta` of the bottom of the spectrum
    /// (1 by convention at beta = 0).
    pub low_energy_fraction: f64,
    /// Gap of the classical population block alone.
    pub classical_gap: f64,
    /// Smallest coherence decay rate.
    pub min_coherence_rate: f64,
}

pub fn davies_gap_certificate(
    values: &[f64],
    gamma: &WeightFunction,
    sigma2: f64,
) -> Result<GapCertificate> {
    if values.len() < 2 {
        return Err(SimError::Input(
            "davies_gap_certificate: need at least 2 levels".into(),
        ));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(SimError::Input(format!(
            "davies_gap_certificate: sigma2 = {sigma2} must be > 0"
        )));
    }
    let n = values.len();
    let beta = gamma.beta();
    let q = pauli_master_matrix(values, gamma, sigma2);
    let lambda_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = values
        .iter()
        .map(|&l| (-beta * (l - lambda_min)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let pi = DVector::from_iterator(n, weights.iter().map(|w| w / z));

    let eigs = symmetrized_spectrum(&q, &pi, true);
    let classical_gap = eigs[1];

    // rate(i, j) = sigma2/2 * (R_i + R_j) with R_i = sum_k gamma(lambda_k - lambda_i),
    // so the minimum over pairs is attained by the two smallest per-level sums.
    let mut level_sums: Vec<f64> = values
        .iter()
        .map(|&li| values.iter().map(|&lk| gamma.eval(lk - li)).sum())
        .collect();
    level_sums.sort_by(|a, b| a.total_cmp(b));
    let min_coherence_rate = 0.5 * sigma2 * (level_sums[0] + level_sums[1]);

    let alpha = weights.iter().sum::<f64>() / n as f64;
    Ok(GapCertificate {
        exact_gap: classical_gap.min(min_coherence_rate),
        lower_bound: alpha * sigma2 * n as f64,
        low_energy_fraction: crate::hamiltonians::low_energy_fraction(values, beta),
        classical_gap,
        min_coherence_rate,
    })
}

/// Random-jump term source: each draw is one filtered involution.
pub struct RandomJumpSampler {
    variant: SignVariant,
    eig: HermEig,
    gamma: WeightFunction,
    sigma2_empirical: f64,
}

impl RandomJumpSampler {
    /// `sigma2_empirical` starts at the exact Haar value `1/(N+1)`; call
    /// [`Self::calibrate`] to replace it with a sampled estimate.
    pub fn new(variant: SignVariant, eig: HermEig, gamma: WeightFunction) -> Result<Self> {
        let n = eig.values.len();
        if n == 0 {
            return Err(SimError::Dimension(
                "RandomJumpSampler: empty spectrum".into(),
            ));
        }
        if matches!(variant, SignVariant::PerQubitPhaseSigns) && !n.is_power_of_two() {
            return Err(SimError::Dimension(
                "RandomJumpSampler: per-qubit signs need a power-of-two dimension".into(),
            ));
        }
        Ok(Self {
            variant,
            eig,
            gamma,
            sigma2_empirical: 1.0 / (n as f64 + 1.0),
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2_empirical
    }

    pub fn gamma(&self) -> &WeightFunction {
        &self.gamma
    }

    pub fn eig(&self) -> &HermEig {
        &self.eig
    }

    /// Estimate `E|A_01|^2` over `n_samples` draws and store it. Fails if the
    /// estimate leaves the `[0.1/N, 10/N]` plausibility band.
    pub fn calibrate(&mut self, n_samples: u64, seed: u64) -> Result<f64> {
        if n_samples == 0 {
            return Err(SimError::Input(
                "calibrate: need at least one sample".into(),
            ));
        }
        let n = self.eig.values.len();
        let mut acc = 0.0;
        for s in 0..n_samples {
            let mut rng = stream(seed, domain::SPECTRUM, s, 0);
            let a = sample_a(self.variant, n, &mut rng)?;
            acc += a[(0, 1.min(n - 1))].norm_sqr();
        }
        let est = acc / n_samples as f64;
        let band = (0.1 / n as f64, 10.0 / n as f64);
        if est < band.0 || est > band.1 {
            return Err(SimError::Range(format!(
                "calibrate: estimate {est:.3e} outside plausibility band [{:.3e}, {:.3e}]",
                band.0, band.1
            )));
        }
        self.sigma2_empirical = est;
        Ok(est)
    }
}

impl TermSampler for RandomJumpSampler {
    fn dim(&self) -> usize {
        self.eig.values.len()
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> LindbladTerm {
        let a = sample_a(self.variant, self.dim(), rng)
            .expect("sampler dimension validated on construction");
        let k =
            build_jump_k(&a, &self.eig, &self.gamma).expect("dimensions validated on construction");
        LindbladTerm::new(None, Some(k)).expect("jump term construction cannot fail")
    }

    fn description(&self) -> String {
        format!(
            "random-jump ensemble ({:?}, {:?}, beta = {}, sigma2 = {:.6e})",
            self.variant,
            self.gamma.kind(),
            self.gamma.beta(),
            self.sigma2_empirical
        )
    }

    fn mean_superoperator(&self) -> Result<Superoperator> {
        analytic_davies(&self.eig, &self.gamma, self.sigma2_empirical, true)
    }
}

/// Superoperator of the single-jump generator built from one sampled `K`.
pub fn jump_generator_superop(k: &CMat) -> Result<Superoperator> {
    Lindbladian::new(None, vec![k.clone()])?.superoperator()
}
