//! Test Hamiltonians and spectral-density diagnostics: random Pauli-string
//! sums, nearest-neighbor spin chains, empirical spectral CDFs, and the
//! semicircle law.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, SimError};
use crate::linalg::CMat;
use num_complex::Complex64;

/// Dense realizations are capped at 2^12 = 4096 dimensions.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

/// A signed n-qubit Pauli string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    pub letters: Vec<PauliLetter>,
    pub sign: i8,
}

impl PauliString {
    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|l| *l == PauliLetter::I)
    }

    /// Add `coeff * P` to a dense accumulator. Each string is a generalized
    /// permutation: column `b` holds a single entry at row `b ^ flip_mask`.
    fn accumulate(&self, coeff: f64, into: &mut CMat) {
        let n = self.n_qubits();
        let dim = 1usize << n;
        let mut flip_mask = 0usize;
        for (k, l) in self.letters.iter().enumerate() {
            if matches!(l, PauliLetter::X | PauliLetter::Y) {
                flip_mask |= 1 << k;
            }
        }
        for col in 0..dim {
            let mut phase = Complex64::new(coeff * self.sign as f64, 0.0);
            for (k, l) in self.letters.iter().enumerate() {
                let bit = col >> k & 1;
                match l {
                    PauliLetter::I | PauliLetter::X => {}
                    PauliLetter::Z => {
                        if bit == 1 {
                            phase = -phase;
                        }
                    }
                    PauliLetter::Y => {
                        // Y|0> = i|1>, Y|1> = -i|0>.
                        phase *= if bit == 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        };
                    }
                }
            }
            into[(col ^ flip_mask, col)] += phase;
        }
    }

    /// Dense matrix of the signed string.
    pub fn dense(&self) -> Result<CMat> {
        if self.n_qubits() > MAX_QUBITS {
            return Err(SimError::Dimension(format!(
                "PauliString: {} qubits exceeds the dense cap of {MAX_QUBITS}",
                self.n_qubits()
            )));
        }
        let dim = 1usize << self.n_qubits();
        let mut m = CMat::zeros(dim, dim);
        self.accumulate(1.0, &mut m);
        Ok(m)
    }
}

/// `H = sum_j (r_j / sqrt(m)) P_j` with `P_j` iid uniform over all 4^n
/// strings (the all-identity string included) and `r_j` iid +-1 signs.
/// Returns the dense matrix and the sampled strings for reproducibility.
pub fn pauli_string_hamiltonian(
    n: usize,
    m: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(CMat, Vec<PauliString>)> {
    if n == 0 || n > MAX_QUBITS {
        return Err(SimError::Dimension(format!(
            "pauli_string_hamiltonian: need 1 <= n <= {MAX_QUBITS}, got {n}"
        )));
    }
    if m == 0 {
        return Err(SimError::Input(
            "pauli_string_hamiltonian: need m >= 1".into(),
        ));
    }
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    let scale = 1.0 / (m as f64).sqrt();
    let mut strings = Vec::with_capacity(m);
    for _ in 0..m {
        let letters: Vec<PauliLetter> = (0..n)
            .map(|_| match rng.random_range(0u8..4) {
                0 => PauliLetter::I,
                1 => PauliLetter::X,
                2 => PauliLetter::Y,
                _ => PauliLetter::Z,
            })
            .collect();
        let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let s = PauliString { letters, sign };
        s.accumulate(scale, &mut h);
        strings.push(s);
    }
    Ok((h, strings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinChainKind {
    /// `H = J sum Z_k Z_{k+1} + g sum X_k`.
    Tfim,
    /// `H = J sum (X_k X_{k+1} + Y_k Y_{k+1} + Z_k Z_{k+1})`.
    Heisenberg,
}

/// Nearest-neighbor chain with open boundaries.
pub fn spin_chain_hamiltonian(kind: SpinChainKind, n: usize, j: f64, g: f64) -> Result<CMat> {
    if n == 0 || n > MAX_QUBITS {
        return Err(SimError::Dimension(format!(
            "spin_chain_hamiltonian: need 1 <= n <= {MAX_QUBITS}, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    let string_with = |positions: &[(usize, PauliLetter)]| {
        let mut letters = vec![PauliLetter::I; n];
        for (k, l) in positions {
            letters[*k] = *l;
        }
        PauliString { letters, sign: 1 }
    };
    match kind {
        SpinChainKind::Tfim => {
            for k in 0..n.saturating_sub(1) {
                string_with(&[(k, PauliLetter::Z), (k + 1, PauliLetter::Z)]).accumulate(j, &mut h);
            }
            for k in 0..n {
                string_with(&[(k, PauliLetter::X)]).accumulate(g, &mut h);
            }
        }
        SpinChainKind::Heisenberg => {
            for k in 0..n.saturating_sub(1) {
                for l in [PauliLetter::X, PauliLetter::Y, PauliLetter::Z] {
                    string_with(&[(k, l), (k + 1, l)]).accumulate(j, &mut h);
                }
            }
        }
    }
    Ok(h)
}

/// Empirical CDF of a spectrum.
#[derive(Debug, Clone)]
pub struct SpectralCdf {
    sorted: Vec<f64>,
}

impl SpectralCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SimError::Input("SpectralCdf: empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Input("SpectralCdf: non-finite eigenvalue".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of eigenvalues `<= x` (right-continuous).
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|v| *v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Kolmogorov-Smirnov distance to a reference CDF, evaluated at the jump
    /// points from both sides.
    pub fn ks_distance(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut worst = 0.0f64;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = reference(x);
            worst = worst.max((f - i as f64 / n).abs());
            worst = worst.max(((i + 1) as f64 / n - f).abs());
        }
        worst
    }
}

/// CDF of the semicircle density `sqrt(4 - x^2) / (2 pi)` supported on
/// `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI)
            + (x / 2.0).asin() / std::f64::consts::PI
    }
}

/// Fraction of eigenvalues within `1/beta` of the bottom of the spectrum;
/// 1 by convention when `beta <= 0` (the window is infinite).
pub fn low_energy_fraction(values: &[f64], beta: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if beta <= 0.0 {
        return 1.0;
    }
    let lambda_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = lambda_min + 1.0 / beta;
    values.iter().filter(|&&l| l <= cutoff).count() as f64 / values.len() as f64
}
