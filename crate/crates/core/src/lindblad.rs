//! Lindblad generators in GKSL form, their superoperator lift, exact
//! propagators, and channel validity checks.
//!
//! The generator is `L(rho) = -i[H, rho] + sum_j (V_j rho V_j^dag
//! - {V_j^dag V_j, rho}/2)`. Its matrix in the column-stacking vectorization
//! is `-i(I ⊗ H - H^T ⊗ I) + sum_j (conj(V_j) ⊗ V_j - I ⊗ (V_j^dag V_j)/2
//! - (V_j^dag V_j)^T ⊗ I / 2)`.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::linalg::{
    devectorize, expm, herm_eig, hermiticity_defect, identity, kron, require_square_finite,
    vectorize, CMat, CVec, I,
};

/// Largest system dimension for which dense superoperators are built.
pub const MAX_SUPEROP_DIM: usize = 1 << 6;

/// A GKSL generator: optional Hamiltonian plus any number of jump operators.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    hamiltonian: Option<CMat>,
    jumps: Vec<CMat>,
    dim: usize,
}

impl Lindbladian {
    pub fn new(hamiltonian: Option<CMat>, jumps: Vec<CMat>) -> Result<Self> {
        let dim = hamiltonian
            .as_ref()
            .map(|h| h.nrows())
            .or_else(|| jumps.first().map(|v| v.nrows()))
            .ok_or_else(|| SimError::Input("Lindbladian: no Hamiltonian and no jumps".into()))?;
        if let Some(h) = &hamiltonian {
            require_square_finite(h, "Lindbladian Hamiltonian")?;
            let scale = h.norm().max(1.0);
            if hermiticity_defect(h) > 1e-10 * scale {
                return Err(SimError::Input(
                    "Lindbladian: Hamiltonian is not Hermitian".into(),
                ));
            }
            if h.nrows() != dim {
                return Err(SimError::Dimension(
                    "Lindbladian: Hamiltonian dimension mismatch".into(),
                ));
            }
        }
        for v in &jumps {
            require_square_finite(v, "Lindbladian jump")?;
            if v.nrows() != dim {
                return Err(SimError::Dimension(
                    "Lindbladian: jump dimension mismatch".into(),
                ));
            }
        }
        Ok(Self {
            hamiltonian,
            jumps,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> Option<&CMat> {
        self.hamiltonian.as_ref()
    }

    pub fn jumps(&self) -> &[CMat] {
        &self.jumps
    }

    /// Convex combination of generators: weights scale Hamiltonians linearly
    /// and enter jumps as sqrt(w) V.
    pub fn mix(parts: &[(f64, &Lindbladian)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, l)| l.dim)
            .ok_or_else(|| SimError::Input("Lindbladian::mix: empty combination".into()))?;
        let mut h_acc: Option<CMat> = None;
        let mut jumps = Vec::new();
        for (w, l) in parts {
            if *w < 0.0 || !w.is_finite() {
                return Err(SimError::Input(
                    "Lindbladian::mix: weights must be finite and >= 0".into(),
                ));
            }
            if l.dim != dim {
                return Err(SimError::Dimension(
                    "Lindbladian::mix: dimension mismatch".into(),
                ));
            }
            if let Some(h) = &l.hamiltonian {
                let scaled = h.scale(*w);
                h_acc = Some(match h_acc {
                    Some(acc) => acc + scaled,
                    None => scaled,
                });
            }
            for v in &l.jumps {
                jumps.push(v.scale(w.sqrt()));
            }
        }
        Self::new(h_acc, jumps)
    }

    /// Apply the generator directly to a matrix (no superoperator assembly).
    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        if let Some(h) = &self.hamiltonian {
            out += (h * rho - rho * h) * (-I);
        }
        for v in &self.jumps {
            let vd = v.adjoint();
            let k = &vd * v;
            out += v * rho * vd - (&k * rho + rho * &k).scale(0.5);
        }
        out
    }

    /// Dense matrix of the generator in the column-stacking vectorization.
    pub fn superoperator(&self) -> Result<Superoperator> {
        if self.dim > MAX_SUPEROP_DIM {
            return Err(SimError::Dimension(format!(
                "superoperator: system dimension {} exceeds cap {MAX_SUPEROP_DIM}",
                self.dim
            )));
        }
        let id = identity(self.dim);
        let mut s = CMat::zeros(self.dim * self.dim, self.dim * self.dim);
        if let Some(h) = &self.hamiltonian {
            s += (kron(&id, h)? - kron(&h.transpose(), &id)?) * (-I);
        }
        for v in &self.jumps {
            let k = v.adjoint() * v;
            s += kron(&v.map(|z| z.conj()), v)?;
            s -= kron(&id, &k)?.scale(0.5);
            s -= kron(&k.transpose(), &id)?.scale(0.5);
        }
        Superoperator::new(s)
    }

    /// `exp(t L)` as a dense superoperator. Requires `t >= 0`.
    pub fn propagator(&self, t: f64) -> Result<Superoperator> {
        if t.is_nan() || t < 0.0 {
            return Err(SimError::Input(format!("propagator: t = {t} must be >= 0")));
        }
        let gen = self.superoperator()?;
        let prop = Superoperator::new(expm(&gen.mat().scale(t))?)?;
        debug_assert!(
            check_cptp(&prop, 1e-7).trace_defect < 1e-7,
            "propagator lost trace preservation"
        );
        Ok(prop)
    }

    /// Crude upper bound on the Frobenius-induced norm of the generator,
    /// used to pick substep counts for the series propagator.
    fn action_norm_bound(&self) -> f64 {
        let mut b = 0.0;
        if let Some(h) = &self.hamiltonian {
            b += 2.0 * h.norm();
        }
        for v in &self.jumps {
            let n = v.norm();
            b += 2.0 * n * n;
        }
        b
    }

    /// Apply `exp(t L)` to a matrix by a scaled Taylor series, without
    /// assembling the superoperator. Matches [`Self::propagator`] to ~1e-13.
    pub fn apply_exp(&self, t: f64, rho: &CMat) -> Result<CMat> {
        if t.is_nan() || t < 0.0 {
            return Err(SimError::Input(format!("apply_exp: t = {t} must be >= 0")));
        }
        let bound = t * self.action_norm_bound();
        if !bound.is_finite() {
            return Err(SimError::Range("apply_exp: generator norm overflow".into()));
        }
        let substeps = (bound / 0.5).ceil().max(1.0) as usize;
        let dt = t / substeps as f64;
        let mut state = rho.clone();
        for _ in 0..substeps {
            let mut term = state.clone();
            let mut acc = state.clone();
            for k in 1..=40 {
                term = self.apply(&term).scale(dt / k as f64);
                acc += &term;
                if term.norm() <= 1e-16 * acc.norm().max(1e-300) {
                    break;
                }
            }
            state = acc;
        }
        Ok(state)
    }
}

/// Dense linear map on vectorized matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    mat: CMat,
    dim: usize,
}

impl Superoperator {
    pub fn new(mat: CMat) -> Result<Self> {
        require_square_finite(&mat, "Superoperator")?;
        let n2 = mat.nrows();
        let dim = (n2 as f64).sqrt().round() as usize;
        if dim * dim != n2 {
            return Err(SimError::Dimension(format!(
                "Superoperator: side {n2} is not a perfect square"
            )));
        }
        Ok(Self { mat, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: identity(dim * dim),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(SimError::Dimension(format!(
                "Superoperator::apply: state is {}x{}, map acts on {}x{}",
                rho.nrows(),
                rho.ncols(),
                self.dim,
                self.dim
            )));
        }
        devectorize(&(&self.mat * vectorize(rho)))
    }

    pub fn apply_vec(&self, v: &CVec) -> CVec {
        &self.mat * v
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(SimError::Dimension(
                "Superoperator::compose: dimension mismatch".into(),
            ));
        }
        Ok(Superoperator {
            mat: &self.mat * &other.mat,
            dim: self.dim,
        })
    }

    /// Matrix power by repeated squaring.
    pub fn pow(&self, mut m: u64) -> Superoperator {
        let mut result = Superoperator::identity(self.dim);
        let mut base = self.clone();
        while m > 0 {
            if m & 1 == 1 {
                result.mat = &result.mat * &base.mat;
            }
            m >>= 1;
            if m > 0 {
                base.mat = &base.mat * &base.mat;
            }
        }
        result
    }

    pub fn adjoint(&self) -> Superoperator {
        Superoperator {
            mat: self.mat.adjoint(),
            dim: self.dim,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Superoperator {
        Superoperator {
            mat: self.mat.scale(1.0) * factor,
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(SimError::Dimension(
                "Superoperator::add: dimension mismatch".into(),
            ));
        }
        Ok(Superoperator {
            mat: &self.mat + &other.mat,
            dim: self.dim,
        })
    }
}

/// Choi matrix of a superoperator, normalized to unit trace for
/// trace-preserving maps: `J[i*N+k, j*N+l] = S[j*N+i, l*N+k] / N`.
pub fn choi_matrix(s: &Superoperator) -> CMat {
    let n = s.dim();
    let mut j = CMat::zeros(n * n, n * n);
    let m = s.mat();
    for i in 0..n {
        for k in 0..n {
            for jj in 0..n {
                for l in 0..n {
                    j[(i * n + k, jj * n + l)] = m[(jj * n + i, l * n + k)] / n as f64;
                }
            }
        }
    }
    j
}

/// Quantitative channel report: how far a map is from completely positive
/// and trace preserving.
#[derive(Debug, Clone)]
pub struct CptpReport {
    /// Max deviation of any column of the trace functional: `|tr S(E) - tr E|`.
    pub trace_defect: f64,
    /// Frobenius defect of Choi Hermiticity (Hermiticity preservation).
    pub hermiticity_defect: f64,
    /// Smallest eigenvalue of the (unit-trace normalized) Choi matrix.
    pub min_choi_eig: f64,
    pub is_cptp: bool,
}

/// Cost: one dense eigendecomposition of the N^2 x N^2 Choi matrix.
pub fn check_cptp(s: &Superoperator, tol: f64) -> CptpReport {
    let n = s.dim();
    // Trace preservation: vec(I)^dag S must equal vec(I)^dag.
    let eye = vectorize(&identity(n));
    let row = s.mat().adjoint() * &eye;
    let trace_defect = (row - eye).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let choi = choi_matrix(s);
    let hermiticity_defect = hermiticity_defect(&choi);
    let sym = (&choi + choi.adjoint()).scale(0.5);
    let min_choi_eig = herm_eig(&sym)
        .map(|e| e.values[0])
        .unwrap_or(f64::NEG_INFINITY);

    CptpReport {
        trace_defect,
        hermiticity_defect,
        min_choi_eig,
        is_cptp: trace_defect <= tol && hermiticity_defect <= tol && min_choi_eig >= -tol,
    }
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite
/// within tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tolerance(mat, 1e-10)
    }

    pub fn with_tolerance(mat: CMat, tol: f64) -> Result<Self> {
        require_square_finite(&mat, "DensityMatrix")?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(SimError::Input(format!(
                "DensityMatrix: trace {tr} deviates from 1 beyond {tol:.1e}"
            )));
        }
        let defect = hermiticity_defect(&mat);
        if defect > tol * mat.norm().max(1.0) {
            return Err(SimError::Input(format!(
                "DensityMatrix: Hermiticity defect {defect:.3e} beyond {tol:.1e}"
            )));
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        let min_eig = herm_eig(&sym)?.values[0];
        if min_eig < -tol {
            return Err(SimError::Input(format!(
                "DensityMatrix: minimum eigenvalue {min_eig:.3e} below -{tol:.1e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn pure(state: &CVec) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(SimError::Input("DensityMatrix::pure: zero vector".into()));
        }
        let psi = state.scale(1.0 / norm);
        Ok(Self {
            mat: &psi * psi.adjoint(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }
}
