//! Distances, weighted norms, and spectral diagnostics relative to a Gibbs
//! state.
//!
//! The weighting convention throughout is the symmetric (KMS) one: operators
//! are sandwiched between equal powers of the stationary state on both sides.

use nalgebra::DVector;

use crate::error::{Result, SimError};
use crate::linalg::{herm_eig, hermiticity_defect, kron, vectorize, CMat, HermEig};
use crate::lindblad::{DensityMatrix, Superoperator};

/// Eigendecomposition of a Hamiltonian together with the derived Gibbs state
/// `sigma = e^{-beta H} / Z` and cached fractional powers of it.
#[derive(Debug, Clone)]
pub struct GibbsContext {
    eig: HermEig,
    beta: f64,
    populations: DVector<f64>,
    /// Partition function of the shifted spectrum `sum_i e^{-beta(E_i - E_min)}`.
    partition_shifted: f64,
    sigma: CMat,
    sigma_pow: [CMat; 4], // powers +1/4, -1/4, +1/2, -1/2
}

impl GibbsContext {
    pub fn new(hamiltonian: &CMat, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(SimError::Input(format!(
                "GibbsContext: beta = {beta} must be finite and >= 0"
            )));
        }
        let eig = herm_eig(hamiltonian)?;
        let n = eig.values.len();
        let e_min = eig.values[0];
        let e_max = eig.values[n - 1];
        if beta * (e_max - e_min) > 700.0 {
            return Err(SimError::Range(format!(
                "GibbsContext: beta * spectral spread = {:.3e} would underflow Gibbs weights",
                beta * (e_max - e_min)
            )));
        }
        let weights =
            DVector::from_iterator(n, eig.values.iter().map(|&e| (-beta * (e - e_min)).exp()));
        let partition_shifted = weights.sum();
        let populations = weights.scale(1.0 / partition_shifted);
        let pow = |p: f64| -> CMat {
            let d = CMat::from_fn(n, n, |i, j| {
                if i == j {
                    num_complex::Complex64::new(populations[i].powf(p), 0.0)
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            });
            &eig.vectors * d * eig.vectors.adjoint()
        };
        let sigma = pow(1.0);
        let sigma_pow = [pow(0.25), pow(-0.25), pow(0.5), pow(-0.5)];
        Ok(Self {
            eig,
            beta,
            populations,
            partition_shifted,
            sigma,
            sigma_pow,
        })
    }

    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eig(&self) -> &HermEig {
        &self.eig
    }

    /// Gibbs populations in ascending-energy order.
    pub fn populations(&self) -> &DVector<f64> {
        &self.populations
    }

    pub fn partition_shifted(&self) -> f64 {
        self.partition_shifted
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.sigma.clone())
    }

    /// `sigma^p` for p in {1/4, -1/4, 1/2, -1/2} (cached) or any other power.
    pub fn sigma_power(&self, p: f64) -> CMat {
        let cached = [0.25, -0.25, 0.5, -0.5].iter().position(|&c| c == p);
        if let Some(k) = cached {
            return self.sigma_pow[k].clone();
        }
        let n = self.dim();
        let d = CMat::from_fn(n, n, |i, j| {
            if i == j {
                num_complex::Complex64::new(self.populations[i].powf(p), 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        });
        &self.eig.vectors * d * self.eig.vectors.adjoint()
    }

    /// Superoperator of `X -> sigma^p X sigma^p` in column-stacking form.
    pub fn sandwich_superoperator(&self, p: f64) -> Result<Superoperator> {
        let s = self.sigma_power(p);
        Superoperator::new(kron(&s.transpose(), &s)?)
    }
}

/// Trace distance `||a - b||_1 / 2` between Hermitian matrices.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    let diff = a - b;
    let scale = diff.norm().max(1.0);
    if hermiticity_defect(&diff) > 1e-8 * scale {
        return Err(SimError::Input(
            "trace_distance: difference is not Hermitian".into(),
        ));
    }
    let sym = (&diff + diff.adjoint()).scale(0.5);
    let eig = herm_eig(&sym)?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Symmetrically weighted norm `|| sigma^{1/4} X sigma^{1/4} ||_F`.
pub fn kms_norm(ctx: &GibbsContext, x: &CMat) -> f64 {
    let q = &ctx.sigma_pow[0];
    (q * x * q).norm()
}

/// Inverse-weighted norm `|| sigma^{-1/4} Y sigma^{-1/4} ||_F`, the dual of
/// [`kms_norm`].
pub fn weighted_l2_norm(ctx: &GibbsContext, y: &CMat) -> f64 {
    let q = &ctx.sigma_pow[1];
    (q * y * q).norm()
}

/// Chi-square divergence `tr[(rho - sigma) sigma^{-1/2} (rho - sigma) sigma^{-1/2}]`,
/// i.e. the squared inverse-weighted norm of `rho - sigma`.
pub fn chi_square(ctx: &GibbsContext, rho: &CMat) -> f64 {
    let d = rho - ctx.sigma();
    let w = weighted_l2_norm(ctx, &d);
    w * w
}

/// Variance of a Hermitian observable in the Gibbs state, measured in the
/// symmetric weighting: `||X||_{1/2}^2 - tr(sigma X)^2`.
pub fn variance(ctx: &GibbsContext, x: &CMat) -> Result<f64> {
    if hermiticity_defect(x) > 1e-10 * x.norm().max(1.0) {
        return Err(SimError::Precondition(
            "variance: observable must be Hermitian".into(),
        ));
    }
    let k = kms_norm(ctx, x);
    let mean = (ctx.sigma() * x).trace().re;
    Ok(k * k - mean * mean)
}

/// Relative defect of symmetric detailed balance:
/// `|| L G - G L^dag ||_F / || L G ||_F` with `G: X -> sigma^{1/2} X sigma^{1/2}`.
pub fn detailed_balance_residual(sup: &Superoperator, ctx: &GibbsContext) -> Result<f64> {
    if sup.dim() != ctx.dim() {
        return Err(SimError::Dimension(
            "detailed_balance_residual: dimension mismatch".into(),
        ));
    }
    let g = ctx.sandwich_superoperator(0.5)?;
    let lg = sup.mat() * g.mat();
    let gl = g.mat() * sup.mat().adjoint();
    let denom = lg.norm();
    if denom == 0.0 {
        // The zero generator is trivially balanced.
        return Ok(0.0);
    }
    Ok((lg - gl).norm() / denom)
}

/// Spectral data of a detailed-balanced generator after the symmetric
/// similarity transform.
#[derive(Debug, Clone)]
pub struct SpectralGap {
    /// Second-smallest eigenvalue of the negated symmetrized generator, or 0
    /// when the stationary mode is degenerate.
    pub gap: f64,
    /// Eigenvalue of the numerical zero mode (should be ~0).
    pub zero_eig: f64,
    /// Overlap of the zero mode with the expected stationary direction.
    pub zero_overlap: f64,
    /// True when the zero eigenvalue has multiplicity > 1 (no unique
    /// stationary state); `gap` is reported as 0 in that case.
    pub degenerate: bool,
}

/// Spectral gap of a generator satisfying symmetric detailed balance.
///
/// Transforms `S = G^{-1/2} L G^{1/2}`, symmetrizes, and diagonalizes. Fails
/// with a precondition error if the detailed-balance residual exceeds 1e-6.
pub fn spectral_gap(sup: &Superoperator, ctx: &GibbsContext) -> Result<SpectralGap> {
    let residual = detailed_balance_residual(sup, ctx)?;
    if residual > 1e-6 {
        return Err(SimError::Precondition(format!(
            "spectral_gap: detailed-balance residual {residual:.3e} exceeds 1e-6"
        )));
    }
    let g_half = ctx.sandwich_superoperator(0.25)?;
    let g_inv_half = ctx.sandwich_superoperator(-0.25)?;
    let s = g_inv_half.mat() * sup.mat() * g_half.mat();
    let sym = (&s + s.adjoint()).scale(-0.5);
    let eig = herm_eig(&sym)?;
    let zero_eig = eig.values[0];
    let second = eig.values[1];
    let (gap, degenerate) = if second.abs() <= 1e-9 {
        (0.0, true)
    } else {
        (second, false)
    };

    let expected = vectorize(&ctx.sigma_power(0.5));
    let expected = expected.scale(1.0 / expected.norm());
    let mode = eig.vectors.column(0);
    let zero_overlap = mode.dotc(&expected).norm();

    Ok(SpectralGap {
        gap,
        zero_eig,
        zero_overlap,
        degenerate,
    })
}
