//! Dense complex linear algebra used throughout the simulator: tensor
//! products, ancilla partial trace, Hermitian eigendecomposition, matrix
//! exponential, Haar-random unitaries, and vectorization.
//!
//! Conventions fixed project-wide:
//! * vectorization stacks columns, so `vec(|i><j|)` is the basis vector at
//!   index `j*N + i` and `vec(A X B) = (B^T ⊗ A) vec(X)`;
//! * `kron(a, b)` is the standard Kronecker product with `a` on the slow
//!   (left) index, so an ancilla placed first is the slow tensor factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SimError};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest dense matrix dimension accepted by the eigendecomposition path.
pub const MAX_DENSE_DIM: usize = 1 << 12;
/// Entry-count cap for Kronecker products (keeps superoperators in memory).
pub const MAX_KRON_ENTRIES: usize = 1 << 26;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Check that a matrix is square with every entry finite.
pub fn require_square_finite(m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(SimError::Dimension(format!(
            "{what}: expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(SimError::Input(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// Kronecker product with an entry-count cap so superoperator construction
/// cannot silently allocate past the dense budget.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    let entries = a
        .nrows()
        .checked_mul(b.nrows())
        .and_then(|r| r.checked_mul(a.ncols()))
        .and_then(|r| r.checked_mul(b.ncols()))
        .ok_or_else(|| SimError::Dimension("kron: entry count overflows usize".into()))?;
    if entries > MAX_KRON_ENTRIES {
        return Err(SimError::Dimension(format!(
            "kron: {entries} entries exceeds cap {MAX_KRON_ENTRIES}"
        )));
    }
    Ok(a.kronecker(b))
}

/// Trace out a dimension-2 ancilla sitting on the first (slow) tensor factor:
/// input is `2N x 2N`, output is the `N x N` sum of the two diagonal blocks.
pub fn partial_trace_ancilla(m: &CMat) -> Result<CMat> {
    require_square_finite(m, "partial_trace_ancilla")?;
    let d = m.nrows();
    if !d.is_multiple_of(2) {
        return Err(SimError::Dimension(format!(
            "partial_trace_ancilla: dimension {d} is not 2N"
        )));
    }
    let n = d / 2;
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = m[(i, j)] + m[(n + i, n + j)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending; each eigenvector is phase-fixed so that its
/// first component of non-negligible modulus is real and positive, which
/// makes repeated runs on identical input bit-comparable.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: DVector<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(diag) V^dagger` for a scalar function of the eigenvalues.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> Complex64) -> CMat {
        let d = CMat::from_diagonal(&self.values.map(f));
        &self.vectors * d * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.map_eigenvalues(|x| Complex64::new(x, 0.0))
    }

    /// Rotate a matrix into the eigenbasis: `V^dagger m V`.
    pub fn to_eigenbasis(&self, m: &CMat) -> CMat {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// Rotate a matrix from the eigenbasis back: `V m V^dagger`.
    pub fn from_eigenbasis(&self, m: &CMat) -> CMat {
        &self.vectors * m * self.vectors.adjoint()
    }
}

const HERMITICITY_RTOL: f64 = 1e-10;

pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn herm_eig(h: &CMat) -> Result<HermEig> {
    require_square_finite(h, "herm_eig")?;
    let n = h.nrows();
    if n == 0 || n > MAX_DENSE_DIM {
        return Err(SimError::Dimension(format!(
            "herm_eig: dimension {n} outside 1..={MAX_DENSE_DIM}"
        )));
    }
    let scale = h.norm().max(1.0);
    if hermiticity_defect(h) > HERMITICITY_RTOL * scale {
        return Err(SimError::Input(format!(
            "herm_eig: matrix is not Hermitian (defect {:.3e})",
            hermiticity_defect(h)
        )));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        // Phase-fix on the first component that carries real weight.
        let cutoff = 1e-12 * col.norm();
        if let Some(z) = col.iter().find(|z| z.norm() > cutoff) {
            let phase = z / z.norm();
            col *= phase.conj();
        }
        vectors.set_column(dst, &col);
    }
    Ok(HermEig { values, vectors })
}

// Pade coefficients for the degree-13 approximant (Higham's scaling-and-
// squaring method) plus the order-switch thresholds on the 1-norm.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_solve(u: CMat, v: CMat) -> Result<CMat> {
    // (V - U) X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| SimError::Range("expm: Pade denominator is singular".into()))
}

fn pade_low_order(a: &CMat, b: &[f64]) -> Result<CMat> {
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let mut even = id.scale(b[0]);
    let mut odd = id.scale(b[1]);
    let mut pow = id.clone();
    for k in (2..b.len()).step_by(2) {
        pow = &pow * &a2;
        even += pow.scale(b[k]);
        if k + 1 < b.len() {
            odd += pow.scale(b[k + 1]);
        }
    }
    pade_solve(a * odd, even)
}

/// Matrix exponential by Pade approximation with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    require_square_finite(a, "expm")?;
    let n = a.nrows();
    if n == 0 || n > MAX_DENSE_DIM {
        return Err(SimError::Dimension(format!(
            "expm: dimension {n} outside 1..={MAX_DENSE_DIM}"
        )));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(SimError::Range("expm: input norm is not finite".into()));
    }
    if norm <= THETA_3 {
        return pade_low_order(a, &[120.0, 60.0, 12.0, 1.0]);
    }
    if norm <= THETA_5 {
        return pade_low_order(a, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]);
    }
    if norm <= THETA_7 {
        return pade_low_order(
            a,
            &[
                17_297_280.0,
                8_648_640.0,
                1_995_840.0,
                277_200.0,
                25_200.0,
                1_512.0,
                56.0,
                1.0,
            ],
        );
    }
    if norm <= THETA_9 {
        return pade_low_order(
            a,
            &[
                17_643_225_600.0,
                8_821_612_800.0,
                2_075_673_600.0,
                302_702_400.0,
                30_270_240.0,
                2_162_160.0,
                110_880.0,
                3_960.0,
                90.0,
                1.0,
            ],
        );
    }

    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scaled = a.scale(0.5f64.powi(s as i32));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    let mut x = pade_solve(u, v)?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phases folded back in.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    assert!(
        n > 0 && n <= MAX_DENSE_DIM,
        "haar_unitary: bad dimension {n}"
    );
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Column-stacking vectorization; inverse of [`devectorize`].
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn devectorize(v: &CVec) -> Result<CMat> {
    let len = v.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(SimError::Dimension(format!(
            "devectorize: length {len} is not a perfect square"
        )));
    }
    Ok(CMat::from_column_slice(n, n, v.as_slice()))
}

/// Spectral norm via the Hermitian eigenproblem of `m^dagger m`.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    let gram = m.adjoint() * m;
    let eig = herm_eig(&gram)?;
    Ok(eig.values[eig.dim() - 1].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{domain, stream};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn sigma_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    pub(crate) fn sigma_z() -> CMat {
        CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    fn random_cmat(n: usize, rng: &mut impl Rng) -> CMat {
        CMat::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn kron_matches_hand_expansion() {
        // sigma_x ⊗ sigma_z has exactly four nonzero entries.
        let k = kron(&sigma_x(), &sigma_z()).unwrap();
        let mut expected = CMat::zeros(4, 4);
        expected[(0, 2)] = c(1., 0.);
        expected[(1, 3)] = c(-1., 0.);
        expected[(2, 0)] = c(1., 0.);
        expected[(3, 1)] = c(-1., 0.);
        assert_relative_eq!((k - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kron_is_associative() {
        let mut rng = stream(11, domain::SAMPLER, 0, 0);
        for _ in 0..10 {
            let a = random_cmat(2, &mut rng);
            let b = random_cmat(3, &mut rng);
            let d = random_cmat(2, &mut rng);
            let left = kron(&kron(&a, &b).unwrap(), &d).unwrap();
            let right = kron(&a, &kron(&b, &d).unwrap()).unwrap();
            assert_relative_eq!((left - right).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kron_mixed_product_property() {
        let mut rng = stream(12, domain::SAMPLER, 0, 0);
        for _ in 0..10 {
            let a = random_cmat(2, &mut rng);
            let b = random_cmat(3, &mut rng);
            let x = random_cmat(2, &mut rng);
            let y = random_cmat(3, &mut rng);
            let lhs = kron(&(&a * &x), &(&b * &y)).unwrap();
            let rhs = kron(&a, &b).unwrap() * kron(&x, &y).unwrap();
            assert_relative_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kron_rejects_oversized_output() {
        let a = CMat::zeros(1 << 13, 1 << 13);
        let b = CMat::zeros(2, 2);
        assert!(matches!(kron(&a, &b), Err(SimError::Dimension(_))));
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let mut bell = CVec::zeros(4);
        bell[0] = c(1. / 2f64.sqrt(), 0.);
        bell[3] = c(1. / 2f64.sqrt(), 0.);
        let rho = &bell * bell.adjoint();
        let reduced = partial_trace_ancilla(&rho).unwrap();
        let expected = identity(2).scale(0.5);
        assert_relative_eq!((reduced - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = stream(13, domain::SAMPLER, 0, 0);
        for _ in 0..10 {
            let m = random_cmat(6, &mut rng);
            let out = partial_trace_ancilla(&m).unwrap();
            let (a, b) = (m.trace(), out.trace());
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_odd_dimension() {
        let m = CMat::zeros(3, 3);
        assert!(matches!(
            partial_trace_ancilla(&m),
            Err(SimError::Dimension(_))
        ));
    }

    #[test]
    fn herm_eig_of_sigma_x_is_hadamard_pair() {
        let eig = herm_eig(&sigma_x()).unwrap();
        assert_relative_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(eig.values[1], 1.0, epsilon = 1e-14);
        let s = 1. / 2f64.sqrt();
        // Phase fixing makes the first component real positive.
        assert_relative_eq!(eig.vectors[(0, 0)].re, s, epsilon = 1e-12);
        assert_relative_eq!(eig.vectors[(1, 0)].re, -s, epsilon = 1e-12);
        assert_relative_eq!(eig.vectors[(0, 1)].re, s, epsilon = 1e-12);
        assert_relative_eq!(eig.vectors[(1, 1)].re, s, epsilon = 1e-12);
    }

    #[test]
    fn herm_eig_reconstructs_random_hermitian() {
        let mut rng = stream(14, domain::SAMPLER, 0, 0);
        for n in [2usize, 5, 9] {
            let g = random_cmat(n, &mut rng);
            let h = (&g + g.adjoint()).scale(0.5);
            let eig = herm_eig(&h).unwrap();
            assert_relative_eq!((eig.reconstruct() - &h).norm(), 0.0, epsilon = 1e-10);
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert_relative_eq!((gram - identity(n)).norm(), 0.0, epsilon = 1e-10);
            for k in 1..n {
                assert!(eig.values[k] >= eig.values[k - 1]);
            }
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(herm_eig(&m), Err(SimError::Input(_))));
    }

    #[test]
    fn expm_of_pauli_rotation_is_closed_form() {
        // exp(i pi/2 sigma_x) = i sigma_x
        let a = sigma_x().scale(std::f64::consts::FRAC_PI_2) * I;
        let e = expm(&a).unwrap();
        let expected = sigma_x() * I;
        assert_relative_eq!((e - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_matches_external_reference() {
        // Frozen from an independent scipy.linalg.expm evaluation.
        let a = CMat::from_row_slice(
            2,
            2,
            &[c(0.3, 0.1), c(0.5, 0.0), c(-0.2, 0.0), c(-0.1, -0.4)],
        );
        let e = expm(&a).unwrap();
        let expected = CMat::from_row_slice(
            2,
            2,
            &[
                c(1.284743020115589, 0.137997998708053),
                c(0.536607730364736, -0.071899691437213),
                c(-0.214643092145894, 0.028759876574885),
                c(0.783557144386588, -0.341089978506912),
            ],
        );
        assert!((e - expected).norm() < 1e-13);
    }

    #[test]
    fn expm_matches_diagonalization_on_normal_matrices() {
        // A = V diag(z) V^dagger is normal with exp(A) = V diag(e^z) V^dagger.
        let mut rng = stream(15, domain::SAMPLER, 0, 0);
        for n in [2usize, 4, 6] {
            for scale in [0.5, 5.0, 40.0] {
                let v = haar_unitary(n, &mut rng);
                let z: Vec<Complex64> = (0..n)
                    .map(|_| {
                        c(
                            scale * (rng.random::<f64>() - 0.5),
                            scale * (rng.random::<f64>() - 0.5),
                        )
                    })
                    .collect();
                let d = CMat::from_diagonal(&CVec::from_vec(z.clone()));
                let a = &v * d * v.adjoint();
                let de = CMat::from_diagonal(&CVec::from_vec(z.iter().map(|w| w.exp()).collect()));
                let expected = &v * de * v.adjoint();
                let got = expm(&a).unwrap();
                let rel = (got - &expected).norm() / expected.norm();
                assert!(rel < 1e-10, "n={n} scale={scale} rel={rel:.3e}");
            }
        }
    }

    #[test]
    fn expm_inverse_property() {
        let mut rng = stream(16, domain::SAMPLER, 0, 0);
        for _ in 0..5 {
            let a = random_cmat(5, &mut rng).scale(2.0);
            let e = expm(&a).unwrap();
            let einv = expm(&(-&a)).unwrap();
            assert!((e * einv - identity(5)).norm() < 1e-10);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = stream(17, domain::SAMPLER, 0, 0);
        for n in [2usize, 3, 8] {
            let u = haar_unitary(n, &mut rng);
            assert!((u.adjoint() * &u - identity(n)).norm() < 1e-12);
        }
    }

    #[test]
    fn haar_unitary_moments_match_haar_measure() {
        // E|U_00|^2 = 1/N and E|U_00|^4 = 2/(N(N+1)) for N=2.
        let mut rng = stream(18, domain::SAMPLER, 0, 0);
        let samples = 100_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..samples {
            let u = haar_unitary(2, &mut rng);
            let p = u[(0, 0)].norm_sqr();
            m2 += p;
            m4 += p * p;
        }
        m2 /= samples as f64;
        m4 /= samples as f64;
        assert!((m2 - 0.5).abs() < 0.01, "m2={m2}");
        assert!((m4 - 1.0 / 3.0).abs() < 0.01, "m4={m4}");
    }

    #[test]
    fn vectorization_roundtrip_and_index_convention() {
        let mut e01 = CMat::zeros(2, 2);
        e01[(0, 1)] = ONE; // |0><1| lands at index 1*2 + 0 = 2
        let v = vectorize(&e01);
        assert_relative_eq!(v[2].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-15);
        let back = devectorize(&v).unwrap();
        assert_relative_eq!((back - e01).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vectorization_intertwines_sandwich_products() {
        // vec(A X B) = (B^T ⊗ A) vec(X)
        let mut rng = stream(19, domain::SAMPLER, 0, 0);
        for _ in 0..10 {
            let a = random_cmat(3, &mut rng);
            let b = random_cmat(3, &mut rng);
            let x = random_cmat(3, &mut rng);
            let direct = vectorize(&(&a * &x * &b));
            let lifted = kron(&b.transpose(), &a).unwrap() * vectorize(&x);
            assert_relative_eq!((direct - lifted).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vectorization_is_an_isometry() {
        let mut rng = stream(20, domain::SAMPLER, 0, 0);
        for _ in 0..10 {
            let m = random_cmat(4, &mut rng);
            assert_relative_eq!(vectorize(&m).norm(), m.norm(), epsilon = 1e-13);
        }
    }

    #[test]
    fn spectral_norm_of_scaled_projector() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 2)] = c(-2.5, 0.0);
        assert_relative_eq!(spectral_norm(&m).unwrap(), 2.5, epsilon = 1e-12);
    }
}
