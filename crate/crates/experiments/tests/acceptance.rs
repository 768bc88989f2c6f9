//! Acceptance suite: ten numbered criteria, each printing one pass/fail
//! line with the measured values. Every fixture is fully seeded, so the
//! numbers are identical on every run.

use std::sync::OnceLock;

use lindblad_core::davies::{
    analytic_davies, coherence_decay_rate, davies_gap_certificate, gap_bounds, pauli_master_matrix,
    WeightFunction, WeightKind,
};
use lindblad_core::hamiltonians::{
    low_energy_fraction, pauli_string_hamiltonian, semicircle_cdf, SpectralCdf,
};
use lindblad_core::linalg::{devectorize, expm, herm_eig, vectorize, CMat};
use lindblad_core::lindblad::DensityMatrix;
use lindblad_core::metrics::{
    chi_square, detailed_balance_residual, spectral_gap, trace_distance, GibbsContext,
};
use lindblad_core::qdrift::{term_step_superop, LindbladTerm, StepAlgorithm};
use lindblad_core::stream::{domain, stream};
use lindblad_experiments::config::{ExperimentConfig, Tolerances};
use lindblad_experiments::drivers::{
    run_davies_verify, run_gibbs, run_scaling_average, run_scaling_random,
};
use lindblad_experiments::fit::fit_loglog_slope;
use nalgebra::Complex;
use num_complex::Complex64;
use rand::Rng;

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    use std::io::Write;
    let tag = if ok { "PASS" } else { "FAIL" };
    // Write to the process stdout handle rather than through `println!`:
    // the test harness captures the print macros, and these lines must
    // appear once per criterion even when the test passes.
    let line = format!("[{tag}] criterion {n:02} ({name}): {detail}\n");
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(ok, "criterion {n:02} ({name}): {detail}");
}

/// Shared 10-qubit random Pauli-string spectrum (m = 2000, seed 17), reused
/// by criteria 8 and 9 so the heavy eigendecomposition runs once.
fn hps_spectrum() -> &'static [f64] {
    static SPECTRUM: OnceLock<Vec<f64>> = OnceLock::new();
    SPECTRUM.get_or_init(|| {
        let mut rng = stream(17, domain::SPECTRUM, 0, 0);
        let (h, _) = pauli_string_hamiltonian(10, 2000, &mut rng).unwrap();
        herm_eig(&h).unwrap().values.iter().copied().collect()
    })
}

#[test]
fn criterion_01_average_channel_scaling() {
    let c = cfg(r#"{
            "experiment": "scaling-average",
            "system": { "kind": "two_level", "splitting": 1.0 },
            "ensemble": { "kind": "thermal_pair", "base_rate": 1.0 },
            "beta": 1.0,
            "t_total": 2.0,
            "m_grid": [8, 16, 32, 64, 128, 256, 512],
            "seed": 7
        }"#);
    let tol = Tolerances::default();
    let out = run_scaling_average(&c, &tol).unwrap();
    let fit = out.fit.expect("log-log fit");
    let ok = (fit.slope + 1.0).abs() <= tol.slope_average && fit.r_squared >= 0.98;
    report(
        1,
        "average-channel scaling",
        ok,
        &format!(
            "slope {:.4} (want -1.0 +/- {}), r^2 {:.4} (want >= 0.98)",
            fit.slope, tol.slope_average, fit.r_squared
        ),
    );
}

#[test]
fn criterion_02_random_channel_scaling() {
    let base = r#"{
        "experiment": "scaling-random",
        "system": { "kind": "two_level", "splitting": 1.0 },
        "ensemble": { "kind": "thermal_pair", "base_rate": 1.0 },
        "beta": 1.0,
        "t_total": 2.0,
        "m_grid": [16, 32, 64, 128, 256],
        "n_traj": NT,
        "seed": 7
    }"#;
    let tol = Tolerances::default();
    let out = run_scaling_random(&cfg(&base.replace("NT", "200")), &tol).unwrap();
    let fit = out.fit.expect("log-log fit");
    let slope_ok = (fit.slope + 1.0).abs() <= tol.slope_random;

    // Robustness view at 10x the trajectories: every M-doubling should halve
    // the mean squared error to within the stated band.
    let dense = run_scaling_random(&cfg(&base.replace("NT", "2000")), &tol).unwrap();
    let mut ratios = Vec::new();
    for w in dense.rows.windows(2) {
        ratios.push(w[0].mean_sq_weighted_error / w[1].mean_sq_weighted_error);
    }
    let ratios_ok = ratios.iter().all(|r| (r - 2.0).abs() <= 0.4);

    report(
        2,
        "random-channel scaling",
        slope_ok && ratios_ok,
        &format!(
            "slope {:.4} at n_traj=200 (want -1.0 +/- {}), M-doubling ratios {:?} at n_traj=2000 (want 2.0 +/- 0.4)",
            fit.slope,
            tol.slope_random,
            ratios.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_03_gibbs_plateau_orders() {
    let c = cfg(r#"{
            "experiment": "gibbs",
            "system": { "kind": "tfim", "n": 2, "j": 1.0, "g": 0.6 },
            "ensemble": { "kind": "davies_random", "variant": "haar", "gamma": "metropolis" },
            "beta": 1.0,
            "tau_grid": [0.05, 0.1],
            "t_total": 30.0,
            "n_traj": 100,
            "n_samples": 200000,
            "initial_state": { "kind": "basis_state", "index": 0 },
            "seed": 11
        }"#);
    let out = run_gibbs(&c, &Tolerances::default()).unwrap();
    let target = 2.0 * out.spectral_gap;

    let mut rates_ok = true;
    let mut rates = Vec::new();
    for curve in &out.curves {
        for rate in [
            curve.summary.decay_rate_random,
            curve.summary.decay_rate_average,
        ] {
            let r = rate.expect("fitted decay rate");
            rates.push((r * 1e4).round() / 1e4);
            rates_ok &= r >= 0.5 * target && r <= 2.0 * target;
        }
    }

    let ratio_random = out.curves[1].summary.plateau_random / out.curves[0].summary.plateau_random;
    let ratio_average =
        out.curves[1].summary.plateau_average / out.curves[0].summary.plateau_average;
    let plateaus_ok = (ratio_random - 2.0).abs() <= 0.6 && (ratio_average - 4.0).abs() <= 1.2;

    report(
        3,
        "Gibbs plateau orders",
        rates_ok && plateaus_ok,
        &format!(
            "decay rates {rates:?} vs 2*gap {target:.4} (want within factor 2); tau-doubling plateau ratios random {ratio_random:.3} (want 2.0 +/- 0.6), average {ratio_average:.3} (want 4.0 +/- 1.2)"
        ),
    );
}

#[test]
fn criterion_04_davies_expectation() {
    let c = cfg(r#"{
            "experiment": "davies-verify",
            "system": { "kind": "tfim", "n": 2, "j": 1.0, "g": 0.6 },
            "ensemble": { "kind": "davies_random", "variant": "haar", "gamma": "metropolis" },
            "beta": 1.0,
            "s_grid": [100, 316, 1000, 3162, 10000],
            "seed": 13
        }"#);
    let tol = Tolerances::default();
    let out = run_davies_verify(&c, &tol).unwrap();
    let fit = out.fit.expect("log-log fit");
    let slope_ok = (fit.slope + 0.5).abs() <= tol.slope_davies;

    // The self-term-excluded variant must flatten onto its analytic floor,
    // pinning the inclusive form as the true expectation.
    let floor = out.rows.last().unwrap().frobenius_distance_excluded;
    let floor_ok = (floor / out.expected_floor - 1.0).abs() <= 0.2;

    report(
        4,
        "Davies expectation",
        slope_ok && floor_ok,
        &format!(
            "slope {:.4} (want -0.5 +/- {}), excluded-variant floor {:.5} vs analytic {:.5}",
            fit.slope, tol.slope_davies, floor, out.expected_floor
        ),
    );
}

/// Three-qubit fixture shared by criteria 5 and 6: transverse-field Ising
/// chain, Metropolis weights at beta = 1, per-jump scale 1/(N+1).
fn three_qubit_davies() -> (lindblad_core::linalg::HermEig, WeightFunction, f64) {
    let h = lindblad_core::hamiltonians::spin_chain_hamiltonian(
        lindblad_core::hamiltonians::SpinChainKind::Tfim,
        3,
        1.0,
        0.6,
    )
    .unwrap();
    let eig = herm_eig(&h).unwrap();
    let gamma = WeightFunction::new(WeightKind::Metropolis, 1.0).unwrap();
    let sigma2 = 1.0 / (eig.dim() as f64 + 1.0);
    (eig, gamma, sigma2)
}

#[test]
fn criterion_05_pauli_master_equation() {
    let (eig, gamma, sigma2) = three_qubit_davies();
    let n = eig.dim();
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let sup = analytic_davies(&eig, &gamma, sigma2, true).unwrap();
    let q = pauli_master_matrix(&values, &gamma, sigma2);
    let qc = CMat::from_fn(n, n, |i, j| Complex64::new(q[(i, j)], 0.0));

    // Random eigenbasis-diagonal initial state.
    let mut rng = stream(29, domain::PROBE, 0, 0);
    let mut p0: Vec<f64> = (0..n).map(|_| -f64::ln(rng.random::<f64>())).collect();
    let z: f64 = p0.iter().sum();
    for p in &mut p0 {
        *p /= z;
    }
    let rho0_eig = CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(p0[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rho0 = &eig.vectors * &rho0_eig * eig.vectors.adjoint();

    let mut worst = 0.0f64;
    let mut max_offdiag = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let rho_t = devectorize(&(expm(&sup.mat().scale(t)).unwrap() * vectorize(&rho0))).unwrap();
        let rho_t_eig = eig.vectors.adjoint() * &rho_t * &eig.vectors;
        let p_t = expm(&qc.scale(t)).unwrap()
            * nalgebra::DVector::from_iterator(n, p0.iter().map(|&p| Complex64::new(p, 0.0)));
        for i in 0..n {
            worst = worst.max((rho_t_eig[(i, i)].re - p_t[i].re).abs());
            for j in 0..n {
                if i != j {
                    max_offdiag = max_offdiag.max(rho_t_eig[(i, j)].norm());
                }
            }
        }
    }
    let ok = worst <= 1e-8 && max_offdiag <= 1e-10;
    report(
        5,
        "Pauli master equation",
        ok,
        &format!(
            "max |population - expm(tQ) p0| = {worst:.2e} (want <= 1e-8); max stray coherence {max_offdiag:.2e}"
        ),
    );
}

#[test]
fn criterion_06_coherence_decay() {
    let (eig, gamma, sigma2) = three_qubit_davies();
    let n = eig.dim();
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let sup = analytic_davies(&eig, &gamma, sigma2, true).unwrap();

    // Uniform superposition in the eigenbasis: every coherence starts at 1/N.
    let rho0_eig = CMat::from_element(n, n, Complex64::new(1.0 / n as f64, 0.0));
    let rho0 = &eig.vectors * &rho0_eig * eig.vectors.adjoint();

    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let rho_t = devectorize(&(expm(&sup.mat().scale(t)).unwrap() * vectorize(&rho0))).unwrap();
        let rho_t_eig = eig.vectors.adjoint() * &rho_t * &eig.vectors;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let rate = coherence_decay_rate(i, j, &values, &gamma, sigma2).unwrap();
                    let expected = (-rate * t).exp() / n as f64;
                    let rel = (rho_t_eig[(i, j)].norm() - expected).abs() / expected;
                    worst = worst.max(rel);
                }
            }
        }
    }
    let ok = worst <= 1e-8;
    report(
        6,
        "coherence decay",
        ok,
        &format!("max relative deviation from exp(-rate t)/N = {worst:.2e} (want <= 1e-8)"),
    );
}

#[test]
fn criterion_07_detailed_balance_and_gap_machinery() {
    let beta = 1.0;
    let gamma = WeightFunction::new(WeightKind::Metropolis, beta).unwrap();

    let mut max_residual = 0.0f64;
    let mut max_gap_diff = 0.0f64;
    for n in 1..=3usize {
        let h = if n == 1 {
            CMat::from_fn(2, 2, |i, j| {
                if i == 1 && j == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        } else {
            lindblad_core::hamiltonians::spin_chain_hamiltonian(
                lindblad_core::hamiltonians::SpinChainKind::Tfim,
                n,
                1.0,
                0.6,
            )
            .unwrap()
        };
        let eig = herm_eig(&h).unwrap();
        let dim = eig.dim();
        let sigma2 = 1.0 / dim as f64;
        let sup = analytic_davies(&eig, &gamma, sigma2, true).unwrap();
        let ctx = GibbsContext::new(&h, beta).unwrap();
        max_residual = max_residual.max(detailed_balance_residual(&sup, &ctx).unwrap());

        let full_gap = spectral_gap(&sup, &ctx).unwrap().gap;
        let values: Vec<f64> = eig.values.iter().copied().collect();
        let cert = davies_gap_certificate(&values, &gamma, sigma2).unwrap();
        max_gap_diff = max_gap_diff.max((full_gap - cert.exact_gap).abs());
    }
    let db_ok = max_residual <= 1e-10;
    let gap_ok = max_gap_diff <= 1e-8;

    // Chi-square contraction at the proven rate on 20 random mixed states.
    let h = lindblad_core::hamiltonians::spin_chain_hamiltonian(
        lindblad_core::hamiltonians::SpinChainKind::Tfim,
        2,
        1.0,
        0.6,
    )
    .unwrap();
    let eig = herm_eig(&h).unwrap();
    let dim = eig.dim();
    let sup = analytic_davies(&eig, &gamma, 1.0 / dim as f64, true).unwrap();
    let ctx = GibbsContext::new(&h, beta).unwrap();
    let gap = spectral_gap(&sup, &ctx).unwrap().gap;
    let t = 0.3;
    let prop = expm(&sup.mat().scale(t)).unwrap();
    let bound_factor = (-2.0 * gap * t).exp() * (1.0 + 1e-6);

    let mut contraction_ok = true;
    let mut worst_factor = 0.0f64;
    let mut rng = stream(31, domain::PROBE, 0, 0);
    for _ in 0..20 {
        let g = CMat::from_fn(dim, dim, |_, _| {
            Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let mut rho = &g * g.adjoint();
        let tr = rho.trace().re;
        rho = rho.map(|x| x / Complex::from(Complex64::new(tr, 0.0).re));
        let chi0 = chi_square(&ctx, &rho);
        let rho_t = devectorize(&(&prop * vectorize(&rho))).unwrap();
        let factor = chi_square(&ctx, &rho_t) / chi0;
        worst_factor = worst_factor.max(factor);
        contraction_ok &= factor <= bound_factor;
    }

    report(
        7,
        "detailed balance and gap machinery",
        db_ok && gap_ok && contraction_ok,
        &format!(
            "max DB residual {max_residual:.2e} (want <= 1e-10); max |full - block| gap diff {max_gap_diff:.2e} (want <= 1e-8); worst chi-square factor {worst_factor:.6} vs bound {bound_factor:.6}"
        ),
    );
}

#[test]
fn criterion_08_gap_certificate_bounds() {
    // 50 seeded random spectra with 3..=6 levels at mixed temperatures.
    let mut rng = stream(83, domain::SPECTRUM, 1, 0);
    let mut worst_gap_margin = f64::INFINITY;
    let mut worst_chain_margin = f64::INFINITY;
    let mut ok = true;
    for trial in 0..50u64 {
        let n = 3 + (trial % 4) as usize;
        let width = 1.0 + 2.0 * rng.random::<f64>();
        let mut values: Vec<f64> = (0..n).map(|_| width * rng.random::<f64>()).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let beta = [0.5, 1.0, 2.0][(trial % 3) as usize];
        let gamma = WeightFunction::new(WeightKind::Metropolis, beta).unwrap();
        let cert = davies_gap_certificate(&values, &gamma, 1.0 / n as f64).unwrap();
        let bounds = gap_bounds(&values, beta).unwrap();
        worst_gap_margin = worst_gap_margin.min(cert.exact_gap - 0.5 * bounds.alpha);
        worst_chain_margin = worst_chain_margin.min(bounds.exact_chain_gap - bounds.min_ratio);
        ok &= cert.exact_gap >= 0.5 * bounds.alpha - 1e-12
            && bounds.exact_chain_gap >= bounds.min_ratio - 1e-12;
    }

    // Ten-qubit random Pauli-string Hamiltonian across temperatures.
    let values = hps_spectrum();
    let n_levels = values.len() as f64;
    for beta in [1.0, 2.0, 4.0] {
        let gamma = WeightFunction::new(WeightKind::Metropolis, beta).unwrap();
        let cert = davies_gap_certificate(values, &gamma, 1.0 / n_levels).unwrap();
        let bounds = gap_bounds(values, beta).unwrap();
        worst_gap_margin = worst_gap_margin.min(cert.exact_gap - 0.5 * bounds.alpha);
        worst_chain_margin = worst_chain_margin.min(bounds.exact_chain_gap - bounds.min_ratio);
        ok &= cert.exact_gap >= 0.5 * bounds.alpha - 1e-12
            && bounds.exact_chain_gap >= bounds.min_ratio - 1e-12;
    }

    report(
        8,
        "gap certificate bounds",
        ok,
        &format!(
            "min margin of exact_gap - alpha/2 = {worst_gap_margin:.3e}, of exact_chain_gap - min_ratio = {worst_chain_margin:.3e} (both want >= -1e-12)"
        ),
    );
}

#[test]
fn criterion_09_semicircle_adherence() {
    let values = hps_spectrum();
    let cdf = SpectralCdf::new(values).unwrap();
    let ks = cdf.ks_distance(semicircle_cdf);
    let ks_ok = ks <= 0.05;

    // Semicircle-law integral over [-2, -2 + 1/beta] at beta = 4.
    let reference = 0.026022774371879;
    let fraction = low_energy_fraction(values, 4.0);
    let frac_ok = fraction >= reference / 3.0 && fraction <= reference * 3.0;

    report(
        9,
        "semicircle adherence",
        ks_ok && frac_ok,
        &format!(
            "KS distance {ks:.4} (want <= 0.05); low-energy fraction {fraction:.5} vs semicircle integral {reference:.5} (want within factor 3)"
        ),
    );
}

#[test]
fn criterion_10_step_algorithm_truncation_order() {
    // One-qubit fixture: splitting Hamiltonian plus a bit-flip jump in a
    // single term. The flip dissipator does not commute with the splitting,
    // so the first-order split carries a genuine O(tau^2) error. (A pure
    // lowering jump would commute and make the split exact.)
    let h = CMat::from_fn(2, 2, |i, j| {
        if i == 1 && j == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let v = CMat::from_fn(2, 2, |i, j| {
        if i != j {
            Complex64::new(0.9, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let term = LindbladTerm::new(Some(h), Some(v)).unwrap();
    let exact_gen = term.to_lindbladian().superoperator().unwrap();
    let probe = DensityMatrix::pure(&nalgebra::DVector::from_vec(vec![
        Complex64::new(0.8, 0.0),
        Complex64::new(0.36, 0.48),
    ]))
    .unwrap();

    let tol = Tolerances::default();
    let mut details = Vec::new();
    let mut ok = true;
    for (label, alg) in [
        ("TrotterSplit", StepAlgorithm::TrotterSplit),
        ("DilationHS", StepAlgorithm::DilationHS),
    ] {
        let mut pts = Vec::new();
        for k in 0..5 {
            let tau = 0.2 / f64::powi(2.0, k);
            let step = term_step_superop(&term, alg, tau).unwrap();
            let exact = expm(&exact_gen.mat().scale(tau)).unwrap();
            let out_step = devectorize(&(&step * vectorize(probe.matrix()))).unwrap();
            let out_exact = devectorize(&(&exact * vectorize(probe.matrix()))).unwrap();
            pts.push((tau, trace_distance(&out_step, &out_exact).unwrap()));
        }
        let fit = fit_loglog_slope(&pts).unwrap();
        ok &= (fit.slope - 2.0).abs() <= tol.slope_truncation;
        details.push(format!("{label} slope {:.4}", fit.slope));
    }

    report(
        10,
        "step-algorithm truncation order",
        ok,
        &format!(
            "{} (want 2.0 +/- {})",
            details.join(", "),
            tol.slope_truncation
        ),
    );
}
