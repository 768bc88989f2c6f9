//! Experiment drivers. Each `run_*` function validates its preconditions,
//! computes a structured outcome (pure data, no I/O), and has a matching
//! `emit_*` that writes the canonical CSV/JSON/SVG files.
//!
//! Parallel sections fan out over fixed index ranges (grid points,
//! trajectory ids, sample chunks) and reduce in index order, so outputs are
//! byte-identical for any worker count.

use lindblad_core::davies::analytic_davies;
use lindblad_core::linalg::{expm, herm_eig, vectorize, CMat};
use lindblad_core::lindblad::{choi_matrix, DensityMatrix, Superoperator};
use lindblad_core::metrics::{
    chi_square, detailed_balance_residual, spectral_gap, trace_distance, weighted_l2_norm,
    GibbsContext,
};
use lindblad_core::qdrift::{
    average_channel_power, average_step_superop, term_step_superop, EnsembleSpec, EnsembleVariant,
    StepAlgorithm, Stepper,
};
use lindblad_core::stream::{domain, stream};
use lindblad_core::{Result, SimError};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnsembleConfig, ExperimentConfig, Tolerances, WeightKindConfig};
use crate::fit::{fit_loglog_slope, fit_semilog_rate, SlopeFit};
use crate::output::{fmt_value, OutputSink, SvgPlot, SvgSeries};
use crate::systems::{
    build_ensemble, build_hamiltonian, initial_state, random_pure_state, step_algorithm,
    weight_kind,
};

/// Sub-seed for grid point `g`, so trajectories at different grid points
/// never share per-step streams.
fn grid_seed(seed: u64, g: u64) -> u64 {
    stream(seed, domain::GRID, g, 0).random()
}

fn exact_propagator(mean: &Superoperator, t: f64) -> Result<Superoperator> {
    Superoperator::new(expm(&mean.mat().scale(t))?)
}

// ---------------------------------------------------------------------------
// scaling-average
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScalingAverageRow {
    pub m: u64,
    /// Max over the declared probe states of the trace distance between the
    /// averaged channel output and the exact-semigroup output.
    pub trace_distance: f64,
    pub choi_distance: f64,
    pub trace_distance_mixed: f64,
    pub trace_distance_pure: f64,
}

#[derive(Debug)]
pub struct ScalingAverageOutcome {
    pub rows: Vec<ScalingAverageRow>,
    pub fit: Option<SlopeFit>,
}

pub fn run_scaling_average(
    cfg: &ExperimentConfig,
    _tol: &Tolerances,
) -> Result<ScalingAverageOutcome> {
    let h = build_hamiltonian(cfg)?;
    let ens = build_ensemble(cfg, &h)?;
    let alg = step_algorithm(cfg.alg);
    let t = cfg.t_total_required()?;
    let m_grid = cfg.m_grid_required()?.to_vec();
    let dim = ens.dim();

    let exact = exact_propagator(&ens.mean_generator()?, t)?;
    let exact_choi = choi_matrix(&exact);
    let probes = [
        DensityMatrix::maximally_mixed(dim),
        random_pure_state(dim, cfg.seed, 0)?,
    ];
    let exact_outs: Vec<CMat> = probes
        .iter()
        .map(|p| exact.apply(p.matrix()))
        .collect::<Result<_>>()?;

    let rows: Vec<ScalingAverageRow> = m_grid
        .par_iter()
        .map(|&m| -> Result<ScalingAverageRow> {
            let tau = t / m as f64;
            let channel = average_channel_power(&ens, alg, tau, m)?;
            let d_mixed = trace_distance(&channel.apply(probes[0].matrix())?, &exact_outs[0])?;
            let d_pure = trace_distance(&channel.apply(probes[1].matrix())?, &exact_outs[1])?;
            let d_choi = trace_distance(&choi_matrix(&channel), &exact_choi)?;
            Ok(ScalingAverageRow {
                m,
                trace_distance: d_mixed.max(d_pure),
                choi_distance: d_choi,
                trace_distance_mixed: d_mixed,
                trace_distance_pure: d_pure,
            })
        })
        .collect::<Result<_>>()?;

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.m as f64, r.trace_distance))
        .collect();
    let fit = fit_loglog_slope(&pts).ok();
    Ok(ScalingAverageOutcome { rows, fit })
}

pub fn emit_scaling_average(sink: &mut OutputSink, out: &ScalingAverageOutcome) -> Result<()> {
    sink.write_csv(
        "scaling_average.csv",
        &["M", "trace_distance", "choi_distance"],
        &out.rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    fmt_value(r.trace_distance),
                    fmt_value(r.choi_distance),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    sink.write_csv(
        "scaling_average_probes.csv",
        &["M", "trace_distance_mixed", "trace_distance_pure"],
        &out.rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    fmt_value(r.trace_distance_mixed),
                    fmt_value(r.trace_distance_pure),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    sink.write_svg(
        "scaling_average.svg",
        &SvgPlot {
            title: "Average-channel error vs step count".into(),
            x_label: "M".into(),
            y_label: "distance".into(),
            log_x: true,
            log_y: true,
            series: vec![
                SvgSeries {
                    label: "trace distance (max probe)".into(),
                    points: out
                        .rows
                        .iter()
                        .map(|r| (r.m as f64, r.trace_distance))
                        .collect(),
                },
                SvgSeries {
                    label: "Choi distance".into(),
                    points: out
                        .rows
                        .iter()
                        .map(|r| (r.m as f64, r.choi_distance))
                        .collect(),
                },
            ],
        },
    )
}

// ---------------------------------------------------------------------------
// scaling-random
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScalingRandomRow {
    pub m: u64,
    /// Mean over trajectories of the squared weighted L2 error.
    pub mean_sq_weighted_error: f64,
    /// Standard error of that mean.
    pub std_error: f64,
}

#[derive(Debug)]
pub struct ScalingRandomOutcome {
    pub rows: Vec<ScalingRandomRow>,
    pub fit: Option<SlopeFit>,
}

pub fn run_scaling_random(
    cfg: &ExperimentConfig,
    tol: &Tolerances,
) -> Result<ScalingRandomOutcome> {
    let h = build_hamiltonian(cfg)?;
    let ens = build_ensemble(cfg, &h)?;
    let alg = step_algorithm(cfg.alg);
    let t = cfg.t_total_required()?;
    let beta = cfg.beta_required()?;
    let n_traj = cfg.n_traj_required()?;
    let m_grid = cfg.m_grid_required()?.to_vec();
    let ctx = GibbsContext::new(&h, beta)?;

    if let Some(b) = ens.bounds() {
        if b.lambda > 0.0 {
            let tau_max = t / m_grid[0] as f64;
            let guard = tol.tau_guard_factor / (b.lambda * b.lambda * t);
            if tau_max > guard * (1.0 + 1e-12) {
                return Err(SimError::Precondition(format!(
                    "step-size guard: largest tau = {tau_max:.6e} exceeds \
                     tau_guard_factor / (lambda^2 T) = {guard:.6e}; raise the smallest M \
                     or relax the guard"
                )));
            }
        }
    }

    let rho0 = initial_state(cfg, Some(&ctx), ens.dim())?;
    let exact_final = exact_propagator(&ens.mean_generator()?, t)?.apply(rho0.matrix())?;

    let rows: Vec<ScalingRandomRow> = m_grid
        .par_iter()
        .enumerate()
        .map(|(g, &m)| -> Result<ScalingRandomRow> {
            let tau = t / m as f64;
            let stepper = Stepper::new(&ens, alg, tau)?;
            let gseed = grid_seed(cfg.seed, g as u64);
            let sq_errors: Vec<f64> = (0..n_traj)
                .into_par_iter()
                .map(|id| -> Result<f64> {
                    let rec = stepper.run_trajectory(m, &rho0, gseed, id, None)?;
                    let diff = rec.final_state.matrix() - &exact_final;
                    Ok(weighted_l2_norm(&ctx, &diff).powi(2))
                })
                .collect::<Result<_>>()?;
            let n = sq_errors.len() as f64;
            let mean = sq_errors.iter().sum::<f64>() / n;
            let var = sq_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(ScalingRandomRow {
                m,
                mean_sq_weighted_error: mean,
                std_error: (var / n).sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.m as f64, r.mean_sq_weighted_error))
        .collect();
    let fit = fit_loglog_slope(&pts).ok();
    Ok(ScalingRandomOutcome { rows, fit })
}

pub fn emit_scaling_random(sink: &mut OutputSink, out: &ScalingRandomOutcome) -> Result<()> {
    sink.write_csv(
        "scaling_random.csv",
        &["M", "mean_sq_weighted_error", "std_error"],
        &out.rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    fmt_value(r.mean_sq_weighted_error),
                    fmt_value(r.std_error),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    sink.write_svg(
        "scaling_random.svg",
        &SvgPlot {
            title: "Random-channel mean squared error vs step count".into(),
            x_label: "M".into(),
            y_label: "mean squared weighted error".into(),
            log_x: true,
            log_y: true,
            series: vec![SvgSeries {
                label: "E e^2".into(),
                points: out
                    .rows
                    .iter()
                    .map(|r| (r.m as f64, r.mean_sq_weighted_error))
                    .collect(),
            }],
        },
    )
}

// ---------------------------------------------------------------------------
// gibbs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GibbsRow {
    pub m: u64,
    pub chi_square_random_mean: f64,
    pub chi_square_average: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsCurveSummary {
    pub tau: f64,
    pub m_steps: u64,
    /// Mean chi-square over the final 20% of steps.
    pub plateau_random: f64,
    pub plateau_average: f64,
    /// Exponential decay rate fitted on the pre-plateau window, if the
    /// window holds at least four points.
    pub decay_rate_random: Option<f64>,
    pub decay_rate_average: Option<f64>,
}

#[derive(Debug)]
pub struct GibbsCurve {
    pub rows: Vec<GibbsRow>,
    pub summary: GibbsCurveSummary,
}

#[derive(Debug)]
pub struct GibbsOutcome {
    pub db_residual: f64,
    pub spectral_gap: f64,
    pub curves: Vec<GibbsCurve>,
}

/// Deterministic Monte Carlo estimate of the average single-step channel of
/// a continuous ensemble: the empirical mean of `n_samples` seeded
/// single-term step channels. Samples are summed in fixed chunks so the
/// result is independent of worker count.
fn mc_mean_step_superop(
    ens: &EnsembleSpec,
    alg: StepAlgorithm,
    tau: f64,
    n_samples: u64,
    seed: u64,
    g: u64,
) -> Result<Superoperator> {
    if n_samples < 2 {
        return Err(SimError::Input(format!(
            "config: n_samples = {n_samples} must be >= 2"
        )));
    }
    let d2 = ens.dim() * ens.dim();
    const CHUNK: u64 = 512;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partial: Vec<CMat> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<CMat> {
            let mut acc = CMat::zeros(d2, d2);
            for s in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let mut rng = stream(seed, domain::SAMPLER, g, s);
                let (term, _) = ens.sample_term(&mut rng);
                acc += term_step_superop(&term, alg, tau)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = CMat::zeros(d2, d2);
    for p in partial {
        total += p;
    }
    Superoperator::new(total.scale(1.0 / n_samples as f64))
}

fn plateau_of(chis: &[f64]) -> f64 {
    // Mean over the final 20% of steps (excluding step 0).
    let m = chis.len() - 1;
    let start = ((0.8 * m as f64).ceil() as usize).clamp(1, m);
    let window = &chis[start..=m];
    window.iter().sum::<f64>() / window.len() as f64
}

fn decay_rate(chis: &[f64], tau: f64, plateau: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = chis
        .iter()
        .enumerate()
        .skip(1)
        .take_while(|(_, &c)| c > 50.0 * plateau)
        .map(|(m, &c)| (m as f64 * tau, c))
        .collect();
    fit_semilog_rate(&pts).ok().map(|f| -f.slope)
}

pub fn run_gibbs(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<GibbsOutcome> {
    let h = build_hamiltonian(cfg)?;
    let ens = build_ensemble(cfg, &h)?;
    let alg = step_algorithm(cfg.alg);
    let beta = cfg.beta_required()?;
    let n_traj = cfg.n_traj_required()?;
    let ctx = GibbsContext::new(&h, beta)?;

    let mean = ens.mean_generator()?;
    let db_residual = detailed_balance_residual(&mean, &ctx)?;
    if db_residual > tol.db_residual {
        return Err(SimError::Precondition(format!(
            "detailed-balance residual {db_residual:.3e} exceeds {:.3e}: the mean generator \
             does not target the configured Gibbs state",
            tol.db_residual
        )));
    }
    let gap = spectral_gap(&mean, &ctx)?;
    let rho0 = initial_state(cfg, Some(&ctx), ens.dim())?;
    let chi0 = chi_square(&ctx, rho0.matrix());
    let n_samples = cfg.n_samples.unwrap_or(200_000);

    let mut curves = Vec::new();
    for (g, tau) in cfg.tau_values()?.into_iter().enumerate() {
        let m_steps = cfg.steps_for_tau(tau)?;

        let avg_step = match ens.variant() {
            EnsembleVariant::Discrete { .. } => average_step_superop(&ens, alg, tau)?,
            EnsembleVariant::Sampler(_) => {
                mc_mean_step_superop(&ens, alg, tau, n_samples, cfg.seed, g as u64)?
            }
        };
        let mut chi_avg = Vec::with_capacity(m_steps as usize + 1);
        chi_avg.push(chi0);
        let mut v = vectorize(rho0.matrix());
        for _ in 1..=m_steps {
            v = avg_step.apply_vec(&v);
            chi_avg.push(chi_square(&ctx, &lindblad_core::linalg::devectorize(&v)?));
        }

        let gseed = grid_seed(cfg.seed, g as u64);
        let stepper = Stepper::new(&ens, alg, tau)?;
        let per_traj: Vec<Vec<f64>> = (0..n_traj)
            .into_par_iter()
            .map(|id| -> Result<Vec<f64>> {
                let rec = stepper.run_trajectory(m_steps, &rho0, gseed, id, Some(1))?;
                Ok(rec
                    .snapshots
                    .iter()
                    .map(|(_, rho)| chi_square(&ctx, rho))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut chi_rand = vec![0.0f64; m_steps as usize + 1];
        chi_rand[0] = chi0;
        for traj in &per_traj {
            for (k, c) in traj.iter().enumerate() {
                chi_rand[k + 1] += c;
            }
        }
        for c in chi_rand.iter_mut().skip(1) {
            *c /= n_traj as f64;
        }

        let plateau_random = plateau_of(&chi_rand);
        let plateau_average = plateau_of(&chi_avg);
        let rows = (0..=m_steps as usize)
            .map(|m| GibbsRow {
                m: m as u64,
                chi_square_random_mean: chi_rand[m],
                chi_square_average: chi_avg[m],
            })
            .collect();
        curves.push(GibbsCurve {
            rows,
            summary: GibbsCurveSummary {
                tau,
                m_steps,
                plateau_random,
                plateau_average,
                decay_rate_random: decay_rate(&chi_rand, tau, plateau_random),
                decay_rate_average: decay_rate(&chi_avg, tau, plateau_average),
            },
        });
    }

    Ok(GibbsOutcome {
        db_residual,
        spectral_gap: gap.gap,
        curves,
    })
}

#[derive(Serialize)]
struct GibbsSummaryBody<'a> {
    beta: f64,
    db_residual: f64,
    spectral_gap: f64,
    curves: Vec<&'a GibbsCurveSummary>,
}

pub fn emit_gibbs(sink: &mut OutputSink, cfg: &ExperimentConfig, out: &GibbsOutcome) -> Result<()> {
    for (g, curve) in out.curves.iter().enumerate() {
        sink.write_csv(
            &format!("gibbs_tau_{g}.csv"),
            &["m", "chi_square_random_mean", "chi_square_average"],
            &curve
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        fmt_value(r.chi_square_random_mean),
                        fmt_value(r.chi_square_average),
                    ]
                })
                .collect::<Vec<_>>(),
        )?;
        sink.write_svg(
            &format!("gibbs_tau_{g}.svg"),
            &SvgPlot {
                title: format!("Chi-square decay, tau = {}", curve.summary.tau),
                x_label: "step m".into(),
                y_label: "chi-square".into(),
                log_x: false,
                log_y: true,
                series: vec![
                    SvgSeries {
                        label: "random channel (mean)".into(),
                        points: curve
                            .rows
                            .iter()
                            .map(|r| (r.m as f64, r.chi_square_random_mean))
                            .collect(),
                    },
                    SvgSeries {
                        label: "average channel".into(),
                        points: curve
                            .rows
                            .iter()
                            .map(|r| (r.m as f64, r.chi_square_average))
                            .collect(),
                    },
                ],
            },
        )?;
    }
    sink.write_json(
        "gibbs_summary.json",
        &GibbsSummaryBody {
            beta: cfg.beta_required()?,
            db_residual: out.db_residual,
            spectral_gap: out.spectral_gap,
            curves: out.curves.iter().map(|c| &c.summary).collect(),
        },
    )
}

// ---------------------------------------------------------------------------
// davies-verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DaviesVerifyRow {
    pub s: u64,
    pub frobenius_distance: f64,
    /// Distance to the variant with self-terms dropped from the coherence
    /// rates; converges to a positive floor, pinning the inclusive form.
    pub frobenius_distance_excluded: f64,
}

#[derive(Debug)]
pub struct DaviesVerifyOutcome {
    pub rows: Vec<DaviesVerifyRow>,
    pub fit: Option<SlopeFit>,
    pub expected_floor: f64,
}

pub fn run_davies_verify(cfg: &ExperimentConfig, _tol: &Tolerances) -> Result<DaviesVerifyOutcome> {
    let h = build_hamiltonian(cfg)?;
    let dim = h.nrows();
    if dim > 16 {
        return Err(SimError::Precondition(format!(
            "davies-verify: full-superoperator comparison needs dimension <= 16, got {dim}"
        )));
    }
    let ens = build_ensemble(cfg, &h)?;
    let beta = cfg.beta_required()?;
    let gamma_kind = match cfg.ensemble_required()? {
        EnsembleConfig::DaviesRandom { gamma, .. } => *gamma,
        _ => unreachable!("validated: davies-verify implies davies_random"),
    };
    let gamma = lindblad_core::davies::WeightFunction::new(weight_kind(gamma_kind), beta)?;
    let eig = herm_eig(&h)?;
    // Haar involution second moment: E|A_ij|^2 = 1/(N+1) off the diagonal.
    let sigma2 = 1.0 / (dim as f64 + 1.0);
    let analytic_inc = ens.mean_generator()?;
    let analytic_exc = analytic_davies(&eig, &gamma, sigma2, false)?;
    // With the self-terms dropped, every one of the N^2 - N coherence rates
    // shifts by gamma(0) sigma2.
    let expected_floor = gamma.eval(0.0) * sigma2 * ((dim * dim - dim) as f64).sqrt();

    let s_grid = cfg
        .s_grid
        .as_ref()
        .ok_or_else(|| SimError::Input("config: s_grid is required for davies-verify".into()))?
        .clone();
    let d2 = dim * dim;
    const CHUNK: u64 = 256;

    let rows: Vec<DaviesVerifyRow> = s_grid
        .par_iter()
        .enumerate()
        .map(|(g, &s_count)| -> Result<DaviesVerifyRow> {
            let n_chunks = s_count.div_ceil(CHUNK);
            let partial: Vec<CMat> = (0..n_chunks)
                .into_par_iter()
                .map(|c| -> Result<CMat> {
                    let mut acc = CMat::zeros(d2, d2);
                    for s in c * CHUNK..((c + 1) * CHUNK).min(s_count) {
                        let mut rng = stream(cfg.seed, domain::SAMPLER, g as u64, s);
                        let (term, _) = ens.sample_term(&mut rng);
                        acc += term.to_lindbladian().superoperator()?.mat();
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut mean = CMat::zeros(d2, d2);
            for p in partial {
                mean += p;
            }
            mean /= num_complex::Complex64::new(s_count as f64, 0.0);
            Ok(DaviesVerifyRow {
                s: s_count,
                frobenius_distance: (&mean - analytic_inc.mat()).norm(),
                frobenius_distance_excluded: (&mean - analytic_exc.mat()).norm(),
            })
        })
        .collect::<Result<_>>()?;

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.s as f64, r.frobenius_distance))
        .collect();
    let fit = fit_loglog_slope(&pts).ok();
    Ok(DaviesVerifyOutcome {
        rows,
        fit,
        expected_floor,
    })
}

pub fn emit_davies_verify(sink: &mut OutputSink, out: &DaviesVerifyOutcome) -> Result<()> {
    sink.write_csv(
        "davies_verify.csv",
        &["S", "frobenius_distance", "frobenius_distance_excluded"],
        &out.rows
            .iter()
            .map(|r| {
                vec![
                    r.s.to_string(),
                    fmt_value(r.frobenius_distance),
                    fmt_value(r.frobenius_distance_excluded),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    sink.write_svg(
        "davies_verify.svg",
        &SvgPlot {
            title: "Sampled mean generator vs analytic form".into(),
            x_label: "samples S".into(),
            y_label: "Frobenius distance".into(),
            log_x: true,
            log_y: true,
            series: vec![
                SvgSeries {
                    label: "vs inclusive form".into(),
                    points: out
                        .rows
                        .iter()
                        .map(|r| (r.s as f64, r.frobenius_distance))
                        .collect(),
                },
                SvgSeries {
                    label: "vs self-term-excluded form".into(),
                    points: out
                        .rows
                        .iter()
                        .map(|r| (r.s as f64, r.frobenius_distance_excluded))
                        .collect(),
                },
            ],
        },
    )
}

// ---------------------------------------------------------------------------
// gap-cert and spectrum
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GapCertOutcome {
    pub exact_gap: f64,
    pub alpha: f64,
    pub min_ratio: f64,
    pub low_energy_fraction: f64,
    pub ks_distance: f64,
    pub classical_gap: f64,
    pub min_coherence_rate: f64,
    pub lower_bound: f64,
    pub exact_chain_gap: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub dim: usize,
}

pub fn run_gap_certificate(cfg: &ExperimentConfig, _tol: &Tolerances) -> Result<GapCertOutcome> {
    let h = build_hamiltonian(cfg)?;
    let beta = cfg.beta_required()?;
    let dim = h.nrows();
    let gamma_kind = match &cfg.ensemble {
        Some(EnsembleConfig::DaviesRandom { gamma, .. }) => *gamma,
        Some(_) => unreachable!("validated: gap-cert ensemble is davies_random"),
        None => WeightKindConfig::Metropolis,
    };
    let gamma = lindblad_core::davies::WeightFunction::new(weight_kind(gamma_kind), beta)?;
    let sigma2 = cfg.sigma2.unwrap_or(1.0 / dim as f64);

    let eig = herm_eig(&h)?;
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let cert = lindblad_core::davies::davies_gap_certificate(&values, &gamma, sigma2)?;
    let bounds = lindblad_core::davies::gap_bounds(&values, beta)?;
    let cdf = lindblad_core::hamiltonians::SpectralCdf::new(&values)?;
    let ks_distance = cdf.ks_distance(lindblad_core::hamiltonians::semicircle_cdf);

    Ok(GapCertOutcome {
        exact_gap: cert.exact_gap,
        alpha: bounds.alpha,
        min_ratio: bounds.min_ratio,
        low_energy_fraction: cert.low_energy_fraction,
        ks_distance,
        classical_gap: cert.classical_gap,
        min_coherence_rate: cert.min_coherence_rate,
        lower_bound: cert.lower_bound,
        exact_chain_gap: bounds.exact_chain_gap,
        beta,
        sigma2,
        dim,
    })
}

pub fn emit_gap_certificate(sink: &mut OutputSink, out: &GapCertOutcome) -> Result<()> {
    sink.write_json("gap_certificate.json", out)
}

#[derive(Debug, Serialize)]
pub struct SpectrumOutcome {
    pub dim: usize,
    pub ks_distance: f64,
    pub low_energy_fraction: Option<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

pub fn run_spectrum(cfg: &ExperimentConfig, _tol: &Tolerances) -> Result<SpectrumOutcome> {
    let h = build_hamiltonian(cfg)?;
    let eig = herm_eig(&h)?;
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let cdf = lindblad_core::hamiltonians::SpectralCdf::new(&values)?;
    let ks_distance = cdf.ks_distance(lindblad_core::hamiltonians::semicircle_cdf);
    let low_energy_fraction = cfg
        .beta
        .map(|b| lindblad_core::hamiltonians::low_energy_fraction(&values, b));
    Ok(SpectrumOutcome {
        dim: values.len(),
        ks_distance,
        low_energy_fraction,
        values,
    })
}

pub fn emit_spectrum(sink: &mut OutputSink, out: &SpectrumOutcome) -> Result<()> {
    sink.write_csv(
        "spectrum.csv",
        &["index", "eigenvalue"],
        &out.values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), fmt_value(*v)])
            .collect::<Vec<_>>(),
    )?;
    sink.write_json("spectrum_report.json", out)?;

    let n = out.values.len() as f64;
    let empirical: Vec<(f64, f64)> = out
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as f64 / n))
        .collect();
    let lo = out.values.first().copied().unwrap_or(-2.0).min(-2.0);
    let hi = out.values.last().copied().unwrap_or(2.0).max(2.0);
    let reference: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / 200.0;
            (x, lindblad_core::hamiltonians::semicircle_cdf(x))
        })
        .collect();
    sink.write_svg(
        "spectrum_cdf.svg",
        &SvgPlot {
            title: "Spectral CDF vs semicircle law".into(),
            x_label: "eigenvalue".into(),
            y_label: "CDF".into(),
            log_x: false,
            log_y: false,
            series: vec![
                SvgSeries {
                    label: "empirical".into(),
                    points: empirical,
                },
                SvgSeries {
                    label: "semicircle".into(),
                    points: reference,
                },
            ],
        },
    )
}
