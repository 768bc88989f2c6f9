//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 configuration error, 3 precondition failure
//! (diagnostics on stderr), 4 numeric range error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lindblad_core::SimError;
use lindblad_experiments::config::{ExperimentConfig, ExperimentKind, Tolerances};
use lindblad_experiments::drivers;
use lindblad_experiments::output::{OutputSink, RunMeta};

#[derive(Parser)]
#[command(
    name = "lindblad-experiments",
    version,
    about = "Randomized Lindblad simulation experiments: scaling laws, Gibbs convergence, \
             random-jump verification, spectral-gap certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config (unknown keys rejected).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per CPU).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON tolerances override file.
    #[arg(long)]
    tolerances: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Average-channel error vs step count on a fixed-time grid.
    ScalingAverage(RunArgs),
    /// Random-channel mean squared weighted error vs step count.
    ScalingRandom(RunArgs),
    /// Chi-square convergence to the Gibbs state, random and average channels.
    Gibbs(RunArgs),
    /// Sampled mean single-jump generator vs the analytic form.
    DaviesVerify(RunArgs),
    /// Spectral-gap certificate for the configured Hamiltonian.
    GapCert(RunArgs),
    /// Eigenvalue table and semicircle-law diagnostics.
    Spectrum(RunArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Self::ScalingAverage(_) => ExperimentKind::ScalingAverage,
            Self::ScalingRandom(_) => ExperimentKind::ScalingRandom,
            Self::Gibbs(_) => ExperimentKind::Gibbs,
            Self::DaviesVerify(_) => ExperimentKind::DaviesVerify,
            Self::GapCert(_) => ExperimentKind::GapCert,
            Self::Spectrum(_) => ExperimentKind::Spectrum,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Self::ScalingAverage(a)
            | Self::ScalingRandom(a)
            | Self::Gibbs(a)
            | Self::DaviesVerify(a)
            | Self::GapCert(a)
            | Self::Spectrum(a) => a,
        }
    }
}

enum AppError {
    Config(String),
    Sim(SimError),
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        Self::Sim(e)
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Sim(SimError::Input(_)) | Self::Sim(SimError::Dimension(_)) => 2,
            Self::Sim(SimError::Precondition(_)) => 3,
            Self::Sim(SimError::Range(_)) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Config(m) => m.clone(),
            Self::Sim(e) => e.to_string(),
        }
    }
}

fn load_config(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, AppError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg =
        ExperimentConfig::from_json(&text).map_err(|e| AppError::Config(e.to_string()))?;
    if cfg.experiment != kind {
        return Err(AppError::Config(format!(
            "config is for experiment '{}', but the '{}' subcommand was invoked",
            cfg.experiment.as_str(),
            kind.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if cfg.output.is_none() {
        return Err(AppError::Config(
            "no output directory: set `output` in the config or pass --out".into(),
        ));
    }
    Ok(cfg)
}

fn load_tolerances(args: &RunArgs) -> Result<Tolerances, AppError> {
    match &args.tolerances {
        None => Ok(Tolerances::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
            Tolerances::from_json(&text).map_err(|e| AppError::Config(e.to_string()))
        }
    }
}

fn slope_note(
    name: &str,
    fit: &Option<lindblad_experiments::fit::SlopeFit>,
    target: f64,
    tol: f64,
) {
    match fit {
        Some(f) => {
            let ok = (f.slope - target).abs() <= tol;
            println!(
                "{name}: slope {:+.4} (target {target:+.1} +/- {tol}), r^2 {:.4} -> {}",
                f.slope,
                f.r_squared,
                if ok { "within band" } else { "OUTSIDE band" }
            );
        }
        None => println!("{name}: slope not fitted (fewer than 4 positive points)"),
    }
}

fn run(command: &Command) -> Result<(), AppError> {
    let args = command.args();
    if let Some(workers) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| AppError::Config(format!("worker pool: {e}")))?;
    }
    let cfg = load_config(args, command.kind())?;
    let tol = load_tolerances(args)?;
    let out_dir = cfg.output.clone().expect("validated above");
    let meta = RunMeta::new(&cfg.to_canonical_json(), cfg.seed);
    let mut sink = OutputSink::create(&out_dir, meta)?;

    match command.kind() {
        ExperimentKind::ScalingAverage => {
            let out = drivers::run_scaling_average(&cfg, &tol)?;
            drivers::emit_scaling_average(&mut sink, &out)?;
            slope_note(
                "average-channel trace distance",
                &out.fit,
                -1.0,
                tol.slope_average,
            );
        }
        ExperimentKind::ScalingRandom => {
            let out = drivers::run_scaling_random(&cfg, &tol)?;
            drivers::emit_scaling_random(&mut sink, &out)?;
            slope_note(
                "random-channel mean squared error",
                &out.fit,
                -1.0,
                tol.slope_random,
            );
        }
        ExperimentKind::Gibbs => {
            let out = drivers::run_gibbs(&cfg, &tol)?;
            drivers::emit_gibbs(&mut sink, &cfg, &out)?;
            println!(
                "detailed-balance residual {:.3e}, spectral gap {:.6}",
                out.db_residual, out.spectral_gap
            );
            for curve in &out.curves {
                println!(
                    "tau {:.4}: plateau random {:.6e}, average {:.6e}, decay rate {}",
                    curve.summary.tau,
                    curve.summary.plateau_random,
                    curve.summary.plateau_average,
                    curve
                        .summary
                        .decay_rate_average
                        .map(|r| format!("{r:.4}"))
                        .unwrap_or_else(|| "n/a".into())
                );
            }
        }
        ExperimentKind::DaviesVerify => {
            let out = drivers::run_davies_verify(&cfg, &tol)?;
            drivers::emit_davies_verify(&mut sink, &out)?;
            slope_note("sampled-mean distance", &out.fit, -0.5, tol.slope_davies);
            if let Some(last) = out.rows.last() {
                println!(
                    "excluded-variant floor: measured {:.6e}, analytic {:.6e}",
                    last.frobenius_distance_excluded, out.expected_floor
                );
            }
        }
        ExperimentKind::GapCert => {
            let out = drivers::run_gap_certificate(&cfg, &tol)?;
            drivers::emit_gap_certificate(&mut sink, &out)?;
            println!(
                "exact gap {:.6e}, alpha {:.6}, min ratio {:.6e}, low-energy fraction {:.6}, \
                 KS distance {:.4}",
                out.exact_gap, out.alpha, out.min_ratio, out.low_energy_fraction, out.ks_distance
            );
        }
        ExperimentKind::Spectrum => {
            let out = drivers::run_spectrum(&cfg, &tol)?;
            drivers::emit_spectrum(&mut sink, &out)?;
            println!(
                "{} eigenvalues, KS distance to semicircle {:.4} (threshold {})",
                out.dim, out.ks_distance, tol.ks_threshold
            );
        }
    }
    sink.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
