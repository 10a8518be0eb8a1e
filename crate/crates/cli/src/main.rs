//! Command-line surface for sequence simulation, dimension estimation,
//! realization, quantum dilation, spectral analysis and the bundled
//! experiment drivers.
//!
//! Exit codes: 0 on success, 2 for validation errors (bad files, violated
//! invariants, inconsistent parameters), 3 for numerical failures.

mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evodim_core::dilation::{quantum_realization, verify_cptp};
use evodim_core::error::Error;
use evodim_core::quantum::{evolve_expectations, DEFAULT_RANK_TOL};
use evodim_core::realization::{
    dimension_bounds, effective_rank, enforce_contraction, linear_realization, noise_epsilon,
};
use evodim_core::sequences::build_hankel;
use evodim_core::spectral::{spectral_report, DEFAULT_ORDER_MAX};
use evodim_core::{
    classical, DensityMatrix, KrausChannel, LinearRealization, Observable, RealSequence,
};

#[derive(Parser)]
#[command(
    name = "evodim",
    about = "Dimension estimates, minimal realizations, quantum dilations and \
             spectral certificates for discrete-time expectation-value sequences",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sequence from a quantum or classical model.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Estimate dim V and the implied dimension bounds from a sequence.
    Estimate(EstimateArgs),
    /// Build a minimal contractive realization from a sequence.
    Realize(RealizeArgs),
    /// Embed a realization into an explicit quantum channel of dimension r+2.
    Dilate(DilateArgs),
    /// Extract poles and the minimal classical dimension certificate.
    Spectrum(SpectrumArgs),
    /// Reproducible experiment drivers.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// a(t) = tr[A T^t(rho)] from channel, state and observable files.
    Quantum(SimulateQuantumArgs),
    /// a(t) = <a|S^t|p> from a stochastic model file.
    Classical(SimulateClassicalArgs),
}

#[derive(Args)]
struct SimulateQuantumArgs {
    /// Channel JSON: {"d": .., "kraus": [<matrix>, ..]}
    #[arg(long)]
    channel: PathBuf,
    /// State JSON: {"d": .., "rho": <matrix>}
    #[arg(long)]
    rho: PathBuf,
    /// Observable JSON: {"d": .., "a": <matrix>}
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    steps: usize,
    /// Output sequence CSV (header `t,value`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateClassicalArgs {
    /// Model JSON: {"dc": .., "s": .., "p": .., "a": ..}
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input sequence CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Hankel size N (default: half the sequence length).
    #[arg(long)]
    hankel_n: Option<usize>,
    /// Noise threshold for the effective-rank bound, in sequence units.
    #[arg(long, conflicts_with = "noise_sigma")]
    epsilon: Option<f64>,
    /// Per-sample noise deviation; implies epsilon = 2*sigma*sqrt(N).
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Claimed total dimension d, to bound the conserved-quantity count.
    #[arg(long)]
    known_d: Option<usize>,
    /// Known system dimension d_S, to bound the environment memory.
    #[arg(long)]
    known_ds: Option<usize>,
    /// Emit machine-readable JSON instead of the human summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RealizeArgs {
    /// Input sequence CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Hankel size N (default: half the sequence length).
    #[arg(long)]
    hankel_n: Option<usize>,
    /// Output realization JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DilateArgs {
    /// Input realization JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output quantum model JSON: {"dim", "channel", "rho", "a"}.
    #[arg(long)]
    out: PathBuf,
    /// Also run the CPTP verification and fail if it does not pass.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Input sequence CSV or realization JSON (by file extension).
    #[arg(long = "in")]
    input: PathBuf,
    /// Largest roots-of-unity hull order to test.
    #[arg(long, default_value_t = DEFAULT_ORDER_MAX)]
    order_max: usize,
    /// Output spectral report JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Noise sweep over random spin-1 unitary sequences: singular values and
    /// effective ranks of a 50x50 Hankel window, per trial and noise level.
    Fig2(experiments::Fig2Args),
    /// Roots-of-unity hull region data for plotting, plus a unit circle.
    Fig1(experiments::Fig1Args),
    /// Damped Rabi oscillation demo: sequence, poles, classical certificate
    /// and quantum dilation dimension.
    Rabi(experiments::RabiArgs),
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}

/// Sequence -> contractive realization with the default window and tolerance.
fn realize_sequence(seq: &RealSequence, hankel_n: Option<usize>) -> Result<LinearRealization, Error> {
    let n = hankel_n.unwrap_or_else(|| seq.default_hankel_size());
    let real = linear_realization(seq, n, DEFAULT_RANK_TOL)?;
    enforce_contraction(&real, 1e-6)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(SimulateCommand::Quantum(args)) => {
            let channel = KrausChannel::from_json_str(&read_to_string(&args.channel)?)?;
            let rho = DensityMatrix::from_json_str(&read_to_string(&args.rho)?)?;
            let obs = Observable::from_json_str(&read_to_string(&args.obs)?)?;
            let seq = evolve_expectations(&channel, &rho, &obs, args.steps)?;
            seq.write_csv(&args.out)?;
            println!("wrote {} samples to {}", seq.len(), args.out.display());
        }
        Command::Simulate(SimulateCommand::Classical(args)) => {
            let model = classical::StochasticModel::from_json_str(&read_to_string(&args.model)?)?;
            let seq = classical::evolve_classical(&model, args.steps)?;
            seq.write_csv(&args.out)?;
            println!("wrote {} samples to {}", seq.len(), args.out.display());
        }
        Command::Estimate(args) => {
            let seq = RealSequence::read_csv(&args.input)?;
            let n = args.hankel_n.unwrap_or_else(|| seq.default_hankel_size());
            let hankel = build_hankel(&seq, n)?;
            let epsilon = match (args.epsilon, args.noise_sigma) {
                (Some(e), _) => e,
                (None, Some(sigma)) => noise_epsilon(sigma, n),
                (None, None) => 0.0,
            };
            let report = effective_rank(&hankel, epsilon)?;
            let bounds = dimension_bounds(&report, args.known_d, args.known_ds)?;
            if args.json {
                let value = serde_json::json!({
                    "rank_report": report,
                    "dimension_bounds": bounds,
                });
                println!("{}", serde_json::to_string_pretty(&value)?);
            } else {
                println!("samples:               {}", seq.len());
                println!("hankel size N:         {n}");
                println!("noise threshold eps:   {epsilon}");
                let shown = report.singular_values.iter().take(15.min(n));
                let formatted: Vec<String> = shown.map(|s| format!("{s:.6e}")).collect();
                println!("singular values (top): {}", formatted.join(" "));
                println!("dim V lower bound:     {}", report.dim_v_lower);
                println!("dim V (clean data):    {}", report.dim_v_exact_if_clean);
                println!("minimal dimension d >= {}", bounds.d_min);
                if let Some(c) = bounds.dim_c_max_given_d {
                    println!("conserved quantities dim C <= {c} (given d = {})", args.known_d.unwrap());
                }
                if let Some(e) = bounds.d_e_min_given_ds {
                    println!("environment memory d_E >= {e} (given d_S = {})", args.known_ds.unwrap());
                }
            }
        }
        Command::Realize(args) => {
            let seq = RealSequence::read_csv(&args.input)?;
            let real = realize_sequence(&seq, args.hankel_n)?;
            write_json(&args.out, &real.to_json())?;
            println!(
                "realization of size r = {} (operator norm {:.6}) written to {}",
                real.r(),
                real.contraction_norm(),
                args.out.display()
            );
        }
        Command::Dilate(args) => {
            let real = LinearRealization::from_json_str(&read_to_string(&args.input)?)?;
            let contracted = enforce_contraction(&real, 1e-6)?;
            let q = quantum_realization(&contracted)?;
            write_json(&args.out, &q.to_json())?;
            println!(
                "quantum model of dimension {} ({} Kraus operators) written to {}",
                q.dim(),
                q.channel().kraus().len(),
                args.out.display()
            );
            if args.verify {
                let rep = verify_cptp(q.channel().kraus())?;
                println!(
                    "cptp check: trace residual {:.3e}, Choi min eigenvalue {:.3e} -> {}",
                    rep.trace_preserving_residual,
                    rep.choi_min_eigenvalue,
                    if rep.pass { "pass" } else { "FAIL" }
                );
                if !rep.pass {
                    return Err(Error::Numerical("dilated channel failed the CPTP check".into()));
                }
            }
        }
        Command::Spectrum(args) => {
            let is_json = args
                .input
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("json"));
            let real = if is_json {
                LinearRealization::from_json_str(&read_to_string(&args.input)?)?
            } else {
                let seq = RealSequence::read_csv(&args.input)?;
                realize_sequence(&seq, None)?
            };
            let report = spectral_report(&real, args.order_max, 1e-9)?;
            write_json(&args.out, &report.to_json())?;
            println!("poles (modulus, phase):");
            for p in &report.poles {
                println!("  ({:.9}, {:+.9})", p.norm(), p.arg());
            }
            println!(
                "minimal classical dimension (hull certificate): {}",
                report.min_classical_dimension
            );
            println!("quantum realization dimension (r + 2): {}", real.r() + 2);
        }
        Command::Experiment(ExperimentCommand::Fig2(args)) => experiments::run_fig2(&args)?,
        Command::Experiment(ExperimentCommand::Fig1(args)) => experiments::run_fig1(&args)?,
        Command::Experiment(ExperimentCommand::Rabi(args)) => experiments::run_rabi(&args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
