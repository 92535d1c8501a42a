//! swapurify: scans, curves, verification suites and single runs of the
//! swap-purification simulator.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 verification
//! failure. SWAPURIFY_THREADS overrides the worker count for scans.

mod commands;
mod output;
mod presets;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use output::OutputFormat;
use presets::PresetKind;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    VerifyFailed,
}

#[derive(Parser, Debug)]
#[command(
    name = "swapurify",
    version,
    about = "Entanglement-swapping purification of amplitude-damped pairs: exact simulation, figure data, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grid scan of the enhancement region; emits one row per grid point.
    Scan(ScanArgs),
    /// Concurrence curves over the damping probability.
    Curve(CurveArgs),
    /// Run the verification suites (closed forms vs brute force and more).
    Verify(VerifyArgs),
    /// Run the protocol once and emit per-round results as JSON.
    Run(RunArgs),
}

/// Flags shared by every data-producing subcommand. A --preset fills in
/// whatever the user left unset.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Initial-state family: phi | phi-asym | chi
    #[arg(long)]
    family: Option<String>,
    /// Weight of |01> in the first pair (phi families)
    #[arg(long)]
    a: Option<f64>,
    /// Weight of |10> in the second pair (phi-asym family)
    #[arg(long = "a-prime")]
    a_prime: Option<f64>,
    /// Weight of |00> (chi family)
    #[arg(long = "A")]
    big_a: Option<f64>,
    /// Amplitude-damping probability
    #[arg(long)]
    p: Option<f64>,
    /// Weak-measurement strength, strictly inside (0, 1)
    #[arg(long)]
    b: Option<f64>,
    /// Number of protocol rounds
    #[arg(long)]
    rounds: Option<u32>,
    /// Weak-measurement sign policy for rounds >= 2: pp | mm | mixed | none
    #[arg(long = "weak-policy")]
    weak_policy: Option<String>,
    /// Accepted Bell outcomes: psi | phi | all
    #[arg(long)]
    accept: Option<String>,
    /// Comparison tolerance for enhancement predicates
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Figure preset: fig1 | fig2 | fig3n2 | fig3n3 | fig5a | fig5b
    #[arg(long)]
    preset: Option<String>,
    /// Grid resolution NxM (axis1 x axis2)
    #[arg(long)]
    grid: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Figure preset: fig4 | fig6
    #[arg(long)]
    preset: Option<String>,
    /// Number of curve points (N or NxM, first component used)
    #[arg(long)]
    grid: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite: all | kraus | closedforms | thresholds | asymptotic
    #[arg(default_value = "all")]
    suite: String,
    /// Comparison tolerance override
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_preset(
    params: &mut ParamArgs,
    grid: &mut Option<String>,
    name: &str,
    kind: PresetKind,
) -> Result<(), CliError> {
    let preset =
        presets::lookup(name).ok_or_else(|| CliError::Usage(format!("unknown preset '{name}'")))?;
    if preset.kind != kind {
        let wanted = match preset.kind {
            PresetKind::Scan => "scan",
            PresetKind::Curve => "curve",
        };
        return Err(CliError::Usage(format!(
            "preset '{name}' belongs to the {wanted} subcommand"
        )));
    }
    if params.family.is_none() {
        params.family = Some(preset.family.to_string());
    }
    params.a = params.a.or(preset.a);
    params.a_prime = params.a_prime.or(preset.a_prime);
    params.big_a = params.big_a.or(preset.big_a);
    params.p = params.p.or(preset.p);
    params.b = params.b.or(preset.b);
    params.rounds = params.rounds.or(preset.rounds);
    if grid.is_none() {
        *grid = preset.grid.map(str::to_string);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scan(mut args) => {
            if let Some(name) = args.preset.clone() {
                apply_preset(&mut args.params, &mut args.grid, &name, PresetKind::Scan)?;
            }
            commands::cmd_scan(&args)
        }
        Command::Curve(mut args) => {
            if let Some(name) = args.preset.clone() {
                apply_preset(&mut args.params, &mut args.grid, &name, PresetKind::Curve)?;
            }
            commands::cmd_curve(&args)
        }
        Command::Verify(args) => commands::cmd_verify(&args),
        Command::Run(args) => commands::cmd_run(&args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };

    // Optional worker-count override for the scan parallelism.
    let pool = match std::env::var("SWAPURIFY_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => rayon::ThreadPoolBuilder::new().num_threads(n).build().ok(),
            _ => {
                eprintln!("SWAPURIFY_THREADS must be a positive integer, got '{v}'");
                std::process::exit(1);
            }
        },
        Err(_) => None,
    };

    let result = match pool {
        Some(pool) => pool.install(|| dispatch(cli)),
        None => dispatch(cli),
    };

    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::VerifyFailed) => {
            std::process::exit(3);
        }
    }
}
