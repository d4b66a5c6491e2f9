mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

/// Spectra, band structure and reality certificates for Hill operators
/// with energy-dependent potentials, plus the third-order Boussinesq
/// spectral problem.
#[derive(Parser, Debug)]
#[command(name = "hillbands", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Worker threads; HILLBANDS_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Relative tolerance of the ODE integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,

    /// Absolute tolerance of the ODE integrator.
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs_tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of one boundary problem in a window.
    Eigs(commands::EigsArgs),
    /// Gaps, bands and the band functions λₙ(k).
    Bands(commands::BandsArgs),
    /// Δ(λ) and the identity residual along a line in the λ-plane.
    Discriminant(commands::DiscriminantArgs),
    /// Reality certificate for a region.
    Certify(commands::CertifyArgs),
    /// Green kernel of the resolvent and its residual on a forcing term.
    ResolventCheck(commands::ResolventArgs),
    /// The third-order operator of the good Boussinesq equation.
    #[command(subcommand)]
    Boussinesq(commands::BoussinesqCommand),
    /// Runs the verification suite on the shipped fixtures.
    Verify(commands::VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PotentialArg {
    /// Potential config as JSON, or a file emitted by this tool.
    #[arg(long, short)]
    potential: PathBuf,
}

fn threads(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var("HILLBANDS_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("HILLBANDS_THREADS must be a positive integer, got {v:?}"))?;
            anyhow::ensure!(n > 0, "HILLBANDS_THREADS must be positive");
            Ok(Some(n))
        }
        Err(_) => Ok(flag),
    }
}

/// 1 for bad input, 2 when the numerics gave up.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(mut e) = cause.downcast_ref::<hillbands::Error>() {
            while let hillbands::Error::Context { source, .. } = e {
                e = source;
            }
            return match e {
                hillbands::Error::Config(_) | hillbands::Error::InvalidArgument(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<commands::NumericalFailure>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let run = || -> anyhow::Result<()> {
        if let Some(n) = threads(cli.threads)? {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let ctx = commands::Context::new(&cli)?;
        let report = match &cli.command {
            Command::Eigs(a) => commands::eigs(&ctx, a)?,
            Command::Bands(a) => commands::bands(&ctx, a)?,
            Command::Discriminant(a) => commands::discriminant(&ctx, a)?,
            Command::Certify(a) => commands::certify(&ctx, a)?,
            Command::ResolventCheck(a) => commands::resolvent_check(&ctx, a)?,
            Command::Boussinesq(c) => commands::boussinesq(&ctx, c)?,
            Command::Verify(a) => commands::verify(&ctx, a)?,
        };
        report.write(cli.format, cli.output.as_deref())?;
        if let Some(failed) = ctx.failure.take() {
            return Err(failed.into());
        }
        Ok(())
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
