//! Command-line front end for position-dependent-mass factorizations:
//! level tables of deformed partners, superpotential-shift profiles,
//! displaced ground states with uncertainty reports, and ordering-label
//! reflection checks — all driven by one TOML configuration and emitted
//! as deterministic CSV/JSON files.

mod commands;
mod config;
mod output;

use anyhow::Error;
use clap::{Args, Parser, Subcommand};
use commands::{Document, RunContext};
use config::Overrides;
use output::OutDir;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral and algebraic analysis of position-dependent-mass
/// factorizations.
#[derive(Parser)]
#[command(name = "pdm-isospec", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Base and deformed level tables with normalizability and
    /// grid-convergence verdicts
    Spectrum(RunArgs),
    /// Deformed superpotential, shift profile, and mapped states per
    /// deformation parameter
    Transform(RunArgs),
    /// Displaced ground states with moment tables and uncertainty-product
    /// classification
    Coherent(RunArgs),
    /// Reflection-intertwiner residuals and coefficient matching across
    /// ordering labels
    Symmetry(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Spectrum(args)
            | Command::Transform(args)
            | Command::Coherent(args)
            | Command::Symmetry(args) => args,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Transform(_) => "transform",
            Command::Coherent(_) => "coherent",
            Command::Symmetry(_) => "symmetry",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the [output] path)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Node count (overrides the [domain] n)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Log errors only
    #[arg(long)]
    quiet: bool,
}

/// Which stage of a run failed; each carries its own exit code so scripts
/// can tell configuration mistakes from numerical rejections and from
/// filesystem problems.
enum Failure {
    Config(Error),
    Numerical(Error),
    Output(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Output(_) => 4,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Failure::Config(err) | Failure::Numerical(err) | Failure::Output(err) => err,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.command.args().quiet);
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            log::error!("{:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}

fn init_logging(quiet: bool) {
    let default_level = if quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .format_timestamp(None)
        .init();
}

fn run(command: &Command) -> Result<(), Failure> {
    let args = command.args();
    let overrides = Overrides {
        out_dir: args
            .out
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
        grid_n: args.grid_n,
    };
    let needs_coherent = matches!(command, Command::Coherent(_));

    let cfg = config::load(&args.config, &overrides, needs_coherent).map_err(Failure::Config)?;
    let ctx = RunContext::new(cfg).map_err(Failure::Config)?;
    log::info!(
        "{} run: {} on [{}, {}] with {} nodes",
        command.name(),
        ctx.profile.label(),
        ctx.grid.x_min(),
        ctx.grid.x_max(),
        ctx.grid.n()
    );

    let documents = match command {
        Command::Spectrum(_) => commands::spectrum::run(&ctx),
        Command::Transform(_) => commands::transform::run(&ctx),
        Command::Coherent(_) => commands::coherent::run(&ctx),
        Command::Symmetry(_) => commands::symmetry::run(&ctx),
    }
    .map_err(Failure::Numerical)?;

    write_documents(&ctx.cfg.output.path, &documents).map_err(Failure::Output)?;
    Ok(())
}

fn write_documents(dir: &str, documents: &[Document]) -> Result<(), Error> {
    let out = OutDir::create(dir)?;
    for doc in documents {
        let path = out.write_atomic(&doc.name, &doc.bytes)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
