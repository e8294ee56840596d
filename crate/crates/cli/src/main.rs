use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nehari_cli::config::{Mode, Overrides};
use nehari_cli::document::EXIT_USAGE;

#[derive(Parser)]
#[command(name = "nehari", version, about = "Periodic orbits with prescribed minimal period")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve ẍ + V′(x) = 0 through the direct action.
    SolveDirect(RunArgs),
    /// Solve ż = JH′(z) through the dual action.
    SolveDual(RunArgs),
    /// Audit the growth and convexity hypotheses of a model.
    CheckConditions(RunArgs),
    /// Tabulate the numerical Fenchel conjugate of a Hamiltonian.
    Fenchel(RunArgs),
    /// Certify injected coefficients.
    Certify(RunArgs),
    /// Solve and certify over a list of periods.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or the JSON document of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set solver.restarts=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    period: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (mode, args) = match cli.command {
        Command::SolveDirect(a) => (Mode::SolveDirect, a),
        Command::SolveDual(a) => (Mode::SolveDual, a),
        Command::CheckConditions(a) => (Mode::CheckConditions, a),
        Command::Fenchel(a) => (Mode::FenchelTable, a),
        Command::Certify(a) => (Mode::Certify, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    let ov = Overrides {
        mode: Some(mode),
        set: args.set,
        out: args.out,
        seed: args.seed,
        modes: args.modes,
        period: args.period,
    };
    let outcome = nehari_cli::run(args.config.as_deref(), &ov);
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    if let Some(doc) = &outcome.document {
        for e in &doc.errors {
            eprintln!("error: {e}");
        }
        println!("status: {:?}", doc.status);
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
