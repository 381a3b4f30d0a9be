use std::path::PathBuf;
use std::process::ExitCode;

use cascade_cli::commands::{cmd_check, cmd_design, cmd_reproduce_fig1, cmd_simulate, cmd_sweep, Fig1Options, Report};
use cascade_cli::{CliError, OUT_DIR_ENV};
use cascade_core::fig1;
use clap::{Parser, Subcommand};

/// Observer design and simulation for ODE/PDE cascades.
///
/// Exit codes: 0 success, 1 acceptance failure, 2 invalid input,
/// 3 design infeasible.
#[derive(Parser)]
#[command(name = "cascade", version)]
struct Cli {
    /// Root directory for run outputs (each run writes to <root>/<name>).
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the observer gains of a scenario and report the verified invariants.
    Design { scenario: PathBuf },
    /// Design, then simulate plant and observer and write trajectory CSVs.
    Simulate { scenario: PathBuf },
    /// Validate a scenario and run the observability tests only.
    Check { scenario: PathBuf },
    /// Run the unstable heat benchmark end to end and compare with the reference gains.
    #[command(name = "reproduce-fig1")]
    ReproduceFig1 {
        #[arg(long, default_value_t = fig1::DX)]
        dx: f64,
        /// Time step; by default dt/dx^2 is kept at its reference value 0.4.
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon.
        #[arg(long = "T", default_value_t = fig1::T_END)]
        t_end: f64,
        /// Reaction coefficient of the heat equation.
        #[arg(long, default_value_t = fig1::MU)]
        mu: f64,
    },
    /// Simulate every *.toml scenario in a directory concurrently.
    Sweep { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = cli.out_dir.as_deref();
    let result: Result<Report, CliError> = match &cli.command {
        Command::Design { scenario } => cmd_design(scenario, root),
        Command::Simulate { scenario } => cmd_simulate(scenario, root),
        Command::Check { scenario } => cmd_check(scenario),
        Command::ReproduceFig1 { dx, dt, t_end, mu } => cmd_reproduce_fig1(
            &Fig1Options {
                dx: *dx,
                dt: *dt,
                t_end: *t_end,
                mu: *mu,
            },
            root,
        ),
        Command::Sweep { dir } => cmd_sweep(dir, root),
    };
    match result {
        Ok(r) => {
            print!("{}", r.text);
            if let Some(f) = &r.failure {
                eprintln!("error: {f}");
            }
            ExitCode::from(r.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
