use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{CliError, Invocation, Verdict};
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "qflow", version, about = "Q-curvature flow and CR identity laboratory on the 3-sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the `seed` key of the subcommand's section.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV, JSON and snapshot output.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Continue a flow run from a snapshot.
    #[arg(long, global = true, value_name = "SNAPSHOT")]
    resume: Option<PathBuf>,

    /// Print the canonical form of the configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Integrate the normalized flow.
    Flow,
    /// Run the identity and inequality suite.
    Verify,
    /// Deflated spectrum of an operator or a matrix file.
    Spectrum,
    /// Fit the sphere Moser envelope.
    Moser,
    /// Heisenberg group checks.
    Heisenberg,
}

fn load_config(path: Option<&PathBuf>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            Config::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let config = load_config(cli.config.as_ref())?;
    if cli.print_config {
        print!("{}", config.canonical());
        return Ok(Verdict::Pass);
    }
    if cli.resume.is_some() && !matches!(cli.command, Command::Flow) {
        return Err(CliError::Usage("--resume only applies to the flow subcommand".into()));
    }
    let inv = Invocation::new(config, cli.seed, cli.out, cli.resume)?;
    match cli.command {
        Command::Flow => commands::flow::run(&inv),
        Command::Verify => commands::verify::run(&inv),
        Command::Spectrum => commands::spectrum::run(&inv),
        Command::Moser => commands::moser::run(&inv),
        Command::Heisenberg => commands::heisenberg::run(&inv),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
