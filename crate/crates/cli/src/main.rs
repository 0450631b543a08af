use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracpq::commands;
use fracpq::config::{Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "fracpq",
    version,
    about = "Fractional (p,q)-Laplacian least energy solutions and their p -> infinity limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing). Overrides the config's "out".
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the kernel sums (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Random seed. Overrides the config's "seed".
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Build a domain, print its inradius and dump the node table.
    Domain,
    /// Estimate lambda_{s,m}^{1/m} over a list of m.
    Eigen,
    /// Compute one least energy solution.
    Solve,
    /// Run the p -> infinity sweep and compare with the limits.
    Sweep,
    /// Evaluate the limit equation residual on a stored solution.
    Viscosity,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Domain => Command::Domain,
            Cmd::Eigen => Command::Eigen,
            Cmd::Solve => Command::Solve,
            Cmd::Sweep => Command::Sweep,
            Cmd::Viscosity => Command::Viscosity,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_ref() else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_CONFIG);
    };
    let mut cfg = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start the thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match commands::run(cli.command.into(), &cfg, &out) {
        Ok(o) => {
            print!("{}", o.summary);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            })
        }
    }
}
