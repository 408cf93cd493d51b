use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use muchlab::cli;
use muchlab::config::{Mode, Overrides};

#[derive(Parser)]
#[command(name = "muchlab", version, about = "Generalized mu-Camassa-Holm laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the PDE and write diagnostics and snapshots.
    Simulate(Common),
    /// Integrate a peakon configuration.
    Peakon(Common),
    /// Trace characteristics over a PDE run.
    Characteristics(Common),
    /// Evaluate the blow-up criteria on the initial data.
    BlowupCheck(Common),
    /// Run the acceptance suite.
    Verify(Common),
    /// Run a parameter sweep (worker count bounded by MUCHLAB_THREADS).
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mode, c) = match cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::Peakon(c) => (Mode::Peakon, c),
        Command::Characteristics(c) => (Mode::Characteristics, c),
        Command::BlowupCheck(c) => (Mode::BlowupCheck, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Sweep(c) => (Mode::Sweep, c),
    };
    let overrides = Overrides { out: c.out, n: c.n, t_end: c.t_end };
    std::process::exit(cli::run(mode, &c.config, &overrides).code());
}
