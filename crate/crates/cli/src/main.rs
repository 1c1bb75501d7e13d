mod commands;
mod config;

use clap::{Parser, Subcommand};

use commands::{CertifyArgs, CompareArgs, RunArgs, SweepArgs};

/// Simulate degenerate nonlinear diffusion on the periodic torus and
/// certify the structural conditions behind its a priori bounds.
#[derive(Parser)]
#[command(name = "gradbound", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a configured model and judge the monitored bounds
    Run(RunArgs),
    /// Check the structural conditions of a model on its admissibility box
    Certify(CertifyArgs),
    /// Co-evolve an ordered pair of states and report the ordering defect
    Compare(CompareArgs),
    /// Map certification verdicts across a parameter range
    Sweep(SweepArgs),
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Run(a) => commands::cmd_run(a),
        Cmd::Certify(a) => commands::cmd_certify(a),
        Cmd::Compare(a) => commands::cmd_compare(a),
        Cmd::Sweep(a) => commands::cmd_sweep(a),
    };
    std::process::exit(code);
}
