//! `ergm`: command-line front end for the ergm-core library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::{now, Outputs, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "ergm", version, about = "Sparse generalized ERGM toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Common {
    /// Seed for all randomness; sub-seeds are split from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Solver tolerance (nmf, phi-np).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory for emitted files and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the full report instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub(crate) enum Command {
    /// Homomorphism density t(F, X/scale) of a motif in a weight table.
    HomDensity(commands::HomDensityArgs),
    /// Planar upper-tail problem phi(s).
    PlanarPhi(commands::PlanarPhiArgs),
    /// Free-energy problem psi for a Hamiltonian.
    Psi(commands::PsiArgs),
    /// Edge-F model: phase, maximizers and optional beta scan.
    EdgeF(commands::EdgeFArgs),
    /// Naive mean-field free energy at finite n.
    Nmf(commands::NmfArgs),
    /// Finite-n upper-tail entropy problem.
    PhiNp(commands::PhiNpArgs),
    /// Glauber sampler with optional structure detection.
    Sample(commands::SampleArgs),
    /// Finner inequality checks on an instance or a random suite.
    FinnerCheck(commands::FinnerArgs),
    /// Data bundle for a figure scenario.
    EmitFigure(commands::FigureArgs),
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("E_USAGE: invalid command line");
            }
            return ExitCode::from(code);
        }
    };
    let started = now();
    let mut outputs = Outputs::new(cli.common.out.clone());
    let result = commands::run(&cli.command, &cli.common, &mut outputs).and_then(|summary| {
        if let Some(dir) = cli.common.out.clone() {
            let config = serde_json::json!({ "command": &cli.command, "common": &cli.common });
            let manifest =
                RunManifest::build(argv.clone(), config, cli.common.seed, started, &outputs)?;
            let text = serde_json::to_string_pretty(&manifest)?;
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("manifest.json"), text + "\n")?;
        }
        Ok(summary)
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
