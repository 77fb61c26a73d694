use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_core::{load_graph, PinnedSystemF64, SpectralSummaryF64};
use consensus_scenario::output::{num, summaries};
use consensus_scenario::{compare_report, run_scenario, write_outputs, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "consensus",
    version,
    about = "Pinned consensus network experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every `[[run]]` of a scenario and write its outputs.
    Run {
        /// Config file path or bundled scenario name.
        config: String,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the comparison table on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a scenario without simulating.
    Validate { config: String },
    /// Print the pinned Laplacian spectrum and gain bound of an edge-list graph.
    Bound { graph: PathBuf },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, out, quiet } => {
            let cfg = ScenarioConfig::resolve(&config).map_err(|e| e.to_string())?;
            let outcome = run_scenario(&cfg).map_err(|e| e.to_string())?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let written = write_outputs(&outcome, &dir).map_err(|e| e.to_string())?;
            if !quiet {
                println!(
                    "gain bound {}  gamma {}",
                    num(outcome.spectral.gain_bound),
                    num(outcome.gamma)
                );
                print!("{}", compare_report(&summaries(&outcome)));
                println!("wrote {} files to {}", written.len(), dir.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::resolve(&config).map_err(|e| e.to_string())?;
            cfg.build_graph().map_err(|e| e.to_string())?;
            println!("{}: ok ({} runs)", cfg.origin, cfg.runs.len());
            Ok(())
        }
        Command::Bound { graph } => {
            let g = load_graph::<f64>(&graph).map_err(|e| e.to_string())?;
            let sys = PinnedSystemF64::new(&g).map_err(|e| e.to_string())?;
            let s = SpectralSummaryF64::analyze(&sys).map_err(|e| e.to_string())?;
            for l in &s.eigenvalues {
                println!("{}, {}", num(l.re), num(l.im));
            }
            println!("gain_bound {}", num(s.gain_bound));
            Ok(())
        }
    }
}
