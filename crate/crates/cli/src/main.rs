use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prefmobo::engine::{Method, SessionConfig};
use prefmobo_cli::{run_experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "prefmobo", about = "Preference-guided multi-objective Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Batch experiment with simulated decision makers.
    Run {
        #[arg(long, default_value = "dtlz2")]
        problem: String,
        #[arg(long, default_value_t = 3)]
        din: usize,
        #[arg(long, default_value_t = 2)]
        dout: usize,
        #[arg(long, default_value = "wape")]
        method: Method,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        /// Space-filling design size [default: 10 * din]
        #[arg(long)]
        pspace: Option<usize>,
        /// Weighted initialization rounds [default: 10 * dout]
        #[arg(long)]
        pinit: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        wape_n: Option<usize>,
        #[arg(long)]
        wape_eta: Option<f64>,
        /// Budget units charged per preference query
        #[arg(long)]
        cost_dm: Option<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Repetition r uses seed + r
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// HTTP service for interactive sessions.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Where session snapshots are kept
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            problem,
            din,
            dout,
            method,
            budget,
            pspace,
            pinit,
            rho,
            wape_n,
            wape_eta,
            cost_dm,
            reps,
            seed,
            out,
        } => {
            let mut template = SessionConfig::new(problem, din, dout, method, budget);
            template.p_space = pspace.unwrap_or(template.p_space);
            template.p_init = pinit.unwrap_or(template.p_init);
            template.rho = rho.unwrap_or(template.rho);
            template.wape_n = wape_n.unwrap_or(template.wape_n);
            template.wape_eta = wape_eta.unwrap_or(template.wape_eta);
            template.cost_dm = cost_dm.unwrap_or(template.cost_dm);
            let spec = ExperimentSpec {
                template,
                repetitions: reps,
                seed_base: seed,
                out_dir: out,
            };
            match run_experiment(&spec) {
                Ok(outcome) => {
                    if let Some(last) = outcome.aggregate.last() {
                        println!(
                            "{} runs; final median OC {} (p20 {}, p80 {}); wrote {}",
                            outcome.logs.len(),
                            last.median,
                            last.p20,
                            last.p80,
                            outcome.aggregate_path.display()
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Serve { port, data_dir } => {
            let rt = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match rt.block_on(prefmobo_service::serve(port, data_dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
