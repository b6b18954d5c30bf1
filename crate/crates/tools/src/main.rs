use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use recourse_tools::bundle::ServiceBundle;
use recourse_tools::config::ExperimentConfig;
use recourse_tools::{api, experiments, service, ToolError, ToolResult};

/// Counterfactual recourse experiments and service.
#[derive(Parser)]
#[command(name = "recourse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Run {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Runs a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Transferability of counterfactuals across ε-level sets.
    Transfer(Run),
    /// Percentile costs per method on a shared pool of individuals.
    Costs(Run),
    /// Multiplicity bound, surprise and the manifold oracle table.
    Bounds(Run),
    /// Histograms and PCA projections of counterfactuals.
    Semantics(Run),
    /// Serves a bundle over HTTP.
    Serve {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Answers one recourse request against a bundle, as the service would.
    Recourse {
        #[arg(long)]
        bundle: PathBuf,
        /// JSON request file; `-` reads standard input.
        #[arg(long)]
        request: PathBuf,
    },
}

fn load(run: &Run) -> ToolResult<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &run.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = run.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = run
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| ToolError::Config("no output directory: pass --out or set output_dir".into()))?;
    Ok((cfg, out))
}

fn execute(command: Command) -> ToolResult<()> {
    match command {
        Command::Transfer(run) => {
            let (cfg, out) = load(&run)?;
            experiments::run_transfer(&cfg, Some(&out))?;
        }
        Command::Costs(run) => {
            let (cfg, out) = load(&run)?;
            experiments::run_costs(&cfg, Some(&out))?;
        }
        Command::Bounds(run) => {
            let (cfg, out) = load(&run)?;
            experiments::run_bounds(&cfg, Some(&out))?;
        }
        Command::Semantics(run) => {
            let (cfg, out) = load(&run)?;
            experiments::run_semantics(&cfg, Some(&out))?;
        }
        Command::Serve { bundle, port } => service::serve(ServiceBundle::load(&bundle)?, port)?,
        Command::Recourse { bundle, request } => {
            let bundle = ServiceBundle::load(&bundle)?;
            let body = if request.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin()).map_err(|e| ToolError::Config(e.to_string()))?
            } else {
                std::fs::read_to_string(&request)
                    .map_err(|e| ToolError::Config(format!("{}: {e}", request.display())))?
            };
            let reply = api::recourse(&bundle, &body);
            println!("{}", reply.body);
            if reply.status != 200 {
                return Err(match reply.status {
                    422 => ToolError::Domain(recourse_core::Error::Empty("counterfactual (search exhausted)")),
                    _ => ToolError::Config(format!("request rejected with status {}", reply.status)),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
