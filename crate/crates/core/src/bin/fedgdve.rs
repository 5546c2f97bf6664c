use std::error::Error as _;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedgdve::experiment::{evaluate_checkpoint, load_dataset, make_plan, run_experiment, ExperimentConfig};
use fedgdve::partition::{heterogeneity_score, HeterogeneityLabels};
use fedgdve::Error;

#[derive(Parser)]
#[command(version, about = "Federated graph recommendation with per-client valuation of global data")]
struct Cli {
    /// Worker threads for client-parallel work (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML config file.
    config: PathBuf,
    /// Override a config key, e.g. `--set clients=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the config and FEDGDVE_OUTPUT_DIR).
    #[arg(long, env = "FEDGDVE_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::from_file(&self.config, &self.overrides)?;
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one configured run.
    Run(ConfigArgs),
    /// Write the partition manifest only.
    Partition {
        #[command(flatten)]
        args: ConfigArgs,
        /// Manifest path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model on the configured test split.
    Eval {
        checkpoint: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("--workers: {e}")))?;
    }
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let outcome = run_experiment(&cfg)?;
            if let Some(r) = outcome.final_report() {
                println!(
                    "{} round {}: P@{k} {:.4} R@{k} {:.4} N@{k} {:.4}",
                    outcome.run_id,
                    r.round,
                    r.precision,
                    r.recall,
                    r.ndcg,
                    k = cfg.eval_k
                );
            }
            println!("{}", cfg.output_dir.join(&outcome.run_id).display());
        }
        Command::Partition { args, out } => {
            let cfg = args.load()?;
            let (graph, _) = load_dataset(&cfg)?;
            let plan = make_plan(&graph, &cfg)?;
            match out {
                Some(path) => plan.write_manifest(BufWriter::new(File::create(path)?))?,
                None => plan.write_manifest(io::stdout().lock())?,
            }
            let ami = heterogeneity_score(&plan, &graph.user_degrees(), HeterogeneityLabels::default())?;
            eprintln!("heterogeneity (AMI) {ami:.4}");
        }
        Command::Eval { checkpoint, args } => {
            let cfg = args.load()?;
            let r = evaluate_checkpoint(&checkpoint, &cfg)?;
            println!(
                "P@{k} {:.4} R@{k} {:.4} N@{k} {:.4} over {} clients",
                r.precision,
                r.recall,
                r.ndcg,
                r.clients.len(),
                k = cfg.eval_k
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
