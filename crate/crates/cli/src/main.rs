use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsvi_ae::env::text::write_env;
use lsvi_ae::experiment::{build_env, emit_results, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lsvi-ae", version, about = "Safe RL benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one agent on one environment and write results.csv.
    Run(ConfigArgs),
    /// Write the configured environment in the plain-text table format.
    ExportEnv {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

/// Every flag overrides the matching key of `--config`.
#[derive(Args)]
struct ConfigArgs {
    /// key = value file loaded before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// frozen_lake | synthetic_linear | hard_instance | alternating
    #[arg(long)]
    env: Option<String>,
    /// lsvi_ae | lsvi | lsvi_primal
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    c_beta: Option<f64>,
    #[arg(long)]
    beta_override: Option<f64>,
    /// linear | gp
    #[arg(long)]
    cost_model: Option<String>,
    /// linear | sqexp
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    lengthscale: Option<f64>,
    #[arg(long)]
    cost_beta_override: Option<f64>,
    /// Feature dimension of the synthetic and hard instances.
    #[arg(long)]
    dim: Option<usize>,
    /// ASCII grid file for Frozen Lake.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, String> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                ExperimentConfig::from_kv(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        let overrides: [(&str, Option<String>); 16] = [
            ("env", self.env.clone()),
            ("agent", self.agent.clone()),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("horizon", self.horizon.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("c_beta", self.c_beta.map(|v| v.to_string())),
            ("beta_override", self.beta_override.map(|v| v.to_string())),
            ("cost_model", self.cost_model.clone()),
            ("kernel", self.kernel.clone()),
            ("lengthscale", self.lengthscale.map(|v| v.to_string())),
            ("cost_beta_override", self.cost_beta_override.map(|v| v.to_string())),
            ("dim", self.dim.map(|v| v.to_string())),
            ("map", self.map.as_ref().map(|p| p.display().to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value).map_err(|e| e.to_string())?;
            }
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let metrics = run_experiment(&config).map_err(|e| e.to_string())?;
            let out = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
            emit_results(&metrics, &config, &out).map_err(|e| e.to_string())?;
            println!(
                "episodes={} total_regret={:.6} total_violation={:.6} mean_reward_last_100={:.6}",
                metrics.len(),
                metrics.total_regret(),
                metrics.total_violation(),
                metrics.tail_mean_reward(100)
            );
            Ok(())
        }
        Command::ExportEnv { config, file } => {
            let config = config.resolve()?;
            let (cmdp, features) = build_env(&config).map_err(|e| e.to_string())?;
            let text = write_env(&cmdp, &features);
            match file {
                Some(path) => std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
