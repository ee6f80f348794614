use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use masa::commands::{cmd_bench, cmd_eval, cmd_run, cmd_synth, RunConfig};
use masa::synth::SynthConfig;
use masa::timeseries::{Hyperparameters, LengthSort};

#[derive(Parser)]
#[command(name = "masa", version, about = "Motif-aware state assignment for multivariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit states and motifs to a CSV of measurements.
    Run {
        #[arg(long)]
        input: PathBuf,
        /// Directory for assignment.csv, motifs.json, model.json, diagnostics.json.
        #[arg(long)]
        output: PathBuf,
        /// z-score every column before fitting.
        #[arg(long)]
        standardize: bool,
        #[command(flatten)]
        hp: HpArgs,
    },
    /// Generate a synthetic dataset with a planted motif.
    Synth {
        /// Directory for data.csv and truth.csv.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        macro_segments: usize,
        /// Fraction of segments whose covariance is perturbed.
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        states: usize,
    },
    /// Score an assignment.csv against a truth.csv.
    Eval {
        /// assignment.csv from `masa run`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Path of metrics.json to write.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time one iteration on synthetic data of increasing length.
    Bench {
        /// Comma-separated series lengths, ascending.
        #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000,80000")]
        sizes: Vec<usize>,
        /// Directory for bench.csv.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[command(flatten)]
        hp: HpArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SortArg {
    Increasing,
    Decreasing,
}

#[derive(Args)]
struct HpArgs {
    /// Number of states K.
    #[arg(long, default_value_t = 10)]
    states: usize,
    /// Switching penalty.
    #[arg(long, default_value_t = 25.0)]
    beta: f64,
    /// Non-motif discount in (0, 1].
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Minimum instances per motif.
    #[arg(long, default_value_t = 10)]
    min_instances: usize,
    /// Significance level for candidate patterns.
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ridge added to covariance estimates.
    #[arg(long, default_value_t = 0.01)]
    reg_lambda: f64,
    /// Maximum number of candidate motifs; 0 keeps all.
    #[arg(long, default_value_t = 25)]
    candidate_cap: usize,
    #[arg(long, value_enum, default_value_t = SortArg::Increasing)]
    length_sort: SortArg,
}

impl HpArgs {
    fn to_hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            k_states: self.states,
            beta: self.beta,
            gamma: self.gamma,
            min_instances: self.min_instances,
            alpha: self.alpha,
            max_iters: self.max_iters,
            seed: self.seed,
            reg_lambda: self.reg_lambda,
            candidate_cap: (self.candidate_cap > 0).then_some(self.candidate_cap),
            length_sort: match self.length_sort {
                SortArg::Increasing => LengthSort::Increasing,
                SortArg::Decreasing => LengthSort::Decreasing,
            },
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            input,
            output,
            standardize,
            hp,
        } => {
            let cfg = RunConfig {
                input,
                output,
                hyperparameters: hp.to_hyperparameters(),
                standardize,
            };
            let result = cmd_run(&cfg).with_context(|| format!("run on {}", cfg.input.display()))?;
            println!(
                "{} iterations, converged: {}, {} motifs, {} instances",
                result.iterations,
                result.converged,
                result.motifs.len(),
                result.motifs.instance_count()
            );
            for e in &result.motifs.entries {
                println!("  {}  score {:.3}  instances {}", e.motif.letters(), e.score(), e.instances.len());
            }
        }
        Command::Synth {
            output,
            macro_segments,
            epsilon,
            seed,
            states,
        } => {
            let cfg = SynthConfig {
                n_macro: macro_segments,
                epsilon,
                seed,
                k_states: states,
                ..SynthConfig::default()
            };
            let (ts, _) = cmd_synth(&cfg, &output)?;
            println!("wrote {} rows to {}", ts.t_len(), output.display());
        }
        Command::Eval { input, truth, output } => {
            let metrics = cmd_eval(&input, &truth, output.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Bench {
            sizes,
            output,
            epsilon,
            hp,
        } => {
            if sizes.is_empty() {
                bail!("no sizes given");
            }
            let hp = hp.to_hyperparameters();
            let synth = SynthConfig {
                epsilon,
                seed: hp.seed,
                k_states: hp.k_states,
                ..SynthConfig::default()
            };
            let report = cmd_bench(&sizes, &hp, &synth, output.as_deref())?;
            println!("T,seconds");
            for r in &report.rows {
                println!("{},{:.4}", r.t_len, r.seconds);
            }
            match report.r_squared {
                Some(r2) => println!("linear fit R^2 = {r2:.4}"),
                None => println!("linear fit R^2 undefined (need at least two sizes)"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
