mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otce::MetricId;

/// Transferability estimation from pre-extracted embeddings.
#[derive(Debug, Parser)]
#[command(name = "otce", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one source/target pair.
    Score {
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        metric_flags: MetricFlags,
    },
    /// Score every FTRS file in a directory against one target and rank them.
    Rank {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        sources: PathBuf,
        #[arg(long, value_enum, default_value = "f-otce")]
        metric: Metric,
        #[command(flatten)]
        metric_flags: MetricFlags,
    },
    /// Rank correlation between scores and accuracies (CSV: task_id,score,accuracy).
    Corr {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: CorrMethod,
    },
    /// Gradient ascent on the target embeddings.
    Optimize {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Where to write the optimized target FTRS file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 100)]
        unroll: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Entropic weight of the unrolled solve.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Entropic weight used for the before/after full-set scores.
        #[arg(long, default_value_t = 0.1)]
        score_lambda: f64,
        #[arg(long, default_value_t = 256)]
        source_batch: usize,
        #[arg(long, default_value_t = 25)]
        target_batch: usize,
        /// Per-step CSV trace (step,f_otce,grad_norm).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate synthetic task pairs from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a CSV feature file (label first) to FTRS.
    Convert {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// The first CSV row is a header.
        #[arg(long)]
        header: bool,
    },
}

#[derive(Debug, Clone, Args)]
struct MetricFlags {
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    #[value(name = "f-otce")]
    FOtce,
    #[value(name = "jc-otce")]
    JcOtce,
    Nce,
}

impl From<Metric> for MetricId {
    fn from(m: Metric) -> Self {
        match m {
            Metric::FOtce => MetricId::FOtce,
            Metric::JcOtce => MetricId::JcOtce,
            Metric::Nce => MetricId::Nce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorrMethod {
    Spearman,
    Kendall,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score {
            metric,
            source,
            target,
            metric_flags,
        } => commands::score(metric.into(), &source, &target, &metric_flags),
        Command::Rank {
            target,
            sources,
            metric,
            metric_flags,
        } => commands::rank(metric.into(), &target, &sources, &metric_flags),
        Command::Corr { pairs, method } => commands::corr(&pairs, method),
        Command::Optimize {
            source,
            target,
            out,
            steps,
            lr,
            unroll,
            seed,
            lambda,
            score_lambda,
            source_batch,
            target_batch,
            trace,
        } => {
            let config = otce::GradConfig {
                sinkhorn: otce::SinkhornConfig::with_lambda(lambda),
                unroll_iterations: unroll,
                learning_rate: lr,
                steps,
                source_batch,
                target_batch,
                seed,
            };
            commands::optimize(&source, &target, &out, &config, score_lambda, trace.as_deref())
        }
        Command::Synth { spec, out } => commands::synth(&spec, &out),
        Command::Convert { csv, out, header } => commands::convert(&csv, &out, header),
    };
    match result {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("otce: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
