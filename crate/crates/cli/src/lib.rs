//! Command-line driver: `synth`, `derive`, `encode`, `split`, `train`,
//! `eval`, `generate`, `oracle-check` and `inspect`.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use scenebm::scene::Thresholds;
use scenebm::selfcheck::Mutation;
use scenebm::Task;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "scenebm", version, about = "Tri-way Boltzmann machines for scene modeling")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run config (JSON). Flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to SCENEBM_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene dataset.
    Synth {
        /// Generator spec; the bundled 30-label fixture when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Derive spatial relations from object boxes.
    Derive {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        axis_margin: f64,
        #[arg(long, default_value_t = 0.05)]
        contact_gap: f64,
        #[arg(long, default_value_t = 0.5)]
        overlap_ratio: f64,
    },
    /// Encode scenes as sparse binary vectors.
    Encode {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Stratified train/test/validation split.
    Split {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// train, test and validation fractions.
        #[arg(long, num_args = 3, default_values_t = [0.6, 0.3, 0.1])]
        ratios: Vec<f64>,
    },
    /// Train a model on a split directory.
    Train {
        /// Split directory (overrides the config's data_dir).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Continue from this checkpoint instead of a fresh initialization.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on one reasoning task.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// 1 relations, 2 missing object, 3 out of context, 4 generation.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        task: u8,
        /// Encoded scenes to evaluate on.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        motifs: Option<PathBuf>,
        /// Generations per category for task 4.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Sample scenes from clamped hidden units or a partial scene.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Bottom-layer hidden units to clamp on.
        #[arg(long, value_delimiter = ',')]
        hidden: Vec<usize>,
        /// Object labels to clamp on instead.
        #[arg(long, value_delimiter = ',')]
        objects: Vec<String>,
        #[arg(long)]
        motifs: Option<PathBuf>,
        /// Score motifs of this category only.
        #[arg(long)]
        category: Option<String>,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Run the exact-enumeration self checks.
    OracleCheck {
        /// Inject a known bug to confirm the checks catch it.
        #[arg(long, default_value = "none")]
        mutation: Mutation,
        /// Smaller sample budgets.
        #[arg(long)]
        quick: bool,
    },
    /// Summarize any artifact this tool writes.
    Inspect { path: PathBuf },
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let from_env = std::env::var("SCENEBM_THREADS").ok();
    let n = match (flag, from_env) {
        (Some(n), _) => Some(n),
        (None, Some(s)) => Some(s.trim().parse().with_context(|| format!("SCENEBM_THREADS={s:?} is not a number"))?),
        (None, None) => None,
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads(cli.common.threads)?;
    let Common { config, seed, out, .. } = cli.common;
    let mut cfg = RunConfig::load_or_default(config.as_deref())?;
    let here = PathBuf::from(".");
    let out_dir = out.clone().unwrap_or_else(|| here.clone());
    match cli.command {
        Command::Synth { spec } => commands::synth(spec.as_deref(), seed, &out_dir)?,
        Command::Derive { scenes, axis_margin, contact_gap, overlap_ratio } => {
            let out_file = out.map(|o| o.join("derived.json")).unwrap_or_else(|| "derived.json".into());
            commands::derive(&scenes, Thresholds { axis_margin, contact_gap, overlap_ratio }, &out_file)?
        }
        Command::Encode { scenes, vocab } => {
            let out_file = out.map(|o| o.join("encoded.json")).unwrap_or_else(|| "encoded.json".into());
            commands::encode(&scenes, &vocab, &out_file)?
        }
        Command::Split { scenes, vocab, ratios } => {
            let r = [ratios[0], ratios[1], ratios[2]];
            commands::split(&scenes, &vocab, r, seed.unwrap_or(0), &out_dir)?
        }
        Command::Train { data, resume } => {
            cfg.override_with(seed, out.as_deref(), data.as_deref());
            commands::train(&cfg, resume.as_deref())?
        }
        Command::Eval { checkpoint, task, data, vocab, motifs, count } => {
            cfg.override_with(seed, out.as_deref(), None);
            let args = commands::EvalArgs {
                checkpoint: &checkpoint,
                task: Task::try_from(task)?,
                data: &data,
                vocab: vocab.as_deref(),
                motifs: motifs.as_deref(),
                count,
                seed: cfg.seed(),
                out: &cfg.report_dir,
            };
            commands::eval(&cfg, args)?
        }
        Command::Generate { checkpoint, vocab, hidden, objects, motifs, category, count } => {
            cfg.override_with(seed, out.as_deref(), None);
            let args = commands::GenerateArgs {
                checkpoint: &checkpoint,
                vocab: &vocab,
                hidden,
                objects,
                motifs: motifs.as_deref(),
                category,
                count,
                seed: cfg.seed(),
                out: &cfg.report_dir,
            };
            commands::generate(&cfg, args)?
        }
        Command::OracleCheck { mutation, quick } => {
            if !commands::oracle_check(mutation, quick, seed.unwrap_or(0))? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Inspect { path } => commands::inspect(&path)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `args` (program name first) and runs the command, printing errors
/// to stderr. The binary is a thin wrapper around this.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
