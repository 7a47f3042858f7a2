//! Command-line interface: data prep, per-stage training, gradient
//! checking, and evaluation.
//!
//! Exit codes: 0 ok, 1 check failed, 2 usage/config/input error, 3 numeric
//! abort. Every command is deterministic given its config and seeds; log
//! verbosity comes from `DISTILLFORGE_LOG` (error, info, debug).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::datakit::{apply_transforms, read_corpus, write_corpus, TransformPlan};
use crate::driver::{self, DistillOptions};
use crate::error::{Error, Result};
use crate::gradsuite::{self, Component};
use crate::model::Stage;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "distillforge",
    version,
    about = "Multi-stage multi-teacher embedding distillation at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply corpus transforms (chunking, word shuffling) to a JSONL corpus
    Prep(PrepArgs),
    /// Train one stage of the distillation schedule
    Distill(DistillArgs),
    /// Check every analytic gradient against central finite differences
    Gradcheck(GradcheckArgs),
    /// Evaluate a checkpoint: alignment, retrieval, dimension sweep
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct PrepArgs {
    /// Input corpus (JSONL with id/text/kind)
    #[arg(long)]
    corpus: PathBuf,
    /// Transform plan (TOML); defaults apply when omitted
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Output corpus path
    #[arg(long)]
    out: PathBuf,
    /// Override the plan seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DistillArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Stage number (1-4)
    #[arg(long)]
    stage: u8,
    /// Resume this stage bitwise from a checkpoint
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Initialize parameters from a checkpoint (fresh optimizer); defaults
    /// to the previous stage's checkpoint when one exists
    #[arg(long)]
    init: Option<PathBuf>,
    /// Override the stage's step count
    #[arg(long)]
    steps: Option<u64>,
    /// Override the stage's batch size
    #[arg(long)]
    batch: Option<usize>,
    /// Override the stage's learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Override the stage's data/batching seed
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint output path (default: <checkpoint_dir>/stage<N>.ckpt)
    #[arg(long)]
    ckpt_out: Option<PathBuf>,
    /// Metrics CSV path (default: <metrics_dir>/stage<N>.csv)
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Record real wall-clock times in the metrics CSV (breaks byte-level
    /// determinism of the file)
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Random instances per component
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Test hook: negate one component's analytic gradient
    #[arg(long, hide = true)]
    flip_sign: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoint to evaluate
    #[arg(long)]
    ckpt: PathBuf,
    /// Evaluation manifest (TOML: [alignment] base/teacher, optional
    /// [retrieval] queries/docs/qrels)
    #[arg(long)]
    data: PathBuf,
    /// Emit one row per head instead of the full-width head only
    #[arg(long)]
    sweep: bool,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `args` and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through the same path
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Prep(args) => cmd_prep(&args),
        Command::Distill(args) => cmd_distill(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
        Command::Eval(args) => cmd_eval(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NonFiniteLoss { .. } | Error::NonFiniteEvaluation | Error::ZeroNormRow(_) => {
            EXIT_NUMERIC
        }
        _ => EXIT_USAGE,
    }
}

fn cmd_prep(args: &PrepArgs) -> Result<i32> {
    let corpus = read_corpus(&args.corpus)?;
    let mut plan = match &args.plan {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str::<TransformPlan>(&text)
                .map_err(|e| Error::Config(format!("bad plan file: {e}")))?
        }
        None => TransformPlan::default(),
    };
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    plan.validate()?;
    let (out, summary) = apply_transforms(&corpus, &plan);
    write_corpus(&args.out, &out)?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    log::info!(
        "prep: {} records in, {} out ({} chunked, {} shuffled)",
        summary.input_records,
        summary.output_records,
        summary.selected_for_chunking,
        summary.shuffled
    );
    Ok(EXIT_OK)
}

fn cmd_distill(args: &DistillArgs) -> Result<i32> {
    let mut cfg = RunConfig::load(&args.config)?;
    let stage = Stage::from_number(args.stage)?;
    {
        let section = cfg.stage_section_mut(stage);
        if let Some(steps) = args.steps {
            section.steps = steps;
        }
        if let Some(batch) = args.batch {
            section.batch_size = batch;
        }
        if let Some(lr) = args.lr {
            section.lr = lr;
        }
        if let Some(seed) = args.seed {
            section.seed = seed;
        }
    }
    let opts = DistillOptions {
        resume: args.resume.clone(),
        init: args.init.clone(),
        ckpt_out: args.ckpt_out.clone(),
        metrics_out: args.metrics_out.clone(),
        timing: args.timing,
    };
    let outcome = driver::distill(&cfg, stage, &opts)?;
    println!(
        "stage {} done: {} steps, checkpoint {}, metrics {}",
        stage.number(),
        outcome.steps_done,
        outcome.checkpoint_path.display(),
        outcome.metrics_path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<i32> {
    if args.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let flip = match &args.flip_sign {
        Some(name) => Some(
            Component::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown component: {name}")))?,
        ),
        None => None,
    };
    let results = gradsuite::run_suite(args.trials, args.seed, flip)?;
    let tol = gradsuite::DEFAULT_TOLERANCE;
    let mut all_ok = true;
    for r in &results {
        let ok = r.max_rel_err < tol;
        all_ok &= ok;
        println!(
            "{:<8} max_rel_err {:.3e} over {} instances ... {}",
            r.component.name(),
            r.max_rel_err,
            r.instances,
            if ok { "ok" } else { "FAIL" }
        );
    }
    if all_ok {
        println!("gradcheck passed (tolerance {tol:.0e})");
        Ok(EXIT_OK)
    } else {
        println!("gradcheck FAILED (tolerance {tol:.0e})");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let csv = driver::evaluate(&args.ckpt, &args.data, args.sweep)?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}
