//! Stage orchestration: masked AdamW training over the four-stage
//! freeze/train schedule, checkpointing, and metrics logging.
//!
//! Stages 1-3 distill text batches against the fused teacher target (stage
//! 3 optionally self-distills the reduction heads from the full-width
//! head's own output). Stage 4 aligns the vision path to caption vectors
//! produced by the frozen text path.

pub mod checkpoint;
pub mod metrics;
pub mod optimizer;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datakit::batch::{BatchCursor, BatchIter};
use crate::error::{Error, Result};
use crate::losses::{combined_loss, ActiveLosses, CosineReduction, LossReport, LossWeights};
use crate::model::{
    stage_mask, Head, HeadOutputs, HeadSet, ParamGroupMask, Stage, StudentNet, VisionCache,
};
use crate::numcore::matrix::Matrix;
use crate::teachers::FusedTeacherTarget;

pub use checkpoint::{digest_str, load_checkpoint, save_checkpoint, sidecar_path, Checkpoint};
pub use metrics::MetricsWriter;
pub use optimizer::{adamw_step, adamw_step_slice, AdamWConfig, OptimizerState};

/// Which losses drive each head in a stage. Fixed by the schedule: the
/// reduction heads drop the cosine term everywhere their dimension cannot
/// match the teacher's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadPlan {
    entries: [Option<ActiveLosses>; 4],
}

impl HeadPlan {
    pub fn for_stage(stage: Stage) -> Self {
        let entries = match stage {
            Stage::One | Stage::Two => [Some(ActiveLosses::ALL), None, None, None],
            Stage::Three => [
                Some(ActiveLosses::ALL),
                Some(ActiveLosses::SIM_RESIM),
                Some(ActiveLosses::SIM_RESIM),
                Some(ActiveLosses::SIM_RESIM),
            ],
            Stage::Four => [Some(ActiveLosses::ALL); 4],
        };
        Self { entries }
    }

    pub fn get(&self, head: Head) -> Option<ActiveLosses> {
        self.entries[head.index()]
    }

    pub fn heads(&self) -> HeadSet {
        let mut set = HeadSet::EMPTY;
        for h in Head::ALL {
            if self.entries[h.index()].is_some() {
                set = set.with(h);
            }
        }
        set
    }
}

/// Per-stage run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: Stage,
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub weights: LossWeights,
    pub seed: u64,
    /// Stage 3 only: reduction heads learn from the full-width head's own
    /// (detached) output instead of the external teacher.
    pub self_distill: bool,
    /// Stage 4 only: apply the lambda weights inside the per-head average
    /// instead of a plain mean of the three losses.
    pub stage4_weighted: bool,
    pub cosine_reduction: CosineReduction,
    pub optimizer: AdamWConfig,
    /// Cycle the data across epochs; turning this off makes short datasets
    /// fail with DataExhausted instead of repeating.
    pub repeat_data: bool,
}

impl StageConfig {
    pub fn mask(&self) -> ParamGroupMask {
        stage_mask(self.stage)
    }

    pub fn head_plan(&self) -> HeadPlan {
        HeadPlan::for_stage(self.stage)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::Config(format!("bad learning rate {}", self.lr)));
        }
        if self.self_distill && self.stage != Stage::Three {
            return Err(Error::Config(
                "self_distill applies to stage 3 only".into(),
            ));
        }
        Ok(())
    }

    /// Digest over everything that must match for a checkpoint resume.
    /// `steps` is excluded: resuming with a larger step target is the
    /// normal way to continue a run.
    pub fn digest(&self, net_config: &crate::model::NetConfig) -> u64 {
        let canonical = format!(
            "stage={};batch={};lr={};w={:?};seed={};sd={};s4w={};red={:?};opt={:?};net={:?};repeat={}",
            self.stage.number(),
            self.batch_size,
            self.lr,
            self.weights,
            self.seed,
            self.self_distill,
            self.stage4_weighted,
            self.cosine_reduction,
            self.optimizer,
            net_config,
            self.repeat_data,
        );
        digest_str(&canonical)
    }
}

/// Text-stage training set: base features plus the fused teacher target,
/// row-aligned.
#[derive(Debug, Clone)]
pub struct TextTrainData {
    pub base: Matrix,
    pub teacher: FusedTeacherTarget,
}

/// Stage-4 training set: per-image token matrices plus caption base
/// features, row-aligned.
#[derive(Debug, Clone)]
pub struct VisionTrainData {
    pub images: Vec<Matrix>,
    pub captions: Matrix,
}

#[derive(Debug, Clone)]
pub enum StageData {
    Text(TextTrainData),
    Vision(VisionTrainData),
}

impl StageData {
    pub fn len(&self) -> usize {
        match self {
            StageData::Text(d) => d.base.rows(),
            StageData::Vision(d) => d.images.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-head reports plus the flattened parameter gradient for one step.
type StepOutput = (Vec<(Head, LossReport)>, Vec<f64>);

/// Optimizer and data-cursor state carried across a resume.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub optimizer: OptimizerState,
    pub cursor: BatchCursor,
    pub steps_done: u64,
}

/// Detached targets for self-distillation: the full-width head's current
/// output serves as the teacher for every reduction head. No gradient
/// flows back into the full-width head through these targets.
pub fn self_distill_targets(net: &StudentNet, base: &Matrix) -> Result<HeadOutputs> {
    let out = net.forward_text(base, HeadSet::of(&[Head::Fc1]))?;
    let fc1 = out.get(Head::Fc1).expect("fc1 requested").clone();
    let mut targets = HeadOutputs::default();
    for head in [Head::Fc2, Head::Fc3, Head::Fc4] {
        targets.insert(head, fc1.clone());
    }
    Ok(targets)
}

/// Everything stage 4 computes for one batch.
pub struct Stage4Loss {
    pub per_head: Vec<(Head, LossReport)>,
    /// Mean over heads of the per-head (averaged or weighted) loss.
    pub mean_loss: f64,
    /// Gradients of `mean_loss` with respect to each vision head output.
    pub head_grads: HeadOutputs,
    pub cache: VisionCache,
}

/// Caption-teaches-image loss: captions run through the frozen text path
/// as detached teachers, images run through the vision path as students,
/// and each head contributes the average of the three losses (or their
/// weighted sum when `weighted` is set). The result is the mean over
/// heads; only the vision group can receive gradient.
pub fn stage4_loss(
    net: &StudentNet,
    images: &[Matrix],
    captions: &Matrix,
    weights: &LossWeights,
    weighted: bool,
) -> Result<Stage4Loss> {
    if images.len() != captions.rows() {
        return Err(Error::BatchMismatch(images.len(), captions.rows()));
    }
    let heads = HeadSet::all();
    let teacher = net.forward_text(captions, heads)?;
    let (student, cache) = net.forward_vision_cached(images, heads)?;

    let w = if weighted {
        *weights
    } else {
        LossWeights {
            lambda1: 1.0 / 3.0,
            lambda2: 1.0 / 3.0,
            lambda3: 1.0 / 3.0,
            margin: weights.margin,
        }
    };
    let n_heads = heads.len() as f64;
    let mut per_head = Vec::with_capacity(4);
    let mut head_grads = HeadOutputs::default();
    let mut mean_loss = 0.0;
    for head in heads.iter() {
        let s = student.get(head).expect("vision head output");
        let t = teacher.get(head).expect("caption head output");
        let (report, mut grad) =
            combined_loss(s, t, &w, ActiveLosses::ALL, CosineReduction::Sum)?;
        grad.scale(1.0 / n_heads);
        mean_loss += report.total / n_heads;
        per_head.push((head, report));
        head_grads.insert(head, grad);
    }
    Ok(Stage4Loss {
        per_head,
        mean_loss,
        head_grads,
        cache,
    })
}

/// Run (or continue) one stage for `cfg.steps` total optimizer steps.
///
/// Returns the checkpoint captured after the final step. Parameters
/// outside the stage mask are bit-identical before and after. A non-finite
/// loss aborts before the update for that step, after writing a diagnostic
/// dump when `dump_dir` is given.
pub fn run_stage(
    cfg: &StageConfig,
    net: &mut StudentNet,
    data: &StageData,
    metrics: &mut MetricsWriter,
    resume: Option<TrainerState>,
    dump_dir: Option<&Path>,
) -> Result<Checkpoint> {
    cfg.validate()?;
    match (cfg.stage, data) {
        (Stage::Four, StageData::Vision(_)) | (Stage::One | Stage::Two | Stage::Three, StageData::Text(_)) => {}
        _ => {
            return Err(Error::Config(format!(
                "stage {} given the wrong kind of training data",
                cfg.stage.number()
            )))
        }
    }

    let mask = cfg.mask();
    let plan = cfg.head_plan();
    let mut state = resume.unwrap_or_else(|| TrainerState {
        optimizer: OptimizerState::new(cfg.optimizer, net.param_count()),
        cursor: BatchCursor::default(),
        steps_done: 0,
    });
    if state.optimizer.m.len() != net.param_count() {
        return Err(Error::Config(
            "optimizer state does not match parameter count".into(),
        ));
    }

    let mut batches = BatchIter::new(data.len(), cfg.batch_size, cfg.seed, cfg.repeat_data);
    batches.restore(state.cursor);

    let stage_no = cfg.stage.number();
    while state.steps_done < cfg.steps {
        let step = state.steps_done + 1;
        let started = std::time::Instant::now();
        let batch = batches
            .next()
            .ok_or(Error::DataExhausted(state.steps_done))?;

        let step_result = match data {
            StageData::Text(text) => text_step(cfg, net, text, &batch, &plan, mask),
            StageData::Vision(vision) => vision_step(cfg, net, vision, &batch, mask),
        };
        let (reports, flat_grads) = match step_result {
            Ok(out) => out,
            // A non-finite value inside the forward pass is the same
            // numeric abort as a non-finite loss: stop before any update.
            Err(Error::NonFiniteEvaluation) => {
                let detail = dump_nonfinite(dump_dir, stage_no, step, &[])
                    .unwrap_or_else(|| "non-finite value in the forward pass".to_string());
                return Err(Error::NonFiniteLoss {
                    stage: stage_no,
                    step,
                    detail,
                });
            }
            Err(other) => return Err(other),
        };

        if let Some(bad) = reports.iter().find(|(_, r)| !r.is_finite()) {
            let detail = dump_nonfinite(dump_dir, stage_no, step, &reports)
                .unwrap_or_else(|| format!("head {} produced a non-finite loss", bad.0.name()));
            return Err(Error::NonFiniteLoss {
                stage: stage_no,
                step,
                detail,
            });
        }

        adamw_step(net, &flat_grads, &mut state.optimizer, cfg.lr, mask);
        state.steps_done = step;
        state.cursor = batches.cursor();

        let wall_ms = started.elapsed().as_millis() as u64;
        metrics.log_step(step, stage_no, &reports, wall_ms)?;
    }

    let ckpt = Checkpoint {
        version: 1,
        config_digest: cfg.digest(net.config()),
        net_config: net.config().clone(),
        params: net.flatten(),
        optimizer: state.optimizer,
        steps_done: state.steps_done,
        batch_cursor: state.cursor,
        stage: stage_no,
        metrics_tail: metrics.last_line().to_string(),
    };
    Ok(ckpt)
}

fn text_step(
    cfg: &StageConfig,
    net: &StudentNet,
    data: &TextTrainData,
    batch: &[usize],
    plan: &HeadPlan,
    mask: ParamGroupMask,
) -> Result<StepOutput> {
    let base = data.base.select_rows(batch);
    let teacher = data.teacher.matrix.select_rows(batch);
    let (outputs, cache) = net.forward_text_cached(&base, plan.heads())?;

    // Detached self-distillation target, cloned from this step's
    // full-width output before any gradient work.
    let fc1_target = if cfg.self_distill {
        outputs.get(Head::Fc1).cloned()
    } else {
        None
    };

    let mut reports = Vec::new();
    let mut head_grads = HeadOutputs::default();
    for head in plan.heads().iter() {
        let active = plan.get(head).expect("head in plan");
        let s = outputs.get(head).expect("head output");
        let target = match (&fc1_target, head) {
            (Some(t), Head::Fc2 | Head::Fc3 | Head::Fc4) => t,
            _ => &teacher,
        };
        let (report, grad) = combined_loss(s, target, &cfg.weights, active, cfg.cosine_reduction)?;
        reports.push((head, report));
        head_grads.insert(head, grad);
    }
    let grads = net.backward_text(&cache, &head_grads, mask)?;
    Ok((reports, grads.flatten()))
}

fn vision_step(
    cfg: &StageConfig,
    net: &StudentNet,
    data: &VisionTrainData,
    batch: &[usize],
    mask: ParamGroupMask,
) -> Result<StepOutput> {
    let images: Vec<Matrix> = batch.iter().map(|&i| data.images[i].clone()).collect();
    let captions = data.captions.select_rows(batch);
    let s4 = stage4_loss(net, &images, &captions, &cfg.weights, cfg.stage4_weighted)?;
    let grads = net.backward_vision(&s4.cache, &s4.head_grads, mask)?;
    Ok((s4.per_head, grads.flatten()))
}

fn dump_nonfinite(
    dump_dir: Option<&Path>,
    stage: u8,
    step: u64,
    reports: &[(Head, LossReport)],
) -> Option<String> {
    let dir = dump_dir?;
    let path: PathBuf = dir.join(format!("nonfinite-stage{stage}-step{step}.json"));
    let body = serde_json::json!({
        "stage": stage,
        "step": step,
        "heads": reports.iter().map(|(h, r)| {
            serde_json::json!({
                "head": h.name(),
                "cosine": r.cosine,
                "sim": r.sim,
                "resim": r.resim,
                "total": r.total,
            })
        }).collect::<Vec<_>>(),
    });
    std::fs::write(&path, format!("{body}\n")).ok()?;
    Some(path.display().to_string())
}
