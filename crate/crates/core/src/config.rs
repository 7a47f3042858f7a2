//! Run configuration: a single TOML tree with two profiles of defaults.
//!
//! The `desk` profile is a small, fully verifiable setup with synthetic
//! teachers; `paper-scale` pins the full-scale reference settings
//! (per-stage steps, batch sizes, learning rates, and the 4096 + 8192
//! teacher dimensions). A config file selects a profile and overrides
//! individual keys; unknown keys are rejected before any side effect.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{CosineReduction, LossWeights};
use crate::model::{NetConfig, Stage};
use crate::pipeline::{AdamWConfig, StageConfig};
use crate::synth::{SynthSpec, SynthWorld, VisionSynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Profile {
    #[default]
    #[serde(rename = "desk")]
    Desk,
    #[serde(rename = "paper-scale")]
    PaperScale,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub model: NetConfig,
    pub data: DataConfig,
    pub teachers: TeachersConfig,
    pub stages: [StageSection; 4],
    pub paths: PathsConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataConfig {
    Synthetic(SynthDataConfig),
    Files(FileDataConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataConfig {
    pub n_items: usize,
    pub eval_items: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub vision: Option<VisionSynthSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileDataConfig {
    /// EMB1 file of student base features keyed by record id.
    pub base: PathBuf,
    /// EMB1 file of vision features keyed `id#token-k` (stage 4).
    pub vision_features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeachersConfig {
    pub dims: Vec<usize>,
    /// EMB1 files, one per teacher, keyed like the base file. When absent,
    /// teachers are synthetic linear maps of the shared latent.
    pub files: Option<Vec<PathBuf>>,
}

impl TeachersConfig {
    pub fn fused_dim(&self) -> usize {
        self.dims.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSection {
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub weights: LossWeights,
    pub optimizer: AdamWConfig,
    pub self_distill: bool,
    pub stage4_weighted: bool,
    pub cosine_reduction: CosineReduction,
    pub repeat_data: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathsConfig {
    pub checkpoint_dir: PathBuf,
    pub metrics_dir: PathBuf,
}

impl RunConfig {
    /// Desk profile: two synthetic teachers (16 + 24 dims) over a shared
    /// 12-dim latent, a small student, batches of 16. Learning rates scale
    /// the reference schedule's (1e-4, 8e-5, 7e-5, 1e-4) by 10x; the step
    /// split keeps stages 1-3 inside a 3000-step budget.
    pub fn desk() -> Self {
        let weights = LossWeights::reference();
        let stage = |steps: u64, lr: f64, seed: u64| StageSection {
            steps,
            batch_size: 16,
            lr,
            seed,
            weights,
            optimizer: AdamWConfig::default(),
            self_distill: false,
            stage4_weighted: false,
            cosine_reduction: CosineReduction::Sum,
            repeat_data: true,
        };
        Self {
            profile: Profile::Desk,
            model: NetConfig {
                base_dim: 24,
                hidden_dim: 32,
                tail_layers: 3,
                head_dims: [40, 32, 16, 8],
                vision_dim: 48,
                seed: 7,
            },
            data: DataConfig::Synthetic(SynthDataConfig {
                n_items: 512,
                eval_items: 64,
                latent_dim: 12,
                seed: 5,
                vision: Some(VisionSynthSpec {
                    vision_dim: 48,
                    tokens_per_image: 4,
                    token_noise: 0.05,
                }),
            }),
            teachers: TeachersConfig {
                dims: vec![16, 24],
                files: None,
            },
            stages: [
                stage(400, 1e-3, 11),
                stage(1100, 8e-4, 12),
                stage(1500, 7e-4, 13),
                stage(600, 1e-3, 14),
            ],
            paths: PathsConfig {
                checkpoint_dir: PathBuf::from("runs/checkpoints"),
                metrics_dir: PathBuf::from("runs/metrics"),
            },
        }
    }

    /// Reference full-scale settings: teacher dims 4096 + 8192 fused to
    /// 12288, per-stage steps (4000, 7000, 2200, 3500), batch sizes
    /// (128, 128, 128, 90), learning rates (1e-4, 8e-5, 7e-5, 1e-4).
    pub fn paper_scale() -> Self {
        let weights = LossWeights::reference();
        let stage = |steps: u64, batch: usize, lr: f64, seed: u64| StageSection {
            steps,
            batch_size: batch,
            lr,
            seed,
            weights,
            optimizer: AdamWConfig::default(),
            self_distill: false,
            stage4_weighted: false,
            cosine_reduction: CosineReduction::Sum,
            repeat_data: true,
        };
        Self {
            profile: Profile::PaperScale,
            model: NetConfig {
                base_dim: 1536,
                hidden_dim: 1536,
                tail_layers: 3,
                head_dims: [12288, 1536, 768, 384],
                vision_dim: 1152,
                seed: 7,
            },
            data: DataConfig::Synthetic(SynthDataConfig {
                n_items: 8192,
                eval_items: 512,
                latent_dim: 64,
                seed: 5,
                vision: Some(VisionSynthSpec {
                    vision_dim: 1152,
                    tokens_per_image: 16,
                    token_noise: 0.05,
                }),
            }),
            teachers: TeachersConfig {
                dims: vec![4096, 8192],
                files: None,
            },
            stages: [
                stage(4000, 128, 1e-4, 11),
                stage(7000, 128, 8e-5, 12),
                stage(2200, 128, 7e-5, 13),
                stage(3500, 90, 1e-4, 14),
            ],
            paths: PathsConfig {
                checkpoint_dir: PathBuf::from("runs/checkpoints"),
                metrics_dir: PathBuf::from("runs/metrics"),
            },
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::PaperScale => Self::paper_scale(),
        }
    }

    /// Parse a TOML file, apply overrides onto the profile defaults, and
    /// validate. Unknown keys anywhere are an error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawRunConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        let cfg = raw.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stage_section(&self, stage: Stage) -> &StageSection {
        &self.stages[(stage.number() - 1) as usize]
    }

    pub fn stage_section_mut(&mut self, stage: Stage) -> &mut StageSection {
        &mut self.stages[(stage.number() - 1) as usize]
    }

    pub fn stage_config(&self, stage: Stage) -> StageConfig {
        let section = self.stage_section(stage);
        StageConfig {
            stage,
            steps: section.steps,
            batch_size: section.batch_size,
            lr: section.lr,
            weights: section.weights,
            seed: section.seed,
            self_distill: section.self_distill,
            stage4_weighted: section.stage4_weighted,
            cosine_reduction: section.cosine_reduction,
            optimizer: section.optimizer,
            repeat_data: section.repeat_data,
        }
    }

    /// The synthetic world, when data is synthetic.
    pub fn synth_world(&self) -> Option<SynthWorld> {
        match &self.data {
            DataConfig::Synthetic(s) => Some(SynthWorld::new(SynthSpec {
                latent_dim: s.latent_dim,
                base_dim: self.model.base_dim,
                teacher_dims: self.teachers.dims.clone(),
                seed: s.seed,
                vision: s.vision.clone(),
            })),
            DataConfig::Files(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.teachers.dims.is_empty() {
            return Err(Error::Config("at least one teacher is required".into()));
        }
        if self.teachers.dims.contains(&0) {
            return Err(Error::Config("teacher dims must be positive".into()));
        }
        if let Some(files) = &self.teachers.files {
            if files.len() != self.teachers.dims.len() {
                return Err(Error::Config(
                    "teachers.files and teachers.dims must have the same length".into(),
                ));
            }
        }
        // The full-width head feeds the cosine loss against the fused
        // teacher; a dimension mismatch would make stage 1 invalid.
        let fused = self.teachers.fused_dim();
        if self.model.head_dims[0] != fused {
            return Err(Error::Config(format!(
                "head_dims[0] = {} must equal the fused teacher dim {}",
                self.model.head_dims[0], fused
            )));
        }
        for (i, section) in self.stages.iter().enumerate() {
            let stage = Stage::from_number(i as u8 + 1)?;
            let cfg = self.stage_config(stage);
            cfg.validate()
                .map_err(|e| Error::Config(format!("stage{}: {e}", i + 1)))?;
            if section.self_distill && stage != Stage::Three {
                return Err(Error::Config(format!(
                    "stage{}: self_distill applies to stage 3 only",
                    i + 1
                )));
            }
        }
        match &self.data {
            DataConfig::Synthetic(s) => {
                if s.latent_dim == 0 || s.n_items == 0 {
                    return Err(Error::Config("synthetic data needs items and latents".into()));
                }
                if let Some(v) = &s.vision {
                    if v.vision_dim != self.model.vision_dim {
                        return Err(Error::Config(format!(
                            "data.vision.vision_dim {} must match model.vision_dim {}",
                            v.vision_dim, self.model.vision_dim
                        )));
                    }
                    if v.tokens_per_image == 0 {
                        return Err(Error::Config("tokens_per_image must be >= 1".into()));
                    }
                }
            }
            DataConfig::Files(f) => {
                if self.teachers.files.is_none() {
                    return Err(Error::Config(
                        "file-backed data requires teachers.files".into(),
                    ));
                }
                if f.base.as_os_str().is_empty() {
                    return Err(Error::Config("data.base path is empty".into()));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Raw (all-optional) layer: what the TOML file actually contains.
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    profile: Option<Profile>,
    model: Option<RawModel>,
    data: Option<RawData>,
    teachers: Option<RawTeachers>,
    stage1: Option<RawStage>,
    stage2: Option<RawStage>,
    stage3: Option<RawStage>,
    stage4: Option<RawStage>,
    paths: Option<RawPaths>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    base_dim: Option<usize>,
    hidden_dim: Option<usize>,
    tail_layers: Option<usize>,
    head_dims: Option<[usize; 4]>,
    vision_dim: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    kind: Option<String>,
    n_items: Option<usize>,
    eval_items: Option<usize>,
    latent_dim: Option<usize>,
    seed: Option<u64>,
    vision: Option<VisionSynthSpec>,
    base: Option<PathBuf>,
    vision_features: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTeachers {
    dims: Option<Vec<usize>>,
    files: Option<Vec<PathBuf>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    steps: Option<u64>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    weights: Option<LossWeights>,
    optimizer: Option<AdamWConfig>,
    self_distill: Option<bool>,
    stage4_weighted: Option<bool>,
    cosine_reduction: Option<CosineReduction>,
    repeat_data: Option<bool>,
    /// Per-head active-loss lists. The schedule fixes these; a config may
    /// restate them but not change them.
    head_loss_plan: Option<std::collections::BTreeMap<String, Vec<String>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    checkpoint_dir: Option<PathBuf>,
    metrics_dir: Option<PathBuf>,
}

impl RawRunConfig {
    fn resolve(self) -> Result<RunConfig> {
        let profile = self.profile.unwrap_or_default();
        let mut cfg = RunConfig::for_profile(profile);

        if let Some(m) = self.model {
            set(&mut cfg.model.base_dim, m.base_dim);
            set(&mut cfg.model.hidden_dim, m.hidden_dim);
            set(&mut cfg.model.tail_layers, m.tail_layers);
            set(&mut cfg.model.head_dims, m.head_dims);
            set(&mut cfg.model.vision_dim, m.vision_dim);
            set(&mut cfg.model.seed, m.seed);
        }
        if let Some(t) = self.teachers {
            set(&mut cfg.teachers.dims, t.dims);
            if t.files.is_some() {
                cfg.teachers.files = t.files;
            }
        }
        if let Some(d) = self.data {
            cfg.data = resolve_data(d, &cfg.data)?;
        }
        let raw_stages = [self.stage1, self.stage2, self.stage3, self.stage4];
        for (i, raw) in raw_stages.into_iter().enumerate() {
            let Some(raw) = raw else { continue };
            let stage = Stage::from_number(i as u8 + 1)?;
            let section = &mut cfg.stages[i];
            set(&mut section.steps, raw.steps);
            set(&mut section.batch_size, raw.batch_size);
            set(&mut section.lr, raw.lr);
            set(&mut section.seed, raw.seed);
            set(&mut section.weights, raw.weights);
            set(&mut section.optimizer, raw.optimizer);
            set(&mut section.self_distill, raw.self_distill);
            set(&mut section.stage4_weighted, raw.stage4_weighted);
            set(&mut section.cosine_reduction, raw.cosine_reduction);
            set(&mut section.repeat_data, raw.repeat_data);
            if let Some(plan) = raw.head_loss_plan {
                check_head_plan(stage, &plan)?;
            }
        }
        if let Some(p) = self.paths {
            set(&mut cfg.paths.checkpoint_dir, p.checkpoint_dir);
            set(&mut cfg.paths.metrics_dir, p.metrics_dir);
        }
        Ok(cfg)
    }
}

fn set<T>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

fn resolve_data(raw: RawData, default: &DataConfig) -> Result<DataConfig> {
    let kind = raw.kind.as_deref().unwrap_or(match default {
        DataConfig::Synthetic(_) => "synthetic",
        DataConfig::Files(_) => "files",
    });
    match kind {
        "synthetic" => {
            let mut s = match default {
                DataConfig::Synthetic(s) => s.clone(),
                DataConfig::Files(_) => SynthDataConfig {
                    n_items: 512,
                    eval_items: 64,
                    latent_dim: 12,
                    seed: 5,
                    vision: None,
                },
            };
            set(&mut s.n_items, raw.n_items);
            set(&mut s.eval_items, raw.eval_items);
            set(&mut s.latent_dim, raw.latent_dim);
            set(&mut s.seed, raw.seed);
            if raw.vision.is_some() {
                s.vision = raw.vision;
            }
            Ok(DataConfig::Synthetic(s))
        }
        "files" => {
            let base = raw
                .base
                .ok_or_else(|| Error::Config("data.kind = files requires data.base".into()))?;
            Ok(DataConfig::Files(FileDataConfig {
                base,
                vision_features: raw.vision_features,
            }))
        }
        other => Err(Error::Config(format!("unknown data kind: {other}"))),
    }
}

/// The per-stage loss schedule is fixed; a config may restate it verbatim.
fn check_head_plan(
    stage: Stage,
    plan: &std::collections::BTreeMap<String, Vec<String>>,
) -> Result<()> {
    use crate::losses::ActiveLosses;
    use crate::model::Head;
    let canonical = crate::pipeline::HeadPlan::for_stage(stage);
    for (name, losses) in plan {
        let head = Head::ALL
            .into_iter()
            .find(|h| h.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown head {name} in head_loss_plan")))?;
        let mut active = ActiveLosses::NONE;
        for loss in losses {
            match loss.as_str() {
                "cosine" => active.cosine = true,
                "sim" => active.sim = true,
                "resim" => active.resim = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown loss {other} in head_loss_plan"
                    )))
                }
            }
        }
        match canonical.get(head) {
            Some(expected) if expected == active => {}
            Some(expected) => {
                return Err(Error::Config(format!(
                    "stage {} fixes head {} to {:?}; config requests {:?}",
                    stage.number(),
                    name,
                    expected,
                    active
                )))
            }
            None => {
                return Err(Error::Config(format!(
                    "head {} is not trained in stage {}",
                    name,
                    stage.number()
                )))
            }
        }
    }
    Ok(())
}
