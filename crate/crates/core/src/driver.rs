//! High-level run drivers shared by the CLI and the C ABI: load data per
//! the config, initialize or restore the network, run a stage, save the
//! checkpoint; and evaluate a checkpoint against an eval manifest.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::{DataConfig, RunConfig};
use crate::datakit::read_embeddings;
use crate::error::{Error, Result};
use crate::evalkit::{dimension_sweep, sweep_to_csv, EvalData};
use crate::model::{Head, HeadSet, Stage, StudentNet};
use crate::numcore::matrix::Matrix;
use crate::pipeline::{
    load_checkpoint, run_stage, save_checkpoint, MetricsWriter, StageData, TextTrainData,
    TrainerState, VisionTrainData,
};
use crate::teachers::{fuse, load_teacher_embeddings};

#[derive(Debug, Clone, Default)]
pub struct DistillOptions {
    /// Resume this stage bitwise from a checkpoint of the same config.
    pub resume: Option<PathBuf>,
    /// Initialize parameters from a checkpoint (fresh optimizer). When
    /// absent, stage N > 1 picks up `<checkpoint_dir>/stage<N-1>.ckpt` if
    /// it exists.
    pub init: Option<PathBuf>,
    pub ckpt_out: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
    /// Record real wall times in the metrics CSV (sacrifices byte-level
    /// determinism of the file).
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct DistillOutcome {
    pub checkpoint_path: PathBuf,
    pub metrics_path: PathBuf,
    pub steps_done: u64,
}

/// Train one stage according to `cfg`.
pub fn distill(cfg: &RunConfig, stage: Stage, opts: &DistillOptions) -> Result<DistillOutcome> {
    cfg.validate()?;
    let stage_cfg = cfg.stage_config(stage);
    let data = load_stage_data(cfg, stage)?;

    let ckpt_out = opts.ckpt_out.clone().unwrap_or_else(|| {
        cfg.paths
            .checkpoint_dir
            .join(format!("stage{}.ckpt", stage.number()))
    });
    let metrics_out = opts.metrics_out.clone().unwrap_or_else(|| {
        cfg.paths
            .metrics_dir
            .join(format!("stage{}.csv", stage.number()))
    });
    if let Some(parent) = ckpt_out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    if let Some(parent) = metrics_out.parent() {
        std::fs::create_dir_all(parent)?;
    }

    let plan_heads: Vec<Head> = stage_cfg.head_plan().heads().iter().collect();
    let expected_digest = stage_cfg.digest(&cfg.model);

    let (mut net, resume_state, mut metrics) = if let Some(resume_path) = &opts.resume {
        let ckpt = load_checkpoint(resume_path)?;
        if ckpt.stage != stage.number() {
            return Err(Error::Config(format!(
                "checkpoint is for stage {}, requested stage {}",
                ckpt.stage,
                stage.number()
            )));
        }
        if ckpt.config_digest != expected_digest {
            return Err(Error::Config(
                "checkpoint config digest does not match this run".into(),
            ));
        }
        let net = ckpt.restore_net()?;
        let state = TrainerState {
            optimizer: ckpt.optimizer.clone(),
            cursor: ckpt.batch_cursor,
            steps_done: ckpt.steps_done,
        };
        let metrics = MetricsWriter::append(&metrics_out, plan_heads, opts.timing)?;
        log::info!(
            "resuming stage {} from {} at step {}",
            stage.number(),
            resume_path.display(),
            ckpt.steps_done
        );
        (net, Some(state), metrics)
    } else {
        let init_path = opts.init.clone().or_else(|| {
            if stage.number() > 1 {
                let prev = cfg
                    .paths
                    .checkpoint_dir
                    .join(format!("stage{}.ckpt", stage.number() - 1));
                prev.exists().then_some(prev)
            } else {
                None
            }
        });
        let net = match init_path {
            Some(path) => {
                let ckpt = load_checkpoint(&path)?;
                if ckpt.net_config != cfg.model {
                    return Err(Error::Config(format!(
                        "checkpoint {} has a different model configuration",
                        path.display()
                    )));
                }
                log::info!("initializing from {}", path.display());
                ckpt.restore_net()?
            }
            None => {
                log::info!("initializing fresh parameters (seed {})", cfg.model.seed);
                StudentNet::new(cfg.model.clone())?
            }
        };
        let metrics = MetricsWriter::create(&metrics_out, plan_heads, opts.timing)?;
        (net, None, metrics)
    };

    let dump_dir = metrics_out.parent().map(Path::to_path_buf);
    let ckpt = run_stage(
        &stage_cfg,
        &mut net,
        &data,
        &mut metrics,
        resume_state,
        dump_dir.as_deref(),
    )?;
    save_checkpoint(&ckpt_out, &ckpt)?;
    Ok(DistillOutcome {
        checkpoint_path: ckpt_out,
        metrics_path: metrics_out,
        steps_done: ckpt.steps_done,
    })
}

/// Build the training set a stage needs, from the synthetic world or from
/// embedding files.
pub fn load_stage_data(cfg: &RunConfig, stage: Stage) -> Result<StageData> {
    match &cfg.data {
        DataConfig::Synthetic(s) => {
            let world = cfg.synth_world().expect("synthetic data config");
            world.stage_data(stage, s.n_items)
        }
        DataConfig::Files(f) => {
            let (ids, base) = read_embeddings(&f.base)?;
            let keys: Vec<&str> = ids.iter().map(String::as_str).collect();
            if stage == Stage::Four {
                let vision_path = f.vision_features.as_ref().ok_or_else(|| {
                    Error::Config("stage 4 requires data.vision_features".into())
                })?;
                let images = load_vision_features(vision_path, &keys, cfg.model.vision_dim)?;
                Ok(StageData::Vision(VisionTrainData {
                    images,
                    captions: base,
                }))
            } else {
                let files = cfg.teachers.files.as_ref().expect("validated");
                let mut outputs = Vec::with_capacity(files.len());
                for (path, &dim) in files.iter().zip(&cfg.teachers.dims) {
                    let m = load_teacher_embeddings(path, &keys)?;
                    if m.cols() != dim {
                        return Err(Error::DimMismatch {
                            context: "teacher embedding file",
                            expected: dim,
                            got: m.cols(),
                        });
                    }
                    outputs.push(m);
                }
                let teacher = fuse(&outputs)?;
                Ok(StageData::Text(TextTrainData { base, teacher }))
            }
        }
    }
}

/// Vision features live in the shared embedding container with ids
/// `key#token-k`; rows group into one token matrix per base record, in
/// base-record order.
fn load_vision_features(path: &Path, keys: &[&str], vision_dim: usize) -> Result<Vec<Matrix>> {
    let (ids, matrix) = read_embeddings(path)?;
    if matrix.cols() != vision_dim {
        return Err(Error::DimMismatch {
            context: "vision feature file",
            expected: vision_dim,
            got: matrix.cols(),
        });
    }
    let mut grouped: std::collections::HashMap<&str, Vec<usize>> = std::collections::HashMap::new();
    for (row, id) in ids.iter().enumerate() {
        let key = id.split('#').next().unwrap_or(id);
        grouped.entry(key).or_default().push(row);
    }
    let mut images = Vec::with_capacity(keys.len());
    for &key in keys {
        let rows = grouped
            .get(key)
            .ok_or_else(|| Error::MissingKey(key.to_string()))?;
        images.push(matrix.select_rows(rows));
    }
    Ok(images)
}

/// Evaluation manifest: where the alignment batch and the optional
/// retrieval fixture live. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalManifest {
    pub alignment: AlignmentManifest,
    pub retrieval: Option<RetrievalManifest>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentManifest {
    pub base: PathBuf,
    pub teacher: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalManifest {
    pub queries: PathBuf,
    pub docs: PathBuf,
    pub qrels: PathBuf,
}

/// Evaluate a checkpoint against a manifest; returns the report CSV
/// (fixed 10-column layout). `sweep` evaluates all four heads instead of
/// the full-width head only.
pub fn evaluate(ckpt_path: &Path, manifest_path: &Path, sweep: bool) -> Result<String> {
    let ckpt = load_checkpoint(ckpt_path)?;
    let net = ckpt.restore_net()?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let manifest: EvalManifest = toml::from_str(&std::fs::read_to_string(manifest_path)?)
        .map_err(|e| Error::Config(format!("bad eval manifest: {e}")))?;

    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_dir.join(p)
        }
    };

    let (ids, base) = read_embeddings(&resolve(&manifest.alignment.base))?;
    let keys: Vec<&str> = ids.iter().map(String::as_str).collect();
    let teacher = load_teacher_embeddings(&resolve(&manifest.alignment.teacher), &keys)?;

    let retrieval_data = match &manifest.retrieval {
        Some(r) => {
            let (q_ids, q_base) = read_embeddings(&resolve(&r.queries))?;
            let (d_ids, d_base) = read_embeddings(&resolve(&r.docs))?;
            let qrels = read_qrels(&resolve(&r.qrels), &q_ids, &d_ids)?;
            Some((q_base, d_base, qrels))
        }
        None => None,
    };

    let heads = if sweep {
        HeadSet::all()
    } else {
        HeadSet::of(&[Head::Fc1])
    };
    let eval = EvalData {
        base: &base,
        teacher: &teacher,
        retrieval: retrieval_data
            .as_ref()
            .map(|(q, d, rels)| (q, d, rels.as_slice())),
    };
    let rows = dimension_sweep(&net, &eval, heads)?;
    Ok(sweep_to_csv(&rows, base.rows()))
}

/// Qrels file: one `query_id<TAB>doc_id` line per query.
fn read_qrels(path: &Path, query_ids: &[String], doc_ids: &[String]) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let doc_index: std::collections::HashMap<&str, usize> = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut by_query: std::collections::HashMap<&str, &str> = std::collections::HashMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let (Some(q), Some(d)) = (parts.next(), parts.next()) else {
            return Err(Error::Config(format!("bad qrels line: {line}")));
        };
        by_query.insert(q.trim(), d.trim());
    }
    let mut qrels = Vec::with_capacity(query_ids.len());
    for (i, q) in query_ids.iter().enumerate() {
        let doc = by_query.get(q.as_str()).ok_or(Error::MissingQrel(i))?;
        let &idx = doc_index
            .get(doc)
            .ok_or_else(|| Error::MissingKey((*doc).to_string()))?;
        qrels.push(idx);
    }
    Ok(qrels)
}
