//! Synthetic data generation for desk-scale runs.
//!
//! Everything derives from a shared latent space: synthetic teachers embed
//! the latents through frozen random linear maps, student base features
//! are a fixed linear view of the same latents, and vision tokens are a
//! third view plus per-token noise (captions reuse the text view, so the
//! caption and image of an item describe the same latent).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numcore::matrix::Matrix;
use crate::numcore::rng::{streams, RngStream};
use crate::pipeline::{StageData, TextTrainData, VisionTrainData};
use crate::teachers::{fuse, synth_teacher_embed, FusedTeacherTarget, TeacherSource};

/// Shape of the synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub latent_dim: usize,
    pub base_dim: usize,
    pub teacher_dims: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub vision: Option<VisionSynthSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisionSynthSpec {
    pub vision_dim: usize,
    pub tokens_per_image: usize,
    pub token_noise: f64,
}

impl Default for VisionSynthSpec {
    fn default() -> Self {
        Self {
            vision_dim: 48,
            tokens_per_image: 4,
            token_noise: 0.05,
        }
    }
}

/// Frozen maps and teachers; sampling draws fresh latents per call.
#[derive(Debug, Clone)]
pub struct SynthWorld {
    spec: SynthSpec,
    base_map: Matrix,
    vision_map: Option<Matrix>,
    teachers: Vec<TeacherSource>,
}

/// One sampled dataset over `n` latents.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub latents: Matrix,
    pub base: Matrix,
    pub teacher_outputs: Vec<Matrix>,
    pub fused: FusedTeacherTarget,
}

impl SynthWorld {
    pub fn new(spec: SynthSpec) -> Self {
        let mut base_rng = RngStream::new(spec.seed, streams::SYNTH_BASE_MAP);
        let scale = 1.0 / (spec.latent_dim as f64).sqrt();
        let mut base_map = base_rng.normal_matrix(spec.latent_dim, spec.base_dim);
        base_map.scale(scale);

        let vision_map = spec.vision.as_ref().map(|v| {
            let mut rng = RngStream::new(spec.seed, streams::SYNTH_VISION_MAP);
            let mut m = rng.normal_matrix(spec.latent_dim, v.vision_dim);
            m.scale(scale);
            m
        });

        let teachers = spec
            .teacher_dims
            .iter()
            .enumerate()
            .map(|(i, &dim)| {
                TeacherSource::synthetic_linear(
                    format!("teacher-{i}"),
                    spec.latent_dim,
                    dim,
                    spec.seed,
                    i as u64,
                )
            })
            .collect();

        Self {
            spec,
            base_map,
            vision_map,
            teachers,
        }
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    pub fn teachers(&self) -> &[TeacherSource] {
        &self.teachers
    }

    pub fn fused_dim(&self) -> usize {
        self.spec.teacher_dims.iter().sum()
    }

    /// Draw `n` latents from `(seed, latent_stream)` and derive all views.
    pub fn sample(&self, n: usize, latent_stream: u64) -> Result<SynthSample> {
        let mut rng = RngStream::new(self.spec.seed, latent_stream);
        let latents = rng.normal_matrix(n, self.spec.latent_dim);
        self.derive(latents)
    }

    fn derive(&self, latents: Matrix) -> Result<SynthSample> {
        let base = latents.matmul(&self.base_map);
        let teacher_outputs: Vec<Matrix> = self
            .teachers
            .iter()
            .map(|t| synth_teacher_embed(t, &latents))
            .collect::<Result<_>>()?;
        let fused = fuse(&teacher_outputs)?;
        Ok(SynthSample {
            latents,
            base,
            teacher_outputs,
            fused,
        })
    }

    /// Training data for stages 1-3.
    pub fn text_data(&self, n: usize) -> Result<TextTrainData> {
        let sample = self.sample(n, streams::SYNTH_LATENTS)?;
        Ok(TextTrainData {
            base: sample.base,
            teacher: sample.fused,
        })
    }

    /// Held-out evaluation data drawn from a disjoint latent stream.
    pub fn eval_data(&self, n: usize) -> Result<SynthSample> {
        self.sample(n, streams::SYNTH_EVAL_LATENTS)
    }

    /// (image tokens, caption base features) pairs for stage 4.
    pub fn vision_data(&self, n: usize) -> Result<VisionTrainData> {
        let vspec = self
            .spec
            .vision
            .clone()
            .unwrap_or_default();
        let vision_map = self.vision_map.as_ref().expect("vision spec present");
        let sample = self.sample(n, streams::SYNTH_LATENTS)?;
        let mut noise_rng = RngStream::new(self.spec.seed, streams::SYNTH_VISION_NOISE);
        let mut images = Vec::with_capacity(n);
        for i in 0..n {
            let latent_row = Matrix::from_vec(1, self.spec.latent_dim, sample.latents.row(i).to_vec());
            let projected = latent_row.matmul(vision_map);
            let mut tokens = Matrix::zeros(vspec.tokens_per_image, vspec.vision_dim);
            for t in 0..vspec.tokens_per_image {
                for (dst, &src) in tokens.row_mut(t).iter_mut().zip(projected.row(0)) {
                    *dst = src + vspec.token_noise * noise_rng.normal();
                }
            }
            images.push(tokens);
        }
        Ok(VisionTrainData {
            images,
            captions: sample.base,
        })
    }

    pub fn stage_data(&self, stage: crate::model::Stage, n: usize) -> Result<StageData> {
        match stage {
            crate::model::Stage::Four => Ok(StageData::Vision(self.vision_data(n)?)),
            _ => Ok(StageData::Text(self.text_data(n)?)),
        }
    }

    /// Retrieval fixture: every query is a noisy copy of its single
    /// relevant document's latent. Returns (query base, doc base, qrels).
    pub fn retrieval_fixture(&self, n_docs: usize, noise: f64) -> Result<(Matrix, Matrix, Vec<usize>)> {
        let docs = self.sample(n_docs, streams::SYNTH_EVAL_LATENTS)?;
        let mut rng = RngStream::new(self.spec.seed, streams::SYNTH_QUERY_NOISE);
        let mut q_latents = docs.latents.clone();
        for v in q_latents.data_mut() {
            *v += noise * rng.normal();
        }
        let q_base = q_latents.matmul(&self.base_map);
        let qrels = (0..n_docs).collect();
        Ok((q_base, docs.base, qrels))
    }
}
