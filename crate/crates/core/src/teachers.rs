//! Teacher embedding sources and multi-teacher fusion.
//!
//! A teacher is either a file of precomputed embeddings or a frozen random
//! linear map of a shared latent (a desk-scale stand-in for a large frozen
//! encoder; two synthetic teachers of the same latent are correlated but
//! different, like two real models reading the same text).
//!
//! Fusion normalizes each teacher's block, concatenates, and normalizes
//! again, so with k teachers every block lands at norm 1/sqrt(k) and each
//! teacher carries equal weight in fused dot products.

use std::path::{Path, PathBuf};

use crate::datakit::embfile;
use crate::error::{Error, Result};
use crate::numcore::matrix::{normalize_rows, Matrix};
use crate::numcore::rng::{streams, RngStream};

/// Where a teacher's vectors come from.
#[derive(Debug, Clone)]
pub enum TeacherKind {
    /// Embeddings stored in an `EMB1` file keyed by record id.
    FileBacked { path: PathBuf },
    /// A frozen random linear map of a shared latent space.
    SyntheticLinear { weight: Matrix, seed: u64 },
}

/// One teacher model's output description.
#[derive(Debug, Clone)]
pub struct TeacherSource {
    pub id: String,
    pub dim: usize,
    pub kind: TeacherKind,
}

impl TeacherSource {
    pub fn file_backed(id: impl Into<String>, dim: usize, path: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            dim,
            kind: TeacherKind::FileBacked { path: path.into() },
        }
    }

    /// A synthetic teacher whose weight matrix (latent_dim x dim) is drawn
    /// once from `(seed, TEACHER_WEIGHTS_BASE + index)` and then frozen.
    pub fn synthetic_linear(
        id: impl Into<String>,
        latent_dim: usize,
        dim: usize,
        seed: u64,
        index: u64,
    ) -> Self {
        let mut rng = RngStream::new(seed, streams::TEACHER_WEIGHTS_BASE + index);
        let weight = rng.normal_matrix(latent_dim, dim);
        Self {
            id: id.into(),
            dim,
            kind: TeacherKind::SyntheticLinear { weight, seed },
        }
    }

    pub fn latent_dim(&self) -> Option<usize> {
        match &self.kind {
            TeacherKind::SyntheticLinear { weight, .. } => Some(weight.rows()),
            TeacherKind::FileBacked { .. } => None,
        }
    }
}

/// Normalized per-teacher blocks concatenated and renormalized.
#[derive(Debug, Clone)]
pub struct FusedTeacherTarget {
    pub block_dims: Vec<usize>,
    pub matrix: Matrix,
}

impl FusedTeacherTarget {
    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }
}

/// Fuse one matrix per teacher (same batch) into the distillation target.
pub fn fuse(teacher_outputs: &[Matrix]) -> Result<FusedTeacherTarget> {
    assert!(!teacher_outputs.is_empty(), "fuse needs at least one teacher");
    let batch = teacher_outputs[0].rows();
    for t in teacher_outputs {
        if t.rows() != batch {
            return Err(Error::BatchMismatch(batch, t.rows()));
        }
    }
    let block_dims: Vec<usize> = teacher_outputs.iter().map(Matrix::cols).collect();
    let total: usize = block_dims.iter().sum();

    let normalized: Vec<Matrix> = teacher_outputs
        .iter()
        .map(normalize_rows)
        .collect::<Result<_>>()?;

    let mut data = Vec::with_capacity(batch * total);
    for r in 0..batch {
        for block in &normalized {
            data.extend_from_slice(block.row(r));
        }
    }
    let matrix = normalize_rows(&Matrix::from_vec(batch, total, data))?;
    Ok(FusedTeacherTarget { block_dims, matrix })
}

/// Embed latent rows through a synthetic teacher: `normalize(latents * W)`.
pub fn synth_teacher_embed(source: &TeacherSource, latents: &Matrix) -> Result<Matrix> {
    let TeacherKind::SyntheticLinear { weight, .. } = &source.kind else {
        return Err(Error::Config(format!(
            "teacher {} is not synthetic-linear",
            source.id
        )));
    };
    if latents.cols() != weight.rows() {
        return Err(Error::DimMismatch {
            context: "synth_teacher_embed latents",
            expected: weight.rows(),
            got: latents.cols(),
        });
    }
    normalize_rows(&latents.matmul(weight))
}

/// Load teacher vectors for `keys` (in that order) from an `EMB1` file,
/// renormalizing every row on load.
pub fn load_teacher_embeddings(path: &Path, keys: &[&str]) -> Result<Matrix> {
    let (ids, matrix) = embfile::read_embeddings(path)?;
    let index: std::collections::HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut rows = Vec::with_capacity(keys.len());
    for &key in keys {
        let &row = index
            .get(key)
            .ok_or_else(|| Error::MissingKey(key.to_string()))?;
        rows.push(row);
    }
    let selected = matrix.select_rows(&rows);
    if selected.rows() == 0 {
        return Ok(selected);
    }
    normalize_rows(&selected)
}
