#![allow(clippy::needless_range_loop)]

//! distillforge: a desk-scale, fully verifiable training engine for
//! multi-stage, multi-teacher embedding distillation.
//!
//! The engine fuses several frozen teacher embedding models into a single
//! target (per-teacher normalize, concatenate, normalize again), trains a
//! small student against that target with three losses of widening scope
//! (pointwise cosine, pairwise-similarity MSE, and a margin hinge over the
//! teacher's ordering of text pairs), and reduces the output dimension
//! with independent projection heads. A four-stage freeze/train schedule
//! moves from head-only fitting to full-model training and finally to
//! aligning a vision path against the model's own caption vectors.
//!
//! Organization:
//!
//! * [`numcore`] - matrices, deterministic RNG streams, finite differences
//! * [`teachers`] - teacher sources and target fusion
//! * [`losses`] - the three distillation losses with analytic gradients
//! * [`model`] - the student network and parameter-group freezing
//! * [`pipeline`] - AdamW, stage orchestration, checkpoints, metrics
//! * [`datakit`] - corpus transforms, batching, file formats
//! * [`evalkit`] - alignment/retrieval metrics and the dimension sweep
//! * [`synth`] - the synthetic shared-latent world for desk-scale runs
//! * [`config`] / [`cli`] - run configuration and the command-line driver

pub mod cli;
pub mod config;
pub mod datakit;
pub mod driver;
pub mod error;
pub mod evalkit;
pub mod gradsuite;
pub mod losses;
pub mod model;
pub mod numcore;
pub mod pipeline;
pub mod synth;
pub mod teachers;

pub use error::{Error, Result};
