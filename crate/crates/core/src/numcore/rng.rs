//! Deterministic random streams.
//!
//! Every random draw in the crate goes through [`RngStream`], a ChaCha8
//! generator addressed by `(seed, stream)`. Identical addresses produce
//! identical draw sequences on every platform, and the word position can be
//! captured and restored for bitwise checkpoint resume. Distinct subsystems
//! draw from distinct stream ids (see [`streams`]) so reordering one
//! consumer never perturbs another.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;

/// Stream-id registry. Offsets keep the address space collision-free.
pub mod streams {
    /// Model parameter init; add the parameter-group index.
    pub const MODEL_INIT_BASE: u64 = 0x100;
    /// Synthetic teacher weight matrices; add the teacher index.
    pub const TEACHER_WEIGHTS_BASE: u64 = 0x200;
    /// Training latents for synthetic data.
    pub const SYNTH_LATENTS: u64 = 0x300;
    /// Latent -> base-feature map.
    pub const SYNTH_BASE_MAP: u64 = 0x301;
    /// Latent -> vision-token map.
    pub const SYNTH_VISION_MAP: u64 = 0x302;
    /// Per-token noise on vision tokens.
    pub const SYNTH_VISION_NOISE: u64 = 0x303;
    /// Held-out eval latents.
    pub const SYNTH_EVAL_LATENTS: u64 = 0x304;
    /// Query perturbations for the retrieval fixture.
    pub const SYNTH_QUERY_NOISE: u64 = 0x305;
    /// Corpus chunk selection + chunk lengths.
    pub const TRANSFORM_CHUNK: u64 = 0x400;
    /// Corpus shuffle selection + permutations.
    pub const TRANSFORM_SHUFFLE: u64 = 0x401;
    /// Gradient-check probe instances.
    pub const GRADCHECK: u64 = 0x500;
    /// Batch permutations; add the epoch number.
    pub const BATCH_BASE: u64 = 0x10_000;
}

/// A seeded, addressable random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Current position in the keystream, for checkpointing.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn set_word_pos(&mut self, pos: u128) {
        self.rng.set_word_pos(pos);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n) via widening multiply. Panics if n == 0.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn int_in(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller. Two uniforms per draw; no cached
    /// spare, so the stream position alone captures generator state.
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.normal());
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.uniform_in(lo, hi));
        }
        Matrix::from_vec(rows, cols, data)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }

    /// A random permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<u32> {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        self.shuffle(&mut perm);
        perm
    }
}

/// A d x d orthogonal matrix drawn from the given stream, built by
/// Gram-Schmidt on normal rows (run twice for numerical tightness).
pub fn random_orthogonal(d: usize, rng: &mut RngStream) -> Matrix {
    assert!(d >= 1, "random_orthogonal needs d >= 1");
    let mut q = Matrix::zeros(d, d);
    for i in 0..d {
        loop {
            let mut row: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            for _pass in 0..2 {
                for prev in 0..i {
                    let proj = super::matrix::dot(&row, q.row(prev));
                    for (v, &p) in row.iter_mut().zip(q.row(prev)) {
                        *v -= proj * p;
                    }
                }
            }
            let n = super::matrix::norm(&row);
            if n > 1e-8 {
                for v in &mut row {
                    *v /= n;
                }
                q.row_mut(i).copy_from_slice(&row);
                break;
            }
            // Degenerate draw; take a fresh row.
        }
    }
    q
}
