//! Deterministic batch iteration.
//!
//! Each epoch draws a fresh permutation from `(seed, BATCH_BASE + epoch)`;
//! the final partial batch is always dropped (the pair-based losses need a
//! full batch). Iterator state is `(epoch, pos)` and can be captured and
//! restored for checkpoint resume.

use serde::{Deserialize, Serialize};

use crate::numcore::rng::{streams, RngStream};

#[derive(Debug, Clone)]
pub struct BatchIter {
    n_items: usize,
    batch_size: usize,
    seed: u64,
    repeat: bool,
    epoch: u64,
    pos: usize,
    perm: Vec<u32>,
}

/// Serializable iterator position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BatchCursor {
    pub epoch: u64,
    pub pos: u64,
}

impl BatchIter {
    pub fn new(n_items: usize, batch_size: usize, seed: u64, repeat: bool) -> Self {
        assert!(batch_size >= 1, "batch_size must be >= 1");
        let mut it = Self {
            n_items,
            batch_size,
            seed,
            repeat,
            epoch: 0,
            pos: 0,
            perm: Vec::new(),
        };
        it.reshuffle();
        it
    }

    fn reshuffle(&mut self) {
        let mut rng = RngStream::new(self.seed, streams::BATCH_BASE + self.epoch);
        self.perm = rng.permutation(self.n_items);
    }

    pub fn cursor(&self) -> BatchCursor {
        BatchCursor {
            epoch: self.epoch,
            pos: self.pos as u64,
        }
    }

    pub fn restore(&mut self, cursor: BatchCursor) {
        self.epoch = cursor.epoch;
        self.pos = cursor.pos as usize;
        self.reshuffle();
    }

    fn batches_per_epoch(&self) -> usize {
        self.n_items / self.batch_size
    }
}

impl Iterator for BatchIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.batches_per_epoch() == 0 {
            return None;
        }
        if self.pos + self.batch_size > self.n_items {
            if !self.repeat {
                return None;
            }
            self.epoch += 1;
            self.pos = 0;
            self.reshuffle();
        }
        let batch = self.perm[self.pos..self.pos + self.batch_size]
            .iter()
            .map(|&i| i as usize)
            .collect();
        self.pos += self.batch_size;
        Some(batch)
    }
}
