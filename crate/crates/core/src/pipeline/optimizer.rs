//! AdamW over the flattened parameter vector.
//!
//! Bias correction is folded into the step size
//! (`lr_t = lr * sqrt(1 - beta2^t) / (1 - beta1^t)`) with epsilon added to
//! the uncorrected `sqrt(v)`. Weight decay is decoupled and applied before
//! the adaptive update. Parameters outside the mask receive no update, no
//! decay, and no moment changes.

use serde::{Deserialize, Serialize};

use crate::model::{ParamGroupMask, StudentNet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub cfg: AdamWConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(cfg: AdamWConfig, param_count: usize) -> Self {
        Self {
            cfg,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }
}

/// One update over flat parameter/gradient slices restricted to `indices`.
pub fn adamw_step_slice(
    params: &mut [f64],
    grads: &[f64],
    state: &mut OptimizerState,
    lr: f64,
    indices: impl Iterator<Item = usize>,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let c = state.cfg;
    let lr_t = lr * (1.0 - c.beta2.powi(t)).sqrt() / (1.0 - c.beta1.powi(t));
    let decay = 1.0 - lr * c.weight_decay;
    for i in indices {
        let g = grads[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        params[i] *= decay;
        params[i] -= lr_t * state.m[i] / (state.v[i].sqrt() + c.eps);
    }
}

/// One masked AdamW step on a network: flatten, update the spans whose
/// group is trainable, write back. Frozen spans stay bit-identical.
pub fn adamw_step(
    net: &mut StudentNet,
    flat_grads: &[f64],
    state: &mut OptimizerState,
    lr: f64,
    mask: ParamGroupMask,
) {
    let spans = net.group_spans();
    let mut params = net.flatten();
    let indices = spans
        .iter()
        .filter(|(g, _)| mask.contains(*g))
        .flat_map(|(_, r)| r.clone());
    adamw_step_slice(&mut params, flat_grads, state, lr, indices);
    net.set_from_flat(&params);
}
