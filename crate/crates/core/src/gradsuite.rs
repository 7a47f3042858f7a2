//! The gradient verification suite behind `distillforge gradcheck`.
//!
//! Runs every analytic gradient in the crate against central finite
//! differences over randomized instances and reports the worst relative
//! error per component. A sign-flip hook lets tests confirm the detector
//! actually fires.

use crate::error::Result;
use crate::losses::{
    combined_loss, cosine_loss, pair_sims, resim_loss, sim_loss, ActiveLosses, CosineReduction,
    LossWeights,
};
use crate::model::{Head, HeadOutputs, HeadSet, NetConfig, ParamGroupMask, StudentNet};
use crate::numcore::gradcheck::{finite_diff_grad, max_rel_err};
use crate::numcore::matrix::{normalize_rows, Matrix};
use crate::numcore::rng::{streams, RngStream};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const MODEL_FD_STEP: f64 = 1e-5;
const REL_FLOOR: f64 = 1e-6;
/// Hinge arguments closer to zero than this make the subgradient
/// one-sided; such instances are redrawn.
const KINK_TOLERANCE: f64 = 1e-6;

type LossFn = Box<dyn Fn(&[f64]) -> f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Cosine,
    Sim,
    Resim,
    Combined,
    Model,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Cosine,
        Component::Sim,
        Component::Resim,
        Component::Combined,
        Component::Model,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Cosine => "cosine",
            Component::Sim => "sim",
            Component::Resim => "resim",
            Component::Combined => "combined",
            Component::Model => "model",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct ComponentResult {
    pub component: Component,
    pub max_rel_err: f64,
    pub instances: usize,
}

/// Run `trials` random instances per component. `flip_sign` negates the
/// analytic gradient of one component before comparison.
pub fn run_suite(
    trials: usize,
    seed: u64,
    flip_sign: Option<Component>,
) -> Result<Vec<ComponentResult>> {
    let mut results = Vec::new();
    for component in Component::ALL {
        let flip = flip_sign == Some(component);
        let result = match component {
            Component::Model => check_model(trials, seed, flip)?,
            _ => check_loss(component, trials, seed, flip)?,
        };
        results.push(result);
    }
    Ok(results)
}

fn flip(analytic: &mut [f64], yes: bool) {
    if yes {
        for v in analytic {
            *v = -*v;
        }
    }
}

fn check_loss(
    component: Component,
    trials: usize,
    seed: u64,
    flip_sign: bool,
) -> Result<ComponentResult> {
    let mut rng = RngStream::new(seed, streams::GRADCHECK + component as u64);
    let weights = LossWeights::reference();
    let mut worst = 0.0f64;
    let mut instances = 0;
    let mut attempts = 0;
    while instances < trials && attempts < trials * 20 {
        attempts += 1;
        let m = rng.int_in(2, 6) as usize;
        let d = rng.int_in(3, 8) as usize;
        let s = normalize_rows(&rng.normal_matrix(m, d))?;
        let t = normalize_rows(&rng.normal_matrix(m, d))?;
        let needs_kink_guard = matches!(component, Component::Resim | Component::Combined);
        if needs_kink_guard && near_kink(&s, &t, weights.margin) {
            continue;
        }
        let (mut analytic, f): (Vec<f64>, LossFn) = match component {
            Component::Cosine => {
                let (_, g) = cosine_loss(&s, &t)?;
                let t = t.clone();
                (
                    g.data().to_vec(),
                    Box::new(move |x| {
                        cosine_loss(&Matrix::from_vec(m, d, x.to_vec()), &t).unwrap().0
                    }),
                )
            }
            Component::Sim => {
                let (_, g) = sim_loss(&s, &t)?;
                let t = t.clone();
                (
                    g.data().to_vec(),
                    Box::new(move |x| {
                        sim_loss(&Matrix::from_vec(m, d, x.to_vec()), &t).unwrap().0
                    }),
                )
            }
            Component::Resim => {
                let (_, g, _) = resim_loss(&s, &t, weights.margin)?;
                let t = t.clone();
                (
                    g.data().to_vec(),
                    Box::new(move |x| {
                        resim_loss(&Matrix::from_vec(m, d, x.to_vec()), &t, weights.margin)
                            .unwrap()
                            .0
                    }),
                )
            }
            Component::Combined => {
                let (_, g) =
                    combined_loss(&s, &t, &weights, ActiveLosses::ALL, CosineReduction::Sum)?;
                let t = t.clone();
                (
                    g.data().to_vec(),
                    Box::new(move |x| {
                        combined_loss(
                            &Matrix::from_vec(m, d, x.to_vec()),
                            &t,
                            &weights,
                            ActiveLosses::ALL,
                            CosineReduction::Sum,
                        )
                        .unwrap()
                        .0
                        .total
                    }),
                )
            }
            Component::Model => unreachable!(),
        };
        flip(&mut analytic, flip_sign);
        let numeric = finite_diff_grad(|x| f(x), s.data(), FD_STEP)?;
        worst = worst.max(max_rel_err(&analytic, &numeric, REL_FLOOR));
        instances += 1;
    }
    Ok(ComponentResult {
        component,
        max_rel_err: worst,
        instances,
    })
}

fn near_kink(s: &Matrix, t: &Matrix, margin: f64) -> bool {
    let s_sims = pair_sims(s);
    let t_sims = pair_sims(t);
    for a in 0..s_sims.len() {
        for b in a + 1..s_sims.len() {
            if t_sims[a] == t_sims[b] {
                continue;
            }
            let (w, l) = if t_sims[a] > t_sims[b] { (a, b) } else { (b, a) };
            if (s_sims[l] - s_sims[w] + margin).abs() < KINK_TOLERANCE {
                return true;
            }
        }
    }
    false
}

/// Full-network check: forward through tail, heads, and normalization,
/// loss against fixed targets, analytic backward vs finite differences on
/// every parameter.
fn check_model(trials: usize, seed: u64, flip_sign: bool) -> Result<ComponentResult> {
    let mut worst = 0.0f64;
    let mut instances = 0;
    for trial in 0..trials {
        let cfg = NetConfig {
            base_dim: 3,
            hidden_dim: 4,
            tail_layers: 3,
            head_dims: [5, 4, 3, 2],
            vision_dim: 6,
            seed: seed.wrapping_add(trial as u64),
        };
        let net = StudentNet::new(cfg)?;
        let mut rng = RngStream::new(seed, streams::GRADCHECK + 100 + trial as u64);
        let base = rng.normal_matrix(3, 3);
        let targets = [
            normalize_rows(&rng.normal_matrix(3, 5))?,
            normalize_rows(&rng.normal_matrix(3, 4))?,
            normalize_rows(&rng.normal_matrix(3, 3))?,
            normalize_rows(&rng.normal_matrix(3, 2))?,
        ];
        let weights = LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            margin: 0.015,
        };

        let loss_of = |probe: &StudentNet| -> f64 {
            let out = probe.forward_text(&base, HeadSet::all()).unwrap();
            let mut total = 0.0;
            for (h, s) in out.iter() {
                let active = if h == Head::Fc1 {
                    ActiveLosses::ALL
                } else {
                    ActiveLosses::SIM_RESIM
                };
                total += combined_loss(s, &targets[h.index()], &weights, active, CosineReduction::Sum)
                    .unwrap()
                    .0
                    .total;
            }
            total
        };

        let (out, cache) = net.forward_text_cached(&base, HeadSet::all())?;
        let mut head_grads = HeadOutputs::default();
        for (h, s) in out.iter() {
            let active = if h == Head::Fc1 {
                ActiveLosses::ALL
            } else {
                ActiveLosses::SIM_RESIM
            };
            let (_, g) =
                combined_loss(s, &targets[h.index()], &weights, active, CosineReduction::Sum)?;
            head_grads.insert(h, g);
        }
        let grads = net.backward_text(&cache, &head_grads, ParamGroupMask::all())?;
        let mut analytic = grads.flatten();
        flip(&mut analytic, flip_sign);

        let flat = net.flatten();
        let numeric = finite_diff_grad(
            |p| {
                let mut probe = net.clone();
                probe.set_from_flat(p);
                loss_of(&probe)
            },
            &flat,
            MODEL_FD_STEP,
        )?;
        worst = worst.max(max_rel_err(&analytic, &numeric, REL_FLOOR));
        instances += 1;
    }
    Ok(ComponentResult {
        component: Component::Model,
        max_rel_err: worst,
        instances,
    })
}
