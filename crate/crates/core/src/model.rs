//! The desk-scale student network.
//!
//! Frozen base features enter a trainable tail of affine+tanh layers, then
//! four independent affine heads project the hidden state to the output
//! spaces: one full-width head matched to the fused teacher dimension and
//! three reduction heads. Every head output is row-normalized. Images take
//! a separate path: per-token affine projection to the base dimension,
//! mean pooling to one row per image, then the same tail and heads.
//!
//! Every parameter belongs to exactly one named group so stages can freeze
//! precisely. tanh is used (rather than a kinked activation) to keep
//! finite-difference gradient checks clean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, normalize_rows, Matrix};
use crate::numcore::rng::{streams, RngStream};

/// Output heads, widest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Fc1,
    Fc2,
    Fc3,
    Fc4,
}

impl Head {
    pub const ALL: [Head; 4] = [Head::Fc1, Head::Fc2, Head::Fc3, Head::Fc4];

    pub fn index(self) -> usize {
        match self {
            Head::Fc1 => 0,
            Head::Fc2 => 1,
            Head::Fc3 => 2,
            Head::Fc4 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Fc1 => "fc1",
            Head::Fc2 => "fc2",
            Head::Fc3 => "fc3",
            Head::Fc4 => "fc4",
        }
    }

    pub fn group(self) -> ParamGroup {
        match self {
            Head::Fc1 => ParamGroup::Fc1,
            Head::Fc2 => ParamGroup::Fc2,
            Head::Fc3 => ParamGroup::Fc3,
            Head::Fc4 => ParamGroup::Fc4,
        }
    }
}

/// A set of heads, iterated in fixed `Fc1..Fc4` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HeadSet(u8);

impl HeadSet {
    pub const EMPTY: Self = Self(0);

    pub fn all() -> Self {
        Self(0b1111)
    }

    pub fn of(heads: &[Head]) -> Self {
        let mut s = Self::EMPTY;
        for &h in heads {
            s = s.with(h);
        }
        s
    }

    #[must_use]
    pub fn with(self, h: Head) -> Self {
        Self(self.0 | (1 << h.index()))
    }

    pub fn contains(self, h: Head) -> bool {
        self.0 & (1 << h.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Head> {
        Head::ALL.into_iter().filter(move |h| self.contains(*h))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

/// Named parameter groups; each parameter belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    Fc1,
    Fc2,
    Fc3,
    Fc4,
    TailLast3,
    TailRest,
    Vision,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::Fc1,
        ParamGroup::Fc2,
        ParamGroup::Fc3,
        ParamGroup::Fc4,
        ParamGroup::TailLast3,
        ParamGroup::TailRest,
        ParamGroup::Vision,
    ];

    pub fn index(self) -> usize {
        match self {
            ParamGroup::Fc1 => 0,
            ParamGroup::Fc2 => 1,
            ParamGroup::Fc3 => 2,
            ParamGroup::Fc4 => 3,
            ParamGroup::TailLast3 => 4,
            ParamGroup::TailRest => 5,
            ParamGroup::Vision => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Fc1 => "fc1",
            ParamGroup::Fc2 => "fc2",
            ParamGroup::Fc3 => "fc3",
            ParamGroup::Fc4 => "fc4",
            ParamGroup::TailLast3 => "tail_last3",
            ParamGroup::TailRest => "tail_rest",
            ParamGroup::Vision => "vision",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == name)
    }
}

/// The set of trainable groups for a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParamGroupMask(u8);

impl ParamGroupMask {
    pub const EMPTY: Self = Self(0);

    pub fn of(groups: &[ParamGroup]) -> Self {
        let mut mask = 0u8;
        for &g in groups {
            mask |= 1 << g.index();
        }
        Self(mask)
    }

    pub fn all() -> Self {
        Self::of(&ParamGroup::ALL)
    }

    pub fn contains(self, g: ParamGroup) -> bool {
        self.0 & (1 << g.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = ParamGroup> {
        ParamGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }
}

/// Training stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    One,
    Two,
    Three,
    Four,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::One, Stage::Two, Stage::Three, Stage::Four];

    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
            Stage::Three => 3,
            Stage::Four => 4,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            3 => Ok(Stage::Three),
            4 => Ok(Stage::Four),
            other => Err(Error::Config(format!("no such stage: {other}"))),
        }
    }
}

/// The trainable-group schedule: stage 1 trains only the full-width head;
/// stage 2 adds the last tail layers; stage 3 trains every text group;
/// stage 4 trains only the vision projection.
pub fn stage_mask(stage: Stage) -> ParamGroupMask {
    match stage {
        Stage::One => ParamGroupMask::of(&[ParamGroup::Fc1]),
        Stage::Two => ParamGroupMask::of(&[ParamGroup::Fc1, ParamGroup::TailLast3]),
        Stage::Three => ParamGroupMask::of(&[
            ParamGroup::Fc1,
            ParamGroup::Fc2,
            ParamGroup::Fc3,
            ParamGroup::Fc4,
            ParamGroup::TailLast3,
            ParamGroup::TailRest,
        ]),
        Stage::Four => ParamGroupMask::of(&[ParamGroup::Vision]),
    }
}

/// An affine layer `y = x W + b` with W of shape (in, out).
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Affine {
    fn init(in_dim: usize, out_dim: usize, rng: &mut RngStream) -> Self {
        // Centered uniform with scale 1/sqrt(fan_in); biases zero. Keeps
        // initial head outputs well away from the zero-row guard.
        let scale = 1.0 / (in_dim as f64).sqrt();
        Self {
            w: rng.uniform_matrix(in_dim, out_dim, -scale, scale),
            b: vec![0.0; out_dim],
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: Matrix::zeros(self.w.rows(), self.w.cols()),
            b: vec![0.0; self.b.len()],
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = x.matmul(&self.w);
        for r in 0..out.rows() {
            for (v, &b) in out.row_mut(r).iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        out
    }
}

/// Network shape and init seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub base_dim: usize,
    pub hidden_dim: usize,
    /// Number of affine+tanh tail layers (0 means the tail is a pass-through).
    pub tail_layers: usize,
    /// Output dims for fc1..fc4. fc1 should match the fused teacher dim.
    pub head_dims: [usize; 4],
    pub vision_dim: usize,
    pub seed: u64,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_dim == 0 || self.hidden_dim == 0 || self.vision_dim == 0 {
            return Err(Error::Config("model dims must be positive".into()));
        }
        if self.head_dims.contains(&0) {
            return Err(Error::Config("head dims must be positive".into()));
        }
        if self.tail_layers == 0 && self.base_dim != self.hidden_dim {
            return Err(Error::Config(
                "tail_layers = 0 requires base_dim == hidden_dim".into(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self, head: Head) -> usize {
        self.head_dims[head.index()]
    }
}

/// Student network state.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentNet {
    cfg: NetConfig,
    tail: Vec<Affine>,
    heads: [Affine; 4],
    vision: Affine,
}

/// Gradients shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub tail: Vec<Affine>,
    pub heads: [Affine; 4],
    pub vision: Affine,
}

/// Cached activations from a text forward pass.
pub struct TextCache {
    /// Input to each tail layer (layer_inputs[0] = base features).
    layer_inputs: Vec<Matrix>,
    /// Post-tanh output of each tail layer.
    layer_outputs: Vec<Matrix>,
    /// Final hidden state (same as last layer output, or base features).
    hidden: Matrix,
    /// Per requested head: normalized output and pre-normalization norms.
    head_units: [Option<Matrix>; 4],
    head_norms: [Option<Vec<f64>>; 4],
}

/// Cached activations from a vision forward pass: the per-image token
/// matrices plus the shared text cache over pooled rows.
pub struct VisionCache {
    tokens: Vec<Matrix>,
    text: TextCache,
}

/// Per-head output matrices, iterated in fixed head order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeadOutputs {
    mats: [Option<Matrix>; 4],
}

impl HeadOutputs {
    pub fn get(&self, head: Head) -> Option<&Matrix> {
        self.mats[head.index()].as_ref()
    }

    pub fn insert(&mut self, head: Head, m: Matrix) {
        self.mats[head.index()] = Some(m);
    }

    pub fn take(&mut self, head: Head) -> Option<Matrix> {
        self.mats[head.index()].take()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Head, &Matrix)> {
        Head::ALL
            .into_iter()
            .filter_map(move |h| self.mats[h.index()].as_ref().map(|m| (h, m)))
    }
}

impl StudentNet {
    /// Initialize from config; each parameter group draws from its own
    /// stream of `(seed, MODEL_INIT_BASE + group index)`.
    pub fn new(cfg: NetConfig) -> Result<Self> {
        cfg.validate()?;
        let group_rng = |g: ParamGroup| {
            RngStream::new(cfg.seed, streams::MODEL_INIT_BASE + g.index() as u64)
        };

        let last3_start = cfg.tail_layers.saturating_sub(3);
        let mut rest_rng = group_rng(ParamGroup::TailRest);
        let mut last3_rng = group_rng(ParamGroup::TailLast3);
        let mut tail = Vec::with_capacity(cfg.tail_layers);
        for i in 0..cfg.tail_layers {
            let in_dim = if i == 0 { cfg.base_dim } else { cfg.hidden_dim };
            let rng = if i >= last3_start {
                &mut last3_rng
            } else {
                &mut rest_rng
            };
            tail.push(Affine::init(in_dim, cfg.hidden_dim, rng));
        }

        let heads = [
            Affine::init(cfg.hidden_dim, cfg.head_dims[0], &mut group_rng(ParamGroup::Fc1)),
            Affine::init(cfg.hidden_dim, cfg.head_dims[1], &mut group_rng(ParamGroup::Fc2)),
            Affine::init(cfg.hidden_dim, cfg.head_dims[2], &mut group_rng(ParamGroup::Fc3)),
            Affine::init(cfg.hidden_dim, cfg.head_dims[3], &mut group_rng(ParamGroup::Fc4)),
        ];
        let vision = Affine::init(
            cfg.vision_dim,
            cfg.base_dim,
            &mut group_rng(ParamGroup::Vision),
        );

        Ok(Self {
            cfg,
            tail,
            heads,
            vision,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn head(&self, head: Head) -> &Affine {
        &self.heads[head.index()]
    }

    pub fn head_mut(&mut self, head: Head) -> &mut Affine {
        &mut self.heads[head.index()]
    }

    pub fn tail_mut(&mut self) -> &mut Vec<Affine> {
        &mut self.tail
    }

    pub fn vision_mut(&mut self) -> &mut Affine {
        &mut self.vision
    }

    fn tail_group(&self, layer: usize) -> ParamGroup {
        if layer >= self.tail.len().saturating_sub(3) {
            ParamGroup::TailLast3
        } else {
            ParamGroup::TailRest
        }
    }

    /// Text path: tail then the requested heads, each row-normalized.
    pub fn forward_text(&self, base: &Matrix, heads: HeadSet) -> Result<HeadOutputs> {
        Ok(self.forward_text_cached(base, heads)?.0)
    }

    pub fn forward_text_cached(
        &self,
        base: &Matrix,
        heads: HeadSet,
    ) -> Result<(HeadOutputs, TextCache)> {
        if base.cols() != self.cfg.base_dim {
            return Err(Error::DimMismatch {
                context: "forward_text base features",
                expected: self.cfg.base_dim,
                got: base.cols(),
            });
        }
        let mut layer_inputs = Vec::with_capacity(self.tail.len());
        let mut layer_outputs = Vec::with_capacity(self.tail.len());
        let mut h = base.clone();
        for layer in &self.tail {
            layer_inputs.push(h.clone());
            let mut a = layer.forward(&h);
            for v in a.data_mut() {
                *v = v.tanh();
            }
            layer_outputs.push(a.clone());
            h = a;
        }

        let mut outputs = HeadOutputs::default();
        let mut head_units: [Option<Matrix>; 4] = Default::default();
        let mut head_norms: [Option<Vec<f64>>; 4] = Default::default();
        for head in heads.iter() {
            let z = self.heads[head.index()].forward(&h);
            let mut norms = Vec::with_capacity(z.rows());
            for r in 0..z.rows() {
                let n = crate::numcore::matrix::norm(z.row(r));
                if n < crate::numcore::matrix::ZERO_NORM_THRESHOLD {
                    return Err(Error::ZeroNormRow(r));
                }
                norms.push(n);
            }
            let unit = normalize_rows(&z)?;
            outputs.insert(head, unit.clone());
            head_units[head.index()] = Some(unit);
            head_norms[head.index()] = Some(norms);
        }

        Ok((
            outputs,
            TextCache {
                layer_inputs,
                layer_outputs,
                hidden: h,
                head_units,
                head_norms,
            },
        ))
    }

    /// Vision path: project every token to the base dimension, mean-pool to
    /// one row per image, then run the text path.
    pub fn forward_vision(&self, images: &[Matrix], heads: HeadSet) -> Result<HeadOutputs> {
        Ok(self.forward_vision_cached(images, heads)?.0)
    }

    pub fn forward_vision_cached(
        &self,
        images: &[Matrix],
        heads: HeadSet,
    ) -> Result<(HeadOutputs, VisionCache)> {
        let mut pooled = Matrix::zeros(images.len(), self.cfg.base_dim);
        for (i, tokens) in images.iter().enumerate() {
            if tokens.rows() == 0 {
                return Err(Error::EmptyTokenSequence(i));
            }
            if tokens.cols() != self.cfg.vision_dim {
                return Err(Error::DimMismatch {
                    context: "forward_vision tokens",
                    expected: self.cfg.vision_dim,
                    got: tokens.cols(),
                });
            }
            let projected = self.vision.forward(tokens);
            let mean = projected.mean_row();
            pooled.row_mut(i).copy_from_slice(mean.row(0));
        }
        let (outputs, text) = self.forward_text_cached(&pooled, heads)?;
        Ok((
            outputs,
            VisionCache {
                tokens: images.to_vec(),
                text,
            },
        ))
    }

    /// Backpropagate per-head gradients (with respect to the normalized
    /// head outputs) through normalization, heads, and tail. Gradients for
    /// groups outside `mask` are reported as exact zeros.
    pub fn backward_text(
        &self,
        cache: &TextCache,
        head_grads: &HeadOutputs,
        mask: ParamGroupMask,
    ) -> Result<ParamGrads> {
        let (mut grads, _d_base) = self.backward_text_inner(cache, head_grads)?;
        self.apply_mask(&mut grads, mask);
        Ok(grads)
    }

    /// Like [`StudentNet::backward_text`], continuing through the pooling
    /// and token projection.
    pub fn backward_vision(
        &self,
        cache: &VisionCache,
        head_grads: &HeadOutputs,
        mask: ParamGroupMask,
    ) -> Result<ParamGrads> {
        let (mut grads, d_base) = self.backward_text_inner(&cache.text, head_grads)?;
        for (i, tokens) in cache.tokens.iter().enumerate() {
            let n = tokens.rows();
            // d pooled / d projected-token = 1/n for each token row.
            let scale = 1.0 / n as f64;
            let mut d_proj = Matrix::zeros(n, self.cfg.base_dim);
            for r in 0..n {
                for (dst, &g) in d_proj.row_mut(r).iter_mut().zip(d_base.row(i)) {
                    *dst = g * scale;
                }
            }
            grads.vision.w.add_assign(&tokens.matmul_at(&d_proj));
            for (b, s) in grads.vision.b.iter_mut().zip(d_proj.col_sums()) {
                *b += s;
            }
        }
        self.apply_mask(&mut grads, mask);
        Ok(grads)
    }

    /// Shared text backward; returns unmasked grads plus the gradient with
    /// respect to the base features.
    fn backward_text_inner(
        &self,
        cache: &TextCache,
        head_grads: &HeadOutputs,
    ) -> Result<(ParamGrads, Matrix)> {
        let hidden = &cache.hidden;
        let m = hidden.rows();
        let mut grads = self.zero_grads();
        let mut d_hidden = Matrix::zeros(m, hidden.cols());

        for (head, g_out) in head_grads.iter() {
            let unit = cache.head_units[head.index()].as_ref().ok_or_else(|| {
                Error::Config(format!("gradient for head {} not in forward set", head.name()))
            })?;
            let norms = cache.head_norms[head.index()].as_ref().expect("norms cached");
            if g_out.shape() != unit.shape() {
                return Err(Error::shape("backward head grad", g_out.shape(), unit.shape()));
            }
            // Through row normalization: dz = (g - (g . u) u) / |z|.
            let mut d_z = Matrix::zeros(m, unit.cols());
            for r in 0..m {
                let g = g_out.row(r);
                let u = unit.row(r);
                let gu = dot(g, u);
                let inv = 1.0 / norms[r];
                for (dz, (&gv, &uv)) in d_z.row_mut(r).iter_mut().zip(g.iter().zip(u)) {
                    *dz = (gv - gu * uv) * inv;
                }
            }
            let layer = &self.heads[head.index()];
            grads.heads[head.index()].w.add_assign(&hidden.matmul_at(&d_z));
            for (b, s) in grads.heads[head.index()].b.iter_mut().zip(d_z.col_sums()) {
                *b += s;
            }
            d_hidden.add_assign(&d_z.matmul_bt(&layer.w));
        }

        // Tail backward, last layer first. d_hidden enters as dL/d(output).
        let mut d_out = d_hidden;
        for i in (0..self.tail.len()).rev() {
            let out = &cache.layer_outputs[i];
            let input = &cache.layer_inputs[i];
            let mut d_a = d_out.clone();
            for (da, &o) in d_a.data_mut().iter_mut().zip(out.data()) {
                *da *= 1.0 - o * o;
            }
            grads.tail[i].w.add_assign(&input.matmul_at(&d_a));
            for (b, s) in grads.tail[i].b.iter_mut().zip(d_a.col_sums()) {
                *b += s;
            }
            d_out = d_a.matmul_bt(&self.tail[i].w);
        }

        Ok((grads, d_out))
    }

    pub fn zero_grads(&self) -> ParamGrads {
        ParamGrads {
            tail: self.tail.iter().map(Affine::zeros_like).collect(),
            heads: [
                self.heads[0].zeros_like(),
                self.heads[1].zeros_like(),
                self.heads[2].zeros_like(),
                self.heads[3].zeros_like(),
            ],
            vision: self.vision.zeros_like(),
        }
    }

    fn apply_mask(&self, grads: &mut ParamGrads, mask: ParamGroupMask) {
        for i in 0..grads.tail.len() {
            if !mask.contains(self.tail_group(i)) {
                zero_affine(&mut grads.tail[i]);
            }
        }
        for head in Head::ALL {
            if !mask.contains(head.group()) {
                zero_affine(&mut grads.heads[head.index()]);
            }
        }
        if !mask.contains(ParamGroup::Vision) {
            zero_affine(&mut grads.vision);
        }
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(|_, w, b| n += w.data().len() + b.len());
        n
    }

    /// Visit parameters in the canonical flatten order: tail layers in
    /// order (w then b), heads fc1..fc4, vision.
    fn visit_params(&self, mut f: impl FnMut(ParamGroup, &Matrix, &[f64])) {
        for (i, layer) in self.tail.iter().enumerate() {
            f(self.tail_group(i), &layer.w, &layer.b);
        }
        for head in Head::ALL {
            let layer = &self.heads[head.index()];
            f(head.group(), &layer.w, &layer.b);
        }
        f(ParamGroup::Vision, &self.vision.w, &self.vision.b);
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit_params(|_, w, b| {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        });
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut pos = 0;
        let mut layers: Vec<&mut Affine> = Vec::new();
        layers.extend(self.tail.iter_mut());
        layers.extend(self.heads.iter_mut());
        layers.push(&mut self.vision);
        for layer in layers {
            let wn = layer.w.data().len();
            layer.w.data_mut().copy_from_slice(&flat[pos..pos + wn]);
            pos += wn;
            let bn = layer.b.len();
            layer.b.copy_from_slice(&flat[pos..pos + bn]);
            pos += bn;
        }
    }

    /// Contiguous spans of the flattened vector per parameter group, in
    /// flatten order. Spans of the same group may repeat (tail layers).
    pub fn group_spans(&self) -> Vec<(ParamGroup, std::ops::Range<usize>)> {
        let mut spans = Vec::new();
        let mut pos = 0;
        self.visit_params(|g, w, b| {
            let len = w.data().len() + b.len();
            spans.push((g, pos..pos + len));
            pos += len;
        });
        spans
    }
}

impl ParamGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.tail {
            out.extend_from_slice(layer.w.data());
            out.extend_from_slice(&layer.b);
        }
        for layer in &self.heads {
            out.extend_from_slice(layer.w.data());
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(self.vision.w.data());
        out.extend_from_slice(&self.vision.b);
        out
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.tail.iter_mut().zip(&other.tail) {
            a.w.add_assign(&b.w);
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
        for (a, b) in self.heads.iter_mut().zip(&other.heads) {
            a.w.add_assign(&b.w);
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
        self.vision.w.add_assign(&other.vision.w);
        for (x, y) in self.vision.b.iter_mut().zip(&other.vision.b) {
            *x += y;
        }
    }
}

fn zero_affine(a: &mut Affine) {
    for v in a.w.data_mut() {
        *v = 0.0;
    }
    for v in &mut a.b {
        *v = 0.0;
    }
}
