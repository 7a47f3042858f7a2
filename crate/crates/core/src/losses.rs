//! Distillation losses over batches of unit-norm embeddings.
//!
//! Three losses move from a pointwise to a relational signal:
//!
//! * cosine loss - per-text alignment, `sum_x (1 - s_x . t_x)`;
//! * similarity loss - MSE between the student and teacher pairwise
//!   similarity (gram) matrices, so only relative geometry is constrained;
//! * relative similarity loss - a margin hinge over every ordered pair of
//!   text pairs, pushing the student to reproduce the teacher's ranking of
//!   pair similarities.
//!
//! Each returns its value together with the analytic gradient with respect
//! to the (already normalized) student matrix; the normalization Jacobian
//! is composed by the model's backward pass. Accumulation orders are fixed
//! and documented so scalar-loop oracles reproduce values bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, gram, Matrix};

/// Loss mixing weights and the ranking margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub margin: f64,
}

impl LossWeights {
    /// The reference full-scale configuration.
    pub fn reference() -> Self {
        Self {
            lambda1: 10.0,
            lambda2: 200.0,
            lambda3: 20.0,
            margin: 0.015,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.lambda3 < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if self.margin < 0.0 {
            return Err(Error::Config("margin must be non-negative".into()));
        }
        // Cosine-similarity differences live in [-2, 2]; a larger margin
        // keeps every hinge permanently active.
        if self.margin >= 2.0 {
            return Err(Error::Config(format!(
                "margin {} out of range (must be < 2)",
                self.margin
            )));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::reference()
    }
}

/// Which loss components participate for a given head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveLosses {
    pub cosine: bool,
    pub sim: bool,
    pub resim: bool,
}

impl ActiveLosses {
    pub const ALL: Self = Self {
        cosine: true,
        sim: true,
        resim: true,
    };
    pub const SIM_RESIM: Self = Self {
        cosine: false,
        sim: true,
        resim: true,
    };
    pub const NONE: Self = Self {
        cosine: false,
        sim: false,
        resim: false,
    };
}

/// Per-batch component values plus the weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub cosine: f64,
    pub sim: f64,
    pub resim: f64,
    pub total: f64,
    pub active_hinges: u64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        self.cosine.is_finite()
            && self.sim.is_finite()
            && self.resim.is_finite()
            && self.total.is_finite()
    }
}

/// Batch reduction for the cosine loss. The literal form is a sum; the mean
/// variant is exposed for cross-batch-size comparisons and defaults off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CosineReduction {
    #[default]
    Sum,
    Mean,
}

/// Pointwise alignment loss `sum_x (1 - s_x . t_x)` with gradient `-t_x`
/// per row.
pub fn cosine_loss(s: &Matrix, t: &Matrix) -> Result<(f64, Matrix)> {
    cosine_loss_reduced(s, t, CosineReduction::Sum)
}

pub fn cosine_loss_reduced(
    s: &Matrix,
    t: &Matrix,
    reduction: CosineReduction,
) -> Result<(f64, Matrix)> {
    if s.shape() != t.shape() {
        return Err(Error::shape("cosine_loss", s.shape(), t.shape()));
    }
    let m = s.rows();
    let mut value = 0.0;
    for x in 0..m {
        value += 1.0 - dot(s.row(x), t.row(x));
    }
    let mut grad = t.scaled(-1.0);
    if reduction == CosineReduction::Mean && m > 0 {
        value /= m as f64;
        grad.scale(1.0 / m as f64);
    }
    Ok((value, grad))
}

/// Pair-similarity loss: mean over all m^2 entries of
/// `(S S^T - T T^T)^2`. Column counts may differ; only the gram matrices
/// are compared. Gradient: `(4 / m^2) (S S^T - T T^T) S`.
pub fn sim_loss(s: &Matrix, t: &Matrix) -> Result<(f64, Matrix)> {
    if s.rows() != t.rows() {
        return Err(Error::BatchMismatch(s.rows(), t.rows()));
    }
    let m = s.rows();
    if m == 0 {
        return Ok((0.0, Matrix::zeros(0, s.cols())));
    }
    let gs = gram(s);
    let gt = gram(t);
    let diff = gs.sub(&gt);
    let mut value = 0.0;
    for &d in diff.data() {
        value += d * d;
    }
    let m2 = m as f64 * m as f64;
    value /= m2;
    let grad = diff.matmul(s).scaled(4.0 / m2);
    Ok((value, grad))
}

/// Number of unordered pairs of distinct index pairs for a batch of `m`:
/// `C(C(m, 2), 2)`. Zero for m < 3. Exact integer arithmetic.
pub fn pair_count(m: usize) -> u64 {
    let m = m as u128;
    let p = m * m.saturating_sub(1) / 2;
    let n = p * p.saturating_sub(1) / 2;
    u64::try_from(n).expect("pair count overflows u64")
}

/// Upper-triangle pair similarities of unit-row `m`, in lexicographic
/// (i, j) order with i < j.
pub fn pair_sims(m: &Matrix) -> Vec<f64> {
    let rows = m.rows();
    let mut sims = Vec::with_capacity(rows * rows.saturating_sub(1) / 2);
    for i in 0..rows {
        for j in i + 1..rows {
            sims.push(dot(m.row(i), m.row(j)));
        }
    }
    sims
}

/// Hinge sum over ordered comparisons of pair similarities.
///
/// For every unordered pair (a, b) of distinct pair indices with a strict
/// teacher ordering, add `max(0, s_loser - s_winner + margin)`. Returns the
/// value divided by `n_comparisons`, integer coefficients of the gradient
/// with respect to each student pair similarity (before the 1/N scale), and
/// the number of strictly positive hinges. The subgradient at exactly zero
/// is zero, and teacher ties contribute nothing.
///
/// Comparisons run in lexicographic (a, b) order so any reimplementation
/// that follows the same order reproduces the sum exactly.
pub fn resim_on_sims(
    s_sims: &[f64],
    t_sims: &[f64],
    margin: f64,
    n_comparisons: u64,
) -> (f64, Vec<i64>, u64) {
    assert_eq!(s_sims.len(), t_sims.len());
    let p = s_sims.len();
    let mut sum = 0.0;
    let mut coeff = vec![0i64; p];
    let mut hinges = 0u64;
    for a in 0..p {
        for b in a + 1..p {
            let (winner, loser) = if t_sims[a] > t_sims[b] {
                (a, b)
            } else if t_sims[b] > t_sims[a] {
                (b, a)
            } else {
                continue;
            };
            let z = s_sims[loser] - s_sims[winner] + margin;
            if z > 0.0 {
                sum += z;
                coeff[loser] += 1;
                coeff[winner] -= 1;
                hinges += 1;
            }
        }
    }
    let value = if n_comparisons == 0 {
        0.0
    } else {
        sum / n_comparisons as f64
    };
    (value, coeff, hinges)
}

/// Relative similarity distillation loss.
///
/// Enumerates all unordered pairs of distinct text pairs, keeps those the
/// teacher orders strictly, applies a margin hinge to the student's
/// ordering, and divides by the full comparison count `C(C(m,2),2)` (ties
/// drop terms but not the divisor). Batches with m < 3 yield zero.
pub fn resim_loss(s: &Matrix, t: &Matrix, margin: f64) -> Result<(f64, Matrix, u64)> {
    if s.rows() != t.rows() {
        return Err(Error::BatchMismatch(s.rows(), t.rows()));
    }
    let m = s.rows();
    let n = pair_count(m);
    if n == 0 {
        return Ok((0.0, Matrix::zeros(m, s.cols()), 0));
    }
    let s_sims = pair_sims(s);
    let t_sims = pair_sims(t);
    let (value, coeff, hinges) = resim_on_sims(&s_sims, &t_sims, margin, n);
    let grad = resim_grad_from_coeff(s, &coeff, n);
    Ok((value, grad, hinges))
}

/// Rank-comparison variant: teacher similarities are replaced by their sort
/// ranks (ties share a rank) before the same lexicographic enumeration.
/// Strict float ordering and strict rank ordering coincide, and the
/// summation order is identical, so this agrees with [`resim_loss`] bit for
/// bit. It exists as an independent route for tie handling.
pub fn resim_loss_by_rank(s: &Matrix, t: &Matrix, margin: f64) -> Result<(f64, Matrix, u64)> {
    if s.rows() != t.rows() {
        return Err(Error::BatchMismatch(s.rows(), t.rows()));
    }
    let m = s.rows();
    let n = pair_count(m);
    if n == 0 {
        return Ok((0.0, Matrix::zeros(m, s.cols()), 0));
    }
    let s_sims = pair_sims(s);
    let t_sims = pair_sims(t);
    let ranks = dense_ranks(&t_sims);

    let p = s_sims.len();
    let mut sum = 0.0;
    let mut coeff = vec![0i64; p];
    let mut hinges = 0u64;
    for a in 0..p {
        for b in a + 1..p {
            let (winner, loser) = if ranks[a] > ranks[b] {
                (a, b)
            } else if ranks[b] > ranks[a] {
                (b, a)
            } else {
                continue;
            };
            let z = s_sims[loser] - s_sims[winner] + margin;
            if z > 0.0 {
                sum += z;
                coeff[loser] += 1;
                coeff[winner] -= 1;
                hinges += 1;
            }
        }
    }
    let grad = resim_grad_from_coeff(s, &coeff, n);
    Ok((sum / n as f64, grad, hinges))
}

/// Dense ranks of `values` (0 = smallest); exact float ties share a rank.
fn dense_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0usize; values.len()];
    let mut rank = 0usize;
    for (pos, &idx) in order.iter().enumerate() {
        if pos > 0 && values[idx] != values[order[pos - 1]] {
            rank += 1;
        }
        ranks[idx] = rank;
    }
    ranks
}

/// Map per-pair-similarity coefficients back onto student rows:
/// `d(s_i . s_j)/dS` contributes `s_j` to row i and `s_i` to row j.
fn resim_grad_from_coeff(s: &Matrix, coeff: &[i64], n_comparisons: u64) -> Matrix {
    let m = s.rows();
    let inv_n = 1.0 / n_comparisons as f64;
    let mut grad = Matrix::zeros(m, s.cols());
    let mut pair = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            let c = coeff[pair] as f64 * inv_n;
            if c != 0.0 {
                for (g, &v) in grad.row_mut(i).iter_mut().zip(s.row(j)) {
                    *g += c * v;
                }
                for (g, &v) in grad.row_mut(j).iter_mut().zip(s.row(i)) {
                    *g += c * v;
                }
            }
            pair += 1;
        }
    }
    grad
}

/// Weighted combination of the active components.
///
/// Inactive components report zero and contribute no gradient. The cosine
/// component requires matching column counts; activating it across a
/// dimension mismatch is an error.
pub fn combined_loss(
    s: &Matrix,
    t: &Matrix,
    w: &LossWeights,
    active: ActiveLosses,
    reduction: CosineReduction,
) -> Result<(LossReport, Matrix)> {
    if s.rows() != t.rows() {
        return Err(Error::BatchMismatch(s.rows(), t.rows()));
    }
    let mut report = LossReport::default();
    let mut grad = Matrix::zeros(s.rows(), s.cols());

    if active.cosine {
        if s.cols() != t.cols() {
            return Err(Error::CosineDimMismatch(s.cols(), t.cols()));
        }
        let (v, g) = cosine_loss_reduced(s, t, reduction)?;
        report.cosine = v;
        accumulate(&mut grad, &g, w.lambda1);
    }
    if active.sim {
        let (v, g) = sim_loss(s, t)?;
        report.sim = v;
        accumulate(&mut grad, &g, w.lambda2);
    }
    if active.resim {
        let (v, g, hinges) = resim_loss(s, t, w.margin)?;
        report.resim = v;
        report.active_hinges = hinges;
        accumulate(&mut grad, &g, w.lambda3);
    }
    report.total = w.lambda1 * report.cosine + w.lambda2 * report.sim + w.lambda3 * report.resim;
    Ok((report, grad))
}

fn accumulate(dst: &mut Matrix, src: &Matrix, weight: f64) {
    if weight == 0.0 {
        return;
    }
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += weight * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::gradcheck::{finite_diff_grad, max_rel_err};
    use crate::numcore::matrix::normalize_rows;
    use crate::numcore::rng::{random_orthogonal, RngStream};

    fn unit_rows(seed: u64, m: usize, d: usize) -> Matrix {
        let mut rng = RngStream::new(seed, 0);
        normalize_rows(&rng.normal_matrix(m, d)).unwrap()
    }

    #[test]
    fn cosine_zero_when_equal() {
        let s = unit_rows(1, 4, 6);
        let (v, _) = cosine_loss(&s, &s).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn cosine_hand_value() {
        let r = std::f64::consts::SQRT_2 / 2.0;
        let s = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let t = Matrix::from_rows(&[vec![1.0, 0.0], vec![r, r]]);
        let (v, g) = cosine_loss(&s, &t).unwrap();
        assert!((v - (1.0 - r)).abs() < 1e-12);
        // gradient row x is -t_x
        assert_eq!(g.row(1), &[-r, -r]);
    }

    #[test]
    fn cosine_mean_reduction_divides_by_batch() {
        let s = unit_rows(40, 4, 6);
        let t = unit_rows(41, 4, 6);
        let (sum, g_sum) = cosine_loss_reduced(&s, &t, CosineReduction::Sum).unwrap();
        let (mean, g_mean) = cosine_loss_reduced(&s, &t, CosineReduction::Mean).unwrap();
        assert!((mean - sum / 4.0).abs() < 1e-15);
        for (a, b) in g_sum.data().iter().zip(g_mean.data()) {
            assert!((a / 4.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_gradient_matches_finite_differences() {
        // Gradient is taken with respect to the student matrix as a free
        // variable (normalization handled downstream), so probe it directly.
        let s = unit_rows(2, 3, 5);
        let t = unit_rows(3, 3, 5);
        let (_, g) = cosine_loss(&s, &t).unwrap();
        let f = |x: &[f64]| {
            let sx = Matrix::from_vec(3, 5, x.to_vec());
            cosine_loss(&sx, &t).unwrap().0
        };
        let num = finite_diff_grad(f, s.data(), 1e-6).unwrap();
        assert!(max_rel_err(g.data(), &num, 1e-6) < 1e-6);
    }

    #[test]
    fn sim_zero_under_rotation() {
        let t = unit_rows(4, 4, 4);
        let q = random_orthogonal(4, &mut RngStream::new(4, 1));
        let s = t.matmul(&q);
        let (v, _) = sim_loss(&s, &t).unwrap();
        assert!(v < 1e-20);
    }

    #[test]
    fn sim_hand_value() {
        let s = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let t = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let (v, _) = sim_loss(&s, &t).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sim_gradient_matches_finite_differences() {
        let s = unit_rows(5, 4, 3);
        let t = unit_rows(6, 4, 7);
        let (_, g) = sim_loss(&s, &t).unwrap();
        let f = |x: &[f64]| {
            let sx = Matrix::from_vec(4, 3, x.to_vec());
            sim_loss(&sx, &t).unwrap().0
        };
        let num = finite_diff_grad(f, s.data(), 1e-6).unwrap();
        assert!(max_rel_err(g.data(), &num, 1e-6) < 1e-6);
    }

    #[test]
    fn pair_count_values() {
        assert_eq!(pair_count(0), 0);
        assert_eq!(pair_count(2), 0);
        assert_eq!(pair_count(3), 3);
        assert_eq!(pair_count(4), 15);
        assert_eq!(pair_count(128), 33_028_128);
    }

    #[test]
    fn resim_hand_value() {
        // Three texts; similarities chosen directly on the pair level.
        let t_sims = [0.9, 0.5, 0.1];
        let s_sims = [0.2, 0.5, 0.8];
        let (v, _, hinges) = resim_on_sims(&s_sims, &t_sims, 0.015, pair_count(3));
        assert!((v - 0.415).abs() < 1e-12);
        assert_eq!(hinges, 3);
    }

    #[test]
    fn resim_zero_when_ordered_with_margin_gaps() {
        let t_sims = [0.9, 0.5, 0.1];
        let s_sims = [0.8, 0.5, 0.2];
        let (v, _, hinges) = resim_on_sims(&s_sims, &t_sims, 0.015, pair_count(3));
        assert_eq!(v, 0.0);
        assert_eq!(hinges, 0);
    }

    #[test]
    fn resim_m4_enumerates_15_comparisons() {
        // With every teacher similarity distinct and every student
        // similarity maximally wrong, every comparison contributes a hinge.
        let m = 4;
        let p = m * (m - 1) / 2;
        let t_sims: Vec<f64> = (0..p).map(|i| i as f64).collect();
        let s_sims: Vec<f64> = (0..p).map(|i| -(i as f64)).collect();
        let (_, _, hinges) = resim_on_sims(&s_sims, &t_sims, 0.0, pair_count(m));
        assert_eq!(hinges, 15);
    }

    #[test]
    fn resim_small_batch_is_zero() {
        let s = unit_rows(7, 2, 4);
        let t = unit_rows(8, 2, 4);
        let (v, g, hinges) = resim_loss(&s, &t, 0.015).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(hinges, 0);
        assert!(g.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn resim_gradient_matches_finite_differences() {
        let margin = 0.015;
        let mut checked = 0;
        for seed in 0..12 {
            let s = unit_rows(100 + seed, 4, 5);
            let t = unit_rows(200 + seed, 4, 5);
            // Skip instances with a hinge argument near a kink, where the
            // subgradient is one-sided.
            if near_kink(&s, &t, margin, 1e-4) {
                continue;
            }
            let (_, g, _) = resim_loss(&s, &t, margin).unwrap();
            let f = |x: &[f64]| {
                let sx = Matrix::from_vec(4, 5, x.to_vec());
                resim_loss(&sx, &t, margin).unwrap().0
            };
            let num = finite_diff_grad(f, s.data(), 1e-6).unwrap();
            assert!(max_rel_err(g.data(), &num, 1e-6) < 1e-5, "seed {seed}");
            checked += 1;
        }
        assert!(checked >= 6, "too many kink skips: {checked}");
    }

    fn near_kink(s: &Matrix, t: &Matrix, margin: f64, tol: f64) -> bool {
        let s_sims = pair_sims(s);
        let t_sims = pair_sims(t);
        for a in 0..s_sims.len() {
            for b in a + 1..s_sims.len() {
                if t_sims[a] == t_sims[b] {
                    continue;
                }
                let (w, l) = if t_sims[a] > t_sims[b] { (a, b) } else { (b, a) };
                if (s_sims[l] - s_sims[w] + margin).abs() < tol {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn resim_rank_route_is_bitwise_equal() {
        for seed in 0..8 {
            let s = unit_rows(300 + seed, 5, 4);
            let t = unit_rows(400 + seed, 5, 4);
            let (v1, g1, h1) = resim_loss(&s, &t, 0.015).unwrap();
            let (v2, g2, h2) = resim_loss_by_rank(&s, &t, 0.015).unwrap();
            assert_eq!(v1.to_bits(), v2.to_bits());
            assert_eq!(h1, h2);
            assert_eq!(g1.data(), g2.data());
        }
        // And with exact ties in the teacher similarities.
        let t_sims = [0.5, 0.5, 0.1];
        let s_sims = [0.0, 0.9, 0.4];
        let (v, _, h) = resim_on_sims(&s_sims, &t_sims, 0.0, pair_count(3));
        // Only the two comparisons against the third pair count.
        assert_eq!(h, 1); // 0.4 - 0.0 + 0 > 0 for (pair0, pair2); pair1 ordered correctly
        assert!((v - 0.4 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn resim_invariant_under_positive_affine_teacher_transform() {
        let s = unit_rows(9, 5, 6);
        let t = unit_rows(10, 5, 6);
        let s_sims = pair_sims(&s);
        let t_sims = pair_sims(&t);
        let n = pair_count(5);
        let (base, _, _) = resim_on_sims(&s_sims, &t_sims, 0.015, n);
        for (a, b) in [(0.3, 2.0), (-1.0, 0.5), (10.0, 123.4)] {
            let transformed: Vec<f64> = t_sims.iter().map(|x| a + b * x).collect();
            let (v, _, _) = resim_on_sims(&s_sims, &transformed, 0.015, n);
            assert!((v - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn resim_upper_bound() {
        let s = unit_rows(11, 5, 3);
        let t = unit_rows(12, 5, 3);
        let margin = 0.75;
        let (v, _, _) = resim_loss(&s, &t, margin).unwrap();
        let t_sims = pair_sims(&t);
        let mut ordered = 0u64;
        for a in 0..t_sims.len() {
            for b in a + 1..t_sims.len() {
                if t_sims[a] != t_sims[b] {
                    ordered += 1;
                }
            }
        }
        let bound = ordered as f64 * (2.0 + margin) / pair_count(5) as f64;
        assert!(v <= bound);
    }

    #[test]
    fn combined_composes_components() {
        let s = unit_rows(13, 3, 4);
        let t = unit_rows(14, 3, 4);
        let w = LossWeights::reference();
        let (report, grad) =
            combined_loss(&s, &t, &w, ActiveLosses::ALL, CosineReduction::Sum).unwrap();
        let (c, gc) = cosine_loss(&s, &t).unwrap();
        let (sv, gs) = sim_loss(&s, &t).unwrap();
        let (r, gr, hinges) = resim_loss(&s, &t, w.margin).unwrap();
        assert_eq!(report.cosine, c);
        assert_eq!(report.sim, sv);
        assert_eq!(report.resim, r);
        assert_eq!(report.active_hinges, hinges);
        assert!((report.total - (10.0 * c + 200.0 * sv + 20.0 * r)).abs() < 1e-12);
        for i in 0..grad.data().len() {
            let expect = 10.0 * gc.data()[i] + 200.0 * gs.data()[i] + 20.0 * gr.data()[i];
            assert!((grad.data()[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_dim_mismatch_rules() {
        let s = unit_rows(15, 3, 4);
        let t = unit_rows(16, 3, 6);
        let w = LossWeights::reference();
        // cosine inactive: fine, cosine component reported as zero
        let (report, _) =
            combined_loss(&s, &t, &w, ActiveLosses::SIM_RESIM, CosineReduction::Sum).unwrap();
        assert_eq!(report.cosine, 0.0);
        // cosine active: hard error
        assert!(matches!(
            combined_loss(&s, &t, &w, ActiveLosses::ALL, CosineReduction::Sum),
            Err(Error::CosineDimMismatch(4, 6))
        ));
    }

    #[test]
    fn combined_zero_weights_zero_gradient() {
        let s = unit_rows(17, 3, 4);
        let t = unit_rows(18, 3, 4);
        let w = LossWeights {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            margin: 0.015,
        };
        let (report, grad) =
            combined_loss(&s, &t, &w, ActiveLosses::ALL, CosineReduction::Sum).unwrap();
        assert_eq!(report.total, 0.0);
        assert!(grad.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cosine_zero_iff_equal() {
        let s = unit_rows(19, 4, 5);
        let mut t = s.clone();
        let (v, _) = cosine_loss(&s, &t).unwrap();
        assert!(v.abs() < 1e-12);
        // Perturb one row; the loss moves away from zero and the matrices
        // differ beyond tolerance.
        t.set(2, 0, t.get(2, 0) + 1e-3);
        let t = normalize_rows(&t).unwrap();
        let (v, _) = cosine_loss(&s, &t).unwrap();
        assert!(v > 1e-9);
        assert!(s.max_abs_diff(&t) > 1e-9);
    }
}
