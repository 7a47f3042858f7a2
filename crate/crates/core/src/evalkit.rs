//! Student-teacher alignment metrics and small-scale retrieval evaluation.

use crate::error::{Error, Result};
use crate::losses::{pair_sims, sim_loss};
use crate::model::{Head, HeadSet, StudentNet};
use crate::numcore::matrix::{dot, Matrix};

/// How closely one student head tracks the (fused) teacher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentReport {
    /// Mean per-row cosine; only defined when dimensions match.
    pub mean_cosine: Option<f64>,
    /// The pair-similarity MSE, identical to the similarity loss value.
    pub sim_mse: f64,
    /// Rank correlation of pair similarities (average ranks on ties).
    pub spearman: f64,
}

/// Recall/MRR over a single-relevant-document retrieval task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalReport {
    pub recall_at1: f64,
    pub recall_at5: f64,
    pub recall_at10: f64,
    pub mrr: f64,
}

/// Alignment of one student head against the teacher matrix (rows matched).
pub fn alignment(student: &Matrix, teacher: &Matrix) -> Result<AlignmentReport> {
    if student.rows() != teacher.rows() {
        return Err(Error::BatchMismatch(student.rows(), teacher.rows()));
    }
    let m = student.rows();
    let mean_cosine = if student.cols() == teacher.cols() && m > 0 {
        let mut total = 0.0;
        for r in 0..m {
            total += dot(student.row(r), teacher.row(r));
        }
        Some(total / m as f64)
    } else {
        None
    };
    let (sim_mse, _) = sim_loss(student, teacher)?;
    let spearman = spearman(&pair_sims(student), &pair_sims(teacher));
    Ok(AlignmentReport {
        mean_cosine,
        sim_mse,
        spearman,
    })
}

/// Spearman rank correlation with average ranks for ties. Returns 0 for
/// fewer than two observations or zero variance.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman needs matched lengths");
    if a.len() < 2 {
        return 0.0;
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average of their positions
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    let denom = (va * vb).sqrt();
    if denom < 1e-300 {
        0.0
    } else {
        cov / denom
    }
}

/// Rank documents per query by dot product (descending, ties broken by
/// ascending doc index) and score against a single relevant doc per query.
pub fn retrieval_eval(queries: &Matrix, docs: &Matrix, qrels: &[usize]) -> Result<RetrievalReport> {
    if qrels.len() != queries.rows() {
        return Err(Error::MissingQrel(qrels.len()));
    }
    if queries.cols() != docs.cols() {
        return Err(Error::DimMismatch {
            context: "retrieval_eval",
            expected: docs.cols(),
            got: queries.cols(),
        });
    }
    for (q, &rel) in qrels.iter().enumerate() {
        if rel >= docs.rows() {
            return Err(Error::MissingQrel(q));
        }
    }
    let n_q = queries.rows();
    let mut hits1 = 0usize;
    let mut hits5 = 0usize;
    let mut hits10 = 0usize;
    let mut mrr = 0.0;
    for q in 0..n_q {
        let rel = qrels[q];
        let rel_score = dot(queries.row(q), docs.row(rel));
        // rank = 1 + docs scoring strictly higher + equal-scoring docs with
        // a smaller index (the deterministic tie-break).
        let mut rank = 1usize;
        for d in 0..docs.rows() {
            if d == rel {
                continue;
            }
            let s = dot(queries.row(q), docs.row(d));
            if s > rel_score || (s == rel_score && d < rel) {
                rank += 1;
            }
        }
        if rank <= 1 {
            hits1 += 1;
        }
        if rank <= 5 {
            hits5 += 1;
        }
        if rank <= 10 {
            hits10 += 1;
        }
        mrr += 1.0 / rank as f64;
    }
    let n = n_q as f64;
    Ok(RetrievalReport {
        recall_at1: hits1 as f64 / n,
        recall_at5: hits5 as f64 / n,
        recall_at10: hits10 as f64 / n,
        mrr: mrr / n,
    })
}

/// One row of the per-head dimension sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub head: Head,
    pub dim: usize,
    pub alignment: AlignmentReport,
    pub retrieval: Option<RetrievalReport>,
}

/// Evaluation inputs for [`dimension_sweep`].
pub struct EvalData<'a> {
    /// Base features of the alignment batch.
    pub base: &'a Matrix,
    /// Fused teacher rows matched to `base`.
    pub teacher: &'a Matrix,
    /// Optional retrieval fixture: (query base features, doc base
    /// features, one relevant doc index per query).
    pub retrieval: Option<(&'a Matrix, &'a Matrix, &'a [usize])>,
}

/// Evaluate every requested head: alignment against the teacher and, when
/// a retrieval fixture is present, recall/MRR with that head's embeddings.
pub fn dimension_sweep(
    net: &StudentNet,
    eval: &EvalData<'_>,
    heads: HeadSet,
) -> Result<Vec<SweepRow>> {
    let outputs = net.forward_text(eval.base, heads)?;
    let retrieval_outputs = match eval.retrieval {
        Some((q_base, d_base, _)) => Some((
            net.forward_text(q_base, heads)?,
            net.forward_text(d_base, heads)?,
        )),
        None => None,
    };
    let mut rows = Vec::new();
    for head in heads.iter() {
        let student = outputs.get(head).expect("head output");
        let align = alignment(student, eval.teacher)?;
        let retrieval = match (&retrieval_outputs, eval.retrieval) {
            (Some((q_out, d_out)), Some((_, _, qrels))) => Some(retrieval_eval(
                q_out.get(head).expect("query head output"),
                d_out.get(head).expect("doc head output"),
                qrels,
            )?),
            _ => None,
        };
        rows.push(SweepRow {
            head,
            dim: net.config().head_dim(head),
            alignment: align,
            retrieval,
        });
    }
    Ok(rows)
}

/// Fixed 10-column CSV rendering of sweep rows:
/// `head,dim,mean_cosine,sim_mse,spearman,recall_at1,recall_at5,recall_at10,mrr,n`.
/// Optional fields render as empty cells.
pub fn sweep_to_csv(rows: &[SweepRow], batch: usize) -> String {
    let mut out =
        String::from("head,dim,mean_cosine,sim_mse,spearman,recall_at1,recall_at5,recall_at10,mrr,n\n");
    for row in rows {
        let mc = row
            .alignment
            .mean_cosine
            .map(|v| v.to_string())
            .unwrap_or_default();
        let (r1, r5, r10, mrr) = match row.retrieval {
            Some(r) => (
                r.recall_at1.to_string(),
                r.recall_at5.to_string(),
                r.recall_at10.to_string(),
                r.mrr.to_string(),
            ),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.head.name(),
            row.dim,
            mc,
            row.alignment.sim_mse,
            row.alignment.spearman,
            r1,
            r5,
            r10,
            mrr,
            batch,
        ));
    }
    out
}
