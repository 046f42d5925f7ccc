//! Top-k ranking metrics with binary relevance.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Precision,
    Recall,
    FMeasure,
    Mrr,
    Ndcg,
    Lauc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::FMeasure,
        MetricKind::Mrr,
        MetricKind::Ndcg,
        MetricKind::Lauc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::FMeasure => "f_measure",
            MetricKind::Mrr => "mrr",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Lauc => "lauc",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check(ranked: &[usize], k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Config("cutoff k must be at least 1".into()));
    }
    if ranked.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty ranking".into()));
    }
    Ok(())
}

fn hits(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> usize {
    ranked.iter().take(k).filter(|i| relevant.contains(i)).count()
}

/// `|relevant ∩ top-k| / k`.
pub fn precision_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<f64> {
    check(ranked, k)?;
    Ok(hits(ranked, relevant, k) as f64 / k as f64)
}

/// `|relevant ∩ top-k| / |relevant|`; `None` when nothing is relevant.
pub fn recall_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<Option<f64>> {
    check(ranked, k)?;
    if relevant.is_empty() {
        return Ok(None);
    }
    Ok(Some(hits(ranked, relevant, k) as f64 / relevant.len() as f64))
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_measure_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<Option<f64>> {
    let p = precision_at_k(ranked, relevant, k)?;
    Ok(recall_at_k(ranked, relevant, k)?.map(|r| harmonic_mean(p, r)))
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Reciprocal 1-based rank of the first relevant item within the top k.
pub fn mrr_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<f64> {
    check(ranked, k)?;
    Ok(ranked
        .iter()
        .take(k)
        .position(|i| relevant.contains(i))
        .map_or(0.0, |pos| 1.0 / (pos + 1) as f64))
}

/// Binary-gain nDCG; 0 when the ideal DCG is 0.
pub fn ndcg_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<f64> {
    check(ranked, k)?;
    let discount = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.contains(i))
        .map(|(pos, _)| discount(pos))
        .sum();
    let idcg: f64 = (0..relevant.len().min(k)).map(discount).sum();
    Ok(if idcg == 0.0 { 0.0 } else { dcg / idcg })
}

/// Limited AUC: the fraction of (relevant, non-relevant) pairs of the
/// ranked list that the top-k cut orders correctly.
///
/// Items ranked beyond k are all demoted to a shared last place. A pair
/// scores 1 when the relevant item is in the top k and ahead of the
/// non-relevant one, 0.5 when both are beyond k, and 0 otherwise. With
/// `k >= ranked.len()` this is the ordinary AUC. `None` unless the list
/// holds at least one relevant and one non-relevant item.
pub fn lauc_at_k(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<Option<f64>> {
    check(ranked, k)?;
    let n_rel = ranked.iter().filter(|i| relevant.contains(i)).count();
    let n_non = ranked.len() - n_rel;
    if n_rel == 0 || n_non == 0 {
        return Ok(None);
    }
    let cut = k.min(ranked.len());
    let non_beyond = ranked[cut..].iter().filter(|i| !relevant.contains(i)).count();
    let mut correct = 0.0;
    let mut non_seen = 0;
    for item in &ranked[..cut] {
        if relevant.contains(item) {
            correct += (n_non - non_seen) as f64;
        } else {
            non_seen += 1;
        }
    }
    let rel_beyond = ranked[cut..].len() - non_beyond;
    correct += 0.5 * (rel_beyond * non_beyond) as f64;
    Ok(Some(correct / (n_rel * n_non) as f64))
}

/// All six metrics for one ranking at one cutoff. `None` entries are
/// undefined for this user (no relevant items, or for lAUC no non-relevant
/// items either).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValues {
    pub precision: f64,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub mrr: f64,
    pub ndcg: f64,
    pub lauc: Option<f64>,
}

impl MetricValues {
    pub fn compute(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> Result<Self> {
        Ok(MetricValues {
            precision: precision_at_k(ranked, relevant, k)?,
            recall: recall_at_k(ranked, relevant, k)?,
            f_measure: f_measure_at_k(ranked, relevant, k)?,
            mrr: mrr_at_k(ranked, relevant, k)?,
            ndcg: ndcg_at_k(ranked, relevant, k)?,
            lauc: lauc_at_k(ranked, relevant, k)?,
        })
    }

    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Precision => Some(self.precision),
            MetricKind::Recall => self.recall,
            MetricKind::FMeasure => self.f_measure,
            MetricKind::Mrr => Some(self.mrr),
            MetricKind::Ndcg => Some(self.ndcg),
            MetricKind::Lauc => self.lauc,
        }
    }
}
