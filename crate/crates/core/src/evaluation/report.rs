//! Cross-fold aggregation and plottable report tables.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::metrics::MetricKind;
use super::protocol::{evaluate_fold, EvalConfig, FoldReport, MetricKey, SkipCounts};
use crate::dataset::{make_folds, InteractionSet};
use crate::error::{Error, Result};
use crate::hybrid::Algorithm;
use crate::semantic::ItemSimilarity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub k_max: usize,
    pub algorithms: Vec<Algorithm>,
    /// Ordered by fold id; includes folds left out of aggregation.
    pub folds: Vec<FoldReport>,
    pub aggregate: BTreeMap<MetricKey, Summary>,
}

/// Per-fold bookkeeping for run manifests.
#[derive(Debug, Clone, Serialize)]
pub struct FoldSummary {
    pub fold_id: usize,
    pub evaluated_users: usize,
    pub skipped: SkipCounts,
    pub aggregated: bool,
}

/// Unweighted mean and standard deviation over folds for every
/// (algorithm, k, metric). Folds without evaluated users are left out.
pub fn aggregate(mut fragments: Vec<FoldReport>) -> Result<MetricReport> {
    let Some(first) = fragments.first() else {
        return Err(Error::Validation("nothing to aggregate".into()));
    };
    let (k_max, algorithms) = (first.k_max, first.algorithms.clone());
    if let Some(bad) = fragments
        .iter()
        .find(|f| f.k_max != k_max || f.algorithms != algorithms)
    {
        return Err(Error::Validation(format!(
            "fold {} was evaluated with k up to {} and algorithms {:?}, expected k up to {k_max} and {algorithms:?}",
            bad.fold_id, bad.k_max, bad.algorithms
        )));
    }
    fragments.sort_by_key(|f| f.fold_id);
    if fragments.iter().all(|f| f.evaluated_users == 0) {
        return Err(Error::Validation("no fold has an evaluable user".into()));
    }

    let mut per_key: BTreeMap<MetricKey, Vec<f64>> = BTreeMap::new();
    for fold in fragments.iter().filter(|f| f.evaluated_users > 0) {
        for (&key, &v) in &fold.values {
            per_key.entry(key).or_default().push(v);
        }
    }
    let aggregate = per_key
        .into_iter()
        .map(|(key, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            (
                key,
                Summary {
                    mean,
                    std: var.sqrt(),
                    folds: xs.len(),
                },
            )
        })
        .collect();
    Ok(MetricReport {
        k_max,
        algorithms,
        folds: fragments,
        aggregate,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl MetricReport {
    pub fn summary(&self, algorithm: Algorithm, k: usize, metric: MetricKind) -> Option<Summary> {
        self.aggregate.get(&(algorithm, k, metric)).copied()
    }

    pub fn fold_summaries(&self) -> Vec<FoldSummary> {
        self.folds
            .iter()
            .map(|f| FoldSummary {
                fold_id: f.fold_id,
                evaluated_users: f.evaluated_users,
                skipped: f.skipped,
                aggregated: f.evaluated_users > 0,
            })
            .collect()
    }

    /// `algorithm,fold,k,metric,value`, one row per combination; undefined
    /// values are left empty.
    pub fn write_fold_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "algorithm,fold,k,metric,value")?;
        for fold in &self.folds {
            for &alg in &self.algorithms {
                for k in 1..=self.k_max {
                    for metric in MetricKind::ALL {
                        let v = fold.get(alg, k, metric);
                        writeln!(out, "{alg},{},{k},{metric},{}", fold.fold_id, opt(v))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// `algorithm,k,metric,mean,std`, led by empty k = 0 rows so curves
    /// start at the origin of the k axis.
    pub fn write_aggregate_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "algorithm,k,metric,mean,std")?;
        for &alg in &self.algorithms {
            for metric in MetricKind::ALL {
                writeln!(out, "{alg},0,{metric},,")?;
            }
            for k in 1..=self.k_max {
                for metric in MetricKind::ALL {
                    let s = self.summary(alg, k, metric);
                    writeln!(
                        out,
                        "{alg},{k},{metric},{},{}",
                        opt(s.map(|s| s.mean)),
                        opt(s.map(|s| s.std))
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Block cross-validation end to end: folds, per-fold evaluation, and
/// aggregation, with every random stream derived from `seed`.
pub fn cross_validate(
    ds: &InteractionSet,
    cfg: &EvalConfig,
    num_folds: usize,
    seed: u64,
    sims: Option<&(dyn ItemSimilarity + Sync)>,
) -> Result<MetricReport> {
    let cfg = cfg.clone().with_seed(seed);
    cfg.validate()?;
    let folds = make_folds(ds, num_folds, seed)?;
    let fragments = folds
        .iter()
        .map(|fold| {
            log::info!("evaluating fold {} of {num_folds}", fold.fold_id + 1);
            evaluate_fold(fold, &cfg, sims)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(fragments)
}
