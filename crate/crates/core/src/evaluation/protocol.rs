//! Per-fold evaluation: train once, rank every test user's candidates under
//! each algorithm, and average the metrics over users.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{MetricKind, MetricValues};
use crate::cf::{train_als, train_bpr, AlsConfig, BprConfig, CfAlgorithm, LatentFactorModel};
use crate::dataset::{FoldSplit, InteractionSet};
use crate::error::{Error, Result};
use crate::hybrid::{Algorithm, FusionMode, Ranker};
use crate::semantic::{ItemSimilarity, ProfileWeighting, UserProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub algorithms: Vec<Algorithm>,
    pub als: AlsConfig,
    pub bpr: BprConfig,
    pub fusion: FusionMode,
    pub weighting: ProfileWeighting,
    pub k_max: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            algorithms: Algorithm::ALL.to_vec(),
            als: AlsConfig::default(),
            bpr: BprConfig::default(),
            fusion: FusionMode::Raw,
            weighting: ProfileWeighting::Uniform,
            k_max: 20,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.needs(CfAlgorithm::Als) {
            self.als.validate()?;
        }
        if self.needs(CfAlgorithm::Bpr) {
            self.bpr.validate()?;
        }
        Ok(())
    }

    pub fn needs(&self, cf: CfAlgorithm) -> bool {
        self.algorithms.iter().any(|a| a.cf() == Some(cf))
    }

    pub fn needs_onto(&self) -> bool {
        self.algorithms.iter().any(|a| a.uses_onto())
    }

    /// Selected algorithms, deduplicated, in canonical order.
    pub fn algorithm_set(&self) -> Vec<Algorithm> {
        let mut algs = self.algorithms.clone();
        algs.sort_unstable();
        algs.dedup();
        algs
    }

    /// Points both trainers at `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.als.seed = seed;
        self.bpr.seed = seed;
        self
    }
}

/// Collaborative models trained on one fold's train set.
#[derive(Debug, Clone, Default)]
pub struct FoldModels {
    pub als: Option<LatentFactorModel>,
    pub bpr: Option<LatentFactorModel>,
}

impl FoldModels {
    /// Trains exactly the models `cfg` needs.
    pub fn train(train: &InteractionSet, cfg: &EvalConfig) -> Result<Self> {
        Ok(FoldModels {
            als: cfg
                .needs(CfAlgorithm::Als)
                .then(|| train_als(train, &cfg.als))
                .transpose()?,
            bpr: cfg
                .needs(CfAlgorithm::Bpr)
                .then(|| train_bpr(train, &cfg.bpr))
                .transpose()?,
        })
    }

    pub fn get(&self, cf: CfAlgorithm) -> Option<&LatentFactorModel> {
        match cf {
            CfAlgorithm::Als => self.als.as_ref(),
            CfAlgorithm::Bpr => self.bpr.as_ref(),
        }
    }
}

/// Test users left out of some or all averages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SkipCounts {
    /// No rating in the test block; excluded from every metric.
    pub no_relevant: usize,
    /// Rated every test item; excluded from lAUC only.
    pub no_non_relevant: usize,
    /// Evaluated, but with an empty training profile.
    pub cold_start: usize,
}

pub type MetricKey = (Algorithm, usize, MetricKind);

/// One fold's per-user-averaged metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold_id: usize,
    pub k_max: usize,
    pub algorithms: Vec<Algorithm>,
    pub evaluated_users: usize,
    pub skipped: SkipCounts,
    /// Keys without a value had no eligible user.
    pub values: BTreeMap<MetricKey, f64>,
}

impl FoldReport {
    pub fn get(&self, algorithm: Algorithm, k: usize, metric: MetricKind) -> Option<f64> {
        self.values.get(&(algorithm, k, metric)).copied()
    }
}

/// Trains the fold's models on `fold.train` and evaluates.
pub fn evaluate_fold(
    fold: &FoldSplit,
    cfg: &EvalConfig,
    sims: Option<&(dyn ItemSimilarity + Sync)>,
) -> Result<FoldReport> {
    cfg.validate()?;
    check_sims(cfg, sims)?;
    let models = FoldModels::train(&fold.train, cfg)?;
    evaluate_fold_with(fold, cfg, &models, sims)
}

fn check_sims(cfg: &EvalConfig, sims: Option<&(dyn ItemSimilarity + Sync)>) -> Result<()> {
    if cfg.needs_onto() && sims.is_none() {
        return Err(Error::Config(
            "ontology-based algorithms need a similarity cache".into(),
        ));
    }
    Ok(())
}

/// Evaluates with already trained models.
pub fn evaluate_fold_with(
    fold: &FoldSplit,
    cfg: &EvalConfig,
    models: &FoldModels,
    sims: Option<&(dyn ItemSimilarity + Sync)>,
) -> Result<FoldReport> {
    cfg.validate()?;
    check_sims(cfg, sims)?;
    let algorithms = cfg.algorithm_set();
    let rankers = algorithms
        .iter()
        .map(|&a| Ranker::new(a, cfg.fusion, a.cf().and_then(|cf| models.get(cf)), sims))
        .collect::<Result<Vec<_>>>()?;

    let train_rows = fold.train.by_user();
    let test_rows = fold.test.by_user();
    let candidates = &fold.test_items;

    // One entry per test user: None if skipped, else metric values per
    // (algorithm, k).
    let per_user: Vec<Option<(bool, Vec<MetricValues>)>> = fold
        .test_users
        .par_iter()
        .map(|&user| {
            let relevant: HashSet<usize> = test_rows[user].iter().map(|&(i, _)| i).collect();
            if relevant.is_empty() {
                return Ok(None);
            }
            let profile = UserProfile::from_ratings(user, &train_rows[user], cfg.weighting);
            let mut values = Vec::with_capacity(rankers.len() * cfg.k_max);
            for ranker in &rankers {
                let ranked = ranker.rank(&profile, candidates)?.items();
                for k in 1..=cfg.k_max {
                    values.push(MetricValues::compute(&ranked, &relevant, k)?);
                }
            }
            Ok(Some((profile.is_empty(), values)))
        })
        .collect::<Result<_>>()?;

    let mut skipped = SkipCounts::default();
    let mut sums: BTreeMap<MetricKey, (f64, usize)> = BTreeMap::new();
    let mut evaluated_users = 0;
    for entry in &per_user {
        let Some((cold, values)) = entry else {
            skipped.no_relevant += 1;
            continue;
        };
        evaluated_users += 1;
        skipped.cold_start += usize::from(*cold);
        if values[0].lauc.is_none() {
            skipped.no_non_relevant += 1;
        }
        for (a, &alg) in algorithms.iter().enumerate() {
            for k in 1..=cfg.k_max {
                let v = &values[a * cfg.k_max + k - 1];
                for metric in MetricKind::ALL {
                    if let Some(x) = v.get(metric) {
                        let slot = sums.entry((alg, k, metric)).or_insert((0.0, 0));
                        slot.0 += x;
                        slot.1 += 1;
                    }
                }
            }
        }
    }
    if evaluated_users == 0 {
        log::warn!(
            "fold {} has no test user with a relevant test item; it is left out of aggregation",
            fold.fold_id
        );
    }
    if skipped.cold_start > 0 {
        log::info!(
            "fold {}: {} evaluated users have no training ratings",
            fold.fold_id,
            skipped.cold_start
        );
    }

    Ok(FoldReport {
        fold_id: fold.fold_id,
        k_max: cfg.k_max,
        algorithms,
        evaluated_users,
        skipped,
        values: sums
            .into_iter()
            .map(|(key, (sum, n))| (key, sum / n as f64))
            .collect(),
    })
}
