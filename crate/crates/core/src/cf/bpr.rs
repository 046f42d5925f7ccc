//! Bayesian personalized ranking with uniform negative sampling and
//! sequential stochastic gradient ascent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{dot, FactorMatrix, LatentFactorModel, TrainingConfig};
use crate::dataset::InteractionSet;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BprConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub lambda_user: f64,
    pub lambda_item_pos: f64,
    pub lambda_item_neg: f64,
    pub epochs: usize,
    /// `None` means one sample per training rating.
    pub samples_per_epoch: Option<usize>,
    pub seed: u64,
}

impl Default for BprConfig {
    fn default() -> Self {
        BprConfig {
            factors: 150,
            learning_rate: 0.01,
            lambda_user: 0.0025,
            lambda_item_pos: 0.0025,
            lambda_item_neg: 0.0025,
            epochs: 100,
            samples_per_epoch: None,
            seed: 0,
        }
    }
}

impl BprConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::Config("BPR needs at least one factor".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "BPR learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [
            ("lambda_user", self.lambda_user),
            ("lambda_item_pos", self.lambda_item_pos),
            ("lambda_item_neg", self.lambda_item_neg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("BPR {name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Ascent direction of the per-sample objective
/// `ln σ(x_u·(y_i − y_j)) − λ_u/2 ‖x_u‖² − λ_i/2 ‖y_i‖² − λ_j/2 ‖y_j‖²`
/// with respect to the three touched factor rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BprGradient {
    pub user: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

pub fn bpr_gradient(
    model: &LatentFactorModel,
    user: usize,
    positive: usize,
    negative: usize,
    cfg: &BprConfig,
) -> BprGradient {
    gradient(
        model.user_factors.row(user),
        model.item_factors.row(positive),
        model.item_factors.row(negative),
        cfg,
    )
}

fn gradient(xu: &[f64], yi: &[f64], yj: &[f64], cfg: &BprConfig) -> BprGradient {
    let x_uij = dot(xu, yi) - dot(xu, yj);
    // d/dx ln σ(x) = σ(−x)
    let g = 1.0 / (1.0 + x_uij.exp());
    BprGradient {
        user: (0..xu.len())
            .map(|k| g * (yi[k] - yj[k]) - cfg.lambda_user * xu[k])
            .collect(),
        positive: (0..xu.len())
            .map(|k| g * xu[k] - cfg.lambda_item_pos * yi[k])
            .collect(),
        negative: (0..xu.len())
            .map(|k| -g * xu[k] - cfg.lambda_item_neg * yj[k])
            .collect(),
    }
}

pub fn train_bpr(train: &InteractionSet, cfg: &BprConfig) -> Result<LatentFactorModel> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("cannot train BPR on an empty train set".into()));
    }
    let num_items = train.num_items();
    if num_items < 2 {
        return Err(Error::Validation("BPR needs at least two items".into()));
    }

    let mut init_rng = rng::derived(cfg.seed, Stream::BprInit);
    let mut users = FactorMatrix::random_init(train.num_users(), cfg.factors, &mut init_rng);
    let mut items = FactorMatrix::random_init(num_items, cfg.factors, &mut init_rng);

    let rated: Vec<Vec<usize>> = train
        .by_user()
        .into_iter()
        .map(|row| row.into_iter().map(|(item, _)| item).collect())
        .collect();
    let saturated = rated.iter().filter(|r| r.len() == num_items).count();
    if saturated > 0 {
        log::warn!("BPR: skipping {saturated} user(s) who rated every item (no negative sample)");
    }
    let positives: Vec<(usize, usize)> = train
        .records()
        .iter()
        .filter(|r| rated[r.user].len() < num_items)
        .map(|r| (r.user, r.item))
        .collect();
    if positives.is_empty() {
        return Err(Error::Validation(
            "BPR has no usable (user, positive, negative) triple".into(),
        ));
    }

    let samples = cfg.samples_per_epoch.unwrap_or(train.num_ratings());
    let lr = cfg.learning_rate;
    let mut rng = rng::derived(cfg.seed, Stream::BprSampling);
    for epoch in 1..=cfg.epochs {
        for _ in 0..samples {
            let (u, i) = positives[rng.gen_range(0..positives.len())];
            let j = loop {
                let j = rng.gen_range(0..num_items);
                if rated[u].binary_search(&j).is_err() {
                    break j;
                }
            };
            let step = gradient(users.row(u), items.row(i), items.row(j), cfg);
            for (x, d) in users.row_mut(u).iter_mut().zip(&step.user) {
                *x += lr * d;
            }
            for (y, d) in items.row_mut(i).iter_mut().zip(&step.positive) {
                *y += lr * d;
            }
            for (y, d) in items.row_mut(j).iter_mut().zip(&step.negative) {
                *y += lr * d;
            }
        }
        if !(users.is_finite() && items.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite factors after BPR epoch {epoch}"
            )));
        }
    }

    let observed_items = train.by_item().iter().map(|col| !col.is_empty()).collect();
    LatentFactorModel::new(users, items, observed_items, TrainingConfig::Bpr(cfg.clone()))
}
