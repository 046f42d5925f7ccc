//! Alternating least squares for implicit feedback.
//!
//! Every observed cell has preference 1 and confidence `1 + alpha * r`
//! (or `1 + alpha * ln(1 + r)`); unobserved cells have preference 0 and
//! confidence 1. Each half-step solves every row's regularized weighted
//! least-squares problem exactly, so the objective never increases.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{dot, FactorMatrix, LatentFactorModel, TrainingConfig};
use crate::dataset::InteractionSet;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceScaling {
    /// `1 + alpha * r`
    #[default]
    Linear,
    /// `1 + alpha * ln(1 + r)`
    Log,
}

impl fmt::Display for ConfidenceScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfidenceScaling::Linear => "linear",
            ConfidenceScaling::Log => "log",
        })
    }
}

impl FromStr for ConfidenceScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ConfidenceScaling::Linear),
            "log" => Ok(ConfidenceScaling::Log),
            _ => Err(Error::Config(format!("unknown confidence scaling {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub factors: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub confidence: ConfidenceScaling,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            factors: 150,
            alpha: 40.0,
            lambda: 0.01,
            iterations: 15,
            confidence: ConfidenceScaling::Linear,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::Config("ALS needs at least one factor".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("ALS alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "ALS lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn confidence(&self, rating: u32) -> f64 {
        let r = f64::from(rating);
        match self.confidence {
            ConfidenceScaling::Linear => 1.0 + self.alpha * r,
            ConfidenceScaling::Log => 1.0 + self.alpha * r.ln_1p(),
        }
    }
}

pub fn train_als(train: &InteractionSet, cfg: &AlsConfig) -> Result<LatentFactorModel> {
    train_als_with(train, cfg, |_, _| {})
}

/// Like [`train_als`], calling `observer(iteration, model)` after each
/// completed iteration (1-based).
pub fn train_als_with<F>(train: &InteractionSet, cfg: &AlsConfig, mut observer: F) -> Result<LatentFactorModel>
where
    F: FnMut(usize, &LatentFactorModel),
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("cannot train ALS on an empty train set".into()));
    }
    let mut rng = rng::derived(cfg.seed, Stream::AlsInit);
    let user_factors = FactorMatrix::random_init(train.num_users(), cfg.factors, &mut rng);
    let item_factors = FactorMatrix::random_init(train.num_items(), cfg.factors, &mut rng);
    let by_user = train.by_user();
    let by_item = train.by_item();
    let observed_items = by_item.iter().map(|col| !col.is_empty()).collect();
    let mut model = LatentFactorModel::new(
        user_factors,
        item_factors,
        observed_items,
        TrainingConfig::Als(cfg.clone()),
    )?;

    for iteration in 1..=cfg.iterations {
        model.user_factors = half_step(&by_user, &model.item_factors, cfg)?;
        model.item_factors = half_step(&by_item, &model.user_factors, cfg)?;
        if !(model.user_factors.is_finite() && model.item_factors.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite factors after ALS iteration {iteration}"
            )));
        }
        observer(iteration, &model);
    }
    Ok(model)
}

/// `Fᵀ F` for the fixed side.
pub fn gram(fixed: &FactorMatrix) -> DMatrix<f64> {
    let f = fixed.cols();
    let mut g = DMatrix::zeros(f, f);
    for r in 0..fixed.rows() {
        let row = DVector::from_column_slice(fixed.row(r));
        g.syger(1.0, &row, &row, 1.0);
    }
    g.fill_upper_triangle_with_lower_triangle();
    g
}

/// Solves every row of one side given the other side's factors. `rows[r]`
/// lists the `(column, rating)` observations of row `r`.
pub fn half_step(rows: &[Vec<(usize, u32)>], fixed: &FactorMatrix, cfg: &AlsConfig) -> Result<FactorMatrix> {
    let g = gram(fixed);
    let solved: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|observed| solve_row(observed, fixed, &g, cfg))
        .collect::<Result<_>>()?;
    let data = solved.into_iter().flatten().collect();
    FactorMatrix::from_vec(rows.len(), fixed.cols(), data)
}

/// Minimizes `Σ_j c_j (p_j − x·y_j)² + λ‖x‖²` over `x` for one row, using
/// `(G + λI + Σ_obs (c_j − 1) y_j y_jᵀ) x = Σ_obs c_j y_j` where `G` is the
/// Gram matrix of the fixed side.
pub fn solve_row(
    observed: &[(usize, u32)],
    fixed: &FactorMatrix,
    gram: &DMatrix<f64>,
    cfg: &AlsConfig,
) -> Result<Vec<f64>> {
    let f = fixed.cols();
    if observed.is_empty() && cfg.lambda > 0.0 {
        return Ok(vec![0.0; f]);
    }
    let mut a = gram.clone();
    for d in 0..f {
        a[(d, d)] += cfg.lambda;
    }
    let mut b = DVector::zeros(f);
    for &(col, rating) in observed {
        let c = cfg.confidence(rating);
        let y = DVector::from_column_slice(fixed.row(col));
        a.syger(c - 1.0, &y, &y, 1.0);
        b.axpy(c, &y, 1.0);
    }
    a.fill_upper_triangle_with_lower_triangle();

    let x = match a.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        // Singular system (lambda = 0 with fewer observations than factors):
        // any least-squares solution is a minimizer; take the minimum-norm one.
        None => a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::Numerical(format!("ALS row solve failed: {e}")))?,
    };
    Ok(x.iter().copied().collect())
}

/// Full weighted objective
/// `Σ_{u,i} c_ui (p_ui − x_u·y_i)² + λ (Σ‖x_u‖² + Σ‖y_i‖²)`
/// over all `U×I` cells.
pub fn als_objective(train: &InteractionSet, model: &LatentFactorModel, cfg: &AlsConfig) -> f64 {
    let by_user = train.by_user();
    let (xs, ys) = (model.user_factors(), model.item_factors());
    let mut loss = 0.0;
    for (u, row) in by_user.iter().enumerate() {
        let mut observed = row.iter().peekable();
        for i in 0..ys.rows() {
            let pred = dot(xs.row(u), ys.row(i));
            match observed.peek() {
                Some(&&(item, rating)) if item == i => {
                    observed.next();
                    loss += cfg.confidence(rating) * (1.0 - pred).powi(2);
                }
                _ => loss += pred * pred,
            }
        }
    }
    let norms: f64 = xs.as_slice().iter().chain(ys.as_slice()).map(|v| v * v).sum();
    loss + cfg.lambda * norms
}
