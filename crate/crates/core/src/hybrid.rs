//! Score fusion and per-user ranking.
//!
//! The hybrid final score is the product of the collaborative score and
//! the content-based score. Pure collaborative and pure content-based
//! rankings are the same machinery with the other factor fixed at 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cf::{CfAlgorithm, LatentFactorModel};
use crate::error::{Error, Result};
use crate::semantic::{onto_score, ItemSimilarity, UserProfile};

/// The five recommenders compared by the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ALS")]
    Als,
    #[serde(rename = "BPR")]
    Bpr,
    #[serde(rename = "ONTO")]
    Onto,
    #[serde(rename = "ALS_ONTO")]
    AlsOnto,
    #[serde(rename = "BPR_ONTO")]
    BprOnto,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Als,
        Algorithm::Bpr,
        Algorithm::Onto,
        Algorithm::AlsOnto,
        Algorithm::BprOnto,
    ];

    /// The collaborative component, if any.
    pub fn cf(self) -> Option<CfAlgorithm> {
        match self {
            Algorithm::Als | Algorithm::AlsOnto => Some(CfAlgorithm::Als),
            Algorithm::Bpr | Algorithm::BprOnto => Some(CfAlgorithm::Bpr),
            Algorithm::Onto => None,
        }
    }

    pub fn uses_onto(self) -> bool {
        matches!(self, Algorithm::Onto | Algorithm::AlsOnto | Algorithm::BprOnto)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Als => "ALS",
            Algorithm::Bpr => "BPR",
            Algorithm::Onto => "ONTO",
            Algorithm::AlsOnto => "ALS_ONTO",
            Algorithm::BprOnto => "BPR_ONTO",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == upper)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// `fs = s_cf * s_cb` on raw collaborative scores.
    #[default]
    Raw,
    /// Collaborative scores are first min-max rescaled per user over the
    /// candidate set to `[NORMALIZED_FLOOR, 1]`.
    Normalized,
}

pub const NORMALIZED_FLOOR: f64 = 1e-6;

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Raw => "raw",
            FusionMode::Normalized => "normalized",
        })
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(FusionMode::Raw),
            "normalized" => Ok(FusionMode::Normalized),
            _ => Err(Error::Config(format!("unknown fusion mode {s:?}"))),
        }
    }
}

/// Product fusion. A missing collaborative score (item unseen in training)
/// falls back to the content-based score alone.
pub fn fuse(s_cf: Option<f64>, s_cb: f64) -> Result<f64> {
    if !s_cb.is_finite() || s_cf.is_some_and(|s| !s.is_finite()) {
        return Err(Error::Numerical(format!(
            "cannot fuse non-finite scores (cf {s_cf:?}, cb {s_cb})"
        )));
    }
    Ok(match s_cf {
        Some(cf) => cf * s_cb,
        None => s_cb,
    })
}

/// Min-max rescaling of the present scores to `[NORMALIZED_FLOOR, 1]`.
/// All-equal inputs map to 1.
pub fn normalize_cf(scores: &[Option<f64>]) -> Vec<Option<f64>> {
    let present = scores.iter().flatten();
    let lo = present.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = present.copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|s| {
            s.map(|v| {
                if hi > lo {
                    NORMALIZED_FLOOR + (1.0 - NORMALIZED_FLOOR) * (v - lo) / (hi - lo)
                } else {
                    1.0
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub item: usize,
    /// Collaborative score as used in fusion (after rescaling in
    /// normalized mode); `None` if the model never saw the item.
    pub s_cf: Option<f64>,
    pub s_cb: f64,
    pub fs: f64,
}

/// A user's candidates ordered by final score, descending, ties broken by
/// ascending item id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub user: usize,
    pub entries: Vec<CandidateScore>,
}

impl RankedList {
    pub fn items(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.item).collect()
    }
}

/// Everything needed to rank candidates under one algorithm.
#[derive(Clone, Copy)]
pub struct Ranker<'a> {
    algorithm: Algorithm,
    fusion: FusionMode,
    model: Option<&'a LatentFactorModel>,
    sims: Option<&'a (dyn ItemSimilarity + Sync)>,
}

impl<'a> Ranker<'a> {
    pub fn new(
        algorithm: Algorithm,
        fusion: FusionMode,
        model: Option<&'a LatentFactorModel>,
        sims: Option<&'a (dyn ItemSimilarity + Sync)>,
    ) -> Result<Self> {
        if let Some(cf) = algorithm.cf() {
            match model {
                Some(m) if m.algorithm() == cf => {}
                Some(m) => {
                    return Err(Error::Config(format!(
                        "{algorithm} needs a {cf:?} model, got {:?}",
                        m.algorithm()
                    )))
                }
                None => return Err(Error::Config(format!("{algorithm} needs a trained model"))),
            }
        }
        if algorithm.uses_onto() && sims.is_none() {
            return Err(Error::Config(format!("{algorithm} needs item similarities")));
        }
        Ok(Ranker {
            algorithm,
            fusion,
            model,
            sims,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn rank(&self, profile: &UserProfile, candidates: &[usize]) -> Result<RankedList> {
        let user = profile.user;
        if let Some(&c) = candidates.iter().find(|&&c| profile.contains(c)) {
            return Err(Error::Contract(format!(
                "candidate item {c} is in the training profile of user {user}"
            )));
        }

        let mut cf_scores = Vec::with_capacity(candidates.len());
        if let (Some(_), Some(model)) = (self.algorithm.cf(), self.model) {
            for &item in candidates {
                cf_scores.push(if model.has_item(item) {
                    Some(model.score(user, item)?)
                } else {
                    None
                });
            }
            if self.fusion == FusionMode::Normalized {
                cf_scores = normalize_cf(&cf_scores);
            }
        } else {
            cf_scores.resize(candidates.len(), Some(1.0));
        }

        let mut entries = Vec::with_capacity(candidates.len());
        for (&item, s_cf) in candidates.iter().zip(cf_scores) {
            let s_cb = match self.sims {
                Some(sims) if self.algorithm.uses_onto() => onto_score(profile, item, sims)?,
                _ => 1.0,
            };
            let fs = if self.algorithm.uses_onto() {
                fuse(s_cf, s_cb)?
            } else {
                // A pure collaborative ranker cannot place items it never
                // saw; they go last.
                fuse(Some(s_cf.unwrap_or(f64::MIN)), s_cb)?
            };
            entries.push(CandidateScore { item, s_cf, s_cb, fs });
        }
        // Numeric comparison: -0.0 and 0.0 tie and fall to the item id.
        entries.sort_by(|a, b| {
            b.fs.partial_cmp(&a.fs)
                .expect("fused scores are finite")
                .then(a.item.cmp(&b.item))
        });
        Ok(RankedList { user, entries })
    }
}

pub fn rank_user(
    profile: &UserProfile,
    candidates: &[usize],
    algorithm: Algorithm,
    fusion: FusionMode,
    model: Option<&LatentFactorModel>,
    sims: Option<&(dyn ItemSimilarity + Sync)>,
) -> Result<RankedList> {
    Ranker::new(algorithm, fusion, model, sims)?.rank(profile, candidates)
}
