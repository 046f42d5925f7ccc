use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::graph::{intersect_sorted, TermId};
use super::ic::Ontology;
use crate::error::{Error, Result};

/// How the information shared by two terms is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SharedIcMode {
    /// IC of the most informative common ancestor.
    Mica,
    /// Mean IC over disjunctive common ancestors: common ancestors are
    /// grouped by the difference in the number of paths reaching them from
    /// each term, and the most informative member of each group contributes.
    #[default]
    Dishin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Resnik,
    #[default]
    Lin,
    /// Jiang-Conrath distance `d`, reported as the similarity `1 / (1 + d)`.
    #[serde(rename = "jc")]
    JiangConrath,
}

impl Metric {
    /// Upper bound of the metric's values for an ontology whose largest IC
    /// is `max_ic`.
    pub fn upper_bound(self, max_ic: f64) -> f64 {
        match self {
            Metric::Resnik => max_ic,
            Metric::Lin | Metric::JiangConrath => 1.0,
        }
    }
}

impl fmt::Display for SharedIcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SharedIcMode::Mica => "mica",
            SharedIcMode::Dishin => "dishin",
        })
    }
}

impl FromStr for SharedIcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mica" => Ok(SharedIcMode::Mica),
            "dishin" => Ok(SharedIcMode::Dishin),
            _ => Err(Error::Config(format!("unknown shared-IC mode {s:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Resnik => "resnik",
            Metric::Lin => "lin",
            Metric::JiangConrath => "jc",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "resnik" => Ok(Metric::Resnik),
            "lin" => Ok(Metric::Lin),
            "jc" | "jiang-conrath" | "jiangconrath" => Ok(Metric::JiangConrath),
            _ => Err(Error::Config(format!("unknown similarity metric {s:?}"))),
        }
    }
}

impl Ontology {
    /// Information shared by `a` and `b`. Zero when they have no common
    /// ancestor (different roots).
    pub fn shared_ic(&self, a: TermId, b: TermId, mode: SharedIcMode) -> Result<f64> {
        let g = self.graph();
        g.check(a)?;
        g.check(b)?;
        let (anc_a, anc_b) = (g.ancestors(a), g.ancestors(b));
        let common = intersect_sorted(anc_a, anc_b);
        if common.is_empty() {
            return Ok(0.0);
        }
        match mode {
            SharedIcMode::Mica => Ok(common.iter().map(|&c| self.ic(c)).fold(0.0, f64::max)),
            SharedIcMode::Dishin => {
                let (paths_a, paths_b) = (g.paths_to_ancestors(a), g.paths_to_ancestors(b));
                let count = |closure: &[TermId], paths: &[u64], c: TermId| {
                    paths[closure.binary_search(&c).expect("common ancestor in closure")]
                };
                // path difference -> best IC in that group
                let mut groups: BTreeMap<u64, f64> = BTreeMap::new();
                for &c in &common {
                    let pd = count(anc_a, &paths_a, c).abs_diff(count(anc_b, &paths_b, c));
                    let best = groups.entry(pd).or_insert(0.0);
                    *best = best.max(self.ic(c));
                }
                Ok(groups.values().sum::<f64>() / groups.len() as f64)
            }
        }
    }

    /// Semantic similarity; higher means more similar for every metric.
    pub fn similarity(&self, a: TermId, b: TermId, metric: Metric, mode: SharedIcMode) -> Result<f64> {
        let shared = self.shared_ic(a, b, mode)?;
        let (ic_a, ic_b) = (self.ic(a), self.ic(b));
        Ok(match metric {
            Metric::Resnik => shared,
            Metric::Lin => {
                let denom = ic_a + ic_b;
                if denom == 0.0 {
                    return Ok(0.0);
                }
                let lin = 2.0 * shared / denom;
                if !(0.0..=1.0).contains(&lin) {
                    log::warn!(
                        "clamping Lin similarity {lin} for {} / {}",
                        self.graph().accession(a),
                        self.graph().accession(b)
                    );
                }
                lin.clamp(0.0, 1.0)
            }
            Metric::JiangConrath => {
                let distance = (ic_a + ic_b - 2.0 * shared).max(0.0);
                1.0 / (1.0 + distance)
            }
        })
    }
}
