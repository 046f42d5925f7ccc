//! Seeded synthetic benchmark: items arranged in a small is_a hierarchy and
//! users whose consumption follows both item popularity and a preferred
//! branch of that hierarchy.
//!
//! The hierarchy only approximates consumption: some items are consumed as
//! members of a different subcategory than the one they sit under, and an
//! optional second branch gives every item an unrelated extra parent, so
//! similarity is graded rather than all-or-nothing.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::InteractionSet;
use crate::error::Result;
use crate::ontology::{compute_ic, parse_obo, IcMode, Ontology};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub categories: usize,
    pub subcategories: usize,
    pub items_per_subcategory: usize,
    /// Ratings drawn per user, inclusive range.
    pub ratings_per_user: (usize, usize),
    /// Weight multiplier for items in the user's preferred category.
    pub category_affinity: f64,
    /// Extra multiplier for the preferred subcategory.
    pub subcategory_affinity: f64,
    /// Size of a second is_a branch; every item also gets one of these as a
    /// parent, independent of how it is consumed. 0 disables the branch.
    pub roles: usize,
    /// Probability that an item is consumed as a member of a random
    /// subcategory instead of the one it sits under in the ontology.
    pub placement_noise: f64,
    /// Popularity weight of the item with popularity rank r is `(r+1)^-s`.
    pub popularity_exponent: f64,
    pub max_rating: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 300,
            categories: 6,
            subcategories: 2,
            items_per_subcategory: 5,
            ratings_per_user: (4, 12),
            category_affinity: 10.0,
            subcategory_affinity: 2.0,
            roles: 3,
            placement_noise: 0.3,
            popularity_exponent: 0.5,
            max_rating: 3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn num_items(&self) -> usize {
        self.categories * self.subcategories * self.items_per_subcategory
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    /// OBO text of the item hierarchy.
    pub obo: String,
    pub ontology: Ontology,
    /// `(user, item accession, rating)`.
    pub triples: Vec<(String, String, u32)>,
    pub interactions: InteractionSet,
}

impl SyntheticBenchmark {
    /// Comma-separated `user,item,rating` lines with a header.
    pub fn write_ratings<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "user,item,rating")?;
        for (u, i, r) in &self.triples {
            writeln!(out, "{u},{i},{r}")?;
        }
        Ok(())
    }
}

fn item_accession(i: usize) -> String {
    format!("SYN:{:04}", 1000 + i)
}

fn hierarchy_obo(cfg: &SyntheticConfig, rng: &mut impl Rng) -> String {
    let mut obo = String::from("format-version: 1.2\n\n[Term]\nid: SYN:0000\nname: root\n");
    for r in 0..cfg.roles {
        let _ = write!(obo, "\n[Term]\nid: SYN:{:04}\nname: role {r}\nis_a: SYN:0000\n", 900 + r);
    }
    let mut item = 0;
    for c in 0..cfg.categories {
        let cat = format!("SYN:{:04}", 1 + c);
        let _ = write!(obo, "\n[Term]\nid: {cat}\nname: category {c}\nis_a: SYN:0000\n");
        for s in 0..cfg.subcategories {
            let sub = format!("SYN:{:04}", 100 + c * cfg.subcategories + s);
            let _ = write!(obo, "\n[Term]\nid: {sub}\nname: group {c}.{s}\nis_a: {cat}\n");
            for _ in 0..cfg.items_per_subcategory {
                let _ = write!(
                    obo,
                    "\n[Term]\nid: {}\nname: item {item}\nis_a: {sub}\n",
                    item_accession(item)
                );
                if cfg.roles > 0 {
                    let _ = writeln!(obo, "is_a: SYN:{:04}", 900 + rng.gen_range(0..cfg.roles));
                }
                item += 1;
            }
        }
    }
    obo
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    let mut rng = rng::derived(cfg.seed, Stream::Synthetic);
    let obo = hierarchy_obo(cfg, &mut rng);
    let ontology = compute_ic(parse_obo(obo.as_bytes())?, &IcMode::Intrinsic)?;

    let n = cfg.num_items();
    let mut popularity_rank: Vec<usize> = (0..n).collect();
    popularity_rank.shuffle(&mut rng);
    let num_groups = cfg.categories * cfg.subcategories;
    // Subcategory each item is consumed as.
    let group: Vec<usize> = (0..n)
        .map(|i| {
            if rng.gen_bool(cfg.placement_noise) {
                rng.gen_range(0..num_groups)
            } else {
                i / cfg.items_per_subcategory
            }
        })
        .collect();
    let popularity: Vec<f64> = popularity_rank
        .iter()
        .map(|&r| ((r + 1) as f64).powf(-cfg.popularity_exponent))
        .collect();

    let mut triples = Vec::new();
    let items: Vec<usize> = (0..n).collect();
    for u in 0..cfg.users {
        let category = rng.gen_range(0..cfg.categories);
        let sub = rng.gen_range(0..cfg.subcategories);
        let weight = |&i: &usize| {
            let mut w = popularity[i];
            if group[i] / cfg.subcategories == category {
                w *= cfg.category_affinity;
                if group[i] % cfg.subcategories == sub {
                    w *= cfg.subcategory_affinity;
                }
            }
            w
        };
        let count = rng.gen_range(cfg.ratings_per_user.0..=cfg.ratings_per_user.1).min(n);
        let mut chosen: Vec<usize> = items
            .choose_multiple_weighted(&mut rng, count, weight)
            .expect("weights are positive and finite")
            .copied()
            .collect();
        chosen.sort_unstable();
        for i in chosen {
            let rating = rng.gen_range(1..=cfg.max_rating);
            triples.push((format!("user{u:04}"), item_accession(i), rating));
        }
    }
    // Row order decides item indices, and so tie-breaking; keep it free of
    // any popularity signal.
    triples.shuffle(&mut rng);
    let interactions =
        InteractionSet::from_triples(triples.iter().map(|(u, i, r)| (u.as_str(), i.as_str(), *r)))?;
    Ok(SyntheticBenchmark {
        obo,
        ontology,
        triples,
        interactions,
    })
}
