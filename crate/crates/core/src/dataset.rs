//! Implicit-feedback interaction data: ingest, statistics and block
//! cross-validation folds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Bijection between external string identifiers and dense indices, in
/// first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl IdIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.lookup.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_owned());
        self.lookup.insert(id.to_owned(), idx);
        idx
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    /// # Panics
    ///
    /// If `idx` is out of range.
    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

impl<S: AsRef<str>> FromIterator<S> for IdIndex {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut index = IdIndex::new();
        for id in iter {
            index.get_or_insert(id.as_ref());
        }
        index
    }
}

/// One `<user, item, rating>` triple with dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    /// Positive count; implicit feedback has no explicit negatives.
    pub rating: u32,
}

/// Deduplicated interactions plus the id maps that give them meaning.
///
/// Train and test views produced by [`make_folds`] share the id maps of the
/// set they were split from, so dense ids mean the same thing everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSet {
    users: Arc<IdIndex>,
    items: Arc<IdIndex>,
    records: Vec<Interaction>,
}

impl InteractionSet {
    /// Builds a set from external-id triples, merging duplicate pairs by
    /// summing their ratings.
    pub fn from_triples<'a, I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u32)>,
    {
        let mut builder = Builder::default();
        for (n, (user, item, rating)) in triples.into_iter().enumerate() {
            builder.push(n + 1, user, item, rating)?;
        }
        builder.finish()
    }

    /// A view over a subset of `self`'s records sharing the same id maps.
    pub fn filter<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(&Interaction) -> bool,
    {
        InteractionSet {
            users: Arc::clone(&self.users),
            items: Arc::clone(&self.items),
            records: self.records.iter().copied().filter(|r| keep(r)).collect(),
        }
    }

    pub fn users(&self) -> &IdIndex {
        &self.users
    }

    pub fn items(&self) -> &IdIndex {
        &self.items
    }

    pub fn records(&self) -> &[Interaction] {
        &self.records
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_ratings(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `1 - R / (U * I)`, evaluated as `(U * I - R) / (U * I)` so the
    /// only rounding is the final division.
    pub fn sparsity(&self) -> f64 {
        let cells = self.num_users() as u64 * self.num_items() as u64;
        if cells == 0 {
            return 1.0;
        }
        (cells - self.num_ratings() as u64) as f64 / cells as f64
    }

    /// Per-user `(item, rating)` lists, items ascending.
    pub fn by_user(&self) -> Vec<Vec<(usize, u32)>> {
        let mut rows = vec![Vec::new(); self.num_users()];
        for r in &self.records {
            rows[r.user].push((r.item, r.rating));
        }
        for row in &mut rows {
            row.sort_unstable();
        }
        rows
    }

    /// Per-item `(user, rating)` lists, users ascending.
    pub fn by_item(&self) -> Vec<Vec<(usize, u32)>> {
        let mut cols = vec![Vec::new(); self.num_items()];
        for r in &self.records {
            cols[r.item].push((r.user, r.rating));
        }
        for col in &mut cols {
            col.sort_unstable();
        }
        cols
    }
}

#[derive(Default)]
struct Builder {
    users: IdIndex,
    items: IdIndex,
    records: Vec<Interaction>,
    pair_slot: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn push(&mut self, line: usize, user: &str, item: &str, rating: u32) -> Result<()> {
        if rating < 1 {
            return Err(Error::Validation(format!(
                "line {line}: rating must be at least 1, got {rating}"
            )));
        }
        let user = self.users.get_or_insert(user);
        let item = self.items.get_or_insert(item);
        match self.pair_slot.get(&(user, item)) {
            Some(&slot) => {
                let merged = &mut self.records[slot].rating;
                *merged = merged.checked_add(rating).ok_or_else(|| {
                    Error::Validation(format!("line {line}: merged rating overflows"))
                })?;
            }
            None => {
                self.pair_slot.insert((user, item), self.records.len());
                self.records.push(Interaction { user, item, rating });
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<InteractionSet> {
        if self.records.is_empty() {
            return Err(Error::Validation("no interactions in input".into()));
        }
        Ok(InteractionSet {
            users: Arc::new(self.users),
            items: Arc::new(self.items),
            records: self.records,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    pub delimiter: char,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { delimiter: ',' }
    }
}

/// Reads one `user<delim>item<delim>rating` triple per line.
///
/// Blank lines are skipped. A first line whose rating field is not an
/// integer is taken to be a header.
pub fn load_interactions<R: BufRead>(source: R, config: &IngestConfig) -> Result<InteractionSet> {
    let mut builder = Builder::default();
    let mut seen_content = false;
    for (n, line) in source.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(config.delimiter).map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::ingest(
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let first = !seen_content;
        seen_content = true;
        let rating: i64 = match fields[2].parse() {
            Ok(r) => r,
            Err(_) if first => continue,
            Err(_) => {
                return Err(Error::ingest(
                    line_no,
                    format!("rating {:?} is not an integer", fields[2]),
                ))
            }
        };
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::ingest(line_no, "empty user or item field"));
        }
        if rating < 1 {
            return Err(Error::Validation(format!(
                "line {line_no}: rating must be at least 1, got {rating}"
            )));
        }
        let rating = u32::try_from(rating)
            .map_err(|_| Error::ingest(line_no, format!("rating {rating} out of range")))?;
        builder.push(line_no, fields[0], fields[1], rating)?;
    }
    builder.finish()
}

pub fn load_interactions_path(path: &Path, config: &IngestConfig) -> Result<InteractionSet> {
    let file = File::open(path)?;
    load_interactions(BufReader::new(file), config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub num_users: usize,
    pub num_items: usize,
    pub num_ratings: usize,
    pub sparsity: f64,
    /// rating value -> number of records with that rating
    pub rating_histogram: BTreeMap<u32, usize>,
}

impl StatsSummary {
    /// Sparsity as a percentage rounded to three significant digits.
    pub fn sparsity_percent(&self) -> String {
        format_sig(self.sparsity * 100.0, 3)
    }
}

impl fmt::Display for StatsSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users     {:>10}", self.num_users)?;
        writeln!(f, "items     {:>10}", self.num_items)?;
        writeln!(f, "ratings   {:>10}", self.num_ratings)?;
        writeln!(f, "sparsity  {:>9}%", self.sparsity_percent())?;
        writeln!(f)?;
        writeln!(f, "rating     count")?;
        for (rating, count) in &self.rating_histogram {
            writeln!(f, "{rating:>6} {count:>9}")?;
        }
        Ok(())
    }
}

fn format_sig(value: f64, digits: i32) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

pub fn dataset_stats(ds: &InteractionSet) -> StatsSummary {
    let mut rating_histogram = BTreeMap::new();
    for r in ds.records() {
        *rating_histogram.entry(r.rating).or_insert(0) += 1;
    }
    StatsSummary {
        num_users: ds.num_users(),
        num_items: ds.num_items(),
        num_ratings: ds.num_ratings(),
        sparsity: ds.sparsity(),
        rating_histogram,
    }
}

/// One user×item block cross-validation fold.
///
/// The test set holds exactly the ratings of test users on test items.
/// Everything else, including test users' ratings on train items, is train.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_id: usize,
    /// Ascending.
    pub test_users: Vec<usize>,
    /// Ascending.
    pub test_items: Vec<usize>,
    pub train: InteractionSet,
    pub test: InteractionSet,
}

/// Group sizes for splitting `n` elements into `k` near-equal groups; the
/// remainder goes one per group from group 0 upward.
pub fn partition_sizes(n: usize, k: usize) -> Vec<usize> {
    let (base, extra) = (n / k, n % k);
    (0..k).map(|g| base + usize::from(g < extra)).collect()
}

fn shuffled_groups(n: usize, k: usize, rng: &mut impl rand::Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut groups = Vec::with_capacity(k);
    let mut rest = order.as_slice();
    for size in partition_sizes(n, k) {
        let (head, tail) = rest.split_at(size);
        let mut group = head.to_vec();
        group.sort_unstable();
        groups.push(group);
        rest = tail;
    }
    groups
}

pub fn make_folds(ds: &InteractionSet, num_folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if num_folds < 2 {
        return Err(Error::Config(format!(
            "at least 2 folds are required, got {num_folds}"
        )));
    }
    if num_folds > ds.num_users() || num_folds > ds.num_items() {
        return Err(Error::Config(format!(
            "{num_folds} folds requested but the data has {} users and {} items",
            ds.num_users(),
            ds.num_items()
        )));
    }
    let mut rng = rng::derived(seed, Stream::Folds);
    let user_groups = shuffled_groups(ds.num_users(), num_folds, &mut rng);
    let item_groups = shuffled_groups(ds.num_items(), num_folds, &mut rng);

    let folds = user_groups
        .into_iter()
        .zip(item_groups)
        .enumerate()
        .map(|(fold_id, (test_users, test_items))| {
            let mut user_in = vec![false; ds.num_users()];
            let mut item_in = vec![false; ds.num_items()];
            test_users.iter().for_each(|&u| user_in[u] = true);
            test_items.iter().for_each(|&i| item_in[i] = true);
            let in_block = |r: &Interaction| user_in[r.user] && item_in[r.item];
            FoldSplit {
                fold_id,
                train: ds.filter(|r| !in_block(r)),
                test: ds.filter(in_block),
                test_users,
                test_items,
            }
        })
        .collect();
    Ok(folds)
}
