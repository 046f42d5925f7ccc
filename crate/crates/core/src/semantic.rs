//! Content-based scoring: a candidate item's score for a user is the mean
//! semantic similarity between the candidate and the items the user rated in
//! training.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::IdIndex;
use crate::error::{Error, Result};
use crate::ontology::{Metric, Ontology, SharedIcMode, TermId};

/// Similarity between two items identified by dense item id.
pub trait ItemSimilarity {
    fn item_similarity(&self, a: usize, b: usize) -> f64;
}

/// The configuration a similarity table was computed under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheProvenance {
    pub ontology_checksum: String,
    pub metric: Metric,
    /// Display form of [`crate::ontology::IcKind`].
    pub ic: String,
    pub shared: SharedIcMode,
}

impl CacheProvenance {
    pub fn new(onto: &Ontology, metric: Metric, shared: SharedIcMode) -> Self {
        CacheProvenance {
            ontology_checksum: onto.graph().checksum(),
            metric,
            ic: onto.ic_kind().to_string(),
            shared,
        }
    }
}

fn resolve_items(items: &IdIndex, onto: &Ontology) -> Result<Vec<TermId>> {
    let mut unresolved = Vec::new();
    let mut terms = Vec::with_capacity(items.len());
    for accession in items.ids() {
        match onto.graph().term(accession) {
            Ok(t) => terms.push(t),
            Err(_) => unresolved.push(accession.clone()),
        }
    }
    if unresolved.is_empty() {
        Ok(terms)
    } else {
        Err(Error::Mapping(unresolved))
    }
}

/// Symmetric item×item similarity table, stored as its lower triangle
/// including the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityCache {
    items: Vec<String>,
    values: Vec<f64>,
    provenance: CacheProvenance,
}

const MAGIC: &[u8; 8] = b"SEMRECSC";
const FORMAT_VERSION: u32 = 1;

fn tri_index(a: usize, b: usize) -> usize {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi * (hi + 1) / 2 + lo
}

impl SimilarityCache {
    /// Computes every pair once. Each item accession must name a term of
    /// `onto`; all unresolved accessions are reported together.
    pub fn build(items: &IdIndex, onto: &Ontology, metric: Metric, shared: SharedIcMode) -> Result<Self> {
        let terms = resolve_items(items, onto)?;
        let rows: Vec<Vec<f64>> = (0..terms.len())
            .into_par_iter()
            .map(|a| {
                (0..=a)
                    .map(|b| onto.similarity(terms[a], terms[b], metric, shared))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(SimilarityCache {
            items: items.ids().to_vec(),
            values: rows.into_iter().flatten().collect(),
            provenance: CacheProvenance::new(onto, metric, shared),
        })
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Number of stored pairs, `I(I+1)/2`.
    pub fn num_pairs(&self) -> usize {
        self.values.len()
    }

    pub fn item_accessions(&self) -> &[String] {
        &self.items
    }

    pub fn provenance(&self) -> &CacheProvenance {
        &self.provenance
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[tri_index(a, b)]
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        let p = &self.provenance;
        for field in [
            p.ontology_checksum.as_str(),
            &p.metric.to_string(),
            &p.ic,
            &p.shared.to_string(),
        ] {
            write_str(&mut out, field)?;
        }
        out.write_u64::<LittleEndian>(self.items.len() as u64)?;
        for item in &self.items {
            write_str(&mut out, item)?;
        }
        for v in &self.values {
            out.write_u64::<LittleEndian>(v.to_bits())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a cache file without checking it against any configuration.
    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a similarity cache file".into()));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported cache format version {version}")));
        }
        let ontology_checksum = read_str(&mut input)?;
        let metric: Metric = read_str(&mut input)?.parse()?;
        let ic = read_str(&mut input)?;
        let shared: SharedIcMode = read_str(&mut input)?.parse()?;
        let n = read_len(&mut input)?;
        let items = (0..n).map(|_| read_str(&mut input)).collect::<Result<Vec<_>>>()?;
        let values = (0..n * (n + 1) / 2)
            .map(|_| input.read_u64::<LittleEndian>().map(f64::from_bits))
            .collect::<std::io::Result<Vec<f64>>>()?;
        Ok(SimilarityCache {
            items,
            values,
            provenance: CacheProvenance {
                ontology_checksum,
                metric,
                ic,
                shared,
            },
        })
    }

    /// Reads a cache and checks that it was built for `expected` and for
    /// exactly the item universe `items`, in the same order.
    pub fn load<R: Read>(input: R, expected: &CacheProvenance, items: &IdIndex) -> Result<Self> {
        let cache = Self::read(input)?;
        if &cache.provenance != expected {
            return Err(Error::Provenance(format!(
                "cache built with {:?}, current configuration is {:?}",
                cache.provenance, expected
            )));
        }
        if cache.items != items.ids() {
            return Err(Error::Provenance(
                "cache item list differs from the dataset's items".into(),
            ));
        }
        Ok(cache)
    }
}

impl ItemSimilarity for SimilarityCache {
    fn item_similarity(&self, a: usize, b: usize) -> f64 {
        self.get(a, b)
    }
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    out.write_u64::<LittleEndian>(s.len() as u64)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_len<R: Read>(input: &mut R) -> Result<usize> {
    let len = input.read_u64::<LittleEndian>()?;
    usize::try_from(len).map_err(|_| Error::Format(format!("length {len} out of range")))
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let len = read_len(input)?;
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("invalid UTF-8 in cache header".into()))
}

/// On-the-fly similarity straight from the ontology, for ad-hoc queries.
pub struct OntologySimilarity<'a> {
    onto: &'a Ontology,
    terms: Vec<TermId>,
    metric: Metric,
    shared: SharedIcMode,
}

impl<'a> OntologySimilarity<'a> {
    pub fn new(items: &IdIndex, onto: &'a Ontology, metric: Metric, shared: SharedIcMode) -> Result<Self> {
        Ok(OntologySimilarity {
            terms: resolve_items(items, onto)?,
            onto,
            metric,
            shared,
        })
    }
}

impl ItemSimilarity for OntologySimilarity<'_> {
    fn item_similarity(&self, a: usize, b: usize) -> f64 {
        self.onto
            .similarity(self.terms[a], self.terms[b], self.metric, self.shared)
            .expect("terms resolved at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProfileWeighting {
    /// Plain mean over profile items.
    #[default]
    Uniform,
    /// Mean weighted by the user's rating of each profile item.
    Rating,
}

impl fmt::Display for ProfileWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileWeighting::Uniform => "uniform",
            ProfileWeighting::Rating => "rating",
        })
    }
}

impl FromStr for ProfileWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ProfileWeighting::Uniform),
            "rating" => Ok(ProfileWeighting::Rating),
            _ => Err(Error::Config(format!("unknown profile weighting {s:?}"))),
        }
    }
}

/// The distinct items a user rated in training.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user: usize,
    /// Ascending, distinct.
    items: Vec<usize>,
    weights: Vec<f64>,
}

impl UserProfile {
    /// Unweighted profile over `items`.
    pub fn new(user: usize, mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        let weights = vec![1.0; items.len()];
        UserProfile { user, items, weights }
    }

    /// Builds a profile from one row of [`crate::dataset::InteractionSet::by_user`].
    pub fn from_ratings(user: usize, rated: &[(usize, u32)], weighting: ProfileWeighting) -> Self {
        let mut pairs = rated.to_vec();
        pairs.sort_unstable();
        pairs.dedup_by_key(|p| p.0);
        let weights = pairs
            .iter()
            .map(|&(_, r)| match weighting {
                ProfileWeighting::Uniform => 1.0,
                ProfileWeighting::Rating => f64::from(r),
            })
            .collect();
        UserProfile {
            user,
            items: pairs.into_iter().map(|(i, _)| i).collect(),
            weights,
        }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    /// Profile size `m`.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

/// Mean similarity of `candidate` to the profile items; 0 for an empty
/// profile. Never reads the candidate's own rating.
pub fn onto_score<S: ItemSimilarity + ?Sized>(profile: &UserProfile, candidate: usize, sims: &S) -> Result<f64> {
    if profile.contains(candidate) {
        return Err(Error::Contract(format!(
            "candidate item {candidate} is in the training profile of user {}",
            profile.user
        )));
    }
    if profile.is_empty() {
        log::debug!("user {} has an empty profile; ONTO score is 0", profile.user);
        return Ok(0.0);
    }
    let (mut total, mut weight) = (0.0, 0.0);
    for (&item, &w) in profile.items.iter().zip(&profile.weights) {
        total += w * sims.item_similarity(candidate, item);
        weight += w;
    }
    Ok(total / weight)
}

pub fn onto_score_all<S: ItemSimilarity + ?Sized>(
    profile: &UserProfile,
    candidates: &[usize],
    sims: &S,
) -> Result<Vec<(usize, f64)>> {
    candidates
        .iter()
        .map(|&c| onto_score(profile, c, sims).map(|s| (c, s)))
        .collect()
}
