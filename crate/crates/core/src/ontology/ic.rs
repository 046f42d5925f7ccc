use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use super::graph::{hex, OntologyGraph, TermId};
use crate::error::{Error, Result};

/// Per-term annotation counts for corpus-based information content.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationCounts(pub BTreeMap<String, u64>);

impl AnnotationCounts {
    /// Reads `term<delim>count` lines; repeated terms accumulate.
    pub fn load<R: BufRead>(source: R, delimiter: char) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(delimiter).map(str::trim).collect();
            let [term, count] = fields[..] else {
                return Err(Error::ingest(n + 1, format!("expected 2 fields, found {}", fields.len())));
            };
            let count: u64 = match count.parse() {
                Ok(c) => c,
                Err(_) if n == 0 => continue,
                Err(_) => return Err(Error::ingest(n + 1, format!("count {count:?} is not a nonnegative integer"))),
            };
            *counts.entry(term.to_owned()).or_insert(0) += count;
        }
        Ok(AnnotationCounts(counts))
    }

    fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (term, count) in &self.0 {
            hasher.update(term.as_bytes());
            hasher.update(b"\t");
            hasher.update(count.to_le_bytes());
        }
        hex(&hasher.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IcMode {
    /// Structure-only IC: `1 - ln(desc + 1) / ln(N)`.
    Intrinsic,
    /// Corpus IC: `-ln(freq / total)` with frequencies propagated to
    /// ancestors.
    Extrinsic(AnnotationCounts),
}

/// Which IC variant an [`Ontology`] carries; recorded in cache provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IcKind {
    Intrinsic,
    /// Values supplied directly through [`Ontology::with_ic_values`].
    Fixed,
    Extrinsic { counts_checksum: String },
}

impl fmt::Display for IcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcKind::Intrinsic => f.write_str("intrinsic"),
            IcKind::Fixed => f.write_str("fixed"),
            IcKind::Extrinsic { counts_checksum } => write!(f, "extrinsic:{counts_checksum}"),
        }
    }
}

/// An [`OntologyGraph`] with information content attached. Immutable; all
/// similarity queries run against this type.
#[derive(Debug, Clone)]
pub struct Ontology {
    graph: OntologyGraph,
    ic: Vec<f64>,
    kind: IcKind,
}

impl Ontology {
    pub fn graph(&self) -> &OntologyGraph {
        &self.graph
    }

    pub fn ic(&self, t: TermId) -> f64 {
        self.ic[t.0]
    }

    pub fn ic_kind(&self) -> &IcKind {
        &self.kind
    }

    pub fn max_ic(&self) -> f64 {
        self.ic.iter().copied().fold(0.0, f64::max)
    }

    /// Builds an ontology from hand-chosen IC values. Values must be finite,
    /// nonnegative and antitone along is-a edges.
    pub fn with_ic_values(graph: OntologyGraph, ic: Vec<f64>) -> Result<Self> {
        if ic.len() != graph.len() {
            return Err(Error::Validation(format!(
                "{} IC values for {} terms",
                ic.len(),
                graph.len()
            )));
        }
        if let Some(bad) = ic.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("invalid IC value {bad}")));
        }
        for t in graph.term_ids() {
            for &p in graph.parents(t) {
                if ic[p.0] > ic[t.0] {
                    return Err(Error::Validation(format!(
                        "IC of {} exceeds IC of its child {}",
                        graph.accession(p),
                        graph.accession(t)
                    )));
                }
            }
        }
        Ok(Ontology {
            graph,
            ic,
            kind: IcKind::Fixed,
        })
    }
}

pub fn compute_ic(graph: OntologyGraph, mode: &IcMode) -> Result<Ontology> {
    let (ic, kind) = match mode {
        IcMode::Intrinsic => (intrinsic_ic(&graph), IcKind::Intrinsic),
        IcMode::Extrinsic(counts) => (
            extrinsic_ic(&graph, counts)?,
            IcKind::Extrinsic {
                counts_checksum: counts.checksum(),
            },
        ),
    };
    Ok(Ontology { graph, ic, kind })
}

fn intrinsic_ic(graph: &OntologyGraph) -> Vec<f64> {
    let n = graph.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let log_n = (n as f64).ln();
    graph
        .term_ids()
        .map(|t| {
            let ic = 1.0 - ((graph.descendant_count(t) + 1) as f64).ln() / log_n;
            ic.max(0.0)
        })
        .collect()
}

fn extrinsic_ic(graph: &OntologyGraph, counts: &AnnotationCounts) -> Result<Vec<f64>> {
    let mut freq = vec![0u64; graph.len()];
    let mut total = 0u64;
    for (accession, &count) in &counts.0 {
        let t = graph.term(accession)?;
        total += count;
        for a in graph.ancestors(t) {
            freq[a.0] += count;
        }
    }
    if total == 0 {
        return Err(Error::Validation(
            "annotation counts sum to zero; extrinsic IC is undefined".into(),
        ));
    }
    let total = total as f64;
    // Unannotated terms are treated as seen once so their IC stays finite
    // and still bounds their ancestors' IC from above.
    Ok(freq
        .into_iter()
        .map(|f| (-(f.max(1) as f64 / total).ln()).max(0.0))
        .collect())
}
