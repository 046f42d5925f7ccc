use std::collections::{HashMap, HashSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense index of a term within one [`OntologyGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub(crate) usize);

impl TermId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub accession: String,
    pub name: Option<String>,
}

impl Term {
    pub fn new(accession: impl Into<String>) -> Self {
        Term {
            accession: accession.into(),
            name: None,
        }
    }
}

/// Immutable is-a DAG with precomputed reflexive ancestor closures.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    terms: Vec<Term>,
    lookup: HashMap<String, TermId>,
    parents: Vec<Vec<TermId>>,
    children: Vec<Vec<TermId>>,
    /// Position in a topological order where parents precede children.
    topo_rank: Vec<usize>,
    /// Reflexive, ascending by id.
    ancestors: Vec<Vec<TermId>>,
    descendant_count: Vec<usize>,
}

impl OntologyGraph {
    /// Builds the graph from terms and `(child, parent)` accession pairs.
    ///
    /// Fails on an empty term list, duplicate accessions, edges naming an
    /// unknown accession, or a cycle.
    pub fn build<S: AsRef<str>>(terms: Vec<Term>, is_a: &[(S, S)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Structure("ontology has no terms".into()));
        }
        let mut lookup = HashMap::with_capacity(terms.len());
        for (idx, term) in terms.iter().enumerate() {
            if lookup.insert(term.accession.clone(), TermId(idx)).is_some() {
                return Err(Error::Structure(format!(
                    "duplicate term id {}",
                    term.accession
                )));
            }
        }

        let n = terms.len();
        let mut parents = vec![Vec::new(); n];
        let mut unknown = Vec::new();
        for (child, parent) in is_a {
            let (child, parent) = (child.as_ref(), parent.as_ref());
            match (lookup.get(child), lookup.get(parent)) {
                (Some(&c), Some(&p)) => parents[c.0].push(p),
                (None, _) => unknown.push(child.to_owned()),
                (_, None) => unknown.push(format!("{parent} (is_a target of {child})")),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Structure(format!(
                "is_a references unknown terms: {}",
                unknown.join(", ")
            )));
        }
        for p in &mut parents {
            p.sort_unstable();
            p.dedup();
        }
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for p in ps {
                children[p.0].push(TermId(c));
            }
        }

        let order = topological_order(&parents, &children).map_err(|cycle| {
            let names: Vec<&str> = cycle.iter().map(|t| terms[t.0].accession.as_str()).collect();
            Error::Structure(format!("is_a cycle: {}", names.join(" -> ")))
        })?;
        let mut topo_rank = vec![0; n];
        for (rank, t) in order.iter().enumerate() {
            topo_rank[t.0] = rank;
        }

        let mut ancestors: Vec<Vec<TermId>> = vec![Vec::new(); n];
        for &t in &order {
            let mut closure = vec![t];
            for p in &parents[t.0] {
                closure.extend_from_slice(&ancestors[p.0]);
            }
            closure.sort_unstable();
            closure.dedup();
            ancestors[t.0] = closure;
        }

        let mut descendant_count = vec![0usize; n];
        for closure in &ancestors {
            for a in closure {
                descendant_count[a.0] += 1;
            }
        }
        for d in &mut descendant_count {
            *d -= 1;
        }

        Ok(OntologyGraph {
            terms,
            lookup,
            parents,
            children,
            topo_rank,
            ancestors,
            descendant_count,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn term(&self, accession: &str) -> Result<TermId> {
        self.lookup
            .get(accession)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("unknown term {accession}")))
    }

    pub fn term_ids(&self) -> impl Iterator<Item = TermId> {
        (0..self.terms.len()).map(TermId)
    }

    pub fn accession(&self, t: TermId) -> &str {
        &self.terms[t.0].accession
    }

    pub fn name(&self, t: TermId) -> Option<&str> {
        self.terms[t.0].name.as_deref()
    }

    pub fn parents(&self, t: TermId) -> &[TermId] {
        &self.parents[t.0]
    }

    pub fn children(&self, t: TermId) -> &[TermId] {
        &self.children[t.0]
    }

    pub fn roots(&self) -> Vec<TermId> {
        self.term_ids().filter(|t| self.parents[t.0].is_empty()).collect()
    }

    /// Reflexive ancestor closure, ascending by id.
    pub fn ancestors(&self, t: TermId) -> &[TermId] {
        &self.ancestors[t.0]
    }

    pub fn is_ancestor(&self, ancestor: TermId, t: TermId) -> bool {
        self.ancestors[t.0].binary_search(&ancestor).is_ok()
    }

    /// Number of strict descendants.
    pub fn descendant_count(&self, t: TermId) -> usize {
        self.descendant_count[t.0]
    }

    pub(crate) fn check(&self, t: TermId) -> Result<()> {
        if t.0 < self.terms.len() {
            Ok(())
        } else {
            Err(Error::Lookup(format!(
                "term index {} outside ontology of {} terms",
                t.0,
                self.terms.len()
            )))
        }
    }

    /// Intersection of the two reflexive ancestor closures, ascending.
    pub fn common_ancestors(&self, a: TermId, b: TermId) -> Result<Vec<TermId>> {
        self.check(a)?;
        self.check(b)?;
        Ok(intersect_sorted(&self.ancestors[a.0], &self.ancestors[b.0]))
    }

    /// Number of distinct directed is-a paths from `descendant` up to
    /// `ancestor`; 1 for a term and itself, 0 if unrelated.
    pub fn path_counts(&self, ancestor: TermId, descendant: TermId) -> Result<u64> {
        self.check(ancestor)?;
        self.check(descendant)?;
        let closure = &self.ancestors[descendant.0];
        Ok(match closure.binary_search(&ancestor) {
            Ok(pos) => self.paths_to_ancestors(descendant)[pos],
            Err(_) => 0,
        })
    }

    /// Path counts from `t` to every term of `ancestors(t)`, aligned with
    /// that slice. Counts saturate at `u64::MAX`.
    pub fn paths_to_ancestors(&self, t: TermId) -> Vec<u64> {
        let closure = &self.ancestors[t.0];
        let mut counts = vec![0u64; closure.len()];
        let mut order: Vec<usize> = (0..closure.len()).collect();
        // Most specific first: every term is visited before its parents.
        order.sort_unstable_by_key(|&pos| std::cmp::Reverse(self.topo_rank[closure[pos].0]));
        let pos_of = |x: TermId| closure.binary_search(&x).expect("parent lies in closure");
        counts[pos_of(t)] = 1;
        for pos in order {
            let here = counts[pos];
            if here == 0 {
                continue;
            }
            for &p in &self.parents[closure[pos].0] {
                let slot = &mut counts[pos_of(p)];
                *slot = slot.saturating_add(here);
            }
        }
        counts
    }

    /// SHA-256 over the term list and is-a edges, hex encoded.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (term, parents) in self.terms.iter().zip(&self.parents) {
            hasher.update(term.accession.as_bytes());
            for p in parents {
                hasher.update(b"\t");
                hasher.update(self.terms[p.0].accession.as_bytes());
            }
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn intersect_sorted(a: &[TermId], b: &[TermId]) -> Vec<TermId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Kahn's algorithm, roots first. On failure returns the terms of one
/// cycle, closed (first == last).
fn topological_order(
    parents: &[Vec<TermId>],
    children: &[Vec<TermId>],
) -> std::result::Result<Vec<TermId>, Vec<TermId>> {
    let n = parents.len();
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut order: Vec<TermId> = (0..n).filter(|&t| pending[t] == 0).map(TermId).collect();
    let mut head = 0;
    while head < order.len() {
        let t = order[head];
        head += 1;
        for &c in &children[t.0] {
            pending[c.0] -= 1;
            if pending[c.0] == 0 {
                order.push(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every unplaced term has an unplaced parent, so walking parents from
    // any unplaced term must revisit one.
    let start = TermId((0..n).find(|&t| pending[t] > 0).expect("unplaced term"));
    let mut path = vec![start];
    let mut on_path = HashSet::from([start]);
    loop {
        let cur = *path.last().unwrap();
        let next = *parents[cur.0]
            .iter()
            .find(|p| pending[p.0] > 0)
            .expect("unplaced term has an unplaced parent");
        if !on_path.insert(next) {
            let from = path.iter().position(|&t| t == next).unwrap();
            let mut cycle = path.split_off(from);
            cycle.push(next);
            return Err(cycle);
        }
        path.push(next);
    }
}
