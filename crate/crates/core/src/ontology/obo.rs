//! Minimal OBO 1.2/1.4 reader: `[Term]` stanzas with `id`, `name`, `is_a`
//! and `is_obsolete`. Other stanza types and tags are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::graph::{OntologyGraph, Term};
use crate::error::{Error, Result};

#[derive(Default)]
struct Stanza {
    line: usize,
    id: Option<String>,
    name: Option<String>,
    is_a: Vec<String>,
    obsolete: bool,
}

/// Strips a trailing `! comment` and returns the first token.
fn first_token(value: &str) -> &str {
    let value = value.split('!').next().unwrap_or("");
    value.split_whitespace().next().unwrap_or("")
}

pub fn parse_obo<R: BufRead>(source: R) -> Result<OntologyGraph> {
    let mut terms = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut current: Option<Stanza> = None;

    let mut flush = |stanza: Option<Stanza>| -> Result<()> {
        let Some(stanza) = stanza else { return Ok(()) };
        let id = stanza.id.ok_or_else(|| {
            Error::Structure(format!("[Term] stanza at line {} has no id", stanza.line))
        })?;
        if stanza.obsolete {
            return Ok(());
        }
        for parent in stanza.is_a {
            edges.push((id.clone(), parent));
        }
        terms.push(Term {
            accession: id,
            name: stanza.name,
        });
        Ok(())
    };

    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            flush(current.take())?;
            if line == "[Term]" {
                current = Some(Stanza {
                    line: n + 1,
                    ..Stanza::default()
                });
            }
            continue;
        }
        let Some(stanza) = current.as_mut() else { continue };
        let Some((tag, value)) = line.split_once(':') else { continue };
        let value = value.trim();
        match tag.trim() {
            "id" => stanza.id = Some(first_token(value).to_owned()),
            "name" => stanza.name = Some(value.to_owned()),
            "is_a" => {
                let target = first_token(value);
                if !target.is_empty() {
                    stanza.is_a.push(target.to_owned());
                }
            }
            "is_obsolete" => stanza.obsolete = first_token(value) == "true",
            _ => {}
        }
    }
    flush(current.take())?;

    if terms.is_empty() {
        return Err(Error::Structure("no non-obsolete [Term] stanzas found".into()));
    }
    OntologyGraph::build(terms, &edges)
}

/// Reads an OBO file, transparently decompressing gzip input.
pub fn parse_obo_path(path: &Path) -> Result<OntologyGraph> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let read = file.read(&mut magic)?;
    let file = File::open(path)?;
    if read == 2 && magic == [0x1f, 0x8b] {
        parse_obo(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        parse_obo(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) const TOY: &str = "\
format-version: 1.2
ontology: toy

[Term]
id: T:R
name: root

[Term]
id: T:A
name: a
is_a: T:R ! root

[Term]
id: T:B
is_a: T:R
relationship: part_of T:A

[Term]
id: T:A1
is_a: T:A {source=\"x\"} ! a

[Typedef]
id: part_of
is_a: T:nothing
";

    #[test]
    fn toy_file() {
        let g = parse_obo(TOY.as_bytes()).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.num_edges(), 3);
        let a1 = g.term("T:A1").unwrap();
        assert_eq!(g.accession(g.parents(a1)[0]), "T:A");
        assert_eq!(g.name(g.term("T:R").unwrap()), Some("root"));
    }

    #[test]
    fn obsolete_terms_are_dropped() {
        let text = format!("{TOY}\n[Term]\nid: T:OLD\nis_obsolete: true\n");
        let g = parse_obo(text.as_bytes()).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.term("T:OLD").is_err());
    }

    #[test]
    fn cycles_are_reported() {
        let text = "[Term]\nid: A\nis_a: B\n\n[Term]\nid: B\nis_a: A\n";
        match parse_obo(text.as_bytes()) {
            Err(Error::Structure(msg)) => assert!(msg.contains("cycle"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_parent_is_reported() {
        let text = "[Term]\nid: A\nis_a: MISSING\n";
        match parse_obo(text.as_bytes()) {
            Err(Error::Structure(msg)) => assert!(msg.contains("MISSING"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_ontology_is_rejected() {
        assert!(matches!(parse_obo("format-version: 1.2\n".as_bytes()), Err(Error::Structure(_))));
    }

    #[test]
    fn gzip_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.obo.gz");
        let mut enc = flate2::write::GzEncoder::new(
            File::create(&path).unwrap(),
            flate2::Compression::default(),
        );
        enc.write_all(TOY.as_bytes()).unwrap();
        enc.finish().unwrap();
        assert_eq!(parse_obo_path(&path).unwrap().len(), 4);
    }
}
