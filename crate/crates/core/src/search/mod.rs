//! Inverted index over corpus paragraphs with boolean/phrase queries, BM25
//! ranking and facet counts.

mod eval;
mod query;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{bm25_term, search, Page, SearchHit, SearchResults, BM25_B, BM25_K1, SNIPPET_RADIUS};
pub use query::{parse_query, QueryAst, QueryError};

use crate::corpus::{tokenize, LawDocument};

pub const INDEX_HEADER: &str = "SIDX1";

pub const FACET_STATE: &str = "state";
pub const FACET_CENSUS: &str = "census_related";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Occurrences of one term in one paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`Index::docs`] (which is sorted by id).
    pub doc: u32,
    pub paragraph: u32,
    /// Token positions within the paragraph; `positions.len()` is the term frequency.
    pub positions: Vec<u32>,
}

impl Posting {
    pub fn term_frequency(&self) -> usize {
        self.positions.len()
    }
}

/// What the index keeps of each document: enough for hits and snippets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedDoc {
    pub id: String,
    pub state: String,
    pub citation: String,
    pub heading: String,
    pub paragraphs: Vec<String>,
    pub census_related: bool,
}

/// Immutable after [`Index::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    docs: Vec<IndexedDoc>,
    postings: BTreeMap<String, Vec<Posting>>,
    /// Token count per document.
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    facets: BTreeMap<String, BTreeMap<String, BTreeSet<u32>>>,
}

impl Index {
    /// Indexes every lowercased token of every paragraph. Facets: `state`
    /// and `census_related` (`"true"`/`"false"`).
    pub fn build(corpus: &[LawDocument]) -> Result<Self, IndexError> {
        let mut sorted: Vec<&LawDocument> = corpus.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        for w in sorted.windows(2) {
            if w[0].id == w[1].id {
                return Err(IndexError::DuplicateDocId(w[0].id.clone()));
            }
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(sorted.len());
        let mut facets: BTreeMap<String, BTreeMap<String, BTreeSet<u32>>> = BTreeMap::new();
        let mut docs = Vec::with_capacity(sorted.len());

        for (d, doc) in sorted.iter().enumerate() {
            let d = d as u32;
            let mut length = 0u32;
            for p in &doc.paragraphs {
                let mut local: BTreeMap<String, Vec<u32>> = BTreeMap::new();
                for (pos, tok) in tokenize(&p.text).iter().enumerate() {
                    local.entry(tok.surface.to_lowercase()).or_default().push(pos as u32);
                    length += 1;
                }
                for (term, positions) in local {
                    postings.entry(term).or_default().push(Posting {
                        doc: d,
                        paragraph: p.index as u32,
                        positions,
                    });
                }
            }
            doc_lengths.push(length);
            let census = doc.is_census_related();
            facets
                .entry(FACET_STATE.into())
                .or_default()
                .entry(doc.state.clone())
                .or_default()
                .insert(d);
            facets
                .entry(FACET_CENSUS.into())
                .or_default()
                .entry(census.to_string())
                .or_default()
                .insert(d);
            docs.push(IndexedDoc {
                id: doc.id.clone(),
                state: doc.state.clone(),
                citation: doc.citation.raw.clone(),
                heading: doc.heading.clone(),
                paragraphs: doc.paragraphs.iter().map(|p| p.text.clone()).collect(),
                census_related: census,
            });
        }

        // documents are visited in id order and paragraphs in index order,
        // so every postings list is already sorted by (doc, paragraph)
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = if docs.is_empty() {
            0.0
        } else {
            (total as f64 / docs.len() as f64).max(1.0)
        };
        Ok(Index {
            docs,
            postings,
            doc_lengths,
            avg_doc_length,
            facets,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn doc(&self, d: u32) -> &IndexedDoc {
        &self.docs[d as usize]
    }

    pub fn doc_length(&self, d: u32) -> u32 {
        self.doc_lengths[d as usize]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Document positions carrying `value` for facet `name`; values compare
    /// ASCII case-insensitively.
    pub fn facet_docs(&self, name: &str, value: &str) -> BTreeSet<u32> {
        self.facets
            .get(name)
            .into_iter()
            .flat_map(|values| values.iter())
            .filter(|(v, _)| v.eq_ignore_ascii_case(value))
            .flat_map(|(_, docs)| docs.iter().copied())
            .collect()
    }

    pub fn facets(&self) -> &BTreeMap<String, BTreeMap<String, BTreeSet<u32>>> {
        &self.facets
    }

    /// `SIDX1` header line followed by the index as one JSON document.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        writeln!(w, "{INDEX_HEADER}")?;
        serde_json::to_writer(&mut w, self).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, IndexError> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        if header.trim_end() != INDEX_HEADER {
            return Err(IndexError::Format(format!(
                "expected header {INDEX_HEADER}, found {:?}",
                header.trim_end()
            )));
        }
        let index: Index = serde_json::from_reader(reader).map_err(|e| IndexError::Format(e.to_string()))?;
        if index.doc_lengths.len() != index.docs.len() {
            return Err(IndexError::Format("document length table does not match documents".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(File::open(path)?)
    }
}
