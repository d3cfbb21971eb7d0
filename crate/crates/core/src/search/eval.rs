use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Index, QueryAst};
use crate::corpus::tokenize;
use crate::num::Float;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Tokens of context on each side of the first match.
pub const SNIPPET_RADIUS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub offset: usize,
    pub limit: usize,
}

impl Page {
    pub fn all() -> Self {
        Page {
            offset: 0,
            limit: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
    pub snippet: String,
    pub matched_paragraphs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResults {
    /// Matched documents before pagination.
    pub total: usize,
    pub hits: Vec<SearchHit>,
    /// facet name → value → number of matched documents.
    pub facet_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

/// BM25 contribution of one term to one document.
///
/// `idf = ln(1 + (N - n + 0.5) / (n + 0.5))`, which stays positive even for
/// terms present in every document.
pub fn bm25_term<F: Float>(tf: F, df: F, doc_count: F, doc_len: F, avg_len: F) -> F {
    let k1 = F::from_f64_lossy(BM25_K1);
    let b = F::from_f64_lossy(BM25_B);
    let half = F::from_f64_lossy(0.5);
    if tf <= F::zero() {
        return F::zero();
    }
    let idf = (F::one() + (doc_count - df + half) / (df + half)).ln();
    let norm = if avg_len > F::zero() { doc_len / avg_len } else { F::one() };
    idf * tf * (k1 + F::one()) / (tf + k1 * (F::one() - b + b * norm))
}

/// Paragraph occurrences: (doc, paragraph) → token positions where a match starts.
type Occurrences = BTreeMap<(u32, u32), Vec<(u32, u32)>>;

fn term_occurrences(index: &Index, term: &str) -> Occurrences {
    index
        .postings(term)
        .iter()
        .map(|p| ((p.doc, p.paragraph), p.positions.iter().map(|&s| (s, s + 1)).collect()))
        .collect()
}

fn phrase_occurrences(index: &Index, words: &[String]) -> Occurrences {
    let Some(first) = words.first() else {
        return Occurrences::new();
    };
    let mut out = Occurrences::new();
    for p in index.postings(first) {
        let mut starts: Vec<u32> = p.positions.clone();
        for (k, w) in words.iter().enumerate().skip(1) {
            let Some(next) = index.postings(w).iter().find(|q| q.doc == p.doc && q.paragraph == p.paragraph) else {
                starts.clear();
                break;
            };
            starts.retain(|s| next.positions.binary_search(&(s + k as u32)).is_ok());
            if starts.is_empty() {
                break;
            }
        }
        if !starts.is_empty() {
            let len = words.len() as u32;
            out.insert((p.doc, p.paragraph), starts.into_iter().map(|s| (s, s + len)).collect());
        }
    }
    out
}

/// Matching documents plus the positive occurrences that justify them.
fn evaluate(index: &Index, q: &QueryAst, all: &BTreeSet<u32>) -> (BTreeSet<u32>, Occurrences) {
    match q {
        QueryAst::Term(t) => {
            let occ = term_occurrences(index, t);
            (occ.keys().map(|k| k.0).collect(), occ)
        }
        QueryAst::Phrase(ws) => {
            let occ = phrase_occurrences(index, ws);
            (occ.keys().map(|k| k.0).collect(), occ)
        }
        QueryAst::FacetFilter { name, value } => (index.facet_docs(name, value), Occurrences::new()),
        QueryAst::And(cs) => {
            let mut docs = all.clone();
            let mut occ = Occurrences::new();
            for c in cs {
                let (d, o) = evaluate(index, c, all);
                docs = docs.intersection(&d).copied().collect();
                merge(&mut occ, o);
            }
            occ.retain(|k, _| docs.contains(&k.0));
            (docs, occ)
        }
        QueryAst::Or(cs) => {
            let mut docs = BTreeSet::new();
            let mut occ = Occurrences::new();
            for c in cs {
                let (d, o) = evaluate(index, c, all);
                docs.extend(d);
                merge(&mut occ, o);
            }
            (docs, occ)
        }
    }
}

fn merge(into: &mut Occurrences, from: Occurrences) {
    for (k, mut v) in from {
        let e = into.entry(k).or_default();
        e.append(&mut v);
        e.sort_unstable();
        e.dedup();
    }
}

fn score(index: &Index, doc: u32, terms: &[String]) -> f64 {
    let n = index.doc_count() as f64;
    let len = index.doc_length(doc) as f64;
    terms
        .iter()
        .map(|t| {
            let postings = index.postings(t);
            let tf: usize = postings.iter().filter(|p| p.doc == doc).map(|p| p.term_frequency()).sum();
            let df = postings.iter().map(|p| p.doc).collect::<BTreeSet<_>>().len();
            bm25_term(tf as f64, df as f64, n, len, index.avg_doc_length())
        })
        .sum()
}

fn snippet(text: &str, spans: &[(u32, u32)]) -> String {
    let tokens = tokenize(text);
    let Some(&(first, _)) = spans.first() else {
        return String::new();
    };
    let from = (first as usize).saturating_sub(SNIPPET_RADIUS);
    let to = (first as usize + 1 + SNIPPET_RADIUS).min(tokens.len());
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    if from > 0 {
        out.push_str("... ");
    }
    for i in from..to {
        let t = &tokens[i];
        if i > from && tokens[i - 1].end < t.start {
            out.push(' ');
        }
        let i = i as u32;
        if spans.iter().any(|&(s, _)| s == i) {
            out.push('[');
        }
        out.extend(&chars[t.start..t.end]);
        if spans.iter().any(|&(_, e)| e == i + 1) {
            out.push(']');
        }
    }
    if to < tokens.len() {
        out.push_str(" ...");
    }
    out
}

/// Evaluates `q`, ranks by BM25 summed over the query's terms (score desc,
/// then doc id asc) and counts facets over every match before paginating.
pub fn search(index: &Index, q: &QueryAst, page: Page) -> SearchResults {
    let all: BTreeSet<u32> = (0..index.doc_count() as u32).collect();
    let (docs, occ) = evaluate(index, q, &all);
    let terms = q.scoring_terms();

    let mut facet_counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for (name, values) in index.facets() {
        for (value, holders) in values {
            let n = holders.intersection(&docs).count();
            if n > 0 {
                facet_counts.entry(name.clone()).or_default().insert(value.clone(), n);
            }
        }
    }

    let mut ranked: Vec<(f64, u32)> = docs.iter().map(|&d| (score(index, d, &terms), d)).collect();
    // doc positions follow id order, so the position breaks ties by id
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let total = ranked.len();
    let hits = ranked
        .into_iter()
        .skip(page.offset)
        .take(page.limit)
        .map(|(score, d)| {
            let doc = index.doc(d);
            let mine: Vec<(&(u32, u32), &Vec<(u32, u32)>)> = occ.range((d, 0)..=(d, u32::MAX)).collect();
            let matched_paragraphs = mine.iter().map(|(k, _)| k.1 as usize).collect();
            let snippet = match mine.first() {
                Some(((_, p), spans)) => snippet(&doc.paragraphs[*p as usize], spans),
                // facet-only match: lead of the first paragraph
                None => doc.paragraphs.first().map(|t| snippet_lead(t)).unwrap_or_default(),
            };
            SearchHit {
                doc_id: doc.id.clone(),
                score,
                snippet,
                matched_paragraphs,
            }
        })
        .collect();
    SearchResults { total, hits, facet_counts }
}

fn snippet_lead(text: &str) -> String {
    let tokens = tokenize(text);
    let to = tokens.len().min(2 * SNIPPET_RADIUS + 1);
    match to {
        0 => String::new(),
        _ => {
            let end = tokens[to - 1].end;
            let mut s: String = text.chars().take(end).collect();
            if to < tokens.len() {
                s.push_str(" ...");
            }
            s
        }
    }
}
