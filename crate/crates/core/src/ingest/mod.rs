//! Raw statute sources to corpus documents.

mod census;
mod fetch;
pub mod fixture;
mod robots;
mod statute;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use census::{is_census_related, CensusKeywords};
pub use fetch::{fetch_with_retry, FetchPolicy, Fetcher, HostThrottle, RawDocument, USER_AGENT};
pub use robots::RobotsRules;
pub use statute::{html_to_text, parse_citation, parse_statute, parse_statute_with, render_statute, StatuteMeta};

use crate::corpus::LawDocument;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("{url}: gave up after {attempts} attempts (last: {last})")]
    ExhaustedRetries { url: String, attempts: u32, last: String },
    #[error("{0}: disallowed by robots.txt")]
    RobotsDisallowed(String),
    #[error("{url}: timed out on all {attempts} attempts")]
    Timeout { url: String, attempts: u32 },
    #[error("bad url {0}")]
    BadUrl(String),
    #[error("transport error: {0}")]
    Transport(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unparseable citation `{0}`")]
    UnparseableCitation(String),
    #[error("document `{0}` has no text")]
    EmptyDocument(String),
    #[error("invalid state code `{0}`")]
    InvalidState(String),
    #[error("invalid fetch policy: {0}")]
    InvalidPolicy(String),
    #[error("record {line_no}: {message}")]
    BadRecord { line_no: usize, message: String },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    Fetch(#[from] FetchError),
}

/// One line of an ingest manifest. Either `text` is given inline, or the
/// body is fetched from `source_url`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStatute {
    pub state: String,
    pub citation: String,
    #[serde(default)]
    pub heading: String,
    #[serde(default)]
    pub source_url: String,
    #[serde(default = "epoch")]
    pub retrieved_at: DateTime<Utc>,
    #[serde(default)]
    pub text: Option<String>,
}

fn epoch() -> DateTime<Utc> {
    DateTime::UNIX_EPOCH
}

/// Parses manifest records in order. Records without inline text need a
/// fetcher; fetched bodies are stripped of HTML and stamped with the fetch
/// time. Duplicate ids are an error.
pub fn ingest_records(
    records: &[RawStatute],
    fetcher: Option<&Fetcher>,
    keywords: &CensusKeywords,
) -> Result<Vec<LawDocument>, IngestError> {
    let mut seen = std::collections::HashSet::new();
    let mut docs = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let (body, retrieved_at) = match (&r.text, fetcher) {
            (Some(text), _) => (text.clone(), r.retrieved_at),
            (None, Some(f)) => {
                let raw = f.fetch(&r.source_url)?;
                if !(200..300).contains(&raw.status) {
                    return Err(IngestError::BadRecord {
                        line_no: i + 1,
                        message: format!("{} answered {}", raw.url, raw.status),
                    });
                }
                (html_to_text(&raw.body), raw.fetched_at)
            }
            (None, None) => {
                return Err(IngestError::BadRecord {
                    line_no: i + 1,
                    message: "no inline text and fetching is disabled".into(),
                })
            }
        };
        let meta = StatuteMeta {
            heading: r.heading.clone(),
            source_url: r.source_url.clone(),
            retrieved_at,
        };
        let doc = parse_statute_with(&body, &r.state, &r.citation, meta, keywords)?;
        if !seen.insert(doc.id.clone()) {
            return Err(IngestError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Re-flags paragraphs with `keywords` and keeps documents that have at
/// least one census-related paragraph.
pub fn filter_census(docs: Vec<LawDocument>, keywords: &CensusKeywords) -> Vec<LawDocument> {
    docs.into_iter()
        .filter_map(|mut d| {
            for p in &mut d.paragraphs {
                p.census_related = keywords.matches(&p.text);
            }
            d.is_census_related().then_some(d)
        })
        .collect()
}
