//! Statute text and citation parsing.

use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CensusKeywords, IngestError};
use crate::corpus::{Citation, LawDocument, Paragraph};

static SECTION_CITATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:§+|[Ss]ec(?:tion)?\.?)\s*([0-9]+[A-Za-z]*)\s*[-–]\s*([0-9]+[A-Za-z]*)\s*[-–]\s*([0-9]+(?:\.[0-9]+)*[A-Za-z]*)$")
        .expect("valid regex")
});

static BLANK_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\n[ \t\r\x0B\x0C]*\n").expect("valid regex"));

/// Parses `§ A-B-C` style citations into title, chapter and section.
pub fn parse_citation(raw: &str) -> Result<Citation, IngestError> {
    let caps = SECTION_CITATION
        .captures(raw.trim())
        .ok_or_else(|| IngestError::UnparseableCitation(raw.to_string()))?;
    Ok(Citation {
        raw: raw.to_string(),
        title: Some(caps[1].to_string()),
        chapter: Some(caps[2].to_string()),
        section: Some(caps[3].to_string()),
    })
}

/// Metadata that does not come from the statute body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatuteMeta {
    pub heading: String,
    pub source_url: String,
    pub retrieved_at: DateTime<Utc>,
}

impl Default for StatuteMeta {
    fn default() -> Self {
        StatuteMeta {
            heading: String::new(),
            source_url: String::new(),
            retrieved_at: DateTime::UNIX_EPOCH,
        }
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_state(state: &str) -> Result<String, IngestError> {
    let s = state.trim().to_ascii_uppercase();
    if s.len() == 2 && s.chars().all(|c| c.is_ascii_uppercase()) {
        Ok(s)
    } else {
        Err(IngestError::InvalidState(state.to_string()))
    }
}

/// Parses with default metadata and the default census keywords.
pub fn parse_statute(raw_text: &str, state: &str, citation_raw: &str) -> Result<LawDocument, IngestError> {
    parse_statute_with(raw_text, state, citation_raw, StatuteMeta::default(), &CensusKeywords::default())
}

/// Splits the body on blank lines into whitespace-normalized paragraphs and
/// flags census-related ones. An unparseable citation is kept raw with empty
/// numeral fields. The id is `STATE:citation_raw`.
pub fn parse_statute_with(
    raw_text: &str,
    state: &str,
    citation_raw: &str,
    meta: StatuteMeta,
    keywords: &CensusKeywords,
) -> Result<LawDocument, IngestError> {
    let state = normalize_state(state)?;
    let unified = raw_text.replace("\r\n", "\n");
    let paragraphs: Vec<Paragraph> = BLANK_LINE
        .split(&unified)
        .map(normalize_ws)
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(index, text)| Paragraph {
            index,
            census_related: keywords.matches(&text),
            text,
        })
        .collect();
    let id = format!("{state}:{citation_raw}");
    if paragraphs.is_empty() {
        return Err(IngestError::EmptyDocument(id));
    }
    let citation = parse_citation(citation_raw).unwrap_or_else(|e| {
        log::warn!("{id}: {e}; keeping raw citation");
        Citation::unparsed(citation_raw)
    });
    Ok(LawDocument {
        id,
        state,
        citation,
        heading: normalize_ws(&meta.heading),
        paragraphs,
        source_url: meta.source_url,
        retrieved_at: meta.retrieved_at,
    })
}

/// Inverse rendering: paragraphs separated by blank lines.
pub fn render_statute(doc: &LawDocument) -> String {
    doc.paragraphs.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join("\n\n")
}

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").expect("valid regex"));
static BLOCK_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)</(p|div|li|h[1-6])\s*>|<br\s*/?>").expect("valid regex"));
static SCRIPT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<(script|style)\b.*?</(script|style)\s*>").expect("valid regex"));

/// Crude HTML to text: block ends become blank lines, tags are dropped and
/// the common entities decoded.
pub fn html_to_text(html: &str) -> String {
    let s = SCRIPT.replace_all(html, "");
    let s = BLOCK_END.replace_all(&s, "\n\n");
    let s = TAG.replace_all(&s, "");
    s.replace("&nbsp;", " ")
        .replace("&sect;", "§")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}
