//! Discourse schema, documents, spans and the BIO codec shared by every
//! other module.
//!
//! All offsets are counted in Unicode scalar values (`char`s), never bytes,
//! so they agree with offsets computed in a browser.

mod codec;
mod io;
mod spans;
mod tokenize;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codec::{bio_to_spans, snap_spans_to_tokens, spans_to_bio, CodecError, SnapWarning};
pub use io::{load_corpus, read_corpus, write_corpus, write_corpus_to, CorpusIoError};
pub use spans::{char_slice, validate_relations, validate_spans, RelationError, SpanError};
pub use tokenize::tokenize;

/// The five discourse elements of the legal schema.
///
/// PROBE, SUBJECT and OBJECT are entities; TEST and CONSEQUENCE are verb
/// phrases. The ordinal (`index`) is part of the model file format and must
/// not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DiscourseLabel {
    Subject,
    Consequence,
    Object,
    Probe,
    Test,
}

impl DiscourseLabel {
    pub const ALL: [DiscourseLabel; 5] = [
        DiscourseLabel::Subject,
        DiscourseLabel::Consequence,
        DiscourseLabel::Object,
        DiscourseLabel::Probe,
        DiscourseLabel::Test,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiscourseLabel::Subject => "SUBJECT",
            DiscourseLabel::Consequence => "CONSEQUENCE",
            DiscourseLabel::Object => "OBJECT",
            DiscourseLabel::Probe => "PROBE",
            DiscourseLabel::Test => "TEST",
        }
    }
}

impl fmt::Display for DiscourseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown discourse label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for DiscourseLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// One BIO tag. There are `1 + 2 * 5 = 11` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(DiscourseLabel),
    I(DiscourseLabel),
}

pub const NUM_TAGS: usize = 11;

impl Tag {
    /// Tag vocabulary in index order: `O, B-SUBJECT, I-SUBJECT, B-CONSEQUENCE, ...`.
    pub const ALL: [Tag; NUM_TAGS] = [
        Tag::O,
        Tag::B(DiscourseLabel::Subject),
        Tag::I(DiscourseLabel::Subject),
        Tag::B(DiscourseLabel::Consequence),
        Tag::I(DiscourseLabel::Consequence),
        Tag::B(DiscourseLabel::Object),
        Tag::I(DiscourseLabel::Object),
        Tag::B(DiscourseLabel::Probe),
        Tag::I(DiscourseLabel::Probe),
        Tag::B(DiscourseLabel::Test),
        Tag::I(DiscourseLabel::Test),
    ];

    pub fn index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::B(l) => 1 + 2 * l.index(),
            Tag::I(l) => 2 + 2 * l.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> Option<DiscourseLabel> {
        match self {
            Tag::O => None,
            Tag::B(l) | Tag::I(l) => Some(l),
        }
    }

    /// Whether `next` may follow `prev` (`None` = sequence start) in a valid
    /// BIO sequence: `I-L` only continues `B-L` or `I-L`.
    pub fn transition_allowed(prev: Option<Tag>, next: Tag) -> bool {
        match next {
            Tag::I(l) => matches!(prev, Some(Tag::B(p)) | Some(Tag::I(p)) if p == l),
            _ => true,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(l) => write!(f, "B-{l}"),
            Tag::I(l) => write!(f, "I-{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown BIO tag `{0}`")]
pub struct UnknownTag(pub String);

impl FromStr for Tag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let err = || UnknownTag(s.to_string());
        let (prefix, label) = s.split_once('-').ok_or_else(err)?;
        let label: DiscourseLabel = label.parse().map_err(|_| err())?;
        match prefix {
            "B" => Ok(Tag::B(label)),
            "I" => Ok(Tag::I(label)),
            _ => Err(err()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSequence(pub Vec<Tag>);

impl TagSequence {
    pub fn all_outside(len: usize) -> Self {
        TagSequence(vec![Tag::O; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    /// True when no `I-L` follows `O`, the start, or a tag of another label.
    pub fn is_valid_bio(&self) -> bool {
        let mut prev = None;
        for &t in &self.0 {
            if !Tag::transition_allowed(prev, t) {
                return false;
            }
            prev = Some(t);
        }
        true
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|t| t.index()).collect()
    }
}

/// Structured citation. Numeral fields are `None` when `raw` did not parse.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Citation {
    pub raw: String,
    pub title: Option<String>,
    pub chapter: Option<String>,
    pub section: Option<String>,
}

impl Citation {
    pub fn unparsed(raw: impl Into<String>) -> Self {
        Citation {
            raw: raw.into(),
            ..Default::default()
        }
    }

    /// Natural ordering: numerals compare numerically, unparsed citations
    /// sort after parsed ones, and `raw` breaks ties.
    pub fn natural_cmp(&self, other: &Citation) -> Ordering {
        let key = |c: &Citation| [c.title.clone(), c.chapter.clone(), c.section.clone()];
        let (a, b) = (key(self), key(other));
        for (x, y) in a.iter().zip(b.iter()) {
            let ord = match (x, y) {
                (Some(x), Some(y)) => natural_str_cmp(x, y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        natural_str_cmp(&self.raw, &other.raw)
    }
}

/// Compares strings treating embedded digit runs as numbers ("9" < "10").
pub fn natural_str_cmp(a: &str, b: &str) -> Ordering {
    let mut ai = a.chars().peekable();
    let mut bi = b.chars().peekable();
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let take = |it: &mut std::iter::Peekable<std::str::Chars<'_>>| {
                    let mut s = String::new();
                    while let Some(c) = it.peek().copied().filter(char::is_ascii_digit) {
                        s.push(c);
                        it.next();
                    }
                    s
                };
                let (na, nb) = (take(&mut ai), take(&mut bi));
                let (ta, tb) = (na.trim_start_matches('0'), nb.trim_start_matches('0'));
                let ord = ta
                    .len()
                    .cmp(&tb.len())
                    .then_with(|| ta.cmp(tb))
                    .then_with(|| na.len().cmp(&nb.len()));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(&y);
                }
                ai.next();
                bi.next();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub text: String,
    pub census_related: bool,
}

/// One statute section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawDocument {
    pub id: String,
    pub state: String,
    pub citation: Citation,
    pub heading: String,
    pub paragraphs: Vec<Paragraph>,
    pub source_url: String,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("document `{0}` has no paragraphs")]
    NoParagraphs(String),
    #[error("document `{id}`: paragraph at position {position} has index {index}")]
    NonContiguousIndex { id: String, position: usize, index: usize },
    #[error("document `{id}`: paragraph {index} is blank")]
    BlankParagraph { id: String, index: usize },
    #[error("document has an empty id")]
    EmptyId,
}

impl LawDocument {
    pub fn check(&self) -> Result<(), DocumentError> {
        if self.id.is_empty() {
            return Err(DocumentError::EmptyId);
        }
        if self.paragraphs.is_empty() {
            return Err(DocumentError::NoParagraphs(self.id.clone()));
        }
        for (position, p) in self.paragraphs.iter().enumerate() {
            if p.index != position {
                return Err(DocumentError::NonContiguousIndex {
                    id: self.id.clone(),
                    position,
                    index: p.index,
                });
            }
            if p.text.trim().is_empty() {
                return Err(DocumentError::BlankParagraph {
                    id: self.id.clone(),
                    index: p.index,
                });
            }
        }
        Ok(())
    }

    pub fn paragraph(&self, index: usize) -> Option<&Paragraph> {
        self.paragraphs.get(index)
    }

    pub fn is_census_related(&self) -> bool {
        self.paragraphs.iter().any(|p| p.census_related)
    }
}

/// A labeled `[start, end)` character span within one paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscourseSpan {
    pub start: usize,
    pub end: usize,
    pub label: DiscourseLabel,
    pub text: String,
}

impl DiscourseSpan {
    /// Builds a span by slicing `text`; the caller still has to validate bounds.
    pub fn from_text(text: &str, start: usize, end: usize, label: DiscourseLabel) -> Self {
        DiscourseSpan {
            start,
            end,
            label,
            text: char_slice(text, start, end).unwrap_or_default(),
        }
    }
}

/// Directed relation between two spans of the same annotation. Stored and
/// transported only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub from_span: usize,
    pub to_span: usize,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_ordinals_are_stable() {
        let names: Vec<_> = DiscourseLabel::ALL.iter().map(|l| (l.index(), l.as_str())).collect();
        assert_eq!(
            names,
            vec![(0, "SUBJECT"), (1, "CONSEQUENCE"), (2, "OBJECT"), (3, "PROBE"), (4, "TEST")]
        );
        assert_eq!(serde_json::to_string(&DiscourseLabel::Probe).unwrap(), "\"PROBE\"");
        assert_eq!("test".parse::<DiscourseLabel>().unwrap(), DiscourseLabel::Test);
        assert!("FOO".parse::<DiscourseLabel>().is_err());
    }

    #[test]
    fn tag_index_round_trip() {
        for (i, t) in Tag::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(Tag::from_index(i), Some(*t));
            assert_eq!(t.to_string().parse::<Tag>().unwrap(), *t);
        }
        assert_eq!(Tag::from_index(NUM_TAGS), None);
        assert!("X-TEST".parse::<Tag>().is_err());
    }

    #[test]
    fn bio_validity() {
        use DiscourseLabel::*;
        assert!(TagSequence(vec![Tag::B(Test), Tag::I(Test), Tag::O]).is_valid_bio());
        assert!(!TagSequence(vec![Tag::I(Test)]).is_valid_bio());
        assert!(!TagSequence(vec![Tag::O, Tag::I(Test)]).is_valid_bio());
        assert!(!TagSequence(vec![Tag::B(Probe), Tag::I(Test)]).is_valid_bio());
    }

    #[test]
    fn citation_natural_order() {
        let c = |t: &str, ch: &str, s: &str| Citation {
            raw: format!("§ {t}-{ch}-{s}"),
            title: Some(t.into()),
            chapter: Some(ch.into()),
            section: Some(s.into()),
        };
        assert_eq!(c("9", "1", "1").natural_cmp(&c("10", "1", "1")), Ordering::Less);
        assert_eq!(c("36", "5", "402").natural_cmp(&c("36", "5", "41")), Ordering::Greater);
        assert_eq!(c("1", "1", "1").natural_cmp(&Citation::unparsed("Chapter 12")), Ordering::Less);
    }

    #[test]
    fn document_check() {
        let mut doc = LawDocument {
            id: "TN:x".into(),
            state: "TN".into(),
            citation: Citation::unparsed("x"),
            heading: String::new(),
            paragraphs: vec![Paragraph {
                index: 0,
                text: "a".into(),
                census_related: false,
            }],
            source_url: String::new(),
            retrieved_at: DateTime::UNIX_EPOCH,
        };
        assert!(doc.check().is_ok());
        doc.paragraphs[0].index = 1;
        assert!(matches!(doc.check(), Err(DocumentError::NonContiguousIndex { .. })));
        doc.paragraphs.clear();
        assert!(matches!(doc.check(), Err(DocumentError::NoParagraphs(_))));
    }
}
