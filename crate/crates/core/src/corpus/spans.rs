use std::collections::BTreeSet;

use thiserror::Error;

use super::{DiscourseSpan, Relation};

/// Span validation failure. `index` is the span's position in the caller's
/// input list, before sorting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("span {index} [{start}, {end}) is out of bounds for text of length {len}")]
    OutOfBounds {
        index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("span {index}: stored text {stored:?} does not match text slice {actual:?}")]
    SliceMismatch { index: usize, stored: String, actual: String },
    #[error("span {index} overlaps span {other}")]
    Overlap { index: usize, other: usize },
}

impl SpanError {
    pub fn index(&self) -> usize {
        match self {
            SpanError::OutOfBounds { index, .. } | SpanError::SliceMismatch { index, .. } | SpanError::Overlap { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("relation {index} links span {span} to itself")]
    SelfRelation { index: usize, span: usize },
    #[error("relation {index} references span {span}, but only {count} spans exist")]
    UnknownSpan { index: usize, span: usize, count: usize },
    #[error("relation {index} is a duplicate")]
    Duplicate { index: usize },
}

/// `text[start..end]` in char offsets, `None` when out of range.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<String> {
    if start > end {
        return None;
    }
    let mut chars = text.chars();
    for _ in 0..start {
        chars.next()?;
    }
    let mut out = String::new();
    for _ in start..end {
        out.push(chars.next()?);
    }
    Some(out)
}

/// Checks bounds, slice agreement and pairwise non-overlap, returning the
/// spans sorted by start offset.
pub fn validate_spans(text: &str, spans: &[DiscourseSpan]) -> Result<Vec<DiscourseSpan>, SpanError> {
    let chars: Vec<char> = text.chars().collect();
    let len = chars.len();
    for (index, s) in spans.iter().enumerate() {
        if s.start >= s.end || s.end > len {
            return Err(SpanError::OutOfBounds {
                index,
                start: s.start,
                end: s.end,
                len,
            });
        }
        let actual: String = chars[s.start..s.end].iter().collect();
        if actual != s.text {
            return Err(SpanError::SliceMismatch {
                index,
                stored: s.text.clone(),
                actual,
            });
        }
    }

    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| (spans[i].start, spans[i].end, i));
    for w in order.windows(2) {
        let (a, b) = (&spans[w[0]], &spans[w[1]]);
        if b.start < a.end {
            return Err(SpanError::Overlap {
                index: w[0].max(w[1]),
                other: w[0].min(w[1]),
            });
        }
    }
    Ok(order.into_iter().map(|i| spans[i].clone()).collect())
}

/// Relations must join two distinct, existing spans; exact duplicates are rejected.
pub fn validate_relations(span_count: usize, relations: &[Relation]) -> Result<(), RelationError> {
    let mut seen = BTreeSet::new();
    for (index, r) in relations.iter().enumerate() {
        for span in [r.from_span, r.to_span] {
            if span >= span_count {
                return Err(RelationError::UnknownSpan {
                    index,
                    span,
                    count: span_count,
                });
            }
        }
        if r.from_span == r.to_span {
            return Err(RelationError::SelfRelation { index, span: r.from_span });
        }
        if !seen.insert((r.from_span, r.to_span, r.kind.as_str())) {
            return Err(RelationError::Duplicate { index });
        }
    }
    Ok(())
}
