//! BIO encoding of non-overlapping spans over a tokenization.

use thiserror::Error;

use super::{char_slice, DiscourseSpan, Tag, TagSequence, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("span {index} [{start}, {end}) does not fall on token boundaries")]
    MisalignedSpan { index: usize, start: usize, end: usize },
    #[error("{tags} tags for {tokens} tokens")]
    LengthMismatch { tokens: usize, tags: usize },
}

/// Emitted when gold spans had to be repaired before encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnapWarning {
    Widened {
        index: usize,
        from: (usize, usize),
        to: (usize, usize),
    },
    /// The span covered no token at all (whitespace only).
    Dropped { index: usize },
}

/// Encodes spans as BIO tags. Spans must already be validated and must start
/// on a token start and end on a token end.
pub fn spans_to_bio(tokens: &[Token], spans: &[DiscourseSpan]) -> Result<TagSequence, CodecError> {
    let mut tags = vec![Tag::O; tokens.len()];
    for (index, span) in spans.iter().enumerate() {
        let misaligned = || CodecError::MisalignedSpan {
            index,
            start: span.start,
            end: span.end,
        };
        let first = tokens.iter().position(|t| t.start == span.start).ok_or_else(misaligned)?;
        let last = tokens.iter().position(|t| t.end == span.end).ok_or_else(misaligned)?;
        if last < first {
            return Err(misaligned());
        }
        tags[first] = Tag::B(span.label);
        for tag in &mut tags[first + 1..=last] {
            *tag = Tag::I(span.label);
        }
    }
    Ok(TagSequence(tags))
}

/// Decodes BIO tags back into spans over `text`.
///
/// Decoding is tolerant: an `I-L` that does not continue an `L` span opens a
/// new span as if it were `B-L`.
pub fn bio_to_spans(text: &str, tokens: &[Token], tags: &TagSequence) -> Result<Vec<DiscourseSpan>, CodecError> {
    if tokens.len() != tags.len() {
        return Err(CodecError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let mut spans = Vec::new();
    // (label, first token, last token)
    let mut open: Option<(super::DiscourseLabel, usize, usize)> = None;
    let close = |open: &mut Option<(super::DiscourseLabel, usize, usize)>, spans: &mut Vec<DiscourseSpan>| {
        if let Some((label, first, last)) = open.take() {
            let (start, end) = (tokens[first].start, tokens[last].end);
            spans.push(DiscourseSpan {
                start,
                end,
                label,
                text: char_slice(text, start, end).unwrap_or_default(),
            });
        }
    };

    for (i, &tag) in tags.tags().iter().enumerate() {
        match tag {
            Tag::O => close(&mut open, &mut spans),
            Tag::B(label) => {
                close(&mut open, &mut spans);
                open = Some((label, i, i));
            }
            Tag::I(label) => match open.as_mut() {
                Some((l, _, last)) if *l == label => *last = i,
                _ => {
                    close(&mut open, &mut spans);
                    open = Some((label, i, i));
                }
            },
        }
    }
    close(&mut open, &mut spans);
    Ok(spans)
}

/// Repairs human spans that cut through tokens by widening them outward to
/// the enclosing token boundaries. Spans that cover no token are dropped.
/// Each repair is logged and returned as a warning.
pub fn snap_spans_to_tokens(text: &str, tokens: &[Token], spans: &[DiscourseSpan]) -> (Vec<DiscourseSpan>, Vec<SnapWarning>) {
    let mut out = Vec::with_capacity(spans.len());
    let mut warnings = Vec::new();
    for (index, span) in spans.iter().enumerate() {
        let mut touched = tokens.iter().filter(|t| t.start < span.end && t.end > span.start);
        let Some(first) = touched.next() else {
            log::warn!("dropping span {index} [{}, {}): covers no token", span.start, span.end);
            warnings.push(SnapWarning::Dropped { index });
            continue;
        };
        let last = touched.next_back().unwrap_or(first);
        let (start, end) = (first.start.min(span.start), last.end.max(span.end));
        // whitespace at the edges is trimmed back to the token boundary
        let (start, end) = (start.max(first.start), end.min(last.end));
        if (start, end) != (span.start, span.end) {
            log::warn!(
                "span {index} [{}, {}) snapped to token boundaries [{start}, {end})",
                span.start,
                span.end
            );
            warnings.push(SnapWarning::Widened {
                index,
                from: (span.start, span.end),
                to: (start, end),
            });
        }
        out.push(DiscourseSpan {
            start,
            end,
            label: span.label,
            text: char_slice(text, start, end).unwrap_or_default(),
        });
    }
    (out, warnings)
}
