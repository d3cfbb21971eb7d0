//! Tagged corpus files: one JSON object per line holding a law and its spans.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{validate_spans, CorpusIoError, DiscourseSpan, LawDocument};
use crate::crf::CrfModel;
use crate::num::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Model,
    Human,
}

/// A span located in one paragraph of a law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    pub paragraph: usize,
    #[serde(flatten)]
    pub span: DiscourseSpan,
    pub provenance: Provenance,
}

impl TaggedSpan {
    pub fn new(paragraph: usize, span: DiscourseSpan, provenance: Provenance) -> Self {
        TaggedSpan {
            paragraph,
            span,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedDocument {
    pub law: LawDocument,
    /// Ordered by (paragraph, start).
    pub spans: Vec<TaggedSpan>,
}

impl TaggedDocument {
    pub fn untagged(law: LawDocument) -> Self {
        TaggedDocument { law, spans: Vec::new() }
    }

    pub fn spans_in(&self, paragraph: usize) -> impl Iterator<Item = &TaggedSpan> {
        self.spans.iter().filter(move |s| s.paragraph == paragraph)
    }

    /// Replaces whatever spans `paragraph` had with human ones.
    pub fn set_human_spans(&mut self, paragraph: usize, spans: Vec<DiscourseSpan>) {
        self.spans.retain(|s| s.paragraph != paragraph);
        self.spans
            .extend(spans.into_iter().map(|s| TaggedSpan::new(paragraph, s, Provenance::Human)));
        self.spans.sort_by_key(|s| (s.paragraph, s.span.start));
    }

    /// Checks the law and that every span fits its paragraph without overlap.
    pub fn check(&self) -> Result<(), String> {
        self.law.check().map_err(|e| e.to_string())?;
        for p in &self.law.paragraphs {
            let spans: Vec<DiscourseSpan> = self.spans_in(p.index).map(|s| s.span.clone()).collect();
            validate_spans(&p.text, &spans).map_err(|e| format!("paragraph {}: {e}", p.index))?;
        }
        if let Some(s) = self.spans.iter().find(|s| self.law.paragraph(s.paragraph).is_none()) {
            return Err(format!("span refers to missing paragraph {}", s.paragraph));
        }
        Ok(())
    }
}

/// Runs the tagger over every paragraph.
pub fn tag_corpus<F: Float>(model: &CrfModel<F>, corpus: &[LawDocument]) -> Vec<TaggedDocument> {
    corpus
        .iter()
        .map(|law| {
            let spans = law
                .paragraphs
                .iter()
                .flat_map(|p| {
                    model
                        .tag_paragraph(&p.text)
                        .into_iter()
                        .map(move |s| TaggedSpan::new(p.index, s, Provenance::Model))
                })
                .collect();
            TaggedDocument { law: law.clone(), spans }
        })
        .collect()
}

pub fn write_tagged_to<W: Write>(mut w: W, docs: &[TaggedDocument]) -> Result<(), CorpusIoError> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tagged(path: impl AsRef<Path>, docs: &[TaggedDocument]) -> Result<(), CorpusIoError> {
    write_tagged_to(BufWriter::new(File::create(path)?), docs)
}

pub fn read_tagged<R: Read>(r: R) -> Result<Vec<TaggedDocument>, CorpusIoError> {
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: TaggedDocument = serde_json::from_str(&line).map_err(|e| CorpusIoError::MalformedLine {
            line_no,
            message: e.to_string(),
        })?;
        doc.check().map_err(|message| CorpusIoError::MalformedLine { line_no, message })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_tagged(path: impl AsRef<Path>) -> Result<Vec<TaggedDocument>, CorpusIoError> {
    read_tagged(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DiscourseLabel;
    use crate::ingest::parse_statute;

    #[test]
    fn round_trip_and_validation() {
        let law = parse_statute("The clerk shall file.", "TN", "§ 1-1-1").unwrap();
        let mut doc = TaggedDocument::untagged(law);
        let text = doc.law.paragraphs[0].text.clone();
        doc.set_human_spans(0, vec![DiscourseSpan::from_text(&text, 0, 9, DiscourseLabel::Subject)]);
        let mut buf = Vec::new();
        write_tagged_to(&mut buf, std::slice::from_ref(&doc)).unwrap();
        let line = String::from_utf8(buf.clone()).unwrap();
        assert!(line.contains("\"provenance\":\"human\""));
        assert_eq!(read_tagged(&buf[..]).unwrap(), vec![doc.clone()]);

        doc.spans[0].span.text = "wrong".into();
        let mut bad = Vec::new();
        write_tagged_to(&mut bad, &[doc]).unwrap();
        assert!(matches!(
            read_tagged(&bad[..]),
            Err(CorpusIoError::MalformedLine { line_no: 1, .. })
        ));
    }
}
