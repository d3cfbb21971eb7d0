//! Line-delimited JSON corpus files: one `LawDocument` per line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{DocumentError, LawDocument};

#[derive(Debug, Error)]
pub enum CorpusIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line_no}: malformed document: {message}")]
    MalformedLine { line_no: usize, message: String },
    #[error("line {line_no}: {source}")]
    InvalidDocument { line_no: usize, source: DocumentError },
}

pub fn write_corpus_to<W: Write>(mut w: W, docs: &[LawDocument]) -> Result<(), CorpusIoError> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[LawDocument]) -> Result<(), CorpusIoError> {
    write_corpus_to(BufWriter::new(File::create(path)?), docs)
}

/// Reads documents, skipping blank lines. Line numbers in errors are 1-based.
pub fn read_corpus<R: Read>(r: R) -> Result<Vec<LawDocument>, CorpusIoError> {
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: LawDocument = serde_json::from_str(&line).map_err(|e| CorpusIoError::MalformedLine {
            line_no,
            message: e.to_string(),
        })?;
        doc.check().map_err(|source| CorpusIoError::InvalidDocument { line_no, source })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<LawDocument>, CorpusIoError> {
    read_corpus(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Citation, Paragraph};
    use chrono::{TimeZone, Utc};

    fn doc(id: &str) -> LawDocument {
        LawDocument {
            id: id.into(),
            state: "TN".into(),
            citation: Citation {
                raw: "§ 36-5-402".into(),
                title: Some("36".into()),
                chapter: Some("5".into()),
                section: Some("402".into()),
            },
            heading: "Magistrates".into(),
            paragraphs: vec![
                Paragraph {
                    index: 0,
                    text: "first".into(),
                    census_related: false,
                },
                Paragraph {
                    index: 1,
                    text: "according to the 1990 federal census".into(),
                    census_related: true,
                },
            ],
            source_url: "fixture://tn/36-5-402".into(),
            retrieved_at: Utc.with_ymd_and_hms(2020, 6, 1, 12, 0, 0).unwrap(),
        }
    }

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_corpus_to(&mut buf, &[]).unwrap();
        assert!(buf.is_empty());
        assert!(read_corpus(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn two_documents_round_trip() {
        let docs = vec![doc("TN:a"), doc("TN:b")];
        let mut buf = Vec::new();
        write_corpus_to(&mut buf, &docs).unwrap();
        assert_eq!(read_corpus(&buf[..]).unwrap(), docs);
    }

    #[test]
    fn field_names_are_fixed() {
        let v = serde_json::to_value(doc("TN:a")).unwrap();
        for key in ["id", "state", "citation", "heading", "paragraphs", "source_url", "retrieved_at"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in ["raw", "title", "chapter", "section"] {
            assert!(v["citation"].get(key).is_some(), "missing citation.{key}");
        }
        for key in ["index", "text", "census_related"] {
            assert!(v["paragraphs"][0].get(key).is_some(), "missing paragraph.{key}");
        }
    }

    #[test]
    fn corrupted_line_is_reported() {
        let mut buf = Vec::new();
        write_corpus_to(&mut buf, &[doc("TN:a")]).unwrap();
        buf.extend_from_slice(b"{\"id\": \"broken\"\n");
        match read_corpus(&buf[..]) {
            Err(CorpusIoError::MalformedLine { line_no, .. }) => assert_eq!(line_no, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
