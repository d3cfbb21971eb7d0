//! Corpus-wide span aggregation and population-threshold analysis.

mod tagged;
mod threshold;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tagged::{load_tagged, read_tagged, tag_corpus, write_tagged, write_tagged_to, Provenance, TaggedDocument, TaggedSpan};
pub use threshold::{extract_population_threshold, parse_numeral, PopulationInterval};

use crate::corpus::DiscourseLabel;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no {label} span group `{key}`")]
    UnknownGroup { label: DiscourseLabel, key: String },
}

/// Identical spans (after normalization) across the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanGroup {
    pub label: DiscourseLabel,
    pub normalized_text: String,
    pub count: usize,
    pub law_ids: BTreeSet<String>,
}

/// Lowercase and collapse runs of whitespace.
pub fn normalize_span_text(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Groups every `label` span by normalized text; most frequent first, ties
/// by text.
pub fn aggregate_spans(corpus: &[TaggedDocument], label: DiscourseLabel) -> Vec<SpanGroup> {
    let mut groups: BTreeMap<String, (usize, BTreeSet<String>)> = BTreeMap::new();
    for doc in corpus {
        for s in doc.spans.iter().filter(|s| s.span.label == label) {
            let g = groups.entry(normalize_span_text(&s.span.text)).or_default();
            g.0 += 1;
            g.1.insert(doc.law.id.clone());
        }
    }
    let mut out: Vec<SpanGroup> = groups
        .into_iter()
        .map(|(normalized_text, (count, law_ids))| SpanGroup {
            label,
            normalized_text,
            count,
            law_ids,
        })
        .collect();
    // the map already ordered by text, and the sort is stable
    out.sort_by_key(|g| std::cmp::Reverse(g.count));
    out
}

/// Laws using the span group `(label, key)`, ordered by citation. `key` is
/// normalized before lookup.
pub fn laws_for_span<'a>(
    corpus: &'a [TaggedDocument],
    label: DiscourseLabel,
    key: &str,
) -> Result<Vec<&'a TaggedDocument>, AnalyticsError> {
    let key = normalize_span_text(key);
    let mut laws: Vec<&TaggedDocument> = corpus
        .iter()
        .filter(|d| {
            d.spans
                .iter()
                .any(|s| s.span.label == label && normalize_span_text(&s.span.text) == key)
        })
        .collect();
    if key.is_empty() || laws.is_empty() {
        return Err(AnalyticsError::UnknownGroup { label, key });
    }
    laws.sort_by(|a, b| a.law.citation.natural_cmp(&b.law.citation).then_with(|| a.law.id.cmp(&b.law.id)));
    Ok(laws)
}

/// Population intervals found in the TEST spans of one law.
pub fn law_thresholds(doc: &TaggedDocument) -> Vec<PopulationInterval> {
    doc.spans
        .iter()
        .filter(|s| s.span.label == DiscourseLabel::Test && mentions_population(&s.span.text))
        .flat_map(|s| extract_population_threshold(&s.span.text))
        .collect()
}

/// Tests that bound something other than a head count (alcohol content,
/// acreage) carry numbers too; only spans naming the population count.
fn mentions_population(text: &str) -> bool {
    let t = text.to_lowercase();
    ["population", "inhabitant", "census"].iter().any(|cue| t.contains(cue))
}

pub const DEFAULT_WIDTHS: [u64; 2] = [100, 500];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub state: Option<String>,
    pub laws_considered: usize,
    /// Laws with at least one interval of any kind.
    pub laws_with_threshold: usize,
    /// Laws with at least one two-sided interval; the denominator below.
    pub total_with_bounded_interval: usize,
    /// width `w` → fraction of those laws whose narrowest interval is
    /// narrower than `w`.
    pub frac_width_lt: BTreeMap<u64, f64>,
}

impl ThresholdReport {
    pub fn frac_lt(&self, width: u64) -> Option<f64> {
        self.frac_width_lt.get(&width).copied()
    }

    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "state                        {}\n",
            self.state.as_deref().unwrap_or("all")
        ));
        s.push_str(&format!("laws considered              {}\n", self.laws_considered));
        s.push_str(&format!("laws with a threshold        {}\n", self.laws_with_threshold));
        s.push_str(&format!("laws with a bounded interval {}\n", self.total_with_bounded_interval));
        for (w, f) in &self.frac_width_lt {
            s.push_str(&format!("narrowest width < {w:<10} {f:.4}\n"));
        }
        s
    }
}

pub fn threshold_width_report(corpus: &[TaggedDocument], state: Option<&str>) -> ThresholdReport {
    threshold_width_report_with(corpus, state, &DEFAULT_WIDTHS)
}

pub fn threshold_width_report_with(corpus: &[TaggedDocument], state: Option<&str>, widths: &[u64]) -> ThresholdReport {
    let mut considered = 0;
    let mut with_threshold = 0;
    let mut narrowest = Vec::new();
    for doc in corpus {
        if state.is_some_and(|s| !doc.law.state.eq_ignore_ascii_case(s)) {
            continue;
        }
        considered += 1;
        let found = law_thresholds(doc);
        if !found.is_empty() {
            with_threshold += 1;
        }
        if let Some(w) = found.iter().filter_map(PopulationInterval::width).min() {
            narrowest.push(w);
        }
    }
    let total = narrowest.len();
    let frac_width_lt = widths
        .iter()
        .map(|&w| {
            let below = narrowest.iter().filter(|&&n| n < w).count();
            let f = if total == 0 { 0.0 } else { below as f64 / total as f64 };
            (w, f)
        })
        .collect();
    ThresholdReport {
        state: state.map(str::to_uppercase),
        laws_considered: considered,
        laws_with_threshold: with_threshold,
        total_with_bounded_interval: total,
        frac_width_lt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_statute;

    fn tagged(citation: &str, state: &str, text: &str, spans: &[(&str, DiscourseLabel)]) -> TaggedDocument {
        let law = parse_statute(text, state, citation).unwrap();
        let spans = spans
            .iter()
            .map(|(needle, label)| {
                let byte = text.find(needle).unwrap();
                let start = text[..byte].chars().count();
                TaggedSpan::new(
                    0,
                    crate::corpus::DiscourseSpan::from_text(text, start, start + needle.chars().count(), *label),
                    Provenance::Human,
                )
            })
            .collect();
        TaggedDocument { law, spans }
    }

    use DiscourseLabel::*;

    #[test]
    fn groups_normalize_and_count() {
        let corpus = vec![
            tagged(
                "§ 10-1-1",
                "TN",
                "The  Trial Court Judge shall sit.",
                &[("The  Trial Court Judge", Subject)],
            ),
            tagged(
                "§ 9-1-1",
                "TN",
                "the trial court judge may act.",
                &[("the trial court judge", Subject)],
            ),
            tagged(
                "§ 1-1-1",
                "NY",
                "The clerk shall file.",
                &[("The clerk", Subject), ("file", Consequence)],
            ),
        ];
        let groups = aggregate_spans(&corpus, Subject);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].normalized_text, "the trial court judge");
        assert_eq!(groups[0].count, 2);
        assert_eq!(groups[0].law_ids.len(), 2);
        assert_eq!(groups.iter().map(|g| g.count).sum::<usize>(), 3);

        let laws = laws_for_span(&corpus, Subject, "The Trial   Court judge").unwrap();
        let cites: Vec<&str> = laws.iter().map(|d| d.law.citation.raw.as_str()).collect();
        assert_eq!(cites, vec!["§ 9-1-1", "§ 10-1-1"]);
        assert!(matches!(
            laws_for_span(&corpus, Subject, ""),
            Err(AnalyticsError::UnknownGroup { .. })
        ));
        assert!(matches!(
            laws_for_span(&corpus, Test, "the clerk"),
            Err(AnalyticsError::UnknownGroup { .. })
        ));
        assert!(aggregate_spans(&[], Subject).is_empty());
    }

    #[test]
    fn report_over_single_bounded_law() {
        let text = "in counties having a population of not less than three hundred thirty-five thousand (335,000) \
                    nor more than three hundred thirty-six thousand (336,000), according to the 1990 federal census";
        let corpus = vec![tagged("§ 36-5-402", "TN", text, &[(text, Test)])];
        let r = threshold_width_report(&corpus, None);
        assert_eq!(r.total_with_bounded_interval, 1);
        assert_eq!(r.frac_lt(500), Some(0.0));
        assert_eq!(r.frac_lt(100), Some(0.0));
        assert_eq!(threshold_width_report(&corpus, Some("ny")).laws_considered, 0);
        let empty = threshold_width_report(&[], None);
        assert_eq!(empty.total_with_bounded_interval, 0);
        assert_eq!(empty.frac_lt(500), Some(0.0));
    }

    #[test]
    fn non_population_tests_are_ignored() {
        let text = "beverages containing not more than eight percent (8%) alcohol in a county with a population above 10,000";
        let doc = tagged(
            "§ 57-5-101",
            "TN",
            text,
            &[
                ("not more than eight percent (8%) alcohol", Test),
                ("with a population above 10,000", Test),
            ],
        );
        let found: Vec<_> = law_thresholds(&doc).iter().map(|i| (i.lower, i.upper)).collect();
        assert_eq!(found, vec![(Some(10_000), None)]);
    }
}
