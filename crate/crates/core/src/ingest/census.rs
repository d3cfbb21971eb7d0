//! Keyword filter for laws that depend on census population counts.

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;

/// Census keyword rules. Loadable from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusKeywords {
    /// Word sequences that mark a paragraph as census-related on their own.
    pub phrases: Vec<String>,
    /// Max words between "according to the" and "census".
    pub according_to_window: usize,
    /// `(a, b)` pairs that match when within `proximity_window` words of each other.
    pub proximity_pairs: Vec<(String, String)>,
    pub proximity_window: usize,
}

impl Default for CensusKeywords {
    fn default() -> Self {
        CensusKeywords {
            phrases: vec!["federal census".into(), "census of".into(), "decennial census".into()],
            according_to_window: 8,
            proximity_pairs: vec![("population".into(), "census".into())],
            proximity_window: 5,
        }
    }
}

impl CensusKeywords {
    pub fn from_toml_str(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }

    /// Case-insensitive match over the word tokens of `text`. Punctuation
    /// does not count toward windows.
    pub fn matches(&self, text: &str) -> bool {
        let words: Vec<String> = tokenize(text)
            .into_iter()
            .filter(|t| t.surface.chars().any(char::is_alphanumeric))
            .map(|t| t.surface.to_lowercase())
            .collect();

        let contains_seq = |seq: &[&str]| !seq.is_empty() && words.windows(seq.len()).any(|w| w.iter().zip(seq).all(|(a, b)| a == b));
        for phrase in &self.phrases {
            let lower = phrase.to_lowercase();
            let seq: Vec<&str> = lower.split_whitespace().collect();
            if contains_seq(&seq) {
                return true;
            }
        }

        for (i, w) in words.windows(3).enumerate() {
            if w[0] == "according" && w[1] == "to" && w[2] == "the" {
                let from = i + 3;
                let to = (from + self.according_to_window + 1).min(words.len());
                if words[from..to].iter().any(|w| w == "census") {
                    return true;
                }
            }
        }

        for (a, b) in &self.proximity_pairs {
            let (a, b) = (a.to_lowercase(), b.to_lowercase());
            let pos_a: Vec<usize> = positions(&words, &a);
            let pos_b: Vec<usize> = positions(&words, &b);
            if pos_a
                .iter()
                .any(|&i| pos_b.iter().any(|&j| i.abs_diff(j) <= self.proximity_window && i != j))
            {
                return true;
            }
        }
        false
    }
}

fn positions(words: &[String], w: &str) -> Vec<usize> {
    words.iter().enumerate().filter(|(_, x)| x.as_str() == w).map(|(i, _)| i).collect()
}

/// Census filter with the default keyword set.
pub fn is_census_related(paragraph_text: &str) -> bool {
    CensusKeywords::default().matches(paragraph_text)
}
