//! Hand-built token features that stand in for contextual encoder emissions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CrfError;
use crate::corpus::Token;
use crate::num::Float;

/// Sparse feature activations of one token.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F> {
    pub entries: Vec<(u32, F)>,
}

impl<F: Float> FeatureVector<F> {
    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_finite())
    }
}

const DEFAULT_GAZETTEER: &[&str] = &[
    "board",
    "census",
    "city",
    "clerk",
    "commission",
    "commissioner",
    "council",
    "county",
    "court",
    "department",
    "district",
    "judge",
    "legislature",
    "magistrate",
    "municipality",
    "officer",
    "population",
    "sheriff",
    "township",
];

/// Legal-entity word list. Tokens hit an entry when their crude lemma equals
/// it or starts with it (`counties` -> `county`, `countywide` -> `county`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub entries: Vec<String>,
}

impl Default for Gazetteer {
    fn default() -> Self {
        Gazetteer {
            entries: DEFAULT_GAZETTEER.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Gazetteer {
    pub fn from_toml_str(s: &str) -> Result<Self, toml::de::Error> {
        let mut g: Gazetteer = toml::from_str(s)?;
        for e in &mut g.entries {
            *e = e.to_lowercase();
        }
        Ok(g)
    }

    pub fn hits(&self, token: &str) -> Vec<&str> {
        let lemma = lemma(&token.to_lowercase());
        self.entries
            .iter()
            .filter(|e| lemma == **e || (e.chars().count() >= 4 && lemma.starts_with(e.as_str())))
            .map(String::as_str)
            .collect()
    }
}

/// Strips English plural endings. Expects lowercase input.
pub fn lemma(word: &str) -> String {
    if word.chars().count() > 4 {
        if let Some(stem) = word.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    if let Some(stem) = word.strip_suffix("es") {
        if ["s", "x", "z", "ch", "sh"].iter().any(|e| stem.ends_with(e)) {
            return stem.to_string();
        }
    }
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// Character-class shape with runs capped at two: `10` -> `dd`,
/// `County` -> `Xxx`, `§` -> `§`.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    let mut run = 0;
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if Some(class) == last {
            run += 1;
        } else {
            run = 1;
            last = Some(class);
        }
        if run <= 2 {
            out.push(class);
        }
    }
    out
}

/// Produces feature names per token. Deterministic: the same tokens always
/// give the same names in the same order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureExtractor {
    pub gazetteer: Gazetteer,
}

impl FeatureExtractor {
    pub fn new(gazetteer: Gazetteer) -> Self {
        FeatureExtractor { gazetteer }
    }

    pub fn extract(&self, tokens: &[Token]) -> Vec<Vec<String>> {
        let lower: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
        let at = |i: isize| -> &str {
            if i < 0 {
                "<s>"
            } else {
                lower.get(i as usize).map(String::as_str).unwrap_or("</s>")
            }
        };

        tokens
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                let w = &lower[i];
                let chars: Vec<char> = w.chars().collect();
                let mut f = vec!["bias".to_string(), format!("w={w}"), format!("shape={}", word_shape(&tok.surface))];
                for n in 1..=3.min(chars.len()) {
                    f.push(format!("p{n}={}", chars[..n].iter().collect::<String>()));
                    f.push(format!("s{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
                }
                if chars.iter().all(|c| c.is_numeric()) {
                    f.push("is_digit".into());
                }
                if chars.iter().all(|c| !c.is_alphanumeric()) {
                    f.push("is_punct".into());
                }
                if tok.surface.chars().next().is_some_and(char::is_uppercase) {
                    f.push("init_upper".into());
                }
                let i = i as isize;
                for off in [-2isize, -1, 1, 2] {
                    f.push(format!("w[{off:+}]={}", at(i + off)));
                }
                for hit in self.gazetteer.hits(&tok.surface) {
                    f.push(format!("gaz={hit}"));
                }
                f
            })
            .collect()
    }
}

/// Whether an encode call may add unseen features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabMode {
    Grow,
    /// Unknown features are skipped.
    Lookup,
}

/// Bijective feature-name <-> id map. Frozen once training finishes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVocab {
    ids: HashMap<String, u32>,
    names: Vec<String>,
    frozen: bool,
}

impl FeatureVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names(names: Vec<String>, frozen: bool) -> Result<Self, CrfError> {
        let mut ids = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if ids.insert(n.clone(), i as u32).is_some() {
                return Err(CrfError::Format(format!("duplicate feature name `{n}`")));
            }
        }
        Ok(FeatureVocab { ids, names, frozen })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn encode<F: Float>(&mut self, features: &[Vec<String>], mode: VocabMode) -> Result<Vec<FeatureVector<F>>, CrfError> {
        if mode == VocabMode::Grow && self.frozen {
            return Err(CrfError::VocabularyFrozen);
        }
        Ok(features
            .iter()
            .map(|names| {
                let entries = names
                    .iter()
                    .filter_map(|n| match (self.ids.get(n), mode) {
                        (Some(&id), _) => Some((id, F::one())),
                        (None, VocabMode::Grow) => {
                            let id = self.names.len() as u32;
                            self.ids.insert(n.clone(), id);
                            self.names.push(n.clone());
                            Some((id, F::one()))
                        }
                        (None, VocabMode::Lookup) => None,
                    })
                    .collect();
                FeatureVector { entries }
            })
            .collect())
    }

    /// Lookup-only encoding through a shared reference.
    pub fn lookup<F: Float>(&self, features: &[Vec<String>]) -> Vec<FeatureVector<F>> {
        features
            .iter()
            .map(|names| FeatureVector {
                entries: names.iter().filter_map(|n| self.id(n)).map(|id| (id, F::one())).collect(),
            })
            .collect()
    }
}
