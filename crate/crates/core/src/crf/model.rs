use crate::corpus::{bio_to_spans, tokenize, DiscourseSpan, TagSequence, NUM_TAGS};
use crate::num::Float;

use super::features::{FeatureExtractor, FeatureVector, FeatureVocab};
use super::inference::{forward_backward, viterbi, Marginals, Potentials};
use super::CrfError;

/// Linear-chain CRF over the 11 BIO tags.
///
/// Parameters are addressed by a flat index: emission weights
/// (`feature * 11 + tag`) first, then transitions (`from * 11 + to`), then
/// start and end scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel<F> {
    pub(crate) extractor: FeatureExtractor,
    pub(crate) vocab: FeatureVocab,
    pub(crate) emission: Vec<F>,
    pub(crate) transition: [[F; NUM_TAGS]; NUM_TAGS],
    pub(crate) start: [F; NUM_TAGS],
    pub(crate) end: [F; NUM_TAGS],
    pub(crate) forbid_invalid_bio: bool,
}

impl<F: Float> CrfModel<F> {
    /// All-zero weights over the given vocabulary.
    pub fn zeros(extractor: FeatureExtractor, vocab: FeatureVocab, forbid_invalid_bio: bool) -> Self {
        CrfModel {
            emission: vec![F::zero(); vocab.len() * NUM_TAGS],
            extractor,
            vocab,
            transition: [[F::zero(); NUM_TAGS]; NUM_TAGS],
            start: [F::zero(); NUM_TAGS],
            end: [F::zero(); NUM_TAGS],
            forbid_invalid_bio,
        }
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn vocab(&self) -> &FeatureVocab {
        &self.vocab
    }

    pub fn forbids_invalid_bio(&self) -> bool {
        self.forbid_invalid_bio
    }

    pub fn num_features(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_params(&self) -> usize {
        self.emission.len() + NUM_TAGS * NUM_TAGS + 2 * NUM_TAGS
    }

    pub fn emission_weight(&self, feature: usize, tag: usize) -> F {
        self.emission[feature * NUM_TAGS + tag]
    }

    pub fn transition_weights(&self) -> &[[F; NUM_TAGS]; NUM_TAGS] {
        &self.transition
    }

    pub fn param(&self, i: usize) -> F {
        let e = self.emission.len();
        let tt = NUM_TAGS * NUM_TAGS;
        if i < e {
            self.emission[i]
        } else if i < e + tt {
            let k = i - e;
            self.transition[k / NUM_TAGS][k % NUM_TAGS]
        } else if i < e + tt + NUM_TAGS {
            self.start[i - e - tt]
        } else {
            self.end[i - e - tt - NUM_TAGS]
        }
    }

    pub fn set_param(&mut self, i: usize, v: F) {
        let e = self.emission.len();
        let tt = NUM_TAGS * NUM_TAGS;
        if i < e {
            self.emission[i] = v;
        } else if i < e + tt {
            let k = i - e;
            self.transition[k / NUM_TAGS][k % NUM_TAGS] = v;
        } else if i < e + tt + NUM_TAGS {
            self.start[i - e - tt] = v;
        } else {
            self.end[i - e - tt - NUM_TAGS] = v;
        }
    }

    pub fn params(&self) -> impl Iterator<Item = F> + '_ {
        self.emission
            .iter()
            .copied()
            .chain(self.transition.iter().flatten().copied())
            .chain(self.start.iter().copied())
            .chain(self.end.iter().copied())
    }

    pub fn squared_norm(&self) -> F {
        self.params().map(|w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|w| w.is_finite())
    }

    /// Sequence potentials, with BIO constraints applied when the model forbids invalid sequences.
    pub fn potentials(&self) -> Potentials<F> {
        let pot = Potentials {
            transition: self.transition,
            start: self.start,
            end: self.end,
        };
        if self.forbid_invalid_bio {
            pot.with_bio_constraints()
        } else {
            pot
        }
    }

    pub fn emissions(&self, features: &[FeatureVector<F>]) -> Vec<[F; NUM_TAGS]> {
        features
            .iter()
            .map(|fv| {
                let mut row = [F::zero(); NUM_TAGS];
                for &(id, v) in &fv.entries {
                    let base = id as usize * NUM_TAGS;
                    for (y, r) in row.iter_mut().enumerate() {
                        *r = *r + v * self.emission[base + y];
                    }
                }
                row
            })
            .collect()
    }

    pub fn marginals(&self, features: &[FeatureVector<F>]) -> Result<Marginals<F>, CrfError> {
        forward_backward(&self.emissions(features), &self.potentials())
    }

    pub fn decode(&self, features: &[FeatureVector<F>]) -> Result<TagSequence, CrfError> {
        self.decode_emissions(&self.emissions(features))
    }

    /// Decodes an externally supplied emission matrix with this model's
    /// transition, start and end scores.
    pub fn decode_emissions(&self, emissions: &[[F; NUM_TAGS]]) -> Result<TagSequence, CrfError> {
        viterbi(emissions, &self.potentials()).map(|(tags, _)| tags)
    }

    /// Tokenize, featurize, decode and convert the tags back to spans.
    pub fn tag_paragraph(&self, text: &str) -> Vec<DiscourseSpan> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Vec::new();
        }
        let features = self.vocab.lookup(&self.extractor.extract(&tokens));
        let tags = self
            .decode(&features)
            .expect("non-empty sequence with finite weights always decodes");
        bio_to_spans(text, &tokens, &tags).expect("one tag per token")
    }
}
