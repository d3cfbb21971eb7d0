//! Linear-chain CRF span tagger over BIO tags.
//!
//! Emission scores come from a linear model over sparse hand features
//! ([`FeatureExtractor`]); any other emission source can be decoded through
//! [`CrfModel::decode_emissions`]. Inference is exact and runs in log space.

mod features;
mod format;
mod inference;
mod model;
mod objective;
mod train;

use thiserror::Error;

pub use features::{lemma, word_shape, FeatureExtractor, FeatureVector, FeatureVocab, Gazetteer, VocabMode};
pub use format::MODEL_MAGIC;
pub use inference::{forward_backward, viterbi, Emissions, Marginals, Potentials};
pub use model::CrfModel;
pub use objective::{log_likelihood, log_likelihood_and_gradient, Gradient};
pub use train::{token_accuracy, train, train_with, TrainConfig, TrainExample, TrainReport};

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("non-finite potentials or weights")]
    NonFinite,
    #[error("invalid gold sequence: {0}")]
    InvalidGold(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("feature vocabulary is frozen; growth is only allowed during training")]
    VocabularyFrozen,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
