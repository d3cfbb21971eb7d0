//! Stochastic gradient ascent on the L2-regularized conditional log-likelihood.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{TagSequence, Token, NUM_TAGS};
use crate::num::Float;

use super::features::{FeatureExtractor, FeatureVector, FeatureVocab, VocabMode};
use super::inference::forward_backward;
use super::objective::{check_gold, visit_data_gradient};
use super::{CrfError, CrfModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub forbid_invalid_bio: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 0.01,
            learning_rate: 0.1,
            epochs: 25,
            seed: 0,
            forbid_invalid_bio: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        let bad = |m: &str| Err(CrfError::InvalidConfig(m.to_string()));
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be finite and >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and > 0");
        }
        if self.learning_rate * self.l2_lambda >= 1.0 {
            return bad("learning_rate * l2_lambda must be < 1");
        }
        Ok(())
    }
}

/// Per-epoch training objective: mean log-likelihood over the dataset minus
/// `(l2 / 2) * |w|^2`, measured after each epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub objective: Vec<f64>,
}

/// One training example: a tokenized paragraph and its gold tags.
pub type TrainExample = (Vec<Token>, TagSequence);

pub fn train<F: Float>(dataset: &[TrainExample], config: &TrainConfig) -> Result<(CrfModel<F>, TrainReport), CrfError> {
    train_with(FeatureExtractor::default(), dataset, config)
}

/// Trains a model from scratch. The feature vocabulary is built from the
/// dataset in order and frozen in the returned model. Identical inputs and
/// seed produce bitwise-identical weights.
pub fn train_with<F: Float>(
    extractor: FeatureExtractor,
    dataset: &[TrainExample],
    config: &TrainConfig,
) -> Result<(CrfModel<F>, TrainReport), CrfError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(CrfError::EmptyDataset);
    }

    let mut vocab = FeatureVocab::new();
    let mut examples: Vec<(Vec<FeatureVector<F>>, Vec<usize>)> = Vec::with_capacity(dataset.len());
    for (tokens, gold) in dataset {
        if tokens.is_empty() {
            continue;
        }
        let features = vocab.encode(&extractor.extract(tokens), VocabMode::Grow)?;
        check_gold(&features, gold)?;
        examples.push((features, gold.indices()));
    }
    if examples.is_empty() {
        return Err(CrfError::EmptyDataset);
    }
    vocab.freeze();

    let mut model = CrfModel::zeros(extractor, vocab, config.forbid_invalid_bio);
    let lr = F::from_f64_lossy(config.learning_rate);
    let l2 = F::from_f64_lossy(config.l2_lambda);
    let decay = F::one() - lr * l2;
    let e_len = model.emission.len();
    let dense_len = model.num_params() - e_len;

    // Emission weights are stored as `scale * raw` so the L2 shrink of each
    // step is O(1) instead of touching every weight.
    let mut raw = vec![F::zero(); e_len];
    let mut scale = F::one();
    let fold_below = F::from_f64_lossy(1e-3);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport::default();
    let mut dense_grad = vec![F::zero(); dense_len];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (features, gold) = &examples[i];
            let emissions = scaled_emissions(features, &raw, scale);
            let marg = forward_backward(&emissions, &model.potentials())?;

            dense_grad.iter_mut().for_each(|g| *g = F::zero());
            let step = lr / (scale * decay);
            let raw_ref = &mut raw;
            visit_data_gradient(&model, features, gold, &marg, |p, g| {
                if p < e_len {
                    raw_ref[p] = raw_ref[p] + step * g;
                } else {
                    dense_grad[p - e_len] = dense_grad[p - e_len] + g;
                }
            });
            scale = scale * decay;
            for (k, g) in dense_grad.iter().enumerate() {
                let p = e_len + k;
                let w = model.param(p);
                model.set_param(p, w + lr * (*g - l2 * w));
            }
            if scale < fold_below {
                raw.iter_mut().for_each(|w| *w = *w * scale);
                scale = F::one();
            }
        }
        fill_emission(&mut model, &raw, scale);
        report.objective.push(mean_objective(&model, &examples, l2)?.to_f64_lossy());
    }

    fill_emission(&mut model, &raw, scale);
    if !model.is_finite() {
        return Err(CrfError::NonFinite);
    }
    Ok((model, report))
}

fn scaled_emissions<F: Float>(features: &[FeatureVector<F>], raw: &[F], scale: F) -> Vec<[F; NUM_TAGS]> {
    features
        .iter()
        .map(|fv| {
            let mut row = [F::zero(); NUM_TAGS];
            for &(id, v) in &fv.entries {
                let base = id as usize * NUM_TAGS;
                for (y, r) in row.iter_mut().enumerate() {
                    *r = *r + v * raw[base + y];
                }
            }
            row.map(|r| r * scale)
        })
        .collect()
}

fn fill_emission<F: Float>(model: &mut CrfModel<F>, raw: &[F], scale: F) {
    for (w, r) in model.emission.iter_mut().zip(raw) {
        *w = *r * scale;
    }
}

fn mean_objective<F: Float>(model: &CrfModel<F>, examples: &[(Vec<FeatureVector<F>>, Vec<usize>)], l2: F) -> Result<F, CrfError> {
    let pot = model.potentials();
    let mut total = F::zero();
    for (features, gold) in examples {
        let emissions = model.emissions(features);
        let log_z = forward_backward(&emissions, &pot)?.log_partition;
        total = total + pot.path_score(&emissions, gold) - log_z;
    }
    let n = F::from_usize(examples.len()).unwrap_or_else(F::one);
    Ok(total / n - F::from_f64_lossy(0.5) * l2 * model.squared_norm())
}

/// Fraction of tokens whose decoded tag equals the gold tag.
pub fn token_accuracy<F: Float>(model: &CrfModel<F>, dataset: &[TrainExample]) -> f64 {
    let (mut correct, mut total) = (0usize, 0usize);
    for (tokens, gold) in dataset {
        if tokens.is_empty() {
            continue;
        }
        let features = model.vocab.lookup(&model.extractor.extract(tokens));
        let Ok(pred) = model.decode(&features) else { continue };
        correct += pred.0.iter().zip(gold.tags()).filter(|(a, b)| a == b).count();
        total += gold.len();
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{spans_to_bio, tokenize, DiscourseLabel::*, DiscourseSpan};

    fn example(text: &str, spans: &[(&str, crate::corpus::DiscourseLabel)]) -> TrainExample {
        let tokens = tokenize(text);
        let spans: Vec<_> = spans
            .iter()
            .map(|&(needle, l)| {
                let s = text[..text.find(needle).unwrap()].chars().count();
                DiscourseSpan::from_text(text, s, s + needle.chars().count(), l)
            })
            .collect();
        let tags = spans_to_bio(&tokens, &spans).unwrap();
        (tokens, tags)
    }

    #[test]
    fn empty_dataset() {
        assert!(matches!(train::<f64>(&[], &TrainConfig::default()), Err(CrfError::EmptyDataset)));
    }

    #[test]
    fn bad_config() {
        let ex = example("a b", &[]);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(train::<f64>(&[ex], &cfg), Err(CrfError::InvalidConfig(_))));
    }

    #[test]
    fn memorizes_one_example() {
        let ex = example(
            "the trial court judge shall adjudicate property disputes between claimants",
            &[
                ("the trial court judge", Subject),
                ("shall adjudicate property disputes between", Consequence),
                ("claimants", Object),
            ],
        );
        let (model, report) = train::<f64>(std::slice::from_ref(&ex), &TrainConfig::default()).unwrap();
        assert!(report.objective.last() > report.objective.first());
        let feats = model.vocab().lookup(&model.extractor().extract(&ex.0));
        assert_eq!(model.decode(&feats).unwrap(), ex.1);
        assert_eq!(token_accuracy(&model, &[ex]), 1.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = vec![
            example(
                "counties with a population above 10,000",
                &[("counties", Probe), ("with a population above 10,000", Test)],
            ),
            example("the clerk shall file", &[("the clerk", Subject), ("shall file", Consequence)]),
        ];
        let cfg = TrainConfig {
            epochs: 5,
            seed: 7,
            ..Default::default()
        };
        let (a, ra) = train::<f64>(&data, &cfg).unwrap();
        let (b, rb) = train::<f64>(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(a.vocab().is_frozen());
    }
}
