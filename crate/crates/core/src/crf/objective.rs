use crate::corpus::{TagSequence, NUM_TAGS};
use crate::num::Float;

use super::features::FeatureVector;
use super::inference::{forward_backward, Marginals};
use super::{CrfError, CrfModel};

/// Dense gradient laid out like [`CrfModel::param`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<F>(pub Vec<F>);

impl<F: Float> Gradient<F> {
    pub fn get(&self, i: usize) -> F {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub(crate) fn check_gold<F: Float>(features: &[FeatureVector<F>], gold: &TagSequence) -> Result<(), CrfError> {
    if features.len() != gold.len() {
        return Err(CrfError::InvalidGold(format!("{} tags for {} tokens", gold.len(), features.len())));
    }
    if !gold.is_valid_bio() {
        return Err(CrfError::InvalidGold("gold sequence is not valid BIO".into()));
    }
    Ok(())
}

/// Visits the data part of the gradient (empirical minus expected counts)
/// as `(flat param index, value)` pairs. Emission entries are visited per
/// token, so an index may repeat.
pub(crate) fn visit_data_gradient<F: Float>(
    model: &CrfModel<F>,
    features: &[FeatureVector<F>],
    gold: &[usize],
    marg: &Marginals<F>,
    mut visit: impl FnMut(usize, F),
) {
    let e = model.emission.len();
    let tt = NUM_TAGS * NUM_TAGS;
    for (t, fv) in features.iter().enumerate() {
        for &(id, v) in &fv.entries {
            let base = id as usize * NUM_TAGS;
            for y in 0..NUM_TAGS {
                let empirical = if gold[t] == y { F::one() } else { F::zero() };
                visit(base + y, v * (empirical - marg.unary[t][y]));
            }
        }
    }
    for (t, pair) in marg.pairwise.iter().enumerate() {
        for x in 0..NUM_TAGS {
            for y in 0..NUM_TAGS {
                let empirical = if gold[t] == x && gold[t + 1] == y { F::one() } else { F::zero() };
                visit(e + x * NUM_TAGS + y, empirical - pair[x][y]);
            }
        }
    }
    let last = gold.len() - 1;
    for y in 0..NUM_TAGS {
        let s = if gold[0] == y { F::one() } else { F::zero() };
        visit(e + tt + y, s - marg.unary[0][y]);
        let en = if gold[last] == y { F::one() } else { F::zero() };
        visit(e + tt + NUM_TAGS + y, en - marg.unary[last][y]);
    }
}

/// Regularized conditional log-likelihood of one gold sequence:
/// `score(gold) - log Z - (l2 / 2) * |w|^2`, and its gradient
/// `empirical counts - expected counts - l2 * w`.
pub fn log_likelihood_and_gradient<F: Float>(
    model: &CrfModel<F>,
    features: &[FeatureVector<F>],
    gold: &TagSequence,
    l2_lambda: F,
) -> Result<(F, Gradient<F>), CrfError> {
    check_gold(features, gold)?;
    let emissions = model.emissions(features);
    let pot = model.potentials();
    let marg = forward_backward(&emissions, &pot)?;
    let gold_idx = gold.indices();
    let gold_score = pot.path_score(&emissions, &gold_idx);
    if !gold_score.is_finite() {
        return Err(CrfError::InvalidGold("gold path has zero probability under the model".into()));
    }
    let half = F::from_f64_lossy(0.5);
    let value = gold_score - marg.log_partition - half * l2_lambda * model.squared_norm();

    let mut grad: Vec<F> = model.params().map(|w| -l2_lambda * w).collect();
    visit_data_gradient(model, features, &gold_idx, &marg, |i, g| grad[i] = grad[i] + g);
    Ok((value, Gradient(grad)))
}

/// Objective value only, without the gradient.
pub fn log_likelihood<F: Float>(
    model: &CrfModel<F>,
    features: &[FeatureVector<F>],
    gold: &TagSequence,
    l2_lambda: F,
) -> Result<F, CrfError> {
    check_gold(features, gold)?;
    let emissions = model.emissions(features);
    let pot = model.potentials();
    let log_z = forward_backward(&emissions, &pot)?.log_partition;
    let half = F::from_f64_lossy(0.5);
    Ok(pot.path_score(&emissions, &gold.indices()) - log_z - half * l2_lambda * model.squared_norm())
}
