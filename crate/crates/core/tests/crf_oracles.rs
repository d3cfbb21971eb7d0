//! Checks CRF inference and the training gradient against brute force.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statelaw_core::corpus::{spans_to_bio, tokenize, DiscourseLabel, DiscourseSpan, Tag, TagSequence, NUM_TAGS};
use statelaw_core::crf::{
    forward_backward, log_likelihood_and_gradient, viterbi, CrfModel, FeatureExtractor, FeatureVocab, Potentials, VocabMode,
};

/// Independent path score: sums the lattice terms directly.
fn brute_score(e: &[[f64; NUM_TAGS]], pot: &Potentials<f64>, path: &[usize]) -> f64 {
    let mut s = pot.start[path[0]] + pot.end[*path.last().unwrap()];
    for (t, &y) in path.iter().enumerate() {
        s += e[t][y];
        if t > 0 {
            s += pot.transition[path[t - 1]][y];
        }
    }
    s
}

struct Brute {
    log_z: f64,
    unary: Vec<[f64; NUM_TAGS]>,
    pairwise: Vec<[[f64; NUM_TAGS]; NUM_TAGS]>,
    best: Vec<usize>,
    best_score: f64,
}

/// Enumerates all 11^L paths in lexicographic order; the first strict
/// maximum wins, which is the lexicographically smallest argmax.
fn enumerate(e: &[[f64; NUM_TAGS]], pot: &Potentials<f64>) -> Brute {
    let len = e.len();
    let mut path = vec![0usize; len];
    let mut scores = Vec::new();
    let mut paths = Vec::new();
    loop {
        scores.push(brute_score(e, pot, &path));
        paths.push(path.clone());
        let mut k = len;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            path[k] += 1;
            if path[k] < NUM_TAGS {
                break;
            }
            path[k] = 0;
            if k == 0 {
                k = usize::MAX;
                break;
            }
        }
        if k == usize::MAX {
            break;
        }
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_z = max + z.ln();
    let mut unary = vec![[0.0; NUM_TAGS]; len];
    let mut pairwise = vec![[[0.0; NUM_TAGS]; NUM_TAGS]; len.saturating_sub(1)];
    let mut best = paths[0].clone();
    let mut best_score = f64::NEG_INFINITY;
    for (p, s) in paths.iter().zip(&scores) {
        let prob = (s - log_z).exp();
        for t in 0..len {
            unary[t][p[t]] += prob;
            if t + 1 < len {
                pairwise[t][p[t]][p[t + 1]] += prob;
            }
        }
        if *s > best_score {
            best_score = *s;
            best = p.clone();
        }
    }
    Brute {
        log_z,
        unary,
        pairwise,
        best,
        best_score,
    }
}

fn random_instance(rng: &mut ChaCha8Rng, len: usize, constrained: bool) -> (Vec<[f64; NUM_TAGS]>, Potentials<f64>) {
    let mut e = vec![[0.0; NUM_TAGS]; len];
    for row in &mut e {
        for v in row.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
    }
    let mut pot = Potentials::zeros();
    for row in &mut pot.transition {
        for v in row.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
    }
    for y in 0..NUM_TAGS {
        pot.start[y] = rng.random_range(-1.0..1.0);
        pot.end[y] = rng.random_range(-1.0..1.0);
    }
    if constrained {
        pot = pot.with_bio_constraints();
    }
    (e, pot)
}

#[test]
fn inference_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let len = 1 + case % 4;
        let (e, pot) = random_instance(&mut rng, len, case % 2 == 1);
        let brute = enumerate(&e, &pot);
        let m = forward_backward(&e, &pot).unwrap();
        assert!((m.log_partition - brute.log_z).abs() < 1e-8, "case {case}");
        for t in 0..len {
            for y in 0..NUM_TAGS {
                assert!((m.unary[t][y] - brute.unary[t][y]).abs() < 1e-8);
            }
        }
        for t in 0..len - 1 {
            for x in 0..NUM_TAGS {
                for y in 0..NUM_TAGS {
                    assert!((m.pairwise[t][x][y] - brute.pairwise[t][x][y]).abs() < 1e-8);
                }
            }
        }
        let (tags, score) = viterbi(&e, &pot).unwrap();
        assert_eq!(tags.indices(), brute.best, "case {case}");
        assert!((score - brute.best_score).abs() < 1e-9);
    }
}

#[test]
fn marginals_are_normalized_and_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..50 {
        let len = 1 + case % 12;
        let (e, pot) = random_instance(&mut rng, len, case % 3 == 0);
        let m = forward_backward(&e, &pot).unwrap();
        for row in &m.unary {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for (t, pair) in m.pairwise.iter().enumerate() {
            for x in 0..NUM_TAGS {
                let row: f64 = pair[x].iter().sum();
                assert!((row - m.unary[t][x]).abs() < 1e-8);
                let col: f64 = (0..NUM_TAGS).map(|k| pair[k][x]).sum();
                assert!((col - m.unary[t + 1][x]).abs() < 1e-8);
            }
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng, text: &str, forbid: bool) -> (CrfModel<f64>, Vec<statelaw_core::crf::FeatureVector<f64>>) {
    let extractor = FeatureExtractor::default();
    let mut vocab = FeatureVocab::new();
    let feats = vocab.encode(&extractor.extract(&tokenize(text)), VocabMode::Grow).unwrap();
    vocab.freeze();
    let mut model = CrfModel::zeros(extractor, vocab, forbid);
    for i in 0..model.num_params() {
        model.set_param(i, rng.random_range(-0.5..0.5));
    }
    (model, feats)
}

fn random_gold(rng: &mut ChaCha8Rng, len: usize) -> TagSequence {
    let mut tags = Vec::with_capacity(len);
    let mut prev: Option<Tag> = None;
    for _ in 0..len {
        let t = loop {
            let cand = Tag::ALL[rng.random_range(0..NUM_TAGS)];
            if Tag::transition_allowed(prev, cand) {
                break cand;
            }
        };
        tags.push(t);
        prev = Some(t);
    }
    TagSequence(tags)
}

#[test]
fn gradient_matches_finite_differences() {
    let texts = [
        "the judge",
        "in counties having a population",
        "the clerk shall file",
        "above 10,000",
        "magistrates shall be selected",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 1e-5;
    for case in 0..20 {
        let text = texts[case % texts.len()];
        let (mut model, feats) = random_model(&mut rng, text, case % 2 == 0);
        let gold = random_gold(&mut rng, feats.len());
        let lambda = if case % 3 == 0 { 0.0 } else { 0.05 };
        let (_, grad) = log_likelihood_and_gradient(&model, &feats, &gold, lambda).unwrap();
        // every transition/start/end parameter plus a sample of emission weights
        let n = model.num_params();
        let coords: Vec<usize> = (0..n).filter(|i| *i >= n - 143 || i % 7 == case % 7).collect();
        for i in coords {
            let w = model.param(i);
            model.set_param(i, w + eps);
            let (up, _) = log_likelihood_and_gradient(&model, &feats, &gold, lambda).unwrap();
            model.set_param(i, w - eps);
            let (down, _) = log_likelihood_and_gradient(&model, &feats, &gold, lambda).unwrap();
            model.set_param(i, w);
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grad.get(i);
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            assert!(rel <= 1e-4, "case {case} param {i}: analytic {analytic} numeric {numeric}");
        }
    }
}

#[test]
fn saturated_gold_leaves_only_the_penalty() {
    let text = "the trial court judge";
    let tokens = tokenize(text);
    let gold = spans_to_bio(&tokens, &[DiscourseSpan::from_text(text, 0, 21, DiscourseLabel::Subject)]).unwrap();
    let extractor = FeatureExtractor::default();
    let mut vocab = FeatureVocab::new();
    let feats = vocab.encode(&extractor.extract(&tokens), VocabMode::Grow).unwrap();
    vocab.freeze();
    let mut model = CrfModel::<f64>::zeros(extractor, vocab, true);
    // "bias" is feature 0; make the gold tag at each position overwhelmingly likely
    for (t, tag) in gold.tags().iter().enumerate() {
        let w_feature = feats[t].entries[1].0 as usize;
        let idx = w_feature * NUM_TAGS + tag.index();
        model.set_param(idx, 60.0);
    }
    let lambda = 0.1;
    let (_, grad) = log_likelihood_and_gradient(&model, &feats, &gold, lambda).unwrap();
    for i in 0..model.num_params() {
        assert!((grad.get(i) + lambda * model.param(i)).abs() < 1e-12, "param {i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constrained_viterbi_is_always_valid_bio(
        rows in prop::collection::vec(prop::array::uniform11(-5.0f64..5.0), 1..20),
        trans in prop::array::uniform11(prop::array::uniform11(-5.0f64..5.0)),
    ) {
        let mut pot = Potentials::zeros();
        pot.transition = trans;
        let (tags, _) = viterbi(&rows, &pot.with_bio_constraints()).unwrap();
        prop_assert!(tags.is_valid_bio());
    }
}
