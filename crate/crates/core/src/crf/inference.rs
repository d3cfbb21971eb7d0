//! Exact linear-chain inference in log space.

use crate::corpus::{Tag, TagSequence, NUM_TAGS};
use crate::num::{log_sum_exp, Float};

use super::CrfError;

/// Per-token emission scores, one row of 11 tag scores per token.
pub type Emissions<F> = [[F; NUM_TAGS]];

/// Sequence-level potentials: `transition[from][to]`, plus start and end
/// scores. Forbidden transitions are `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials<F> {
    pub transition: [[F; NUM_TAGS]; NUM_TAGS],
    pub start: [F; NUM_TAGS],
    pub end: [F; NUM_TAGS],
}

impl<F: Float> Potentials<F> {
    pub fn zeros() -> Self {
        Potentials {
            transition: [[F::zero(); NUM_TAGS]; NUM_TAGS],
            start: [F::zero(); NUM_TAGS],
            end: [F::zero(); NUM_TAGS],
        }
    }

    /// Sets every BIO-invalid transition (and `start -> I-*`) to `-inf`.
    pub fn with_bio_constraints(mut self) -> Self {
        for (j, &next) in Tag::ALL.iter().enumerate() {
            if !Tag::transition_allowed(None, next) {
                self.start[j] = F::neg_infinity();
            }
            for (i, &prev) in Tag::ALL.iter().enumerate() {
                if !Tag::transition_allowed(Some(prev), next) {
                    self.transition[i][j] = F::neg_infinity();
                }
            }
        }
        self
    }

    /// Unnormalized log score of one tag path.
    pub fn path_score(&self, emissions: &Emissions<F>, path: &[usize]) -> F {
        let mut s = self.start[path[0]] + emissions[0][path[0]];
        for t in 1..path.len() {
            s = s + self.transition[path[t - 1]][path[t]] + emissions[t][path[t]];
        }
        s + self.end[path[path.len() - 1]]
    }
}

/// Output of [`forward_backward`].
#[derive(Debug, Clone)]
pub struct Marginals<F> {
    pub log_partition: F,
    /// `unary[t][y] = P(y_t = y)`
    pub unary: Vec<[F; NUM_TAGS]>,
    /// `pairwise[t][x][y] = P(y_t = x, y_{t+1} = y)`, length `L - 1`.
    pub pairwise: Vec<[[F; NUM_TAGS]; NUM_TAGS]>,
}

fn check_input<F: Float>(emissions: &Emissions<F>) -> Result<(), CrfError> {
    if emissions.is_empty() {
        return Err(CrfError::EmptySequence);
    }
    if emissions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CrfError::NonFinite);
    }
    Ok(())
}

/// Forward-backward over the 11-tag lattice.
pub fn forward_backward<F: Float>(emissions: &Emissions<F>, pot: &Potentials<F>) -> Result<Marginals<F>, CrfError> {
    check_input(emissions)?;
    let len = emissions.len();
    let mut alpha = vec![[F::neg_infinity(); NUM_TAGS]; len];
    let mut beta = vec![[F::neg_infinity(); NUM_TAGS]; len];
    let mut scratch = [F::zero(); NUM_TAGS];

    for y in 0..NUM_TAGS {
        alpha[0][y] = pot.start[y] + emissions[0][y];
    }
    for t in 1..len {
        for y in 0..NUM_TAGS {
            for x in 0..NUM_TAGS {
                scratch[x] = alpha[t - 1][x] + pot.transition[x][y];
            }
            alpha[t][y] = emissions[t][y] + log_sum_exp(&scratch);
        }
    }
    for y in 0..NUM_TAGS {
        scratch[y] = alpha[len - 1][y] + pot.end[y];
    }
    let log_z = log_sum_exp(&scratch);
    if !log_z.is_finite() {
        return Err(CrfError::NonFinite);
    }

    beta[len - 1] = pot.end;
    for t in (0..len - 1).rev() {
        for x in 0..NUM_TAGS {
            for y in 0..NUM_TAGS {
                scratch[y] = pot.transition[x][y] + emissions[t + 1][y] + beta[t + 1][y];
            }
            beta[t][x] = log_sum_exp(&scratch);
        }
    }

    let unary = (0..len)
        .map(|t| {
            let mut row = [F::zero(); NUM_TAGS];
            for y in 0..NUM_TAGS {
                row[y] = (alpha[t][y] + beta[t][y] - log_z).exp();
            }
            row
        })
        .collect();
    let pairwise = (0..len.saturating_sub(1))
        .map(|t| {
            let mut m = [[F::zero(); NUM_TAGS]; NUM_TAGS];
            for x in 0..NUM_TAGS {
                for y in 0..NUM_TAGS {
                    m[x][y] = (alpha[t][x] + pot.transition[x][y] + emissions[t + 1][y] + beta[t + 1][y] - log_z).exp();
                }
            }
            m
        })
        .collect();

    Ok(Marginals {
        log_partition: log_z,
        unary,
        pairwise,
    })
}

/// Highest-scoring tag path and its score. Ties go to the lower tag index,
/// both at each backpointer and for the final tag.
pub fn viterbi<F: Float>(emissions: &Emissions<F>, pot: &Potentials<F>) -> Result<(TagSequence, F), CrfError> {
    check_input(emissions)?;
    let len = emissions.len();
    let mut delta = vec![[F::neg_infinity(); NUM_TAGS]; len];
    let mut back = vec![[0usize; NUM_TAGS]; len];

    for y in 0..NUM_TAGS {
        delta[0][y] = pot.start[y] + emissions[0][y];
    }
    for t in 1..len {
        for y in 0..NUM_TAGS {
            let mut best = F::neg_infinity();
            let mut arg = 0;
            for x in 0..NUM_TAGS {
                let s = delta[t - 1][x] + pot.transition[x][y];
                if s > best {
                    best = s;
                    arg = x;
                }
            }
            delta[t][y] = best + emissions[t][y];
            back[t][y] = arg;
        }
    }

    let mut best = F::neg_infinity();
    let mut last = 0;
    for y in 0..NUM_TAGS {
        let s = delta[len - 1][y] + pot.end[y];
        if s > best {
            best = s;
            last = y;
        }
    }

    let mut path = vec![last; len];
    for t in (1..len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    let tags = path.into_iter().map(|i| Tag::ALL[i]).collect();
    Ok((TagSequence(tags), best))
}
