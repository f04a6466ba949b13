use super::lattice::loglik;
use super::{P2GError, P2GModel, TrainingPair};
use crate::scalar::Scalar;

/// Upper bound on tied best paths examined by the string-probability tie-break.
const MAX_TIED_PATHS: usize = 64;

/// Relative tolerance under which two string log-probabilities count as equal.
pub(crate) const STRING_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    /// every chunk so far was empty
    Empty,
    NonEmpty,
}

#[derive(Clone)]
struct Node<S> {
    score: S,
    /// (previous state, chunk) pairs reaching this node with exactly `score`
    back: Vec<(State, usize)>,
    /// lexicographically smallest chunk-index sequence among the tied paths
    lex_min: Vec<usize>,
}

/// Most probable romanisation of a phone sequence.
///
/// Viterbi over two states per position, "everything so far was empty" and
/// "something non-empty was emitted"; only the second may finish, which
/// excludes the all-empty output. Paths with exactly equal scores are ranked
/// by the total probability of the string they spell (summed over all its
/// segmentations), then by the lexicographically smaller chunk sequence.
pub fn decode<S: Scalar, P: AsRef<str>>(model: &P2GModel<S>, phones: &[P]) -> Result<String, P2GError> {
    let mut dists: Vec<Vec<(&str, S)>> = Vec::with_capacity(phones.len());
    for phone in phones {
        let phone = phone.as_ref();
        let dist = model
            .distribution(phone)
            .ok_or_else(|| P2GError::UnseenPhone(phone.to_string()))?;
        dists.push(
            dist.iter()
                .filter(|(_, p)| **p > S::zero())
                .map(|(c, p)| (c.as_str(), p.ln()))
                .collect(),
        );
    }

    // lattice[i] holds the two states after i phones
    let mut lattice: Vec<[Option<Node<S>>; 2]> = Vec::with_capacity(dists.len() + 1);
    lattice.push([
        Some(Node {
            score: S::zero(),
            back: Vec::new(),
            lex_min: Vec::new(),
        }),
        None,
    ]);
    for dist in &dists {
        let prev = lattice.last().expect("lattice starts non-empty");
        let mut next: [Option<Node<S>>; 2] = [None, None];
        for (from_state, slot) in [(State::Empty, 0), (State::NonEmpty, 1)] {
            let Some(from) = &prev[slot] else { continue };
            for (c, (chunk, w)) in dist.iter().enumerate() {
                let to = if from_state == State::NonEmpty || !chunk.is_empty() { 1 } else { 0 };
                let score = from.score + *w;
                let mut path = from.lex_min.clone();
                path.push(c);
                match &mut next[to] {
                    Some(node) if score < node.score => {}
                    Some(node) if score == node.score => {
                        node.back.push((from_state, c));
                        if path < node.lex_min {
                            node.lex_min = path;
                        }
                    }
                    entry => {
                        *entry = Some(Node {
                            score,
                            back: vec![(from_state, c)],
                            lex_min: path,
                        })
                    }
                }
            }
        }
        lattice.push(next);
    }

    let Some(last) = &lattice.last().expect("non-empty")[1] else {
        return Err(P2GError::NoNonEmptyPath);
    };

    let mut tied: Vec<Vec<&str>> = Vec::new();
    let mut overflow = false;
    let mut suffix = Vec::new();
    collect_paths(
        &lattice,
        &dists,
        dists.len(),
        State::NonEmpty,
        &mut suffix,
        &mut tied,
        &mut overflow,
    );
    if overflow {
        // Too many exact ties to rank by string probability.
        return Ok(last
            .lex_min
            .iter()
            .enumerate()
            .map(|(i, c)| dists[i][*c].0)
            .collect());
    }
    Ok(rank_tied(model, phones, tied))
}

fn collect_paths<'a, S: Scalar>(
    lattice: &[[Option<Node<S>>; 2]],
    dists: &[Vec<(&'a str, S)>],
    pos: usize,
    state: State,
    suffix: &mut Vec<&'a str>,
    out: &mut Vec<Vec<&'a str>>,
    overflow: &mut bool,
) {
    if pos == 0 {
        if out.len() == MAX_TIED_PATHS {
            *overflow = true;
            return;
        }
        out.push(suffix.iter().rev().copied().collect());
        return;
    }
    let slot = match state {
        State::Empty => 0,
        State::NonEmpty => 1,
    };
    let node = lattice[pos][slot].as_ref().expect("back pointers reference live nodes");
    for &(prev_state, chunk) in &node.back {
        suffix.push(dists[pos - 1][chunk].0);
        collect_paths(lattice, dists, pos - 1, prev_state, suffix, out, overflow);
        suffix.pop();
        if *overflow {
            return;
        }
    }
}

/// Pick among exactly tied best paths: highest string probability, then the
/// lexicographically smallest chunk sequence.
fn rank_tied<S: Scalar, P: AsRef<str>>(model: &P2GModel<S>, phones: &[P], mut tied: Vec<Vec<&str>>) -> String {
    tied.sort();
    if tied.len() == 1 {
        return tied[0].concat();
    }
    let phone_vec: Vec<String> = phones.iter().map(|p| p.as_ref().to_string()).collect();
    let scored: Vec<(f64, &Vec<&str>)> = tied
        .iter()
        .map(|chunks| {
            let pair = TrainingPair {
                phones: phone_vec.clone(),
                graphemes: chunks.concat(),
            };
            let ll = loglik(model, &pair).map(|v| v.to_f64_lossy()).unwrap_or(f64::NEG_INFINITY);
            (ll, chunks)
        })
        .collect();
    let best = scored.iter().map(|(ll, _)| *ll).fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .find(|(ll, _)| (best - *ll).abs() <= STRING_TIE_TOL * best.abs().max(1.0))
        .map(|(_, chunks)| chunks.concat())
        .expect("at least one tied path")
}
