//! Brute-force reference implementations used to check the fast code paths.
#![allow(dead_code)]

use std::collections::HashMap;

use crowdvote::p2g::{P2GModel, TrainingPair};

/// Deterministic phone → letters mapping used for the synthetic corpus.
pub const KNOWN_MAPPING: [(&str, &str); 12] = [
    ("B", "b"),
    ("D", "d"),
    ("K", "k"),
    ("M", "m"),
    ("N", "n"),
    ("P", "p"),
    ("S", "s"),
    ("T", "t"),
    ("AA", "a"),
    ("IY", "ee"),
    ("UW", "oo"),
    ("SH", "sh"),
];

const KNOWN_WORDS: [&str; 20] = [
    "B AA T", "K IY P", "M UW N", "SH AA D", "T IY M", "P UW S", "D AA K", "N IY SH",
    "S UW T", "B IY D", "K AA M", "SH UW P", "T AA B IY", "M AA S UW", "D IY N AA", "P AA SH",
    "N UW K", "S IY B", "K UW SH IY", "B AA D",
];

pub fn spell_known(phones: &[&str]) -> String {
    let map: HashMap<&str, &str> = KNOWN_MAPPING.into_iter().collect();
    phones.iter().map(|p| map[p]).collect()
}

pub fn known_mapping_pairs() -> Vec<TrainingPair> {
    KNOWN_WORDS
        .iter()
        .map(|w| {
            let phones: Vec<&str> = w.split(' ').collect();
            TrainingPair::new(&phones, &spell_known(&phones))
        })
        .collect()
}

/// Every way to give each phone one chunk with non-zero probability:
/// (chunks, sequential log score, probability).
fn enumerate_paths<'m>(model: &'m P2GModel<f64>, phones: &[&str]) -> Vec<(Vec<&'m str>, f64, f64)> {
    let mut paths = vec![(Vec::new(), 0.0f64, 1.0f64)];
    for phone in phones {
        let dist = model.distribution(phone).expect("oracle phones are in the model");
        let mut next = Vec::new();
        for (chunks, score, prob) in &paths {
            for (chunk, p) in dist {
                if *p <= 0.0 {
                    continue;
                }
                let mut c = chunks.clone();
                c.push(chunk.as_str());
                next.push((c, score + p.ln(), prob * p));
            }
        }
        paths = next;
    }
    paths
}

/// Decode by exhaustive enumeration: best non-empty chunk assignment; exact
/// score ties go to the higher total string probability (summed over every
/// assignment spelling it), then the lexicographically smaller chunk list.
pub fn decode_oracle(model: &P2GModel<f64>, phones: &[&str]) -> Option<String> {
    let paths = enumerate_paths(model, phones);
    let mut string_prob: HashMap<String, f64> = HashMap::new();
    for (chunks, _, prob) in &paths {
        *string_prob.entry(chunks.concat()).or_insert(0.0) += prob;
    }
    let candidates: Vec<&(Vec<&str>, f64, f64)> = paths.iter().filter(|(c, _, _)| !c.concat().is_empty()).collect();
    let top = candidates.iter().map(|(_, s, _)| *s).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<&Vec<&str>> = candidates.iter().filter(|(_, s, _)| *s == top).map(|(c, _, _)| c).collect();
    if tied.is_empty() {
        return None;
    }
    tied.sort();
    let ll = |c: &Vec<&str>| string_prob[&c.concat()].ln();
    let best = tied.iter().map(|c| ll(c)).fold(f64::NEG_INFINITY, f64::max);
    tied.into_iter()
        .find(|c| (best - ll(c)).abs() <= 1e-9 * best.abs().max(1.0))
        .map(|c| c.concat())
}

/// Probability that three independent votes produce the correct strict
/// majority, each vote correct with `p` and otherwise uniform over the four
/// wrong choices, by summing all 5^3 outcomes.
pub fn mv_accuracy_exact(p: f64) -> f64 {
    let prob = |c: usize| if c == 0 { p } else { (1.0 - p) / 4.0 };
    let mut total = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                let correct = [a, b, c].iter().filter(|v| **v == 0).count();
                if correct >= 2 {
                    total += prob(a) * prob(b) * prob(c);
                }
            }
        }
    }
    total
}
