use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::lattice::Lattice;
use super::{P2GError, P2GModel, TrainConfig, TrainingMeta, TrainingPair};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub model: P2GModel<S>,
    /// Indices of input pairs that were skipped, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Data log-likelihood before the first M-step and after every M-step.
    pub loglik_history: Vec<S>,
}

/// Parameter table: one entry per (phone symbol, observed chunk).
struct Params {
    phones: Vec<String>,
    /// chunk strings per phone, sorted
    vocab: Vec<Vec<String>>,
    /// first global parameter index of each phone
    offset: Vec<usize>,
    total: usize,
}

impl Params {
    fn index(&self, phone: usize, chunk: usize) -> usize {
        self.offset[phone] + chunk
    }
}

/// Round to the 12-significant-digit decimal grid used by the model file, so
/// a saved and reloaded model compares equal to the trained one.
pub(crate) fn quantize<S: Scalar>(value: S) -> S {
    let text = format!("{:.11e}", value.to_f64_lossy());
    S::from_f64_lossy(text.parse::<f64>().expect("formatted float parses"))
}

pub fn train<S: Scalar>(
    pairs: &[TrainingPair],
    config: &TrainConfig,
    language_tag: &str,
) -> Result<TrainOutcome<S>, P2GError> {
    config.validate()?;
    let mut skipped = Vec::new();
    let mut usable: Vec<&TrainingPair> = Vec::new();
    for (idx, pair) in pairs.iter().enumerate() {
        match pair.problem(config.max_chunk) {
            Some(reason) => skipped.push((idx, reason)),
            None => usable.push(pair),
        }
    }
    if usable.is_empty() {
        return Err(P2GError::NoTrainablePairs);
    }

    // Observed vocabulary: every chunk a phone can emit on some complete
    // alignment of some pair. Found with a unit-weight forward/backward pass.
    let mut phone_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in &usable {
        for phone in &pair.phones {
            let next = phone_ids.len();
            phone_ids.entry(phone.as_str()).or_insert(next);
        }
    }
    // Re-number phones in sorted order for a stable parameter layout.
    let phones: Vec<String> = phone_ids.keys().map(|s| s.to_string()).collect();
    let phone_index: HashMap<String, usize> =
        phones.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();

    let mut vocab_sets: Vec<BTreeMap<String, ()>> = vec![BTreeMap::new(); phones.len()];
    for pair in &usable {
        let mut chunks: Vec<&str> = Vec::new();
        let probe = Lattice::build(pair, config.max_chunk, |_, chunk| {
            chunks.push(chunk);
            Some(chunks.len() - 1)
        });
        let unit = vec![S::zero(); chunks.len()];
        let alpha = probe.forward(&unit);
        let beta = probe.backward(&unit);
        for arcs in &probe.arcs_by_phone {
            for arc in arcs {
                let on_path = alpha[arc.phone][arc.start] > S::neg_infinity()
                    && beta[arc.phone + 1][arc.start + arc.len] > S::neg_infinity();
                if on_path {
                    let phone = phone_index[pair.phones[arc.phone].as_str()];
                    vocab_sets[phone].insert(chunks[arc.param].to_string(), ());
                }
            }
        }
    }
    let vocab: Vec<Vec<String>> = vocab_sets
        .into_iter()
        .map(|set| set.into_keys().collect())
        .collect();
    let mut offset = Vec::with_capacity(phones.len());
    let mut total = 0;
    for v in &vocab {
        offset.push(total);
        total += v.len();
    }
    let params = Params {
        phones,
        vocab,
        offset,
        total,
    };
    let chunk_index: Vec<HashMap<&str, usize>> = params
        .vocab
        .iter()
        .map(|v| v.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect())
        .collect();

    let lattices: Vec<Lattice> = usable
        .iter()
        .map(|pair| {
            let ids: Vec<usize> = pair.phones.iter().map(|p| phone_index[p.as_str()]).collect();
            Lattice::build(pair, config.max_chunk, |i, chunk| {
                chunk_index[ids[i]]
                    .get(chunk)
                    .map(|c| params.index(ids[i], *c))
            })
        })
        .collect();

    // uniform start over each phone's observed vocabulary
    let mut log_theta = vec![S::zero(); params.total];
    for (p, v) in params.vocab.iter().enumerate() {
        let w = -S::from_usize(v.len()).expect("vocab size fits").ln();
        for c in 0..v.len() {
            log_theta[params.index(p, c)] = w;
        }
    }

    let alpha = S::from_f64_lossy(config.smoothing_alpha);
    let tol = S::from_f64_lossy(config.loglik_tol);
    let (mut counts, mut ll) = expectation(&lattices, &log_theta, params.total)?;
    let mut history = vec![ll];
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        log_theta = maximization(&params, &counts, alpha);
        iterations += 1;
        let (next_counts, next_ll) = expectation(&lattices, &log_theta, params.total)?;
        history.push(next_ll);
        let improvement = next_ll - ll;
        counts = next_counts;
        ll = next_ll;
        if improvement < tol {
            break;
        }
    }

    let mut emissions: BTreeMap<String, BTreeMap<String, S>> = BTreeMap::new();
    for (p, phone) in params.phones.iter().enumerate() {
        let dist = emissions.entry(phone.clone()).or_default();
        for (c, chunk) in params.vocab[p].iter().enumerate() {
            dist.insert(chunk.clone(), quantize(log_theta[params.index(p, c)].exp()));
        }
    }
    let model = P2GModel::from_emissions(
        language_tag,
        config.max_chunk,
        emissions,
        TrainingMeta {
            iterations_run: iterations,
            final_loglik: quantize(ll),
        },
    )?;
    Ok(TrainOutcome {
        model,
        skipped,
        loglik_history: history,
    })
}

/// Expected parameter counts for one pair, and its log-likelihood.
type PairCounts<S> = (Vec<(usize, S)>, S);

/// E-step: expected arc counts and total log-likelihood.
///
/// Pairs are processed in parallel; the per-pair results are merged in input
/// order so the sums do not depend on the thread count.
fn expectation<S: Scalar>(
    lattices: &[Lattice],
    log_theta: &[S],
    n_params: usize,
) -> Result<(Vec<S>, S), P2GError> {
    let per_pair: Vec<Result<PairCounts<S>, P2GError>> = lattices
        .par_iter()
        .map(|lattice| {
            let alpha = lattice.forward(log_theta);
            let beta = lattice.backward(log_theta);
            let z = alpha[lattice.n_phones][lattice.n_graphemes];
            if !z.is_finite() {
                return Err(P2GError::NumericalUnderflow);
            }
            let mut expected = Vec::new();
            for arcs in &lattice.arcs_by_phone {
                for arc in arcs {
                    let a = alpha[arc.phone][arc.start];
                    let b = beta[arc.phone + 1][arc.start + arc.len];
                    let w = log_theta[arc.param];
                    if a == S::neg_infinity() || b == S::neg_infinity() || w == S::neg_infinity() {
                        continue;
                    }
                    expected.push((arc.param, (a + w + b - z).exp()));
                }
            }
            Ok((expected, z))
        })
        .collect();

    let mut counts = vec![S::zero(); n_params];
    let mut total = S::zero();
    for result in per_pair {
        let (expected, z) = result?;
        for (param, c) in expected {
            counts[param] += c;
        }
        total += z;
    }
    Ok((counts, total))
}

/// M-step: add-alpha smoothed relative frequencies, in log space.
fn maximization<S: Scalar>(params: &Params, counts: &[S], alpha: S) -> Vec<S> {
    let mut log_theta = vec![S::neg_infinity(); params.total];
    for (p, v) in params.vocab.iter().enumerate() {
        let range = params.offset[p]..params.offset[p] + v.len();
        let total: S = range.clone().map(|i| counts[i] + alpha).sum();
        if total <= S::zero() {
            let w = -S::from_usize(v.len()).expect("vocab size fits").ln();
            for i in range {
                log_theta[i] = w;
            }
            continue;
        }
        for i in range {
            log_theta[i] = ((counts[i] + alpha) / total).ln();
        }
    }
    log_theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::p2g::decode;

    #[test]
    fn empty_input_is_rejected() {
        let err = train::<f64>(&[], &TrainConfig::default(), "en").unwrap_err();
        assert_eq!(err, P2GError::NoTrainablePairs);
        let bad = [TrainingPair::new(&["T"], "tttt")];
        let err = train::<f64>(&bad, &TrainConfig::default(), "en").unwrap_err();
        assert_eq!(err, P2GError::NoTrainablePairs);
    }

    #[test]
    fn single_pair_reproduces_training_word() {
        let pairs = [TrainingPair::new(&["T", "IY"], "tee")];
        let config = TrainConfig {
            max_chunk: 2,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&pairs, &config, "en").unwrap();
        // Only two segmentations exist: (t, ee) and (te, e).
        let t = out.model.distribution("T").unwrap();
        let iy = out.model.distribution("IY").unwrap();
        assert_eq!(t.keys().collect::<Vec<_>>(), vec!["t", "te"]);
        assert_eq!(iy.keys().collect::<Vec<_>>(), vec!["e", "ee"]);
        assert_eq!(decode(&out.model, &["T", "IY"]).unwrap(), "tee");
        for w in out.loglik_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{:?}", out.loglik_history);
        }
    }

    #[test]
    fn skipped_pairs_are_reported() {
        let pairs = [
            TrainingPair::new(&["T", "IY"], "tee"),
            TrainingPair::new(&["T"], "TEE"),
            TrainingPair::new(&[], "t"),
        ];
        let out = train::<f64>(&pairs, &TrainConfig::default(), "en").unwrap();
        let idx: Vec<usize> = out.skipped.iter().map(|s| s.0).collect();
        assert_eq!(idx, vec![1, 2]);
    }

    #[test]
    fn f32_training_works() {
        let pairs = [
            TrainingPair::new(&["K", "AE", "T"], "cat"),
            TrainingPair::new(&["K", "AE", "B"], "cab"),
            TrainingPair::new(&["B", "AE", "T"], "bat"),
        ];
        let config = TrainConfig {
            max_chunk: 1,
            ..TrainConfig::default()
        };
        let out = train::<f32>(&pairs, &config, "en").unwrap();
        assert_eq!(decode(&out.model, &["B", "AE", "B"]).unwrap(), "bab");
    }

    #[test]
    fn quantize_is_idempotent() {
        let x = 0.123_456_789_012_345_67f64;
        let q = quantize(x);
        assert_eq!(quantize(q), q);
        assert!((q - x).abs() < 1e-12);
    }
}
