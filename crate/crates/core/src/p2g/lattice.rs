//! Forward/backward passes over the (phone index, grapheme index) lattice.

use super::{P2GError, P2GModel, TrainingPair};
use crate::scalar::Scalar;

/// One lattice arc: phone `phone` emits `graphemes[start..start + len]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub phone: usize,
    pub start: usize,
    pub len: usize,
    /// Index of the (phone symbol, chunk) parameter this arc uses.
    pub param: usize,
}

/// Arcs of one pair, grouped by phone position.
pub(crate) struct Lattice {
    pub n_phones: usize,
    pub n_graphemes: usize,
    pub arcs_by_phone: Vec<Vec<Arc>>,
}

impl Lattice {
    /// Build the lattice using `param_of(phone_pos, chunk)` to resolve arcs.
    /// Arcs whose parameter is unknown are omitted.
    pub fn build<'p>(
        pair: &'p TrainingPair,
        max_chunk: usize,
        mut param_of: impl FnMut(usize, &'p str) -> Option<usize>,
    ) -> Lattice {
        let n = pair.phones.len();
        let m = pair.graphemes.len();
        let mut arcs_by_phone = Vec::with_capacity(n);
        for i in 0..n {
            let mut arcs = Vec::new();
            for start in 0..=m {
                for len in 0..=max_chunk.min(m - start) {
                    let chunk = &pair.graphemes[start..start + len];
                    if let Some(param) = param_of(i, chunk) {
                        arcs.push(Arc {
                            phone: i,
                            start,
                            len,
                            param,
                        });
                    }
                }
            }
            arcs_by_phone.push(arcs);
        }
        Lattice {
            n_phones: n,
            n_graphemes: m,
            arcs_by_phone,
        }
    }

    /// Log forward table `alpha[i][j]`: first `i` phones emitted first `j` graphemes.
    pub fn forward<S: Scalar>(&self, log_weight: &[S]) -> Vec<Vec<S>> {
        let mut alpha = vec![vec![S::neg_infinity(); self.n_graphemes + 1]; self.n_phones + 1];
        alpha[0][0] = S::zero();
        for i in 0..self.n_phones {
            for arc in &self.arcs_by_phone[i] {
                let from = alpha[i][arc.start];
                let w = log_weight[arc.param];
                if from == S::neg_infinity() || w == S::neg_infinity() {
                    continue;
                }
                let to = &mut alpha[i + 1][arc.start + arc.len];
                *to = to.log_add(from + w);
            }
        }
        alpha
    }

    pub fn backward<S: Scalar>(&self, log_weight: &[S]) -> Vec<Vec<S>> {
        let mut beta = vec![vec![S::neg_infinity(); self.n_graphemes + 1]; self.n_phones + 1];
        beta[self.n_phones][self.n_graphemes] = S::zero();
        for i in (0..self.n_phones).rev() {
            for arc in &self.arcs_by_phone[i] {
                let to = beta[i + 1][arc.start + arc.len];
                let w = log_weight[arc.param];
                if to == S::neg_infinity() || w == S::neg_infinity() {
                    continue;
                }
                let from = &mut beta[i][arc.start];
                *from = from.log_add(to + w);
            }
        }
        beta
    }
}

/// Total log probability of all monotone alignments of `pair` under `model`.
///
/// Returns `-inf` when no alignment exists (for example when the grapheme
/// string is longer than `max_chunk` times the phone count).
pub fn loglik<S: Scalar>(model: &P2GModel<S>, pair: &TrainingPair) -> Result<S, P2GError> {
    let mut dists = Vec::with_capacity(pair.phones.len());
    for phone in &pair.phones {
        dists.push(
            model
                .distribution(phone)
                .ok_or_else(|| P2GError::UnseenPhone(phone.clone()))?,
        );
    }
    let mut weights: Vec<S> = Vec::new();
    let lattice = Lattice::build(pair, model.max_chunk(), |i, chunk| {
        dists[i].get(chunk).map(|p| {
            weights.push(p.ln());
            weights.len() - 1
        })
    });
    let alpha = lattice.forward(&weights);
    Ok(alpha[lattice.n_phones][lattice.n_graphemes])
}
