//! Memoryless phoneme-to-grapheme transducer.
//!
//! Every phone independently emits a contiguous chunk of `0..=max_chunk` lower
//! case letters and the chunks concatenate, left to right, into the romanised
//! word. The emission tables are trained with EM over the monotone alignment
//! lattice of each training pair and decoded with a small Viterbi pass.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::Scalar;

mod decode;
mod io;
mod lattice;
mod train;

pub use decode::decode;
pub use io::{load, parse_training_pairs, save, MODEL_VERSION};
pub use lattice::loglik;
pub use train::{train, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum P2GError {
    #[error("no trainable pairs")]
    NoTrainablePairs,
    #[error("numerical underflow: total lattice probability vanished")]
    NumericalUnderflow,
    #[error("phone {0:?} has no emission distribution")]
    UnseenPhone(String),
    #[error("no decode path emits a non-empty string")]
    NoNonEmptyPath,
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("model version {found:?} is not supported (expected {expected:?})")]
    Version { found: String, expected: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Stop once the absolute log-likelihood improvement drops below this.
    pub loglik_tol: f64,
    /// Add-alpha smoothing over each phone's observed chunk vocabulary.
    pub smoothing_alpha: f64,
    pub max_chunk: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 50,
            loglik_tol: 1e-6,
            smoothing_alpha: 0.1,
            max_chunk: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), P2GError> {
        if self.max_iters < 1 {
            return Err(P2GError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.smoothing_alpha.is_nan() || self.smoothing_alpha < 0.0 {
            return Err(P2GError::InvalidConfig("smoothing_alpha must be >= 0".into()));
        }
        if self.max_chunk < 1 {
            return Err(P2GError::InvalidConfig("max_chunk must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrainingPair {
    pub phones: Vec<String>,
    pub graphemes: String,
}

impl TrainingPair {
    pub fn new(phones: &[&str], graphemes: &str) -> Self {
        TrainingPair {
            phones: phones.iter().map(|p| p.to_string()).collect(),
            graphemes: graphemes.to_string(),
        }
    }

    /// Reason the pair cannot be trained on, if any.
    pub fn problem(&self, max_chunk: usize) -> Option<String> {
        if self.phones.is_empty() {
            return Some("no phones".into());
        }
        if self.graphemes.is_empty() {
            return Some("no graphemes".into());
        }
        if !self.graphemes.bytes().all(|b| b.is_ascii_lowercase()) {
            return Some(format!("graphemes {:?} are not all in [a-z]", self.graphemes));
        }
        if self.graphemes.len() > max_chunk * self.phones.len() {
            return Some(format!(
                "{} graphemes exceed {} x {} phones",
                self.graphemes.len(),
                max_chunk,
                self.phones.len()
            ));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta<S> {
    pub iterations_run: usize,
    pub final_loglik: S,
}

/// Per-phone emission distributions over grapheme chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct P2GModel<S> {
    language_tag: String,
    max_chunk: usize,
    emissions: BTreeMap<String, BTreeMap<String, S>>,
    training_meta: TrainingMeta<S>,
}

pub(crate) fn is_valid_chunk(chunk: &str, max_chunk: usize) -> bool {
    chunk.len() <= max_chunk && chunk.bytes().all(|b| b.is_ascii_lowercase())
}

impl<S: Scalar> P2GModel<S> {
    /// Build a model from explicit tables, checking each distribution.
    pub fn from_emissions(
        language_tag: impl Into<String>,
        max_chunk: usize,
        emissions: BTreeMap<String, BTreeMap<String, S>>,
        training_meta: TrainingMeta<S>,
    ) -> Result<Self, P2GError> {
        if max_chunk < 1 {
            return Err(P2GError::InvalidModel("max_chunk must be >= 1".into()));
        }
        let tol = S::from_f64_lossy(1e-9).max(S::epsilon() * S::from_f64_lossy(64.0));
        for (phone, dist) in &emissions {
            if dist.is_empty() {
                return Err(P2GError::InvalidModel(format!("phone {phone} has no chunks")));
            }
            let mut total = S::zero();
            for (chunk, p) in dist {
                if !is_valid_chunk(chunk, max_chunk) {
                    return Err(P2GError::InvalidModel(format!(
                        "chunk {chunk:?} of phone {phone} is not 0..={max_chunk} letters a-z"
                    )));
                }
                if !p.is_finite() || *p < S::zero() {
                    return Err(P2GError::InvalidModel(format!(
                        "probability of {phone} -> {chunk:?} is {p}"
                    )));
                }
                total += *p;
            }
            if (total - S::one()).abs() > tol {
                return Err(P2GError::InvalidModel(format!(
                    "distribution of {phone} sums to {total}"
                )));
            }
        }
        Ok(P2GModel {
            language_tag: language_tag.into(),
            max_chunk,
            emissions,
            training_meta,
        })
    }

    /// Convenience constructor for hand-written models (no training metadata).
    pub fn from_table(
        language_tag: impl Into<String>,
        max_chunk: usize,
        table: &[(&str, &str, f64)],
    ) -> Result<Self, P2GError> {
        let mut emissions: BTreeMap<String, BTreeMap<String, S>> = BTreeMap::new();
        for (phone, chunk, p) in table {
            emissions
                .entry(phone.to_string())
                .or_default()
                .insert(chunk.to_string(), S::from_f64_lossy(*p));
        }
        Self::from_emissions(
            language_tag,
            max_chunk,
            emissions,
            TrainingMeta {
                iterations_run: 0,
                final_loglik: S::zero(),
            },
        )
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }

    pub fn max_chunk(&self) -> usize {
        self.max_chunk
    }

    pub fn training_meta(&self) -> &TrainingMeta<S> {
        &self.training_meta
    }

    pub fn emissions(&self) -> &BTreeMap<String, BTreeMap<String, S>> {
        &self.emissions
    }

    pub fn distribution(&self, phone: &str) -> Option<&BTreeMap<String, S>> {
        self.emissions.get(phone)
    }

    pub fn prob(&self, phone: &str, chunk: &str) -> S {
        self.emissions
            .get(phone)
            .and_then(|d| d.get(chunk))
            .copied()
            .unwrap_or_else(S::zero)
    }

    pub fn phones(&self) -> impl Iterator<Item = &str> {
        self.emissions.keys().map(String::as_str)
    }
}
