//! Building, serving and aggregating phonetic transcription-voting tasks.
//!
//! The pipeline runs lexicon → p2g model → option-set corpus → tasks and
//! assignments → votes → aggregated labels and reports. Numeric code in the
//! p2g model and the report ratios is generic over [`scalar::Scalar`]
//! (`f32` or `f64`); aliases for both are below.

pub mod aggregation;
pub mod choice;
pub mod corpus;
pub mod crowdsim;
pub mod jsonl;
pub mod lexicon;
pub mod manifest;
pub mod p2g;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod tasking;

pub use aggregation::{AggregateLabel, AggregateResult, Method, ReputationMode, ReputationTable, Vote};
pub use choice::{Choice, CorrectSlot};
pub use corpus::{Corpus, OptionSet, OptionSetSpec};
pub use lexicon::{Lexicon, PhoneInventory, PronunciationEntry};
pub use manifest::RunManifest;
pub use scalar::Scalar;
pub use tasking::{Assignment, Task, WorkerProfile};

pub type P2GModelF64 = p2g::P2GModel<f64>;
pub type P2GModelF32 = p2g::P2GModel<f32>;
pub type TrainOutcomeF64 = p2g::TrainOutcome<f64>;
pub type TrainOutcomeF32 = p2g::TrainOutcome<f32>;
