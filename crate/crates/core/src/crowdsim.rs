//! Simulated crowd workers and end-to-end simulated experiments.
//!
//! A worker has three parameters: competence `p` (chance of picking the
//! reference when it is listed), reject awareness `q` (chance of picking
//! "none of the above" when it is not) and none-avoidance `b` (chance that a
//! wrong guess on a listed task stays among the four strings).

use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::Vote;
use crate::choice::{Choice, CorrectSlot, LISTED_OPTIONS};
use crate::corpus::{parse_spec, CorpusError, WordRef, DEFAULT_SPEC_LABELS};
use crate::jsonl::{from_jsonl, to_jsonl, JsonlError};
use crate::manifest::{FileDigest, RunManifest};
use crate::seed::{derive_seed, rng_from_seed};
use crate::tasking::{allocate, task_id_for, AllocationConfig, Assignment, Task, TaskingError, WorkerProfile};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Allocation(#[from] TaskingError),
    #[error(transparent)]
    Spec(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Tasks { path: PathBuf, source: JsonlError },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWorker {
    pub worker_id: String,
    pub competence: f64,
    pub reject_awareness: f64,
    pub none_avoidance: f64,
    pub native_language: String,
    pub seed: u64,
}

impl SimWorker {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("competence", self.competence),
            ("reject_awareness", self.reject_awareness),
            ("none_avoidance", self.none_avoidance),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidConfig(format!(
                    "worker {}: {name} {v} outside [0,1]",
                    self.worker_id
                )));
            }
        }
        Ok(())
    }

    /// Seed for this worker's vote on one assignment.
    pub fn assignment_seed(&self, assignment_id: &str) -> u64 {
        derive_seed(self.seed, &[assignment_id])
    }
}

/// Draw one vote. Deterministic in `seed`.
pub fn simulate_vote(worker: &SimWorker, truth: CorrectSlot, seed: u64) -> Choice {
    let mut rng = rng_from_seed(seed);
    match truth {
        CorrectSlot::Slot(s) => {
            if rng.gen_bool(worker.competence) {
                return Choice::slot(s as usize);
            }
            let wrong: Vec<Choice> = Choice::all()
                .filter(|c| c.index() != s as usize)
                .filter(|c| !c.is_none_of_the_above())
                .collect();
            if rng.gen_bool(worker.none_avoidance) {
                wrong[rng.gen_range(0..wrong.len())]
            } else {
                let k = rng.gen_range(0..=wrong.len());
                wrong.get(k).copied().unwrap_or(Choice::NONE_OF_THE_ABOVE)
            }
        }
        CorrectSlot::NoneOfTheAbove => {
            if rng.gen_bool(worker.reject_awareness) {
                Choice::NONE_OF_THE_ABOVE
            } else {
                Choice::slot(rng.gen_range(0..LISTED_OPTIONS))
            }
        }
    }
}

fn default_language() -> String {
    "en".to_string()
}

fn default_labels() -> Vec<String> {
    DEFAULT_SPEC_LABELS.iter().map(|s| s.to_string()).collect()
}

fn default_languages() -> Vec<String> {
    vec![default_language()]
}

/// A block of identical workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationGroup {
    pub count: usize,
    pub competence: f64,
    #[serde(default)]
    pub reject_awareness: f64,
    #[serde(default)]
    pub none_avoidance: f64,
    #[serde(default = "default_language")]
    pub native_language: String,
    /// Worker ids are `<prefix><index>`; defaults to `g<group>-`.
    #[serde(default)]
    pub id_prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSource {
    /// Placeholder tasks whose ground truth follows the given set labels.
    Synthetic {
        count: usize,
        #[serde(default = "default_labels")]
        spec_labels: Vec<String>,
        #[serde(default = "default_languages")]
        languages: Vec<String>,
    },
    /// A task JSON-lines file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSettings {
    pub repetitions: usize,
    pub tasks_per_worker: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Master seed; may be left out of a config file and supplied by the caller.
    #[serde(default)]
    pub seed: u64,
    pub allocation: AllocationSettings,
    pub tasks: TaskSource,
    pub population: Vec<PopulationGroup>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.population.iter().all(|g| g.count == 0) {
            return Err(SimError::InvalidConfig("population is empty".into()));
        }
        if let TaskSource::Synthetic {
            spec_labels, languages, ..
        } = &self.tasks
        {
            if spec_labels.is_empty() || languages.is_empty() {
                return Err(SimError::InvalidConfig(
                    "synthetic tasks need at least one spec label and language".into(),
                ));
            }
            for l in spec_labels {
                parse_spec(l)?;
            }
        }
        self.workers()?;
        Ok(())
    }

    /// Expand the population groups into individual workers.
    pub fn workers(&self) -> Result<Vec<SimWorker>, SimError> {
        let mut out = Vec::new();
        for (g, group) in self.population.iter().enumerate() {
            let prefix = group.id_prefix.clone().unwrap_or_else(|| format!("g{g}-"));
            for i in 0..group.count {
                let worker_id = format!("{prefix}{i:04}");
                let w = SimWorker {
                    seed: derive_seed(self.seed, &["worker", &worker_id]),
                    worker_id,
                    competence: group.competence,
                    reject_awareness: group.reject_awareness,
                    none_avoidance: group.none_avoidance,
                    native_language: group.native_language.clone(),
                };
                w.validate()?;
                out.push(w);
            }
        }
        Ok(out)
    }

    pub fn load_tasks(&self) -> Result<Vec<Task>, SimError> {
        match &self.tasks {
            TaskSource::Synthetic {
                count,
                spec_labels,
                languages,
            } => synthetic_tasks(*count, spec_labels, languages, derive_seed(self.seed, &["tasks"])),
            TaskSource::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
                    path: path.clone(),
                    source,
                })?;
                from_jsonl(&text).map_err(|source| SimError::Tasks {
                    path: path.clone(),
                    source,
                })
            }
        }
    }
}

/// Tasks cycling through languages, then set labels. A set whose label lists
/// the reference gets a random correct slot.
pub fn synthetic_tasks(
    count: usize,
    spec_labels: &[String],
    languages: &[String],
    seed: u64,
) -> Result<Vec<Task>, SimError> {
    let specs = spec_labels.iter().map(|l| parse_spec(l)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|i| {
            let language = &languages[i % languages.len()];
            let spec = &specs[(i / languages.len()) % specs.len()];
            let headword = format!("SYN{i:06}");
            let ground_truth = if spec.lists_reference() {
                CorrectSlot::Slot(rng.gen_range(0..LISTED_OPTIONS as u8))
            } else {
                CorrectSlot::NoneOfTheAbove
            };
            Ok(Task {
                task_id: task_id_for(language, &headword, &spec.label),
                language_tag: language.clone(),
                word_ref: WordRef {
                    headword: headword.clone(),
                    language: language.clone(),
                },
                spec_label: spec.label.clone(),
                audio_ref: String::new(),
                options: (0..LISTED_OPTIONS).map(|s| format!("{}{s}", headword.to_lowercase())).collect(),
                ground_truth,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub tasks: Vec<Task>,
    pub roster: Vec<WorkerProfile>,
    pub assignments: Vec<Assignment>,
    pub votes: Vec<Vote>,
    pub manifest: RunManifest,
}

impl Experiment {
    pub fn votes_jsonl(&self) -> String {
        to_jsonl(&self.votes)
    }
}

/// Allocate the tasks and draw one vote per assignment. Votes come out in
/// allocation order with a logical-clock timestamp.
pub fn run_experiment(config: &SimConfig) -> Result<Experiment, SimError> {
    config.validate()?;
    let workers = config.workers()?;
    let tasks = config.load_tasks()?;
    let roster: Vec<WorkerProfile> = workers
        .iter()
        .map(|w| WorkerProfile {
            worker_id: w.worker_id.clone(),
            native_language: w.native_language.clone(),
            other_languages: vec![],
        })
        .collect();
    let allocation_seed = derive_seed(config.seed, &["allocate"]);
    let alloc = AllocationConfig::new(
        config.allocation.repetitions,
        config.allocation.tasks_per_worker,
        allocation_seed,
    );
    let task_ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let assignments = allocate(&task_ids, &roster, &alloc)?;

    let by_worker: HashMap<&str, &SimWorker> = workers.iter().map(|w| (w.worker_id.as_str(), w)).collect();
    let truth: HashMap<&str, CorrectSlot> = tasks.iter().map(|t| (t.task_id.as_str(), t.ground_truth)).collect();
    let votes: Vec<Vote> = assignments
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let worker = by_worker[a.worker_id.as_str()];
            let seed = worker.assignment_seed(&a.assignment_id);
            Vote {
                assignment_id: a.assignment_id.clone(),
                task_id: a.task_id.clone(),
                worker_id: a.worker_id.clone(),
                choice: simulate_vote(worker, truth[a.task_id.as_str()], seed),
                timestamp: i as u64,
            }
        })
        .collect();

    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::to_value(config).expect("config serialises"),
    )
    .with_seed("master", config.seed)
    .with_seed("allocation", allocation_seed);
    if let TaskSource::Synthetic { .. } = config.tasks {
        manifest = manifest.with_seed("tasks", derive_seed(config.seed, &["tasks"]));
    }
    manifest
        .outputs
        .push(FileDigest::of_bytes("votes.jsonl", to_jsonl(&votes).as_bytes()));
    Ok(Experiment {
        tasks,
        roster,
        assignments,
        votes,
        manifest,
    })
}

/// Convenience for tests and examples: one homogeneous population on synthetic tasks.
pub fn homogeneous_config(
    seed: u64,
    tasks: usize,
    spec_labels: &[&str],
    groups: Vec<PopulationGroup>,
    repetitions: usize,
    tasks_per_worker: usize,
) -> SimConfig {
    SimConfig {
        seed,
        allocation: AllocationSettings {
            repetitions,
            tasks_per_worker,
        },
        tasks: TaskSource::Synthetic {
            count: tasks,
            spec_labels: spec_labels.iter().map(|s| s.to_string()).collect(),
            languages: default_languages(),
        },
        population: groups,
    }
}

impl PopulationGroup {
    pub fn new(count: usize, competence: f64, reject_awareness: f64, none_avoidance: f64) -> Self {
        PopulationGroup {
            count,
            competence,
            reject_awareness,
            none_avoidance,
            native_language: default_language(),
            id_prefix: None,
        }
    }
}
