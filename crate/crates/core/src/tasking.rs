//! Voting tasks, audio references, worker rosters and assignment allocation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice::{CorrectSlot, LISTED_OPTIONS};
use crate::corpus::{Corpus, OptionSet, WordRef};
use crate::seed::{rng_from_seed, stable_id};

/// Environment variable holding the speech-synthesis endpoint.
pub const TTS_ENDPOINT_ENV: &str = "P2G_TTS_ENDPOINT";

/// RFC 3986 unreserved characters stay literal; everything else is escaped.
const QUERY_VALUE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("audio file {0} does not exist")]
    MissingLocalFile(PathBuf),
    #[error("no synthesis endpoint or audio directory configured (set {TTS_ENDPOINT_ENV})")]
    NoEndpointConfigured,
}

#[derive(Debug, Error)]
pub enum TaskingError {
    #[error("infeasible allocation: {0}")]
    Infeasible(String),
    #[error("invalid allocation config: {0}")]
    InvalidConfig(String),
    #[error("roster line {line}: {message}")]
    Roster { line: usize, message: String },
    #[error("duplicate worker id {0:?}")]
    DuplicateWorker(String),
    #[error("invalid task {task_id}: {message}")]
    InvalidTask { task_id: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub language_tag: String,
    pub word_ref: WordRef,
    pub spec_label: String,
    pub audio_ref: String,
    /// Display order, already shuffled.
    pub options: Vec<String>,
    /// Never sent to workers.
    pub ground_truth: CorrectSlot,
}

pub fn task_id_for(language: &str, headword: &str, spec_label: &str) -> String {
    stable_id("t-", &[language, headword, spec_label])
}

impl Task {
    pub fn from_option_set(set: &OptionSet, audio_ref: String) -> Result<Self, TaskingError> {
        let task = Task {
            task_id: task_id_for(&set.word_ref.language, &set.word_ref.headword, &set.spec_label),
            language_tag: set.word_ref.language.clone(),
            word_ref: set.word_ref.clone(),
            spec_label: set.spec_label.clone(),
            audio_ref,
            options: set.roman_options(),
            ground_truth: set.correct_slot,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), TaskingError> {
        let invalid = |message: &str| TaskingError::InvalidTask {
            task_id: self.task_id.clone(),
            message: message.to_string(),
        };
        if self.options.len() != LISTED_OPTIONS {
            return Err(invalid("a task needs exactly 4 options"));
        }
        if self.options.iter().collect::<HashSet<_>>().len() != LISTED_OPTIONS {
            return Err(invalid("options must be pairwise distinct"));
        }
        if self.audio_ref.is_empty() {
            return Err(invalid("audio_ref is empty"));
        }
        Ok(())
    }

    /// Listed-word sets are those whose ground truth is one of the four strings.
    pub fn is_listed(&self) -> bool {
        self.ground_truth.is_listed()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AudioSource {
    /// `{endpoint}?lang={tag}&text={word}`; nothing is fetched at generation time.
    Remote { endpoint: String },
    /// `{dir}/{tag}/{word}.mp3`, which must exist.
    Local { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AudioConfig {
    pub source: Option<AudioSource>,
}

impl AudioConfig {
    pub fn remote(endpoint: impl Into<String>) -> Self {
        AudioConfig {
            source: Some(AudioSource::Remote {
                endpoint: endpoint.into(),
            }),
        }
    }

    pub fn local(dir: impl Into<PathBuf>) -> Self {
        AudioConfig {
            source: Some(AudioSource::Local { dir: dir.into() }),
        }
    }

    /// Local directory wins, then an explicit endpoint, then `P2G_TTS_ENDPOINT`.
    pub fn resolve_settings(local_dir: Option<PathBuf>, endpoint: Option<String>) -> Self {
        if let Some(dir) = local_dir {
            return Self::local(dir);
        }
        match endpoint.or_else(|| std::env::var(TTS_ENDPOINT_ENV).ok().filter(|e| !e.is_empty())) {
            Some(endpoint) => Self::remote(endpoint),
            None => AudioConfig::default(),
        }
    }
}

pub fn percent_encode(text: &str) -> String {
    utf8_percent_encode(text, QUERY_VALUE).to_string()
}

pub fn resolve_audio(word: &str, language: &str, config: &AudioConfig) -> Result<String, AudioError> {
    match &config.source {
        None => Err(AudioError::NoEndpointConfigured),
        Some(AudioSource::Remote { endpoint }) => Ok(format!(
            "{endpoint}?lang={}&text={}",
            percent_encode(language),
            percent_encode(word)
        )),
        Some(AudioSource::Local { dir }) => {
            let path = local_audio_path(dir, language, word);
            if path.is_file() {
                Ok(path.to_string_lossy().into_owned())
            } else {
                Err(AudioError::MissingLocalFile(path))
            }
        }
    }
}

pub fn local_audio_path(dir: &Path, language: &str, word: &str) -> PathBuf {
    dir.join(language).join(format!("{word}.mp3"))
}

/// Anything that can map a (headword, language) pair to an audio reference.
pub trait AudioResolver {
    fn resolve(&self, headword: &str, language: &str) -> Result<String, AudioError>;
}

impl AudioResolver for AudioConfig {
    fn resolve(&self, headword: &str, language: &str) -> Result<String, AudioError> {
        resolve_audio(headword, language, self)
    }
}

impl<F> AudioResolver for F
where
    F: Fn(&str, &str) -> Result<String, AudioError>,
{
    fn resolve(&self, headword: &str, language: &str) -> Result<String, AudioError> {
        self(headword, language)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioFailure {
    pub word: WordRef,
    pub error: AudioError,
}

impl fmt::Display for AudioFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}: {}", self.word.language, self.word.headword, self.error)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TaskGeneration {
    pub tasks: Vec<Task>,
    /// One entry per word whose audio could not be resolved; its tasks are skipped.
    pub failures: Vec<AudioFailure>,
}

pub fn generate_tasks(corpus: &Corpus, resolver: &dyn AudioResolver) -> Result<TaskGeneration, TaskingError> {
    let mut audio: BTreeMap<(&str, &str), Option<String>> = BTreeMap::new();
    let mut out = TaskGeneration::default();
    for set in &corpus.option_sets {
        let key = (set.word_ref.language.as_str(), set.word_ref.headword.as_str());
        let resolved = audio.entry(key).or_insert_with(|| {
            match resolver.resolve(&set.word_ref.headword, &set.word_ref.language) {
                Ok(r) => Some(r),
                Err(error) => {
                    out.failures.push(AudioFailure {
                        word: set.word_ref.clone(),
                        error,
                    });
                    None
                }
            }
        });
        if let Some(audio_ref) = resolved {
            out.tasks.push(Task::from_option_set(set, audio_ref.clone())?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub worker_id: String,
    pub native_language: String,
    #[serde(default)]
    pub other_languages: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RosterRow {
    worker_id: String,
    native_language: String,
    #[serde(default)]
    other_languages: String,
}

/// Parse a roster CSV: `worker_id,native_language,other_languages` with a
/// header row; other languages are `;`-separated.
pub fn parse_roster(text: &str) -> Result<Vec<WorkerProfile>, TaskingError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut workers = Vec::new();
    let mut seen = HashSet::new();
    for (idx, row) in reader.deserialize::<RosterRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| TaskingError::Roster {
            line,
            message: e.to_string(),
        })?;
        if row.worker_id.is_empty() || row.native_language.is_empty() {
            return Err(TaskingError::Roster {
                line,
                message: "worker_id and native_language are required".into(),
            });
        }
        if !seen.insert(row.worker_id.clone()) {
            return Err(TaskingError::DuplicateWorker(row.worker_id));
        }
        workers.push(WorkerProfile {
            worker_id: row.worker_id,
            native_language: row.native_language,
            other_languages: row
                .other_languages
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        });
    }
    Ok(workers)
}

pub fn write_roster(workers: &[WorkerProfile]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for w in workers {
        writer
            .serialize(RosterRow {
                worker_id: w.worker_id.clone(),
                native_language: w.native_language.clone(),
                other_languages: w.other_languages.join(";"),
            })
            .expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignmentStatus {
    Pending,
    Voted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub assignment_id: String,
    pub task_id: String,
    pub worker_id: String,
    pub status: AssignmentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationConfig {
    pub repetitions: usize,
    pub tasks_per_worker: usize,
    pub seed: u64,
}

impl AllocationConfig {
    pub fn new(repetitions: usize, tasks_per_worker: usize, seed: u64) -> Self {
        AllocationConfig {
            repetitions,
            tasks_per_worker,
            seed,
        }
    }
}

/// Assign every task to `repetitions` distinct workers, at most
/// `tasks_per_worker` each.
///
/// Task copies go to the least-loaded workers, with ties broken by keys drawn
/// from the seeded stream (re-drawn whenever a worker's load changes). Loads
/// therefore never differ by more than one, so the allocation succeeds
/// whenever the capacity arithmetic allows it. Inputs are sorted by id first;
/// the result does not depend on the order tasks or workers were given in.
pub fn allocate(
    task_ids: &[String],
    workers: &[WorkerProfile],
    config: &AllocationConfig,
) -> Result<Vec<Assignment>, TaskingError> {
    if config.repetitions == 0 || config.tasks_per_worker == 0 {
        return Err(TaskingError::InvalidConfig(
            "repetitions and tasks_per_worker must be >= 1".into(),
        ));
    }
    let needed = config.repetitions * task_ids.len();
    let capacity = config.tasks_per_worker * workers.len();
    if needed > capacity {
        return Err(TaskingError::Infeasible(format!(
            "{} tasks x {} repetitions = {needed} > {} workers x {} = {capacity}",
            task_ids.len(),
            config.repetitions,
            workers.len(),
            config.tasks_per_worker
        )));
    }
    if !task_ids.is_empty() && workers.len() < config.repetitions {
        return Err(TaskingError::Infeasible(format!(
            "{} workers cannot give {} distinct votes per task",
            workers.len(),
            config.repetitions
        )));
    }

    let mut worker_ids: Vec<&str> = workers.iter().map(|w| w.worker_id.as_str()).collect();
    worker_ids.sort_unstable();
    if worker_ids.windows(2).any(|w| w[0] == w[1]) {
        let dup = worker_ids.windows(2).find(|w| w[0] == w[1]).expect("checked")[0];
        return Err(TaskingError::DuplicateWorker(dup.to_string()));
    }
    let mut tasks: Vec<&str> = task_ids.iter().map(String::as_str).collect();
    tasks.sort_unstable();
    tasks.dedup();

    let mut rng = rng_from_seed(config.seed);
    tasks.shuffle(&mut rng);
    let mut queue: BTreeSet<(usize, u64, usize)> =
        (0..worker_ids.len()).map(|w| (0, rng.gen::<u64>(), w)).collect();

    let mut assignments = Vec::with_capacity(tasks.len() * config.repetitions);
    let mut picked = Vec::with_capacity(config.repetitions);
    for task_id in tasks {
        picked.clear();
        for _ in 0..config.repetitions {
            picked.push(queue.pop_first().expect("enough workers"));
        }
        for &(load, _, w) in &picked {
            debug_assert!(load < config.tasks_per_worker);
            let worker_id = worker_ids[w];
            assignments.push(Assignment {
                assignment_id: stable_id("a-", &[task_id, worker_id]),
                task_id: task_id.to_string(),
                worker_id: worker_id.to_string(),
                status: AssignmentStatus::Pending,
            });
            queue.insert((load + 1, rng.gen::<u64>(), w));
        }
    }
    Ok(assignments)
}
