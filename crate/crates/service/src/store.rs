use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use crowdvote::choice::{Choice, NONE_OF_THE_ABOVE_TEXT};
use crowdvote::jsonl::to_jsonl;
use crowdvote::{Assignment, Task, Vote};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown worker {0}")]
    UnknownWorker(String),
    #[error("unknown assignment {0}")]
    UnknownAssignment(String),
    #[error("assignment {0} already has a vote")]
    AlreadyVoted(String),
    #[error("assignment {assignment_id} does not belong to worker {worker_id}")]
    NotYourAssignment { assignment_id: String, worker_id: String },
    #[error("choice {0} is outside 0..=4")]
    BadChoice(i64),
    #[error("assignment {assignment_id} refers to unknown task {task_id}")]
    UnknownTask { assignment_id: String, task_id: String },
    #[error("duplicate assignment id {0}")]
    DuplicateAssignment(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl StoreError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::UnknownWorker(_) => "UnknownWorker",
            StoreError::UnknownAssignment(_) => "UnknownAssignment",
            StoreError::AlreadyVoted(_) => "AlreadyVoted",
            StoreError::NotYourAssignment { .. } => "NotYourAssignment",
            StoreError::BadChoice(_) => "BadChoice",
            StoreError::UnknownTask { .. } => "UnknownTask",
            StoreError::DuplicateAssignment(_) => "DuplicateAssignment",
            StoreError::Corrupt { .. } => "Corrupt",
            StoreError::Io { .. } => "Io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What a worker's browser sees: no ground truth, distances, set label or headword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientTaskView {
    pub assignment_id: String,
    pub task_id: String,
    pub language: String,
    pub audio_ref: String,
    /// The four listed strings followed by "none of the above".
    pub options: Vec<String>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task(ClientTaskView),
    Done { progress: Progress },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub assignment_id: String,
    pub progress: Progress,
}

struct Inner {
    file: File,
    votes: Vec<Vote>,
    voted: HashSet<String>,
}

/// Assignments plus the durable vote log.
///
/// Every accepted vote is appended as one JSON line and synced to disk before
/// the call returns. Opening a store replays the log; a partial trailing line
/// (a crash between write and sync) is cut off.
pub struct VoteStore {
    path: PathBuf,
    tasks: HashMap<String, Task>,
    assignments: HashMap<String, Assignment>,
    /// assignment ids per worker in file order
    by_worker: HashMap<String, Vec<String>>,
    inner: Mutex<Inner>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl VoteStore {
    pub fn open(tasks: Vec<Task>, assignments: Vec<Assignment>, log_path: &Path) -> Result<Self, StoreError> {
        let tasks: HashMap<String, Task> = tasks.into_iter().map(|t| (t.task_id.clone(), t)).collect();
        let mut by_worker: HashMap<String, Vec<String>> = HashMap::new();
        let mut by_id = HashMap::new();
        for a in assignments {
            if !tasks.contains_key(&a.task_id) {
                return Err(StoreError::UnknownTask {
                    assignment_id: a.assignment_id,
                    task_id: a.task_id,
                });
            }
            if by_id.contains_key(&a.assignment_id) {
                return Err(StoreError::DuplicateAssignment(a.assignment_id));
            }
            by_worker
                .entry(a.worker_id.clone())
                .or_default()
                .push(a.assignment_id.clone());
            by_id.insert(a.assignment_id.clone(), a);
        }

        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(log_path)
            .map_err(io_err(log_path))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io_err(log_path))?;
        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            file.set_len(complete as u64).map_err(io_err(log_path))?;
            file.sync_all().map_err(io_err(log_path))?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err(log_path))?;

        let mut votes = Vec::new();
        let mut voted = HashSet::new();
        for (idx, line) in text[..complete].lines().enumerate() {
            let corrupt = |message: String| StoreError::Corrupt {
                path: log_path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let vote: Vote = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            let a = by_id
                .get(&vote.assignment_id)
                .ok_or_else(|| corrupt(format!("unknown assignment {}", vote.assignment_id)))?;
            if a.worker_id != vote.worker_id || a.task_id != vote.task_id {
                return Err(corrupt(format!("vote does not match assignment {}", vote.assignment_id)));
            }
            if !voted.insert(vote.assignment_id.clone()) {
                return Err(corrupt(format!("second vote for {}", vote.assignment_id)));
            }
            votes.push(vote);
        }

        Ok(VoteStore {
            path: log_path.to_path_buf(),
            tasks,
            assignments: by_id,
            by_worker,
            inner: Mutex::new(Inner { file, votes, voted }),
        })
    }

    pub fn log_path(&self) -> &Path {
        &self.path
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // a panic while holding the lock cannot leave a half-applied vote in memory
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn progress_locked(&self, inner: &Inner, worker_id: &str) -> Result<Progress, StoreError> {
        let ids = self
            .by_worker
            .get(worker_id)
            .ok_or_else(|| StoreError::UnknownWorker(worker_id.to_string()))?;
        Ok(Progress {
            done: ids.iter().filter(|id| inner.voted.contains(*id)).count(),
            total: ids.len(),
        })
    }

    pub fn progress(&self, worker_id: &str) -> Result<Progress, StoreError> {
        let inner = self.lock();
        self.progress_locked(&inner, worker_id)
    }

    /// The worker's first pending assignment in file order.
    pub fn next_task(&self, worker_id: &str) -> Result<NextTask, StoreError> {
        let inner = self.lock();
        let progress = self.progress_locked(&inner, worker_id)?;
        let pending = self.by_worker[worker_id].iter().find(|id| !inner.voted.contains(*id));
        let Some(id) = pending else {
            return Ok(NextTask::Done { progress });
        };
        let assignment = &self.assignments[id];
        let task = &self.tasks[&assignment.task_id];
        let mut options = task.options.clone();
        options.push(NONE_OF_THE_ABOVE_TEXT.to_string());
        Ok(NextTask::Task(ClientTaskView {
            assignment_id: id.clone(),
            task_id: task.task_id.clone(),
            language: task.language_tag.clone(),
            audio_ref: task.audio_ref.clone(),
            options,
            progress,
        }))
    }

    pub fn submit_vote(&self, assignment_id: &str, worker_id: &str, choice: i64) -> Result<Ack, StoreError> {
        if !self.by_worker.contains_key(worker_id) {
            return Err(StoreError::UnknownWorker(worker_id.to_string()));
        }
        let assignment = self
            .assignments
            .get(assignment_id)
            .ok_or_else(|| StoreError::UnknownAssignment(assignment_id.to_string()))?;
        if assignment.worker_id != worker_id {
            return Err(StoreError::NotYourAssignment {
                assignment_id: assignment_id.to_string(),
                worker_id: worker_id.to_string(),
            });
        }
        let choice = Choice::new(choice).map_err(|e| StoreError::BadChoice(e.0))?;

        let mut inner = self.lock();
        if inner.voted.contains(assignment_id) {
            return Err(StoreError::AlreadyVoted(assignment_id.to_string()));
        }
        let vote = Vote {
            assignment_id: assignment_id.to_string(),
            task_id: assignment.task_id.clone(),
            worker_id: worker_id.to_string(),
            choice,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis() as u64),
        };
        let line = to_jsonl(std::iter::once(&vote));
        inner.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        inner.file.sync_data().map_err(io_err(&self.path))?;
        inner.voted.insert(vote.assignment_id.clone());
        inner.votes.push(vote);
        let progress = self.progress_locked(&inner, worker_id)?;
        Ok(Ack {
            assignment_id: assignment_id.to_string(),
            progress,
        })
    }

    pub fn votes(&self) -> Vec<Vote> {
        self.lock().votes.clone()
    }

    /// The vote log as JSON lines, in acceptance order.
    pub fn export_votes(&self) -> String {
        to_jsonl(&self.lock().votes)
    }
}
