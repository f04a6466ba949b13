//! Majority voting and reputation tie-breaking.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::choice::{Choice, CorrectSlot};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AggregationError {
    #[error("task {task_id} has {found} votes, expected {expected}")]
    WrongVoteCount {
        task_id: String,
        found: usize,
        expected: usize,
    },
    #[error("task {0} has no ground truth")]
    MissingGroundTruth(String),
    #[error("assignment {0} has more than one vote")]
    DuplicateVote(String),
    #[error("worker {0} is not in the roster")]
    UnknownWorker(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub assignment_id: String,
    pub task_id: String,
    pub worker_id: String,
    pub choice: Choice,
    /// Milliseconds since the Unix epoch (simulated logs use a logical clock).
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateLabel {
    Label(Choice),
    /// No choice reached a strict majority.
    NoMajority,
}

impl AggregateLabel {
    pub fn is_correct(self, truth: CorrectSlot) -> bool {
        self == AggregateLabel::Label(truth.correct_choice())
    }
}

impl fmt::Display for AggregateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateLabel::Label(c) => write!(f, "{c}"),
            AggregateLabel::NoMajority => f.write_str("NoMajority"),
        }
    }
}

impl Serialize for AggregateLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AggregateLabel::Label(c) => c.serialize(serializer),
            AggregateLabel::NoMajority => serializer.serialize_str("NoMajority"),
        }
    }
}

impl<'de> Deserialize<'de> for AggregateLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Choice::new(n).map(AggregateLabel::Label).map_err(de::Error::custom),
            Raw::Text(t) if t == "NoMajority" => Ok(AggregateLabel::NoMajority),
            Raw::Text(t) => Err(de::Error::custom(format!("unknown label {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MV")]
    MajorityVote,
    #[serde(rename = "TB")]
    TieBreak,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MajorityVote => "MV",
            Method::TieBreak => "TB",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub task_id: String,
    pub label: AggregateLabel,
    pub method: Method,
}

/// How a vote earns reputation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ReputationMode {
    /// Agreeing with a strict majority.
    #[default]
    Unsupervised,
    /// Agreeing with a strict majority and with the ground truth.
    Supervised(HashMap<String, CorrectSlot>),
}

/// Per-worker counts of qualifying majority-agreeing votes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReputationTable {
    pub counts: BTreeMap<String, u64>,
}

impl ReputationTable {
    pub fn get(&self, worker_id: &str) -> u64 {
        self.counts.get(worker_id).copied().unwrap_or(0)
    }
}

fn check_count<V: Borrow<Vote>>(votes: &[V], repetitions: usize) -> Result<(), AggregationError> {
    if votes.len() != repetitions || votes.is_empty() {
        return Err(AggregationError::WrongVoteCount {
            task_id: votes
                .first()
                .map(|v| v.borrow().task_id.clone())
                .unwrap_or_default(),
            found: votes.len(),
            expected: repetitions,
        });
    }
    Ok(())
}

/// The choice held by strictly more than half of the votes, if any.
fn strict_majority<V: Borrow<Vote>>(votes: &[V]) -> Option<Choice> {
    let mut tally = [0usize; 5];
    for v in votes {
        tally[v.borrow().choice.index()] += 1;
    }
    Choice::all().find(|c| 2 * tally[c.index()] > votes.len())
}

pub fn majority_vote<V: Borrow<Vote>>(votes: &[V], repetitions: usize) -> Result<AggregateLabel, AggregationError> {
    check_count(votes, repetitions)?;
    Ok(strict_majority(votes).map_or(AggregateLabel::NoMajority, AggregateLabel::Label))
}

/// Majority label, or else the vote of the most reputable voter
/// (equal reputations: smallest worker id).
pub fn tie_break_aggregate<V: Borrow<Vote>>(
    votes: &[V],
    reputation: &ReputationTable,
    repetitions: usize,
) -> Result<AggregateLabel, AggregationError> {
    check_count(votes, repetitions)?;
    if let Some(c) = strict_majority(votes) {
        return Ok(AggregateLabel::Label(c));
    }
    let winner = votes
        .iter()
        .map(Borrow::borrow)
        .min_by(|a: &&Vote, b: &&Vote| {
            reputation
                .get(&b.worker_id)
                .cmp(&reputation.get(&a.worker_id))
                .then_with(|| a.worker_id.cmp(&b.worker_id))
        })
        .expect("vote count checked");
    Ok(AggregateLabel::Label(winner.choice))
}

/// Group votes by task id (sorted), rejecting duplicate assignment ids.
pub fn group_by_task(votes: &[Vote]) -> Result<BTreeMap<&str, Vec<&Vote>>, AggregationError> {
    let mut seen = HashSet::new();
    let mut groups: BTreeMap<&str, Vec<&Vote>> = BTreeMap::new();
    for vote in votes {
        if !seen.insert(vote.assignment_id.as_str()) {
            return Err(AggregationError::DuplicateVote(vote.assignment_id.clone()));
        }
        groups.entry(vote.task_id.as_str()).or_default().push(vote);
    }
    Ok(groups)
}

pub fn compute_reputation(votes: &[Vote], mode: &ReputationMode) -> Result<ReputationTable, AggregationError> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (task_id, task_votes) in group_by_task(votes)? {
        for v in &task_votes {
            counts.entry(v.worker_id.clone()).or_insert(0);
        }
        let Some(majority) = strict_majority(&task_votes) else {
            continue;
        };
        let truth = match mode {
            ReputationMode::Unsupervised => None,
            ReputationMode::Supervised(truth) => Some(truth.get(task_id).map(|t| t.correct_choice())),
        };
        for v in &task_votes {
            let earns = v.choice == majority
                && match truth {
                    None => true,
                    Some(Some(correct)) => v.choice == correct,
                    Some(None) => false,
                };
            if earns {
                *counts.get_mut(&v.worker_id).expect("inserted above") += 1;
            }
        }
    }
    Ok(ReputationTable { counts })
}

/// Aggregate every task in the log with one method. Reputation is built from
/// the whole log before any tie is broken.
pub fn aggregate_all(
    votes: &[Vote],
    method: Method,
    reputation_mode: &ReputationMode,
    repetitions: usize,
) -> Result<Vec<AggregateResult>, AggregationError> {
    let reputation = match method {
        Method::MajorityVote => ReputationTable::default(),
        Method::TieBreak => compute_reputation(votes, reputation_mode)?,
    };
    group_by_task(votes)?
        .into_iter()
        .map(|(task_id, task_votes)| {
            let label = match method {
                Method::MajorityVote => majority_vote(&task_votes, repetitions)?,
                Method::TieBreak => tie_break_aggregate(&task_votes, &reputation, repetitions)?,
            };
            Ok(AggregateResult {
                task_id: task_id.to_string(),
                label,
                method,
            })
        })
        .collect()
}
