//! Accuracy tables and the reject-bias analysis.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_all, group_by_task, AggregationError, Method, ReputationMode, Vote};
use crate::corpus::DEFAULT_SPEC_LABELS;
use crate::scalar::Scalar;
use crate::tasking::{Task, WorkerProfile};

/// Row order used by every table; unlisted keys follow alphabetically.
pub const ROW_ORDER: [&str; 11] = [
    "ar", "tr", "de", "en", "hi", "Indo-Aryan", "ru", "Slavic", "es", "Romance", "Tonal",
];

pub fn display_name(key: &str) -> &str {
    match key {
        "ar" => "Arabic",
        "tr" => "Turkish",
        "de" => "German",
        "en" => "English",
        "hi" => "Hindi",
        "ru" => "Russian",
        "es" => "Spanish",
        other => other,
    }
}

fn row_rank(key: &str) -> (usize, String) {
    let pos = ROW_ORDER.iter().position(|k| *k == key).unwrap_or(ROW_ORDER.len());
    (pos, key.to_string())
}

fn column_rank(label: &str) -> (usize, String) {
    let pos = DEFAULT_SPEC_LABELS
        .iter()
        .position(|k| *k == label)
        .unwrap_or(DEFAULT_SPEC_LABELS.len());
    (pos, label.to_string())
}

/// Groups native languages into families for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageFamilyMap {
    families: HashMap<String, String>,
}

impl LanguageFamilyMap {
    pub fn empty() -> Self {
        LanguageFamilyMap { families: HashMap::new() }
    }

    pub fn insert(&mut self, language: &str, family: &str) {
        self.families.insert(language.to_string(), family.to_string());
    }

    /// Family name when the language belongs to one, otherwise the tag itself.
    pub fn group_of<'a>(&'a self, language: &'a str) -> &'a str {
        self.families.get(language).map_or(language, String::as_str)
    }
}

impl Default for LanguageFamilyMap {
    fn default() -> Self {
        let mut map = LanguageFamilyMap::empty();
        let groups: [(&str, &[&str]); 4] = [
            ("Indo-Aryan", &["bn", "bh", "ur", "si", "gu", "mr", "ne"]),
            ("Slavic", &["pl", "cs", "hr", "uk", "bg", "sr", "sl", "sk"]),
            ("Romance", &["it", "pt", "fr"]),
            ("Tonal", &["zh", "vi"]),
        ];
        for (family, langs) in groups {
            for l in langs {
                map.insert(l, family);
            }
        }
        map
    }
}

/// Correct over total, kept as integers until rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ratio {
    pub correct: u64,
    pub total: u64,
}

impl Ratio {
    pub fn new(correct: u64, total: u64) -> Self {
        Ratio { correct, total }
    }

    pub fn record(&mut self, correct: bool) {
        self.total += 1;
        self.correct += u64::from(correct);
    }

    pub fn value<S: Scalar>(&self) -> Option<S> {
        (self.total > 0).then(|| S::from_f64_lossy(self.correct as f64 / self.total as f64))
    }

    /// Two decimals, rounding half up on the exact fraction; `n/a` when empty.
    pub fn render(&self) -> String {
        if self.total == 0 {
            return "n/a".to_string();
        }
        let hundredths = (200 * self.correct + self.total) / (2 * self.total);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTable {
    pub row_header: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Ratio>)>,
}

impl ReportTable {
    fn build(row_header: &str, cells: BTreeMap<(String, String), Ratio>, columns: Vec<String>) -> Self {
        let mut keys: Vec<String> = cells.keys().map(|(r, _)| r.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        keys.sort_by_key(|k| row_rank(k));
        let rows = keys
            .into_iter()
            .map(|k| {
                let values = columns
                    .iter()
                    .map(|c| cells.get(&(k.clone(), c.clone())).copied().unwrap_or_default())
                    .collect();
                (display_name(&k).to_string(), values)
            })
            .collect();
        ReportTable {
            row_header: row_header.to_string(),
            columns,
            rows,
        }
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<Ratio> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.iter().find(|(r, _)| r == row).map(|(_, v)| v[c])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once(self.row_header.as_str())
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        w.write_record(&header).expect("in-memory write");
        for (label, values) in &self.rows {
            let record: Vec<String> = std::iter::once(label.clone())
                .chain(values.iter().map(Ratio::render))
                .collect();
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = std::iter::once(self.row_header.len())
            .chain(self.columns.iter().map(String::len))
            .collect();
        for (label, values) in &self.rows {
            widths[0] = widths[0].max(label.len());
            for (i, v) in values.iter().enumerate() {
                widths[i + 1] = widths[i + 1].max(v.render().len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: Vec<String>| {
            let mut text = format!("{:<w$}", cells[0], w = widths[0]);
            for (i, c) in cells.iter().enumerate().skip(1) {
                let _ = write!(text, "  {:>w$}", c, w = widths[i]);
            }
            out.push_str(text.trim_end());
            out.push('\n');
        };
        line(std::iter::once(self.row_header.clone()).chain(self.columns.iter().cloned()).collect());
        for (label, values) in &self.rows {
            line(std::iter::once(label.clone()).chain(values.iter().map(Ratio::render)).collect());
        }
        out
    }
}

/// Which table to produce.
#[derive(Debug, Clone)]
pub enum ReportMode {
    /// Language by option set, listed-word sets only, individual votes.
    Table1,
    /// Worker native language (or family) by task language, listed-word sets only.
    Table2 {
        roster: Vec<WorkerProfile>,
        families: LanguageFamilyMap,
    },
    /// Language by option set and aggregation method, listed-word sets only.
    Table3 {
        reputation: ReputationMode,
        repetitions: usize,
    },
    /// Individual-vote accuracy per option set, every set.
    BySet,
}

fn task_index(tasks: &[Task]) -> HashMap<&str, &Task> {
    tasks.iter().map(|t| (t.task_id.as_str(), t)).collect()
}

fn lookup<'a>(index: &HashMap<&str, &'a Task>, task_id: &str) -> Result<&'a Task, AggregationError> {
    index
        .get(task_id)
        .copied()
        .ok_or_else(|| AggregationError::MissingGroundTruth(task_id.to_string()))
}

fn sorted_columns(labels: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut cols: Vec<String> = labels.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    cols.sort_by_key(|c| column_rank(c));
    cols
}

pub fn accuracy_report(votes: &[Vote], tasks: &[Task], mode: &ReportMode) -> Result<ReportTable, AggregationError> {
    let index = task_index(tasks);
    let mut cells: BTreeMap<(String, String), Ratio> = BTreeMap::new();
    match mode {
        ReportMode::Table1 | ReportMode::BySet => {
            let listed_only = matches!(mode, ReportMode::Table1);
            let mut columns = Vec::new();
            for v in votes {
                let task = lookup(&index, &v.task_id)?;
                if listed_only && !task.is_listed() {
                    continue;
                }
                let row = if listed_only { task.language_tag.clone() } else { "all".to_string() };
                columns.push(task.spec_label.clone());
                cells
                    .entry((row, task.spec_label.clone()))
                    .or_default()
                    .record(v.choice == task.ground_truth.correct_choice());
            }
            let header = if listed_only { "language" } else { "scope" };
            Ok(ReportTable::build(header, cells, sorted_columns(columns)))
        }
        ReportMode::Table2 { roster, families } => {
            let native: HashMap<&str, &str> = roster
                .iter()
                .map(|w| (w.worker_id.as_str(), w.native_language.as_str()))
                .collect();
            let mut columns = Vec::new();
            for v in votes {
                let task = lookup(&index, &v.task_id)?;
                if !task.is_listed() {
                    continue;
                }
                let lang = native
                    .get(v.worker_id.as_str())
                    .ok_or_else(|| AggregationError::UnknownWorker(v.worker_id.clone()))?;
                let row = families.group_of(lang).to_string();
                columns.push(task.language_tag.clone());
                cells
                    .entry((row, task.language_tag.clone()))
                    .or_default()
                    .record(v.choice == task.ground_truth.correct_choice());
            }
            let mut cols: Vec<String> = columns.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
            cols.sort_by_key(|c| row_rank(c));
            let mut table = ReportTable::build("native", cells, cols);
            table.columns = table.columns.iter().map(|c| display_name(c).to_string()).collect();
            Ok(table)
        }
        ReportMode::Table3 {
            reputation,
            repetitions,
        } => {
            // drop tasks that were never shown with listed truth before aggregating
            let listed: Vec<Vote> = votes
                .iter()
                .map(|v| lookup(&index, &v.task_id).map(|t| (v, t.is_listed())))
                .filter_map(|r| match r {
                    Ok((v, true)) => Some(Ok(v.clone())),
                    Ok((_, false)) => None,
                    Err(e) => Some(Err(e)),
                })
                .collect::<Result<_, _>>()?;
            let mut labels = Vec::new();
            let mut columns = Vec::new();
            for method in [Method::MajorityVote, Method::TieBreak] {
                for result in aggregate_all(&listed, method, reputation, *repetitions)? {
                    let task = lookup(&index, &result.task_id)?;
                    let column = format!("{}_{}", task.spec_label, method);
                    labels.push(task.spec_label.clone());
                    columns.push(column.clone());
                    cells
                        .entry((task.language_tag.clone(), column))
                        .or_default()
                        .record(result.label.is_correct(task.ground_truth));
                }
            }
            let order = sorted_columns(labels);
            let cols = order
                .iter()
                .flat_map(|l| [format!("{l}_MV"), format!("{l}_TB")])
                .collect();
            Ok(ReportTable::build("language", cells, cols))
        }
    }
}

/// Which side of 0.5 a worker's two accuracies fall on (strictly above counts as high).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quadrant {
    pub listed_high: bool,
    pub not_listed_high: bool,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |high: bool| if high { ">0.5" } else { "<=0.5" };
        write!(f, "listed{},not_listed{}", side(self.listed_high), side(self.not_listed_high))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerBias {
    pub worker_id: String,
    pub listed: Ratio,
    pub not_listed: Ratio,
}

impl WorkerBias {
    pub fn tasks(&self) -> u64 {
        self.listed.total + self.not_listed.total
    }

    /// `None` when either accuracy is undefined.
    pub fn quadrant(&self) -> Option<Quadrant> {
        let high = |r: &Ratio| 2 * r.correct > r.total;
        (self.listed.total > 0 && self.not_listed.total > 0).then(|| Quadrant {
            listed_high: high(&self.listed),
            not_listed_high: high(&self.not_listed),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectBiasReport {
    pub workers: Vec<WorkerBias>,
}

impl RejectBiasReport {
    /// Workers per quadrant among those with at least `min_tasks` tasks and both accuracies defined.
    pub fn quadrant_counts(&self, min_tasks: u64) -> BTreeMap<Quadrant, usize> {
        let mut counts = BTreeMap::new();
        for w in self.workers.iter().filter(|w| w.tasks() >= min_tasks) {
            if let Some(q) = w.quadrant() {
                *counts.entry(q).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Share of eligible workers in `quadrant`; `None` when no worker is eligible.
    pub fn share<S: Scalar>(&self, quadrant: Quadrant, min_tasks: u64) -> Option<S> {
        let counts = self.quadrant_counts(min_tasks);
        let total: usize = counts.values().sum();
        let hit = counts.get(&quadrant).copied().unwrap_or(0);
        Ratio::new(hit as u64, total as u64).value()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["worker_id", "tasks", "acc_listed", "acc_not_listed", "quadrant"])
            .expect("in-memory write");
        for b in &self.workers {
            w.write_record([
                b.worker_id.clone(),
                b.tasks().to_string(),
                b.listed.render(),
                b.not_listed.render(),
                b.quadrant().map_or("n/a".to_string(), |q| q.to_string()),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

pub fn reject_bias_report(votes: &[Vote], tasks: &[Task]) -> Result<RejectBiasReport, AggregationError> {
    let index = task_index(tasks);
    group_by_task(votes)?;
    let mut per_worker: BTreeMap<&str, (Ratio, Ratio)> = BTreeMap::new();
    for v in votes {
        let task = lookup(&index, &v.task_id)?;
        let entry = per_worker.entry(v.worker_id.as_str()).or_default();
        let ratio = if task.is_listed() { &mut entry.0 } else { &mut entry.1 };
        ratio.record(v.choice == task.ground_truth.correct_choice());
    }
    Ok(RejectBiasReport {
        workers: per_worker
            .into_iter()
            .map(|(id, (listed, not_listed))| WorkerBias {
                worker_id: id.to_string(),
                listed,
                not_listed,
            })
            .collect(),
    })
}
