use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use crowdvote::aggregation::{aggregate_all, Method, ReputationMode, Vote};
use crowdvote::corpus::{build_corpus_with_threads, parse_spec_list, select_words, Corpus, SelectionConfig};
use crowdvote::crowdsim::{run_experiment, SimConfig};
use crowdvote::jsonl::{from_jsonl, to_jsonl};
use crowdvote::lexicon::{parse_lexicon, validate_entry, Lexicon, PhoneInventory};
use crowdvote::manifest::{FileDigest, RunManifest};
use crowdvote::p2g::{self, decode, parse_training_pairs, train, TrainConfig};
use crowdvote::report::{accuracy_report, reject_bias_report, LanguageFamilyMap, ReportMode};
use crowdvote::tasking::{allocate, generate_tasks, parse_roster, write_roster, AllocationConfig, AudioConfig, AudioSource};
use crowdvote::{Assignment, Task, TrainOutcomeF32, TrainOutcomeF64, P2GModelF64};
use crowdvote_service::VoteStore;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    from_jsonl(&read_text(path)?).with_context(|| format!("{}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Start a manifest whose config is the command's own arguments.
fn manifest_for<A: Serialize>(subcommand: &str, args: &A, inputs: &[&Path]) -> anyhow::Result<RunManifest> {
    let mut m = RunManifest::new(subcommand, serde_json::to_value(args)?);
    for p in inputs {
        m.inputs
            .push(FileDigest::of_file(p).with_context(|| format!("hashing {}", p.display()))?);
    }
    Ok(m)
}

/// Write the artifacts, then the manifest next to the first one.
fn finish(mut manifest: RunManifest, outputs: &[(&Path, &[u8])]) -> anyhow::Result<()> {
    for (path, bytes) in outputs {
        write_file(path, bytes)?;
        manifest.outputs.push(FileDigest::of_bytes(path.display().to_string(), bytes));
    }
    let primary = outputs.first().expect("at least one artifact").0;
    write_file(&RunManifest::path_for(primary), manifest.to_json().as_bytes())
}

fn language_from(path: &Path, explicit: &Option<String>) -> String {
    explicit.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "und".to_string())
    })
}

fn load_lexicon(path: &Path, inventory: &Option<PathBuf>, language: &str) -> anyhow::Result<(Lexicon, usize, Vec<String>)> {
    let inv = match inventory {
        Some(p) => PhoneInventory::parse(language, &read_text(p)?).with_context(|| format!("{}", p.display()))?,
        None => PhoneInventory::arpabet(language),
    };
    let parsed = parse_lexicon(&read_text(path)?, &inv).with_context(|| format!("{}", path.display()))?;
    let rejected = parsed
        .rejected
        .iter()
        .map(|r| format!("{}:{}: {}", path.display(), r.line, r.reason))
        .collect();
    Ok((parsed.lexicon, parsed.variants_dropped, rejected))
}

#[derive(Debug, Args, Serialize)]
pub struct LexiconValidateArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Phone inventory (`SYMBOL V|C` per line); defaults to the bundled ARPAbet set.
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Language tag; defaults to the lexicon file stem.
    #[arg(long)]
    pub language: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub min_len: usize,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
}

pub fn lexicon_validate(a: LexiconValidateArgs) -> anyhow::Result<()> {
    let language = language_from(&a.lexicon, &a.language);
    let (lex, variants, rejected) = load_lexicon(&a.lexicon, &a.inventory, &language)?;
    let out_of_band = lex
        .entries
        .iter()
        .filter(|e| validate_entry(e, &lex.inventory, a.min_len, a.max_len).is_err())
        .count();
    let mut out = std::io::stdout().lock();
    writeln!(out, "language\t{language}")?;
    writeln!(out, "entries\t{}", lex.len())?;
    writeln!(out, "in_band\t{}", lex.len() - out_of_band)?;
    writeln!(out, "variants_dropped\t{variants}")?;
    writeln!(out, "rejected\t{}", rejected.len())?;
    for r in rejected {
        writeln!(out, "rejected_line\t{r}")?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusBuildArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    #[arg(long)]
    pub language: Option<String>,
    /// Trained p2g model; defaults to the lexicon path with a `.p2g` extension.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "S_0124,S_0112,S_0111,S_1234,S_1124,S_1111")]
    pub specs: String,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub min_len: usize,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Defaults to `<lexicon stem>.corpus.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn corpus_build(a: CorpusBuildArgs) -> anyhow::Result<()> {
    let language = language_from(&a.lexicon, &a.language);
    let specs = parse_spec_list(&a.specs)?;
    if specs.is_empty() {
        bail!("--specs is empty");
    }
    let (lex, _, _) = load_lexicon(&a.lexicon, &a.inventory, &language)?;
    let model_path = a.model.clone().unwrap_or_else(|| a.lexicon.with_extension("p2g"));
    let model: P2GModelF64 = p2g::load(&std::fs::read(&model_path).with_context(|| format!("reading {}", model_path.display()))?)
        .with_context(|| format!("{}", model_path.display()))?;
    let selection = SelectionConfig {
        target_count: a.count,
        min_len: a.min_len,
        max_len: a.max_len,
        seed: a.seed,
    };
    let words = select_words(&lex, &selection)?;
    let chosen = Lexicon {
        entries: words,
        ..lex
    };
    let threads = a.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let corpus = build_corpus_with_threads(&chosen, &specs, &model, a.seed, threads)?;
    let out = a.out.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}.corpus.jsonl",
            a.lexicon.file_stem().unwrap_or_default().to_string_lossy()
        ))
    });
    let mut inputs: Vec<&Path> = vec![&a.lexicon, &model_path];
    if let Some(inv) = &a.inventory {
        inputs.push(inv);
    }
    let manifest = manifest_for("corpus build", &a, &inputs)?.with_seed("seed", a.seed);
    finish(manifest, &[(&out, corpus.to_jsonl().as_bytes())])?;
    eprintln!("wrote {} option sets to {}", corpus.option_sets.len(), out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args, Serialize)]
pub struct P2gTrainArgs {
    /// Tab-separated `word<TAB>PHONES` training pairs.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub language: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3)]
    pub max_chunk: usize,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
}

pub fn p2g_train(a: P2gTrainArgs) -> anyhow::Result<()> {
    let pairs = parse_training_pairs(&read_text(&a.pairs)?).with_context(|| format!("{}", a.pairs.display()))?;
    let config = TrainConfig {
        max_iters: a.max_iters,
        loglik_tol: a.tol,
        smoothing_alpha: a.alpha,
        max_chunk: a.max_chunk,
    };
    let (bytes, iterations, loglik, skipped) = match a.precision {
        Precision::F64 => {
            let o: TrainOutcomeF64 = train(&pairs, &config, &a.language)?;
            let m = o.model.training_meta();
            (p2g::save(&o.model), m.iterations_run, m.final_loglik, o.skipped)
        }
        Precision::F32 => {
            let o: TrainOutcomeF32 = train(&pairs, &config, &a.language)?;
            let m = o.model.training_meta();
            (p2g::save(&o.model), m.iterations_run, m.final_loglik as f64, o.skipped)
        }
    };
    for (idx, reason) in &skipped {
        eprintln!("skipped pair {}: {reason}", idx + 1);
    }
    let manifest = manifest_for("p2g train", &a, &[&a.pairs])?;
    finish(manifest, &[(&a.out, &bytes)])?;
    eprintln!("trained on {} pairs, {iterations} iterations, log-likelihood {loglik:.6}", pairs.len() - skipped.len());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct P2gDecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Space-separated phones, e.g. "SH T AY N".
    #[arg(long)]
    pub phones: String,
}

pub fn p2g_decode(a: P2gDecodeArgs) -> anyhow::Result<()> {
    let model: P2GModelF64 = p2g::load(&std::fs::read(&a.model).with_context(|| format!("reading {}", a.model.display()))?)
        .with_context(|| format!("{}", a.model.display()))?;
    let phones: Vec<String> = a.phones.split_whitespace().map(crowdvote::lexicon::normalize_phone).collect();
    println!("{}", decode(&model, &phones)?);
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct TasksGenerateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Pre-recorded audio at `<dir>/<language>/<WORD>.mp3`.
    #[arg(long)]
    pub audio_dir: Option<PathBuf>,
    /// Text-to-speech endpoint; falls back to `P2G_TTS_ENDPOINT`.
    #[arg(long)]
    pub tts_endpoint: Option<String>,
}

pub fn tasks_generate(mut a: TasksGenerateArgs) -> anyhow::Result<()> {
    let audio = AudioConfig::resolve_settings(a.audio_dir.clone(), a.tts_endpoint.clone());
    match &audio.source {
        None => bail!("no audio source: pass --audio-dir or --tts-endpoint, or set P2G_TTS_ENDPOINT"),
        // record the endpoint actually used so the manifest can repeat the run
        Some(AudioSource::Remote { endpoint }) => a.tts_endpoint = Some(endpoint.clone()),
        Some(AudioSource::Local { .. }) => {}
    }
    let corpus = Corpus::from_jsonl(&read_text(&a.corpus)?).with_context(|| format!("{}", a.corpus.display()))?;
    let generated = generate_tasks(&corpus, &audio)?;
    for f in &generated.failures {
        eprintln!("skipped {f}");
    }
    if generated.tasks.is_empty() && !corpus.option_sets.is_empty() {
        bail!("no task could be generated: every word's audio failed to resolve");
    }
    let manifest = manifest_for("tasks generate", &a, &[&a.corpus])?;
    finish(manifest, &[(&a.out, to_jsonl(&generated.tasks).as_bytes())])?;
    eprintln!("wrote {} tasks to {}", generated.tasks.len(), a.out.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct TasksAllocateArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    /// CSV with `worker_id,native_language,other_languages`.
    #[arg(long)]
    pub roster: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 15)]
    pub tasks_per_worker: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn tasks_allocate(a: TasksAllocateArgs) -> anyhow::Result<()> {
    let tasks: Vec<Task> = read_jsonl(&a.tasks)?;
    let roster = parse_roster(&read_text(&a.roster)?).with_context(|| format!("{}", a.roster.display()))?;
    let ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let assignments = allocate(&ids, &roster, &AllocationConfig::new(a.repetitions, a.tasks_per_worker, a.seed))?;
    let manifest = manifest_for("tasks allocate", &a, &[&a.tasks, &a.roster])?.with_seed("seed", a.seed);
    finish(manifest, &[(&a.out, to_jsonl(&assignments).as_bytes())])?;
    eprintln!("wrote {} assignments to {}", assignments.len(), a.out.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub assignments: PathBuf,
    /// Append-only vote log; created if missing, replayed if present.
    #[arg(long)]
    pub votes: PathBuf,
    /// Directory of static files for the voting page.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

pub fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let tasks: Vec<Task> = read_jsonl(&a.tasks)?;
    let assignments: Vec<Assignment> = read_jsonl(&a.assignments)?;
    let store = VoteStore::open(tasks, assignments, &a.votes)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crowdvote_service::serve(Arc::new(store), a.static_dir.clone(), a.addr, |addr| {
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
    }))?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Simulation config (TOML): population, task source, allocation.
    #[arg(long)]
    pub sim: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Receives tasks.jsonl, roster.csv, assignments.jsonl and votes.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut config = SimConfig::from_toml(&read_text(&a.sim)?).with_context(|| format!("{}", a.sim.display()))?;
    config.seed = a.seed;
    let run = run_experiment(&config)?;
    let mut manifest = manifest_for("simulate", &a, &[&a.sim])?;
    manifest.seeds = run.manifest.seeds.clone();
    if let serde_json::Value::Object(map) = &mut manifest.config {
        map.insert("simulation".into(), serde_json::to_value(&config)?);
    }
    let votes = a.out_dir.join("votes.jsonl");
    let tasks = a.out_dir.join("tasks.jsonl");
    let roster = a.out_dir.join("roster.csv");
    let assignments = a.out_dir.join("assignments.jsonl");
    finish(
        manifest,
        &[
            (&votes, run.votes_jsonl().as_bytes()),
            (&tasks, to_jsonl(&run.tasks).as_bytes()),
            (&roster, write_roster(&run.roster).as_bytes()),
            (&assignments, to_jsonl(&run.assignments).as_bytes()),
        ],
    )?;
    eprintln!("wrote {} votes to {}", run.votes.len(), votes.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Mv,
    Tb,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReputationArg {
    Unsupervised,
    Supervised,
}

fn reputation_mode(mode: ReputationArg, tasks: Option<&[Task]>) -> anyhow::Result<ReputationMode> {
    Ok(match mode {
        ReputationArg::Unsupervised => ReputationMode::Unsupervised,
        ReputationArg::Supervised => {
            let Some(tasks) = tasks else {
                bail!("--reputation supervised needs --tasks");
            };
            ReputationMode::Supervised(tasks.iter().map(|t| (t.task_id.clone(), t.ground_truth)).collect::<HashMap<_, _>>())
        }
    })
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub votes: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Tb)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = ReputationArg::Unsupervised)]
    pub reputation: ReputationArg,
    /// Needed for supervised reputation.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Defaults to standard output (no manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn aggregate(a: AggregateArgs) -> anyhow::Result<()> {
    let votes: Vec<Vote> = read_jsonl(&a.votes)?;
    let tasks: Option<Vec<Task>> = a.tasks.as_deref().map(read_jsonl).transpose()?;
    let mode = reputation_mode(a.reputation, tasks.as_deref())?;
    let method = match a.method {
        MethodArg::Mv => Method::MajorityVote,
        MethodArg::Tb => Method::TieBreak,
    };
    let results = aggregate_all(&votes, method, &mode, a.repetitions)?;
    let text = to_jsonl(&results);
    match &a.out {
        Some(out) => {
            let mut inputs: Vec<&Path> = vec![&a.votes];
            if let Some(t) = &a.tasks {
                inputs.push(t);
            }
            finish(manifest_for("aggregate", &a, &inputs)?, &[(out, text.as_bytes())])
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Table1,
    Table2,
    Table3,
    BySet,
    RejectBias,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long, value_enum)]
    pub mode: ReportKind,
    #[arg(long)]
    pub votes: PathBuf,
    #[arg(long)]
    pub tasks: PathBuf,
    /// Worker roster CSV (table2).
    #[arg(long)]
    pub roster: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value_t = ReputationArg::Unsupervised)]
    pub reputation: ReputationArg,
    /// Minimum tasks per worker counted in the reject-bias summary.
    #[arg(long, default_value_t = 20)]
    pub min_tasks: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Defaults to standard output (no manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn report(a: ReportArgs) -> anyhow::Result<()> {
    let votes: Vec<Vote> = read_jsonl(&a.votes)?;
    let tasks: Vec<Task> = read_jsonl(&a.tasks)?;
    let text = match a.mode {
        ReportKind::RejectBias => {
            let report = reject_bias_report(&votes, &tasks)?;
            let mut text = report.to_csv();
            let counts = report.quadrant_counts(a.min_tasks);
            let eligible: usize = counts.values().sum();
            for (q, n) in counts {
                text.push_str(&format!("# {q}: {n}/{eligible} workers with >= {} tasks\n", a.min_tasks));
            }
            text
        }
        kind => {
            let mode = match kind {
                ReportKind::Table1 => ReportMode::Table1,
                ReportKind::BySet => ReportMode::BySet,
                ReportKind::Table2 => {
                    let Some(roster) = &a.roster else {
                        bail!("--mode table2 needs --roster");
                    };
                    ReportMode::Table2 {
                        roster: parse_roster(&read_text(roster)?).with_context(|| format!("{}", roster.display()))?,
                        families: LanguageFamilyMap::default(),
                    }
                }
                ReportKind::Table3 => ReportMode::Table3 {
                    reputation: reputation_mode(a.reputation, Some(&tasks))?,
                    repetitions: a.repetitions,
                },
                ReportKind::RejectBias => unreachable!("handled above"),
            };
            let table = accuracy_report(&votes, &tasks, &mode)?;
            match a.format {
                Format::Csv => table.to_csv(),
                Format::Text => table.to_text(),
            }
        }
    };
    match &a.out {
        Some(out) => {
            let mut inputs: Vec<&Path> = vec![&a.votes, &a.tasks];
            if let Some(r) = &a.roster {
                inputs.push(r);
            }
            finish(manifest_for("report", &a, &inputs)?, &[(out, text.as_bytes())])
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
