use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdvote"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn train_model(dir: &Path) -> PathBuf {
    let model = dir.join("en.p2g");
    run(bin()
        .args(["p2g", "train", "--language", "en", "--pairs"])
        .arg(data("en_pairs.tsv"))
        .arg("--out")
        .arg(&model));
    model
}

#[test]
fn errors_are_one_line_with_nonzero_exit() {
    let out = bin().args(["p2g", "decode", "--model", "/nonexistent.p2g", "--phones", "K AE T"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));

    let out = bin().args(["tasks", "allocate", "--tasks", "a", "--roster", "b", "--out", "c"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn unknown_phone_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("bad.dict");
    std::fs::write(&dict, "CAT K AE1 T\nDOG D QQ G\n").unwrap();
    let out = bin().args(["lexicon", "validate", "--lexicon"]).arg(&dict).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.dict") && err.contains("QQ") && err.contains('2'), "{err}");
}

#[test]
fn decode_prints_one_string() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path());
    let out = run(bin().args(["p2g", "decode", "--phones", "K AE1 T", "--model"]).arg(&model));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "cat\n");
    assert!(dir.path().join("en.p2g.manifest.json").is_file());
}

#[test]
fn corpus_rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path());
    let out = dir.path().join("corpus.jsonl");
    run(bin()
        .args(["corpus", "build", "--language", "en", "--count", "20", "--seed", "7", "--lexicon"])
        .arg(data("en_sample.dict"))
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(&out));
    let first = std::fs::read(&out).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 120);
    std::fs::remove_file(&out).unwrap();
    let manifest = dir.path().join("corpus.jsonl.manifest.json");
    run(bin().args(["corpus", "build", "--threads", "1", "--config"]).arg(&manifest));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn tasks_generate_uses_env_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path());
    let corpus = dir.path().join("c.jsonl");
    run(bin()
        .args(["corpus", "build", "--language", "en", "--count", "3", "--seed", "1", "--specs", "S_0124", "--lexicon"])
        .arg(data("en_sample.dict"))
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(&corpus));
    let tasks = dir.path().join("t.jsonl");
    let out = bin()
        .args(["tasks", "generate", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&tasks)
        .env_remove("P2G_TTS_ENDPOINT")
        .output()
        .unwrap();
    assert!(!out.status.success());
    run(bin()
        .args(["tasks", "generate", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&tasks)
        .env("P2G_TTS_ENDPOINT", "https://tts.example/v1"));
    let text = std::fs::read_to_string(&tasks).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("https://tts.example/v1?lang=en&text="));
    let manifest = std::fs::read_to_string(dir.path().join("t.jsonl.manifest.json")).unwrap();
    assert!(manifest.contains("https://tts.example/v1"));
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.toml");
    std::fs::write(
        &sim,
        "[allocation]\nrepetitions = 3\ntasks_per_worker = 15\n[tasks.synthetic]\ncount = 60\nlanguages = [\"ar\", \"de\"]\n[[population]]\ncount = 12\ncompetence = 0.8\nnative_language = \"pl\"\n",
    )
    .unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run(bin().args(["simulate", "--seed", "4", "--sim"]).arg(&sim).arg("--out-dir").arg(out));
    }
    assert_eq!(
        std::fs::read(out_a.join("votes.jsonl")).unwrap(),
        std::fs::read(out_b.join("votes.jsonl")).unwrap()
    );
    let report = run(bin()
        .args(["report", "--mode", "table1", "--votes"])
        .arg(out_a.join("votes.jsonl"))
        .arg("--tasks")
        .arg(out_a.join("tasks.jsonl")));
    let csv = String::from_utf8(report.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["language", "Arabic", "German"]);
    let table2 = run(bin()
        .args(["report", "--mode", "table2", "--format", "text", "--votes"])
        .arg(out_a.join("votes.jsonl"))
        .arg("--tasks")
        .arg(out_a.join("tasks.jsonl"))
        .arg("--roster")
        .arg(out_a.join("roster.csv")));
    assert!(String::from_utf8(table2.stdout).unwrap().contains("Slavic"));
    let agg = out_a.join("labels.jsonl");
    run(bin()
        .args(["aggregate", "--method", "mv", "--votes"])
        .arg(out_a.join("votes.jsonl"))
        .arg("--out")
        .arg(&agg));
    assert_eq!(std::fs::read_to_string(&agg).unwrap().lines().count(), 60);
}
