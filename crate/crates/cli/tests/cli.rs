use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn gaitrehab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitrehab")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(&o));
    o
}

/// Standard fixture plus its extracted features, built once per test binary.
struct Shared {
    _dir: TempDir,
    root: PathBuf,
}

impl Shared {
    fn cohort(&self) -> PathBuf {
        self.root.join("fx").join("standard")
    }
    fn features(&self) -> PathBuf {
        self.root.join("features").join("features.csv")
    }
}

fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(gaitrehab(&["fixtures", "--cohort", "standard", "-o", s(&root.join("fx"))]));
        let manifest = root.join("fx/standard/manifest.json");
        ok(gaitrehab(&["extract", "--manifest", s(&manifest), "-o", s(&root.join("features"))]));
        Shared { _dir: dir, root }
    })
}

/// Copies the named trials of the shared cohort into `dir` with a manifest.
fn small_cohort(dir: &Path, trials: &[&str]) -> PathBuf {
    let src = shared().cohort();
    let mut entries = Vec::new();
    for t in trials {
        for ext in ["csv", "json"] {
            fs::copy(src.join(format!("{t}.{ext}")), dir.join(format!("{t}.{ext}"))).unwrap();
        }
        entries.push(serde_json::json!({ "trial": format!("{t}.csv"), "sidecar": format!("{t}.json"), "split": "train" }));
    }
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, serde_json::to_string(&entries).unwrap()).unwrap();
    manifest
}

#[test]
fn help_exits_zero() {
    let o = gaitrehab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("train-eval"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gaitrehab(&["extract", "--bogus"]).status.code(), Some(1));
    assert_eq!(gaitrehab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gaitrehab(&["--jobs", "0", "report"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[selection]\nalhpa = 0.1\n").unwrap();
    let o = gaitrehab(&["--config", s(&cfg), "report", "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    fs::write(&cfg, "[selection]\nalpha = 1.5\n").unwrap();
    let o = gaitrehab(&["--config", s(&cfg), "report", "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn fixtures_depend_only_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again");
    let other = dir.path().join("other");
    ok(gaitrehab(&["fixtures", "--cohort", "standard", "-o", s(&again)]));
    ok(gaitrehab(&["fixtures", "--cohort", "standard", "--seed", "2", "-o", s(&other)]));
    let base = shared().cohort();
    let read = |root: &Path, f: &str| fs::read(root.join(f)).unwrap();
    for f in ["manifest.json", "cohort.json", "P01_t1.csv", "C07_t3.csv", "P08_t2.json"] {
        assert_eq!(read(&base, f), read(&again.join("standard"), f), "{f}");
    }
    assert_ne!(read(&base, "P01_t1.csv"), read(&other.join("standard"), "P01_t1.csv"));
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(other.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 2);
}

#[test]
fn corrupt_trial_is_named_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), &["P01_t1", "C01_t1"]);
    let path = dir.path().join("C01_t1.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("0.5,LeftFoot,not-a-number,0,0,0,0,0,0,0,0\n");
    fs::write(&path, text).unwrap();
    let o = gaitrehab(&["extract", "--manifest", s(&manifest), "-o", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("C01_t1"), "{}", stderr(&o));
    assert!(!dir.path().join("out/features.csv").exists());
}

#[test]
fn missing_manifest_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaitrehab(&["extract", "--manifest", s(&dir.path().join("nope.json")), "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn windowed_extraction_adds_window_column() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), &["P02_t1", "C02_t1"]);
    let out = dir.path().join("out");
    ok(gaitrehab(&["extract", "--windowed", "--manifest", s(&manifest), "-o", s(&out)]));
    let csv = fs::read_to_string(out.join("features.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"window"));
    assert_eq!(header.len(), 6 + 243);
    assert!(csv.lines().count() > 3, "expected several windows per trial");
    let cfg = fs::read_to_string(out.join("config.json")).unwrap();
    assert!(cfg.contains("windowed"));
}

#[test]
fn train_eval_without_test_split_fails() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(shared().features()).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains(",test,")).collect();
    let path = dir.path().join("train_only.csv");
    fs::write(&path, kept.join("\n") + "\n").unwrap();
    let o = gaitrehab(&["train-eval", "--features", s(&path), "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("test split"), "{}", stderr(&o));
}

#[test]
fn select_writes_ranked_selection() {
    let dir = tempfile::tempdir().unwrap();
    ok(gaitrehab(&["select", "--features", s(&shared().features()), "--k", "5", "-o", s(dir.path())]));
    let sel: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("selection.json")).unwrap()).unwrap();
    assert_eq!(sel["features"].as_array().unwrap().len(), 5);
}

#[test]
fn train_eval_grade_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let features = shared().features();
    let o = ok(gaitrehab(&["train-eval", "--features", s(&features), "-o", s(out)]));
    let table = String::from_utf8_lossy(&o.stdout);
    for name in ["LDA", "PCA", "NB"] {
        assert!(table.contains(name), "{table}");
    }
    let text = fs::read_to_string(out.join("eval.json")).unwrap();
    let eval: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back: serde_json::Value = serde_json::from_str(&serde_json::to_string(&eval).unwrap()).unwrap();
    assert_eq!(back, eval);
    assert_eq!(eval["results"].as_array().unwrap().len(), 3);
    for kind in ["lda", "pca", "nb"] {
        assert!(out.join(format!("model_{kind}.json")).exists());
    }

    ok(gaitrehab(&["grade", "--train", s(&features), "--svg", "-o", s(out)]));
    let grades = fs::read_to_string(out.join("grades.csv")).unwrap();
    assert_eq!(grades.lines().next().unwrap(), "subject_id,days_post_op,scheme,G,band");
    for scheme in ["snr", "lda", "pca"] {
        let svg = fs::read_to_string(out.join(format!("grades_{scheme}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().filter(|n| n.has_tag_name("circle")).count() > 0);
    }

    let reload = out.join("regrade");
    let model = out.join("grading_lda.json");
    ok(gaitrehab(&["grade", "--model", s(&model), "--features", s(&features), "-o", s(&reload)]));
    let again = fs::read_to_string(reload.join("grades.csv")).unwrap();
    let lda = |t: &str| t.lines().filter(|l| l.contains(",lda,")).map(String::from).collect::<Vec<_>>();
    assert_eq!(lda(&grades), lda(&again));

    ok(gaitrehab(&["report", "--dir", s(out), "-o", s(out)]));
    let report = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(report.contains("LDA"));
}

#[test]
fn report_without_inputs_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gaitrehab(&["report", "-o", s(dir.path())]).status.code(), Some(1));
}
