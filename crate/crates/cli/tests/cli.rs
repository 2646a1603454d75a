use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use aoi_core::export::ResultDocument;
use tempfile::TempDir;

fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/student")
}

/// A writable copy of the shipped student dataset.
fn copy_sample() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(sample_dir()).unwrap() {
        let path = entry.unwrap().path();
        fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
    }
    dir
}

fn aoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi"))
        .args(args)
        .env_remove("AOI_DATA_DIR")
        .output()
        .unwrap()
}

fn aoi_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_aoi"))
        .args(args)
        .env_remove("AOI_DATA_DIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn task(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn graduate_rule_with_weights() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&["induce", "--data", &d, "--task", &task(dir.path(), "graduate.json"), "--output", "rules"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "forall(x) graduate(x) -> (Birthplace(x) in Canada AND GPA(x) in Excellent) [50%] OR \
         (Major(x) in Science AND Birthplace(x) in Foreign AND GPA(x) in Good) [50%]\n"
    );
}

#[test]
fn qualitative_unicode_rule() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&[
        "induce", "--data", &d, "--task", &task(dir.path(), "undergraduate.json"),
        "--output", "rules", "--form", "qualitative", "--unicode",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "∀(x) undergraduate(x) → (Birthplace(x) ∈ Canada ∧ GPA(x) ∈ {Average, Excellent, Good})\n"
    );
}

#[test]
fn classification_table_layout() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&["induce", "--data", &d, "--task", &task(dir.path(), "classification.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].starts_with("study"));
    assert!(lines[0].ends_with("d-weight"));
    assert!(text.contains("graduate       Science  Foreign     Good       3     50%       100%"));
}

#[test]
fn flags_override_the_task_file() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&[
        "induce", "--data", &d, "--task", &task(dir.path(), "graduate.json"),
        "--no-simplify", "--attr-threshold", "5", "--level", "birthplace=country", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = ResultDocument::from_json(&stdout(&out)).unwrap();
    let votes: Vec<u64> = doc.classes[0].tuples.iter().map(|t| t.vote).collect();
    assert_eq!(votes, [1, 2, 3]);
    assert_eq!(doc.attributes[1].level, "country");
}

#[test]
fn relation_threshold_flag() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&[
        "induce", "--data", &d, "--task", &task(dir.path(), "graduate.json"),
        "--rel-threshold", "1", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = ResultDocument::from_json(&stdout(&out)).unwrap();
    assert_eq!(doc.classes[0].tuples.len(), 1);
    assert_eq!(doc.classes[0].tuples[0].vote, 6);
}

#[test]
fn output_is_deterministic() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let args = ["induce", "--data", &d, "--task", &task(dir.path(), "classification.json"), "--output", "json"];
    let a = aoi(&args);
    let b = aoi(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn data_dir_from_environment() {
    let dir = copy_sample();
    let out = Command::new(env!("CARGO_BIN_EXE_aoi"))
        .args(["induce", "--task", &task(dir.path(), "graduate.json"), "--output", "rules"])
        .env("AOI_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn missing_hierarchy_names_the_expected_file() {
    let dir = copy_sample();
    fs::remove_file(dir.path().join("hierarchy_birth.csv")).unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["induce", "--data", &d, "--task", &task(dir.path(), "graduate.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("hierarchy_birthplace.csv"), "{err}");
}

#[test]
fn missing_fact_file_is_named() {
    let dir = copy_sample();
    fs::remove_file(dir.path().join("student.csv")).unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["induce", "--data", &d, "--task", &task(dir.path(), "graduate.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("student.csv"), "{}", stderr(&out));
}

#[test]
fn malformed_task_is_an_input_error() {
    let dir = copy_sample();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"fact": "student", "colour": 1}"#).unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["induce", "--data", &d, "--task", &bad.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
}

#[test]
fn validate_passes_on_the_sample() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    for name in ["graduate.json", "undergraduate.json", "classification.json"] {
        let out = aoi(&["validate", "--data", &d, "--task", &task(dir.path(), name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        assert!(stdout(&out).lines().all(|l| l.starts_with("PASS ")), "{}", stdout(&out));
    }
}

#[test]
fn validate_reports_a_case_only_mismatch() {
    let dir = copy_sample();
    let fact = dir.path().join("student.csv");
    let text = fs::read_to_string(&fact).unwrap().replace("literature", "Literature");
    fs::write(&fact, text).unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["validate", "--data", &d, "--task", &task(dir.path(), "undergraduate.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("FAIL precheck"), "{}", stdout(&out));
}

#[test]
fn validate_rejects_a_value_missing_from_its_hierarchy() {
    let dir = copy_sample();
    let fact = dir.path().join("student.csv");
    let text = fs::read_to_string(&fact).unwrap().replace("Bombay", "Atlantis");
    fs::write(&fact, text).unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["validate", "--data", &d, "--task", &task(dir.path(), "graduate.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Atlantis"), "{}", stderr(&out));
}

#[test]
fn empty_contrasting_class_is_an_error() {
    let dir = copy_sample();
    let fact = dir.path().join("student.csv");
    let text = fs::read_to_string(&fact).unwrap();
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| ["Name", "M.A.", "M.S.", "Ph.D."].iter().any(|k| l.contains(k)))
        .collect();
    fs::write(&fact, kept.join("\n") + "\n").unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&["validate", "--data", &d, "--task", &task(dir.path(), "classification.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("contrasting"), "{}", stderr(&out));
}

#[test]
fn gensql_files_run_through_runsql() {
    let dir = copy_sample();
    let out_dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let out = aoi(&[
        "gensql", "--data", &d, "--task", &task(dir.path(), "classification.json"),
        "--out-dir", &out_dir.path().display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let names: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(names.len(), 9);
    assert_eq!(names[0], "schema.sql");
    assert_eq!(names[8], "08-classification-final.sql");
    for name in &names[1..] {
        let path = out_dir.path().join(name).display().to_string();
        let run = aoi(&["runsql", &path, "--data", &d]);
        assert_eq!(run.status.code(), Some(0), "{name}: {}", stderr(&run));
    }
    let last = aoi(&["runsql", &out_dir.path().join(&names[8]).display().to_string(), "--data", &d]);
    assert_eq!(stdout(&last).lines().count(), 9);
}

#[test]
fn gensql_to_stdout_labels_each_stage() {
    let dir = copy_sample();
    let d = dir.path().display().to_string();
    let out = aoi(&["gensql", "--data", &d, "--task", &task(dir.path(), "graduate.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for label in ["-- schema", "-- select-class", "-- vote", "-- further"] {
        assert!(text.contains(label), "{label} missing");
    }
    assert!(text.contains("count(c.studyprog) as Vote"));
}

#[test]
fn runsql_reads_stdin_and_prints_json() {
    let out = aoi_stdin(
        &["runsql", "--data", &sample_dir().display().to_string(), "--output", "json"],
        "select b.study, count(*) as n from student a, hierarchy_cat b \
         where a.category=b.category group by b.study;",
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["columns"], serde_json::json!(["study", "n"]));
    assert_eq!(v[0]["rows"], serde_json::json!([["graduate", "6"], ["undergraduate", "6"]]));
}

#[test]
fn runsql_rejects_or() {
    let out = aoi_stdin(
        &["runsql", "--data", &sample_dir().display().to_string()],
        "select a.* from student a where a.gpa >= 3 or a.gpa <= 2",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("OR"), "{}", stderr(&out));
}

#[test]
fn bad_flag_value_exits_with_usage_error() {
    let out = aoi(&["induce", "--data", ".", "--task", "x.json", "--level", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
