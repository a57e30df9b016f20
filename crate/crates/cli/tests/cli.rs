use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GOLD: &str = "Le B-PER\npatient I-PER\na O\nun O\nrdv O\nParis B-LOC\n";
const PRED: &str = "Le B-PER\npatient O\na O\nun O\nrdv O\nParis B-LOC\n";

fn nereval(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nereval")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn workspace(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        let path: PathBuf = dir.path().join(name);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, body).unwrap();
    }
    dir
}

#[test]
fn evaluate_defaults_to_entity_strict_markdown() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let out = nereval(&["evaluate", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("label | precision | recall | f1 | support\n"));
    assert!(text.contains("LOC | 100.00 | 100.00 | 100.00 | 1\n"));
    assert!(text.contains("micro avg | 50.00 | 50.00 | 50.00 | 2\n"));
}

#[test]
fn evaluate_json_follows_report_schema() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let out = nereval(&["evaluate", "-m", "token-with-O", "-f", "json", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let weighted = v["averages"]["weighted"]["f1"].as_f64().unwrap();
    assert!((weighted - 16.0 / 21.0).abs() < 1e-12);
    assert!(v["classes"].as_array().unwrap().iter().any(|c| c["label"] == "O"));
    assert!(v.get("generated_at").is_none());
}

#[test]
fn compare_worked_pair_headlines() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let out = nereval(&["compare", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("entity-strict | model | 50.00 |"), "{text}");
    assert!(text.contains("token-with-O | model | 76.19 |"), "{text}");
    assert!(text.contains("entity-without-O | model | 100.00 |"), "{text}");
}

#[test]
fn compare_identical_files_scores_one_everywhere() {
    let ws = workspace(&[("gold.conll", GOLD)]);
    let out = nereval(&["compare", "-f", "json", "gold.conll", "gold.conll"], ws.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for row in v["rows"].as_array().unwrap() {
        for (_, cell) in row["cells"].as_object().unwrap() {
            assert_eq!(cell["mean"].as_f64(), Some(1.0), "{row}");
        }
    }
}

#[test]
fn compare_several_runs_reports_spread() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let out = nereval(&["compare", "-m", "entity-strict", "gold.conll", "pred.conll", "gold.conll"], ws.path());
    assert!(stdout(&out).contains("entity-strict | model | 75.00 ± 35.36 |"), "{}", stdout(&out));
}

#[test]
fn compare_rejects_empty_methodology_list() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let out = nereval(&["compare", "--methodologies", "", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty());
}

#[test]
fn misaligned_files_exit_2_with_locations() {
    let pred = "Le B-PER\npatient O\na O\nun O\nParis B-LOC\n";
    let ws = workspace(&[("gold.conll", &format!("a O\n\n{GOLD}")), ("pred.conll", &format!("a O\n\n{pred}"))]);
    let out = nereval(&["evaluate", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("pred.conll:3") && err.contains("gold.conll:3"), "{err}");
    assert!(err.contains("sequence 2") && err.contains("6 gold tokens but 5 predicted"), "{err}");
    assert!(stdout(&out).is_empty());
}

#[test]
fn malformed_conll_names_file_and_line() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", "Le B-PER\nlonely\n")]);
    let out = nereval(&["evaluate", "gold.conll", "pred.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pred.conll:2: malformed line"), "{}", stderr(&out));
}

#[test]
fn missing_file_and_unknown_methodology_exit_2() {
    let ws = workspace(&[("gold.conll", GOLD)]);
    let out = nereval(&["evaluate", "gold.conll", "nope.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.conll"));
    let out = nereval(&["evaluate", "-m", "lenient", "gold.conll", "gold.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown methodology"));
}

#[test]
fn inapplicable_flag_is_rejected_before_reading() {
    let ws = workspace(&[]);
    let out = nereval(&["evaluate", "--o-policy", "exclude", "missing.conll", "missing.conll"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--o-policy"), "{}", stderr(&out));
}

#[test]
fn offset_exact_pairs_ann_files_by_stem() {
    let ws = workspace(&[
        ("gold/a.ann", "T1\tDISO 10 18\tdiabète\nT2\tANAT 0 4;8 12\txxx\nR1\tRel Arg1:T1 Arg2:T2\n"),
        ("pred/a.ann", "T1\tDISO 10 17\tdiabèt\nT2\tANAT 0 4;8 12\txxx\n"),
        ("gold/b.ann", "T1\tDISO 1 2\tx\n"),
        ("gold/notes.txt", "ignored"),
    ]);
    let out = nereval(&["evaluate", "-m", "offset-exact", "-f", "csv", "gold", "pred"], ws.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("'b'"), "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(csv.contains("ANAT,100.00,100.00,100.00,1"), "{csv}");
    assert!(csv.contains("DISO,0.00,0.00,0.00,2"), "{csv}");
}

#[test]
fn aggregate_runs_file() {
    let ws = workspace(&[
        (
            "runs.json",
            r#"{"runs":[{"seed":1,"metrics":{"f1":70.0}},{"seed":2,"metrics":{"f1":71.0}},{"seed":3,"metrics":{"f1":72.0}}]}"#,
        ),
        ("one.json", r#"{"runs":[{"seed":1,"metrics":{"f1":73.03}}]}"#),
        ("bad.json", r#"{"runs":[{"seed":1,"metrics":{"f1":"high"}}]}"#),
    ]);
    let out = nereval(&["aggregate", "runs.json"], ws.path());
    assert!(stdout(&out).contains("f1 | 71.00 ± 1.00 | 3\n"));
    let out = nereval(&["aggregate", "one.json"], ws.path());
    let text = stdout(&out);
    assert!(text.contains("f1 | 73.03 ± 0.00 | 1\n") && text.contains("n=1"), "{text}");
    let out = nereval(&["aggregate", "bad.json"], ws.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json"));
}

#[test]
fn vocab_toy_pair() {
    let ws = workspace(&[
        ("a.txt", "▁le\n▁patient\nient\npat\n▁a\n"),
        ("b.txt", "le\t-1.5\npatient\n##ient\ndi\n##abète\n"),
        ("words.txt", "le diabète\n"),
    ]);
    let args = ["vocab", "--marker-a", "prefix:▁", "--marker-b", "continuation:##", "--words", "words.txt"];
    let out = nereval(&[&args[..], &["-f", "json", "a.txt", "b.txt"]].concat(), ws.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["intersection"]["shared"], 3);
    assert_eq!(v["intersection"]["shared_over_a"], 0.6);
    assert_eq!(v["intersection"]["shared_over_b"], 0.6);
    assert!((v["intersection"]["jaccard"].as_f64().unwrap() - 3.0 / 7.0).abs() < 1e-12);

    let out = nereval(&["vocab", "a.txt", "a.txt"], ws.path());
    assert!(stdout(&out).contains("jaccard | 100.00%"), "{}", stdout(&out));
    let out = nereval(&["vocab", "a.txt", "missing.txt"], ws.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn carbon_reproduces_reference_rows() {
    let ws = workspace(&[]);
    for (gpus, hours, device, kg) in
        [("128", "20", "V100", "26.11"), ("48", "20", "A100", "8.16"), ("2", "39", "V100", "0.80")]
    {
        let out = nereval(&["carbon", "--gpus", gpus, "--hours", hours, "--device", device], ws.path());
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout(&out).contains(&format!("CO2-eq (kg) | {kg}\n")), "{}", stdout(&out));
    }
}

#[test]
fn carbon_input_errors_exit_2() {
    let ws = workspace(&[]);
    for args in [
        &["carbon", "--gpus", "2", "--hours", "3", "--device", "H100"][..],
        &["carbon", "--gpus", "2", "--hours", "-3", "--device", "V100"],
        &["carbon", "--gpus", "2", "--hours", "3"],
        &["carbon", "--gpus", "2", "--hours", "3", "--device", "V100", "--power", "0.3"],
    ] {
        let out = nereval(args, ws.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stdout(&out).is_empty());
    }
}

#[test]
fn output_is_deterministic_without_timestamp() {
    let ws = workspace(&[("gold.conll", GOLD), ("pred.conll", PRED)]);
    let a = stdout(&nereval(&["compare", "-f", "json", "gold.conll", "pred.conll"], ws.path()));
    let b = stdout(&nereval(&["compare", "-f", "json", "gold.conll", "pred.conll"], ws.path()));
    assert_eq!(a, b);
    let stamped = stdout(&nereval(&["--timestamp", "compare", "-f", "json", "gold.conll", "pred.conll"], ws.path()));
    let v: serde_json::Value = serde_json::from_str(&stamped).unwrap();
    assert!(v["generated_at"].as_u64().unwrap() > 0);
}
