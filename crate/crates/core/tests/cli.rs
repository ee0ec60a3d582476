//! End-to-end tests of the `mrsynth` binary: happy paths for every
//! subcommand, determinism of sampling output, and the exit-code contract
//! (0 success, 1 usage, 2 data error, 3 backtranslator failure).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrsynth::bundled::{TOY_AMBIGUOUS, TOY_RIGHT_RECURSIVE};
use mrsynth::load_grammar;

fn mrsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).expect("fixture write");
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn weight_of(g: &mrsynth::WeightedGrammarF64, rendered: &str) -> f64 {
    let id = (0..g.grammar().num_rules())
        .find(|&id| g.grammar().render_rule(id) == rendered)
        .unwrap_or_else(|| panic!("no rule '{rendered}'"));
    g.weight(id)
}

#[test]
fn parse_reports_tree_counts_as_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_AMBIGUOUS);
    let corpus = write(dir.path(), "corpus.txt", "x x x\nx\n");
    let out = mrsynth(&[
        "parse",
        "--grammar",
        grammar.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--show-tree",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let lines: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("jsonl"))
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["mr"], "x x x");
    assert_eq!(lines[0]["trees"], 2);
    assert_eq!(lines[0]["exact"], true);
    assert!(lines[0]["tree"].as_str().unwrap().contains('S'));
    assert_eq!(lines[1]["trees"], 1);
    assert!(stderr(&out).contains("parsed 2 instances, 0 unparseable"));
}

#[test]
fn parse_writes_to_the_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_AMBIGUOUS);
    let corpus = write(dir.path(), "corpus.txt", "x x\n");
    let out_path = dir.path().join("parsed.jsonl");
    let out = mrsynth(&[
        "parse",
        "--grammar",
        grammar.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let body = std::fs::read_to_string(&out_path).unwrap();
    let record: serde_json::Value = serde_json::from_str(body.trim()).unwrap();
    assert_eq!(record["trees"], 1);
}

#[test]
fn estimate_recovers_the_fractional_count_weights() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_AMBIGUOUS);
    let corpus = write(dir.path(), "corpus.txt", "x x x\n");
    let fitted = dir.path().join("fitted.cfg");
    let out = mrsynth(&[
        "estimate",
        "--grammar",
        grammar.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        fitted.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("estimated from 1 instances"));
    let loaded = load_grammar::<f64>(&fitted).unwrap();
    assert_eq!(weight_of(&loaded, "S -> S S"), 0.4);
    assert_eq!(weight_of(&loaded, "S -> 'x'"), 0.6);
}

#[test]
fn estimate_uniform_mode_ignores_the_corpus_counts() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_AMBIGUOUS);
    let corpus = write(dir.path(), "corpus.txt", "x x x\n");
    let fitted = dir.path().join("uniform.cfg");
    let out = mrsynth(&[
        "estimate",
        "--grammar",
        grammar.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--mode",
        "uniform",
        "--out",
        fitted.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let loaded = load_grammar::<f64>(&fitted).unwrap();
    assert_eq!(weight_of(&loaded, "S -> S S"), 0.5);
    assert_eq!(weight_of(&loaded, "S -> 'x'"), 0.5);
}

#[test]
fn sample_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let args = [
        "--seed",
        "7",
        "sample",
        "--grammar",
        grammar.to_str().unwrap(),
        "--count",
        "5",
    ];
    let first = mrsynth(&args);
    let second = mrsynth(&args);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert_eq!(first.stdout, second.stdout, "same seed, same bytes");

    let lines: Vec<serde_json::Value> = stdout(&first)
        .lines()
        .map(|l| serde_json::from_str(l).expect("jsonl"))
        .collect();
    assert_eq!(lines.len(), 5);
    let mut seen = BTreeSet::new();
    for line in &lines {
        let mr = line["mr"].as_str().expect("mr field");
        assert!(seen.insert(mr.to_string()), "duplicate sample {mr}");
        assert!(line["logprob"].as_f64().expect("logprob") <= 0.0);
        assert!(line["depth"].is_object());
    }

    let other = mrsynth(&[
        "--seed",
        "8",
        "sample",
        "--grammar",
        grammar.to_str().unwrap(),
        "--count",
        "5",
    ]);
    assert_eq!(code(&other), 0);
    assert_ne!(first.stdout, other.stdout, "different seed, different draws");
}

#[test]
fn sample_excludes_the_supplied_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let exclude = write(dir.path(), "train.txt", "b\na b\n");
    let out = mrsynth(&[
        "sample",
        "--grammar",
        grammar.to_str().unwrap(),
        "--count",
        "4",
        "--exclude",
        exclude.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    for line in stdout(&out).lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let mr = record["mr"].as_str().unwrap();
        assert!(mr != "b" && mr != "a b", "excluded MR {mr} was sampled");
    }
}

#[test]
fn enumerate_lists_a_finite_language_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", "S -> 'a' B\nB -> 'b'\nB -> 'c'\n");
    let out = mrsynth(&["enumerate", "--grammar", grammar.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let strings: BTreeSet<String> = stdout(&out).lines().map(String::from).collect();
    let expected: BTreeSet<String> = ["a b", "a c"].iter().map(|s| s.to_string()).collect();
    assert_eq!(strings, expected);
    assert!(stderr(&out).contains("2 strings (finite: true, complete: true, language size: 2)"));
}

#[test]
fn analyze_writes_the_report_and_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let train = write(dir.path(), "train.tsv", "b\tb\nwalk then b\ta b\n");
    let test = write(dir.path(), "test.tsv", "b\tb\n");
    let report_path = dir.path().join("report.json");
    let out = mrsynth(&[
        "analyze",
        "--grammar",
        grammar.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--ngram",
        "1",
        "--ngram",
        "2",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("dataset"), "table header present: {table}");
    assert!(table.contains("train"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["dataset"], "train");
    assert_eq!(report["test_instances"], 1);
    // Test MR "b" occurs verbatim in the train MRs.
    assert_eq!(report["rows"][0]["mrs"]["instance_coverage"], 100.0);
}

#[test]
fn augment_emits_dataset_files_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let original = write(dir.path(), "train.tsv", "walk\tb\nwalk twice\ta b\n");
    let out_dir = dir.path().join("augmented");
    let out = mrsynth(&[
        "--seed",
        "11",
        "augment",
        "--grammar",
        grammar.to_str().unwrap(),
        "--original",
        original.to_str().unwrap(),
        "--count",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let manifest: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("manifest json");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["requested"], 3);
    assert_eq!(manifest["returned"], 3);
    assert_eq!(manifest["weights_mode"], "uniform");
    assert_eq!(manifest["layout"], "concat");
    assert_eq!(manifest["grammar_sha256"].as_str().unwrap().len(), 64);

    for name in ["synthetic.tsv", "train_augmented.tsv", "manifest.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk, manifest);

    // Echo backtranslation: each synthetic line carries the MR as sentence.
    let synthetic = std::fs::read_to_string(out_dir.join("synthetic.tsv")).unwrap();
    assert_eq!(synthetic.lines().count(), 3);
    for line in synthetic.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3);
        assert_eq!(fields[0], fields[1]);
        assert_eq!(fields[2], "synthetic");
    }
    let combined = std::fs::read_to_string(out_dir.join("train_augmented.tsv")).unwrap();
    assert_eq!(combined.lines().count(), 5);
}

#[test]
fn help_and_version_exit_zero() {
    let help = mrsynth(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("Usage"));
    let version = mrsynth(&["--version"]);
    assert_eq!(code(&version), 0);
    assert!(stdout(&version).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_one() {
    let unknown_flag = mrsynth(&["parse", "--no-such-flag"]);
    assert_eq!(code(&unknown_flag), 1);

    let bad_layout = mrsynth(&["augment", "--layout", "sideways"]);
    assert_eq!(code(&bad_layout), 1);

    let bad_filter = mrsynth(&["sample", "--filter", "max-depth-of("]);
    assert_eq!(code(&bad_filter), 1);

    let bad_weights = mrsynth(&["augment", "--weights", "mle:"]);
    assert_eq!(code(&bad_weights), 1);

    let missing_subcommand = mrsynth(&[]);
    assert_eq!(code(&missing_subcommand), 1);
}

#[test]
fn unknown_dataset_extension_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let train = write(dir.path(), "train.txt", "walk\tb\n");
    let test = write(dir.path(), "test.tsv", "walk\tb\n");
    let out = mrsynth(&[
        "analyze",
        "--grammar",
        grammar.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--out",
        dir.path().join("report.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cannot infer dataset format"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = mrsynth(&[
        "parse",
        "--grammar",
        dir.path().join("absent.cfg").to_str().unwrap(),
        "--corpus",
        dir.path().join("absent.txt").to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("error:"));

    let malformed = write(dir.path(), "broken.cfg", "S ->\n");
    let corpus = write(dir.path(), "corpus.txt", "x\n");
    let bad_syntax = mrsynth(&[
        "parse",
        "--grammar",
        malformed.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad_syntax), 2);
}

#[test]
fn backtranslator_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = write(dir.path(), "g.cfg", TOY_RIGHT_RECURSIVE);
    let original = write(dir.path(), "train.tsv", "walk\tb\n");
    let out_dir = dir.path().join("augmented");
    let table = dir.path().join("absent-table.tsv");
    let out = mrsynth(&[
        "augment",
        "--grammar",
        grammar.to_str().unwrap(),
        "--original",
        original.to_str().unwrap(),
        "--count",
        "2",
        "--backtranslator",
        &format!("table:{}", table.display()),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(!out_dir.exists(), "no partial outputs on failure");
}
