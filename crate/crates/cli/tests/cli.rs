use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cogroup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogroup"))
        .args(args)
        .output()
        .expect("run cogroup")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_synth(dir: &Path) {
    let out = cogroup(&[
        "--seed", "2", "synth", "--n-samples", "40", "--n-taxa", "15", "--blocks", "3", "--planted", "1,7,12",
        "--out", p(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn version_names_tool_and_format() {
    let out = cogroup(&["--version"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("cogroup "), "{text}");
    assert!(text.contains("table format 1"), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&cogroup(&["discover", "--bogus"])), 2);
    let missing = tmp.path().join("nothing");
    let out = cogroup(&["discover", "--dataset", p(&missing), "--no-graph", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[optimizer]\npopsize = 3\n").unwrap();
    let out = cogroup(&["--config", p(&cfg), "synth", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn parse_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let ab = tmp.path().join("ab.tsv");
    let f = tmp.path().join("f.tsv");
    fs::write(&ab, "sample\tt1\tt2\ns1\t1\tx\ns2\t2\t3\n").unwrap();
    fs::write(&f, "sample\ty\ns1\t1\ns2\t2\n").unwrap();
    let out = cogroup(&["ingest", "--abundance", p(&ab), "--function", p(&f), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn validation_and_numeric_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_synth(&data);
    let adj = data.join("adjacency.tsv");
    let out = cogroup(&[
        "select-k", "--dataset", p(&data), "--adjacency", p(&adj), "--k-min", "5", "--k-max", "3",
        "--out", p(tmp.path()),
    ]);
    assert_eq!(code(&out), 4);

    let out = cogroup(&["infer-net", "--dataset", p(&data), "--max-iterations", "1", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluate_writes_one_row_per_repeat() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_synth(&data);
    let out_dir = tmp.path().join("eval");
    let out = cogroup(&[
        "evaluate", "--dataset", p(&data), "--adjacency", p(&data.join("adjacency.tsv")), "--methods",
        "graph,baseline", "--repeats", "100", "--k", "3", "--population", "40", "--generations", "40",
        "--out", p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(out_dir.join("per_repeat.tsv")).unwrap();
    for m in ["graph", "baseline"] {
        let n = rows.lines().filter(|l| l.split('\t').nth(1) == Some(m)).count();
        assert_eq!(n, 100, "{m}");
    }
    let t = fs::read_to_string(out_dir.join("t_tests.tsv")).unwrap();
    assert_eq!(t.lines().count(), 2);
    assert!(out_dir.join("run_config.toml").is_file());
}

#[test]
fn graph_methods_need_an_adjacency() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_synth(&data);
    let out = cogroup(&["evaluate", "--dataset", p(&data), "--methods", "graph", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    let out = cogroup(&["discover", "--dataset", p(&data), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn flags_override_config_in_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "seed = 4\n[synth]\nn_taxa = 20\nn_samples = 30\nplanted_group = [0, 5]\n").unwrap();
    let out_dir = tmp.path().join("s");
    let out = cogroup(&["--config", p(&cfg), "--seed", "8", "synth", "--n-taxa", "12", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let snap = fs::read_to_string(out_dir.join("run_config.toml")).unwrap();
    assert!(snap.contains("seed = 8"));
    assert!(snap.contains("n_taxa = 12"));
    assert!(snap.contains("n_samples = 30"));
    let header = fs::read_to_string(out_dir.join("abundance.tsv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split('\t').count(), 13);
}
