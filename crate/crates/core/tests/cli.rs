use std::path::Path;
use std::process::{Command, Output};

fn refine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refine")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_fixture(dir: &Path) {
    std::fs::write(
        dir.join("synth.toml"),
        "n_per_class = 30\nn_classes = 3\nn_dims = 4\ncluster_spread = 1.0\ncenter_scale = 2.0\nseed = 1\n",
    )
    .unwrap();
    let out = refine(&["synth", "--spec", &p(dir.join("synth.toml")), "--out", &p(dir.join("data"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(dir.join("labeled.csv"), "index\n0\n31\n62\n").unwrap();
    std::fs::write(
        dir.join("run.toml"),
        r#"
[dataset]
embeddings = "data/embeddings.refb"
labels = "data/labels.refl"
n_classes = 3
labeled = "labeled.csv"

[model]
epochs = 30

[al]
b = 3
cycles = 2
trials = 2
method = "single"
strategy = "margin"
"#,
    )
    .unwrap();
}

fn p(path: impl AsRef<Path>) -> String {
    path.as_ref().to_str().unwrap().to_string()
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let res = dir.path().join("results");
    let out = refine(&["run", "--config", &p(dir.path().join("run.toml")), "--out", &p(&res)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(res.join("margin_seed0.json").exists());
    assert!(res.join("margin_seed1.json").exists());
    let out = refine(&["report", "--dir", &p(&res)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("margin"));
    assert!(res.join("winmatrix.csv").exists());
}

#[test]
fn filter_writes_refined_pool() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out_dir = dir.path().join("filtered");
    let out = refine(&["filter", "--config", &p(dir.path().join("run.toml")), "--out", &p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pool = refine::data::load_indices(out_dir.join("refined_pool.csv")).unwrap();
    assert!(!pool.is_empty() && pool.len() < 87);
    assert!(![0, 31, 62].iter().any(|i| pool.contains(i)));
}

#[test]
fn verify_theory_passes_with_few_trials() {
    let out = refine(&["verify-theory", "--trials", "2000", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    assert_eq!(code(&refine(&["bogus"])), 2);
    assert_eq!(code(&refine(&["run"])), 2);
    assert_eq!(code(&refine(&["verify-theory", "--trials", "0"])), 2);

    std::fs::write(dir.path().join("bad.toml"), "[al]\nb = 0\n").unwrap();
    assert_eq!(code(&refine(&["run", "--config", &p(dir.path().join("bad.toml"))])), 2);
    std::fs::write(dir.path().join("unknown.toml"), "[al]\nb = 2\nnope = 1\n").unwrap();
    assert_eq!(code(&refine(&["run", "--config", &p(dir.path().join("unknown.toml"))])), 2);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&refine(&["report", "--dir", &p(&empty)])), 2);
    std::fs::write(empty.join("x.json"), "[").unwrap();
    let out = refine(&["report", "--dir", &p(&empty)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("x.json"));

    std::fs::write(dir.path().join("data/embeddings.refb"), b"garbage").unwrap();
    let out = refine(&["run", "--config", &p(dir.path().join("run.toml")), "--out", &p(dir.path().join("r"))]);
    assert_eq!(code(&out), 3);
}
