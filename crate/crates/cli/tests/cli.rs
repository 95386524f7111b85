use std::path::Path;
use std::process::{Command, Output};

fn trslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trslab"))
        .args(args)
        .output()
        .expect("spawn trslab")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn solve_one_by_one() {
    // min 4s + s², |s| ≤ 1: s = −1, λ = 2, q = −3.
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.mtx",
        "%%MatrixMarket matrix array real symmetric\n1 1\n2\n",
    );
    let g = write(dir.path(), "g.txt", "4\n");
    let out = trslab(&["solve", "--matrix", &a, "--gradient", &g, "--delta", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["q"].as_f64().unwrap() + 3.0).abs() < 1e-12);
    assert_eq!(v["case"], "boundary");
}

#[test]
fn solve_identity_writes_the_solution() {
    // A = I, g = (2, 0, 0), Δ = 1: λ = 1, s = −g/2.
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "i.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n% identity\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n",
    );
    let g = write(dir.path(), "g.txt", "2 0 0");
    let s_out = dir.path().join("s.txt");
    let out = trslab(&[
        "solve",
        "--matrix",
        &a,
        "--gradient",
        &g,
        "--solution-out",
        s_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["kkt"]["passed"], true);
    let s: Vec<f64> = std::fs::read_to_string(s_out)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(s.len(), 3);
    assert!((s[0] + 1.0).abs() < 1e-12 && s[1].abs() < 1e-14);
}

#[test]
fn malformed_matrix_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "bad.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 x\n",
    );
    let out = trslab(&["solve", "--matrix", &a, "--seed-gradient", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn gradient_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.mtx",
        "%%MatrixMarket matrix array real symmetric\n1 1\n2\n",
    );
    let g = write(dir.path(), "g.txt", "1 2");
    let out = trslab(&["solve", "--matrix", &a, "--gradient", &g]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flags_and_missing_arguments_are_usage_errors() {
    let out = trslab(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
    let out = trslab(&["experiment"]);
    assert_eq!(out.status.code(), Some(2));
    let out = trslab(&["experiment", "7", "--out-dir", "/nonexistent-unused"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = trslab(&[
            "experiment",
            "2",
            "--n",
            "500",
            "--seed",
            "3",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["2.csv", "2.plt", "2.summary.json"] {
        assert!(a.join(f).is_file(), "{f} missing");
    }
    assert_eq!(
        std::fs::read(a.join("2.csv")).unwrap(),
        std::fs::read(b.join("2.csv")).unwrap()
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("2.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["name"], "2");
}

#[test]
fn experiment_from_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "mine.json",
        r#"{"family":"Strakos3","n":300,"seed":5,"params":{"rho":0.9}}"#,
    );
    let out = trslab(&[
        "experiment",
        &spec,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("mine.csv").is_file());

    let bad = write(dir.path(), "bad.json", r#"{"family":"Strakos3","n":300"#);
    let out = trslab(&[
        "experiment",
        &bad,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_trslab"))
        .args(["verify", "--scale", "quick"])
        .env("TRSLAB_THREADS", "2")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(text.contains("mutation/"));
}
