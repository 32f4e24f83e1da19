use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn seqnorm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqnorm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn first_value(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .next()
        .and_then(|l| l.trim().parse().ok())
        .expect("value on the first line")
}

fn with_basis_file() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("seq.json"),
        r#"{"space": "lp:2:2", "items": [[1, 0], [0, 1]]}"#,
    )
    .unwrap();
    dir
}

#[test]
fn norm_of_the_standard_basis() {
    let dir = with_basis_file();
    for (class, expected) in [
        ("lp:2", 2f64.sqrt()),
        ("rad", 2f64.sqrt()),
        ("lpw:2", 1.0),
        ("linf", 1.0),
    ] {
        let o = seqnorm(&["norm", class, "lp:2:2", "seq.json"], dir.path());
        assert!(
            o.status.success(),
            "{class}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(
            (first_value(&o) - expected).abs() < 1e-12,
            "{class}: {}",
            stdout(&o)
        );
    }
    let o = seqnorm(&["norm", "lpw:2", "lp:2:2", "seq.json"], dir.path());
    assert!(stdout(&o).contains("singular-value (exact)"));
    assert!(stdout(&o).contains("certificate: functional"));
}

#[test]
fn norm_json_report() {
    let dir = with_basis_file();
    let o = seqnorm(
        &["norm", "lp:1", "lp:2:2", "seq.json", "--json"],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], 2.0);
    assert_eq!(v["exact"], true);
}

#[test]
fn usage_and_runtime_errors_exit_one() {
    let dir = with_basis_file();
    assert_eq!(
        seqnorm(&["norm", "nonsense", "lp:2:2", "seq.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        seqnorm(&["norm", "lp:2", "lp:2:3", "seq.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        seqnorm(&["norm", "lp:2", "lp:2:2", "missing.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        seqnorm(&["repro", "no-such-case"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(seqnorm(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(seqnorm(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let genuine = seqnorm(
        &[
            "check",
            "zero-invariant",
            "rad",
            "--budget",
            "300",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(genuine.status.code(), Some(0), "{}", stdout(&genuine));
    assert!(stdout(&genuine).starts_with("[no-counterexample] zero-invariant on rad"));

    let mutant = seqnorm(
        &["check", "zero-invariant", "rad", "--mutant", "--seed", "5"],
        dir.path(),
    );
    assert_eq!(mutant.status.code(), Some(2));
    assert!(stdout(&mutant).starts_with("[counterexample]"));

    let dominance = seqnorm(
        &["check", "fin-leq", "lp:1", "lp:2", "--budget", "50"],
        dir.path(),
    );
    assert_eq!(dominance.status.code(), Some(2));
    let reverse = seqnorm(
        &["check", "fin-leq", "lp:2", "lp:1", "--budget", "50"],
        dir.path(),
    );
    assert_eq!(reverse.status.code(), Some(0));

    let o = seqnorm(
        &[
            "check",
            "scalar-condition",
            "lp:2",
            "lp:2",
            "lp:1",
            "--budget",
            "100",
            "--json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "no-counterexample");

    assert_eq!(
        seqnorm(&["check", "fin-leq", "lp:1"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        seqnorm(&["check", "no-such-property", "lp:1"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn search_reports_a_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let op = r#"{"arity": 2, "domains": ["lp:2:1", "lp:2:1"], "codomain": "lp:2:1", "coeffs": [1.0], "shape": [1, 1, 1]}"#;
    fs::write(dir.path().join("op.json"), op).unwrap();
    let o = seqnorm(
        &[
            "search",
            "op.json",
            "--inputs",
            "lp:2,lp:2",
            "--output",
            "lp:1",
            "-k",
            "4",
            "--budget",
            "200",
            "--witnesses",
            "w.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let head = stdout(&o).lines().next().unwrap().to_string();
    assert!(
        head.starts_with("lower bound") && head.contains("(certified)"),
        "{head}"
    );
    let value: f64 = head.split_whitespace().nth(2).unwrap().parse().unwrap();
    // Cauchy-Schwarz caps the scalar product at one.
    assert!(value <= 1.0 + 1e-12 && value > 0.99, "{value}");
    let w: Vec<Vec<Vec<f64>>> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert_eq!(w.len(), 2);
}

#[test]
fn repro_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqnorm(&["repro", "ucoincide", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.starts_with("# seqnorm repro seed=7 tol=default budget=default kmax=4096"),
        "{out}"
    );
    assert!(out.contains("ucoincide PASS: traces identical"));
    let csv = fs::read_to_string(dir.path().join("ucoincide.csv")).unwrap();
    assert!(csv.starts_with("m,rho_x,rho_u\n"));
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn repro_radlemma_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqnorm(
        &["repro", "radlemma", "--budget", "20", "--out-dir", "traces"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("radlemma PASS: max deviation"));
    assert!(dir.path().join("traces/radlemma.csv").exists());
}

#[test]
fn repro_ex36_trace_matches_its_formula() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqnorm(&["repro", "ex36", "--kmax", "256"], dir.path());
    assert!(
        stdout(&o).contains("max formula error 0.00e0 [ok]"),
        "{}",
        stdout(&o)
    );
    let csv = fs::read_to_string(dir.path().join("ex36.csv")).unwrap();
    assert!(csv.starts_with("operator,k,rho,output_norm,slot1_norm,slot2_norm,formula\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("At,")).count(), 5);
}

#[test]
fn repro_list_names_every_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&seqnorm(&["repro", "--list"], dir.path()));
    for id in [
        "ex36",
        "p34",
        "radlemma",
        "fdprefix",
        "dualcohen",
        "ucoincide",
        "symavg",
        "radtail",
    ] {
        assert!(out.lines().any(|l| l.starts_with(id)), "{id}");
    }
}
