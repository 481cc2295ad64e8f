use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn urb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urb"))
        .args(args)
        .output()
        .expect("run urb")
}

fn scheme(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemes")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn json_file(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn text_value(stdout: &[u8], label: &str) -> f64 {
    let s = String::from_utf8_lossy(stdout);
    let line = s
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no '{label}' in {s}"));
    line[label.len()..].trim().parse().unwrap()
}

#[test]
fn gamma_of_clifford_scheme_is_zero() {
    let out = urb(&["gamma", "--scheme", &scheme("clifford_rb_d2")]);
    assert!(out.status.success());
    assert!(text_value(&out.stdout, "exact SO norm on channel differences").abs() <= 1e-10);
}

#[test]
fn gamma_of_pauli_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "gamma.json");
    let out = urb(&["gamma", "--scheme", &scheme("pauli_d2"), "--out", &path]);
    assert!(out.status.success());
    let g = json_file(&path);
    assert!((g["induced_l1_bound"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!(text_value(&out.stdout, "induced l1 bound") > 1.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp(&dir, "a.csv"), tmp(&dir, "b.csv"), tmp(&dir, "c.csv"));
    let s = scheme("clifford_dep09_d2");
    let args = [
        "simulate",
        "--scheme",
        &s,
        "--sequences",
        "50",
        "--shots",
        "20",
        "--seed",
        "11",
        "--out",
    ];
    for path in [&a, &b] {
        let mut v = args.to_vec();
        v.push(path);
        assert!(urb(&v).status.success());
    }
    let mut v = args.to_vec();
    v.push(&c);
    let single = Command::new(env!("CARGO_BIN_EXE_urb"))
        .args(&v)
        .env("URB_THREADS", "1")
        .output()
        .unwrap();
    assert!(single.status.success());
    let (ta, tb, tc) = (
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        std::fs::read(&c).unwrap(),
    );
    assert_eq!(ta, tb);
    assert_eq!(ta, tc);
    assert!(String::from_utf8(ta)
        .unwrap()
        .starts_with("m,p_hat,std_err,K,shots,seed\n"));
}

#[test]
fn simulate_then_fit_recovers_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, fit) = (tmp(&dir, "d.csv"), tmp(&dir, "fit.json"));
    let s = scheme("clifford_dep09_d2");
    let out = urb(&[
        "simulate",
        "--scheme",
        &s,
        "--m-grid",
        "1,2,4,8,16,32",
        "--sequences",
        "300",
        "--shots",
        "100",
        "--seed",
        "5",
        "--out",
        &csv,
    ]);
    assert!(out.status.success());
    let out = urb(&["fit", "--data", &csv, "--scheme", &s, "--out", &fit]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = json_file(&fit);
    let p = rec["fit"]["p"].as_f64().unwrap();
    let se = rec["fit"]["p_std_error"].as_f64().unwrap();
    assert!((p - 0.9).abs() <= 4.0 * se, "p = {p} ± {se}");
    assert!(rec["robustness"]["bound_on_exponent_shift"].as_f64().unwrap() > 0.0);
}

#[test]
fn bundled_schemes_validate() {
    for name in ["clifford_rb_d2", "clifford_dep09_d2", "pauli_d2"] {
        let out = urb(&["verify", "--scheme", &scheme(name), "--m-grid", "1..20"]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn verify_refuses_pauli_certification() {
    let out = urb(&["verify", "--scheme", &scheme("pauli_d2")]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find(|l| l.contains("single exponential certified"))
        .unwrap();
    assert!(line.starts_with("FAIL"), "{text}");

    let out = urb(&["verify", "--scheme", &scheme("clifford_rb_d2")]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find(|l| l.contains("single exponential certified"))
        .unwrap();
    assert!(line.starts_with("PASS"), "{text}");
    assert!(!text.lines().any(|l| l.starts_with("FAIL")), "{text}");
}

#[test]
fn report_embeds_all_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "report.json");
    let out = urb(&[
        "report",
        "--scheme",
        &scheme("clifford_rb_d2"),
        "--sequences",
        "20",
        "--shots",
        "10",
        "--out",
        &path,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_file(&path);
    for key in [
        "version",
        "config",
        "quality",
        "data",
        "fit",
        "verification",
        "certified",
    ] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    assert_eq!(r["config"]["seed"], 0);
}

#[test]
fn malformed_files_fail_with_distinct_diagnostics() {
    let expected = [
        ("01_syntax", "line 112, column 1"),
        ("02_missing_dim", "at dim: missing required field"),
        ("03_bad_dim", "at dim: size error"),
        ("04_negative_prob", "gates[1].prob: probability -0.25 is negative"),
        ("05_prob_sum", "probabilities sum to 1.25"),
        ("06_not_unitary", "gates[3].ideal_unitary: matrix is not unitary"),
        ("07_ragged_matrix", "gates[0].ideal_unitary[1]: expected 2 entries"),
        (
            "08_unknown_noise",
            "gates[0].noise.type: unknown noise type 'dephasing'",
        ),
        ("09_not_cptp", "gates[2].noise:"),
        ("10_rho0_not_state", "rho0:"),
    ];
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/malformed");
    let mut seen = Vec::new();
    for (file, needle) in expected {
        let path = dir.join(format!("{file}.json"));
        let out = urb(&["gamma", "--scheme", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{file}");
        let err = String::from_utf8_lossy(&out.stderr).to_string();
        assert!(err.contains(needle), "{file}: {err}");
        let diag = err.split(": parse error at ").nth(1).unwrap_or(&err).to_string();
        assert!(!seen.contains(&diag), "{file} repeats a diagnostic");
        seen.push(diag);
    }
}

#[test]
fn bad_arguments_are_validation_errors() {
    let s = scheme("clifford_rb_d2");
    assert_eq!(
        urb(&["simulate", "--scheme", &s, "--m-grid", "4,2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        urb(&["simulate", "--scheme", &s, "--sequences", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        urb(&["verify", "--scheme", &s, "--norm", "frobenius"]).status.code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "short.csv");
    std::fs::write(
        &csv,
        "m,p_hat,std_err,K,shots,seed\n1,0.9,0.01,10,10,0\n2,0.8,0.01,10,10,0\n",
    )
    .unwrap();
    let out = urb(&["fit", "--data", &csv]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(
        &csv,
        "m,p_hat,std_err,K,shots,seed\n1,0.9,0.01,10,10,0\n2,oops,0.01,10,10,0\n",
    )
    .unwrap();
    let out = urb(&["fit", "--data", &csv]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
