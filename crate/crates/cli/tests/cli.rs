use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use padic_ergodic::document::SpecDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_padic-ergodic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn poly_shift_is_ergodic() {
    let o = run(&["poly", "--coeffs", "1,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS poly_ergodic_z2"));
    assert!(out.contains("single cycle at every level 1..=10"));
    assert!(out.contains("status    ok"));
}

#[test]
fn poly_quadratic_fails_parity_sum() {
    let o = run(&["poly", "--coeffs", "1,1,1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("FAIL poly_ergodic_z2  first failure (3) A_0 + A_1 = 1 mod 4"));
}

#[test]
fn poly_cubic_confirmed_by_oracle() {
    let o = run(&["poly", "--coeffs", "1,1,4,4", "--precision", "14"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("PASS poly_ergodic_z2"));
    assert!(out.contains("single cycle at every level 1..=14"));
}

#[test]
fn poly_requires_unit_constant() {
    let o = run(&["poly", "--coeffs", "2,1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("a_0 must be 1"));
    let o = run(&["poly", "--coeffs", "1,x"]);
    assert!(!o.status.success());
}

#[test]
fn check_identity_map() {
    let o = run(&["check", corpus().join("identity_p2.json").to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("PASS vdp_mp_exact_2"));
    assert!(out.contains("FAIL vdp_ergodic_exact_2"));
    assert!(out.contains("level 1 is not a single cycle: 2 cycles (2 fixed points)"));
}

#[test]
fn check_rejects_malformed_documents() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"p": 2, "precision": 2, "kind": "vdp", "B": [0, 1, 2, 4]}"#,
    );
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("B[3]"), "{}", stderr(&o));
    let broken = write(dir.path(), "broken.json", "{\"p\": 2,");
    let o = run(&["check", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_report_reparses() {
    let path = corpus().join("shift_p2.json");
    let o = run(&[
        "check",
        path.to_str().unwrap(),
        "--json",
        "--max-level",
        "6",
    ]);
    assert!(o.status.success());
    let doc = SpecDocument::parse(&stdout(&o)).unwrap();
    let report = doc.report.unwrap();
    assert!(report["input_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
    assert_eq!(report["level"], 6);
    assert_eq!(report["oracle"]["first_failure"], serde_json::Value::Null);
    let original = SpecDocument::parse(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc.spec, original.spec);
}

#[test]
fn generated_ergodic_core_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let args = [
            "gen",
            "--profile",
            "ergodic_core",
            "--p",
            "2",
            "--precision",
            "10",
            "--seed",
            "42",
            "--out",
        ];
        let o = bin().args(args).arg(out).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(
        text,
        fs::read(corpus().join("ergodic_core_p2_seed42.json")).unwrap()
    );
    let o = run(&["check", a.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in [
        "vdp_ergodic_exact_2",
        "mahler_ergodic_exact_2",
        "equivalence_chain",
    ] {
        assert!(out.contains(&format!("PASS {name}\n")), "{name}\n{out}");
    }
    assert!(out.contains("status    ok"));
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn gen_lipschitz_profile() {
    let o = run(&[
        "gen",
        "--profile",
        "lipschitz",
        "--p",
        "3",
        "--precision",
        "4",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let doc = SpecDocument::parse(&stdout(&o)).unwrap();
    assert_eq!(doc.generator.unwrap().profile, "lipschitz");
    assert!(!run(&["gen", "--profile", "chaotic"]).status.success());
}

#[test]
fn stream_counter() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "count.json",
        r#"{"p": 2, "precision": 8, "kind": "polynomial", "coeffs": [1, 1]}"#,
    );
    let o = run(&["stream", f.to_str().unwrap(), "--count", "257"]);
    assert!(o.status.success());
    let expected: Vec<u8> = (1..=255).chain([0, 1]).collect();
    assert_eq!(o.stdout, expected);
    assert!(stderr(&o).contains("period 256"));
}

#[test]
fn stream_refuses_non_ergodic_maps() {
    let path = corpus().join("identity_p2.json");
    let o = run(&["stream", path.to_str().unwrap(), "--count", "4"]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("--force"));
    let o = run(&[
        "stream",
        path.to_str().unwrap(),
        "--count",
        "4",
        "--state",
        "9",
        "--force",
    ]);
    assert!(o.status.success());
    assert_eq!(o.stdout, vec![9; 4]);
    assert!(stderr(&o).contains("period 1"));
}

#[test]
fn sweep_corpus() {
    let o = run(&["sweep", corpus().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("mp_sufficient_p2_seed3.json"));
    assert!(out.ends_with("all ok\n"));
}
