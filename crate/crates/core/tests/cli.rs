//! Exit codes and output shape of the `mediatrix` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mediatrix::report::parse_report;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mediatrix"));
    cmd.args(args).current_dir(root()).env_remove("MEDIATRIX_MAX_CELLS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run mediatrix")
}

fn ok(args: &[&str]) -> String {
    let out = run(args, &[]);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args, &[]).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn nullmodel_effects_are_zero() {
    let report = parse_report(&ok(&["truth", "fixtures/nullmodel.json", "--json"])).unwrap();
    assert!(report.effects.len() >= 10);
    for e in &report.effects {
        assert_eq!(e.value, 0.0, "{}", e.label);
    }
}

#[test]
fn l_model_natural_effects_carry_annotation() {
    let text = ok(&["truth", "-m", "fixtures/l_model.json", "--natural"]);
    let nie = text.lines().find(|l| l.starts_with("NIE(1.)")).unwrap();
    assert!(nie.contains("0.5") && nie.ends_with("NOT IDENTIFIED"), "{nie}");
    assert!(text.contains("RUNG NDE/NIE: NOT IDENTIFIED (no intermediate confounders; witness: L)"));
}

#[test]
fn custom_effects() {
    let text = ok(&[
        "truth",
        "fixtures/collegeprep8.json",
        "--cde",
        "low",
        "--gide",
        "point(low)",
        "--contrast",
        "A=1 || A=0",
        "--json",
    ]);
    let report = parse_report(&text).unwrap();
    let cde = report.effect("CDE(low)").unwrap();
    let gide = report.effect("GIDE(point(low))").unwrap();
    assert!((cde.value - gide.value).abs() < 1e-12);
    let contrast = report.effect("A=1 || A=0").unwrap();
    assert_eq!(contrast.value, 1.625);
    assert_eq!(contrast.identification, "unchecked");
}

#[test]
fn identify_ladders() {
    let fig3 = ok(&["identify", "fixtures/fig3.json"]);
    assert_eq!(fig3.lines().filter(|l| l.ends_with(": IDENTIFIED")).count(), 4, "{fig3}");
    let latent = ok(&["identify", "fixtures/latent_my.json"]);
    let lines: Vec<&str> = latent.lines().collect();
    assert_eq!(lines[0], "RUNG TE: IDENTIFIED");
    assert!(lines[1..4].iter().all(|l| l.contains("NOT IDENTIFIED")), "{latent}");
    let report = parse_report(&ok(&["identify", "fixtures/fig4.json", "--json"])).unwrap();
    assert_eq!(report.ladder[3].witness.as_deref(), Some("L"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&["simulate", "fixtures/nullmodel.json", "-n", "0"]), 2);
    assert_eq!(code(&["truth"]), 2);
    assert_eq!(code(&["truth", "fixtures/collegeprep8.json", "--contrast", "A=1"]), 2);
    assert_eq!(code(&["truth", "fixtures/collegeprep8.json", "--gide", "uniform()"]), 2);
}

#[test]
fn model_errors_exit_2_and_name_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("fixtures/nullmodel.json")).unwrap();
    let broken = write(dir.path(), "broken.json", &text.replacen("\"exposure\"", "\"mediator\"", 1));
    let out = run(&["truth", &broken], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let garbage = write(dir.path(), "garbage.json", "{ not json");
    assert_eq!(code(&["identify", &garbage]), 2);
    assert_eq!(code(&["identify", "fixtures/does-not-exist.json"]), 1);
}

#[test]
fn size_cap_exits_4() {
    let out = run(&["truth", "fixtures/collegeprep8.json"], &[("MEDIATRIX_MAX_CELLS", "4")]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SupportTooLarge"));
}

#[test]
fn positivity_exits_3() {
    // A copies C, so no stratum of C contains both exposure levels.
    let model = r#"{
      "name": "no_overlap",
      "variables": [
        {"name": "C", "role": "covariate", "support": [0, 1], "parents": [],
         "noise": {"symbols": ["c0", "c1"], "probs": [0.5, 0.5]},
         "table": [{"parents": [], "noise": "c0", "value": 0}, {"parents": [], "noise": "c1", "value": 1}]},
        {"name": "A", "role": "exposure", "support": [0, 1], "parents": ["C"],
         "noise": {"symbols": ["u"], "probs": [1.0]},
         "table": [{"parents": [0], "noise": "u", "value": 0}, {"parents": [1], "noise": "u", "value": 1}]},
        {"name": "M", "role": "mediator", "support": [0, 1], "parents": ["A"],
         "noise": {"symbols": ["u"], "probs": [1.0]},
         "table": [{"parents": [0], "noise": "u", "value": 0}, {"parents": [1], "noise": "u", "value": 1}]},
        {"name": "Y", "role": "outcome", "support": [0, 1], "parents": ["M"],
         "noise": {"symbols": ["u"], "probs": [1.0]},
         "table": [{"parents": [0], "noise": "u", "value": 0}, {"parents": [1], "noise": "u", "value": 1}]}
      ]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "no_overlap.json", model);
    // Interventional truth uses potential-mediator laws and is defined; a
    // GIDE drawing from the observed law of M given A=0 and C is not.
    ok(&["truth", &path, "--interventional"]);
    let out = run(&["truth", &path, "--gide", "obs(0|C)"], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PositivityViolation"));
}

#[test]
fn estimate_refuses_then_forces() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bully.csv").display().to_string();
    ok(&["simulate", "fixtures/bullying.json", "-n", "2000", "--seed", "1", "-o", &csv]);
    // Provenance names the model, so -m is optional.
    let report = parse_report(&ok(&["estimate", &csv, "--natural", "--bootstrap", "50", "--json"])).unwrap();
    assert_eq!(report.n, Some(2000));
    assert!(report.estimate("NIE(1.)").unwrap().standard_error.unwrap() > 0.0);

    let l_csv = dir.path().join("l.csv").display().to_string();
    ok(&["simulate", "fixtures/fig4.json", "-n", "2000", "-o", &l_csv]);
    assert_eq!(code(&["estimate", "-d", &l_csv, "--natural"]), 5);
    let forced = ok(&["estimate", "-d", &l_csv, "-m", "fixtures/fig4.json", "--natural", "--force", "--bootstrap", "20"]);
    assert!(forced.contains("estimates forced"), "{forced}");
}

#[test]
fn estimate_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bare = write(dir.path(), "bare.csv", "A,M,Y\n1,2,3\n");
    // No provenance and no -m.
    assert_eq!(code(&["estimate", &bare]), 2);
    let out = run(&["estimate", &bare, "-m", "fixtures/m_ignores_a.json"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1, column `M`"));
}

#[test]
fn interaction_flags_traditional_bias() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("i.csv").display().to_string();
    ok(&["simulate", "fixtures/interaction.json", "-n", "100000", "--seed", "2", "-o", &csv]);
    let text = ok(&["estimate", &csv, "--traditional", "--bootstrap", "20"]);
    assert!(text.contains("BIAS:"), "{text}");
    let report = parse_report(&ok(&["estimate", &csv, "--traditional", "--bootstrap", "20", "--json"])).unwrap();
    assert!(report.comparisons[0].flagged);
}

#[test]
fn simulate_writes_latents_on_request() {
    let text = ok(&["simulate", "fixtures/collegeprep8.json", "-n", "3", "--include-latents"]);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "A,M,Y,U");
    assert!(text.starts_with("# source: collegeprep8\n# model: fixtures/collegeprep8.json\n# seed: 0\n# n: 3\n"));
}
