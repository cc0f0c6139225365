//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N: PASS|FAIL ...` line to stderr (uncaptured) before asserting.
//!
//! Oracles are independent of the engine wherever possible: the eight-student
//! table is hardcoded, the naive difference is recomputed from the observed
//! columns, and convergence is judged against exact enumeration.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use mediatrix::data::{sample_dataset, SamplerConfig};
use mediatrix::effects::{
    controlled_direct_effect, generalized_ide, individual_natural_effects, interventional_effects, natural_effects,
    total_effect, Decomposition,
};
use mediatrix::engine::{Engine, Limits, MediatorDistributionSpec};
use mediatrix::estimation::{naive_difference, traditional_product_of_coefficients, Source};
use mediatrix::identification::{classify, soundness_check, CheckStatus, DagView, Family};
use mediatrix::io::read_scm;
use mediatrix::law::observational_distribution;
use mediatrix::model::Scm;
use mediatrix::random::{corpus, RandomScmConfig};
use mediatrix::report::{parse_report, Report};

const TOL: f64 = 1e-9;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> Scm<f64> {
    read_scm(root().join("fixtures").join(format!("{name}.json"))).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

/// Runs the CLI from the crate root; returns (exit code, stdout bytes).
fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_mediatrix"))
        .args(args)
        .current_dir(root())
        .env_remove("MEDIATRIX_MAX_CELLS")
        .output()
        .expect("run mediatrix");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_report(args: &[&str]) -> Result<Report, String> {
    let (code, stdout) = cli(args);
    if code != 0 {
        return Err(format!("`mediatrix {}` exited {code}", args.join(" ")));
    }
    parse_report(&String::from_utf8_lossy(&stdout)).map_err(|e| e.to_string())
}

/// Prints the verdict line and fails the test on FAIL.
fn verdict(n: u32, title: &str, elapsed: Duration, limit: Option<Duration>, outcome: Result<String, String>) {
    let outcome = match (outcome, limit) {
        (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
        (o, _) => o,
    };
    let line = match &outcome {
        Ok(detail) => format!("criterion {n:>2}: PASS  {title} [{elapsed:.2?}] {detail}"),
        Err(why) => format!("criterion {n:>2}: FAIL  {title} [{elapsed:.2?}] {why}"),
    };
    // Written to the handle directly: the test harness captures `eprintln!`.
    #[allow(clippy::explicit_write)]
    writeln!(std::io::stderr(), "{line}").unwrap();
    assert!(outcome.is_ok(), "{line}");
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

// (unit, M(0), M(1), Y(0), Y(1, M(0)), Y(1), NDE, NIE) for the eight students.
type Student = (&'static str, &'static str, &'static str, f64, f64, f64, f64, f64);
const STUDENTS: [Student; 8] = [
    ("Bo", "low", "high", 4.0, 7.0, 9.0, 3.0, 2.0),
    ("Sam", "medium", "high", 7.0, 7.0, 8.0, 0.0, 1.0),
    ("Ian", "low", "low", 5.0, 7.0, 7.0, 2.0, 0.0),
    ("Ben", "low", "medium", 8.0, 6.0, 7.0, -2.0, 1.0),
    ("Suri", "low", "high", 3.0, 3.0, 5.0, 0.0, 2.0),
    ("Bill", "low", "medium", 6.0, 5.0, 7.0, -1.0, 2.0),
    ("Kat", "high", "high", 9.0, 8.0, 8.0, -1.0, 0.0),
    ("Dre", "medium", "high", 4.0, 7.0, 8.0, 3.0, 1.0),
];

// Observed (A, Y) for the same students.
const OBSERVED: [(u8, f64); 8] = [(1, 9.0), (1, 8.0), (1, 7.0), (1, 7.0), (0, 3.0), (0, 6.0), (0, 9.0), (0, 4.0)];

#[test]
fn criterion_01_collegeprep8_truth() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let oracle_te = STUDENTS.iter().map(|s| s.5 - s.3).sum::<f64>() / 8.0;
        let report = cli_report(&["truth", "fixtures/collegeprep8.json", "--units", "--json"])?;
        let te = report.effect("TE").ok_or("no TE in report")?.value;
        check(te == 1.625 && oracle_te == 1.625, || format!("TE {te}, table {oracle_te}"))?;
        check(report.units.len() == 8, || format!("{} unit rows", report.units.len()))?;
        for (row, s) in report.units.iter().zip(STUDENTS) {
            let want = (format!("U={}", s.0), s.1, s.2, s.3, s.4, s.5, s.6, s.7);
            let got = (row.unit.clone(), row.m0.as_str(), row.m1.as_str(), row.y0, row.y1_m0, row.y1, row.nde, row.nie);
            check(got == want, || format!("row {got:?} != {want:?}"))?;
        }
        let bo = &report.units[0];
        check((bo.nde, bo.nie) == (3.0, 2.0), || format!("Bo ({}, {})", bo.nde, bo.nie))?;
        // The library agrees with the CLI.
        let scm = fixture("collegeprep8");
        let engine = Engine::new(&scm, Limits::default()).map_err(|e| e.to_string())?;
        check(total_effect(&engine).unwrap().value == 1.625, || "library TE".into())?;
        check(individual_natural_effects(&engine).unwrap().len() == 8, || "library rows".into())?;
        Ok("TE = 1.625; 8/8 rows match; Bo (NDE, NIE) = (3, 2)".into())
    })();
    verdict(1, "collegeprep8 truth", start.elapsed(), Some(Duration::from_secs(1)), outcome);
}

#[test]
fn criterion_02_decomposition_identities() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let models = corpus::<f64>(2024, 300, &RandomScmConfig::default());
        let mut natural = 0;
        let mut interventional = 0;
        for (i, scm) in models.iter().enumerate() {
            let engine = Engine::new(scm, Limits::default()).map_err(|e| e.to_string())?;
            let te = total_effect(&engine).unwrap().value;
            let di = natural_effects(&engine, Decomposition::DirectIndirect).unwrap();
            let id = natural_effects(&engine, Decomposition::IndirectDirect).unwrap();
            check(close(di.direct.value + di.indirect.value, te), || format!("model {i}: NDE(.0)+NIE(1.) != TE"))?;
            check(close(id.indirect.value + id.direct.value, te), || format!("model {i}: NIE(0.)+NDE(.1) != TE"))?;
            natural += 1;
            // Undefined when some covariate stratum lacks one exposure level.
            if let Ok(int) = interventional_effects(&engine) {
                let oe = int.oe.value;
                check(close(int.ide0.value + int.iie1.value, oe), || format!("model {i}: IDE(.0)+IIE(1.) != OE"))?;
                check(close(int.iie0.value + int.ide1.value, oe), || format!("model {i}: IIE(0.)+IDE(.1) != OE"))?;
                interventional += 1;
            }
        }
        check(natural >= 200 && interventional >= 200, || {
            format!("only {natural} natural / {interventional} interventional checks")
        })?;
        Ok(format!("{natural} models (natural), {interventional} (interventional)"))
    })();
    verdict(2, "decomposition identities", start.elapsed(), Some(Duration::from_secs(60)), outcome);
}

#[test]
fn criterion_03_no_l_collapse() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let models = corpus::<f64>(2025, 120, &RandomScmConfig::unconfounded().positive());
        for (i, scm) in models.iter().enumerate() {
            let engine = Engine::new(scm, Limits::default()).map_err(|e| e.to_string())?;
            let te = total_effect(&engine).unwrap().value;
            let di = natural_effects(&engine, Decomposition::DirectIndirect).unwrap();
            let id = natural_effects(&engine, Decomposition::IndirectDirect).unwrap();
            let int = interventional_effects(&engine).map_err(|e| format!("model {i}: {e}"))?;
            for (a, b, what) in [
                (int.ide0.value, di.direct.value, "IDE(.0) vs NDE(.0)"),
                (int.iie1.value, di.indirect.value, "IIE(1.) vs NIE(1.)"),
                (int.ide1.value, id.direct.value, "IDE(.1) vs NDE(.1)"),
                (int.iie0.value, id.indirect.value, "IIE(0.) vs NIE(0.)"),
                (int.oe.value, te, "OE vs TE"),
            ] {
                check(close(a, b), || format!("model {i}: {what}: {a} vs {b}"))?;
            }
        }
        Ok(format!("{} models", models.len()))
    })();
    verdict(3, "no-L collapse", start.elapsed(), None, outcome);
}

#[test]
fn criterion_04_divergence_witness() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let scm = fixture("l_model");
        check(!scm.intermediates().is_empty(), || "fixture has no L".into())?;
        let engine = Engine::new(&scm, Limits::default()).map_err(|e| e.to_string())?;
        let nie = natural_effects(&engine, Decomposition::DirectIndirect).unwrap().indirect.value;
        let iie = interventional_effects(&engine).map_err(|e| e.to_string())?.iie1.value;
        let gap = (iie - nie).abs();
        check(gap > 0.01, || format!("|IIE(1.) - NIE(1.)| = {gap}"))?;
        Ok(format!("l_model: NIE(1.) = {nie}, IIE(1.) = {iie}"))
    })();
    verdict(4, "divergence witness", start.elapsed(), None, outcome);
}

#[test]
fn criterion_05_gide_specializations() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let mut point = 0;
        let mut potential = 0;
        for (i, scm) in corpus::<f64>(2026, 250, &RandomScmConfig::default()).iter().enumerate() {
            let engine = Engine::new(scm, Limits::default()).map_err(|e| e.to_string())?;
            for m in &scm.variable(scm.mediator()).support {
                let g = generalized_ide(&engine, &MediatorDistributionSpec::point(m.clone())).unwrap().value;
                let cde = controlled_direct_effect(&engine, m).unwrap().value;
                check(close(g, cde), || format!("model {i}: GIDE(point({m})) {g} != CDE {cde}"))?;
                point += 1;
            }
            if let Ok(int) = interventional_effects(&engine) {
                for (a, ide) in [(0, int.ide0.value), (1, int.ide1.value)] {
                    let g = generalized_ide(&engine, &MediatorDistributionSpec::potential(a)).unwrap().value;
                    check(close(g, ide), || format!("model {i}: GIDE(pot({a})) {g} != IDE {ide}"))?;
                    potential += 1;
                }
            }
        }
        Ok(format!("{point} point-mass and {potential} potential-law checks"))
    })();
    verdict(5, "GIDE specializations", start.elapsed(), None, outcome);
}

#[test]
fn criterion_06_identification_soundness() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let mut matched = 0;
        let mut per_family = [0usize; 4];
        for (seed, config) in [
            (2027, RandomScmConfig::default().positive()),
            (2028, RandomScmConfig::unconfounded().positive()),
            (2029, RandomScmConfig::default()),
        ] {
            for (i, scm) in corpus::<f64>(seed, 200, &config).iter().enumerate() {
                let report = soundness_check(scm, Limits::default()).map_err(|e| e.to_string())?;
                for c in &report.checks {
                    match &c.status {
                        CheckStatus::Mismatch { plug_in } => {
                            return Err(format!(
                                "seed {seed} model {i}: {} truth {:?} plug-in {plug_in}",
                                c.effect, c.truth
                            ))
                        }
                        CheckStatus::Match => {
                            matched += 1;
                            per_family[Family::ALL.iter().position(|f| *f == c.family).unwrap()] += 1;
                        }
                        CheckStatus::Skipped(_) => {}
                    }
                }
            }
        }
        check(per_family.iter().all(|&m| m > 0), || format!("a family was never approved: {per_family:?}"))?;
        let ladder = classify(&DagView::of(&fixture("fig4")));
        let rung = ladder.rung(Family::NdeNie);
        check(!rung.is_identified() && rung.witness() == Some("L"), || format!("fig4: {rung}"))?;
        let (code, stdout) = cli(&["identify", "fixtures/fig4.json"]);
        let text = String::from_utf8_lossy(&stdout);
        check(code == 0 && text.contains("RUNG NDE/NIE: NOT IDENTIFIED") && text.contains("witness: L"), || {
            format!("CLI identify: exit {code}\n{text}")
        })?;
        Ok(format!("{matched} approved plug-ins match truth {per_family:?}; fig4 witness L"))
    })();
    verdict(6, "identification soundness", start.elapsed(), None, outcome);
}

#[test]
fn criterion_07_confounding_demonstration() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let mean = |a: u8| {
            let ys: Vec<f64> = OBSERVED.iter().filter(|o| o.0 == a).map(|o| o.1).collect();
            ys.iter().sum::<f64>() / ys.len() as f64
        };
        let oracle = mean(1) - mean(0);
        let scm = fixture("collegeprep8");
        let law = observational_distribution(&scm, Limits::default()).map_err(|e| e.to_string())?;
        let naive = naive_difference(Source::Law(&law)).map_err(|e| e.to_string())?.estimate;
        check(close(naive, 2.25) && close(oracle, 2.25), || format!("naive {naive}, table {oracle}"))?;
        let (code, stdout) = cli(&["truth", "fixtures/collegeprep8.json"]);
        let text = String::from_utf8_lossy(&stdout);
        let row = |label: &str| text.lines().find(|l| l.split_whitespace().next() == Some(label)).map(str::to_string);
        let te_row = row("TE").ok_or("no TE row")?;
        let naive_row = row("naive").ok_or("no naive row")?;
        check(code == 0 && te_row.split_whitespace().nth(1) == Some("1.625"), || te_row.clone())?;
        check(naive_row.split_whitespace().nth(1) == Some("2.25"), || naive_row.clone())?;
        Ok("naive 2.25 vs TE 1.625, both printed by `truth`".into())
    })();
    verdict(7, "confounding demonstration", start.elapsed(), None, outcome);
}

#[test]
fn criterion_08_traditional_bias() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let mut detail = Vec::new();
        for (name, want_close) in [("linear_nointeraction", true), ("interaction", false)] {
            let scm = fixture(name);
            let engine = Engine::new(&scm, Limits::default()).map_err(|e| e.to_string())?;
            let nie = natural_effects(&engine, Decomposition::DirectIndirect).unwrap().indirect.value;
            let data = sample_dataset(&scm, name, SamplerConfig::new(100_000, 8))
                .bind(&scm)
                .map_err(|e| e.to_string())?;
            let t = traditional_product_of_coefficients::<f64>(&data).map_err(|e| e.to_string())?;
            let se = t.product.standard_error.ok_or("no SE")?;
            let z = (t.product.estimate - nie) / se;
            if want_close {
                check(z.abs() <= 4.0, || format!("{name}: z = {z}"))?;
            } else {
                check(z.abs() > 10.0, || format!("{name}: z = {z}"))?;
            }
            detail.push(format!("{name} z = {z:.2}"));
        }
        Ok(detail.join(", "))
    })();
    verdict(8, "traditional-method bias", start.elapsed(), Some(Duration::from_secs(30)), outcome);
}

#[test]
fn criterion_09_estimator_convergence() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let report = cli_report(&[
            "compare",
            "fixtures/collegeprep8_unconfounded.json",
            "-n",
            "100000",
            "--seed",
            "7",
            "--json",
        ])?;
        let wanted = ["TE", "NDE(.0)", "NIE(1.)", "NDE(.1)", "NIE(0.)", "IDE(.0)", "IDE(.1)", "IIE(0.)", "IIE(1.)", "OE"];
        let mut worst: f64 = 0.0;
        for label in wanted {
            let c = report.comparisons.iter().find(|c| c.label == label).ok_or(format!("no {label}"))?;
            let z = c.z.ok_or(format!("{label}: no z ({:?})", c.note))?;
            check(z.abs() <= 4.0 && !c.flagged, || format!("{label}: z = {z}"))?;
            worst = worst.max(z.abs());
        }
        Ok(format!("{} effects, max |z| = {worst:.2}", wanted.len()))
    })();
    verdict(9, "estimator convergence", start.elapsed(), None, outcome);
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let csv = |tag: &str| dir.path().join(format!("{tag}.csv")).display().to_string();
        let (a, b, c) = (csv("a"), csv("b"), csv("c"));
        for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
            let (code, _) = cli(&["simulate", "fixtures/bullying.json", "-n", "5000", "--seed", seed, "-o", out]);
            check(code == 0, || format!("simulate exited {code}"))?;
        }
        let read = |p: &str| std::fs::read(p).map_err(|e| e.to_string());
        check(read(&a)? == read(&b)?, || "same seed, different datasets".into())?;
        check(read(&a)? != read(&c)?, || "different seeds, same dataset".into())?;
        let runs: Vec<Vec<Vec<u8>>> = (0..2)
            .map(|_| {
                vec![
                    cli(&["estimate", &a, "--natural", "--interventional", "--traditional", "--seed", "3", "--json"]).1,
                    cli(&["compare", "fixtures/bullying.json", "-n", "5000", "--seed", "5", "--json"]).1,
                    cli(&["compare", "fixtures/bullying.json", "-n", "5000", "--seed", "5"]).1,
                ]
            })
            .collect();
        check(runs[0].iter().all(|r| !r.is_empty()), || "empty report".into())?;
        check(runs[0] == runs[1], || "reports differ between identical runs".into())?;
        Ok("datasets and estimate/compare reports byte-identical".into())
    })();
    verdict(10, "determinism", start.elapsed(), None, outcome);
}
