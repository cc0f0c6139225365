//! Identities and soundness over seeded random model corpora.

use mediatrix::effects::{
    controlled_direct_effect, generalized_ide, interventional_effects, natural_effects, total_effect, Decomposition,
};
use mediatrix::engine::{Engine, Limits, MediatorDistributionSpec};
use mediatrix::identification::{soundness_check, CheckStatus, Family};
use mediatrix::random::{corpus, RandomScmConfig};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn decomposition_identities() {
    let mut checked = 0;
    for (i, scm) in corpus::<f64>(11, 250, &RandomScmConfig::default()).iter().enumerate() {
        let engine = Engine::new(scm, Limits::default()).unwrap();
        let te = total_effect(&engine).unwrap().value;
        let di = natural_effects(&engine, Decomposition::DirectIndirect).unwrap();
        let id = natural_effects(&engine, Decomposition::IndirectDirect).unwrap();
        assert!(close(di.direct.value + di.indirect.value, te), "model {i}");
        assert!(close(id.direct.value + id.indirect.value, te), "model {i}");
        // Interventional effects need covariate strata to support both levels.
        if let Ok(int) = interventional_effects(&engine) {
            assert!(close(int.ide0.value + int.iie1.value, int.oe.value), "model {i}");
            assert!(close(int.iie0.value + int.ide1.value, int.oe.value), "model {i}");
            checked += 1;
        }
    }
    assert!(checked >= 200, "only {checked} models had interventional effects");
}

#[test]
fn no_l_collapse() {
    for (i, scm) in corpus::<f64>(12, 150, &RandomScmConfig::unconfounded().positive()).iter().enumerate() {
        let engine = Engine::new(scm, Limits::default()).unwrap();
        let te = total_effect(&engine).unwrap().value;
        let di = natural_effects(&engine, Decomposition::DirectIndirect).unwrap();
        let id = natural_effects(&engine, Decomposition::IndirectDirect).unwrap();
        let int = interventional_effects(&engine).unwrap();
        assert!(close(int.ide0.value, di.direct.value), "model {i}");
        assert!(close(int.iie1.value, di.indirect.value), "model {i}");
        assert!(close(int.ide1.value, id.direct.value), "model {i}");
        assert!(close(int.iie0.value, id.indirect.value), "model {i}");
        assert!(close(int.oe.value, te), "model {i}");
    }
}

#[test]
fn gide_specializations() {
    for (i, scm) in corpus::<f64>(13, 200, &RandomScmConfig::default()).iter().enumerate() {
        let engine = Engine::new(scm, Limits::default()).unwrap();
        for m in &scm.variable(scm.mediator()).support {
            let g = generalized_ide(&engine, &MediatorDistributionSpec::point(m.clone())).unwrap();
            let cde = controlled_direct_effect(&engine, m).unwrap();
            assert!(close(g.value, cde.value), "model {i}");
        }
        if let Ok(int) = interventional_effects(&engine) {
            for (a, ide) in [(0, &int.ide0), (1, &int.ide1)] {
                let g = generalized_ide(&engine, &MediatorDistributionSpec::potential(a)).unwrap();
                assert!(close(g.value, ide.value), "model {i}");
            }
        }
    }
}

#[test]
fn identified_rungs_are_sound() {
    let mut matched = [0usize; 4];
    for (seed, config) in [
        (21, RandomScmConfig::default().positive()),
        (22, RandomScmConfig::unconfounded().positive()),
        (23, RandomScmConfig::default()),
    ] {
        for (i, scm) in corpus::<f64>(seed, 200, &config).iter().enumerate() {
            let report = soundness_check(scm, Limits::default()).unwrap();
            for c in &report.checks {
                match &c.status {
                    CheckStatus::Mismatch { plug_in } => {
                        panic!("seed {seed} model {i}: {} truth {:?} plug-in {plug_in}", c.effect, c.truth)
                    }
                    CheckStatus::Match => {
                        matched[Family::ALL.iter().position(|f| *f == c.family).unwrap()] += 1;
                    }
                    CheckStatus::Skipped(_) => {}
                }
            }
        }
    }
    assert!(matched.iter().all(|&m| m > 50), "{matched:?}");
}
