//! Named mediation effects as exact contrasts of [`Engine::expected_outcome`].
//!
//! Labels follow the dot-index notation: `NDE(.0)` holds the mediator at its
//! exposure-0 value, `NIE(1.)` holds the exposure at 1, and so on.

use std::fmt;

use thiserror::Error;

use crate::engine::{Condition, Engine, EngineError, MediatorDistributionSpec, WorldSpec};
use crate::model::Value;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectsError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("identity violated: {0}")]
    IdentityViolated(String),
}

/// Identification status attached to a report, when a checker has run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Identified {
    Yes,
    No,
    #[default]
    Unchecked,
}

impl fmt::Display for Identified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Identified::Yes => "identified",
            Identified::No => "NOT IDENTIFIED",
            Identified::Unchecked => "unchecked",
        })
    }
}

/// A contrast `E[left | condition] - E[right | condition]` on the additive scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectQuery<S> {
    pub left: WorldSpec<S>,
    pub right: WorldSpec<S>,
    pub condition: Option<Condition>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport<S> {
    pub label: String,
    pub value: S,
    pub left_mean: S,
    pub right_mean: S,
    pub condition: String,
    pub identified: Identified,
}

impl<S: Scalar> EffectReport<S> {
    pub fn new(label: impl Into<String>, left_mean: S, right_mean: S, condition: Option<&Condition>) -> Self {
        Self {
            label: label.into(),
            value: left_mean - right_mean,
            left_mean,
            right_mean,
            condition: condition.map(|c| c.to_string()).unwrap_or_else(|| "all".into()),
            identified: Identified::Unchecked,
        }
    }

    pub fn with_identified(mut self, identified: Identified) -> Self {
        self.identified = identified;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    /// NDE(.0) + NIE(1.)
    DirectIndirect,
    /// NIE(0.) + NDE(.1)
    IndirectDirect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalEffects<S> {
    pub decomposition: Decomposition,
    pub direct: EffectReport<S>,
    pub indirect: EffectReport<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionalEffects<S> {
    pub ide0: EffectReport<S>,
    pub ide1: EffectReport<S>,
    pub iie0: EffectReport<S>,
    pub iie1: EffectReport<S>,
    pub oe: EffectReport<S>,
}

impl<S: Scalar> InterventionalEffects<S> {
    pub fn reports(&self) -> [&EffectReport<S>; 5] {
        [&self.ide0, &self.ide1, &self.iie0, &self.iie1, &self.oe]
    }
}

/// Per-unit potential outcomes behind the direct-indirect decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualEffects<S> {
    pub unit: String,
    pub probability: S,
    pub m0: Value,
    pub m1: Value,
    pub y0: S,
    pub y1_m0: S,
    pub y1: S,
    pub nde: S,
    pub nie: S,
}

fn mean<S: Scalar>(engine: &Engine<'_, S>, world: &WorldSpec<S>) -> Result<S, EngineError> {
    engine.expected_outcome(world, None)
}

fn close<S: Scalar>(a: S, b: S) -> bool {
    let scale = S::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= S::mass_tolerance() * scale
}

/// `TE = E[Y(1)] - E[Y(0)]`.
pub fn total_effect<S: Scalar>(engine: &Engine<'_, S>) -> Result<EffectReport<S>, EffectsError> {
    let scm = engine.scm();
    let y1 = mean(engine, &WorldSpec::exposure(scm, 1))?;
    let y0 = mean(engine, &WorldSpec::exposure(scm, 0))?;
    Ok(EffectReport::new("TE", y1, y0, None))
}

pub fn natural_effects<S: Scalar>(
    engine: &Engine<'_, S>,
    decomposition: Decomposition,
) -> Result<NaturalEffects<S>, EffectsError> {
    let scm = engine.scm();
    let y1 = mean(engine, &WorldSpec::exposure(scm, 1))?;
    let y0 = mean(engine, &WorldSpec::exposure(scm, 0))?;
    let (direct, indirect) = match decomposition {
        Decomposition::DirectIndirect => {
            let y10 = mean(engine, &WorldSpec::cross(scm, 1, 0))?;
            (
                EffectReport::new("NDE(.0)", y10, y0, None),
                EffectReport::new("NIE(1.)", y1, y10, None),
            )
        }
        Decomposition::IndirectDirect => {
            let y01 = mean(engine, &WorldSpec::cross(scm, 0, 1))?;
            (
                EffectReport::new("NDE(.1)", y1, y01, None),
                EffectReport::new("NIE(0.)", y01, y0, None),
            )
        }
    };
    if !close(direct.value + indirect.value, y1 - y0) {
        return Err(EffectsError::IdentityViolated(format!(
            "{} + {} = {} but TE = {}",
            direct.label,
            indirect.label,
            direct.value + indirect.value,
            y1 - y0
        )));
    }
    Ok(NaturalEffects {
        decomposition,
        direct,
        indirect,
    })
}

/// Per-unit `M(0), M(1), Y(0), Y(1,M(0)), Y(1)` with `NDE_i(.0)` and `NIE_i(1.)`.
pub fn individual_natural_effects<S: Scalar>(engine: &Engine<'_, S>) -> Result<Vec<IndividualEffects<S>>, EffectsError> {
    let scm = engine.scm();
    let w0 = WorldSpec::exposure(scm, 0);
    let w1 = WorldSpec::exposure(scm, 1);
    let w10 = WorldSpec::cross(scm, 1, 0);
    let y = scm.outcome();
    let m_support = &scm.variable(scm.mediator()).support;
    let mut rows = Vec::with_capacity(engine.units().len());
    for (i, unit) in engine.units().iter().enumerate() {
        let eval = |w: &WorldSpec<S>| -> Result<S, EngineError> {
            let v = engine.evaluate_indices(unit, w, None)?;
            Ok(scm.outcome_value(v[y]))
        };
        let y0 = eval(&w0)?;
        let y1 = eval(&w1)?;
        let y1_m0 = eval(&w10)?;
        rows.push(IndividualEffects {
            unit: unit.label(scm),
            probability: unit.probability,
            m0: m_support[engine.potential_mediator(i, 0)].clone(),
            m1: m_support[engine.potential_mediator(i, 1)].clone(),
            y0,
            y1_m0,
            y1,
            nde: y1_m0 - y0,
            nie: y1 - y1_m0,
        });
    }
    Ok(rows)
}

/// IDE(.0), IDE(.1), IIE(0.), IIE(1.) and OE with draws from the conditional
/// potential mediator laws given covariates.
pub fn interventional_effects<S: Scalar>(engine: &Engine<'_, S>) -> Result<InterventionalEffects<S>, EffectsError> {
    let scm = engine.scm();
    let e = |a: u8, a_prime: u8| mean(engine, &WorldSpec::drawn(scm, a, MediatorDistributionSpec::potential(a_prime)));
    let e00 = e(0, 0)?;
    let e01 = e(0, 1)?;
    let e10 = e(1, 0)?;
    let e11 = e(1, 1)?;
    let out = InterventionalEffects {
        ide0: EffectReport::new("IDE(.0)", e10, e00, None),
        ide1: EffectReport::new("IDE(.1)", e11, e01, None),
        iie0: EffectReport::new("IIE(0.)", e01, e00, None),
        iie1: EffectReport::new("IIE(1.)", e11, e10, None),
        oe: EffectReport::new("OE", e11, e00, None),
    };
    let first = out.ide0.value + out.iie1.value;
    let second = out.iie0.value + out.ide1.value;
    if !close(first, out.oe.value) || !close(second, out.oe.value) {
        return Err(EffectsError::IdentityViolated(format!(
            "IDE(.0)+IIE(1.) = {first}, IIE(0.)+IDE(.1) = {second}, OE = {}",
            out.oe.value
        )));
    }
    Ok(out)
}

/// `CDE(m) = E[Y(1,m)] - E[Y(0,m)]`.
pub fn controlled_direct_effect<S: Scalar>(engine: &Engine<'_, S>, m: &Value) -> Result<EffectReport<S>, EffectsError> {
    let scm = engine.scm();
    let y1 = mean(engine, &WorldSpec::controlled(scm, 1, m.clone()))?;
    let y0 = mean(engine, &WorldSpec::controlled(scm, 0, m.clone()))?;
    Ok(EffectReport::new(format!("CDE({m})"), y1, y0, None))
}

/// `GIDE(.D) = E[Y(1, M_D)] - E[Y(0, M_D)]`.
pub fn generalized_ide<S: Scalar>(
    engine: &Engine<'_, S>,
    spec: &MediatorDistributionSpec<S>,
) -> Result<EffectReport<S>, EffectsError> {
    let scm = engine.scm();
    let y1 = mean(engine, &WorldSpec::drawn(scm, 1, spec.clone()))?;
    let y0 = mean(engine, &WorldSpec::drawn(scm, 0, spec.clone()))?;
    Ok(EffectReport::new(format!("GIDE({spec})"), y1, y0, None))
}

pub fn general_contrast<S: Scalar>(engine: &Engine<'_, S>, query: &EffectQuery<S>) -> Result<EffectReport<S>, EffectsError> {
    let cond = query.condition.as_ref();
    let left = engine.expected_outcome(&query.left, cond)?;
    let right = engine.expected_outcome(&query.right, cond)?;
    Ok(EffectReport::new(query.label.clone(), left, right, cond))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumDisparity<S> {
    pub stratum: String,
    /// `P(C = c | A = 1)`.
    pub weight: S,
    pub disparity: S,
    pub disparity_removed: S,
    pub remaining_disparity: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisparityDecomposition<S> {
    pub strata: Vec<StratumDisparity<S>>,
    /// Strata averaged with weights `P(C = c | A = 1)`.
    pub disparity: S,
    pub disparity_removed: S,
    pub remaining_disparity: S,
}

fn stratum_condition<S: Scalar>(engine: &Engine<'_, S>, stratum: usize, a: Option<u8>) -> Condition {
    let scm = engine.scm();
    let mut cond = Condition::new();
    if let Some(a) = a {
        cond = cond.and(scm.variable(scm.exposure()).name.clone(), Value::Int(a as i64));
    }
    for (&c, v) in scm.covariates().iter().zip(engine.stratum_values(stratum)) {
        cond = cond.and(scm.variable(c).name.clone(), v);
    }
    cond
}

/// Strata with positive mass, checking `P(A=a, c) > 0` for the listed levels.
fn positive_strata<S: Scalar>(engine: &Engine<'_, S>, levels: &[u8]) -> Result<Vec<(usize, S)>, EffectsError> {
    let mut out = Vec::new();
    let scm = engine.scm();
    let exposed = Condition::new().and(scm.variable(scm.exposure()).name.clone(), Value::Int(1));
    let p_a1 = engine.condition_probability(Some(&exposed))?;
    for s in 0..engine.stratum_count() {
        if engine.stratum_mass(s) <= S::zero() {
            continue;
        }
        for &a in levels {
            let p = engine.condition_probability(Some(&stratum_condition(engine, s, Some(a))))?;
            if p <= S::zero() {
                return Err(EngineError::PositivityViolation(format!(
                    "P(A={a}, {}) = 0",
                    engine.stratum_label(s)
                ))
                .into());
            }
        }
        let p1c = engine.condition_probability(Some(&stratum_condition(engine, s, Some(1))))?;
        out.push((s, p1c / p_a1));
    }
    Ok(out)
}

/// Splits `disparity(c)` into the part removed by drawing the exposed
/// group's mediator from the unexposed group's observed law, and the rest.
pub fn disparity_decomposition<S: Scalar>(engine: &Engine<'_, S>) -> Result<DisparityDecomposition<S>, EffectsError> {
    let scm = engine.scm();
    let intervened = WorldSpec::drawn(scm, 1, MediatorDistributionSpec::observed(0));
    let natural = WorldSpec::natural();
    let mut strata = Vec::new();
    for (s, weight) in positive_strata(engine, &[0, 1])? {
        let c1 = stratum_condition(engine, s, Some(1));
        let c0 = stratum_condition(engine, s, Some(0));
        let y1 = engine.expected_outcome(&natural, Some(&c1))?;
        let y0 = engine.expected_outcome(&natural, Some(&c0))?;
        let y1_drawn = engine.expected_outcome(&intervened, Some(&c1))?;
        let disparity = y1 - y0;
        let removed = y1 - y1_drawn;
        strata.push(StratumDisparity {
            stratum: engine.stratum_label(s),
            weight,
            disparity,
            disparity_removed: removed,
            remaining_disparity: disparity - removed,
        });
    }
    let avg = |f: fn(&StratumDisparity<S>) -> S| -> S {
        crate::scalar::compensated_sum(strata.iter().map(|r| r.weight * f(r)))
    };
    let disparity = avg(|r| r.disparity);
    let disparity_removed = avg(|r| r.disparity_removed);
    Ok(DisparityDecomposition {
        disparity,
        disparity_removed,
        remaining_disparity: disparity - disparity_removed,
        strata,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedEffect<S> {
    pub strata: Vec<(String, EffectReport<S>)>,
    /// Average over `P(C | A = 1)`.
    pub summary: EffectReport<S>,
}

/// The half-half mixture of the two groups' observed mediator laws.
pub fn halfway_spec<S: Scalar>() -> MediatorDistributionSpec<S> {
    let half = S::from_f64_lossy(0.5);
    MediatorDistributionSpec::mixture(vec![
        (half, MediatorDistributionSpec::observed(1)),
        (half, MediatorDistributionSpec::observed(0)),
    ])
}

/// Effect on the exposed of drawing their mediator from [`halfway_spec`].
pub fn halfway_intervention_effect<S: Scalar>(engine: &Engine<'_, S>) -> Result<StratifiedEffect<S>, EffectsError> {
    drawn_effect_on_exposed(engine, &halfway_spec(), "halfway")
}

/// `E[Y | A=1, C] - E[Y(1, M_spec) | A=1, C]` per stratum and averaged over
/// `P(C | A=1)`.
pub fn drawn_effect_on_exposed<S: Scalar>(
    engine: &Engine<'_, S>,
    spec: &MediatorDistributionSpec<S>,
    label: &str,
) -> Result<StratifiedEffect<S>, EffectsError> {
    let scm = engine.scm();
    let intervened = WorldSpec::drawn(scm, 1, spec.clone());
    let natural = WorldSpec::natural();
    let mut strata = Vec::new();
    for (s, _) in positive_strata(engine, &[0, 1])? {
        let c1 = stratum_condition(engine, s, Some(1));
        let left = engine.expected_outcome(&natural, Some(&c1))?;
        let right = engine.expected_outcome(&intervened, Some(&c1))?;
        strata.push((engine.stratum_label(s), EffectReport::new(label, left, right, Some(&c1))));
    }
    let exposed = Condition::new().and(scm.variable(scm.exposure()).name.clone(), Value::Int(1));
    let summary = general_contrast(
        engine,
        &EffectQuery {
            left: natural,
            right: intervened,
            condition: Some(exposed),
            label: label.to_string(),
        },
    )?;
    Ok(StratifiedEffect { strata, summary })
}
