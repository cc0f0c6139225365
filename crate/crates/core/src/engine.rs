//! Exhaustive counterfactual evaluation over the exogenous unit space.
//!
//! A [`Unit`] fixes every noise term, so every potential outcome of the
//! model is a deterministic function of the unit. Worlds are described by a
//! [`WorldSpec`]; cross-world mediators (`M(a')`) are evaluated in a
//! sub-world that shares the unit's noise. Stochastic mediator draws are
//! integrated analytically by [`Engine::expected_outcome`].

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::model::{Role, Scm, Value};
use crate::scalar::{CompensatedSum, Scalar};

/// Default cap on enumerated cells (units or observed-law cells).
pub const DEFAULT_MAX_CELLS: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_MAX_CELLS`].
pub const MAX_CELLS_ENV: &str = "MEDIATRIX_MAX_CELLS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_cells: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

impl Limits {
    /// Default limits, overridden by `MEDIATRIX_MAX_CELLS` when set and valid.
    pub fn from_env() -> Self {
        std::env::var(MAX_CELLS_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .map(|max_cells| Self { max_cells })
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("SupportTooLarge: {what} has {cells} cells, cap is {cap}")]
    SupportTooLarge { what: &'static str, cells: u128, cap: u64 },
    #[error("PositivityViolation: {0}")]
    PositivityViolation(String),
    #[error("UnresolvedDraw: world contains a draw directive but no resolver was supplied")]
    UnresolvedDraw,
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("invalid condition: {0}")]
    InvalidCondition(String),
    #[error("invalid mediator distribution: {0}")]
    InvalidSpec(String),
}

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

/// One cell of the product noise space.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit<S> {
    /// Noise symbol index per variable, in the model's variable order.
    pub noise: Vec<usize>,
    pub probability: S,
}

impl<S: Scalar> Unit<S> {
    pub fn noise_assignment(&self, scm: &Scm<S>) -> BTreeMap<String, String> {
        scm.variables()
            .iter()
            .zip(&self.noise)
            .map(|(v, &n)| (v.name.clone(), v.noise.symbols[n].clone()))
            .collect()
    }

    /// Compact label listing only non-degenerate noise terms, e.g. `U=Bo`.
    pub fn label(&self, scm: &Scm<S>) -> String {
        let parts: Vec<String> = scm
            .variables()
            .iter()
            .zip(&self.noise)
            .filter(|(v, _)| v.noise.len() > 1)
            .map(|(v, &n)| format!("{}={}", v.name, v.noise.symbols[n]))
            .collect();
        if parts.is_empty() {
            "unit".to_string()
        } else {
            parts.join(",")
        }
    }
}

fn unit_space_size<S: Scalar>(scm: &Scm<S>, limits: Limits) -> Result<u64, EngineError> {
    let cells = scm.unit_count();
    if cells > limits.max_cells as u128 {
        return Err(EngineError::SupportTooLarge {
            what: "unit space",
            cells,
            cap: limits.max_cells,
        });
    }
    Ok(cells as u64)
}

fn decode_unit<S: Scalar>(scm: &Scm<S>, mut index: u64) -> Unit<S> {
    let vars = scm.variables();
    let mut noise = vec![0; vars.len()];
    for (slot, v) in noise.iter_mut().zip(vars).rev() {
        let r = v.noise.len() as u64;
        *slot = (index % r) as usize;
        index /= r;
    }
    let probability = vars
        .iter()
        .zip(&noise)
        .fold(S::one(), |acc, (v, &n)| acc * v.noise.probabilities[n]);
    Unit { noise, probability }
}

/// All units, first variable's noise varying slowest. Zero-probability
/// units are kept.
pub fn enumerate_units<S: Scalar>(scm: &Scm<S>, limits: Limits) -> Result<Vec<Unit<S>>, EngineError> {
    let n = unit_space_size(scm, limits)?;
    Ok((0..n).map(|i| decode_unit(scm, i)).collect())
}

/// Draws one unit by sampling each noise term independently.
pub fn sample_unit<S: Scalar, R: Rng + ?Sized>(scm: &Scm<S>, rng: &mut R) -> Unit<S> {
    let mut probability = S::one();
    let noise = scm
        .variables()
        .iter()
        .map(|v| {
            let k = sample_index(&v.noise.probabilities, rng);
            probability = probability * v.noise.probabilities[k];
            k
        })
        .collect();
    Unit { noise, probability }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<S: Scalar, R: Rng + ?Sized>(probs: &[S], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.to_f64_lossy();
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

// ---------------------------------------------------------------------------
// Worlds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Marginal law (single stratum).
    None,
    /// Law within each covariate stratum.
    Covariates,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MediatorDistributionSpec<S> {
    PointMass(Value),
    /// Law of the potential mediator `M(a')`.
    PotentialConditional { exposure: u8, conditioning: Conditioning },
    /// Law of the observed mediator among units with `A = a`.
    ObservedConditional { exposure: u8, conditioning: Conditioning },
    Mixture(Vec<(S, MediatorDistributionSpec<S>)>),
    /// Covariate stratum values -> law over the mediator support.
    Explicit(Vec<(Vec<Value>, Vec<S>)>),
}

impl<S: Scalar> MediatorDistributionSpec<S> {
    pub fn potential(exposure: u8) -> Self {
        Self::PotentialConditional {
            exposure,
            conditioning: Conditioning::Covariates,
        }
    }

    pub fn observed(exposure: u8) -> Self {
        Self::ObservedConditional {
            exposure,
            conditioning: Conditioning::Covariates,
        }
    }

    pub fn point(value: impl Into<Value>) -> Self {
        Self::PointMass(value.into())
    }

    pub fn mixture(components: Vec<(S, MediatorDistributionSpec<S>)>) -> Self {
        Self::Mixture(components)
    }
}

impl<S: Scalar> fmt::Display for MediatorDistributionSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cond = |c: &Conditioning| match c {
            Conditioning::None => "",
            Conditioning::Covariates => "|C",
        };
        match self {
            Self::PointMass(v) => write!(f, "point({v})"),
            Self::PotentialConditional { exposure, conditioning } => {
                write!(f, "pot({exposure}{})", cond(conditioning))
            }
            Self::ObservedConditional { exposure, conditioning } => {
                write!(f, "obs({exposure}{})", cond(conditioning))
            }
            Self::Mixture(parts) => {
                f.write_str("mix(")?;
                for (i, (w, s)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{w}*{s}")?;
                }
                f.write_str(")")
            }
            Self::Explicit(rows) => write!(f, "explicit[{} strata]", rows.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive<S> {
    Natural,
    Set(Value),
    /// Mediator at its potential value under exposure `a'`, same unit noise.
    PotentialUnder(u8),
    Draw(MediatorDistributionSpec<S>),
}

/// An intervention regime: one directive per named variable, the rest natural.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldSpec<S> {
    pub directives: BTreeMap<String, Directive<S>>,
}

impl<S: Scalar> WorldSpec<S> {
    pub fn natural() -> Self {
        Self {
            directives: BTreeMap::new(),
        }
    }

    pub fn with(mut self, variable: impl Into<String>, directive: Directive<S>) -> Self {
        self.directives.insert(variable.into(), directive);
        self
    }

    pub fn set(self, variable: impl Into<String>, value: impl Into<Value>) -> Self {
        self.with(variable, Directive::Set(value.into()))
    }

    /// `{A: set(a)}` for the model's exposure.
    pub fn exposure(scm: &Scm<S>, a: u8) -> Self {
        Self::natural().set(scm.variable(scm.exposure()).name.clone(), Value::Int(a as i64))
    }

    /// `{A: set(a), M: potential_under(a')}`.
    pub fn cross(scm: &Scm<S>, a: u8, a_prime: u8) -> Self {
        Self::exposure(scm, a).with(
            scm.variable(scm.mediator()).name.clone(),
            Directive::PotentialUnder(a_prime),
        )
    }

    /// `{A: set(a), M: draw(spec)}`.
    pub fn drawn(scm: &Scm<S>, a: u8, spec: MediatorDistributionSpec<S>) -> Self {
        Self::exposure(scm, a).with(scm.variable(scm.mediator()).name.clone(), Directive::Draw(spec))
    }

    /// `{A: set(a), M: set(m)}`.
    pub fn controlled(scm: &Scm<S>, a: u8, m: Value) -> Self {
        Self::exposure(scm, a).set(scm.variable(scm.mediator()).name.clone(), m)
    }

    pub fn has_draw(&self) -> bool {
        self.directives.values().any(|d| matches!(d, Directive::Draw(_)))
    }
}

/// Observed-event predicate: a conjunction of `variable = value` over
/// covariates and the exposure, evaluated in the natural world.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Condition {
    pub terms: Vec<(String, Value)>,
}

impl Condition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn and(mut self, variable: impl Into<String>, value: impl Into<Value>) -> Self {
        self.terms.push((variable.into(), value.into()));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("all");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone)]
enum Resolved {
    Natural,
    Set(usize),
    PotentialUnder(u8),
    Draw,
}

/// A world with directives resolved to support indices and draw laws tabulated.
#[derive(Debug, Clone)]
pub struct PreparedWorld<S> {
    resolved: Vec<Resolved>,
    laws: Option<Vec<Option<Vec<S>>>>,
}

/// Source of concrete mediator values for draw directives.
pub trait DrawResolver<S> {
    fn resolve(&mut self, law: &[S]) -> usize;
}

/// Draws by inverse CDF from the supplied RNG.
pub struct SamplingResolver<'r, R: Rng + ?Sized> {
    pub rng: &'r mut R,
}

impl<S: Scalar, R: Rng + ?Sized> DrawResolver<S> for SamplingResolver<'_, R> {
    fn resolve(&mut self, law: &[S]) -> usize {
        sample_index(law, self.rng)
    }
}

/// Always resolves to a fixed mediator support index.
pub struct FixedResolver(pub usize);

impl<S> DrawResolver<S> for FixedResolver {
    fn resolve(&mut self, _law: &[S]) -> usize {
        self.0
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Per-unit facts reused across queries.
#[derive(Debug, Clone)]
struct UnitFacts<S> {
    probability: S,
    stratum: usize,
    exposure: usize,
    mediator: usize,
    potential_mediator: [usize; 2],
}

/// Enumeration engine bound to one model.
pub struct Engine<'m, S> {
    scm: &'m Scm<S>,
    units: Vec<Unit<S>>,
    facts: Vec<UnitFacts<S>>,
    stratum_radices: Vec<usize>,
    stratum_mass: Vec<S>,
}

impl<'m, S: Scalar> Engine<'m, S> {
    pub fn new(scm: &'m Scm<S>, limits: Limits) -> Result<Self, EngineError> {
        let units = enumerate_units(scm, limits)?;
        let stratum_radices: Vec<usize> = scm
            .covariates()
            .iter()
            .map(|&c| scm.variable(c).support.len())
            .collect();
        let n_strata: usize = stratum_radices.iter().product();
        let mut mass = vec![CompensatedSum::new(); n_strata];
        let a_set = |a: u8| {
            let mut d = vec![Resolved::Natural; scm.variables().len()];
            d[scm.exposure()] = Resolved::Set(scm.exposure_level(a));
            d
        };
        let worlds = [a_set(0), a_set(1)];
        let natural = vec![Resolved::Natural; scm.variables().len()];
        let mut facts = Vec::with_capacity(units.len());
        for u in &units {
            let nat = evaluate_resolved(scm, &u.noise, &natural, &mut || 0);
            let stratum = stratum_index(scm, &stratum_radices, &nat);
            mass[stratum].add(u.probability);
            let m0 = evaluate_resolved(scm, &u.noise, &worlds[0], &mut || 0)[scm.mediator()];
            let m1 = evaluate_resolved(scm, &u.noise, &worlds[1], &mut || 0)[scm.mediator()];
            facts.push(UnitFacts {
                probability: u.probability,
                stratum,
                exposure: nat[scm.exposure()],
                mediator: nat[scm.mediator()],
                potential_mediator: [m0, m1],
            });
        }
        Ok(Self {
            scm,
            units,
            facts,
            stratum_radices,
            stratum_mass: mass.iter().map(CompensatedSum::value).collect(),
        })
    }

    pub fn scm(&self) -> &'m Scm<S> {
        self.scm
    }

    pub fn units(&self) -> &[Unit<S>] {
        &self.units
    }

    pub fn stratum_count(&self) -> usize {
        self.stratum_mass.len()
    }

    /// Covariate values of a stratum index.
    pub fn stratum_values(&self, mut stratum: usize) -> Vec<Value> {
        let mut idx = vec![0; self.stratum_radices.len()];
        for (slot, &r) in idx.iter_mut().zip(&self.stratum_radices).rev() {
            *slot = stratum % r;
            stratum /= r;
        }
        idx.iter()
            .zip(self.scm.covariates())
            .map(|(&k, &c)| self.scm.variable(c).support[k].clone())
            .collect()
    }

    pub fn stratum_of_values(&self, values: &[Value]) -> Result<usize, EngineError> {
        let covs = self.scm.covariates();
        if values.len() != covs.len() {
            return Err(EngineError::InvalidCondition(format!(
                "stratum needs {} covariate values, got {}",
                covs.len(),
                values.len()
            )));
        }
        let mut acc = 0;
        for ((v, &c), &r) in values.iter().zip(covs).zip(&self.stratum_radices) {
            let var = self.scm.variable(c);
            let k = var.support_index(v).ok_or_else(|| {
                EngineError::InvalidCondition(format!("{v} is not in the support of `{}`", var.name))
            })?;
            acc = acc * r + k;
        }
        Ok(acc)
    }

    pub fn stratum_label(&self, stratum: usize) -> String {
        let vals = self.stratum_values(stratum);
        if vals.is_empty() {
            return "(all)".to_string();
        }
        self.scm
            .covariates()
            .iter()
            .zip(vals)
            .map(|(&c, v)| format!("{}={v}", self.scm.variable(c).name))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn stratum_mass(&self, stratum: usize) -> S {
        self.stratum_mass[stratum]
    }

    /// Per-unit potential mediator `M(a)` as a support index.
    pub fn potential_mediator(&self, unit: usize, a: u8) -> usize {
        self.facts[unit].potential_mediator[a as usize]
    }

    fn resolve_world(&self, world: &WorldSpec<S>) -> Result<Vec<Resolved>, EngineError> {
        let scm = self.scm;
        let mut out = vec![Resolved::Natural; scm.variables().len()];
        for (name, directive) in &world.directives {
            let i = scm
                .index_of(name)
                .ok_or_else(|| EngineError::InvalidWorld(format!("unknown variable `{name}`")))?;
            let var = scm.variable(i);
            out[i] = match directive {
                Directive::Natural => Resolved::Natural,
                Directive::Set(v) => Resolved::Set(var.support_index(v).ok_or_else(|| {
                    EngineError::InvalidWorld(format!("{v} is not in the support of `{name}`"))
                })?),
                Directive::PotentialUnder(a) => {
                    if i != scm.mediator() {
                        return Err(EngineError::InvalidWorld(format!(
                            "potential_under applies only to the mediator, not `{name}`"
                        )));
                    }
                    check_level(*a)?;
                    Resolved::PotentialUnder(*a)
                }
                Directive::Draw(_) => {
                    if i != scm.mediator() {
                        return Err(EngineError::InvalidWorld(format!(
                            "draw applies only to the mediator, not `{name}`"
                        )));
                    }
                    Resolved::Draw
                }
            };
        }
        Ok(out)
    }

    fn resolve_condition(&self, condition: Option<&Condition>) -> Result<Vec<(usize, usize)>, EngineError> {
        let Some(condition) = condition else {
            return Ok(Vec::new());
        };
        let scm = self.scm;
        condition
            .terms
            .iter()
            .map(|(name, value)| {
                let i = scm
                    .index_of(name)
                    .ok_or_else(|| EngineError::InvalidCondition(format!("unknown variable `{name}`")))?;
                let var = scm.variable(i);
                if !matches!(var.role, Role::Covariate | Role::Exposure) {
                    return Err(EngineError::InvalidCondition(format!(
                        "conditioning is limited to covariates and the exposure; `{name}` is a {}",
                        var.role
                    )));
                }
                let k = var.support_index(value).ok_or_else(|| {
                    EngineError::InvalidCondition(format!("{value} is not in the support of `{name}`"))
                })?;
                Ok((i, k))
            })
            .collect()
    }

    /// Law of the mediator in every covariate stratum (`None` where the
    /// stratum cannot support the spec).
    pub fn stratum_laws(&self, spec: &MediatorDistributionSpec<S>) -> Result<Vec<Option<Vec<S>>>, EngineError> {
        let scm = self.scm;
        let m_len = scm.variable(scm.mediator()).support.len();
        let n_strata = self.stratum_count();
        match spec {
            MediatorDistributionSpec::PointMass(v) => {
                let k = scm.variable(scm.mediator()).support_index(v).ok_or_else(|| {
                    EngineError::InvalidSpec(format!("{v} is not in the mediator support"))
                })?;
                let mut law = vec![S::zero(); m_len];
                law[k] = S::one();
                Ok(vec![Some(law); n_strata])
            }
            MediatorDistributionSpec::PotentialConditional { exposure, conditioning } => {
                check_level(*exposure)?;
                let a = *exposure as usize;
                self.tabulate(*conditioning, |f| Some(f.potential_mediator[a]))
            }
            MediatorDistributionSpec::ObservedConditional { exposure, conditioning } => {
                check_level(*exposure)?;
                let level = scm.exposure_level(*exposure);
                self.tabulate(*conditioning, |f| (f.exposure == level).then_some(f.mediator))
            }
            MediatorDistributionSpec::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(EngineError::InvalidSpec("empty mixture".into()));
                }
                if parts.iter().any(|(w, _)| w.is_nan() || *w < S::zero()) {
                    return Err(EngineError::InvalidSpec("mixture weights must be non-negative".into()));
                }
                let total: S = parts.iter().map(|(w, _)| *w).sum();
                if (total - S::one()).abs() > S::mass_tolerance() {
                    return Err(EngineError::InvalidSpec(format!("mixture weights sum to {total}, not 1")));
                }
                let mut out: Vec<Option<Vec<S>>> = vec![Some(vec![S::zero(); m_len]); n_strata];
                for (w, component) in parts {
                    let laws = self.stratum_laws(component)?;
                    for (acc, law) in out.iter_mut().zip(laws) {
                        match (acc.as_mut(), law) {
                            (Some(acc), Some(law)) => {
                                for (a, p) in acc.iter_mut().zip(law) {
                                    *a = *a + *w * p;
                                }
                            }
                            _ => *acc = None,
                        }
                    }
                }
                Ok(out)
            }
            MediatorDistributionSpec::Explicit(rows) => {
                let mut out = vec![None; n_strata];
                for (values, law) in rows {
                    if law.len() != m_len {
                        return Err(EngineError::InvalidSpec(format!(
                            "explicit law has {} entries, mediator support has {m_len}",
                            law.len()
                        )));
                    }
                    if law.iter().any(|p| p.is_nan() || *p < S::zero()) {
                        return Err(EngineError::InvalidSpec("explicit law has a negative entry".into()));
                    }
                    let total: S = law.iter().copied().sum();
                    if (total - S::one()).abs() > S::mass_tolerance() {
                        return Err(EngineError::InvalidSpec(format!("explicit law sums to {total}, not 1")));
                    }
                    let s = self
                        .stratum_of_values(values)
                        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
                    out[s] = Some(law.clone());
                }
                Ok(out)
            }
        }
    }

    fn tabulate(
        &self,
        conditioning: Conditioning,
        pick: impl Fn(&UnitFacts<S>) -> Option<usize>,
    ) -> Result<Vec<Option<Vec<S>>>, EngineError> {
        let m_len = self.scm.variable(self.scm.mediator()).support.len();
        let n_strata = match conditioning {
            Conditioning::None => 1,
            Conditioning::Covariates => self.stratum_count(),
        };
        let mut acc = vec![vec![CompensatedSum::new(); m_len]; n_strata];
        let mut den = vec![CompensatedSum::new(); n_strata];
        for f in &self.facts {
            if let Some(m) = pick(f) {
                let s = match conditioning {
                    Conditioning::None => 0,
                    Conditioning::Covariates => f.stratum,
                };
                acc[s][m].add(f.probability);
                den[s].add(f.probability);
            }
        }
        let laws: Vec<Option<Vec<S>>> = acc
            .iter()
            .zip(&den)
            .map(|(row, d)| {
                let d = d.value();
                (d > S::zero()).then(|| row.iter().map(|x| x.value() / d).collect())
            })
            .collect();
        Ok(match conditioning {
            Conditioning::Covariates => laws,
            Conditioning::None => {
                if laws[0].is_none() {
                    return Err(EngineError::PositivityViolation(
                        "the conditioning event has probability 0".into(),
                    ));
                }
                vec![laws[0].clone(); self.stratum_count()]
            }
        })
    }

    /// Mediator law for a single covariate stratum.
    pub fn stratum_mediator_distribution(
        &self,
        spec: &MediatorDistributionSpec<S>,
        stratum: &[Value],
    ) -> Result<Vec<S>, EngineError> {
        let s = self.stratum_of_values(stratum)?;
        if self.stratum_mass[s] <= S::zero() {
            return Err(EngineError::PositivityViolation(format!(
                "stratum ({}) has probability 0",
                self.stratum_label(s)
            )));
        }
        self.stratum_laws(spec)?.swap_remove(s).ok_or_else(|| {
            EngineError::PositivityViolation(format!(
                "{spec} is undefined in stratum ({}): conditioning event has probability 0",
                self.stratum_label(s)
            ))
        })
    }

    /// Evaluates every variable for one unit in the given world.
    pub fn evaluate(
        &self,
        unit: &Unit<S>,
        world: &WorldSpec<S>,
        resolver: Option<&mut dyn DrawResolver<S>>,
    ) -> Result<BTreeMap<String, Value>, EngineError> {
        let values = self.evaluate_indices(unit, world, resolver)?;
        Ok(self
            .scm
            .variables()
            .iter()
            .zip(values)
            .map(|(v, k)| (v.name.clone(), v.support[k].clone()))
            .collect())
    }

    /// As [`Self::evaluate`], returning support indices in variable order.
    pub fn evaluate_indices(
        &self,
        unit: &Unit<S>,
        world: &WorldSpec<S>,
        resolver: Option<&mut dyn DrawResolver<S>>,
    ) -> Result<Vec<usize>, EngineError> {
        let prepared = self.prepare(world)?;
        self.evaluate_prepared(unit, &prepared, resolver)
    }

    /// Resolves a world once (including draw laws) for repeated evaluation.
    pub fn prepare(&self, world: &WorldSpec<S>) -> Result<PreparedWorld<S>, EngineError> {
        let resolved = self.resolve_world(world)?;
        let laws = match world.directives.values().find_map(|d| match d {
            Directive::Draw(spec) => Some(spec),
            _ => None,
        }) {
            Some(spec) => Some(self.stratum_laws(spec)?),
            None => None,
        };
        Ok(PreparedWorld { resolved, laws })
    }

    pub fn evaluate_prepared(
        &self,
        unit: &Unit<S>,
        prepared: &PreparedWorld<S>,
        resolver: Option<&mut dyn DrawResolver<S>>,
    ) -> Result<Vec<usize>, EngineError> {
        let scm = self.scm;
        let Some(laws) = &prepared.laws else {
            return Ok(evaluate_resolved(scm, &unit.noise, &prepared.resolved, &mut || 0));
        };
        let Some(resolver) = resolver else {
            return Err(EngineError::UnresolvedDraw);
        };
        let nat = evaluate_natural(scm, &unit.noise);
        let stratum = stratum_index(scm, &self.stratum_radices, &nat);
        let law = laws[stratum].as_ref().ok_or_else(|| {
            EngineError::PositivityViolation(format!(
                "mediator draw is undefined in stratum ({})",
                self.stratum_label(stratum)
            ))
        })?;
        Ok(evaluate_resolved(scm, &unit.noise, &prepared.resolved, &mut || resolver.resolve(law)))
    }

    /// Whether a unit satisfies a condition in the natural world.
    pub fn satisfies(&self, unit: &Unit<S>, condition: Option<&Condition>) -> Result<bool, EngineError> {
        let terms = self.resolve_condition(condition)?;
        if terms.is_empty() {
            return Ok(true);
        }
        let nat = evaluate_natural(self.scm, &unit.noise);
        Ok(terms.iter().all(|&(i, k)| nat[i] == k))
    }

    /// Probability of a natural-world event over covariates and exposure.
    pub fn condition_probability(&self, condition: Option<&Condition>) -> Result<S, EngineError> {
        let terms = self.resolve_condition(condition)?;
        let natural = vec![Resolved::Natural; self.scm.variables().len()];
        let mut acc = CompensatedSum::new();
        for (u, f) in self.units.iter().zip(&self.facts) {
            if terms.is_empty() {
                acc.add(f.probability);
                continue;
            }
            let nat = evaluate_resolved(self.scm, &u.noise, &natural, &mut || 0);
            if terms.iter().all(|&(i, k)| nat[i] == k) {
                acc.add(f.probability);
            }
        }
        Ok(acc.value())
    }

    /// Exact `E[Y_world | condition]`, integrating mediator draws analytically.
    pub fn expected_outcome(&self, world: &WorldSpec<S>, condition: Option<&Condition>) -> Result<S, EngineError> {
        let scm = self.scm;
        let PreparedWorld { resolved, laws: draw_laws } = self.prepare(world)?;
        let terms = self.resolve_condition(condition)?;
        let mediator = scm.mediator();
        let natural = vec![Resolved::Natural; scm.variables().len()];
        let mut num = CompensatedSum::new();
        let mut den = CompensatedSum::new();
        let mut set_m = resolved.clone();
        for (u, f) in self.units.iter().zip(&self.facts) {
            if f.probability <= S::zero() {
                continue;
            }
            if !terms.is_empty() {
                let nat = evaluate_resolved(scm, &u.noise, &natural, &mut || 0);
                if !terms.iter().all(|&(i, k)| nat[i] == k) {
                    continue;
                }
            }
            let y = match &draw_laws {
                None => {
                    let v = evaluate_resolved(scm, &u.noise, &resolved, &mut || 0);
                    scm.outcome_value(v[scm.outcome()])
                }
                Some(laws) => {
                    let law = laws[f.stratum].as_ref().ok_or_else(|| {
                        EngineError::PositivityViolation(format!(
                            "mediator draw is undefined in stratum ({})",
                            self.stratum_label(f.stratum)
                        ))
                    })?;
                    let mut acc = CompensatedSum::new();
                    for (m, &p) in law.iter().enumerate() {
                        if p > S::zero() {
                            set_m[mediator] = Resolved::Set(m);
                            let v = evaluate_resolved(scm, &u.noise, &set_m, &mut || 0);
                            acc.add(p * scm.outcome_value(v[scm.outcome()]));
                        }
                    }
                    acc.value()
                }
            };
            num.add(f.probability * y);
            den.add(f.probability);
        }
        let den = den.value();
        if den <= S::zero() {
            return Err(EngineError::PositivityViolation(format!(
                "conditioning event ({}) has probability 0",
                condition.map(|c| c.to_string()).unwrap_or_else(|| "all".into())
            )));
        }
        Ok(num.value() / den)
    }
}

fn check_level(a: u8) -> Result<(), EngineError> {
    if a > 1 {
        return Err(EngineError::InvalidWorld(format!("exposure level must be 0 or 1, got {a}")));
    }
    Ok(())
}

fn stratum_index<S: Scalar>(scm: &Scm<S>, radices: &[usize], values: &[usize]) -> usize {
    scm.covariates()
        .iter()
        .zip(radices)
        .fold(0, |acc, (&c, &r)| acc * r + values[c])
}

/// Core evaluator in topological order. `draw` supplies the mediator
/// support index for a draw directive.
fn evaluate_resolved<S: Scalar>(
    scm: &Scm<S>,
    noise: &[usize],
    directives: &[Resolved],
    draw: &mut dyn FnMut() -> usize,
) -> Vec<usize> {
    let vars = scm.variables();
    let mut values = vec![0usize; vars.len()];
    let mut parent_buf = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        values[i] = match &directives[i] {
            Resolved::Set(k) => *k,
            Resolved::Natural => {
                parent_buf.clear();
                parent_buf.extend(v.parents.iter().map(|&p| values[p]));
                v.table.lookup(&parent_buf, noise[i])
            }
            Resolved::PotentialUnder(a) => potential_mediator(scm, noise, *a),
            Resolved::Draw => draw(),
        };
    }
    values
}

/// `M(a)` for a unit: the mediator in the world where only the exposure is set.
fn potential_mediator<S: Scalar>(scm: &Scm<S>, noise: &[usize], a: u8) -> usize {
    let mut d = vec![Resolved::Natural; scm.variables().len()];
    d[scm.exposure()] = Resolved::Set(scm.exposure_level(a));
    evaluate_resolved(scm, noise, &d, &mut || 0)[scm.mediator()]
}

/// Natural-world assignment (support indices) for a unit's noise.
pub fn evaluate_natural<S: Scalar>(scm: &Scm<S>, noise: &[usize]) -> Vec<usize> {
    let natural = vec![Resolved::Natural; scm.variables().len()];
    evaluate_resolved(scm, noise, &natural, &mut || 0)
}

/// Convenience wrapper: exact expectation without keeping an engine around.
pub fn expected_outcome<S: Scalar>(
    scm: &Scm<S>,
    world: &WorldSpec<S>,
    condition: Option<&Condition>,
    limits: Limits,
) -> Result<S, EngineError> {
    Engine::new(scm, limits)?.expected_outcome(world, condition)
}
