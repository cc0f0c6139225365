//! Finite discrete structural causal models.
//!
//! A model is declared as a [`RawScm`] (the JSON document shape) and turned
//! into a validated [`Scm`] by [`validate`]. Validated models keep their
//! variables in topological order and address values by support index.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::{compensated_sum, Scalar};

/// A support value: integer, real, or symbol.
///
/// Integer and real values compare numerically, so `9` and `9.0` denote the
/// same value.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Sym(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Sym(_) => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        !matches!(self, Value::Sym(_))
    }

    /// Parses a CSV/CLI token: integers first, then reals, otherwise a symbol.
    pub fn parse_token(token: &str) -> Value {
        let t = token.trim();
        if let Ok(i) = t.parse::<i64>() {
            return Value::Int(i);
        }
        if let Ok(x) = t.parse::<f64>() {
            if x.is_finite() {
                return Value::Real(x);
            }
        }
        Value::Sym(t.to_string())
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Sym(a), Value::Sym(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

impl Serialize for Value {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        match self {
            Value::Int(i) => serializer.serialize_i64(*i),
            Value::Real(x) => serializer.serialize_f64(*x),
            Value::Sym(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::String(s) => Ok(Value::Sym(s)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::Int(i))
                } else {
                    n.as_f64()
                        .map(Value::Real)
                        .ok_or_else(|| D::Error::custom("number out of range"))
                }
            }
            other => Err(D::Error::custom(format!(
                "expected a number or string value, found {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Covariate,
    Exposure,
    IntermediateConfounder,
    Mediator,
    Outcome,
    Latent,
}

impl Role {
    pub fn is_observed(self) -> bool {
        self != Role::Latent
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Covariate => "covariate",
            Role::Exposure => "exposure",
            Role::IntermediateConfounder => "intermediate_confounder",
            Role::Mediator => "mediator",
            Role::Outcome => "outcome",
            Role::Latent => "latent",
        };
        f.write_str(s)
    }
}

// ---------------------------------------------------------------------------
// Declarative (file) form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScm {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub variables: Vec<RawVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVariable {
    pub name: String,
    pub role: Role,
    pub support: Vec<Value>,
    pub parents: Vec<String>,
    pub noise: RawNoise,
    pub table: Vec<RawRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub symbols: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRow {
    pub parents: Vec<Value>,
    pub noise: String,
    pub value: Value,
}

// ---------------------------------------------------------------------------
// Validated form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<S> {
    pub symbols: Vec<String>,
    pub probabilities: Vec<S>,
}

impl<S: Scalar> NoiseSpec<S> {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Dense structural function: `(parent configuration, noise symbol) -> support index`.
///
/// Parent configurations are mixed-radix numbers over the parents' supports,
/// first parent most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralTable {
    radices: Vec<usize>,
    noise_len: usize,
    entries: Vec<usize>,
}

impl StructuralTable {
    pub fn new(radices: Vec<usize>, noise_len: usize, entries: Vec<usize>) -> Self {
        debug_assert_eq!(
            entries.len(),
            radices.iter().product::<usize>() * noise_len
        );
        Self {
            radices,
            noise_len,
            entries,
        }
    }

    pub fn configurations(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn config_index(&self, parent_values: &[usize]) -> usize {
        parent_values
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (&v, &r)| acc * r + v)
    }

    /// Inverse of [`Self::config_index`].
    pub fn config_values(&self, mut config: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = config % r;
            config /= r;
        }
        out
    }

    pub fn lookup(&self, parent_values: &[usize], noise: usize) -> usize {
        self.entries[self.config_index(parent_values) * self.noise_len + noise]
    }

    pub fn entry(&self, config: usize, noise: usize) -> usize {
        self.entries[config * self.noise_len + noise]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec<S> {
    pub name: String,
    pub role: Role,
    pub support: Vec<Value>,
    /// Indices of the parents in the model's (topological) variable order.
    pub parents: Vec<usize>,
    pub noise: NoiseSpec<S>,
    pub table: StructuralTable,
}

impl<S> VariableSpec<S> {
    pub fn support_index(&self, value: &Value) -> Option<usize> {
        self.support.iter().position(|v| v == value)
    }
}

/// A validated model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm<S> {
    pub name: String,
    pub description: Option<String>,
    variables: Vec<VariableSpec<S>>,
    exposure: usize,
    mediator: usize,
    outcome: usize,
    covariates: Vec<usize>,
    intermediates: Vec<usize>,
    outcome_values: Vec<S>,
    exposure_levels: [usize; 2],
}

impl<S: Scalar> Scm<S> {
    pub fn variables(&self) -> &[VariableSpec<S>] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &VariableSpec<S> {
        &self.variables[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn exposure(&self) -> usize {
        self.exposure
    }

    pub fn mediator(&self) -> usize {
        self.mediator
    }

    pub fn outcome(&self) -> usize {
        self.outcome
    }

    /// Covariates in topological order.
    pub fn covariates(&self) -> &[usize] {
        &self.covariates
    }

    /// Intermediate confounders in topological order.
    pub fn intermediates(&self) -> &[usize] {
        &self.intermediates
    }

    pub fn latents(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == Role::Latent)
            .map(|(i, _)| i)
    }

    /// Observed columns in canonical order: C…, A, L…, M, Y.
    pub fn observed_columns(&self) -> Vec<usize> {
        let mut cols = self.covariates.clone();
        cols.push(self.exposure);
        cols.extend(&self.intermediates);
        cols.push(self.mediator);
        cols.push(self.outcome);
        cols
    }

    /// Support index of exposure level `a` (0 or 1).
    pub fn exposure_level(&self, a: u8) -> usize {
        self.exposure_levels[a as usize]
    }

    /// Exposure level (0 or 1) of an exposure support index.
    pub fn exposure_value(&self, support_index: usize) -> u8 {
        if self.exposure_levels[1] == support_index {
            1
        } else {
            0
        }
    }

    /// Numeric outcome value for an outcome support index.
    pub fn outcome_value(&self, support_index: usize) -> S {
        self.outcome_values[support_index]
    }

    pub fn outcome_values(&self) -> &[S] {
        &self.outcome_values
    }

    /// Variable names in topological order (stable by declaration order).
    pub fn topological_order(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn children(&self, index: usize) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.parents.contains(&index))
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of exogenous units (product of noise-space sizes), saturating.
    pub fn unit_count(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.noise.len() as u128))
    }

    /// Converts back to the declarative form, with table rows in canonical order.
    pub fn to_raw(&self) -> RawScm {
        let variables = self
            .variables
            .iter()
            .map(|v| {
                let mut table = Vec::with_capacity(v.table.entries.len());
                for config in 0..v.table.configurations() {
                    let pv = v.table.config_values(config);
                    let parents: Vec<Value> = pv
                        .iter()
                        .zip(&v.parents)
                        .map(|(&k, &p)| self.variables[p].support[k].clone())
                        .collect();
                    for (n, sym) in v.noise.symbols.iter().enumerate() {
                        table.push(RawRow {
                            parents: parents.clone(),
                            noise: sym.clone(),
                            value: v.support[v.table.entry(config, n)].clone(),
                        });
                    }
                }
                RawVariable {
                    name: v.name.clone(),
                    role: v.role,
                    support: v.support.clone(),
                    parents: v
                        .parents
                        .iter()
                        .map(|&p| self.variables[p].name.clone())
                        .collect(),
                    noise: RawNoise {
                        symbols: v.noise.symbols.clone(),
                        probs: v.noise.probabilities.iter().map(|p| p.to_f64_lossy()).collect(),
                    },
                    table,
                }
            })
            .collect();
        RawScm {
            name: self.name.clone(),
            description: self.description.clone(),
            variables,
        }
    }

    /// Ancestor closure (excluding the node itself) as a membership mask.
    pub fn ancestors(&self, index: usize) -> Vec<bool> {
        let mut mask = vec![false; self.variables.len()];
        let mut stack: Vec<usize> = self.variables[index].parents.clone();
        while let Some(p) = stack.pop() {
            if !mask[p] {
                mask[p] = true;
                stack.extend(&self.variables[p].parents);
            }
        }
        mask
    }

    /// Descendant closure (excluding the node itself) as a membership mask.
    pub fn descendants(&self, index: usize) -> Vec<bool> {
        let mut mask = vec![false; self.variables.len()];
        // Topological order: a single forward sweep suffices.
        for (i, v) in self.variables.iter().enumerate() {
            if v.parents.iter().any(|&p| p == index || mask[p]) {
                mask[i] = true;
            }
        }
        mask
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    CyclicGraph,
    RoleCountViolation,
    NonTotalTable,
    BadProbabilityMass,
    RoleTopologyViolation,
    UnknownVariable,
    BadSupport,
    ValueOutsideSupport,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    /// Short machine id refining the rule, e.g. `exposure-not-binary`.
    pub detail: &'static str,
    pub variable: Option<String>,
    /// JSON pointer into the declarative document.
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} at {}", self.rule, self.detail, self.pointer)?;
        if let Some(v) = &self.variable {
            write!(f, " (variable {v})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn has_rule(&self, rule: Rule) -> bool {
        self.0.iter().any(|v| v.rule == rule)
    }

    pub fn has_detail(&self, detail: &str) -> bool {
        self.0.iter().any(|v| v.detail == detail)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(
        &mut self,
        rule: Rule,
        detail: &'static str,
        variable: Option<&str>,
        pointer: String,
        message: impl Into<String>,
    ) {
        self.0.push(Violation {
            rule,
            detail,
            variable: variable.map(str::to_string),
            pointer,
            message: message.into(),
        });
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Kahn's algorithm, always releasing the lowest declaration index first.
/// Returns `Err(nodes on or behind a cycle)` when the graph is cyclic.
fn stable_topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// Topological order of a declarative model's variables as declaration indices.
pub fn declaration_topological_order(raw: &RawScm) -> Option<Vec<usize>> {
    let names: HashMap<&str, usize> = raw
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let parents: Vec<Vec<usize>> = raw
        .variables
        .iter()
        .map(|v| {
            v.parents
                .iter()
                .filter_map(|p| names.get(p.as_str()).copied())
                .collect()
        })
        .collect();
    stable_topological_order(&parents).ok()
}

/// Validates a declarative model, reporting every violation found.
pub fn validate<S: Scalar>(raw: &RawScm) -> Result<Scm<S>, ValidationErrors> {
    let mut errs = Collector(Vec::new());
    let vars = &raw.variables;

    // Names.
    let mut names: HashMap<&str, usize> = HashMap::new();
    for (k, v) in vars.iter().enumerate() {
        if !is_identifier(&v.name) {
            errs.push(
                Rule::UnknownVariable,
                "bad-identifier",
                Some(&v.name),
                format!("/variables/{k}/name"),
                format!("`{}` is not an identifier", v.name),
            );
        }
        if names.insert(v.name.as_str(), k).is_some() {
            errs.push(
                Rule::UnknownVariable,
                "duplicate-name",
                Some(&v.name),
                format!("/variables/{k}/name"),
                "variable declared twice",
            );
        }
    }

    // Supports.
    for (k, v) in vars.iter().enumerate() {
        let ptr = format!("/variables/{k}/support");
        if v.support.is_empty() {
            errs.push(Rule::BadSupport, "empty-support", Some(&v.name), ptr.clone(), "support is empty");
        }
        for (i, a) in v.support.iter().enumerate() {
            if let Value::Real(x) = a {
                if !x.is_finite() {
                    errs.push(Rule::BadSupport, "non-finite", Some(&v.name), format!("{ptr}/{i}"), "non-finite value");
                }
            }
            if v.support[..i].contains(a) {
                errs.push(
                    Rule::BadSupport,
                    "duplicate-support",
                    Some(&v.name),
                    format!("{ptr}/{i}"),
                    format!("value {a} appears twice"),
                );
            }
        }
        if v.role == Role::Outcome && v.support.iter().any(|x| !x.is_numeric()) {
            errs.push(
                Rule::BadSupport,
                "outcome-not-numeric",
                Some(&v.name),
                ptr.clone(),
                "outcome support must be numeric",
            );
        }
        if v.role == Role::Exposure {
            let binary = v.support.len() == 2
                && v.support.contains(&Value::Int(0))
                && v.support.contains(&Value::Int(1));
            if !binary {
                errs.push(
                    Rule::RoleCountViolation,
                    "exposure-not-binary",
                    Some(&v.name),
                    ptr,
                    "exposure support must be exactly {0, 1}",
                );
            }
        }
    }

    // Noise.
    for (k, v) in vars.iter().enumerate() {
        let ptr = format!("/variables/{k}/noise");
        let noise = &v.noise;
        if noise.symbols.is_empty() {
            errs.push(Rule::BadProbabilityMass, "empty-noise", Some(&v.name), format!("{ptr}/symbols"), "noise has no symbols");
        }
        for (i, s) in noise.symbols.iter().enumerate() {
            if noise.symbols[..i].contains(s) {
                errs.push(
                    Rule::BadProbabilityMass,
                    "duplicate-noise-symbol",
                    Some(&v.name),
                    format!("{ptr}/symbols/{i}"),
                    format!("noise symbol `{s}` appears twice"),
                );
            }
        }
        if noise.symbols.len() != noise.probs.len() {
            errs.push(
                Rule::BadProbabilityMass,
                "length-mismatch",
                Some(&v.name),
                format!("{ptr}/probs"),
                format!("{} symbols but {} probabilities", noise.symbols.len(), noise.probs.len()),
            );
        }
        if let Some(i) = noise.probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            errs.push(
                Rule::BadProbabilityMass,
                "negative-probability",
                Some(&v.name),
                format!("{ptr}/probs/{i}"),
                "probabilities must be finite and non-negative",
            );
        }
        let total: S = compensated_sum(noise.probs.iter().map(|&p| S::from_f64_lossy(p)));
        if (total - S::one()).abs() > S::mass_tolerance() {
            errs.push(
                Rule::BadProbabilityMass,
                "mass-not-one",
                Some(&v.name),
                format!("{ptr}/probs"),
                format!("probabilities sum to {total}, not 1"),
            );
        }
    }

    // Parents.
    let mut parent_idx: Vec<Vec<usize>> = Vec::with_capacity(vars.len());
    let mut parents_ok = true;
    for (k, v) in vars.iter().enumerate() {
        let mut ps = Vec::new();
        for (i, p) in v.parents.iter().enumerate() {
            let ptr = format!("/variables/{k}/parents/{i}");
            match names.get(p.as_str()) {
                None => {
                    parents_ok = false;
                    errs.push(Rule::UnknownVariable, "unknown-parent", Some(&v.name), ptr, format!("unknown parent `{p}`"));
                }
                Some(&j) if j == k => {
                    errs.push(Rule::CyclicGraph, "self-loop", Some(&v.name), ptr, "variable is its own parent");
                    parents_ok = false;
                }
                Some(&j) => {
                    if ps.contains(&j) {
                        parents_ok = false;
                        errs.push(Rule::UnknownVariable, "duplicate-parent", Some(&v.name), ptr, format!("parent `{p}` listed twice"));
                    } else {
                        ps.push(j);
                    }
                }
            }
        }
        parent_idx.push(ps);
    }

    let order = if parents_ok {
        match stable_topological_order(&parent_idx) {
            Ok(order) => Some(order),
            Err(stuck) => {
                let on_cycle: Vec<&str> = stuck.iter().map(|&i| vars[i].name.as_str()).collect();
                for &i in &stuck {
                    errs.push(
                        Rule::CyclicGraph,
                        "cycle",
                        Some(&vars[i].name),
                        format!("/variables/{i}/parents"),
                        format!("variable lies on or behind a directed cycle among {{{}}}", on_cycle.join(", ")),
                    );
                }
                None
            }
        }
    } else {
        None
    };

    // Role counts.
    for (role, label) in [
        (Role::Exposure, "exposure"),
        (Role::Mediator, "mediator"),
        (Role::Outcome, "outcome"),
    ] {
        let count = vars.iter().filter(|v| v.role == role).count();
        if count != 1 {
            errs.push(
                Rule::RoleCountViolation,
                match role {
                    Role::Exposure => "exposure-count",
                    Role::Mediator => "mediator-count",
                    _ => "outcome-count",
                },
                None,
                "/variables".to_string(),
                format!("expected exactly one {label}, found {count}"),
            );
        }
    }

    // Role topology.
    if let Some(_order) = &order {
        let n = vars.len();
        let closure = |start: usize, up: bool| -> Vec<bool> {
            let mut mask = vec![false; n];
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                let next: Vec<usize> = if up {
                    parent_idx[x].clone()
                } else {
                    (0..n).filter(|&c| parent_idx[c].contains(&x)).collect()
                };
                for y in next {
                    if !mask[y] {
                        mask[y] = true;
                        stack.push(y);
                    }
                }
            }
            mask
        };
        let exposure = vars.iter().position(|v| v.role == Role::Exposure);
        let mediator = vars.iter().position(|v| v.role == Role::Mediator);
        let outcome = vars.iter().position(|v| v.role == Role::Outcome);
        if let Some(a) = exposure {
            let desc_a = closure(a, false);
            for (k, v) in vars.iter().enumerate() {
                match v.role {
                    Role::Covariate | Role::Latent if desc_a[k] => errs.push(
                        Rule::RoleTopologyViolation,
                        if v.role == Role::Covariate { "covariate-descends-from-exposure" } else { "latent-descends-from-exposure" },
                        Some(&v.name),
                        format!("/variables/{k}/role"),
                        format!("{} `{}` is a descendant of the exposure", v.role, v.name),
                    ),
                    Role::IntermediateConfounder => {
                        if !desc_a[k] {
                            errs.push(
                                Rule::RoleTopologyViolation,
                                "intermediate-not-descendant",
                                Some(&v.name),
                                format!("/variables/{k}/role"),
                                "intermediate confounder must be a descendant of the exposure",
                            );
                        }
                        let desc_l = closure(k, false);
                        let reaches = mediator.is_some_and(|m| desc_l[m]) || outcome.is_some_and(|y| desc_l[y]);
                        if !reaches {
                            errs.push(
                                Rule::RoleTopologyViolation,
                                "intermediate-not-ancestor",
                                Some(&v.name),
                                format!("/variables/{k}/role"),
                                "intermediate confounder must be an ancestor of the mediator or outcome",
                            );
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    // Tables.
    let mut tables: Vec<Option<StructuralTable>> = vec![None; vars.len()];
    if parents_ok {
        for (k, v) in vars.iter().enumerate() {
            tables[k] = check_table(k, v, &parent_idx[k], vars, &mut errs);
        }
    }

    if !errs.0.is_empty() {
        return Err(ValidationErrors(errs.0));
    }

    let order = order.expect("acyclic when no violations");
    let mut position = vec![0; vars.len()];
    for (pos, &k) in order.iter().enumerate() {
        position[k] = pos;
    }
    let variables: Vec<VariableSpec<S>> = order
        .iter()
        .map(|&k| {
            let v = &vars[k];
            VariableSpec {
                name: v.name.clone(),
                role: v.role,
                support: v.support.clone(),
                parents: parent_idx[k].iter().map(|&p| position[p]).collect(),
                noise: NoiseSpec {
                    symbols: v.noise.symbols.clone(),
                    probabilities: v.noise.probs.iter().map(|&p| S::from_f64_lossy(p)).collect(),
                },
                table: tables[k].take().expect("table checked"),
            }
        })
        .collect();

    let find = |role: Role| variables.iter().position(|v| v.role == role).expect("role count checked");
    let exposure = find(Role::Exposure);
    let mediator = find(Role::Mediator);
    let outcome = find(Role::Outcome);
    let with_role = |role: Role| -> Vec<usize> {
        variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == role)
            .map(|(i, _)| i)
            .collect()
    };
    let covariates = with_role(Role::Covariate);
    let intermediates = with_role(Role::IntermediateConfounder);
    let outcome_values = variables[outcome]
        .support
        .iter()
        .map(|v| S::from_f64_lossy(v.as_f64().expect("numeric outcome checked")))
        .collect();
    let a_support = &variables[exposure].support;
    let exposure_levels = [
        a_support.iter().position(|v| *v == Value::Int(0)).expect("binary exposure"),
        a_support.iter().position(|v| *v == Value::Int(1)).expect("binary exposure"),
    ];

    Ok(Scm {
        name: raw.name.clone(),
        description: raw.description.clone(),
        variables,
        exposure,
        mediator,
        outcome,
        covariates,
        intermediates,
        outcome_values,
        exposure_levels,
    })
}

fn check_table(
    k: usize,
    v: &RawVariable,
    parents: &[usize],
    vars: &[RawVariable],
    errs: &mut Collector,
) -> Option<StructuralTable> {
    let radices: Vec<usize> = parents.iter().map(|&p| vars[p].support.len()).collect();
    let noise_len = v.noise.symbols.len();
    let configs: usize = radices.iter().product();
    let cells = configs.checked_mul(noise_len)?;
    let mut entries: Vec<Option<usize>> = vec![None; cells];
    let before = errs.0.len();
    let probe = StructuralTable::new(radices.clone(), noise_len, vec![0; cells]);

    for (r, row) in v.table.iter().enumerate() {
        let ptr = format!("/variables/{k}/table/{r}");
        if row.parents.len() != parents.len() {
            errs.push(
                Rule::NonTotalTable,
                "row-arity",
                Some(&v.name),
                format!("{ptr}/parents"),
                format!("row has {} parent values, variable has {} parents", row.parents.len(), parents.len()),
            );
            continue;
        }
        let mut pv = Vec::with_capacity(parents.len());
        let mut ok = true;
        for (i, (val, &p)) in row.parents.iter().zip(parents).enumerate() {
            match vars[p].support.iter().position(|s| s == val) {
                Some(ix) => pv.push(ix),
                None => {
                    ok = false;
                    errs.push(
                        Rule::ValueOutsideSupport,
                        "parent-value-outside-support",
                        Some(&v.name),
                        format!("{ptr}/parents/{i}"),
                        format!("value {val} is not in the support of parent `{}`", vars[p].name),
                    );
                }
            }
        }
        let noise = v.noise.symbols.iter().position(|s| *s == row.noise);
        if noise.is_none() {
            ok = false;
            errs.push(
                Rule::NonTotalTable,
                "unknown-noise-symbol",
                Some(&v.name),
                format!("{ptr}/noise"),
                format!("unknown noise symbol `{}`", row.noise),
            );
        }
        let value = v.support.iter().position(|s| *s == row.value);
        if value.is_none() {
            ok = false;
            errs.push(
                Rule::ValueOutsideSupport,
                "value-outside-support",
                Some(&v.name),
                format!("{ptr}/value"),
                format!("value {} is not in the support", row.value),
            );
        }
        if !ok {
            continue;
        }
        let slot = probe.config_index(&pv) * noise_len + noise.unwrap();
        if entries[slot].is_some() {
            errs.push(
                Rule::NonTotalTable,
                "duplicate-row",
                Some(&v.name),
                ptr,
                "more than one row for this parent/noise combination",
            );
        } else {
            entries[slot] = value;
        }
    }

    let missing: Vec<usize> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_none())
        .map(|(i, _)| i)
        .collect();
    if errs.0.len() == before && !missing.is_empty() {
        let first = missing[0];
        let pv = probe.config_values(first / noise_len.max(1));
        let shown: Vec<String> = pv
            .iter()
            .zip(parents)
            .map(|(&ix, &p)| format!("{}={}", vars[p].name, vars[p].support[ix]))
            .collect();
        let noise = v.noise.symbols.get(first % noise_len.max(1)).cloned().unwrap_or_default();
        errs.push(
            Rule::NonTotalTable,
            "missing-rows",
            Some(&v.name),
            format!("/variables/{k}/table"),
            format!(
                "{} parent/noise combination(s) have no row, first: ({}; noise={noise})",
                missing.len(),
                shown.join(", ")
            ),
        );
    }
    if errs.0.len() != before {
        return None;
    }
    Some(StructuralTable::new(
        radices,
        noise_len,
        entries.into_iter().map(|e| e.expect("total")).collect(),
    ))
}
