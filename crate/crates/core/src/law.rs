//! Joint laws over the observed columns (C…, A, L…, M, Y).

use std::collections::BTreeMap;

use crate::engine::{enumerate_units, evaluate_natural, EngineError, Limits};
use crate::model::{Role, Scm, Value};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub support: Vec<Value>,
}

/// Observed column layout, in canonical role order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    /// Observed columns of a model; latents are included only when asked.
    pub fn of<S: Scalar>(scm: &Scm<S>, include_latents: bool) -> Self {
        let mut idx = scm.observed_columns();
        if include_latents {
            idx.extend(scm.latents());
        }
        Self {
            columns: idx
                .into_iter()
                .map(|i| {
                    let v = scm.variable(i);
                    Column {
                        name: v.name.clone(),
                        role: v.role,
                        support: v.support.clone(),
                    }
                })
                .collect(),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    fn with_role(&self, role: Role) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn covariates(&self) -> Vec<usize> {
        self.with_role(Role::Covariate)
    }

    pub fn intermediates(&self) -> Vec<usize> {
        self.with_role(Role::IntermediateConfounder)
    }

    fn single(&self, role: Role) -> usize {
        self.with_role(role)[0]
    }

    pub fn exposure(&self) -> usize {
        self.single(Role::Exposure)
    }

    pub fn mediator(&self) -> usize {
        self.single(Role::Mediator)
    }

    pub fn outcome(&self) -> usize {
        self.single(Role::Outcome)
    }

    /// Support index of exposure level `a` in the exposure column.
    pub fn exposure_level(&self, a: u8) -> usize {
        let col = &self.columns[self.exposure()];
        col.support
            .iter()
            .position(|v| *v == Value::Int(a as i64))
            .expect("binary exposure")
    }

    pub fn outcome_value<S: Scalar>(&self, support_index: usize) -> S {
        let col = &self.columns[self.outcome()];
        S::from_f64_lossy(col.support[support_index].as_f64().expect("numeric outcome"))
    }

    /// Number of cells in the joint support, saturating.
    pub fn cell_count(&self) -> u128 {
        self.columns
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.support.len() as u128))
    }

    /// `name=value` rendering of selected columns of a row.
    pub fn describe(&self, cols: &[usize], row: &[usize]) -> String {
        cols.iter()
            .zip(row)
            .map(|(&c, &k)| format!("{}={}", self.columns[c].name, self.columns[c].support[k]))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Sparse joint probability table; absent rows have probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedLaw<S> {
    pub schema: Schema,
    pub cells: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> ObservedLaw<S> {
    /// Empirical law of rows of support indices.
    pub fn empirical<'r>(schema: Schema, rows: impl IntoIterator<Item = &'r Vec<usize>>) -> Self {
        let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut n = 0u64;
        for r in rows {
            *counts.entry(r.clone()).or_default() += 1;
            n += 1;
        }
        Self::from_counts(schema, &counts, n)
    }

    pub fn from_counts(schema: Schema, counts: &BTreeMap<Vec<usize>, u64>, n: u64) -> Self {
        let total = S::from_u64(n).unwrap_or_else(S::one);
        let cells = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k.clone(), S::from_u64(c).unwrap_or_else(S::zero) / total))
            .collect();
        Self { schema, cells }
    }

    pub fn total_mass(&self) -> S {
        self.cells.values().copied().collect::<CompensatedSum<S>>().value()
    }

    pub fn probability(&self, row: &[usize]) -> S {
        self.cells.get(row).copied().unwrap_or_else(S::zero)
    }

    /// Marginal law over a subset of columns (keys in the given column order).
    pub fn marginal(&self, cols: &[usize]) -> BTreeMap<Vec<usize>, S> {
        let mut acc: BTreeMap<Vec<usize>, CompensatedSum<S>> = BTreeMap::new();
        for (row, &p) in &self.cells {
            let key: Vec<usize> = cols.iter().map(|&c| row[c]).collect();
            acc.entry(key).or_default().add(p);
        }
        acc.into_iter().map(|(k, v)| (k, v.value())).collect()
    }
}

/// Exact observational law of a model under consistency; latents are
/// marginalized out.
pub fn observational_distribution<S: Scalar>(scm: &Scm<S>, limits: Limits) -> Result<ObservedLaw<S>, EngineError> {
    let schema = Schema::of(scm, false);
    let cells = schema.cell_count();
    if cells > limits.max_cells as u128 {
        return Err(EngineError::SupportTooLarge {
            what: "observed support",
            cells,
            cap: limits.max_cells,
        });
    }
    let cols = scm.observed_columns();
    let mut acc: BTreeMap<Vec<usize>, CompensatedSum<S>> = BTreeMap::new();
    for u in enumerate_units(scm, limits)? {
        if u.probability <= S::zero() {
            continue;
        }
        let values = evaluate_natural(scm, &u.noise);
        let row: Vec<usize> = cols.iter().map(|&c| values[c]).collect();
        acc.entry(row).or_default().add(u.probability);
    }
    Ok(ObservedLaw {
        schema,
        cells: acc.into_iter().map(|(k, v)| (k, v.value())).collect(),
    })
}
