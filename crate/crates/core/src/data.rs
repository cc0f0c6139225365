//! Observational datasets: sampling under consistency and binding to a model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{evaluate_natural, sample_unit};
use crate::law::{ObservedLaw, Schema};
use crate::model::{Scm, Value};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("row {row}, column `{column}`: value `{value}` is outside the declared support")]
    ValueOutsideSupport { row: usize, column: String, value: String },
    #[error("dataset lacks column `{0}` required by the model")]
    MissingColumn(String),
    #[error("dataset column `{0}` is not a model variable")]
    UnknownColumn(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RowWidth { row: usize, found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub n: usize,
    pub seed: u64,
    pub include_latents: bool,
}

impl SamplerConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            include_latents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    /// Name of the generating model.
    pub source: Option<String>,
    /// Path of the generating model file, when known.
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub n: usize,
}

/// Rows of raw values with their column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub provenance: Provenance,
}

/// A dataset whose values are resolved to support indices of a model's
/// observed columns (latent columns, if any, are dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundDataset {
    pub schema: Schema,
    pub rows: Vec<Vec<usize>>,
    pub provenance: Provenance,
}

impl BoundDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn empirical_law<S: Scalar>(&self) -> ObservedLaw<S> {
        ObservedLaw::empirical(self.schema.clone(), &self.rows)
    }
}

impl Dataset {
    pub fn bind<S: Scalar>(&self, scm: &Scm<S>) -> Result<BoundDataset, DataError> {
        for c in &self.columns {
            if scm.index_of(c).is_none() {
                return Err(DataError::UnknownColumn(c.clone()));
            }
        }
        let schema = Schema::of(scm, false);
        let positions = schema
            .columns
            .iter()
            .map(|col| {
                self.columns
                    .iter()
                    .position(|c| *c == col.name)
                    .ok_or_else(|| DataError::MissingColumn(col.name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::with_capacity(self.rows.len());
        for (r, raw) in self.rows.iter().enumerate() {
            if raw.len() != self.columns.len() {
                return Err(DataError::RowWidth {
                    row: r + 1,
                    found: raw.len(),
                    expected: self.columns.len(),
                });
            }
            let row = schema
                .columns
                .iter()
                .zip(&positions)
                .map(|(col, &p)| {
                    col.support
                        .iter()
                        .position(|v| *v == raw[p])
                        .ok_or_else(|| DataError::ValueOutsideSupport {
                            row: r + 1,
                            column: col.name.clone(),
                            value: raw[p].to_string(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(BoundDataset {
            schema,
            rows,
            provenance: self.provenance.clone(),
        })
    }
}

/// Per-row generator: stream `i` of the ChaCha8 generator keyed by `seed`.
pub fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng
}

/// Draws `config.n` rows from the natural world. Row `i` depends only on
/// `(seed, i)`, so prefixes of larger samples agree with smaller ones.
pub fn sample_dataset<S: Scalar>(scm: &Scm<S>, name: &str, config: SamplerConfig) -> Dataset {
    let mut cols = scm.observed_columns();
    if config.include_latents {
        cols.extend(scm.latents());
    }
    let rows = (0..config.n)
        .map(|i| {
            let mut rng = row_rng(config.seed, i as u64);
            let unit = sample_unit(scm, &mut rng);
            let values = evaluate_natural(scm, &unit.noise);
            cols.iter()
                .map(|&c| scm.variable(c).support[values[c]].clone())
                .collect()
        })
        .collect();
    Dataset {
        columns: cols.iter().map(|&c| scm.variable(c).name.clone()).collect(),
        rows,
        provenance: Provenance {
            source: Some(name.to_string()),
            model: None,
            seed: Some(config.seed),
            n: config.n,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, RawNoise, RawRow, RawScm, RawVariable, Role};

    fn coin_model() -> Scm<f64> {
        let bin = vec![Value::Int(0), Value::Int(1)];
        let id = |name: &str, role, parents: Vec<String>, rows: Vec<RawRow>| RawVariable {
            name: name.into(),
            role,
            support: bin.clone(),
            parents,
            noise: RawNoise {
                symbols: vec!["0".into(), "1".into()],
                probs: vec![0.5, 0.5],
            },
            table: rows,
        };
        let own = |parents: &[i64]| -> Vec<RawRow> {
            let mut rows = Vec::new();
            let configs: Vec<Vec<Value>> = if parents.is_empty() {
                vec![vec![]]
            } else {
                (0..2).map(|p| vec![Value::Int(p)]).collect()
            };
            for c in configs {
                for n in 0..2 {
                    rows.push(RawRow {
                        parents: c.clone(),
                        noise: n.to_string(),
                        value: Value::Int(n),
                    });
                }
            }
            rows
        };
        let raw = RawScm {
            name: "coins".into(),
            description: None,
            variables: vec![
                id("A", Role::Exposure, vec![], own(&[])),
                id("M", Role::Mediator, vec!["A".into()], own(&[0])),
                id("Y", Role::Outcome, vec!["M".into()], own(&[0])),
            ],
        };
        validate(&raw).unwrap()
    }

    #[test]
    fn single_row_in_support() {
        let scm = coin_model();
        let d = sample_dataset(&scm, "coins", SamplerConfig::new(1, 3));
        assert_eq!(d.rows.len(), 1);
        assert_eq!(d.columns, ["A", "M", "Y"]);
        d.bind(&scm).unwrap();
    }

    #[test]
    fn same_seed_same_rows_and_prefix_stable() {
        let scm = coin_model();
        let a = sample_dataset(&scm, "coins", SamplerConfig::new(50, 9));
        let b = sample_dataset(&scm, "coins", SamplerConfig::new(80, 9));
        assert_eq!(a.rows[..], b.rows[..50]);
        let c = sample_dataset(&scm, "coins", SamplerConfig::new(50, 10));
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn bind_names_row_and_column() {
        let scm = coin_model();
        let mut d = sample_dataset(&scm, "coins", SamplerConfig::new(3, 1));
        d.rows[1][1] = Value::Sym("huge".into());
        let err = d.bind(&scm).unwrap_err();
        assert_eq!(
            err,
            DataError::ValueOutsideSupport {
                row: 2,
                column: "M".into(),
                value: "huge".into()
            }
        );
    }

    #[test]
    fn bind_reorders_columns() {
        let scm = coin_model();
        let d = Dataset {
            columns: vec!["Y".into(), "A".into(), "M".into()],
            rows: vec![vec![Value::Int(1), Value::Int(0), Value::Int(1)]],
            provenance: Provenance::default(),
        };
        let b = d.bind(&scm).unwrap();
        assert_eq!(b.rows, vec![vec![0, 1, 1]]);
    }
}
