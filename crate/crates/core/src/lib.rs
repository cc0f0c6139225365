//! Exact causal mediation effects over finite discrete structural causal
//! models.
//!
//! A model ([`model::Scm`]) lists every variable with its role, support,
//! parents, independent noise and a total structural table. The
//! [`engine::Engine`] enumerates all units (cells of the joint noise space),
//! so every counterfactual expectation, including cross-world ones such as
//! `E[Y(1, M(0))]`, is computed exactly. On top of that:
//!
//! - [`effects`]: TE, natural (NDE/NIE), interventional (IDE/IIE/OE), CDE,
//!   GIDE and arbitrary contrasts;
//! - [`identification`]: a four-rung ladder of graphical identification checks;
//! - [`estimation`]: plug-in, bootstrap, product-of-coefficients and Monte
//!   Carlo estimators;
//! - [`data`] / [`io`]: seeded sampling and JSON/CSV files.
//!
//! Numerics are generic over [`scalar::Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod data;
pub mod effects;
pub mod engine;
pub mod estimation;
pub mod identification;
pub mod io;
pub mod law;
pub mod model;
pub mod ols;
pub mod random;
pub mod report;
pub mod scalar;
pub mod syntax;

pub use model::{Role, Value};
pub use scalar::Scalar;

pub type Scm = model::Scm<f64>;
pub type Engine<'m> = engine::Engine<'m, f64>;
pub type WorldSpec = engine::WorldSpec<f64>;
pub type MediatorDistributionSpec = engine::MediatorDistributionSpec<f64>;
pub type ObservedLaw = law::ObservedLaw<f64>;
pub type EffectQuery = effects::EffectQuery<f64>;
pub type EffectReport = effects::EffectReport<f64>;
pub type EstimatorResult = estimation::EstimatorResult<f64>;
