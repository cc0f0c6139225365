//! Estimators from observational data or from an exact observational law.
//!
//! All plug-in estimators are saturated: conditional means and frequencies
//! are cell averages of the (empirical) law. A dataset is estimated by
//! running the same formula on its empirical law; standard errors come from
//! a seeded multinomial bootstrap.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::data::BoundDataset;
use crate::effects::EffectQuery;
use crate::engine::{sample_unit, Conditioning, Engine, EngineError, MediatorDistributionSpec, SamplingResolver};
use crate::law::{ObservedLaw, Schema};
use crate::model::Value;
use crate::ols::weighted_ols;
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("EmptyCell: no data in cell ({0})")]
    EmptyCell(String),
    #[error("RefusedNotIdentified: {0}")]
    RefusedNotIdentified(String),
    #[error("SingularDesign: {0}")]
    SingularDesign(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult<S> {
    pub label: String,
    pub estimate: S,
    pub standard_error: Option<S>,
    /// Sample size; `None` for an exact law.
    pub n: Option<usize>,
    pub method: String,
    pub warnings: Vec<String>,
}

/// Default bootstrap resample count.
pub const BOOTSTRAP_RESAMPLES: usize = 500;

/// XORed into the user seed so bootstrap streams never coincide with the
/// per-row sampling streams keyed by the same seed.
const BOOTSTRAP_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Where plug-in estimators read their frequencies from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a, S> {
    Law(&'a ObservedLaw<S>),
    Data {
        data: &'a BoundDataset,
        seed: u64,
        resamples: usize,
    },
}

impl<'a, S: Scalar> Source<'a, S> {
    pub fn data(data: &'a BoundDataset, seed: u64) -> Self {
        Source::Data {
            data,
            seed,
            resamples: BOOTSTRAP_RESAMPLES,
        }
    }
}

// ---------------------------------------------------------------------------
// Saturated conditional tables
// ---------------------------------------------------------------------------

type Key = Vec<usize>;

fn accumulate<K: Ord, S: Scalar>(map: &mut BTreeMap<K, CompensatedSum<S>>, key: K, x: S) {
    map.entry(key).or_default().add(x);
}

fn finish<K: Ord, S: Scalar>(map: BTreeMap<K, CompensatedSum<S>>) -> BTreeMap<K, S> {
    map.into_iter().map(|(k, v)| (k, v.value())).collect()
}

fn pair<K: Ord, S: Scalar>(map: BTreeMap<K, (CompensatedSum<S>, CompensatedSum<S>)>) -> BTreeMap<K, (S, S)> {
    map.into_iter().map(|(k, (a, b))| (k, (a.value(), b.value()))).collect()
}

/// Cell masses and outcome sums keyed by (c, a, l, m) projections.
struct Tables<'l, S> {
    schema: &'l Schema,
    c: Vec<usize>,
    l: Vec<usize>,
    a: usize,
    m: usize,
    a_levels: [usize; 2],
    m_len: usize,
    p_c: BTreeMap<Key, S>,
    p_ca: BTreeMap<(Key, usize), S>,
    p_cal: BTreeMap<(Key, usize, Key), S>,
    p_cam: BTreeMap<(Key, usize, usize), S>,
    /// (mass, mass-weighted outcome sum)
    y_ca: BTreeMap<(Key, usize), (S, S)>,
    y_cam: BTreeMap<(Key, usize, usize), (S, S)>,
    y_calm: BTreeMap<(Key, usize, Key, usize), (S, S)>,
    y_a: BTreeMap<usize, (S, S)>,
}

impl<'l, S: Scalar> Tables<'l, S> {
    fn new(law: &'l ObservedLaw<S>) -> Self {
        let schema = &law.schema;
        let (c, l) = (schema.covariates(), schema.intermediates());
        let (a, m, y) = (schema.exposure(), schema.mediator(), schema.outcome());
        let mut p_c = BTreeMap::new();
        let mut p_ca = BTreeMap::new();
        let mut p_cal = BTreeMap::new();
        let mut p_cam = BTreeMap::new();
        let mut y_ca: BTreeMap<_, (CompensatedSum<S>, CompensatedSum<S>)> = BTreeMap::new();
        let mut y_cam: BTreeMap<_, (CompensatedSum<S>, CompensatedSum<S>)> = BTreeMap::new();
        let mut y_calm: BTreeMap<_, (CompensatedSum<S>, CompensatedSum<S>)> = BTreeMap::new();
        let mut y_a: BTreeMap<_, (CompensatedSum<S>, CompensatedSum<S>)> = BTreeMap::new();
        let add2 = |e: &mut (CompensatedSum<S>, CompensatedSum<S>), p: S, yv: S| {
            e.0.add(p);
            e.1.add(p * yv);
        };
        for (row, &p) in &law.cells {
            let ck: Key = c.iter().map(|&i| row[i]).collect();
            let lk: Key = l.iter().map(|&i| row[i]).collect();
            let (av, mv) = (row[a], row[m]);
            let yv: S = schema.outcome_value(row[y]);
            accumulate(&mut p_c, ck.clone(), p);
            accumulate(&mut p_ca, (ck.clone(), av), p);
            accumulate(&mut p_cal, (ck.clone(), av, lk.clone()), p);
            accumulate(&mut p_cam, (ck.clone(), av, mv), p);
            add2(y_ca.entry((ck.clone(), av)).or_default(), p, yv);
            add2(y_cam.entry((ck.clone(), av, mv)).or_default(), p, yv);
            add2(y_calm.entry((ck, av, lk, mv)).or_default(), p, yv);
            add2(y_a.entry(av).or_default(), p, yv);
        }
        Self {
            schema,
            a_levels: [schema.exposure_level(0), schema.exposure_level(1)],
            m_len: schema.columns[m].support.len(),
            c,
            l,
            a,
            m,
            p_c: finish(p_c),
            p_ca: finish(p_ca),
            p_cal: finish(p_cal),
            p_cam: finish(p_cam),
            y_ca: pair(y_ca),
            y_cam: pair(y_cam),
            y_calm: pair(y_calm),
            y_a: pair(y_a),
        }
    }

    fn label(&self, terms: &[(usize, &[usize])]) -> String {
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (col_group, values) in terms.iter().map(|(c, v)| (*c, *v)) {
            let group: Vec<usize> = match col_group {
                0 => vec![self.a],
                1 => self.l.clone(),
                2 => vec![self.m],
                _ => self.c.clone(),
            };
            cols.extend(group);
            vals.extend_from_slice(values);
        }
        self.schema.describe(&cols, &vals)
    }

    fn cell(&self, a: usize, l: Option<&Key>, m: Option<usize>, c: &Key) -> String {
        let mut terms: Vec<(usize, &[usize])> = Vec::new();
        let av = [a];
        terms.push((0, &av));
        if let Some(l) = l {
            terms.push((1, l));
        }
        let mv = m.map(|m| [m]);
        if let Some(mv) = &mv {
            terms.push((2, mv));
        }
        terms.push((3, c));
        self.label(&terms)
    }

    fn strata(&self) -> impl Iterator<Item = (&Key, S)> {
        self.p_c.iter().map(|(k, &p)| (k, p))
    }

    fn p_ca(&self, c: &Key, a: usize) -> Result<S, EstimationError> {
        match self.p_ca.get(&(c.clone(), a)) {
            Some(&p) if p > S::zero() => Ok(p),
            _ => Err(EstimationError::EmptyCell(self.cell(a, None, None, c))),
        }
    }

    fn mean_ca(&self, c: &Key, a: usize) -> Result<S, EstimationError> {
        match self.y_ca.get(&(c.clone(), a)) {
            Some(&(w, s)) if w > S::zero() => Ok(s / w),
            _ => Err(EstimationError::EmptyCell(self.cell(a, None, None, c))),
        }
    }

    /// `P(m | a, c)` over the mediator support.
    fn m_law(&self, a: usize, c: &Key) -> Result<Vec<S>, EstimationError> {
        let den = self.p_ca(c, a)?;
        Ok((0..self.m_len)
            .map(|m| self.p_cam.get(&(c.clone(), a, m)).copied().unwrap_or_else(S::zero) / den)
            .collect())
    }

    /// `E[Y | a, m, c]`, ignoring intermediates.
    fn mean_cam(&self, c: &Key, a: usize, m: usize) -> Result<S, EstimationError> {
        match self.y_cam.get(&(c.clone(), a, m)) {
            Some(&(w, s)) if w > S::zero() => Ok(s / w),
            _ => Err(EstimationError::EmptyCell(self.cell(a, None, Some(m), c))),
        }
    }

    /// `Σ_l P(l | a, c) E[Y | a, l, m, c]`.
    fn adjusted_mean(&self, c: &Key, a: usize, m: usize) -> Result<S, EstimationError> {
        if self.l.is_empty() {
            return self.mean_cam(c, a, m);
        }
        let den = self.p_ca(c, a)?;
        let mut acc = CompensatedSum::new();
        for ((ck, av, lk), &p) in self.p_cal.range((c.clone(), a, Vec::new())..) {
            if ck != c || *av != a {
                break;
            }
            let (w, s) = match self.y_calm.get(&(c.clone(), a, lk.clone(), m)) {
                Some(&(w, s)) if w > S::zero() => (w, s),
                _ => return Err(EstimationError::EmptyCell(self.cell(a, Some(lk), Some(m), c))),
            };
            acc.add(p / den * (s / w));
        }
        Ok(acc.value())
    }

    /// `Σ_c P(c) Σ_m D(m|c) f(c, m)` for a per-stratum mediator law.
    fn integrate(
        &self,
        law: &dyn Fn(&Key) -> Result<Vec<S>, EstimationError>,
        f: &dyn Fn(&Key, usize) -> Result<S, EstimationError>,
    ) -> Result<S, EstimationError> {
        let mut acc = CompensatedSum::new();
        for (c, pc) in self.strata() {
            let d = law(c)?;
            for (m, &pm) in d.iter().enumerate() {
                if pm > S::zero() {
                    acc.add(pc * pm * f(c, m)?);
                }
            }
        }
        Ok(acc.value())
    }

    /// `Ψ(a, a') = Σ_c P(c) Σ_m E[Y|a,m,c] P(m|a',c)`.
    fn natural_mean(&self, a: u8, a_prime: u8) -> Result<S, EstimationError> {
        let (la, lp) = (self.a_levels[a as usize], self.a_levels[a_prime as usize]);
        self.integrate(&|c| self.m_law(lp, c), &|c, m| self.mean_cam(c, la, m))
    }

    /// `Φ(a, a') = Σ_c P(c) Σ_l P(l|a,c) Σ_m P(m|a',c) E[Y|a,l,m,c]`.
    fn interventional_mean(&self, a: u8, a_prime: u8) -> Result<S, EstimationError> {
        let (la, lp) = (self.a_levels[a as usize], self.a_levels[a_prime as usize]);
        self.integrate(&|c| self.m_law(lp, c), &|c, m| self.adjusted_mean(c, la, m))
    }

    fn standardized_mean(&self, a: u8) -> Result<S, EstimationError> {
        let la = self.a_levels[a as usize];
        let mut acc = CompensatedSum::new();
        for (c, pc) in self.strata() {
            acc.add(pc * self.mean_ca(c, la)?);
        }
        Ok(acc.value())
    }

    /// Mediator law of a distribution spec in stratum `c`, from observables.
    fn spec_law(&self, spec: &MediatorDistributionSpec<S>, c: &Key) -> Result<Vec<S>, EstimationError> {
        match spec {
            MediatorDistributionSpec::PointMass(v) => {
                let k = self.schema.columns[self.m].support.iter().position(|x| x == v).ok_or_else(|| {
                    EstimationError::InvalidInput(format!("{v} is not in the mediator support"))
                })?;
                let mut law = vec![S::zero(); self.m_len];
                law[k] = S::one();
                Ok(law)
            }
            // Under no A-M confounding given C, P(M(a) = m | c) = P(m | a, c).
            MediatorDistributionSpec::PotentialConditional { exposure, conditioning }
            | MediatorDistributionSpec::ObservedConditional { exposure, conditioning } => {
                if *exposure > 1 {
                    return Err(EstimationError::InvalidInput(format!("exposure level {exposure} is not 0 or 1")));
                }
                let level = self.a_levels[*exposure as usize];
                match conditioning {
                    Conditioning::Covariates => self.m_law(level, c),
                    Conditioning::None => {
                        let potential = matches!(spec, MediatorDistributionSpec::PotentialConditional { .. });
                        let mut law = vec![CompensatedSum::new(); self.m_len];
                        let mut total = CompensatedSum::new();
                        for (ck, pc) in self.strata() {
                            // Potential: standardize over P(c). Observed: P(c | a).
                            let w = if potential {
                                pc
                            } else {
                                self.p_ca.get(&(ck.clone(), level)).copied().unwrap_or_else(S::zero)
                            };
                            if w <= S::zero() {
                                continue;
                            }
                            let d = self.m_law(level, ck)?;
                            total.add(w);
                            for (acc, p) in law.iter_mut().zip(d) {
                                acc.add(w * p);
                            }
                        }
                        let total = total.value();
                        if total <= S::zero() {
                            return Err(EstimationError::EmptyCell(self.label(&[(0, &[level])])));
                        }
                        Ok(law.iter().map(|x| x.value() / total).collect())
                    }
                }
            }
            MediatorDistributionSpec::Mixture(parts) => {
                let mut law = vec![S::zero(); self.m_len];
                for (w, part) in parts {
                    for (acc, p) in law.iter_mut().zip(self.spec_law(part, c)?) {
                        *acc = *acc + *w * p;
                    }
                }
                Ok(law)
            }
            MediatorDistributionSpec::Explicit(rows) => {
                let values: Vec<Value> = self
                    .c
                    .iter()
                    .zip(c)
                    .map(|(&col, &k)| self.schema.columns[col].support[k].clone())
                    .collect();
                rows.iter()
                    .find(|(v, _)| *v == values)
                    .map(|(_, law)| law.clone())
                    .ok_or_else(|| {
                        EstimationError::InvalidInput(format!(
                            "explicit law has no entry for stratum ({})",
                            self.schema.describe(&self.c, c)
                        ))
                    })
            }
        }
    }

    /// Generalized interventional direct effect with mediator law `spec`.
    fn gide(&self, spec: &MediatorDistributionSpec<S>) -> Result<S, EstimationError> {
        let (l0, l1) = (self.a_levels[0], self.a_levels[1]);
        self.integrate(&|c| self.spec_law(spec, c), &|c, m| {
            Ok(self.adjusted_mean(c, l1, m)? - self.adjusted_mean(c, l0, m)?)
        })
    }

    fn naive_difference(&self) -> Result<S, EstimationError> {
        let mean = |a: u8| {
            let level = self.a_levels[a as usize];
            match self.y_a.get(&level) {
                Some(&(w, s)) if w > S::zero() => Ok(s / w),
                _ => Err(EstimationError::EmptyCell(self.label(&[(0, &[level])]))),
            }
        };
        Ok(mean(1)? - mean(0)?)
    }
}

// ---------------------------------------------------------------------------
// Bootstrap plumbing
// ---------------------------------------------------------------------------

/// Multinomial resample of a table of pattern counts via sequential
/// binomials. Resample `b` uses ChaCha8 keyed by `seed ^ BOOTSTRAP_SALT`,
/// stream `b`, so each resample is independent of evaluation order.
pub fn bootstrap_counts(counts: &BTreeMap<Key, u64>, n: u64, seed: u64, b: u64) -> BTreeMap<Key, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ BOOTSTRAP_SALT);
    rng.set_stream(b);
    let mut remaining_n = n;
    let mut remaining_mass = n;
    let mut out = BTreeMap::new();
    for (k, &c) in counts {
        if remaining_n == 0 {
            break;
        }
        let x = if c >= remaining_mass {
            remaining_n
        } else {
            let p = c as f64 / remaining_mass as f64;
            Binomial::new(remaining_n, p).expect("valid binomial").sample(&mut rng)
        };
        if x > 0 {
            out.insert(k.clone(), x);
        }
        remaining_n -= x;
        remaining_mass -= c;
    }
    out
}

fn row_counts(data: &BoundDataset) -> BTreeMap<Key, u64> {
    let mut counts = BTreeMap::new();
    for r in &data.rows {
        *counts.entry(r.clone()).or_default() += 1;
    }
    counts
}

/// Runs `f` on the source's law; for data, adds bootstrap standard errors.
fn run<S: Scalar>(
    source: Source<'_, S>,
    method: &str,
    labels: &[String],
    f: impl Fn(&Tables<'_, S>) -> Result<Vec<S>, EstimationError>,
) -> Result<Vec<EstimatorResult<S>>, EstimationError> {
    let (law, data) = match source {
        Source::Law(law) => (law.clone(), None),
        Source::Data { data, seed, resamples } => (data.empirical_law(), Some((data, seed, resamples))),
    };
    if law.cells.is_empty() {
        return Err(EstimationError::InvalidInput("no observations".into()));
    }
    let point = f(&Tables::new(&law))?;
    let mut warnings = Vec::new();
    let (ses, n, method) = match data {
        None => (vec![None; point.len()], None, format!("{method} (exact law)")),
        Some((data, seed, resamples)) => {
            let counts = row_counts(data);
            let n = data.rows.len() as u64;
            let mut draws: Vec<Vec<S>> = vec![Vec::with_capacity(resamples); point.len()];
            let mut failed = 0usize;
            for b in 0..resamples as u64 {
                let resampled = bootstrap_counts(&counts, n, seed, b);
                let law = ObservedLaw::from_counts(data.schema.clone(), &resampled, n);
                match f(&Tables::new(&law)) {
                    Ok(values) => {
                        for (d, v) in draws.iter_mut().zip(values) {
                            d.push(v);
                        }
                    }
                    Err(EstimationError::EmptyCell(_)) => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            if failed > 0 {
                warnings.push(format!("{failed} of {resamples} bootstrap resamples hit an empty cell and were dropped"));
            }
            let ses = draws.iter().map(|d| sample_sd(d)).collect();
            (
                ses,
                Some(data.rows.len()),
                format!("{method} (bootstrap SE, {resamples} resamples, seed {seed})"),
            )
        }
    };
    Ok(labels
        .iter()
        .zip(point)
        .zip(ses)
        .map(|((label, estimate), standard_error)| EstimatorResult {
            label: label.clone(),
            estimate,
            standard_error,
            n,
            method: method.clone(),
            warnings: warnings.clone(),
        })
        .collect())
}

fn sample_sd<S: Scalar>(xs: &[S]) -> Option<S> {
    if xs.len() < 2 {
        return None;
    }
    let n = S::from_usize(xs.len())?;
    let mean = xs.iter().copied().collect::<CompensatedSum<S>>().value() / n;
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).collect::<CompensatedSum<S>>().value();
    Some((ss / (n - S::one())).sqrt())
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn single<S>(mut v: Vec<EstimatorResult<S>>) -> EstimatorResult<S> {
    v.swap_remove(0)
}

// ---------------------------------------------------------------------------
// Plug-in estimators
// ---------------------------------------------------------------------------

/// Standardized total effect `Σ_c P(c) (E[Y|1,c] - E[Y|0,c])`.
pub fn plug_in_te<S: Scalar>(source: Source<'_, S>) -> Result<EstimatorResult<S>, EstimationError> {
    run(source, "g-formula", &labels(&["TE"]), |t| {
        Ok(vec![t.standardized_mean(1)? - t.standardized_mean(0)?])
    })
    .map(single)
}

/// Unadjusted `E[Y|A=1] - E[Y|A=0]`.
pub fn naive_difference<S: Scalar>(source: Source<'_, S>) -> Result<EstimatorResult<S>, EstimationError> {
    run(source, "naive mean difference", &labels(&["naive"]), |t| Ok(vec![t.naive_difference()?])).map(single)
}

/// NDE(.0), NIE(1.), NDE(.1), NIE(0.) by the mediation formula.
pub fn mediation_formula_natural<S: Scalar>(
    source: Source<'_, S>,
    force: bool,
) -> Result<Vec<EstimatorResult<S>>, EstimationError> {
    let schema = match source {
        Source::Law(l) => &l.schema,
        Source::Data { data, .. } => &data.schema,
    };
    let ls: Vec<&str> = schema.intermediates().iter().map(|&i| schema.columns[i].name.as_str()).collect();
    let mut warning = None;
    if !ls.is_empty() {
        let msg = format!(
            "intermediate confounder(s) {} present: natural effects are not identified",
            ls.join(", ")
        );
        if !force {
            return Err(EstimationError::RefusedNotIdentified(msg));
        }
        warning = Some(format!("{msg}; estimates forced"));
    }
    let mut out = run(source, "mediation formula", &labels(&["NDE(.0)", "NIE(1.)", "NDE(.1)", "NIE(0.)"]), |t| {
        let y11 = t.natural_mean(1, 1)?;
        let y10 = t.natural_mean(1, 0)?;
        let y00 = t.natural_mean(0, 0)?;
        let y01 = t.natural_mean(0, 1)?;
        Ok(vec![y10 - y00, y11 - y10, y11 - y01, y01 - y00])
    })?;
    if let Some(w) = warning {
        for r in &mut out {
            r.warnings.push(w.clone());
        }
    }
    Ok(out)
}

/// IDE(.0), IDE(.1), IIE(0.), IIE(1.), OE.
pub fn mediation_formula_interventional<S: Scalar>(
    source: Source<'_, S>,
) -> Result<Vec<EstimatorResult<S>>, EstimationError> {
    run(
        source,
        "interventional mediation formula",
        &labels(&["IDE(.0)", "IDE(.1)", "IIE(0.)", "IIE(1.)", "OE"]),
        |t| {
            let y11 = t.interventional_mean(1, 1)?;
            let y10 = t.interventional_mean(1, 0)?;
            let y00 = t.interventional_mean(0, 0)?;
            let y01 = t.interventional_mean(0, 1)?;
            Ok(vec![y10 - y00, y11 - y01, y01 - y00, y11 - y10, y11 - y00])
        },
    )
}

pub fn cde_estimator<S: Scalar>(source: Source<'_, S>, m: &Value) -> Result<EstimatorResult<S>, EstimationError> {
    let spec = MediatorDistributionSpec::PointMass(m.clone());
    run(source, "g-formula", &[format!("CDE({m})")], |t| Ok(vec![t.gide(&spec)?])).map(single)
}

/// GIDE for a mediator law expressible in observables. `pot(..)` laws are
/// read as the matching `obs(..|C)` laws, which is valid when A-M is
/// unconfounded given C.
pub fn gide_estimator<S: Scalar>(
    source: Source<'_, S>,
    spec: &MediatorDistributionSpec<S>,
) -> Result<EstimatorResult<S>, EstimationError> {
    run(source, "g-formula", &[format!("GIDE({spec})")], |t| Ok(vec![t.gide(spec)?])).map(single)
}

// ---------------------------------------------------------------------------
// Traditional product-of-coefficients method
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient<S> {
    pub estimate: S,
    pub standard_error: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraditionalResult<S> {
    /// Coefficient of A in `M ~ A + C`.
    pub a_coef: Coefficient<S>,
    /// Coefficient of M in `Y ~ A + M + C`.
    pub b_coef: Coefficient<S>,
    /// Coefficient of A in `Y ~ A + M + C`.
    pub c_prime: Coefficient<S>,
    /// Coefficient of A in `Y ~ A + C`.
    pub total: Coefficient<S>,
    /// `a * b` with its Sobel standard error.
    pub product: EstimatorResult<S>,
    /// `total - c'`.
    pub difference_method: EstimatorResult<S>,
    pub warnings: Vec<String>,
}

/// Linear-model mediation analysis (C entered linearly, by numeric value or
/// support index).
pub fn traditional_product_of_coefficients<S: Scalar>(
    data: &BoundDataset,
) -> Result<TraditionalResult<S>, EstimationError> {
    let schema = &data.schema;
    let mut warnings = Vec::new();
    let (a, m, y) = (schema.exposure(), schema.mediator(), schema.outcome());
    let covs = schema.covariates();
    let encode = |col: usize, k: usize| -> S {
        S::from_f64_lossy(schema.columns[col].support[k].as_f64().unwrap_or(k as f64))
    };
    for &col in covs.iter().chain([m].iter()) {
        if schema.columns[col].support.iter().any(|v| !v.is_numeric()) {
            warnings.push(format!(
                "`{}` is symbolic and was encoded by support position (0, 1, 2, ...); the linear model presumes this scale is meaningful",
                schema.columns[col].name
            ));
        }
    }
    if !schema.intermediates().is_empty() {
        warnings.push("intermediate confounders are ignored by the linear models".into());
    }
    let counts = row_counts(data);
    let weights: Vec<S> = counts.values().map(|&c| S::from_u64(c).expect("count")).collect();
    let design = |with_m: bool| -> Vec<Vec<S>> {
        counts
            .keys()
            .map(|r| {
                let mut x = vec![S::one(), encode(a, r[a])];
                if with_m {
                    x.push(encode(m, r[m]));
                }
                x.extend(covs.iter().map(|&c| encode(c, r[c])));
                x
            })
            .collect()
    };
    let target = |col: usize| -> Vec<S> { counts.keys().map(|r| encode(col, r[col])).collect() };
    let fit = |x: Vec<Vec<S>>, t: Vec<S>, what: &str| {
        weighted_ols(&x, &t, &weights).map_err(|e| EstimationError::SingularDesign(format!("{what}: {}", e.0)))
    };
    let coef = |f: &crate::ols::OlsFit<S>, i: usize| Coefficient {
        estimate: f.coefficients[i],
        standard_error: f.standard_errors[i],
    };
    let m_fit = fit(design(false), target(m), "M ~ A + C")?;
    let y_fit = fit(design(true), target(y), "Y ~ A + M + C")?;
    let t_fit = fit(design(false), target(y), "Y ~ A + C")?;
    let a_coef = coef(&m_fit, 1);
    let c_prime = coef(&y_fit, 1);
    let b_coef = coef(&y_fit, 2);
    let total = coef(&t_fit, 1);
    let product = a_coef.estimate * b_coef.estimate;
    let sobel = (b_coef.estimate * b_coef.estimate * a_coef.standard_error * a_coef.standard_error
        + a_coef.estimate * a_coef.estimate * b_coef.standard_error * b_coef.standard_error)
        .sqrt();
    let n = Some(data.rows.len());
    Ok(TraditionalResult {
        product: EstimatorResult {
            label: "indirect (a*b)".into(),
            estimate: product,
            standard_error: Some(sobel),
            n,
            method: "product of coefficients (Sobel SE)".into(),
            warnings: warnings.clone(),
        },
        difference_method: EstimatorResult {
            label: "indirect (total - c')".into(),
            estimate: total.estimate - c_prime.estimate,
            standard_error: None,
            n,
            method: "difference of coefficients".into(),
            warnings: warnings.clone(),
        },
        a_coef,
        b_coef,
        c_prime,
        total,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Sampling counterpart of an exact contrast. Draw `i` uses ChaCha8 keyed by
/// `seed`, stream `i`: one unit is sampled and both worlds are evaluated on
/// it (common random numbers), mediator draws sampled from their laws.
/// Draws outside the query's condition are rejected, so `n` counts accepted
/// draws only.
pub fn monte_carlo_estimate<S: Scalar>(
    engine: &Engine<'_, S>,
    query: &EffectQuery<S>,
    n: usize,
    seed: u64,
) -> Result<EstimatorResult<S>, EstimationError> {
    if n == 0 {
        return Err(EstimationError::InvalidInput("n must be at least 1".into()));
    }
    let scm = engine.scm();
    let left = engine.prepare(&query.left)?;
    let right = engine.prepare(&query.right)?;
    let cond = query.condition.as_ref();
    let y = scm.outcome();
    let mut contributions = Vec::with_capacity(n);
    let mut attempts = 0u64;
    let max_attempts = (n as u64).saturating_mul(1000).max(10_000);
    while contributions.len() < n {
        if attempts >= max_attempts {
            return Err(EstimationError::Engine(EngineError::PositivityViolation(format!(
                "condition {} accepted {} of {attempts} draws",
                cond.map(|c| c.to_string()).unwrap_or_default(),
                contributions.len()
            ))));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempts);
        attempts += 1;
        let unit = sample_unit(scm, &mut rng);
        if !engine.satisfies(&unit, cond)? {
            continue;
        }
        let mut resolver = SamplingResolver { rng: &mut rng };
        let l = engine.evaluate_prepared(&unit, &left, Some(&mut resolver))?;
        let r = engine.evaluate_prepared(&unit, &right, Some(&mut resolver))?;
        contributions.push(scm.outcome_value(l[y]) - scm.outcome_value(r[y]));
    }
    let count = S::from_usize(n).expect("count");
    let estimate = contributions.iter().copied().collect::<CompensatedSum<S>>().value() / count;
    let standard_error = sample_sd(&contributions).map(|sd| sd / count.sqrt());
    Ok(EstimatorResult {
        label: query.label.clone(),
        estimate,
        standard_error,
        n: Some(n),
        method: format!("Monte Carlo (seed {seed})"),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Column;
    use crate::model::Role;

    fn schema() -> Schema {
        let bin = vec![Value::Int(0), Value::Int(1)];
        let col = |name: &str, role| Column {
            name: name.into(),
            role,
            support: bin.clone(),
        };
        Schema {
            columns: vec![
                col("C", Role::Covariate),
                col("A", Role::Exposure),
                col("M", Role::Mediator),
                Column {
                    name: "Y".into(),
                    role: Role::Outcome,
                    support: vec![Value::Int(0), Value::Int(5)],
                },
            ],
        }
    }

    fn law(rows: &[([usize; 4], u64)]) -> ObservedLaw<f64> {
        let counts: BTreeMap<Key, u64> = rows.iter().map(|(r, c)| (r.to_vec(), *c)).collect();
        let n = counts.values().sum();
        ObservedLaw::from_counts(schema(), &counts, n)
    }

    #[test]
    fn te_standardizes_over_c() {
        // C=0: E[Y|1]=5, E[Y|0]=0; C=1: E[Y|1]=E[Y|0]=5. P(C=1) = 1/2.
        let l = law(&[
            ([0, 1, 0, 1], 1),
            ([0, 0, 0, 0], 3),
            ([1, 1, 1, 1], 3),
            ([1, 0, 1, 1], 1),
        ]);
        let te = plug_in_te(Source::Law(&l)).unwrap();
        assert!((te.estimate - 2.5).abs() < 1e-12);
        assert!(te.standard_error.is_none());
        // Unadjusted: (4*5/4) - (1*5/4)
        let naive = naive_difference(Source::Law(&l)).unwrap();
        assert!((naive.estimate - 3.75).abs() < 1e-12);
    }

    #[test]
    fn constant_exposure_is_empty_cell() {
        let l = law(&[([0, 1, 0, 1], 1), ([1, 1, 1, 0], 1)]);
        let err = plug_in_te(Source::Law(&l)).unwrap_err();
        assert_eq!(err, EstimationError::EmptyCell("A=0, C=0".into()));
    }

    #[test]
    fn natural_identity_in_sample() {
        let l = law(&[
            ([0, 1, 0, 1], 2),
            ([0, 1, 1, 1], 1),
            ([0, 0, 0, 0], 3),
            ([0, 0, 1, 1], 2),
            ([1, 1, 1, 1], 3),
            ([1, 1, 0, 0], 1),
            ([1, 0, 1, 1], 1),
            ([1, 0, 0, 0], 2),
        ]);
        let nat = mediation_formula_natural(Source::Law(&l), false).unwrap();
        let te = plug_in_te(Source::Law(&l)).unwrap().estimate;
        assert!((nat[0].estimate + nat[1].estimate - te).abs() < 1e-12);
        assert!((nat[2].estimate + nat[3].estimate - te).abs() < 1e-12);
        let int = mediation_formula_interventional(Source::Law(&l)).unwrap();
        for (n, i) in [(0, 0), (1, 3), (2, 1), (3, 2)] {
            assert!((nat[n].estimate - int[i].estimate).abs() < 1e-12);
        }
        assert!((int[4].estimate - te).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_counts_preserve_n_and_are_seeded() {
        let counts: BTreeMap<Key, u64> = [(vec![0], 10), (vec![1], 30), (vec![2], 60)].into_iter().collect();
        let a = bootstrap_counts(&counts, 100, 5, 3);
        assert_eq!(a.values().sum::<u64>(), 100);
        assert_eq!(a, bootstrap_counts(&counts, 100, 5, 3));
        assert_ne!(a, bootstrap_counts(&counts, 100, 5, 4));
    }

    #[test]
    fn sd_of_constant_is_zero() {
        assert_eq!(sample_sd(&[2.0, 2.0, 2.0]), Some(0.0));
        assert_eq!(sample_sd::<f64>(&[1.0]), None);
    }
}
