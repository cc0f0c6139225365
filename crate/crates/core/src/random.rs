//! Random small models for property tests and fuzzing.
//!
//! Variables are drawn in slot order latent `U`, covariate `C`, exposure `A`,
//! intermediate `L`, mediator `M`, outcome `Y`, so the result is always
//! acyclic and role-consistent.

use rand::Rng;

use crate::model::{validate, RawNoise, RawRow, RawScm, RawVariable, Role, Scm, Value};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScmConfig {
    /// Largest support of any non-exposure variable (at least 2).
    pub max_support: usize,
    /// Largest number of noise symbols per variable.
    pub max_noise: usize,
    pub allow_latent: bool,
    pub allow_intermediate: bool,
    pub allow_covariate: bool,
    /// Every observed value reachable from every parent configuration, so
    /// every observed cell has positive probability.
    pub positive: bool,
}

impl Default for RandomScmConfig {
    fn default() -> Self {
        Self {
            max_support: 4,
            max_noise: 4,
            allow_latent: true,
            allow_intermediate: true,
            allow_covariate: true,
            positive: false,
        }
    }
}

impl RandomScmConfig {
    /// No intermediate confounder and no latent variable at all.
    pub fn unconfounded() -> Self {
        Self {
            allow_latent: false,
            allow_intermediate: false,
            ..Self::default()
        }
    }

    pub fn positive(mut self) -> Self {
        self.positive = true;
        self
    }
}

struct Slot {
    name: &'static str,
    role: Role,
    support: Vec<Value>,
    parents: Vec<usize>,
}

fn support<R: Rng + ?Sized>(rng: &mut R, role: Role, max: usize) -> Vec<Value> {
    let k = rng.random_range(2..=max.max(2));
    match role {
        Role::Exposure => vec![Value::Int(0), Value::Int(1)],
        Role::Outcome => {
            // Distinct numeric values, sometimes fractional.
            let mut pool: Vec<i64> = (-4..=12).collect();
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k {
                let i = rng.random_range(0..pool.len());
                picked.push(pool.swap_remove(i));
            }
            picked.sort_unstable();
            let halves = rng.random_bool(0.3);
            picked
                .into_iter()
                .map(|v| if halves { Value::Real(v as f64 / 2.0) } else { Value::Int(v) })
                .collect()
        }
        Role::Mediator if rng.random_bool(0.4) => (0..k).map(|i| Value::Sym(format!("m{i}"))).collect(),
        _ => (0..k as i64).map(Value::Int).collect(),
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random_bool(p)
}

/// Draws a declarative model; always valid.
pub fn random_raw_scm<R: Rng + ?Sized>(rng: &mut R, config: &RandomScmConfig) -> RawScm {
    let mut slots: Vec<Slot> = Vec::new();
    let add = |slots: &mut Vec<Slot>, name, role, rng: &mut R| {
        slots.push(Slot {
            name,
            role,
            support: support(rng, role, config.max_support),
            parents: Vec::new(),
        });
        slots.len() - 1
    };
    let u = (config.allow_latent && pick(rng, 0.5)).then(|| add(&mut slots, "U", Role::Latent, rng));
    let c = (config.allow_covariate && pick(rng, 0.6)).then(|| add(&mut slots, "C", Role::Covariate, rng));
    let a = add(&mut slots, "A", Role::Exposure, rng);
    let l = (config.allow_intermediate && pick(rng, 0.5)).then(|| add(&mut slots, "L", Role::IntermediateConfounder, rng));
    let m = add(&mut slots, "M", Role::Mediator, rng);
    let y = add(&mut slots, "Y", Role::Outcome, rng);

    let edge = |slots: &mut Vec<Slot>, from: Option<usize>, to: usize, p: f64, rng: &mut R| {
        if let Some(f) = from {
            if pick(rng, p) {
                slots[to].parents.push(f);
            }
        }
    };
    if let Some(c) = c {
        edge(&mut slots, u, c, 0.5, rng);
    }
    edge(&mut slots, u, a, 0.5, rng);
    edge(&mut slots, c, a, 0.6, rng);
    if let Some(l) = l {
        slots[l].parents.push(a);
        edge(&mut slots, u, l, 0.5, rng);
        edge(&mut slots, c, l, 0.5, rng);
    }
    edge(&mut slots, u, m, 0.5, rng);
    edge(&mut slots, c, m, 0.5, rng);
    edge(&mut slots, Some(a), m, 0.85, rng);
    edge(&mut slots, l, m, 1.0, rng);
    edge(&mut slots, u, y, 0.5, rng);
    edge(&mut slots, c, y, 0.5, rng);
    edge(&mut slots, Some(a), y, 0.85, rng);
    edge(&mut slots, l, y, 0.7, rng);
    edge(&mut slots, Some(m), y, 0.9, rng);
    if let Some(u) = u {
        if !slots.iter().any(|s| s.parents.contains(&u)) {
            slots[y].parents.push(u);
        }
    }
    for s in &mut slots {
        s.parents.sort_unstable();
    }

    let variables = slots
        .iter()
        .map(|s| {
            let noise_len = if config.positive && s.role != Role::Latent {
                s.support.len()
            } else {
                rng.random_range(1..=config.max_noise.max(1))
            };
            let weights: Vec<f64> = (0..noise_len).map(|_| rng.random_range(1..=6) as f64).collect();
            let total: f64 = weights.iter().sum();
            let symbols: Vec<String> = (0..noise_len).map(|k| format!("e{k}")).collect();
            let mut table = Vec::new();
            let mut configs: Vec<Vec<Value>> = vec![Vec::new()];
            for &p in &s.parents {
                configs = configs
                    .into_iter()
                    .flat_map(|cfg| {
                        slots[p].support.iter().map(move |v| {
                            let mut c = cfg.clone();
                            c.push(v.clone());
                            c
                        })
                    })
                    .collect();
            }
            let k = s.support.len();
            for cfg in configs {
                let shift = rng.random_range(0..k);
                for (n, sym) in symbols.iter().enumerate() {
                    let idx = if config.positive && s.role != Role::Latent {
                        (shift + n) % k
                    } else {
                        rng.random_range(0..k)
                    };
                    table.push(RawRow {
                        parents: cfg.clone(),
                        noise: sym.clone(),
                        value: s.support[idx].clone(),
                    });
                }
            }
            RawVariable {
                name: s.name.into(),
                role: s.role,
                support: s.support.clone(),
                parents: s.parents.iter().map(|&p| slots[p].name.to_string()).collect(),
                noise: RawNoise {
                    symbols,
                    probs: weights.iter().map(|w| w / total).collect(),
                },
                table,
            }
        })
        .collect();
    RawScm {
        name: "random".into(),
        description: None,
        variables,
    }
}

pub fn random_scm<S: Scalar, R: Rng + ?Sized>(rng: &mut R, config: &RandomScmConfig) -> Scm<S> {
    let raw = random_raw_scm(rng, config);
    validate(&raw).unwrap_or_else(|e| panic!("generator produced an invalid model: {e}"))
}

/// A seeded corpus of `count` models.
pub fn corpus<S: Scalar>(seed: u64, count: usize, config: &RandomScmConfig) -> Vec<Scm<S>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_scm(&mut rng, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid_and_small() {
        for (i, scm) in corpus::<f64>(1, 300, &RandomScmConfig::default()).iter().enumerate() {
            assert!(scm.variables().len() <= 6, "model {i}");
            for v in scm.variables() {
                assert!(v.support.len() <= 4 && v.noise.len() <= 4, "model {i}");
            }
        }
    }

    #[test]
    fn unconfounded_has_no_latent_or_intermediate() {
        for scm in corpus::<f64>(2, 100, &RandomScmConfig::unconfounded()) {
            assert!(scm.intermediates().is_empty());
            assert_eq!(scm.latents().count(), 0);
        }
    }

    #[test]
    fn corpus_is_seeded() {
        let a = corpus::<f64>(3, 5, &RandomScmConfig::default());
        let b = corpus::<f64>(3, 5, &RandomScmConfig::default());
        assert_eq!(a, b);
    }
}
