//! Property tests over randomly generated models.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mediatrix::data::{sample_dataset, SamplerConfig};
use mediatrix::engine::{enumerate_units, Limits};
use mediatrix::identification::{d_separated, DagView};
use mediatrix::io::{dataset_to_string, parse_dataset, parse_scm, scm_to_string};
use mediatrix::model::Scm;
use mediatrix::random::{random_scm, RandomScmConfig};

fn model(seed: u64) -> Scm<f64> {
    random_scm(&mut ChaCha8Rng::seed_from_u64(seed), &RandomScmConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_text_round_trips(seed in any::<u64>()) {
        let scm = model(seed);
        let text = scm_to_string(&scm);
        let back: Scm<f64> = parse_scm(&text).unwrap();
        prop_assert_eq!(&back, &scm);
        prop_assert_eq!(scm_to_string(&back), text);
    }

    #[test]
    fn unit_masses_sum_to_one(seed in any::<u64>()) {
        let scm = model(seed);
        let units = enumerate_units(&scm, Limits::default()).unwrap();
        let total: f64 = units.iter().map(|u| u.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dataset_text_round_trips(seed in any::<u64>(), n in 1usize..40, sample_seed in any::<u64>()) {
        let scm = model(seed);
        let data = sample_dataset(&scm, &scm.name, SamplerConfig::new(n, sample_seed));
        let back = parse_dataset(&dataset_to_string(&data)).unwrap();
        prop_assert_eq!(&back, &data);
        prop_assert_eq!(back.bind(&scm).unwrap().len(), n);
    }

    #[test]
    fn d_separation_is_symmetric(seed in any::<u64>(), x in 0usize..6, y in 0usize..6, mask in 0u8..64) {
        let dag = DagView::of(&model(seed));
        let n = dag.len();
        let (x, y) = (x % n, y % n);
        prop_assume!(x != y);
        let z: Vec<usize> = (0..n).filter(|&i| i != x && i != y && mask & (1 << i) != 0).collect();
        prop_assert_eq!(d_separated(&dag, &[x], &[y], &z), d_separated(&dag, &[y], &[x], &z));
    }
}
