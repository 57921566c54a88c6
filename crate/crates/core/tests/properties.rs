use gcstar_core::crossed::{crossed_product, InverseSemigroup};
use gcstar_core::fingroupoid::validate_haar;
use gcstar_core::intdis::{integrate_rep, roundtrip_conv, roundtrip_rep};
use gcstar_core::random::{mutate, random_etale, random_measured, random_representation, rng_from_seed};
use gcstar_core::reps::check_representation;
use proptest::prelude::*;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn random_groupoids_valid_and_mutants_caught(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mg = random_measured("G", &mut rng);
        prop_assert!(mg.g.validate().is_valid());
        let m = mutate(&mg, &mut rng);
        let caught = !m.groupoid.validate().is_valid() || !validate_haar(&m.groupoid, &m.weights).is_valid();
        prop_assert!(caught, "{:?} not detected", m.kind);
    }

    #[test]
    fn integration_round_trips(seed in any::<u64>(), n_coeff in 1usize..3) {
        let mut rng = rng_from_seed(seed);
        let mg = Arc::new(random_measured("G", &mut rng));
        let rep = random_representation(mg, n_coeff, &mut rng);
        prop_assert!(check_representation(&rep, 1e-9).passed());
        let r = roundtrip_rep(&rep, 1e-9);
        prop_assert!(r.passed(), "{:?}", r);
        let l = integrate_rep(&rep).unwrap();
        let r = roundtrip_conv(&l, 1e-9);
        prop_assert!(r.passed(), "{:?}", r);
    }

    #[test]
    fn crossed_product_dimension(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mg = random_etale("G", &mut rng);
        prop_assume!(mg.n_arrows() <= 10);
        let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
        prop_assert!(s.check().passed());
        let cp = crossed_product(&s).unwrap();
        prop_assert_eq!(cp.dim(), mg.n_arrows());
    }
}
