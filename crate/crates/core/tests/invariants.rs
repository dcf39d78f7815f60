use proptest::prelude::*;
use qbattery::ergotropy::{global_ergotropy, local_ergotropy, Extraction, WorkEvaluator};
use qbattery::model::battery_hamiltonian;
use qbattery::nonmarkov::orthogonal_pair;
use qbattery::numerics::{hermitian_eigenvalues, trace_distance};
use qbattery::sampling::random_density_matrix;
use qbattery::states::{fixed_entanglement_state, log_negativity};
use qbattery::{CollisionChannel, EntanglementValue, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..2.0f64, 0.05..2.0f64).prop_map(|(k, dt)| ModelParams::default().with_k(k).with_delta_t(dt))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_output_is_a_state(p in params(), seed in any::<u64>()) {
        let rho = random_density_matrix(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let out = CollisionChannel::new(&p).unwrap().collide_once(&rho).unwrap();
        prop_assert!(out.is_hermitian(1e-10));
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(hermitian_eigenvalues(&out).unwrap()[0] >= -1e-9);
    }

    #[test]
    fn channel_never_increases_distance(p in params(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_density_matrix(4, &mut rng), random_density_matrix(4, &mut rng));
        let ch = CollisionChannel::new(&p).unwrap();
        let after = trace_distance(&ch.collide_once(&a).unwrap(), &ch.collide_once(&b).unwrap()).unwrap();
        prop_assert!(after <= trace_distance(&a, &b).unwrap() + 1e-9);
    }

    #[test]
    fn local_work_bounded_by_global(seed in any::<u64>()) {
        let p = ModelParams::default();
        let rho = random_density_matrix(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let g = global_ergotropy(&rho, &battery_hamiltonian(&p)).unwrap();
        let l = local_ergotropy(&rho, &p).unwrap();
        prop_assert!(l >= -1e-12);
        prop_assert!(l <= g + 1e-9);
    }

    #[test]
    fn local_unitaries_keep_entanglement(e in 0.0..=1.0f64, angles in prop::array::uniform6(-3.2..3.2f64)) {
        let s = fixed_entanglement_state(EntanglementValue::new(e).unwrap(), &angles);
        prop_assert!((log_negativity(&s).value() - e).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_pairs_are_orthonormal(angles in prop::array::uniform10(-3.2..3.2f64)) {
        let (a, b) = orthogonal_pair(&angles);
        prop_assert!(a.inner(&b).norm() < 1e-10);
        prop_assert!((a.inner(&a).re - 1.0).abs() < 1e-10);
        prop_assert!((b.inner(&b).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn evaluator_matches_repeated_collisions(p in params(), n in 0usize..12, seed in any::<u64>()) {
        let rho = random_density_matrix(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let ch = CollisionChannel::new(&p).unwrap();
        let mut stepped = rho.clone();
        for _ in 0..n {
            stepped = ch.collide_once(&stepped).unwrap();
        }
        let direct = global_ergotropy(&stepped, &battery_hamiltonian(&p)).unwrap();
        let fast = WorkEvaluator::after_collisions(&p, n).unwrap().work(&rho, Extraction::Global);
        prop_assert!((direct - fast).abs() < 1e-9);
    }
}
