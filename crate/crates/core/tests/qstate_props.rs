//! Linear-algebra invariants on random states, checked against the
//! reference computations in `common`.

mod common;

use common::{c, M};
use proptest::prelude::*;
use qbc::qstate::json::QStateJson;
use qbc::qstate::random::{random_channel, random_ket, random_mixed};
use qbc::qstate::{
    fidelity, partial_trace_joint, purify, schmidt_decompose, trace_norm, BipartiteState, DensityOperator, Keep, Ket,
};

fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_norm_matches_reference(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = common::rng(seed);
        let (a, b) = (random_mixed(d, &mut rng), random_mixed(d, &mut rng));
        let diff = a.matrix() - b.matrix();
        let tn = trace_norm(&diff);
        prop_assert!((tn - common::trace_norm(&diff)).abs() <= 1e-10);
        prop_assert!(tn <= 2.0 + 1e-12);
    }

    #[test]
    fn fidelity_matches_reference_and_brackets_trace_distance(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = common::rng(seed);
        let (a, b) = (common::random_density(d, &mut rng), common::random_density(d, &mut rng));
        let (ra, rb) = (DensityOperator::new(a.clone()).unwrap(), DensityOperator::new(b.clone()).unwrap());
        let f = fidelity(&ra, &rb).unwrap();
        prop_assert!((f - common::fidelity(&a, &b)).abs() <= 1e-9);
        prop_assert!((f - fidelity(&rb, &ra).unwrap()).abs() <= 1e-9);
        let tn = common::trace_norm(&(&a - &b));
        prop_assert!(2.0 * (1.0 - f.sqrt()) <= tn + 1e-10);
        prop_assert!(tn <= 2.0 * (1.0 - f).sqrt() + 1e-10);
    }

    #[test]
    fn pure_fidelity_is_squared_overlap(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = common::rng(seed);
        let (x, y) = (random_ket(d, &mut rng), random_ket(d, &mut rng));
        let f = fidelity(&x.projector(), &y.projector()).unwrap();
        prop_assert!((f - x.overlap_sq(&y)).abs() <= 1e-9);
    }

    #[test]
    fn schmidt_coefficients_are_marginal_spectrum(seed in any::<u64>(), da in 1usize..=5, db in 1usize..=5) {
        let mut rng = common::rng(seed);
        let s = BipartiteState::new(random_ket(da * db, &mut rng), da, db).unwrap();
        let sch = schmidt_decompose(&s);
        let recon = sch.reconstruct() - s.joint().amplitudes();
        prop_assert!(recon.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-9);
        let joint = s.joint().amplitudes() * s.joint().amplitudes().adjoint();
        let mut spectrum = common::herm_eigenvalues(&common::trace_out_a(&joint, da, db));
        spectrum.sort_by(|a, b| b.total_cmp(a));
        for (k, e) in spectrum.iter().enumerate() {
            let c2 = sch.coefficients.get(k).map_or(0.0, |x| x * x);
            prop_assert!((c2 - e).abs() <= 1e-9);
        }
    }

    #[test]
    fn partial_trace_matches_index_sum(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = common::rng(seed);
        let rho = random_mixed(da * db, &mut rng);
        let keep_b = partial_trace_joint(&rho, da, db, Keep::B).unwrap();
        prop_assert!(max_abs(&(keep_b.matrix() - common::trace_out_a(rho.matrix(), da, db))) <= 1e-12);
        let keep_a = partial_trace_joint(&rho, da, db, Keep::A).unwrap();
        prop_assert!((keep_a.matrix().trace() - c(1.0)).norm() <= 1e-12);
    }

    #[test]
    fn purification_reduces_to_the_state(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = common::rng(seed);
        let rho = random_mixed(d, &mut rng);
        let phi = purify(&rho).unwrap();
        prop_assert!(max_abs(&(phi.reduced(Keep::A).matrix() - rho.matrix())) <= 1e-10);
    }

    #[test]
    fn channels_contract_trace_distance(seed in any::<u64>(), d in 2usize..=5, k in 1usize..=4) {
        let mut rng = common::rng(seed);
        let ch = random_channel(d, k, &mut rng);
        let diff = random_mixed(d, &mut rng).into_matrix() - random_mixed(d, &mut rng).into_matrix();
        let out = ch.apply(&diff).unwrap();
        prop_assert!(common::trace_norm(&out) <= common::trace_norm(&diff) + 1e-10);
        prop_assert!(out.trace().norm() <= 1e-10);
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = common::rng(seed);
        let ket = random_ket(d, &mut rng);
        let text = serde_json::to_string(&QStateJson::from(&ket)).unwrap();
        let back: QStateJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_ket().unwrap(), ket);
        let rho = random_mixed(d, &mut rng);
        let text = serde_json::to_string(&QStateJson::from(&rho)).unwrap();
        let back: QStateJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_density().unwrap(), rho);
    }
}

#[test]
fn invalid_states_are_rejected() {
    assert!(Ket::from_real(&[1.0, 1.0]).is_err());
    assert!(DensityOperator::new(M::from_diagonal_element(2, 2, c(0.7))).is_err());
    assert!(DensityOperator::diagonal(&[1.2, -0.2]).is_err());
    assert!(BipartiteState::new(Ket::basis(6, 0), 4, 2).is_err());
}
