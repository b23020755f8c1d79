//! End-to-end protocol runs: determinism, honest completeness, the simple
//! cheats against their exact acceptance rates, and parameter validation.

mod common;

use qbc::cheat::cheating_probability;
use qbc::protocols::qbc0::qbc0_cheat_plan;
use qbc::protocols::qbc1::qbc1_midpoint_acceptance;
use qbc::protocols::qbc2::{babe_success, babe_success_dense, bloch_length, permutations, qbc2_conditional_state, set_kets};
use qbc::protocols::qbc3::qbc3_lie_acceptance;
use qbc::protocols::{run_protocol, AdamStrategy, BabeStrategy, ProtocolId, ProtocolParams, Verdict};
use qbc::qstate::DensityOperator;

/// Standard errors allowed between a Monte Carlo rate and its exact value.
const SIGMAS: f64 = 4.0;

fn acceptance_rate(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy, runs: usize) -> (f64, f64) {
    let passes = (0..runs as u64)
        .filter(|&s| run_protocol(&p.with_seed(s), adam, babe).unwrap().accepted())
        .count();
    common::rate(passes, runs)
}

fn assert_rate(label: &str, (p, se): (f64, f64), exact: f64) {
    let tol = SIGMAS * se.max(1e-3);
    assert!((p - exact).abs() <= tol, "{label}: observed {p} vs exact {exact} (tolerance {tol})");
}

fn all_protocols() -> Vec<ProtocolParams> {
    vec![
        ProtocolParams::qbc0(5, 0.7, 0),
        ProtocolParams::qbc01(3, 0.5, 1.0, 0),
        ProtocolParams::qbc1(4, 0.6, 0),
        ProtocolParams::qbc2(8, 3, 0),
        ProtocolParams::qbc3(10, 3, 0.5, 0),
    ]
}

#[test]
fn runs_are_pure_functions_of_the_seed() {
    for p in all_protocols() {
        let a = run_protocol(&p.with_seed(11), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap();
        let b = run_protocol(&p.with_seed(11), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap();
        assert_eq!(a, b, "{}", p.protocol);
        assert_eq!(a.to_json_lines().unwrap(), b.to_json_lines().unwrap());
        let differs = (12..20u64).any(|s| {
            let c = run_protocol(&p.with_seed(s), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap();
            c.to_json_lines().unwrap() != a.to_json_lines().unwrap()
        });
        assert!(differs, "{}: transcripts ignore the seed", p.protocol);
    }
}

#[test]
fn honest_parties_always_succeed() {
    for p in all_protocols() {
        for seed in 0..200 {
            let t = run_protocol(&p.with_seed(seed), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap();
            assert_eq!(t.verdict, Verdict::Accept, "{} seed {seed}: {}", p.protocol, t.verdict_line().unwrap());
            assert_eq!(t.opened_bit, Some(t.committed_bit));
        }
    }
}

#[test]
fn committed_bit_is_balanced() {
    let p = ProtocolParams::qbc0(3, 0.5, 0);
    let ones = (0..2000u64)
        .filter(|&s| run_protocol(&p.with_seed(s), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap().committed_bit == 1)
        .count();
    assert_rate("committed bit", common::rate(ones, 2000), 0.5);
}

#[test]
fn qubit_lie_passes_with_squared_overlap() {
    let o = 0.8;
    let p = ProtocolParams::qbc0(4, o, 0);
    let lie = AdamStrategy::QubitLie { position: Some(1) };
    let rate = acceptance_rate(&p, &lie, &BabeStrategy::Honest, 4000);
    assert_rate("qbc0 qubit lie", rate, o * o);
    let t = run_protocol(&p, &lie, &BabeStrategy::Honest).unwrap();
    assert_eq!(t.opened_bit, Some(1 - t.committed_bit));
}

#[test]
fn qbc3_lie_matches_both_rules() {
    let (n, big_n, o) = (10, 3, 0.5);
    for literal in [false, true] {
        let mut p = ProtocolParams::qbc3(n, big_n, o, 0);
        p.literal_rule = Some(literal);
        let rate = acceptance_rate(&p, &AdamStrategy::QubitLie { position: None }, &BabeStrategy::Honest, 3000);
        assert_rate(&format!("qbc3 lie literal={literal}"), rate, qbc3_lie_acceptance(n, big_n, o, literal));
    }
}

#[test]
fn fixed_midpoint_opens_with_half_angle_rate() {
    let lambda = 0.6;
    let p = ProtocolParams::qbc1(3, lambda, 0);
    let rate = acceptance_rate(&p, &AdamStrategy::FixedMidpoint, &BabeStrategy::Honest, 4000);
    assert_rate("qbc1 fixed midpoint", rate, qbc1_midpoint_acceptance(lambda));
}

/// The committed bit is random, so the expected rate is the average of the
/// exact cheat success over both starting values.
#[test]
fn entangled_cheat_matches_its_exact_success() {
    let (n, o) = (3, 0.8);
    let exact: f64 = [0u8, 1]
        .iter()
        .map(|&b| {
            let (plan, target) = qbc0_cheat_plan(n, o, b).unwrap();
            let pac = cheating_probability(&plan, &target).unwrap();
            assert!(pac >= plan.predicted_pac - 1e-9);
            pac
        })
        .sum::<f64>()
        / 2.0;
    let rate = acceptance_rate(&ProtocolParams::qbc0(n, o, 0), &AdamStrategy::UhlmannMatched, &BabeStrategy::Honest, 3000);
    assert_rate("qbc0 entangled cheat", rate, exact);
}

#[test]
fn honest_sets_hide_the_bit() {
    let half = DensityOperator::maximally_mixed(2);
    for perm in permutations() {
        let set = set_kets(&perm);
        for bit in [0, 1] {
            let rho = qbc2_conditional_state(&set, bit).unwrap();
            let dev = (rho.matrix() - half.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-12, "perm {perm:?} bit {bit}: {dev}");
        }
    }
}

#[test]
fn receiver_success_closed_form_matches_dense_helstrom() {
    let mut rng = common::rng(5);
    for m in 1..=4 {
        for _ in 0..10 {
            let angles: [f64; 4] = std::array::from_fn(|_| rand::Rng::random::<f64>(&mut rng) * std::f64::consts::PI);
            let closed = babe_success(bloch_length(&angles), m);
            let dense = babe_success_dense(&angles, m).unwrap();
            assert!((closed - dense).abs() <= 1e-10, "m={m}: {closed} vs {dense}");
        }
    }
}

#[test]
fn params_json_is_strict() {
    let ok = r#"{"protocol":"qbc0","n":4,"overlap":0.5,"seed":7}"#;
    let p = ProtocolParams::from_json(ok).unwrap();
    assert_eq!(p, ProtocolParams::qbc0(4, 0.5, 7));
    assert_eq!(ProtocolParams::from_json(&serde_json::to_string(&p).unwrap()).unwrap(), p);
    let qbc2 = r#"{"protocol":"qbc2","n":6,"m":2,"N":1,"seed":0}"#;
    assert_eq!(ProtocolParams::from_json(qbc2).unwrap().big_n, Some(1));
    for bad in [
        r#"{"protocol":"qbc0","n":4,"overlap":0.5,"seed":7,"colour":1}"#,
        r#"{"protocol":"qbc0","n":4,"seed":7}"#,
        r#"{"protocol":"qbc0","n":4,"overlap":0.5}"#,
        r#"{"protocol":"qbc0","n":4,"overlap":0.5,"m":2,"seed":7}"#,
        r#"{"protocol":"qbc0","n":4,"overlap":1.5,"seed":7}"#,
        r#"{"protocol":"qbc0","n":0,"overlap":0.5,"seed":7}"#,
        r#"{"protocol":"qbc2","n":4,"m":5,"seed":7}"#,
        r#"{"protocol":"qbc3","n":4,"N":5,"overlap":0.5,"seed":7}"#,
        r#"{"protocol":"qbc01","n":4,"eta":0.0,"separation":1.0,"seed":7}"#,
        r#"{"protocol":"qbc9","n":4,"seed":7}"#,
    ] {
        assert!(ProtocolParams::from_json(bad).is_err(), "accepted {bad}");
    }
    assert!("QBC01".parse::<ProtocolId>().is_ok());
    assert!("qbc4".parse::<ProtocolId>().is_err());
}

#[test]
fn undefined_strategies_are_rejected() {
    let cases = [
        (ProtocolParams::qbc0(4, 0.5, 0), AdamStrategy::NameLie, BabeStrategy::Honest),
        (ProtocolParams::qbc2(4, 2, 0), AdamStrategy::QubitLie { position: None }, BabeStrategy::Honest),
        (ProtocolParams::qbc0(4, 0.5, 0), AdamStrategy::QubitLie { position: Some(4) }, BabeStrategy::Honest),
        (ProtocolParams::qbc0(4, 0.5, 0), AdamStrategy::Honest, BabeStrategy::UniformAngle { angle: 0.3, sets: None }),
        (ProtocolParams::qbc2(4, 2, 0), AdamStrategy::Honest, BabeStrategy::UniformAngle { angle: 0.3, sets: Some(5) }),
        (ProtocolParams::qbc2(4, 2, 0), AdamStrategy::Honest, BabeStrategy::UniformAngle { angle: f64::NAN, sets: None }),
        (ProtocolParams::qbc0(11, 0.5, 0), AdamStrategy::UhlmannMatched, BabeStrategy::Honest),
    ];
    for (p, adam, babe) in cases {
        assert!(run_protocol(&p, &adam, &babe).is_err(), "{} {:?} {:?}", p.protocol, adam, babe);
    }
}
