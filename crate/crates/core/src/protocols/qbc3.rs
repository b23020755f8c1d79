//! Parity encoding with hidden receiver measurements.
//!
//! As in QBC0, but before the opening the receiver measures `N` randomly
//! chosen qubits, each with a projector onto `|φ⟩` or `|φ'⟩` chosen at
//! random, and keeps the results to herself.
//!
//! How measured qubits enter the final verification is ambiguous; two rules
//! are available:
//!
//! * **strict** (default): every unmeasured qubit is checked projectively
//!   and any failure rejects; measured qubits never cause a rejection.
//! * **literal**: a measured qubit whose measured projector is the announced
//!   state must have given "yes"; if the projector differs from the
//!   announced state, the qubit is taken as correct.

use serde::Serialize;
use serde_json::json;

use crate::cheat::{align_purifications, build_purifications, CheatPlan};
use crate::error::{Error, Result};
use crate::protocols::qbc0::{check_entangled_n, measure_branch, qbc0_ensembles, sequence_kets, verify_product};
use crate::protocols::rng::ProtocolRng;
use crate::protocols::transcript::kets_payload;
use crate::protocols::{
    apply_qubit_op_b, overlap_pair, parity_sequences, sample_parity_sequence, verify_sequential_masked, AdamStrategy,
    BabeStrategy, Direction, ProtocolId, ProtocolParams, ProtocolTranscript,
};
use crate::qstate::linalg::{CMatrix, C64};
use crate::qstate::Ket;

/// Tolerance for comparing an entangled-overlap value with `2^{−N}`.
pub const OVERLAP_MATCH_TOL: f64 = 1e-9;

/// One hidden measurement by the receiver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenMeasurement {
    pub qubit: usize,
    /// 0: projector onto `|φ⟩`, 1: onto `|φ'⟩`.
    pub choice: u8,
    pub outcome: bool,
}

/// Acceptance of the single-qubit lie under either rule:
/// strict `(1 − N/n)o² + N/n`, literal `(1 − N/n)o² + (N/n)(1 + o²)/2`.
pub fn qbc3_lie_acceptance(n: usize, big_n: usize, overlap: f64, literal: bool) -> f64 {
    let f = big_n as f64 / n as f64;
    let o2 = overlap * overlap;
    if literal {
        (1.0 - f) * o2 + f * (1.0 + o2) / 2.0
    } else {
        (1.0 - f) * o2 + f
    }
}

/// The union bound `o² + N/n`.
pub fn qbc3_union_bound(n: usize, big_n: usize, overlap: f64) -> f64 {
    overlap * overlap + big_n as f64 / n as f64
}

fn projector(ket: &Ket) -> CMatrix {
    ket.projector().into_matrix()
}

pub fn qbc3_run(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    p.validate()?;
    if p.protocol != ProtocolId::Qbc3 {
        return Err(Error::InvalidParameter(format!("qbc3_run called with {}", p.protocol)));
    }
    adam.validate_for(p.protocol, p.n)?;
    babe.validate_for(p.protocol, p.n)?;
    let n = p.n;
    let big_n = p.big_n.expect("validated");
    let literal = p.literal_rule.unwrap_or(false);
    let overlap = p.overlap_value();
    let (phi, phi_p) = overlap_pair(overlap);
    let pair = [phi.clone(), phi_p.clone()];
    let mut rng = ProtocolRng::new(p.seed);
    let mut t = ProtocolTranscript::start(p, adam, babe);

    let b = rng.bit();
    t.committed_bit = b;
    let seq = sample_parity_sequence(n, b, &mut rng);
    let actual = sequence_kets(&seq, &phi, &phi_p);

    let mut measured: Vec<HiddenMeasurement> = Vec::with_capacity(big_n);
    let announced: Vec<u8>;
    let opened: u8;
    match adam {
        AdamStrategy::NoMeasurementCheat => {
            check_entangled_n(n)?;
            let (even, odd) = qbc0_ensembles(n, overlap)?;
            let (src, dst) = if b == 0 { (even, odd) } else { (odd, even) };
            let (phi0, phi1) = build_purifications(&src, &dst)?;
            let plan = align_purifications(&phi0, &phi1)?;
            let (da, db) = phi0.dims();
            t.send(Direction::AdamToBabe, "commit", json!({"entangled": true, "dims": [da, db]}));

            // Receiver's hidden measurements collapse the joint state.
            let mut c = phi0.coefficients();
            for l in rng.sample_indices(n, big_n) {
                let choice = rng.bit();
                let proj = projector(&pair[choice as usize]);
                let mut yes = c.clone();
                apply_qubit_op_b(&mut yes, l, n, &proj);
                let pr = yes.norm_squared().clamp(0.0, 1.0);
                let outcome = rng.bernoulli(pr);
                c = if outcome {
                    yes
                } else {
                    let mut no = c.clone();
                    apply_qubit_op_b(&mut no, l, n, &(CMatrix::identity(2, 2) - proj));
                    no
                };
                let norm = c.norm();
                c /= C64::new(norm, 0.0);
                measured.push(HiddenMeasurement { qubit: l, choice, outcome });
            }
            let collapsed = crate::qstate::BipartiteState::from_coefficients(&c)?;
            let after = CheatPlan { phi0: collapsed, phi1: plan.phi1.clone(), ua: plan.ua, predicted_pac: f64::NAN };
            let (i, state) = measure_branch(&after, &mut rng)?;
            opened = 1 - b;
            announced = parity_sequences(n, opened).swap_remove(i);
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = sequence_kets(&announced, &phi, &phi_p);
            let skip: Vec<usize> = measured.iter().map(|h| h.qubit).collect();
            for (l, pass) in verify_sequential_masked(&state, &expected, &skip, &mut rng) {
                t.check(format!("qubit[{l}]"), pass, "");
            }
        }
        _ => {
            t.send(Direction::AdamToBabe, "commit", kets_payload(&actual));
            for l in rng.sample_indices(n, big_n) {
                let choice = rng.bit();
                let pr = actual[l].overlap_sq(&pair[choice as usize]);
                let outcome = rng.bernoulli(pr);
                measured.push(HiddenMeasurement { qubit: l, choice, outcome });
            }
            let mut ann = seq.clone();
            let mut op = b;
            if let AdamStrategy::QubitLie { position } = adam {
                let pos = position.unwrap_or(n - 1);
                ann[pos] ^= 1;
                op ^= 1;
            }
            announced = ann;
            opened = op;
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = sequence_kets(&announced, &phi, &phi_p);
            let skip: Vec<usize> = measured.iter().map(|h| h.qubit).collect();
            verify_product(&mut t, &actual, &expected, &skip, &mut rng);
        }
    }

    // Measured qubits under the selected rule.
    let mut sorted = measured.clone();
    sorted.sort_by_key(|h| h.qubit);
    for h in &sorted {
        let name = format!("measured[{}]", h.qubit);
        if literal && h.choice == announced[h.qubit] {
            t.check(name, h.outcome, "literal rule: projector equals announced state");
        } else {
            t.check(name, true, if literal { "literal rule: taken as correct" } else { "strict rule: tolerated" });
        }
    }
    Ok(t.finish())
}

/// Which reading of the entangled overlap to return.
#[derive(Clone, Debug, PartialEq)]
pub enum OutcomePolicy {
    /// The branch with these projector choices and outcomes on qubits
    /// `0..N`.
    PerOutcome { choices: Vec<u8>, outcomes: Vec<bool> },
    /// Probability-weighted average over all branches.
    Averaged,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapBranch {
    pub choices: Vec<u8>,
    pub outcomes: Vec<bool>,
    /// Choices are uniform, so this is `2^{−N}` times the outcome
    /// probability.
    pub probability: f64,
    pub overlap: f64,
    pub matches_target: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntangledOverlapReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub overlap: f64,
    /// `2^{−N}`.
    pub target: f64,
    /// `|⟨Φ₁|(U^A⊗I)|Φ₀⟩|²` with no measurement.
    pub unmeasured: f64,
    /// Branches of positive probability.
    pub branches: Vec<OverlapBranch>,
    pub averaged: f64,
    pub averaged_matches: bool,
    pub all_branches_match: bool,
    /// `"both"`, `"per-outcome"`, `"averaged"` or `"neither"`.
    pub matching: &'static str,
}

/// Exact overlaps `|⟨Φ₁|(U^A⊗I)|Φ₀''⟩|²`, where `Φ₀''` is the committed
/// state after the receiver measured B-qubits `0..N` (renormalized) and
/// `U^A` is the committer's optimal rotation for the unmeasured state.
pub fn qbc3_entangled_overlap_report(n: usize, big_n: usize, overlap: f64) -> Result<EntangledOverlapReport> {
    if n < 1 || big_n > n {
        return Err(Error::InvalidParameter(format!("need 0 ≤ N ≤ n, got N={big_n}, n={n}")));
    }
    check_entangled_n(n)?;
    let (even, odd) = qbc0_ensembles(n, overlap)?;
    let (phi0, phi1) = build_purifications(&even, &odd)?;
    let plan = align_purifications(&phi0, &phi1)?;
    let c0 = phi0.coefficients();
    let c1 = phi1.coefficients();
    let ua = plan.ua.matrix();
    let target = 0.5f64.powi(big_n as i32);
    let (phi, phi_p) = overlap_pair(overlap);
    let projs = [projector(&phi), projector(&phi_p)];

    let overlap_of = |c: &CMatrix| -> f64 {
        let rotated = ua * c;
        c1.iter().zip(rotated.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    };

    let mut branches = Vec::new();
    for code in 0..(1usize << (2 * big_n)) {
        let choices: Vec<u8> = (0..big_n).map(|l| ((code >> (2 * l)) & 1) as u8).collect();
        let outcomes: Vec<bool> = (0..big_n).map(|l| (code >> (2 * l + 1)) & 1 == 1).collect();
        let mut c = c0.clone();
        for l in 0..big_n {
            let p = &projs[choices[l] as usize];
            let op = if outcomes[l] { p.clone() } else { CMatrix::identity(2, 2) - p };
            apply_qubit_op_b(&mut c, l, n, &op);
        }
        let outcome_prob = c.norm_squared();
        if outcome_prob <= 1e-15 {
            continue;
        }
        c /= C64::new(outcome_prob.sqrt(), 0.0);
        let ov = overlap_of(&c);
        branches.push(OverlapBranch {
            choices,
            outcomes,
            probability: outcome_prob * target,
            overlap: ov,
            matches_target: (ov - target).abs() <= OVERLAP_MATCH_TOL,
        });
    }
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let averaged = branches.iter().map(|b| b.probability * b.overlap).sum::<f64>() / total;
    let averaged_matches = (averaged - target).abs() <= OVERLAP_MATCH_TOL;
    let all_branches_match = branches.iter().all(|b| b.matches_target);
    let matching = match (all_branches_match, averaged_matches) {
        (true, true) => "both",
        (true, false) => "per-outcome",
        (false, true) => "averaged",
        (false, false) => "neither",
    };
    Ok(EntangledOverlapReport {
        n,
        big_n,
        overlap,
        target,
        unmeasured: overlap_of(&c0),
        branches,
        averaged,
        averaged_matches,
        all_branches_match,
        matching,
    })
}

/// One number from [`qbc3_entangled_overlap_report`] according to `policy`.
pub fn qbc3_entangled_overlap(n: usize, big_n: usize, overlap: f64, policy: &OutcomePolicy) -> Result<f64> {
    let report = qbc3_entangled_overlap_report(n, big_n, overlap)?;
    match policy {
        OutcomePolicy::Averaged => Ok(report.averaged),
        OutcomePolicy::PerOutcome { choices, outcomes } => report
            .branches
            .iter()
            .find(|b| &b.choices == choices && &b.outcomes == outcomes)
            .map(|b| b.overlap)
            .ok_or_else(|| Error::InvalidParameter("no branch with that outcome (or it has zero probability)".into())),
    }
}
