//! Parity encoding on anonymous states.
//!
//! The receiver draws `|ψ_l⟩ = (cos θ_l, sin θ_l)` with θ_l uniform on the
//! real great circle and sends them; the committer returns
//! `U_{l j_l}|ψ_l⟩` for a parity sequence `j`, with `U_0 = I` and
//! `U_1 = R(δ)`, `cos δ = λ`, so that `⟨ψ|U_1†U_0|ψ⟩ = λ` for every ψ.
//! Without knowing the ψ_l the committer cannot compute a well-aimed
//! cheating rotation.

use serde_json::json;

use crate::cheat::{align_purifications, build_purifications, cheating_probability, entangle_controlled, CheatPlan};
use crate::error::{Error, Result};
use crate::protocols::qbc0::{check_entangled_n, measure_branch, verify_product};
use crate::protocols::rng::ProtocolRng;
use crate::protocols::transcript::kets_payload;
use crate::protocols::{
    angle_ket, parity_sequences, rotation, sample_parity_sequence, verify_sequential, AdamStrategy, BabeStrategy,
    Direction, ProtocolId, ProtocolParams, ProtocolTranscript,
};
use crate::qstate::linalg::{CMatrix, C64};
use crate::qstate::{check_operator_dim, tensor_all, trace_norm, DensityOperator, Ket, Operator, StateEnsemble};

/// `R(δ)` with `cos δ = λ`.
pub fn qbc1_rotation(lambda: f64) -> Operator {
    rotation(lambda.clamp(-1.0, 1.0).acos())
}

/// `θ_l` uniform in `[0, 2π)`.
pub fn draw_angles(n: usize, rng: &mut ProtocolRng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform() * std::f64::consts::TAU).collect()
}

/// Per-qubit kets `U_{j_l}|ψ_l⟩`.
pub fn encoded_kets(seq: &[u8], lambda: f64, thetas: &[f64]) -> Vec<Ket> {
    let u1 = qbc1_rotation(lambda);
    seq.iter()
        .zip(thetas)
        .map(|(&j, &th)| {
            let psi = angle_ket(th);
            if j == 0 {
                psi
            } else {
                u1.apply_unitary(&psi).expect("2×2 rotation")
            }
        })
        .collect()
}

/// Uniform ensembles over the even and odd sequences for a known
/// ψ-sequence.
pub fn qbc1_ensembles(lambda: f64, thetas: &[f64]) -> Result<(StateEnsemble, StateEnsemble)> {
    let n = thetas.len();
    check_operator_dim(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))?;
    let build = |parity: u8| -> Result<StateEnsemble> {
        let kets = parity_sequences(n, parity)
            .iter()
            .map(|s| tensor_all(&encoded_kets(s, lambda, thetas)))
            .collect::<Result<Vec<_>>>()?;
        StateEnsemble::uniform(kets)
    };
    Ok((build(0)?, build(1)?))
}

/// The receiver's evidence states for a known ψ-sequence, by the parity
/// recursion over per-qubit projectors.
pub fn qbc1_density(lambda: f64, thetas: &[f64]) -> Result<(DensityOperator, DensityOperator)> {
    let n = thetas.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one qubit".into()));
    }
    check_operator_dim(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))?;
    let proj = |l: usize, j: u8| -> CMatrix {
        let k = &encoded_kets(&[j], lambda, &thetas[l..=l])[0];
        k.projector().into_matrix()
    };
    let mut even = proj(n - 1, 0);
    let mut odd = proj(n - 1, 1);
    let half = C64::new(0.5, 0.0);
    for l in (0..n - 1).rev() {
        let (p0, p1) = (proj(l, 0), proj(l, 1));
        let e = (p0.kronecker(&even) + p1.kronecker(&odd)) * half;
        let o = (p0.kronecker(&odd) + p1.kronecker(&even)) * half;
        even = e;
        odd = o;
    }
    Ok((DensityOperator::new(even)?, DensityOperator::new(odd)?))
}

/// `‖ρ₀ − ρ₁‖₁` for any ψ-sequence: `2(1 − λ²)^{n/2}`.
pub fn qbc1_distance_closed_form(n: usize, lambda: f64) -> f64 {
    2.0 * (1.0 - lambda * lambda).max(0.0).powf(n as f64 / 2.0)
}

/// `‖ρ̄₀ − ρ̄₁‖₁` between the evidence states averaged over `draws`
/// independent ψ-sequences. The exact averages coincide; the finite-sample
/// distance shrinks with `n`.
pub fn qbc1_averaged_distance(n: usize, lambda: f64, draws: usize, seed: u64) -> Result<f64> {
    let mut rng = ProtocolRng::new(seed);
    let d = 1usize << n;
    let mut acc = CMatrix::zeros(d, d);
    for _ in 0..draws {
        let th = draw_angles(n, &mut rng);
        let (r0, r1) = qbc1_density(lambda, &th)?;
        acc += r0.matrix() - r1.matrix();
    }
    Ok(trace_norm(&(acc / C64::new(draws.max(1) as f64, 0.0))))
}

/// Acceptance of the fixed-midpoint committer, `cos²(δ/2) = (1 + λ)/2`.
pub fn qbc1_midpoint_acceptance(lambda: f64) -> f64 {
    (1.0 + lambda) / 2.0
}

/// `|Φ_b⟩ = Σ_j 2^{−(n−1)/2} |e_j⟩ ⊗ (⊗_l U_{j_l}) |ψ⟩`, built by the
/// controlled unitary without reference to the individual ψ_l.
pub fn qbc1_committed_state(lambda: f64, thetas: &[f64], bit: u8) -> Result<crate::qstate::BipartiteState> {
    let n = thetas.len();
    let u1 = qbc1_rotation(lambda);
    let id = Operator::identity(2);
    let seqs = parity_sequences(n, bit);
    let unitaries = seqs
        .iter()
        .map(|s| {
            s.iter().try_fold(Operator::identity(1), |acc, &j| acc.tensor(if j == 0 { &id } else { &u1 }))
        })
        .collect::<Result<Vec<_>>>()?;
    let amps = vec![1.0 / (seqs.len() as f64).sqrt(); seqs.len()];
    let psi = tensor_all(&thetas.iter().map(|&t| angle_ket(t)).collect::<Vec<_>>())?;
    entangle_controlled(&unitaries, &amps, &psi)
}

/// Rotation aligned for the ψ-sequence `plan_thetas`.
pub fn qbc1_cheat_plan(lambda: f64, plan_thetas: &[f64], from_bit: u8) -> Result<CheatPlan> {
    let (even, odd) = qbc1_ensembles(lambda, plan_thetas)?;
    let (src, dst) = if from_bit == 0 { (even, odd) } else { (odd, even) };
    let (phi0, phi1) = build_purifications(&src, &dst)?;
    align_purifications(&phi0, &phi1)
}

/// Exact `P^A_c` of the rotation planned for `plan_thetas` when the states
/// actually sent were `actual_thetas` (equal slices give the matched cheat).
pub fn qbc1_cheat_value(lambda: f64, actual_thetas: &[f64], plan_thetas: &[f64], from_bit: u8) -> Result<f64> {
    if actual_thetas.len() != plan_thetas.len() {
        return Err(Error::CountMismatch("ψ-sequences differ in length".into()));
    }
    let planned = qbc1_cheat_plan(lambda, plan_thetas, from_bit)?;
    let (even, odd) = qbc1_ensembles(lambda, actual_thetas)?;
    let (src, dst) = if from_bit == 0 { (even, odd) } else { (odd, even) };
    let (phi0, phi1) = build_purifications(&src, &dst)?;
    let plan = CheatPlan { phi0, phi1, ua: planned.ua, predicted_pac: f64::NAN };
    cheating_probability(&plan, &dst)
}

pub fn qbc1_run(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    p.validate()?;
    if p.protocol != ProtocolId::Qbc1 {
        return Err(Error::InvalidParameter(format!("qbc1_run called with {}", p.protocol)));
    }
    adam.validate_for(p.protocol, p.n)?;
    babe.validate_for(p.protocol, p.n)?;
    let n = p.n;
    let lambda = p.overlap_value();
    let mut rng = ProtocolRng::new(p.seed);
    let mut t = ProtocolTranscript::start(p, adam, babe);

    let thetas = draw_angles(n, &mut rng);
    let psi: Vec<Ket> = thetas.iter().map(|&th| angle_ket(th)).collect();
    t.send(Direction::BabeToAdam, "anonymous_states", kets_payload(&psi));

    let b = rng.bit();
    t.committed_bit = b;
    let seq = sample_parity_sequence(n, b, &mut rng);

    match adam {
        AdamStrategy::UhlmannMatched | AdamStrategy::UhlmannMismatched => {
            check_entangled_n(n)?;
            let plan_thetas = if matches!(adam, AdamStrategy::UhlmannMatched) {
                thetas.clone()
            } else {
                draw_angles(n, &mut rng)
            };
            let phi0 = qbc1_committed_state(lambda, &thetas, b)?;
            let planned = qbc1_cheat_plan(lambda, &plan_thetas, b)?;
            let (da, db) = phi0.dims();
            t.send(Direction::AdamToBabe, "commit", json!({"entangled": true, "dims": [da, db]}));
            let plan = CheatPlan { phi1: phi0.clone(), phi0, ua: planned.ua, predicted_pac: f64::NAN };
            let (i, state) = measure_branch(&plan, &mut rng)?;
            let opened = 1 - b;
            let announced = parity_sequences(n, opened).swap_remove(i);
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = encoded_kets(&announced, lambda, &thetas);
            for (l, pass) in verify_sequential(&state, &expected, &mut rng).into_iter().enumerate() {
                t.check(format!("qubit[{l}]"), pass, "");
            }
        }
        _ => {
            let mut actual = encoded_kets(&seq, lambda, &thetas);
            let mut announced = seq.clone();
            let mut opened = b;
            match adam {
                AdamStrategy::QubitLie { position } => {
                    let pos = position.unwrap_or(n - 1);
                    announced[pos] ^= 1;
                    opened ^= 1;
                }
                AdamStrategy::FixedMidpoint => {
                    let half = rotation(lambda.clamp(-1.0, 1.0).acos() / 2.0);
                    actual[n - 1] = half.apply_unitary(&psi[n - 1])?;
                    announced[n - 1] ^= 1;
                    opened ^= 1;
                }
                _ => {}
            }
            t.send(Direction::AdamToBabe, "commit", kets_payload(&actual));
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = encoded_kets(&announced, lambda, &thetas);
            verify_product(&mut t, &actual, &expected, &[], &mut rng);
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_is_independent_of_psi() {
        let mut rng = ProtocolRng::new(5);
        for _ in 0..3 {
            let th = draw_angles(3, &mut rng);
            let (r0, r1) = qbc1_density(0.6, &th).unwrap();
            let d = trace_norm(&(r0.matrix() - r1.matrix()));
            assert!((d - qbc1_distance_closed_form(3, 0.6)).abs() < 1e-10);
        }
    }

    #[test]
    fn controlled_state_matches_purification() {
        let th = [0.3, 1.9, 4.0];
        let phi = qbc1_committed_state(0.7, &th, 1).unwrap();
        let (_, odd) = qbc1_ensembles(0.7, &th).unwrap();
        let (p, _) = build_purifications(&odd, &odd).unwrap();
        assert!(phi.inner(&p).unwrap().norm() > 1.0 - 1e-10);
    }

    #[test]
    fn matched_cheat_reaches_prediction() {
        let th = [0.3, 1.9, 4.0];
        let plan = qbc1_cheat_plan(0.8, &th, 0).unwrap();
        let v = qbc1_cheat_value(0.8, &th, &th, 0).unwrap();
        assert!(v >= plan.predicted_pac - 1e-10);
    }
}
