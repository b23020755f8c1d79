//! Parity encoding with two fixed nonorthogonal states.
//!
//! The committer sends `n` qubits, each `|φ⟩` (label 0) or `|φ'⟩` (label 1),
//! drawn uniformly among the `2^{n−1}` sequences whose parity is the bit.
//! Opening announces the sequence; the receiver checks each qubit
//! projectively.

use serde_json::json;

use crate::cheat::{align_purifications, branches, build_purifications, CheatPlan};
use crate::detect::pure_binary;
use crate::error::{Error, Result};
use crate::protocols::rng::ProtocolRng;
use crate::protocols::transcript::kets_payload;
use crate::protocols::{
    overlap_pair, parity_sequences, sample_parity_sequence, verify_sequential, AdamStrategy, BabeStrategy, Direction,
    ProtocolId, ProtocolParams, ProtocolTranscript, MAX_ENTANGLED_N,
};
use crate::qstate::linalg::{CMatrix, C64};
use crate::qstate::{check_operator_dim, tensor_all, trace_norm, DensityOperator, Ket, StateEnsemble};

/// Kets of a label sequence.
pub fn sequence_kets(seq: &[u8], phi: &Ket, phi_p: &Ket) -> Vec<Ket> {
    seq.iter().map(|&b| if b == 0 { phi.clone() } else { phi_p.clone() }).collect()
}

/// Uniform ensembles over the even and odd sequences, in
/// [`parity_sequences`] order.
pub fn qbc0_ensembles(n: usize, overlap: f64) -> Result<(StateEnsemble, StateEnsemble)> {
    check_operator_dim(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))?;
    let (phi, phi_p) = overlap_pair(overlap);
    let build = |parity: u8| -> Result<StateEnsemble> {
        let kets = parity_sequences(n, parity)
            .iter()
            .map(|s| tensor_all(&sequence_kets(s, &phi, &phi_p)))
            .collect::<Result<Vec<_>>>()?;
        StateEnsemble::uniform(kets)
    };
    Ok((build(0)?, build(1)?))
}

/// The receiver's two evidence states, assembled by the recursion
/// `E_k = ½(P⊗E_{k−1} + P'⊗O_{k−1})`, `O_k = ½(P⊗O_{k−1} + P'⊗E_{k−1})`
/// from `E_1 = P`, `O_1 = P'`.
pub fn qbc0_densities(n: usize, overlap: f64) -> Result<(DensityOperator, DensityOperator)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    check_operator_dim(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))?;
    let (phi, phi_p) = overlap_pair(overlap);
    let p0 = phi.projector().into_matrix();
    let p1 = phi_p.projector().into_matrix();
    let mut even = p0.clone();
    let mut odd = p1.clone();
    for _ in 1..n {
        let half = C64::new(0.5, 0.0);
        let e = (p0.kronecker(&even) + p1.kronecker(&odd)) * half;
        let o = (p0.kronecker(&odd) + p1.kronecker(&even)) * half;
        even = e;
        odd = o;
    }
    Ok((DensityOperator::new(even)?, DensityOperator::new(odd)?))
}

/// `1 − 2p_e` for a single pair at equal priors, where `p_e` is the Helstrom
/// error probability; equals `√(1 − overlap²)`.
pub fn single_pair_bias(overlap: f64) -> Result<f64> {
    let (phi, phi_p) = overlap_pair(overlap);
    let pe = 1.0 - pure_binary(&phi, &phi_p, 0.5)?;
    Ok(1.0 - 2.0 * pe)
}

/// Receiver's optimal early-guess probability, closed form
/// `½ + ½(1 − 2p_e)ⁿ`.
pub fn qbc0_concealment(n: usize, overlap: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    check_operator_dim(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))?;
    Ok(0.5 + 0.5 * single_pair_bias(overlap)?.powi(n as i32))
}

/// `½ + ‖ρ₀ − ρ₁‖₁/4` from the assembled evidence states.
pub fn qbc0_exact_concealment(n: usize, overlap: f64) -> Result<f64> {
    let (r0, r1) = qbc0_densities(n, overlap)?;
    let diff: CMatrix = r0.matrix() - r1.matrix();
    Ok(0.5 + trace_norm(&diff) / 4.0)
}

/// Optimal EPR cheat that commits to `from_bit` and opens the other value.
pub fn qbc0_cheat_plan(n: usize, overlap: f64, from_bit: u8) -> Result<(CheatPlan, StateEnsemble)> {
    let (even, odd) = qbc0_ensembles(n, overlap)?;
    let (src, dst) = if from_bit == 0 { (even, odd) } else { (odd, even) };
    let (phi0, phi1) = build_purifications(&src, &dst)?;
    Ok((align_purifications(&phi0, &phi1)?, dst))
}

pub(crate) fn check_entangled_n(n: usize) -> Result<()> {
    if n > MAX_ENTANGLED_N {
        return Err(Error::TooLarge {
            entries: 1u128 << (2 * n - 1).min(127),
            cap: 1u128 << (2 * MAX_ENTANGLED_N - 1),
        });
    }
    Ok(())
}

/// Per-qubit projective checks of product evidence against the announced
/// kets; one Bernoulli draw per qubit.
pub(crate) fn verify_product(
    t: &mut ProtocolTranscript,
    actual: &[Ket],
    announced: &[Ket],
    skip: &[usize],
    rng: &mut ProtocolRng,
) {
    for (l, (a, e)) in actual.iter().zip(announced).enumerate() {
        if skip.contains(&l) {
            continue;
        }
        let p = a.overlap_sq(e);
        let pass = rng.bernoulli(p);
        t.check(format!("qubit[{l}]"), pass, format!("p={p:.6}"));
    }
}

/// Samples the committer's A-measurement on a cheat plan; returns the outcome
/// index and the normalized B-state of that branch.
pub(crate) fn measure_branch(plan: &CheatPlan, rng: &mut ProtocolRng) -> Result<(usize, crate::qstate::linalg::CVector)> {
    let rows = branches(plan)?;
    let weights: Vec<f64> = rows.iter().map(|r| r.norm_squared()).collect();
    let i = rng.categorical(&weights);
    let row = &rows[i];
    Ok((i, row / C64::new(weights[i].sqrt(), 0.0)))
}

pub fn qbc0_run(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    p.validate()?;
    if p.protocol != ProtocolId::Qbc0 {
        return Err(Error::InvalidParameter(format!("qbc0_run called with {}", p.protocol)));
    }
    adam.validate_for(p.protocol, p.n)?;
    babe.validate_for(p.protocol, p.n)?;
    let n = p.n;
    let overlap = p.overlap_value();
    let (phi, phi_p) = overlap_pair(overlap);
    let mut rng = ProtocolRng::new(p.seed);
    let mut t = ProtocolTranscript::start(p, adam, babe);

    let b = rng.bit();
    t.committed_bit = b;
    let seq = sample_parity_sequence(n, b, &mut rng);
    let actual = sequence_kets(&seq, &phi, &phi_p);

    match adam {
        AdamStrategy::UhlmannMatched => {
            check_entangled_n(n)?;
            let (plan, _) = qbc0_cheat_plan(n, overlap, b)?;
            let (da, db) = plan.phi0.dims();
            t.send(Direction::AdamToBabe, "commit", json!({"entangled": true, "dims": [da, db]}));
            let (i, state) = measure_branch(&plan, &mut rng)?;
            let opened = 1 - b;
            let announced = parity_sequences(n, opened).swap_remove(i);
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = sequence_kets(&announced, &phi, &phi_p);
            for (l, pass) in verify_sequential(&state, &expected, &mut rng).into_iter().enumerate() {
                t.check(format!("qubit[{l}]"), pass, "");
            }
        }
        _ => {
            t.send(Direction::AdamToBabe, "commit", kets_payload(&actual));
            let mut announced = seq.clone();
            let mut opened = b;
            if let AdamStrategy::QubitLie { position } = adam {
                let pos = position.unwrap_or(n - 1);
                announced[pos] ^= 1;
                opened ^= 1;
            }
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let expected = sequence_kets(&announced, &phi, &phi_p);
            verify_product(&mut t, &actual, &expected, &[], &mut rng);
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_at_half_overlap_squared() {
        let v = qbc0_concealment(4, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!((v - 0.625).abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_mixture_assembly() {
        let (r0, _) = qbc0_densities(3, 0.6).unwrap();
        let (e0, _) = qbc0_ensembles(3, 0.6).unwrap();
        let direct = e0.density().unwrap();
        assert!(crate::qstate::linalg::max_abs_entry(&(r0.matrix() - direct.matrix())) < 1e-12);
    }

    #[test]
    fn honest_run_accepts() {
        for seed in 0..20 {
            let t = qbc0_run(&ProtocolParams::qbc0(5, 0.4, seed), &AdamStrategy::Honest, &BabeStrategy::Honest).unwrap();
            assert!(t.accepted());
            assert_eq!(t.opened_bit, Some(t.committed_bit));
        }
    }
}
