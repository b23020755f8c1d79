//! Parity encoding with two coherent states `|α⟩`, `|α'⟩` (α = −α' real)
//! sent through a pure-loss channel of transmissivity η before the receiver
//! verifies against `|√η α⟩`, `|√η α'⟩`.
//!
//! Everything is computed in the nonorthogonal coherent frame. The frame's
//! Gram matrix is that of the two-state qubit model with overlap
//! `g = ⟨α|α'⟩ = exp(−|α−α'|²/2)`, so the committer's optimal rotation is
//! taken from that isomorphic model and applied to the coherent vectors.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::protocols::qbc0::{check_entangled_n, qbc0_cheat_plan};
use crate::protocols::rng::ProtocolRng;
use crate::protocols::{
    parity_sequences, sample_parity_sequence, AdamStrategy, BabeStrategy, Direction, ProtocolId, ProtocolParams,
    ProtocolTranscript,
};
use crate::qstate::coherent::{coherent_overlap, CoherentSuperposition, FrameOperator, FRAME_CONDITION_FLOOR};
use crate::qstate::linalg::{CMatrix, C64};

/// Mode amplitudes `(α, α') = (s/2, −s/2)`.
pub fn coherent_pair(separation: f64) -> (C64, C64) {
    (C64::new(separation / 2.0, 0.0), C64::new(-separation / 2.0, 0.0))
}

/// Mode amplitudes of a label sequence, scaled by `scale`.
pub fn sequence_modes(seq: &[u8], separation: f64, scale: f64) -> Vec<C64> {
    let (a, ap) = coherent_pair(separation);
    seq.iter().map(|&b| if b == 0 { a * scale } else { ap * scale }).collect()
}

/// `|⟨√(1−η)α|√(1−η)α'⟩|`, the factor multiplying each mode's off-diagonal
/// terms under loss.
pub fn decoherence_factor(eta: f64, separation: f64) -> f64 {
    let (a, ap) = coherent_pair(separation);
    let s = (1.0 - eta).sqrt();
    coherent_overlap(a * s, ap * s).norm()
}

/// Fails when the received frame (all `2ⁿ` sequences after loss) is too
/// ill-conditioned; its Gram spectrum is `Π(1 ± g_η)` with
/// `g_η = |⟨√ηα|√ηα'⟩|`.
pub fn check_frame(n: usize, eta: f64, separation: f64) -> Result<()> {
    let (a, ap) = coherent_pair(separation);
    let g = coherent_overlap(a * eta.sqrt(), ap * eta.sqrt()).norm();
    let ratio = ((1.0 - g) / (1.0 + g)).powi(n as i32);
    if !(ratio >= FRAME_CONDITION_FLOOR) {
        return Err(Error::FrameConditioning(ratio));
    }
    Ok(())
}

/// Exact quantities of the entangled cheat against the lossy receiver.
#[derive(Clone, Debug, Serialize)]
pub struct Qbc01Report {
    pub n: usize,
    pub eta: f64,
    pub separation: f64,
    /// `⟨α|α'⟩`.
    pub overlap: f64,
    pub decoherence_factor: f64,
    /// `‖ρ₀ − ρ₁‖₁` of the transmitted states.
    pub eps: f64,
    /// `‖J(ρ₀) − J(ρ₁)‖₁` of the received states.
    pub eps_received: f64,
    /// `P^A_c = Σ_i tr X_i J(√p̃_i|φ̃_i⟩⟨φ̃_i|√p̃_i)`.
    pub pac: f64,
    /// `1 − Σ_i p̃_i ‖J(|φ̃_i⟩⟨φ̃_i| − |φ'_i⟩⟨φ'_i|)‖₁`.
    pub chain_bound: f64,
    /// `1 − 2√ε`.
    pub sqrt_bound: f64,
    pub bounds_hold: bool,
}

fn branch_operator(frame: &[Vec<C64>], coeffs: &[C64]) -> Result<FrameOperator> {
    let n = coeffs.len();
    FrameOperator::new(frame.to_vec(), CMatrix::from_fn(n, n, |j, k| coeffs[j] * coeffs[k].conj()))
}

/// Computes the cheat that commits to 0 and opens 1.
pub fn qbc01_report(n: usize, eta: f64, separation: f64) -> Result<Qbc01Report> {
    if n == 0 || !(eta > 0.0 && eta <= 1.0) || !(separation > 0.0) {
        return Err(Error::InvalidParameter(format!("bad qbc01 instance n={n} eta={eta} s={separation}")));
    }
    check_entangled_n(n)?;
    check_frame(n, eta, separation)?;
    let (a, ap) = coherent_pair(separation);
    let g = coherent_overlap(a, ap).re;
    let (plan, _) = qbc0_cheat_plan(n, g, 0)?;
    let src: Vec<Vec<C64>> = parity_sequences(n, 0).iter().map(|s| sequence_modes(s, separation, 1.0)).collect();
    let dst: Vec<Vec<C64>> = parity_sequences(n, 1).iter().map(|s| sequence_modes(s, separation, 1.0)).collect();
    let m = src.len();
    let w = 1.0 / (m as f64).sqrt();

    // ε before and after the channel.
    let diag = |frame: &[Vec<C64>]| FrameOperator::new(frame.to_vec(), CMatrix::from_diagonal_element(m, m, C64::new(1.0 / m as f64, 0.0)));
    let rho0 = diag(&src)?;
    let rho1 = diag(&dst)?;
    let eps = rho0.sub(&rho1).trace_norm()?;
    let eps_received = rho0.apply_loss(eta)?.sub(&rho1.apply_loss(eta)?).trace_norm()?;

    let ua = plan.ua.matrix();
    let mut pac = 0.0;
    let mut chain = 0.0;
    for i in 0..m {
        let coeffs: Vec<C64> = (0..m).map(|j| ua[(i, j)] * w).collect();
        let branch = branch_operator(&src, &coeffs)?;
        let p_tilde = branch.trace().re;
        let received = branch.apply_loss(eta)?;
        let target = CoherentSuperposition::product(dst[i].clone()).projector().apply_loss(eta)?;
        let verifier = CoherentSuperposition::product(dst[i].iter().map(|&z| z * eta.sqrt()).collect());
        pac += received.expectation(&verifier).re;
        if p_tilde > 0.0 {
            let normalized = FrameOperator::new(received.frame().to_vec(), received.coefficients() / C64::new(p_tilde, 0.0))?;
            chain += p_tilde * normalized.sub(&target).trace_norm()?;
        }
    }
    let pac = pac.clamp(0.0, 1.0);
    let chain_bound = 1.0 - chain;
    let sqrt_bound = 1.0 - 2.0 * eps.sqrt();
    let slack = crate::cheat::CHAIN_SLACK;
    Ok(Qbc01Report {
        n,
        eta,
        separation,
        overlap: g,
        decoherence_factor: decoherence_factor(eta, separation),
        eps,
        eps_received,
        pac,
        chain_bound,
        sqrt_bound,
        bounds_hold: pac >= chain_bound - slack && chain_bound >= sqrt_bound - slack,
    })
}

pub fn qbc01_run(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    p.validate()?;
    if p.protocol != ProtocolId::Qbc01 {
        return Err(Error::InvalidParameter(format!("qbc01_run called with {}", p.protocol)));
    }
    adam.validate_for(p.protocol, p.n)?;
    babe.validate_for(p.protocol, p.n)?;
    let n = p.n;
    let eta = p.eta.expect("validated");
    let s = p.separation.expect("validated");
    check_frame(n, eta, s)?;
    let mut rng = ProtocolRng::new(p.seed);
    let mut t = ProtocolTranscript::start(p, adam, babe);

    let b = rng.bit();
    t.committed_bit = b;
    let seq = sample_parity_sequence(n, b, &mut rng);
    let sent = sequence_modes(&seq, s, 1.0);

    match adam {
        AdamStrategy::UhlmannMatched => {
            check_entangled_n(n)?;
            let (a, ap) = coherent_pair(s);
            let g = coherent_overlap(a, ap).re;
            let (plan, _) = qbc0_cheat_plan(n, g, b)?;
            t.send(Direction::AdamToBabe, "commit", json!({"entangled": true, "modes": n}));
            let src: Vec<Vec<C64>> = parity_sequences(n, b).iter().map(|q| sequence_modes(q, s, 1.0)).collect();
            let m = src.len();
            let w = 1.0 / (m as f64).sqrt();
            let ua = plan.ua.matrix();
            let branches = (0..m)
                .map(|i| {
                    let coeffs: Vec<C64> = (0..m).map(|j| ua[(i, j)] * w).collect();
                    branch_operator(&src, &coeffs)
                })
                .collect::<Result<Vec<_>>>()?;
            let weights: Vec<f64> = branches.iter().map(|op| op.trace().re.max(0.0)).collect();
            let i = rng.categorical(&weights);
            let opened = 1 - b;
            let announced = parity_sequences(n, opened).swap_remove(i);
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let received = branches[i].apply_loss(eta)?;
            let verifier = CoherentSuperposition::product(sequence_modes(&announced, s, eta.sqrt()));
            let prob = (received.expectation(&verifier).re / weights[i]).clamp(0.0, 1.0);
            let pass = rng.bernoulli(prob);
            t.check("sequence", pass, format!("p={prob:.6}"));
        }
        _ => {
            t.send(
                Direction::AdamToBabe,
                "commit",
                json!({"coherent_amplitudes": sent.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()}),
            );
            let mut announced = seq.clone();
            let mut opened = b;
            if let AdamStrategy::QubitLie { position } = adam {
                let pos = position.unwrap_or(n - 1);
                announced[pos] ^= 1;
                opened ^= 1;
            }
            t.opened_bit = Some(opened);
            t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "sequence": announced}));
            let received = sequence_modes(&seq, s, eta.sqrt());
            let expected = sequence_modes(&announced, s, eta.sqrt());
            for (l, (x, y)) in received.iter().zip(&expected).enumerate() {
                let prob = coherent_overlap(*y, *x).norm_sqr();
                let pass = rng.bernoulli(prob);
                t.check(format!("mode[{l}]"), pass, format!("p={prob:.6}"));
            }
        }
    }
    Ok(t.finish())
}
