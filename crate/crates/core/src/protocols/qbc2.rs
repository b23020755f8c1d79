//! Commitment on anonymous BB84 sets.
//!
//! The receiver sends `n` sets of four qubits; each set is a uniformly random
//! permutation of `S₀ = {↑, →, ↗, ↘}` (angles 0, π/2, π/4, 3π/4), and a
//! qubit's *name* is its position in the set. The committer tests `n − m`
//! sets by asking for their permutations, keeps `m`, and commits by rotating
//! one randomly chosen qubit of each kept set with `U_b` (`U₀ = I`,
//! `U₁ = R(π/2)`). Opening reveals the bit and the chosen names.

use std::sync::OnceLock;

use serde_json::json;

use crate::detect::{helstrom_binary, optimize_mary, HypothesisSet, MaryResult};
use crate::error::{Error, Result};
use crate::protocols::rng::ProtocolRng;
use crate::protocols::transcript::kets_payload;
use crate::protocols::{
    angle_ket, rotation, AdamStrategy, BabeStrategy, Direction, ProtocolId, ProtocolParams, ProtocolTranscript,
};
use crate::qstate::linalg::CVector;
use crate::qstate::{tensor_all, trace_norm, DensityOperator, Ket, Operator};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// Angles of ↑, →, ↗, ↘.
pub const S0_ANGLES: [f64; 4] = [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4];

/// Tolerance and iteration budget used for the cached optimal detector.
pub const PA_TOL: f64 = 1e-10;
pub const PA_MAX_ITER: usize = 20_000;

/// A permutation: `perm[q]` is the `S₀` index of the state named `q`.
pub type Perm = [usize; 4];

/// The 24 permutations in lexicographic order.
pub fn permutations() -> Vec<Perm> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// `U_b`.
pub fn modulation(bit: u8) -> Operator {
    if bit == 0 {
        Operator::identity(2)
    } else {
        rotation(FRAC_PI_2)
    }
}

pub fn modulated(bit: u8, ket: &Ket) -> Ket {
    modulation(bit).apply_unitary(ket).expect("2×2 unitary")
}

/// `S₀` index of the orthogonal partner.
pub fn partner(s: usize) -> usize {
    s ^ 1
}

pub fn set_kets(perm: &Perm) -> Vec<Ket> {
    perm.iter().map(|&s| angle_ket(S0_ANGLES[s])).collect()
}

/// The 24 equiprobable four-qubit product states.
pub fn qbc2_hypotheses() -> Result<HypothesisSet> {
    let kets = permutations().iter().map(|p| tensor_all(&set_kets(p))).collect::<Result<Vec<_>>>()?;
    HypothesisSet::uniform_pure(&kets)
}

/// Optimal 24-outcome detector of the hidden permutation.
pub fn qbc2_pa(tol: f64, max_iter: usize) -> Result<MaryResult> {
    optimize_mary(&qbc2_hypotheses()?, tol, max_iter)
}

/// [`qbc2_pa`] at [`PA_TOL`], computed once per process.
pub fn qbc2_optimal_detector() -> &'static MaryResult {
    static CELL: OnceLock<MaryResult> = OnceLock::new();
    CELL.get_or_init(|| qbc2_pa(PA_TOL, PA_MAX_ITER).expect("fixed well-formed hypothesis set"))
}

/// `P[π][k] = tr Π_k |π⟩⟨π|`.
pub fn qbc2_detection_matrix(result: &MaryResult) -> Result<Vec<Vec<f64>>> {
    permutations()
        .iter()
        .map(|p| {
            let psi = tensor_all(&set_kets(p))?;
            Ok(outcome_probabilities(result, psi.amplitudes()))
        })
        .collect()
}

fn outcome_probabilities(result: &MaryResult, psi: &CVector) -> Vec<f64> {
    result
        .pom
        .elements()
        .iter()
        .map(|e| (psi.adjoint() * e * psi)[(0, 0)].re.max(0.0))
        .collect()
}

/// Fraction of `trials` in which all `m` independently permuted sets are
/// identified correctly by sampling the detector.
pub fn qbc2_pa_monte_carlo(detection: &[Vec<f64>], m: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = ProtocolRng::new(seed);
    let mut wins = 0usize;
    for _ in 0..trials {
        let mut ok = true;
        for _ in 0..m {
            let truth = rng.index(detection.len());
            let guess = rng.categorical(&detection[truth]);
            ok &= guess == truth;
        }
        wins += ok as usize;
    }
    wins as f64 / trials as f64
}

/// Average success of announcing a different name with the flipped bit,
/// enumerated over all permutations, committed names, lie names and bits.
pub fn qbc2_name_lie_enumeration() -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for p in permutations() {
        let kets = set_kets(&p);
        for q in 0..4 {
            for lie in (0..4).filter(|&x| x != q) {
                for b in 0..2u8 {
                    let sent = modulated(b, &kets[q]);
                    let expected = modulated(1 - b, &kets[lie]);
                    total += sent.overlap_sq(&expected);
                    count += 1;
                }
            }
        }
    }
    total / count as f64
}

/// `p₁ = Π_q |⟨θ_q|s_{π(q)}⟩|²`: chance that a set with qubit angles
/// `angles` passes the test when declared to be permutation `perm`.
pub fn qbc2_pass_probability(angles: &[f64; 4], perm: &Perm) -> f64 {
    angles.iter().zip(perm).map(|(&a, &s)| (a - S0_ANGLES[s]).cos().powi(2)).product()
}

/// Receiver's state of the committed qubit of a set before the name is
/// revealed: `¼ Σ_q U_b|λ_q⟩⟨λ_q|U_b†`.
pub fn qbc2_conditional_state(set: &[Ket], bit: u8) -> Result<DensityOperator> {
    let items: Vec<Ket> = set.iter().map(|k| modulated(bit, k)).collect();
    let refs: Vec<(f64, &Ket)> = items.iter().map(|k| (1.0 / set.len() as f64, k)).collect();
    DensityOperator::mixture(&refs)
}

/// Bloch vector length `|r|` of the committed qubit from a uniform-angle
/// cheating set, `r = ¼ Σ_q (cos 2θ_q, sin 2θ_q)`.
pub fn bloch_length(angles: &[f64; 4]) -> f64 {
    let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), &a| (c + (2.0 * a).cos(), s + (2.0 * a).sin()));
    (c * c + s * s).sqrt() / 4.0
}

/// Receiver's optimal bit-identification probability from `m` committed
/// qubits whose conditional states are `(I ± r·σ)/2`: the Helstrom value
/// on the m-fold products, evaluated in their common eigenbasis.
pub fn babe_success(r: f64, m: usize) -> f64 {
    let r = r.clamp(0.0, 1.0);
    let (a, c) = ((1.0 + r) / 2.0, (1.0 - r) / 2.0);
    let mut sum = 0.0;
    for k in 0..=m {
        let binom = statrs::function::factorial::binomial(m as u64, k as u64);
        sum += binom * (a.powi(k as i32) * c.powi((m - k) as i32) - c.powi(k as i32) * a.powi((m - k) as i32)).abs();
    }
    0.5 + sum / 4.0
}

/// Same quantity from the dense m-fold conditional states via the Helstrom
/// bound; used as a cross-check of [`babe_success`].
pub fn babe_success_dense(angles: &[f64; 4], m: usize) -> Result<f64> {
    let set: Vec<Ket> = angles.iter().map(|&a| angle_ket(a)).collect();
    let r0 = qbc2_conditional_state(&set, 0)?;
    let r1 = qbc2_conditional_state(&set, 1)?;
    let (mut a, mut b) = (r0.clone(), r1.clone());
    for _ in 1..m {
        a = a.tensor(&r0)?;
        b = b.tensor(&r1)?;
    }
    Ok(helstrom_binary(&a, &b, 0.5)?.0)
}

fn babe_set(j: usize, cheat: &Option<(f64, Vec<usize>)>, perm: &Perm) -> Vec<Ket> {
    match cheat {
        Some((a, idx)) if idx.contains(&j) => vec![angle_ket(*a); 4],
        _ => set_kets(perm),
    }
}

pub fn qbc2_run(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    p.validate()?;
    if p.protocol != ProtocolId::Qbc2 {
        return Err(Error::InvalidParameter(format!("qbc2_run called with {}", p.protocol)));
    }
    adam.validate_for(p.protocol, p.n)?;
    babe.validate_for(p.protocol, p.n)?;
    let (n, m) = (p.n, p.m.expect("validated"));
    let perms = permutations();
    let mut rng = ProtocolRng::new(p.seed);
    let mut t = ProtocolTranscript::start(p, adam, babe);

    // (i) Babe prepares and sends the sets.
    let cheat = match babe {
        BabeStrategy::UniformAngle { angle, sets } => {
            let k = sets.or(p.big_n).unwrap_or(n);
            Some((*angle, rng.sample_indices(n, k)))
        }
        BabeStrategy::Honest => None,
    };
    let declared: Vec<Perm> = (0..n).map(|_| perms[rng.index(perms.len())]).collect();
    let sets: Vec<Vec<Ket>> = (0..n).map(|j| babe_set(j, &cheat, &declared[j])).collect();
    t.send(Direction::BabeToAdam, "sets", kets_payload(&sets.concat()));

    // (ii) Adam keeps m sets and tests the rest.
    let mut kept = rng.sample_indices(n, m);
    kept.sort_unstable();
    let tested: Vec<usize> = (0..n).filter(|j| !kept.contains(j)).collect();
    t.send(Direction::AdamToBabe, "test_request", json!({"sets": tested}));
    t.send(
        Direction::BabeToAdam,
        "reveal",
        json!(tested.iter().map(|&j| json!({"set": j, "permutation": declared[j]})).collect::<Vec<_>>()),
    );
    let mut tests_ok = true;
    for &j in &tested {
        let expected = set_kets(&declared[j]);
        let probs: Vec<f64> = sets[j].iter().zip(&expected).map(|(a, e)| a.overlap_sq(e)).collect();
        let pass = probs.iter().fold(true, |acc, &pr| rng.bernoulli(pr) & acc);
        tests_ok &= pass;
        t.check(format!("test_set[{j}]"), pass, format!("p={:.6}", probs.iter().product::<f64>()));
    }
    if !tests_ok {
        t.send(Direction::AdamToBabe, "abort", json!({"reason": "test sets failed"}));
        return Ok(t.finish());
    }

    // Commit.
    let b = rng.bit();
    t.committed_bit = b;
    let detector = matches!(adam, AdamStrategy::OptimalDetection).then(qbc2_optimal_detector);
    let mut committed = Vec::with_capacity(m);
    let mut names = Vec::with_capacity(m);
    let mut guesses: Vec<Option<Perm>> = Vec::with_capacity(m);
    for &j in &kept {
        let q = rng.index(4);
        match detector {
            Some(res) => {
                let psi = tensor_all(&sets[j])?;
                let k = rng.categorical(&outcome_probabilities(res, psi.amplitudes()));
                let guess = perms[k];
                committed.push(modulated(b, &angle_ket(S0_ANGLES[guess[q]])));
                guesses.push(Some(guess));
            }
            None => {
                committed.push(modulated(b, &sets[j][q]));
                guesses.push(None);
            }
        }
        names.push(q);
    }
    t.send(Direction::AdamToBabe, "commit", kets_payload(&committed));

    // (iii) Open.
    let opened = match adam {
        AdamStrategy::Honest => b,
        AdamStrategy::NameLie => {
            for q in names.iter_mut() {
                *q = (*q + 1 + rng.index(3)) % 4;
            }
            1 - b
        }
        AdamStrategy::OptimalDetection => {
            for (q, g) in names.iter_mut().zip(&guesses) {
                let g = g.expect("detector guesses");
                let target = partner(g[*q]);
                *q = g.iter().position(|&s| s == target).expect("permutation contains partner");
            }
            1 - b
        }
        _ => unreachable!("validated strategy"),
    };
    t.opened_bit = Some(opened);
    t.send(Direction::AdamToBabe, "open", json!({"bit": opened, "names": names}));
    for ((&j, &q), sent) in kept.iter().zip(&names).zip(&committed) {
        let expected = modulated(opened, &sets[j][q]);
        let pr = sent.overlap_sq(&expected);
        let pass = rng.bernoulli(pr);
        t.check(format!("commit_set[{j}]"), pass, format!("p={pr:.6}"));
    }
    Ok(t.finish())
}

/// Trace distance between the committed qubit's two conditional states for
/// every set of a run's declared permutations.
pub fn qbc2_concealment_gaps(declared: &[Perm]) -> Result<Vec<f64>> {
    declared
        .iter()
        .map(|p| {
            let set = set_kets(p);
            let r0 = qbc2_conditional_state(&set, 0)?;
            let r1 = qbc2_conditional_state(&set, 1)?;
            Ok(trace_norm(&(r0.matrix() - r1.matrix())))
        })
        .collect()
}
