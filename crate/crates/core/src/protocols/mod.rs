//! Two-party commitment protocols as seeded state machines.
//!
//! Every run takes validated [`ProtocolParams`], one strategy per party and
//! produces a [`ProtocolTranscript`]. Runs are pure functions of their inputs:
//! all randomness comes from a [`rng::ProtocolRng`] seeded with
//! `params.seed`, so identical inputs give bit-identical transcripts.
//!
//! Qubit encoding: the real polarization angle θ is the ket `(cos θ, sin θ)`;
//! multi-qubit kets are tensor products with qubit 0 as the most significant
//! index.

pub mod qbc0;
pub mod qbc01;
pub mod qbc1;
pub mod qbc2;
pub mod qbc3;
pub mod rng;
pub mod strategy;
pub mod transcript;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::linalg::{CMatrix, CVector, C64};
use crate::qstate::{Ket, Operator};
pub use strategy::{AdamStrategy, BabeStrategy, Role};
pub use transcript::{Check, Direction, Message, ProtocolTranscript, Verdict};

/// Largest `n` accepted by runs that hold an entangled committer state
/// (`2^{n−1} × 2^n` amplitudes).
pub const MAX_ENTANGLED_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolId {
    Qbc0,
    Qbc01,
    Qbc1,
    Qbc2,
    Qbc3,
}

impl ProtocolId {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Qbc0 => "qbc0",
            ProtocolId::Qbc01 => "qbc01",
            ProtocolId::Qbc1 => "qbc1",
            ProtocolId::Qbc2 => "qbc2",
            ProtocolId::Qbc3 => "qbc3",
        }
    }
}

impl std::fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qbc0" => Ok(ProtocolId::Qbc0),
            "qbc01" => Ok(ProtocolId::Qbc01),
            "qbc1" => Ok(ProtocolId::Qbc1),
            "qbc2" => Ok(ProtocolId::Qbc2),
            "qbc3" => Ok(ProtocolId::Qbc3),
            other => Err(Error::InvalidParameter(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Run parameters. Fields that the chosen protocol does not use must be
/// absent.
///
/// | protocol | required | optional |
/// |---|---|---|
/// | qbc0 | `n`, `overlap` | |
/// | qbc01 | `n`, `eta`, `separation` | |
/// | qbc1 | `n`, `overlap` (= λ) | |
/// | qbc2 | `n`, `m` | `N` (cheating sets under test) |
/// | qbc3 | `n`, `N`, `overlap` | `literal_rule` |
///
/// `overlap` is `|⟨φ|φ'⟩|`; `separation` is `|α − α'|` for the coherent
/// pair `α = −α' = separation/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub protocol: ProtocolId,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_rule: Option<bool>,
    pub seed: u64,
}

impl ProtocolParams {
    pub fn new(protocol: ProtocolId, n: usize, seed: u64) -> Self {
        ProtocolParams {
            protocol,
            n,
            m: None,
            big_n: None,
            overlap: None,
            eta: None,
            separation: None,
            literal_rule: None,
            seed,
        }
    }

    pub fn qbc0(n: usize, overlap: f64, seed: u64) -> Self {
        ProtocolParams { overlap: Some(overlap), ..Self::new(ProtocolId::Qbc0, n, seed) }
    }

    pub fn qbc01(n: usize, eta: f64, separation: f64, seed: u64) -> Self {
        ProtocolParams { eta: Some(eta), separation: Some(separation), ..Self::new(ProtocolId::Qbc01, n, seed) }
    }

    pub fn qbc1(n: usize, lambda: f64, seed: u64) -> Self {
        ProtocolParams { overlap: Some(lambda), ..Self::new(ProtocolId::Qbc1, n, seed) }
    }

    pub fn qbc2(n: usize, m: usize, seed: u64) -> Self {
        ProtocolParams { m: Some(m), ..Self::new(ProtocolId::Qbc2, n, seed) }
    }

    pub fn qbc3(n: usize, big_n: usize, overlap: f64, seed: u64) -> Self {
        ProtocolParams { big_n: Some(big_n), overlap: Some(overlap), ..Self::new(ProtocolId::Qbc3, n, seed) }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ProtocolParams { seed, ..self.clone() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: ProtocolParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Checks ranges and that exactly the relevant fields are present.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        let present = [
            ("m", self.m.is_some()),
            ("N", self.big_n.is_some()),
            ("overlap", self.overlap.is_some()),
            ("eta", self.eta.is_some()),
            ("separation", self.separation.is_some()),
            ("literal_rule", self.literal_rule.is_some()),
        ];
        let (required, optional): (&[&str], &[&str]) = match self.protocol {
            ProtocolId::Qbc0 => (&["overlap"], &[]),
            ProtocolId::Qbc01 => (&["eta", "separation"], &[]),
            ProtocolId::Qbc1 => (&["overlap"], &[]),
            ProtocolId::Qbc2 => (&["m"], &["N"]),
            ProtocolId::Qbc3 => (&["N", "overlap"], &["literal_rule"]),
        };
        for (name, is_present) in present {
            let needed = required.contains(&name);
            let allowed = needed || optional.contains(&name);
            if needed && !is_present {
                return bad(format!("{} requires parameter {name}", self.protocol));
            }
            if is_present && !allowed {
                return bad(format!("parameter {name} does not apply to {}", self.protocol));
            }
        }
        if let Some(o) = self.overlap {
            let ok = match self.protocol {
                ProtocolId::Qbc1 => o > 0.0 && o <= 1.0,
                _ => (0.0..1.0).contains(&o),
            };
            if !ok {
                return bad(format!("overlap {o} out of range for {}", self.protocol));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(format!("eta {eta} outside (0,1]"));
            }
        }
        if let Some(s) = self.separation {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("separation {s} must be positive"));
            }
        }
        if let Some(m) = self.m {
            if m == 0 || m > self.n {
                return bad(format!("m = {m} must satisfy 1 ≤ m ≤ n = {}", self.n));
            }
        }
        if let Some(nn) = self.big_n {
            if nn > self.n {
                return bad(format!("N = {nn} exceeds n = {}", self.n));
            }
        }
        Ok(())
    }

    pub(crate) fn overlap_value(&self) -> f64 {
        self.overlap.expect("validated")
    }
}

/// Runs one commitment of whichever protocol `p` names.
pub fn run_protocol(p: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<ProtocolTranscript> {
    match p.protocol {
        ProtocolId::Qbc0 => qbc0::qbc0_run(p, adam, babe),
        ProtocolId::Qbc01 => qbc01::qbc01_run(p, adam, babe),
        ProtocolId::Qbc1 => qbc1::qbc1_run(p, adam, babe),
        ProtocolId::Qbc2 => qbc2::qbc2_run(p, adam, babe),
        ProtocolId::Qbc3 => qbc3::qbc3_run(p, adam, babe),
    }
}

// ---------------------------------------------------------------------------
// Qubit helpers
// ---------------------------------------------------------------------------

/// `(cos θ, sin θ)`.
pub fn angle_ket(theta: f64) -> Ket {
    Ket::new_unchecked(CVector::from_vec(vec![C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)]))
}

/// Real rotation by `delta`: `(cos, sin) ↦ (cos(θ+δ), sin(θ+δ))`.
pub fn rotation(delta: f64) -> Operator {
    let (s, c) = delta.sin_cos();
    Operator::new_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
    ))
}

/// The pair `|φ⟩ = (1, 0)`, `|φ'⟩ = (o, √(1−o²))` with `⟨φ|φ'⟩ = o`.
pub fn overlap_pair(overlap: f64) -> (Ket, Ket) {
    let o = overlap.clamp(0.0, 1.0);
    (angle_ket(0.0), angle_ket(o.acos()))
}

/// All bit strings of length `n` with the given parity, ordered by the
/// binary value of their first `n − 1` bits (bit 0 most significant).
pub fn parity_sequences(n: usize, parity: u8) -> Vec<Vec<u8>> {
    let free = n - 1;
    (0..(1usize << free))
        .map(|label| {
            let mut s: Vec<u8> = (0..free).map(|l| ((label >> (free - 1 - l)) & 1) as u8).collect();
            let p = s.iter().fold(0u8, |acc, &b| acc ^ b);
            s.push(p ^ (parity & 1));
            s
        })
        .collect()
}

/// Index of a sequence within [`parity_sequences`] (its first `n − 1` bits
/// read as a binary number).
pub fn sequence_label(seq: &[u8]) -> usize {
    seq[..seq.len() - 1].iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

pub fn parity(seq: &[u8]) -> u8 {
    seq.iter().fold(0u8, |acc, &b| acc ^ (b & 1))
}

/// Draws `n − 1` uniform bits and appends the bit fixing the parity.
pub fn sample_parity_sequence(n: usize, parity_bit: u8, rng: &mut rng::ProtocolRng) -> Vec<u8> {
    let mut s: Vec<u8> = (0..n - 1).map(|_| rng.bit()).collect();
    let p = parity(&s);
    s.push(p ^ (parity_bit & 1));
    s
}

/// Applies a 2×2 operator to qubit `l` of the B factor of a coefficient
/// matrix `C[a, k]` over `n` qubits.
pub(crate) fn apply_qubit_op_b(c: &mut CMatrix, l: usize, n: usize, op: &CMatrix) {
    let bit = 1usize << (n - 1 - l);
    let rows = c.nrows();
    for k in 0..c.ncols() {
        if k & bit != 0 {
            continue;
        }
        let k1 = k | bit;
        for a in 0..rows {
            let x0 = c[(a, k)];
            let x1 = c[(a, k1)];
            c[(a, k)] = op[(0, 0)] * x0 + op[(0, 1)] * x1;
            c[(a, k1)] = op[(1, 0)] * x0 + op[(1, 1)] * x1;
        }
    }
}

/// Sequential projective checks of each qubit of a dense `n`-qubit vector
/// against the expected single-qubit states. After each check the state is
/// collapsed onto the observed outcome. Returns one pass flag per qubit.
pub fn verify_sequential(state: &CVector, expected: &[Ket], rng: &mut rng::ProtocolRng) -> Vec<bool> {
    verify_sequential_masked(state, expected, &[], rng).into_iter().map(|(_, pass)| pass).collect()
}

/// [`verify_sequential`] restricted to the qubits not listed in `skip`;
/// returns `(qubit, passed)` pairs in qubit order.
pub fn verify_sequential_masked(
    state: &CVector,
    expected: &[Ket],
    skip: &[usize],
    rng: &mut rng::ProtocolRng,
) -> Vec<(usize, bool)> {
    let n = expected.len();
    let mut c = CMatrix::from_fn(1, state.len(), |_, k| state[k]);
    let norm = c.norm();
    c /= C64::new(norm, 0.0);
    let mut out = Vec::with_capacity(n);
    for (l, e) in expected.iter().enumerate() {
        if skip.contains(&l) {
            continue;
        }
        let p = e.amplitudes() * e.amplitudes().adjoint();
        let mut yes = c.clone();
        apply_qubit_op_b(&mut yes, l, n, &p);
        let prob = yes.norm_squared().clamp(0.0, 1.0);
        let pass = rng.bernoulli(prob);
        if pass {
            c = yes / C64::new(prob.sqrt(), 0.0);
        } else {
            apply_qubit_op_b(&mut c, l, n, &(CMatrix::identity(2, 2) - &p));
            let r = c.norm();
            if r > 0.0 {
                c /= C64::new(r, 0.0);
            }
        }
        out.push((l, pass));
    }
    out
}
