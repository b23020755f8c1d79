//! The EPR attack: the committer keeps the purifying system H^A of the
//! evidence state and, after the commitment, rotates it with a local unitary
//! `U^A` to steer the evidence on H^B toward the other bit value.
//!
//! Conventions. Purifications live on `H^A ⊗ H^B` with the A index major and
//! coefficient matrix `C[i,k] = ⟨i,k|Φ⟩`, so `ρ^B = Cᵀ C̄`. After the
//! rotation, row `i` of `U^A C` is the unnormalized B-state
//! `√p̃_i |φ̃_i⟩` that remains when the committer measures A in the
//! computational basis and obtains `i`; the committer then announces index
//! `i` and the receiver verifies against the target state `|φ'_i⟩`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qstate::json::QStateJson;
use crate::qstate::linalg::{self, hermitian_part, CMatrix, CVector, C64};
use crate::qstate::{
    check_entries, fidelity, trace_norm, BipartiteState, DensityOperator, KrausChannel, Ket, Keep, Operator,
    StateEnsemble,
};

/// Purification pair, the committer's rotation and its predicted success.
#[derive(Clone, Debug)]
pub struct CheatPlan {
    pub phi0: BipartiteState,
    pub phi1: BipartiteState,
    pub ua: Operator,
    /// `|⟨Φ₁|(U^A ⊗ I)|Φ₀⟩|²`, a lower bound on the cheating probability.
    pub predicted_pac: f64,
}

#[derive(Serialize)]
struct CheatPlanJson {
    dims: (usize, usize),
    phi0: QStateJson,
    phi1: QStateJson,
    ua: QStateJson,
    predicted_pac: f64,
}

impl CheatPlan {
    /// `(U^A ⊗ I)|Φ₀⟩`.
    pub fn rotated(&self) -> Result<BipartiteState> {
        self.phi0.apply_local_a(&self.ua)
    }

    /// `|⟨Φ₁|(U^A ⊗ I)|Φ₀⟩|²` recomputed from the stored states.
    pub fn achieved_overlap(&self) -> Result<f64> {
        Ok(self.phi1.inner(&self.rotated()?)?.norm_sqr())
    }

    pub fn to_json(&self) -> Result<String> {
        let j = CheatPlanJson {
            dims: self.phi0.dims(),
            phi0: QStateJson::from(self.phi0.joint()),
            phi1: QStateJson::from(self.phi1.joint()),
            ua: QStateJson::from(&self.ua),
            predicted_pac: self.predicted_pac,
        };
        Ok(serde_json::to_string(&j)?)
    }
}

/// `|Φ_b⟩ = Σ_i √p_i |e_i⟩|φ_i⟩` for both ensembles, with `d_A` equal to
/// the larger ensemble size; the smaller ensemble is padded with
/// zero-probability members.
pub fn build_purifications(e0: &StateEnsemble, e1: &StateEnsemble) -> Result<(BipartiteState, BipartiteState)> {
    if e0.dim() != e1.dim() {
        return Err(Error::DimensionMismatch(format!("ensemble dims {} and {}", e0.dim(), e1.dim())));
    }
    let m = e0.len().max(e1.len());
    check_entries(m as u128 * e0.dim() as u128)?;
    Ok((purification_of(&e0.padded(m))?, purification_of(&e1.padded(m))?))
}

fn purification_of(e: &StateEnsemble) -> Result<BipartiteState> {
    let (m, d) = (e.len(), e.dim());
    let mut c = CMatrix::zeros(m, d);
    for (i, (p, k)) in e.items().iter().enumerate() {
        let w = C64::new(p.sqrt(), 0.0);
        for j in 0..d {
            c[(i, j)] = k.amplitudes()[j] * w;
        }
    }
    BipartiteState::from_coefficients(&c)
}

/// Optimal rotation for two given purifications of the same dimensions:
/// with `Z = C₀ C₁† = W S V†`, `U^A = V W†` maximizes
/// `|tr(C₁† U C₀)| = ‖Z‖₁`.
pub fn align_purifications(phi0: &BipartiteState, phi1: &BipartiteState) -> Result<CheatPlan> {
    if phi0.dims() != phi1.dims() {
        return Err(Error::DimensionMismatch("purifications differ in dimensions".into()));
    }
    let z = phi0.coefficients() * phi1.coefficients().adjoint();
    let dec = linalg::svd(&z);
    let ua = Operator::new(dec.v_adj.adjoint() * dec.u.adjoint())?;
    let mut plan = CheatPlan { phi0: phi0.clone(), phi1: phi1.clone(), ua, predicted_pac: 0.0 };
    plan.predicted_pac = plan.achieved_overlap()?;
    Ok(plan)
}

/// Uhlmann construction from the two marginals alone.
///
/// `|Φ₀⟩ = Σ_i √λ_i |i⟩|λ_i⟩` and `|Φ₁⟩ = Σ_i √μ_i |i⟩|μ_i⟩` use the
/// canonical descending eigenbases; `U` is the right-polar unitary of
/// `√ρ₀√ρ₁`, and `U^A = V₁ᵀ Uᵀ V̄₀` (columns of `V_b` are the eigenvectors)
/// pairs the A bases so that `⟨Φ₁|(U^A⊗I)|Φ₀⟩ = tr|√ρ₀√ρ₁| = √F`.
pub fn uhlmann_align(r0: &DensityOperator, r1: &DensityOperator) -> Result<CheatPlan> {
    if r0.dim() != r1.dim() {
        return Err(Error::DimensionMismatch("marginals differ in dimension".into()));
    }
    let d = r0.dim();
    check_entries(d as u128 * d as u128)?;
    let e0 = linalg::eigh_canonical(r0.matrix());
    let e1 = linalg::eigh_canonical(r1.matrix());
    let l0 = linalg::clamp_psd(&e0.values)?;
    let l1 = linalg::clamp_psd(&e1.values)?;
    let c0 = CMatrix::from_fn(d, d, |i, k| e0.vectors[(k, i)] * l0[i].sqrt());
    let c1 = CMatrix::from_fn(d, d, |i, k| e1.vectors[(k, i)] * l1[i].sqrt());
    let phi0 = BipartiteState::from_coefficients(&c0)?;
    let phi1 = BipartiteState::from_coefficients(&c1)?;
    let s0 = linalg::spectral_apply(&linalg::Eigh { values: l0, vectors: e0.vectors.clone() }, f64::sqrt);
    let s1 = linalg::spectral_apply(&linalg::Eigh { values: l1, vectors: e1.vectors.clone() }, f64::sqrt);
    let u = crate::qstate::polar_unitary(&(s0 * s1));
    let ua = e1.vectors.transpose() * u.matrix().transpose() * e0.vectors.map(|z| z.conj());
    let ua = Operator::new(ua)?;
    let mut plan = CheatPlan { phi0, phi1, ua, predicted_pac: 0.0 };
    plan.predicted_pac = plan.achieved_overlap()?;
    Ok(plan)
}

/// `Σ_i √p_i |e_i⟩ ⊗ U_i|input⟩`, the output of the controlled unitary
/// `Σ_i |e_i⟩⟨e_i| ⊗ U_i` on `|A⟩ ⊗ |input⟩` with `⟨e_i|A⟩ = √p_i`.
pub fn entangle_controlled(unitaries: &[Operator], amplitudes: &[f64], input: &Ket) -> Result<BipartiteState> {
    if unitaries.len() != amplitudes.len() || unitaries.is_empty() {
        return Err(Error::CountMismatch(format!("{} unitaries for {} amplitudes", unitaries.len(), amplitudes.len())));
    }
    let total: f64 = amplitudes.iter().map(|a| a * a).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidPrior(format!("squared amplitudes sum to {total}")));
    }
    let d = input.dim();
    check_entries(unitaries.len() as u128 * d as u128)?;
    let mut c = CMatrix::zeros(unitaries.len(), d);
    for (i, (u, a)) in unitaries.iter().zip(amplitudes).enumerate() {
        u.ensure_unitary(1e-9)?;
        let out = u.apply(input)?;
        for k in 0..d {
            c[(i, k)] = out[k] * *a;
        }
    }
    BipartiteState::from_coefficients(&c)
}

/// Rows of `(U^A ⊗ I)|Φ₀⟩`: the unnormalized branches `√p̃_i |φ̃_i⟩`.
pub fn branches(plan: &CheatPlan) -> Result<Vec<CVector>> {
    let c = plan.rotated()?.coefficients();
    Ok((0..c.nrows()).map(|i| c.row(i).transpose()).collect())
}

fn check_target(plan: &CheatPlan, target: &StateEnsemble) -> Result<()> {
    let (da, db) = plan.phi0.dims();
    if target.dim() != db {
        return Err(Error::DimensionMismatch(format!("target dim {} vs plan B-dim {}", target.dim(), db)));
    }
    if target.len() > da {
        return Err(Error::CountMismatch(format!("target has {} members but H^A has dimension {}", target.len(), da)));
    }
    Ok(())
}

/// `P^A_c = Σ_i p̃_i |⟨φ̃_i|φ'_i⟩|²` with identity pairing between the
/// measured index and the target member; indices beyond the target's length
/// are always rejected.
pub fn cheating_probability(plan: &CheatPlan, target: &StateEnsemble) -> Result<f64> {
    check_target(plan, target)?;
    let rows = branches(plan)?;
    let v: f64 = target
        .items()
        .iter()
        .zip(&rows)
        .map(|((_, phi), row)| phi.amplitudes().dotc(row).norm_sqr())
        .sum();
    Ok(v.clamp(0.0, 1.0))
}

/// Receiver-side processing: a channel `J_B` followed by the per-index
/// acceptance operators `X_i` (`0 ≤ X_i ≤ I`).
#[derive(Clone, Debug)]
pub struct VerificationModel {
    pub channel: KrausChannel,
    pub verifiers: Vec<CMatrix>,
}

impl VerificationModel {
    pub fn new(channel: KrausChannel, verifiers: Vec<CMatrix>) -> Result<Self> {
        let d = channel.dim_out();
        for x in &verifiers {
            if x.shape() != (d, d) {
                return Err(Error::DimensionMismatch("verifier does not match channel output".into()));
            }
            if linalg::hermiticity_defect(x) > 1e-9 {
                return Err(Error::InvalidState("verifier is not Hermitian".into()));
            }
            let ev = linalg::eigvalsh(&hermitian_part(x));
            if ev.first().is_some_and(|&v| v > 1.0 + 1e-9) || ev.last().is_some_and(|&v| v < -1e-9) {
                return Err(Error::InvalidState("verifier is not between 0 and I".into()));
            }
        }
        Ok(VerificationModel { channel, verifiers })
    }

    /// Identity channel with the projectors `|φ'_i⟩⟨φ'_i|`.
    pub fn projective(target: &StateEnsemble) -> Result<Self> {
        let verifiers = target.items().iter().map(|(_, k)| k.projector().into_matrix()).collect();
        VerificationModel::new(KrausChannel::identity(target.dim()), verifiers)
    }

    /// Verifiers that project onto the support of `J(|φ'_i⟩⟨φ'_i|)`, hence
    /// verify the honest states perfectly.
    pub fn support_projectors(channel: KrausChannel, target: &StateEnsemble) -> Result<Self> {
        let verifiers = target
            .items()
            .iter()
            .map(|(_, k)| {
                let out = channel.apply(k.projector().matrix())?;
                Ok(linalg::support_projector(&out, 1e-12))
            })
            .collect::<Result<Vec<_>>>()?;
        VerificationModel::new(channel, verifiers)
    }

    /// True iff `tr X_i J(|φ'_i⟩⟨φ'_i|) = 1` within 1e-9 for every member.
    pub fn is_perfect(&self, target: &StateEnsemble) -> Result<bool> {
        for ((_, k), x) in target.items().iter().zip(&self.verifiers) {
            let out = self.channel.apply(k.projector().matrix())?;
            if ((x * out).trace().re - 1.0).abs() > 1e-9 {
                return Ok(false);
            }
        }
        Ok(self.verifiers.len() >= target.len())
    }
}

/// `P^A_c = Σ_i p̃_i tr X_i J_B(|φ̃_i⟩⟨φ̃_i|)`.
pub fn cheating_probability_cp(plan: &CheatPlan, vm: &VerificationModel) -> Result<f64> {
    let (da, db) = plan.phi0.dims();
    if vm.channel.dim_in() != db {
        return Err(Error::DimensionMismatch("channel input does not match plan B-dim".into()));
    }
    if vm.verifiers.len() > da {
        return Err(Error::CountMismatch("more verifiers than committer outcomes".into()));
    }
    let rows = branches(plan)?;
    let mut total = 0.0;
    for (row, x) in rows.iter().zip(&vm.verifiers) {
        let out = vm.channel.apply(&(row * row.adjoint()))?;
        total += (x * out).trace().re;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Output of [`ip_chain_report`].
#[derive(Clone, Debug, Serialize)]
pub struct IpChainReport {
    /// `ε = ‖ρ₀ − ρ₁‖₁`.
    pub eps: f64,
    /// Receiver's optimal early guess, `1/2 + ε/4`.
    pub pbc: f64,
    /// Committer's cheating probability under the aligned plan.
    pub pac: f64,
    pub fidelity: f64,
    /// The guaranteed lower bound: `1 − ε` (plain) or `1 − 2√ε` (channel).
    pub bound: f64,
    pub bounds_hold: bool,
    /// `Σ_i p̃_i ‖|φ̃_i⟩⟨φ̃_i| − |φ'_i⟩⟨φ'_i|‖₁²`, at most `4ε`.
    pub branch_distance_sq_sum: f64,
    /// With a channel: `1 − Σ_i p̃_i ‖J(|φ̃_i⟩⟨φ̃_i| − |φ'_i⟩⟨φ'_i|)‖₁`.
    pub channel_bound: Option<f64>,
}

/// Slack allowed on the bound comparisons in [`ip_chain_report`].
pub const CHAIN_SLACK: f64 = 1e-9;

/// Builds both purifications, aligns them optimally and checks the bound
/// chain `P^A_c ≥ 1 − ε` (or `≥ 1 − 2√ε` when a verification model with a
/// channel is supplied).
pub fn ip_chain_report(e0: &StateEnsemble, e1: &StateEnsemble, vm: Option<&VerificationModel>) -> Result<IpChainReport> {
    let (phi0, phi1) = build_purifications(e0, e1)?;
    let r0 = phi0.reduced(Keep::B);
    let r1 = phi1.reduced(Keep::B);
    let eps = trace_norm(&(r0.matrix() - r1.matrix()));
    let fid = fidelity(&r0, &r1)?;
    let plan = align_purifications(&phi0, &phi1)?;
    let target = e1.padded(phi0.dims().0);
    let rows = branches(&plan)?;
    let mut dist_sq = 0.0;
    let mut chain_sum = 0.0;
    for ((_, phi), row) in target.items().iter().zip(&rows) {
        let pt = row.norm_squared();
        if pt <= 0.0 {
            continue;
        }
        let diff = (row * row.adjoint()).scale(1.0 / pt) - phi.projector().into_matrix();
        let tn = trace_norm(&diff);
        dist_sq += pt * tn * tn;
        if let Some(vm) = vm {
            chain_sum += pt * trace_norm(&vm.channel.apply(&diff)?);
        }
    }
    let (pac, bound, channel_bound) = match vm {
        None => (cheating_probability(&plan, &target)?, 1.0 - eps, None),
        Some(vm) => (cheating_probability_cp(&plan, vm)?, 1.0 - 2.0 * eps.sqrt(), Some(1.0 - chain_sum)),
    };
    let chain_ok = channel_bound.is_none_or(|cb| pac >= cb - CHAIN_SLACK && cb >= bound - CHAIN_SLACK);
    Ok(IpChainReport {
        eps,
        pbc: 0.5 + eps / 4.0,
        pac,
        fidelity: fid,
        bound,
        bounds_hold: pac >= bound - CHAIN_SLACK && dist_sq <= 4.0 * eps + CHAIN_SLACK && chain_ok,
        branch_distance_sq_sum: dist_sq,
        channel_bound,
    })
}

/// Gap `Σ α_i|λ_i|² − |Σ α_iλ_i|²`, nonnegative for probability vectors α.
pub fn convexity_gap(alpha: &[f64], lambda: &[C64]) -> f64 {
    let lhs: f64 = alpha.iter().zip(lambda).map(|(a, l)| a * l.norm_sqr()).sum();
    let rhs: C64 = alpha.iter().zip(lambda).map(|(a, l)| l * *a).sum();
    lhs - rhs.norm_sqr()
}
