//! Quantum hypothesis testing: the Helstrom bound for two hypotheses and a
//! certified fixed-point optimizer for M hypotheses.
//!
//! The M-ary optimizer iterates
//! `Π_j ← Γ⁻¹ p_jρ_j Π_j p_jρ_j Γ⁻¹` with `Γ² = Σ_j p_jρ_j Π_j p_jρ_j`,
//! seeded by the pretty-good (square-root) measurement. Each iterate `Π` is
//! accompanied by a dual-feasible operator
//! `Y = Herm(Σ_j p_jρ_jΠ_j) + c·I`, `c = max(0, max_j λ_max(p_jρ_j − Herm(Σ p_iρ_iΠ_i)))`,
//! so `tr Y` is an upper bound on the optimum and `tr Y − P_CM = c·d` is a
//! rigorous optimality gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::json::QStateJson;
use crate::qstate::linalg::{self, hermitian_part, CMatrix};
use crate::qstate::{DensityOperator, Ket, STATE_TOL};

/// Tolerance on POM completeness and positivity.
pub const POM_TOL: f64 = 1e-9;
/// Eigenvalues of `p₀ρ₀ − p₁ρ₁` at or below this go to `Π₁`.
pub const HELSTROM_ZERO: f64 = 1e-13;
/// Largest entry of `ρ_iρ_j` still counted as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Priors and states of an M-ary hypothesis test.
#[derive(Clone, Debug)]
pub struct HypothesisSet {
    priors: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl HypothesisSet {
    pub fn new(priors: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if priors.len() != states.len() {
            return Err(Error::CountMismatch(format!("{} priors for {} states", priors.len(), states.len())));
        }
        if states.is_empty() {
            return Err(Error::InvalidParameter("hypothesis set is empty".into()));
        }
        validate_priors(&priors)?;
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("hypothesis states differ in dimension".into()));
        }
        Ok(HypothesisSet { priors, states })
    }

    pub fn uniform(states: Vec<DensityOperator>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        HypothesisSet::new(vec![w; states.len()], states)
    }

    /// Equiprobable pure-state hypotheses.
    pub fn uniform_pure(kets: &[Ket]) -> Result<Self> {
        HypothesisSet::uniform(kets.iter().map(DensityOperator::from_pure).collect())
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    fn weighted(&self) -> Vec<CMatrix> {
        self.priors.iter().zip(&self.states).map(|(p, s)| s.matrix().scale(*p)).collect()
    }
}

fn validate_priors(priors: &[f64]) -> Result<()> {
    if priors.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidPrior(format!("priors {priors:?} outside [0,1]")));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidPrior(format!("priors sum to {total}")));
    }
    Ok(())
}

fn check_prior(p0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p0) {
        Ok(())
    } else {
        Err(Error::InvalidPrior(format!("p0 = {p0} outside [0,1]")))
    }
}

/// Two-outcome measurement `{Π₀, Π₁ = I − Π₀}`.
#[derive(Clone, Debug)]
pub struct BinaryPom {
    pub pi0: CMatrix,
    pub pi1: CMatrix,
}

/// M-outcome measurement.
#[derive(Clone, Debug)]
pub struct MaryPom {
    elements: Vec<CMatrix>,
}

impl MaryPom {
    /// Validates `Σ Π_i = I` and `Π_i ≥ 0` to [`POM_TOL`].
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidParameter("empty POM".into()))?;
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.shape() != (d, d) {
                return Err(Error::DimensionMismatch("POM elements differ in dimension".into()));
            }
            if linalg::hermiticity_defect(e) > POM_TOL {
                return Err(Error::InvalidState("POM element is not Hermitian".into()));
            }
            let lmin = linalg::eigvalsh(&hermitian_part(e)).last().copied().unwrap_or(0.0);
            if lmin < -POM_TOL {
                return Err(Error::NotPsd(lmin));
            }
            sum += e;
        }
        let defect = linalg::max_abs_entry(&(sum - CMatrix::identity(d, d)));
        if defect > POM_TOL {
            return Err(Error::InvalidState(format!("POM elements sum to I only within {defect:e}")));
        }
        Ok(MaryPom { elements })
    }

    /// `Π_i = I/M`.
    pub fn uniform_guess(dim: usize, m: usize) -> Self {
        MaryPom { elements: vec![CMatrix::identity(dim, dim).scale(1.0 / m as f64); m] }
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

impl From<BinaryPom> for MaryPom {
    fn from(b: BinaryPom) -> Self {
        MaryPom { elements: vec![b.pi0, b.pi1] }
    }
}

/// `Re tr(AB)` without forming the product.
fn re_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Optimal two-hypothesis success probability
/// `1/2 + ‖p₀ρ₀ − p₁ρ₁‖₁/2` and the measurement achieving it: `Π₀`
/// projects onto the positive eigenspace of `p₀ρ₀ − p₁ρ₁`, the zero
/// eigenspace belongs to `Π₁`.
pub fn helstrom_binary(r0: &DensityOperator, r1: &DensityOperator, p0: f64) -> Result<(f64, BinaryPom)> {
    check_prior(p0)?;
    if r0.dim() != r1.dim() {
        return Err(Error::DimensionMismatch("hypotheses differ in dimension".into()));
    }
    let p1 = 1.0 - p0;
    let gamma = hermitian_part(&(r0.matrix().scale(p0) - r1.matrix().scale(p1)));
    let e = linalg::eigh(&gamma);
    let pi0 = linalg::spectral_apply(&e, |v| if v > HELSTROM_ZERO { 1.0 } else { 0.0 });
    let d = r0.dim();
    let pi1 = CMatrix::identity(d, d) - &pi0;
    let tn: f64 = e.values.iter().map(|v| v.abs()).sum();
    let pbar = (0.5 + tn / 2.0).clamp(p0.max(p1), 1.0);
    Ok((pbar, BinaryPom { pi0, pi1 }))
}

/// Closed form for pure hypotheses:
/// `1/2 + √(1 − 4p₀p₁|⟨ψ₀|ψ₁⟩|²)/2`.
pub fn pure_binary(psi0: &Ket, psi1: &Ket, p0: f64) -> Result<f64> {
    check_prior(p0)?;
    if psi0.dim() != psi1.dim() {
        return Err(Error::DimensionMismatch("hypotheses differ in dimension".into()));
    }
    let ov = psi0.overlap_sq(psi1).min(1.0);
    Ok(0.5 + 0.5 * (1.0 - 4.0 * p0 * (1.0 - p0) * ov).max(0.0).sqrt())
}

/// `P_CM = Σ p_i tr(Π_i ρ_i)`.
pub fn evaluate_pom(h: &HypothesisSet, pom: &MaryPom) -> Result<f64> {
    if pom.len() != h.len() {
        return Err(Error::CountMismatch(format!("{} POM elements for {} hypotheses", pom.len(), h.len())));
    }
    if pom.elements[0].nrows() != h.dim() {
        return Err(Error::DimensionMismatch("POM and hypotheses differ in dimension".into()));
    }
    let v: f64 = h
        .priors
        .iter()
        .zip(&h.states)
        .zip(&pom.elements)
        .map(|((p, s), e)| p * re_trace_product(e, s.matrix()))
        .sum();
    Ok(v.clamp(0.0, 1.0))
}

/// Pretty-good measurement `Π_i = Γ^{-1/2} p_iρ_i Γ^{-1/2}`, `Γ = Σ p_iρ_i`;
/// the projector onto the kernel of `Γ` is added to `Π₀` so the elements
/// sum to the identity.
pub fn pretty_good_measurement(h: &HypothesisSet) -> MaryPom {
    let w = h.weighted();
    let d = h.dim();
    let mut gamma = CMatrix::zeros(d, d);
    for m in &w {
        gamma += m;
    }
    let gamma = hermitian_part(&gamma);
    let e = linalg::eigh(&gamma);
    let scale = e.values.first().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let cut = 1e-12 * scale;
    let isq = linalg::spectral_apply(&e, |v| if v > cut { 1.0 / v.sqrt() } else { 0.0 });
    let kernel = linalg::spectral_apply(&e, |v| if v > cut { 0.0 } else { 1.0 });
    let mut elements: Vec<CMatrix> = w.iter().map(|m| hermitian_part(&(&isq * m * &isq))).collect();
    elements[0] += kernel;
    MaryPom { elements }
}

/// Result of [`optimize_mary`].
#[derive(Clone, Debug)]
pub struct MaryResult {
    /// Best success probability found.
    pub pcm: f64,
    pub pom: MaryPom,
    /// Optimality gap `upper_bound − pcm ≥ 0`.
    pub certificate: f64,
    /// Dual upper bound on the optimum, capped at 1.
    pub upper_bound: f64,
    /// Value of the pretty-good seed.
    pub pgm_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best-so-far value after each iteration (nondecreasing).
    pub history: Vec<f64>,
}

/// Dual certificate for a POM: `(P_CM, upper bound)`.
pub fn dual_bound(h: &HypothesisSet, pom: &MaryPom) -> (f64, f64) {
    let w = h.weighted();
    let d = h.dim();
    let mut y = CMatrix::zeros(d, d);
    for (m, e) in w.iter().zip(&pom.elements) {
        y += m * e;
    }
    let y = hermitian_part(&y);
    let pcm = linalg::trace(&y).re;
    let shift = w
        .iter()
        .map(|m| linalg::eigvalsh(&hermitian_part(&(m - &y)))[0])
        .fold(0.0f64, f64::max);
    (pcm, (pcm + shift * d as f64).min(1.0))
}

/// Certified M-ary optimizer; see the module documentation. Never fails
/// on non-convergence: the best iterate is returned with its certificate
/// and `converged = false`.
pub fn optimize_mary(h: &HypothesisSet, tol: f64, max_iter: usize) -> Result<MaryResult> {
    if h.len() < 2 {
        return Err(Error::InvalidParameter("need at least two hypotheses".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let w = h.weighted();
    let d = h.dim();
    let mut pom = pretty_good_measurement(h);
    let (pgm_value, pgm_upper) = dual_bound(h, &pom);
    let mut best = (pgm_value, pgm_upper, pom.clone());
    // Always guessing the likeliest hypothesis is a feasible baseline the
    // pretty-good measurement does not always beat.
    let top = (0..h.len()).fold(0, |b, i| if h.priors[i] > h.priors[b] { i } else { b });
    let mut guess = vec![CMatrix::zeros(d, d); h.len()];
    guess[top] = CMatrix::identity(d, d);
    let guess = MaryPom { elements: guess };
    let (guess_value, guess_upper) = dual_bound(h, &guess);
    best.1 = best.1.min(guess_upper);
    if guess_value > best.0 {
        best.0 = guess_value;
        best.2 = guess;
    }
    let mut history = vec![pgm_value];
    let mut iterations = 0;
    let mut converged = best.1 - best.0 < tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let products: Vec<CMatrix> = w.iter().zip(&pom.elements).map(|(m, e)| m * e * m).collect();
        let mut g2 = CMatrix::zeros(d, d);
        for p in &products {
            g2 += p;
        }
        let e = linalg::eigh(&hermitian_part(&g2));
        let scale = e.values.first().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let cut = 1e-14 * scale;
        let ginv = linalg::spectral_apply(&e, |v| if v > cut { 1.0 / v.sqrt() } else { 0.0 });
        let kernel = linalg::spectral_apply(&e, |v| if v > cut { 0.0 } else { 1.0 });
        let mut next: Vec<CMatrix> = products.iter().map(|p| hermitian_part(&(&ginv * p * &ginv))).collect();
        next[0] += kernel;
        pom = MaryPom { elements: next };
        let (val, upper) = dual_bound(h, &pom);
        if val > best.0 {
            best.0 = val;
            best.2 = pom.clone();
        }
        best.1 = best.1.min(upper);
        history.push(best.0);
        converged = best.1 - best.0 < tol;
    }
    let (pcm, upper, pom) = best;
    let pcm = pcm.clamp(0.0, 1.0);
    Ok(MaryResult {
        pcm,
        certificate: (upper - pcm).max(0.0),
        upper_bound: upper,
        pom,
        pgm_value,
        iterations,
        converged,
        history,
    })
}

/// True iff every pair of distinct hypotheses has `ρ_iρ_j = 0` (largest
/// entry below [`ORTHOGONALITY_TOL`]).
pub fn perfect_discrimination_check(h: &HypothesisSet) -> bool {
    let s = &h.states;
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            if linalg::max_abs_entry(&(s[i].matrix() * s[j].matrix())) >= ORTHOGONALITY_TOL {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisSetJson {
    pub priors: Vec<f64>,
    pub states: Vec<QStateJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PomJson {
    pub elements: Vec<QStateJson>,
}

impl From<&HypothesisSet> for HypothesisSetJson {
    fn from(h: &HypothesisSet) -> Self {
        HypothesisSetJson { priors: h.priors.clone(), states: h.states.iter().map(QStateJson::from).collect() }
    }
}

impl HypothesisSetJson {
    /// States may be given as kets (taken as pure hypotheses) or as
    /// density operators.
    pub fn decode(&self) -> Result<HypothesisSet> {
        let states = self
            .states
            .iter()
            .map(|s| match s.decode()? {
                crate::qstate::json::QStatePayload::Ket(k) => Ok(DensityOperator::from_pure(&k)),
                crate::qstate::json::QStatePayload::Operator(m) => DensityOperator::new(m),
            })
            .collect::<Result<Vec<_>>>()?;
        HypothesisSet::new(self.priors.clone(), states)
    }
}

impl From<&MaryPom> for PomJson {
    fn from(p: &MaryPom) -> Self {
        PomJson { elements: p.elements.iter().map(QStateJson::from_matrix).collect() }
    }
}

impl PomJson {
    pub fn decode(&self) -> Result<MaryPom> {
        MaryPom::new(self.elements.iter().map(QStateJson::to_matrix).collect::<Result<Vec<_>>>()?)
    }
}

/// Success probability of the projective measurement `{|v⟩⟨v|, I − |v⟩⟨v|}`
/// for a qubit pair, used as a brute-force cross-check.
pub fn qubit_projective_success(r0: &DensityOperator, r1: &DensityOperator, p0: f64, v: &Ket) -> f64 {
    let e0 = r0.expectation(v);
    let e1 = r1.expectation(v);
    p0 * e0 + (1.0 - p0) * (1.0 - e1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_states_give_half() {
        let r = DensityOperator::maximally_mixed(2);
        let (p, _) = helstrom_binary(&r, &r, 0.5).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pure_states_are_perfect() {
        let a = Ket::basis(3, 0);
        let b = Ket::basis(3, 2);
        assert!((pure_binary(&a, &b, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let h = HypothesisSet::uniform_pure(&[a, b, Ket::basis(3, 1)]).unwrap();
        assert!(perfect_discrimination_check(&h));
        let r = optimize_mary(&h, 1e-9, 100).unwrap();
        assert!(r.pcm > 1.0 - 1e-12 && r.certificate < 1e-9);
    }

    #[test]
    fn uniform_guess_scores_one_over_m() {
        let h = HypothesisSet::uniform_pure(&[Ket::basis(2, 0), Ket::basis(2, 1), Ket::basis(2, 0)]).unwrap();
        let v = evaluate_pom(&h, &MaryPom::uniform_guess(2, 3)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert!(!perfect_discrimination_check(&h));
    }

    #[test]
    fn invalid_prior_rejected() {
        let r = DensityOperator::maximally_mixed(2);
        assert!(matches!(helstrom_binary(&r, &r, 1.5), Err(Error::InvalidPrior(_))));
    }
}
