//! Multimode coherent states in a nonorthogonal frame.
//!
//! A vector is a finite superposition `Σ_j c_j |v_j⟩` of product coherent
//! states `|v_j⟩ = |α_{j,1}⟩ ⊗ … ⊗ |α_{j,n}⟩`; an operator is
//! `Σ_{jk} C_{jk} |v_j⟩⟨v_k|`. Everything is evaluated from the Gram matrix
//! `G_{jk} = ⟨v_j|v_k⟩`, which has a closed form, so no Fock truncation is
//! involved.
//!
//! Pure loss with transmissivity η acts in closed form:
//! `|v_j⟩⟨v_k| ↦ ⟨√(1−η) v_k | √(1−η) v_j⟩ · |√η v_j⟩⟨√η v_k|`.

use crate::error::{Error, Result};
use crate::qstate::linalg::{self, CMatrix, C64};

/// Smallest admissible `λ_min(G)/λ_max(G)` before a frame is declared
/// numerically singular.
pub const FRAME_CONDITION_FLOOR: f64 = 1e-12;

/// `⟨α|β⟩ = exp(−(|α|² + |β|²)/2 + ᾱβ)`.
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    (C64::new(-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0, 0.0) + alpha.conj() * beta).exp()
}

/// Overlap of two product coherent states given mode by mode.
pub fn product_overlap(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| coherent_overlap(x, y)).product()
}

/// Gram matrix `G_{jk} = ⟨v_j|v_k⟩`.
pub fn gram(frame: &[Vec<C64>]) -> CMatrix {
    let n = frame.len();
    CMatrix::from_fn(n, n, |j, k| product_overlap(&frame[j], &frame[k]))
}

fn scale_frame(frame: &[Vec<C64>], s: f64) -> Vec<Vec<C64>> {
    frame.iter().map(|v| v.iter().map(|&a| a * s).collect()).collect()
}

/// Normalized superposition of product coherent states.
#[derive(Clone, Debug)]
pub struct CoherentSuperposition {
    coeffs: Vec<C64>,
    frame: Vec<Vec<C64>>,
}

impl CoherentSuperposition {
    /// Validates a common mode count and a Gram-weighted norm of 1 ± 1e-8.
    pub fn new(terms: Vec<(C64, Vec<C64>)>) -> Result<Self> {
        let s = Self::unnormalized(terms)?;
        let n2 = s.norm_sqr();
        if (n2.sqrt() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("coherent superposition has norm {}", n2.sqrt())));
        }
        Ok(s)
    }

    /// Rescales the coefficients to unit norm.
    pub fn normalized(terms: Vec<(C64, Vec<C64>)>) -> Result<Self> {
        let mut s = Self::unnormalized(terms)?;
        let n = s.norm_sqr().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("coherent superposition has zero norm".into()));
        }
        for c in &mut s.coeffs {
            *c /= n;
        }
        Ok(s)
    }

    fn unnormalized(terms: Vec<(C64, Vec<C64>)>) -> Result<Self> {
        let modes = terms.first().map(|t| t.1.len()).ok_or_else(|| Error::InvalidState("empty superposition".into()))?;
        if terms.iter().any(|t| t.1.len() != modes) {
            return Err(Error::DimensionMismatch("terms differ in mode count".into()));
        }
        let (coeffs, frame) = terms.into_iter().unzip();
        Ok(CoherentSuperposition { coeffs, frame })
    }

    /// Single product coherent state.
    pub fn product(modes: Vec<C64>) -> Self {
        CoherentSuperposition { coeffs: vec![C64::new(1.0, 0.0)], frame: vec![modes] }
    }

    pub fn modes(&self) -> usize {
        self.frame[0].len()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn frame(&self) -> &[Vec<C64>] {
        &self.frame
    }

    pub fn norm_sqr(&self) -> f64 {
        let g = gram(&self.frame);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.coeffs.len() {
            for k in 0..self.coeffs.len() {
                acc += self.coeffs[j].conj() * g[(j, k)] * self.coeffs[k];
            }
        }
        acc.re
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &CoherentSuperposition) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (cj, vj) in self.coeffs.iter().zip(&self.frame) {
            for (ck, vk) in other.coeffs.iter().zip(&other.frame) {
                acc += cj.conj() * ck * product_overlap(vj, vk);
            }
        }
        acc
    }

    /// `|self⟩⟨self|` in the frame of `self`.
    pub fn projector(&self) -> FrameOperator {
        let n = self.coeffs.len();
        FrameOperator {
            frame: self.frame.clone(),
            coeffs: CMatrix::from_fn(n, n, |j, k| self.coeffs[j] * self.coeffs[k].conj()),
        }
    }
}

/// Operator `Σ_{jk} C_{jk} |v_j⟩⟨v_k|` over product coherent states.
#[derive(Clone, Debug)]
pub struct FrameOperator {
    frame: Vec<Vec<C64>>,
    coeffs: CMatrix,
}

impl FrameOperator {
    pub fn new(frame: Vec<Vec<C64>>, coeffs: CMatrix) -> Result<Self> {
        if coeffs.shape() != (frame.len(), frame.len()) {
            return Err(Error::DimensionMismatch("frame/coefficient size mismatch".into()));
        }
        Ok(FrameOperator { frame, coeffs })
    }

    pub fn frame(&self) -> &[Vec<C64>] {
        &self.frame
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coeffs
    }

    /// Pure loss with transmissivity `eta` on every mode.
    pub fn apply_loss(&self, eta: f64) -> Result<FrameOperator> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("transmissivity {eta} outside [0,1]")));
        }
        let lost = scale_frame(&self.frame, (1.0 - eta).sqrt());
        let n = self.frame.len();
        let coeffs = CMatrix::from_fn(n, n, |j, k| self.coeffs[(j, k)] * product_overlap(&lost[k], &lost[j]));
        Ok(FrameOperator { frame: scale_frame(&self.frame, eta.sqrt()), coeffs })
    }

    /// `tr O = Σ C_{jk} ⟨v_k|v_j⟩`.
    pub fn trace(&self) -> C64 {
        let n = self.frame.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += self.coeffs[(j, k)] * product_overlap(&self.frame[k], &self.frame[j]);
            }
        }
        acc
    }

    /// `⟨w|O|w⟩`.
    pub fn expectation(&self, w: &CoherentSuperposition) -> C64 {
        let amp: Vec<C64> = self
            .frame
            .iter()
            .map(|v| {
                w.coefficients()
                    .iter()
                    .zip(w.frame())
                    .map(|(c, u)| c.conj() * product_overlap(u, v))
                    .sum()
            })
            .collect();
        let n = self.frame.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += amp[j] * self.coeffs[(j, k)] * amp[k].conj();
            }
        }
        acc
    }

    /// `self − other` on the union of both frames (exactly repeated
    /// vectors are merged).
    pub fn sub(&self, other: &FrameOperator) -> FrameOperator {
        let mut frame = self.frame.clone();
        let mut map_other = Vec::with_capacity(other.frame.len());
        for v in &other.frame {
            match frame.iter().position(|u| u == v) {
                Some(i) => map_other.push(i),
                None => {
                    frame.push(v.clone());
                    map_other.push(frame.len() - 1);
                }
            }
        }
        let n = frame.len();
        let mut coeffs = CMatrix::zeros(n, n);
        for j in 0..self.frame.len() {
            for k in 0..self.frame.len() {
                coeffs[(j, k)] += self.coeffs[(j, k)];
            }
        }
        for (j, &jj) in map_other.iter().enumerate() {
            for (k, &kk) in map_other.iter().enumerate() {
                coeffs[(jj, kk)] -= other.coeffs[(j, k)];
            }
        }
        FrameOperator { frame, coeffs }
    }

    /// Trace norm of a Hermitian frame operator. With `G = W Λ W†` and
    /// `R = Λ^{1/2} W†`, the nonzero spectrum of `V C V†` is that of
    /// `R C R†`.
    pub fn trace_norm(&self) -> Result<f64> {
        let g = linalg::hermitian_part(&gram(&self.frame));
        let e = linalg::eigh(&g);
        let lmax = e.values.first().copied().unwrap_or(0.0);
        let lmin = e.values.last().copied().unwrap_or(0.0);
        if lmax <= 0.0 || lmin / lmax < FRAME_CONDITION_FLOOR {
            return Err(Error::FrameConditioning(lmin / lmax.max(f64::MIN_POSITIVE)));
        }
        let n = e.values.len();
        let r = CMatrix::from_fn(n, n, |i, j| e.vectors[(j, i)].conj() * e.values[i].sqrt());
        let inner = linalg::hermitian_part(&(&r * &self.coeffs * r.adjoint()));
        Ok(linalg::eigvalsh(&inner).iter().map(|v| v.abs()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_with_itself_is_one() {
        let a = C64::new(1.3, -0.4);
        assert!((coherent_overlap(a, a) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn overlap_with_vacuum() {
        let a = C64::new(2.0, 1.0);
        let v = coherent_overlap(C64::new(0.0, 0.0), a);
        assert!((v.re - (-a.norm_sqr() / 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn loss_preserves_trace_of_projector() {
        let s = CoherentSuperposition::normalized(vec![
            (C64::new(1.0, 0.0), vec![C64::new(1.5, 0.0), C64::new(-1.5, 0.0)]),
            (C64::new(0.0, 1.0), vec![C64::new(-1.5, 0.0), C64::new(1.5, 0.0)]),
        ])
        .unwrap();
        let p = s.projector().apply_loss(0.4).unwrap();
        assert!((p.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_limit_trace_norm() {
        let a = CoherentSuperposition::product(vec![C64::new(5.0, 0.0)]);
        let b = CoherentSuperposition::product(vec![C64::new(-5.0, 0.0)]);
        let d = a.projector().sub(&b.projector());
        let g = coherent_overlap(C64::new(5.0, 0.0), C64::new(-5.0, 0.0)).norm();
        assert!((d.trace_norm().unwrap() - 2.0 * (1.0 - g * g).sqrt()).abs() < 1e-12);
    }
}
