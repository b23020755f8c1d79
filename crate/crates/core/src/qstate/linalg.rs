//! Dense Hermitian eigendecomposition, SVD and the derived matrix functions.
//!
//! The decompositions run on `faer`; everything else in the crate works with
//! `nalgebra::DMatrix<Complex64>`. Conversions are O(d²) and negligible next
//! to the O(d³) factorizations.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues above `-PSD_TOL` are treated as zero when a PSD square root is
/// taken; anything more negative is an error.
pub const PSD_TOL: f64 = 1e-10;

/// Relative noise floor of a computed spectrum: eigenvalues below
/// `SPECTRAL_NOISE · dim · λ_max` are rounding residue of zero eigenvalues
/// and are set to zero before square roots are taken (otherwise a residue
/// of 1e-17 would become a spurious 3e-9).
pub const SPECTRAL_NOISE: f64 = 1e-15;

/// Eigenvalues closer than this are grouped into one degenerate subspace by
/// [`eigh_canonical`].
pub const DEGENERACY_TOL: f64 = 1e-9;

pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Eigendecomposition with eigenvalues in descending order; column `k` of
/// `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// `m = u · diag(s) · v_adj`, singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_adj: CMatrix,
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn to_faer(m: &CMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_faer_real(m: &CMatrix) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    assert!(m.is_square(), "eigvalsh needs a square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals = if is_real(m) {
        to_faer_real(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("real symmetric eigenvalue iteration failed")
    } else {
        to_faer(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("hermitian eigenvalue iteration failed")
    };
    vals.reverse();
    vals
}

/// Full eigendecomposition of a Hermitian matrix (lower triangle is read).
pub fn eigh(m: &CMatrix) -> Eigh {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: Vec::new(), vectors: CMatrix::zeros(0, 0) };
    }
    let (asc_vals, asc_vecs): (Vec<f64>, CMatrix) = if is_real(m) {
        let e = to_faer_real(m)
            .self_adjoint_eigen(Side::Lower)
            .expect("real symmetric eigen iteration failed");
        let s = e.S().column_vector();
        let u = e.U();
        (
            (0..n).map(|k| s[k]).collect(),
            CMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)),
        )
    } else {
        let e = to_faer(m)
            .self_adjoint_eigen(Side::Lower)
            .expect("hermitian eigen iteration failed");
        let s = e.S().column_vector();
        let u = e.U();
        ((0..n).map(|k| s[k].re).collect(), CMatrix::from_fn(n, n, |i, j| u[(i, j)]))
    };
    let values: Vec<f64> = asc_vals.into_iter().rev().collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| asc_vecs[(i, n - 1 - j)]);
    Eigh { values, vectors }
}

/// Full SVD of an arbitrary (possibly rectangular) matrix. `u` is
/// `rows × rows` and `v_adj` is `cols × cols`.
pub fn svd(m: &CMatrix) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: CMatrix::identity(r, r),
            singular_values: Vec::new(),
            v_adj: CMatrix::identity(c, c),
        };
    }
    let s = to_faer(m).svd().expect("svd iteration failed");
    let u = s.U();
    let v = s.V();
    let d = s.S().column_vector();
    Svd {
        u: CMatrix::from_fn(r, r, |i, j| u[(i, j)]),
        singular_values: (0..r.min(c)).map(|k| d[k].re).collect(),
        v_adj: CMatrix::from_fn(c, c, |i, j| v[(j, i)].conj()),
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("svd iteration failed")
}

/// Index of the first entry whose modulus is within 1e-12 of the maximum.
fn pivot_index(v: &[C64]) -> Option<usize> {
    let max = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return None;
    }
    v.iter().position(|z| z.norm() >= max - 1e-12 * max.max(1.0))
}

/// Unit phase `e^{-iθ}` that makes the pivot entry of `v` real positive.
pub fn canonical_phase(v: &[C64]) -> C64 {
    match pivot_index(v) {
        Some(k) => {
            let z = v[k];
            z.conj() / z.norm()
        }
        None => ONE,
    }
}

/// Applies the global-phase convention in place: the largest-magnitude
/// amplitude (first one on ties) becomes real positive.
pub fn fix_phase(v: &mut [C64]) -> C64 {
    let ph = canonical_phase(v);
    for z in v.iter_mut() {
        *z *= ph;
    }
    if let Some(k) = pivot_index(v) {
        v[k] = C64::new(v[k].norm(), 0.0);
    }
    ph
}

/// Like [`eigh`], but with a reproducible eigenbasis: each degenerate
/// eigenspace is spanned by the Gram–Schmidt orthonormalization of the
/// projected canonical basis vectors, and every vector obeys the phase
/// convention of [`fix_phase`].
pub fn eigh_canonical(m: &CMatrix) -> Eigh {
    let Eigh { values, vectors } = eigh(m);
    let n = values.len();
    let mut out = CMatrix::zeros(n, n);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= DEGENERACY_TOL * scale {
            end += 1;
        }
        let block = vectors.columns(start, end - start).into_owned();
        let basis = if end - start == 1 {
            vec![block.column(0).into_owned()]
        } else {
            projected_canonical_basis(&block)
        };
        for (k, mut v) in basis.into_iter().enumerate() {
            fix_phase(v.as_mut_slice());
            out.set_column(start + k, &v);
        }
        start = end;
    }
    Eigh { values, vectors: out }
}

/// Orthonormal basis of span(block) built from `P e_0, P e_1, …`.
fn projected_canonical_basis(block: &CMatrix) -> Vec<CVector> {
    let (n, g) = block.shape();
    let mut basis: Vec<CVector> = Vec::with_capacity(g);
    for k in 0..n {
        if basis.len() == g {
            break;
        }
        // P e_k = block · (row k of block)†
        let coeffs = block.row(k).adjoint();
        let mut v = block * coeffs;
        for b in &basis {
            let ov = b.dotc(&v);
            v -= b * ov;
        }
        // second pass for numerical orthogonality
        for b in &basis {
            let ov = b.dotc(&v);
            v -= b * ov;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    debug_assert_eq!(basis.len(), g, "projected canonical basis lost rank");
    basis
}

/// Clamps eigenvalues of a PSD matrix, rejecting ones below `-PSD_TOL` and
/// zeroing those under the [`SPECTRAL_NOISE`] floor.
pub fn clamp_psd(values: &[f64]) -> Result<Vec<f64>> {
    let top = values.iter().cloned().fold(0.0f64, f64::max);
    let floor = SPECTRAL_NOISE * values.len() as f64 * top;
    values
        .iter()
        .map(|&v| {
            if v < -PSD_TOL {
                Err(Error::NotPsd(v))
            } else if v <= floor {
                Ok(0.0)
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// `V diag(f(λ)) V†`.
pub fn spectral_apply(e: &Eigh, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for (j, &lam) in e.values.iter().enumerate() {
        let w = C64::new(f(lam), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= w;
        }
    }
    scaled * e.vectors.adjoint()
}

/// Square root of a PSD matrix by eigendecomposition.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let e = eigh(&hermitian_part(m));
    let clamped = clamp_psd(&e.values)?;
    let e = Eigh { values: clamped, vectors: e.vectors };
    Ok(spectral_apply(&e, f64::sqrt))
}

/// Moore–Penrose inverse square root of a PSD matrix; eigenvalues below
/// `cutoff` are treated as zero.
pub fn inv_sqrt_psd(m: &CMatrix, cutoff: f64) -> CMatrix {
    let e = eigh(&hermitian_part(m));
    spectral_apply(&e, |v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 })
}

/// Projector onto the span of eigenvectors with eigenvalue above `cutoff`.
pub fn support_projector(m: &CMatrix, cutoff: f64) -> CMatrix {
    let e = eigh(&hermitian_part(m));
    spectral_apply(&e, |v| if v > cutoff { 1.0 } else { 0.0 })
}

/// Sum of singular values. Hermitian inputs take the eigenvalue route.
pub fn trace_norm_of(m: &CMatrix) -> f64 {
    let scale = max_abs_entry(m).max(1e-300);
    if m.is_square() && hermiticity_defect(m) <= 1e-13 * scale {
        eigvalsh(&hermitian_part(m)).iter().map(|v| v.abs()).sum()
    } else {
        singular_values(m).iter().sum()
    }
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Deviation of `m† m` from the identity (max entry).
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.ncols();
    max_abs_entry(&(m.adjoint() * m - CMatrix::identity(n, n)))
}
