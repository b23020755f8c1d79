//! Finite-dimensional quantum states and the operations the attack engine
//! and the detectors are built from.
//!
//! Index convention: composite systems are ordered A ⊗ B with the A index
//! major, i.e. amplitude `(i, k)` lives at flat position `i·d_B + k`. All
//! products are plain Kronecker products.
//!
//! Every matrix is dense. A global cap (default 2²⁴ stored complex entries,
//! overridable through the `QBC_MAX_ENTRIES` environment variable) guards the
//! constructors that can blow up — tensor products, purifications and the
//! protocol state builders — and turns an oversized request into
//! [`Error::TooLarge`] instead of an allocation failure.

pub mod coherent;
pub mod json;
pub mod linalg;
pub mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use coherent::{coherent_overlap, CoherentSuperposition, FrameOperator};
pub use linalg::{CMatrix, CVector, C64};
use linalg::{eigh, eigh_canonical, hermitian_part, hermiticity_defect, svd, ONE};

/// Tolerance on norms, traces and Hermiticity of validated states.
pub const STATE_TOL: f64 = 1e-10;
/// Schmidt coefficients at or below this are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;
/// Default cap on stored complex entries.
pub const DEFAULT_MAX_ENTRIES: u128 = 1 << 24;
/// Environment variable overriding [`DEFAULT_MAX_ENTRIES`].
pub const MAX_ENTRIES_ENV: &str = "QBC_MAX_ENTRIES";

/// Current cap on stored complex entries.
pub fn max_entries() -> u128 {
    std::env::var(MAX_ENTRIES_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_ENTRIES)
}

/// Fails with [`Error::TooLarge`] when `entries` exceeds the cap.
pub fn check_entries(entries: u128) -> Result<()> {
    let cap = max_entries();
    if entries > cap {
        Err(Error::TooLarge { entries, cap })
    } else {
        Ok(())
    }
}

/// Checks that a square operator of dimension `dim` fits under the cap.
pub fn check_operator_dim(dim: usize) -> Result<()> {
    check_entries((dim as u128) * (dim as u128))
}

/// Read access to the underlying dense matrix.
pub trait AsMatrix {
    fn as_matrix(&self) -> &CMatrix;
}

impl AsMatrix for CMatrix {
    fn as_matrix(&self) -> &CMatrix {
        self
    }
}

// ---------------------------------------------------------------------------
// Ket
// ---------------------------------------------------------------------------

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: CVector,
}

impl Ket {
    /// Validates that `amps` is nonempty, finite and of unit norm.
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("ket must have at least one amplitude".into()));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("ket has non-finite amplitudes".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("ket norm {norm} differs from 1")));
        }
        Ok(Ket { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Ket::new(amps / C64::new(norm, 0.0))
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Ket::new(CVector::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Ket::new(CVector::from_iterator(amps.len(), amps.iter().map(|&x| C64::new(x, 0.0))))
    }

    /// Computational basis vector `|k⟩` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        Ket { amps: v }
    }

    /// Internal constructor for vectors that are normalized by construction.
    pub(crate) fn new_unchecked(amps: CVector) -> Self {
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sq(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// The same ray with the global-phase convention applied: the
    /// largest-magnitude amplitude is real positive.
    pub fn phase_fixed(&self) -> Ket {
        let mut v = self.amps.clone();
        linalg::fix_phase(v.as_mut_slice());
        Ket { amps: v }
    }

    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        check_entries(self.dim() as u128 * other.dim() as u128)?;
        Ok(Ket { amps: self.amps.kronecker(&other.amps) })
    }
}

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

/// Square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and nonempty, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("operator has non-finite entries".into()));
        }
        Ok(Operator { m })
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: CMatrix::identity(dim, dim) }
    }

    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!("expected {} entries, got {}", dim * dim, rows.len())));
        }
        Operator::new(CMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i * dim + j], 0.0)))
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &Ket, b: &Ket) -> Self {
        Operator { m: a.amplitudes() * b.amplitudes().adjoint() }
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Operator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.m)
    }

    /// `self · |ket⟩` as a raw vector (not renormalized).
    pub fn apply(&self, ket: &Ket) -> Result<CVector> {
        if ket.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("operator dim {} vs ket dim {}", self.dim(), ket.dim())));
        }
        Ok(&self.m * ket.amplitudes())
    }

    /// Applies a unitary to a ket; fails if `self` is not unitary.
    pub fn apply_unitary(&self, ket: &Ket) -> Result<Ket> {
        self.ensure_unitary(1e-9)?;
        Ok(Ket::new_unchecked(self.apply(ket)?))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        linalg::unitarity_defect(&self.m) <= tol
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let defect = linalg::unitarity_defect(&self.m);
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary(defect))
        }
    }

    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        check_operator_dim(self.dim() * other.dim())?;
        Ok(Operator { m: self.m.kronecker(&other.m) })
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm(&self.m)
    }
}

impl AsMatrix for Operator {
    fn as_matrix(&self) -> &CMatrix {
        &self.m
    }
}

// ---------------------------------------------------------------------------
// DensityOperator
// ---------------------------------------------------------------------------

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    m: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, trace and positivity (all to 1e-10). The stored
    /// matrix is the Hermitian part of `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch("density operator must be square and nonempty".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("density operator has non-finite entries".into()));
        }
        let defect = hermiticity_defect(&m);
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = linalg::trace(&m);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let h = hermitian_part(&m);
        let lmin = linalg::eigvalsh(&h).last().copied().unwrap_or(0.0);
        if lmin < -STATE_TOL {
            return Err(Error::NotPsd(lmin));
        }
        Ok(DensityOperator { m: h })
    }

    /// Internal constructor for matrices that are density operators by
    /// construction (partial traces, mixtures, channel outputs).
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        DensityOperator { m }
    }

    pub fn from_pure(ket: &Ket) -> Self {
        DensityOperator { m: ket.amplitudes() * ket.amplitudes().adjoint() }
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { m: CMatrix::identity(dim, dim).scale(1.0 / dim as f64) }
    }

    /// Diagonal density operator from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&CVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0))));
        DensityOperator::new(m)
    }

    /// `Σ p_i |ψ_i⟩⟨ψ_i|`.
    pub fn mixture(items: &[(f64, &Ket)]) -> Result<Self> {
        let first = items.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let d = first.1.dim();
        let mut total = 0.0;
        let mut m = CMatrix::zeros(d, d);
        for (p, k) in items {
            if k.dim() != d {
                return Err(Error::DimensionMismatch("mixture components differ in dimension".into()));
            }
            if !(*p >= 0.0) {
                return Err(Error::InvalidPrior(format!("negative weight {p}")));
            }
            total += p;
            m += k.amplitudes() * k.amplitudes().adjoint() * C64::new(*p, 0.0);
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidPrior(format!("mixture weights sum to {total}")));
        }
        Ok(DensityOperator { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.m)
    }

    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, ket: &Ket) -> f64 {
        ket.amplitudes().dotc(&(&self.m * ket.amplitudes())).re
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        check_operator_dim(self.dim() * other.dim())?;
        Ok(DensityOperator { m: self.m.kronecker(&other.m) })
    }
}

impl AsMatrix for DensityOperator {
    fn as_matrix(&self) -> &CMatrix {
        &self.m
    }
}

// ---------------------------------------------------------------------------
// Tensor product
// ---------------------------------------------------------------------------

/// Kinds that support a Kronecker product with themselves.
pub trait Tensor: Sized {
    fn tensor_with(&self, other: &Self) -> Result<Self>;
}

impl Tensor for Ket {
    fn tensor_with(&self, other: &Self) -> Result<Self> {
        self.tensor(other)
    }
}

impl Tensor for Operator {
    fn tensor_with(&self, other: &Self) -> Result<Self> {
        self.tensor(other)
    }
}

impl Tensor for DensityOperator {
    fn tensor_with(&self, other: &Self) -> Result<Self> {
        self.tensor(other)
    }
}

/// `a ⊗ b` with the A index major.
pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor_with(b)
}

/// Tensor product of a nonempty list of kets.
pub fn tensor_all(kets: &[Ket]) -> Result<Ket> {
    let total: u128 = kets.iter().map(|k| k.dim() as u128).product();
    check_entries(total)?;
    let mut it = kets.iter();
    let first = it.next().ok_or_else(|| Error::InvalidState("empty tensor product".into()))?;
    let mut acc = first.amplitudes().clone();
    for k in it {
        acc = acc.kronecker(k.amplitudes());
    }
    Ok(Ket::new_unchecked(acc))
}

// ---------------------------------------------------------------------------
// Bipartite pure states
// ---------------------------------------------------------------------------

/// Which factor of A ⊗ B to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keep {
    A,
    B,
}

/// Pure state on H^A ⊗ H^B.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    joint: Ket,
    da: usize,
    db: usize,
}

impl BipartiteState {
    pub fn new(joint: Ket, da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 || da * db != joint.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} does not factor a joint dimension of {}",
                da,
                db,
                joint.dim()
            )));
        }
        Ok(BipartiteState { joint, da, db })
    }

    pub fn product(a: &Ket, b: &Ket) -> Result<Self> {
        Ok(BipartiteState { joint: a.tensor(b)?, da: a.dim(), db: b.dim() })
    }

    /// Builds the state from its `d_A × d_B` coefficient matrix
    /// `C[i,k] = ⟨i,k|Φ⟩`, normalizing it.
    pub fn from_coefficients(c: &CMatrix) -> Result<Self> {
        let (da, db) = c.shape();
        check_entries(da as u128 * db as u128)?;
        let v = CVector::from_fn(da * db, |idx, _| c[(idx / db, idx % db)]);
        BipartiteState::new(Ket::normalized(v)?, da, db)
    }

    pub fn joint(&self) -> &Ket {
        &self.joint
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    /// `C[i,k] = ⟨i,k|Φ⟩`.
    pub fn coefficients(&self) -> CMatrix {
        let a = self.joint.amplitudes();
        CMatrix::from_fn(self.da, self.db, |i, k| a[i * self.db + k])
    }

    /// The same state viewed as B ⊗ A.
    pub fn swap(&self) -> BipartiteState {
        let c = self.coefficients().transpose();
        let v = CVector::from_fn(self.da * self.db, |idx, _| c[(idx / self.da, idx % self.da)]);
        BipartiteState { joint: Ket::new_unchecked(v), da: self.db, db: self.da }
    }

    /// Joint density operator `|Φ⟩⟨Φ|`.
    pub fn density(&self) -> Result<DensityOperator> {
        check_operator_dim(self.joint.dim())?;
        Ok(self.joint.projector())
    }

    pub fn reduced(&self, keep: Keep) -> DensityOperator {
        partial_trace(self, keep)
    }

    /// `⟨self|other⟩` as joint kets.
    pub fn inner(&self, other: &BipartiteState) -> Result<C64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch("bipartite dims differ".into()));
        }
        Ok(self.joint.inner(&other.joint))
    }

    /// `(u ⊗ I)|Φ⟩`; `u` must be unitary on H^A.
    pub fn apply_local_a(&self, u: &Operator) -> Result<BipartiteState> {
        if u.dim() != self.da {
            return Err(Error::DimensionMismatch(format!("local operator dim {} vs d_A {}", u.dim(), self.da)));
        }
        u.ensure_unitary(1e-9)?;
        let c = u.matrix() * self.coefficients();
        let v = CVector::from_fn(self.da * self.db, |idx, _| c[(idx / self.db, idx % self.db)]);
        Ok(BipartiteState { joint: Ket::new_unchecked(v), da: self.da, db: self.db })
    }

    /// `(I ⊗ u)|Φ⟩`; `u` must be unitary on H^B.
    pub fn apply_local_b(&self, u: &Operator) -> Result<BipartiteState> {
        Ok(self.swap().apply_local_a(u)?.swap())
    }
}

/// Reduced state of a bipartite pure state.
pub fn partial_trace(s: &BipartiteState, keep: Keep) -> DensityOperator {
    let c = s.coefficients();
    let m = match keep {
        Keep::A => &c * c.adjoint(),
        Keep::B => c.transpose() * c.map(|z| z.conj()),
    };
    DensityOperator::new_unchecked(hermitian_part(&m))
}

/// Partial trace of an arbitrary operator on `C^{da} ⊗ C^{db}`.
pub fn partial_trace_matrix(m: &CMatrix, da: usize, db: usize, keep: Keep) -> Result<CMatrix> {
    if !m.is_square() || m.nrows() != da * db {
        return Err(Error::DimensionMismatch(format!("{}×{} does not factor dimension {}", da, db, m.nrows())));
    }
    Ok(match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Keep::B => CMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    })
}

/// Reduced state of a joint density operator.
pub fn partial_trace_joint(rho: &DensityOperator, da: usize, db: usize, keep: Keep) -> Result<DensityOperator> {
    let m = partial_trace_matrix(rho.matrix(), da, db, keep)?;
    Ok(DensityOperator::new_unchecked(hermitian_part(&m)))
}

/// Schmidt form `Σ_k c_k |a_k⟩|b_k⟩`.
#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Descending, strictly above [`SCHMIDT_CUTOFF`].
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Ket>,
    pub basis_b: Vec<Ket>,
}

impl Schmidt {
    /// Re-assembles the joint state.
    pub fn reconstruct(&self) -> CVector {
        let da = self.basis_a.first().map_or(0, Ket::dim);
        let db = self.basis_b.first().map_or(0, Ket::dim);
        let mut v = CVector::zeros(da * db);
        for ((c, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            v += a.amplitudes().kronecker(b.amplitudes()) * C64::new(*c, 0.0);
        }
        v
    }
}

/// Schmidt decomposition by SVD of the coefficient matrix. Each `b_k` obeys
/// the global-phase convention; `a_k` absorbs the compensating phase.
pub fn schmidt_decompose(s: &BipartiteState) -> Schmidt {
    let c = s.coefficients();
    let dec = svd(&c);
    let mut out = Schmidt { coefficients: Vec::new(), basis_a: Vec::new(), basis_b: Vec::new() };
    for (k, &sv) in dec.singular_values.iter().enumerate() {
        if sv <= SCHMIDT_CUTOFF {
            break;
        }
        let mut b: Vec<C64> = dec.v_adj.row(k).iter().copied().collect();
        let ph = linalg::fix_phase(&mut b);
        let a = dec.u.column(k) * ph.conj();
        out.coefficients.push(sv);
        out.basis_a.push(Ket::new_unchecked(a.into_owned()));
        out.basis_b.push(Ket::new_unchecked(CVector::from_vec(b)));
    }
    out
}

// ---------------------------------------------------------------------------
// Distances and decompositions
// ---------------------------------------------------------------------------

/// `‖t‖₁ = tr √(t†t)`, the sum of singular values.
pub fn trace_norm<T: AsMatrix + ?Sized>(t: &T) -> f64 {
    linalg::trace_norm_of(t.as_matrix())
}

/// Trace norm of `a − b`.
pub fn trace_distance<T: AsMatrix + ?Sized>(a: &T, b: &T) -> Result<f64> {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch("trace distance of differently sized operators".into()));
    }
    Ok(trace_norm(&(a - b)))
}

/// Uhlmann fidelity `F = (tr √(√ρ₀ ρ₁ √ρ₀))²`, clamped to [0, 1].
pub fn fidelity(r0: &DensityOperator, r1: &DensityOperator) -> Result<f64> {
    fidelity_matrices(r0.matrix(), r1.matrix())
}

/// Fidelity for raw PSD matrices; eigenvalues below −1e-10 are rejected.
pub fn fidelity_matrices(r0: &CMatrix, r1: &CMatrix) -> Result<f64> {
    if r0.shape() != r1.shape() || !r0.is_square() {
        return Err(Error::DimensionMismatch("fidelity of differently sized operators".into()));
    }
    let s0 = linalg::sqrt_psd(r0)?;
    linalg::clamp_psd(&linalg::eigvalsh(&hermitian_part(r1)))?;
    let inner = hermitian_part(&(&s0 * r1 * &s0));
    let root_sum: f64 = linalg::clamp_psd(&linalg::eigvalsh(&inner))?.iter().map(|&v| v.sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Unitary factor of the right polar decomposition `a = |a|·U` with
/// `|a| = √(a a†)`. From `a = W S V†` the result is `U = W V†`; on
/// rank-deficient input the completion on the kernel is whatever the SVD
/// ordering produces (unitary, but not canonical).
pub fn polar_unitary<T: AsMatrix + ?Sized>(a: &T) -> Operator {
    let a = a.as_matrix();
    let dec = svd(a);
    Operator::new_unchecked(dec.u * dec.v_adj)
}

/// `|a| = √(a a†)`.
pub fn polar_modulus<T: AsMatrix + ?Sized>(a: &T) -> CMatrix {
    let a = a.as_matrix();
    let dec = svd(a);
    let n = a.nrows();
    let mut us = dec.u.clone();
    for j in 0..n {
        let s = dec.singular_values.get(j).copied().unwrap_or(0.0);
        for i in 0..n {
            us[(i, j)] *= C64::new(s, 0.0);
        }
    }
    us * dec.u.adjoint()
}

/// Purification on `system ⊗ ancilla` with ancilla dimension `dim(r)`:
/// `Σ_k √λ_k |v_k⟩|k⟩`, eigenvalues descending, eigenvectors in the
/// canonical basis of [`linalg::eigh_canonical`].
pub fn purify(r: &DensityOperator) -> Result<BipartiteState> {
    let d = r.dim();
    check_entries(d as u128 * d as u128)?;
    let e = eigh_canonical(r.matrix());
    let lam = linalg::clamp_psd(&e.values)?;
    let mut c = CMatrix::zeros(d, d);
    for (k, l) in lam.iter().enumerate() {
        let w = C64::new(l.sqrt(), 0.0);
        for i in 0..d {
            c[(i, k)] = e.vectors[(i, k)] * w;
        }
    }
    BipartiteState::from_coefficients(&c)
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

/// Trace-preserving Kraus channel `ρ ↦ Σ K ρ K†` from `dim_in` to `dim_out`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    dim_in: usize,
    dim_out: usize,
}

/// Tolerance on `Σ K†K = I`.
pub const TP_TOL: f64 = 1e-9;

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let (dout, din) = first.shape();
        if ops.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let mut sum = CMatrix::zeros(din, din);
        for k in &ops {
            sum += k.adjoint() * k;
        }
        let defect = linalg::max_abs_entry(&(sum - CMatrix::identity(din, din)));
        if defect > TP_TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(KrausChannel { ops, dim_in: din, dim_out: dout })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel { ops: vec![CMatrix::identity(dim, dim)], dim_in: dim, dim_out: dim }
    }

    pub fn unitary(u: &Operator) -> Result<Self> {
        u.ensure_unitary(TP_TOL)?;
        KrausChannel::new(vec![u.matrix().clone()])
    }

    /// Non-selective projective measurement in the computational basis after
    /// the unitary `basis_change` (columns are the measurement vectors).
    pub fn measurement(basis_change: &Operator) -> Result<Self> {
        basis_change.ensure_unitary(TP_TOL)?;
        let d = basis_change.dim();
        let ops = (0..d)
            .map(|k| {
                let v = basis_change.matrix().column(k).into_owned();
                &v * v.adjoint()
            })
            .collect();
        KrausChannel::new(ops)
    }

    /// `ρ ↦ (1−p)ρ + p·I/d`.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("depolarizing probability {p} outside [0,1]")));
        }
        let mut ops = vec![CMatrix::identity(dim, dim).scale((1.0 - p).sqrt())];
        let w = (p / dim as f64).sqrt();
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = C64::new(w, 0.0);
                ops.push(k);
            }
        }
        KrausChannel::new(ops)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Applies the map to any operator of matching dimension.
    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!("channel input dim {} vs operator {}", self.dim_in, m.nrows())));
        }
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.ops {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply_state(&self, r: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::new_unchecked(hermitian_part(&self.apply(r.matrix())?)))
    }
}

fn lift_a(k: &CMatrix, db: usize) -> CMatrix {
    k.kronecker(&CMatrix::identity(db, db))
}

/// Applies a trace-preserving channel on the A factor of a joint state on
/// `C^{da} ⊗ C^{db}`; the marginal on B is unchanged.
pub fn apply_local_channel(
    joint: &DensityOperator,
    dims: (usize, usize),
    channel: &KrausChannel,
) -> Result<DensityOperator> {
    let (da, db) = dims;
    if joint.dim() != da * db || channel.dim_in() != da || channel.dim_out() != da {
        return Err(Error::DimensionMismatch("channel does not act on the A factor of this state".into()));
    }
    let mut out = CMatrix::zeros(da * db, da * db);
    for k in channel.ops() {
        let big = lift_a(k, db);
        out += &big * joint.matrix() * big.adjoint();
    }
    Ok(DensityOperator::new_unchecked(hermitian_part(&out)))
}

/// Applies a Kraus list given as raw operators, validating trace
/// preservation first.
pub fn apply_local_kraus(joint: &DensityOperator, dims: (usize, usize), kraus: &[Operator]) -> Result<DensityOperator> {
    let ch = KrausChannel::new(kraus.iter().map(|k| k.matrix().clone()).collect())?;
    apply_local_channel(joint, dims, &ch)
}

/// Post-selects a single Kraus outcome on A and renormalizes. This is not a
/// channel: it generally changes the B marginal.
pub fn apply_local_outcome(joint: &DensityOperator, dims: (usize, usize), k: &Operator) -> Result<DensityOperator> {
    let (da, db) = dims;
    if joint.dim() != da * db || k.dim() != da {
        return Err(Error::DimensionMismatch("outcome operator does not act on the A factor".into()));
    }
    let big = lift_a(k.matrix(), db);
    let out = &big * joint.matrix() * big.adjoint();
    let p = linalg::trace(&out).re;
    if p <= 1e-300 {
        return Err(Error::InvalidState("post-selected outcome has zero probability".into()));
    }
    Ok(DensityOperator::new_unchecked(hermitian_part(&out.scale(1.0 / p))))
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Weighted list of pure states of a common dimension.
#[derive(Clone, Debug)]
pub struct StateEnsemble {
    items: Vec<(f64, Ket)>,
}

impl StateEnsemble {
    pub fn new(items: Vec<(f64, Ket)>) -> Result<Self> {
        let first = items.first().ok_or_else(|| Error::InvalidState("empty ensemble".into()))?;
        let d = first.1.dim();
        let mut total = 0.0;
        for (p, k) in &items {
            if k.dim() != d {
                return Err(Error::DimensionMismatch("ensemble states differ in dimension".into()));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidPrior(format!("probability {p} outside [0,1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidPrior(format!("ensemble probabilities sum to {total}")));
        }
        Ok(StateEnsemble { items })
    }

    /// Equal weights over `states`.
    pub fn uniform(states: Vec<Ket>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        StateEnsemble::new(states.into_iter().map(|k| (w, k)).collect())
    }

    pub fn items(&self) -> &[(f64, Ket)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].1.dim()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.items.iter().map(|(p, _)| *p).collect()
    }

    /// Appends zero-probability copies of `|0⟩` until the ensemble has
    /// `len` members.
    pub fn padded(&self, len: usize) -> StateEnsemble {
        let mut items = self.items.clone();
        while items.len() < len {
            items.push((0.0, Ket::basis(self.dim(), 0)));
        }
        StateEnsemble { items }
    }

    /// `Σ p_i |φ_i⟩⟨φ_i|`.
    pub fn density(&self) -> Result<DensityOperator> {
        let d = self.dim();
        check_operator_dim(d)?;
        let mut m = CMatrix::zeros(d, d);
        for (p, k) in &self.items {
            if *p > 0.0 {
                m += k.amplitudes() * k.amplitudes().adjoint() * C64::new(*p, 0.0);
            }
        }
        Ok(DensityOperator::new_unchecked(m))
    }
}

/// Eigendecomposition re-export for callers needing the raw spectrum.
pub fn spectrum(r: &DensityOperator) -> linalg::Eigh {
    eigh(r.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> BipartiteState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        BipartiteState::new(Ket::from_real(&[s, 0.0, 0.0, s]).unwrap(), 2, 2).unwrap()
    }

    #[test]
    fn tensor_index_convention() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Ket::from_real(&[s, s]).unwrap();
        let one = Ket::basis(2, 1);
        let v = tensor(&plus, &one).unwrap();
        let expect = [0.0, s, 0.0, s];
        for (z, e) in v.amplitudes().iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        let i4 = tensor(&Operator::identity(2), &Operator::identity(2)).unwrap();
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let r = partial_trace(&bell(), Keep::B);
        assert!(linalg::max_abs_entry(&(r.matrix() - DensityOperator::maximally_mixed(2).matrix())) < 1e-15);
        let sch = schmidt_decompose(&bell());
        assert_eq!(sch.coefficients.len(), 2);
        for c in sch.coefficients {
            assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_partial_trace_matches_pure_route() {
        let b = bell();
        let rho = b.density().unwrap();
        let viaj = partial_trace_joint(&rho, 2, 2, Keep::A).unwrap();
        let viap = partial_trace(&b, Keep::A);
        assert!(linalg::max_abs_entry(&(viaj.matrix() - viap.matrix())) < 1e-15);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(3.0, 0.0)]));
        let u = polar_unitary(&a);
        assert!(linalg::max_abs_entry(&(u.matrix() - CMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn fidelity_commuting_case() {
        let r0 = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let r1 = DensityOperator::diagonal(&[0.5, 0.5]).unwrap();
        assert!((fidelity(&r0, &r1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        assert!(DensityOperator::new(CMatrix::identity(2, 2)).is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(matches!(DensityOperator::new(neg), Err(Error::NotPsd(_))));
    }

    #[test]
    fn kraus_must_be_trace_preserving() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(matches!(KrausChannel::new(vec![half]), Err(Error::NotTracePreserving(_))));
    }
}
