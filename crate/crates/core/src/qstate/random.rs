//! Random states, unitaries and channels for property checks.
//!
//! All samplers draw from a caller-supplied RNG so that seeded suites are
//! reproducible.

use nalgebra::linalg::QR;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qstate::linalg::{hermitian_part, CMatrix, CVector, C64};
use crate::qstate::{DensityOperator, KrausChannel, Ket, Operator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    Ket::normalized(v).expect("gaussian vector is nonzero with probability one")
}

/// Random density operator `G G† / tr(G G†)` with `G` of size `dim × rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new_unchecked(hermitian_part(&m.scale(1.0 / tr)))
}

/// Random density operator of random rank.
pub fn random_mixed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    random_density(dim, rank, rng)
}

/// Orthonormalizes the columns of a Gaussian matrix, fixing the phases of
/// `R`'s diagonal so the result is Haar distributed.
fn haar_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(rows, cols, rng);
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random unitary.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    Operator::new_unchecked(haar_columns(dim, dim, rng))
}

/// Random CPTP map on `dim` with `count` Kraus operators, cut from the
/// blocks of a random isometry `C^dim → C^{count·dim}`.
pub fn random_channel<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> KrausChannel {
    let v = haar_columns(dim * count, dim, rng);
    let ops = (0..count).map(|k| v.rows(k * dim, dim).into_owned()).collect();
    KrausChannel::new(ops).expect("isometry blocks form a trace-preserving set")
}

/// Random non-selective projective measurement in a Haar-random basis.
pub fn random_measurement<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> KrausChannel {
    KrausChannel::measurement(&random_unitary(dim, rng)).expect("unitary basis")
}
