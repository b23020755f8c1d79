//! Independent reference computations shared by the integration tests.
//!
//! Everything here is built directly on nalgebra's dense eigensolver and
//! explicit index loops, so it shares no numerical code with the library
//! routines it is compared against.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;
pub type M = DMatrix<C>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Eigenvalues of the Hermitian part of `m`.
pub fn herm_eigenvalues(m: &M) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

pub fn trace_norm(m: &M) -> f64 {
    herm_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn trace_norm_real(m: &DMatrix<f64>) -> f64 {
    let h = (m + m.transpose()) * 0.5;
    h.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum()
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &M) -> M {
    let h = (m + m.adjoint()) * c(0.5);
    let e = h.symmetric_eigen();
    let d = M::from_diagonal(&DVector::from_iterator(
        e.eigenvalues.len(),
        e.eigenvalues.iter().map(|&x| c(x.max(0.0).sqrt())),
    ));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// `A` with `ρ = A A†`, keeping only eigenvalues above `1e-12` relative to
/// the largest so numerically singular directions contribute nothing.
pub fn support_factor(rho: &M) -> M {
    let h = (rho + rho.adjoint()) * c(0.5);
    let e = h.symmetric_eigen();
    let top = e.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<_> = (0..e.eigenvalues.len())
        .filter(|&k| e.eigenvalues[k] > 1e-12 * top)
        .map(|k| e.eigenvectors.column(k) * c(e.eigenvalues[k].sqrt()))
        .collect();
    M::from_columns(&cols)
}

/// `F = ‖A† B‖₁²` for `ρ = A A†`, `σ = B B†`, which equals
/// `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &M, sigma: &M) -> f64 {
    let s: f64 = (support_factor(rho).adjoint() * support_factor(sigma)).singular_values().iter().sum();
    s * s
}

/// Fidelity of `ρ = A A†` and `σ = B B†` as `‖A† B‖₁²`, which avoids square
/// roots of nearly singular matrices.
pub fn fidelity_factored(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s: f64 = (a.transpose() * b).singular_values().iter().sum();
    s * s
}

/// Column factors of the even and odd parity mixtures, `ρ = V Vᵀ`.
pub fn parity_factors(n: usize, o: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (even, odd) = sequences_by_parity(n);
    let factor = |seqs: &[Vec<u8>]| {
        let cols: Vec<DVector<f64>> = seqs.iter().map(|s| product_vector(s, o)).collect();
        DMatrix::from_columns(&cols) / (seqs.len() as f64).sqrt()
    };
    (factor(&even), factor(&odd))
}

/// Random density operator from a Ginibre matrix `G G† / tr`.
pub fn random_density(d: usize, rng: &mut ChaCha8Rng) -> M {
    let g = M::from_fn(d, d, |_, _| C::new(normal(rng), normal(rng)));
    let r = &g * g.adjoint();
    let t = r.trace();
    r / t
}

/// Standard normal variate by Box–Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Haar-like unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> M {
    let g = M::from_fn(d, d, |_, _| C::new(normal(rng), normal(rng)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = M::from_diagonal(&DVector::from_iterator(d, (0..d).map(|i| {
        let x = r[(i, i)];
        if x.norm() > 0.0 {
            x / x.norm()
        } else {
            c(1.0)
        }
    })));
    q * phases
}

/// Two density operators with orthogonal supports: a random unitary's
/// columns split in two groups with random weights.
pub fn orthogonal_pair(d: usize, rng: &mut ChaCha8Rng) -> (M, M) {
    let u = random_unitary(d, rng);
    let k = rng.random_range(1..d);
    let mut w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
    let (s0, s1): (f64, f64) = (w[..k].iter().sum(), w[k..].iter().sum());
    w[..k].iter_mut().for_each(|x| *x /= s0);
    w[k..].iter_mut().for_each(|x| *x /= s1);
    let build = |range: std::ops::Range<usize>| {
        let mut diag = vec![c(0.0); d];
        for i in range {
            diag[i] = c(w[i]);
        }
        &u * M::from_diagonal(&DVector::from_vec(diag)) * u.adjoint()
    };
    (build(0..k), build(k..d))
}

/// Partial trace over the first factor of `C^{da} ⊗ C^{db}`.
pub fn trace_out_a(m: &M, da: usize, db: usize) -> M {
    M::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum())
}

/// `(k ⊗ I) m (k ⊗ I)†` summed over a Kraus list acting on the first factor.
pub fn apply_on_a(m: &M, kraus: &[M], db: usize) -> M {
    let id = M::identity(db, db);
    let mut out = M::zeros(m.nrows(), m.ncols());
    for k in kraus {
        let big = k.kronecker(&id);
        out += &big * m * big.adjoint();
    }
    out
}

/// All bit strings of length `n`, split by parity.
pub fn sequences_by_parity(n: usize) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for code in 0..(1usize << n) {
        let s: Vec<u8> = (0..n).map(|l| ((code >> (n - 1 - l)) & 1) as u8).collect();
        if s.iter().map(|&b| b as usize).sum::<usize>() % 2 == 0 {
            even.push(s);
        } else {
            odd.push(s);
        }
    }
    (even, odd)
}

/// Product vector of a label sequence over the real qubit pair
/// `φ = (1, 0)`, `φ' = (o, √(1 − o²))`.
pub fn product_vector(seq: &[u8], o: f64) -> DVector<f64> {
    let phi = DVector::from_vec(vec![1.0, 0.0]);
    let phi_p = DVector::from_vec(vec![o, (1.0 - o * o).max(0.0).sqrt()]);
    seq.iter().fold(DVector::from_vec(vec![1.0]), |acc, &b| acc.kronecker(if b == 0 { &phi } else { &phi_p }))
}

/// Uniform mixtures of the even- and odd-parity product states, assembled
/// state by state.
pub fn parity_mixtures(n: usize, o: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (v0, v1) = parity_factors(n, o);
    (&v0 * v0.transpose(), &v1 * v1.transpose())
}

/// `½ + ‖ρ₀ − ρ₁‖₁/4` from the explicit parity mixtures.
pub fn parity_guess_probability(n: usize, o: f64) -> f64 {
    let (r0, r1) = parity_mixtures(n, o);
    0.5 + trace_norm_real(&(r0 - r1)) / 4.0
}

pub fn to_complex(m: &DMatrix<f64>) -> M {
    m.map(c)
}

/// `C(n, k)` by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Mean and binomial standard error of a pass count.
pub fn rate(passes: usize, runs: usize) -> (f64, f64) {
    let p = passes as f64 / runs as f64;
    (p, (p * (1.0 - p) / runs as f64).sqrt())
}
