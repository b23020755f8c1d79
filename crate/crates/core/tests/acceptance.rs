//! Acceptance run over the ten project criteria.
//!
//! Each criterion prints one `PASS`/`FAIL` line followed by its indented
//! sub-checks. Tolerances are pinned here, next to the checks that use
//! them; reference values come from the oracles in `common`, never from the
//! library routine under test.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;

use common::{c, C, M};
use qbc::analysis::{p1_max_search, parity_binomial, parity_binomial_direct, parity_recurrence_residual, qbc2_planner};
use qbc::cheat::{ip_chain_report, uhlmann_align};
use qbc::detect::helstrom_binary;
use qbc::ground_truth;
use qbc::protocols::qbc0::{qbc0_cheat_plan, qbc0_concealment, qbc0_ensembles, qbc0_exact_concealment};
use qbc::protocols::qbc01::qbc01_report;
use qbc::protocols::qbc2::{
    qbc2_detection_matrix, qbc2_name_lie_enumeration, qbc2_optimal_detector, qbc2_pa_monte_carlo, set_kets, S0_ANGLES,
};
use qbc::protocols::qbc2::permutations;
use qbc::protocols::qbc3::{qbc3_entangled_overlap_report, qbc3_union_bound, OVERLAP_MATCH_TOL};
use qbc::protocols::rng::derive_seed;
use qbc::protocols::{parity_sequences, run_protocol, AdamStrategy, BabeStrategy, ProtocolParams};
use qbc::qstate::{
    apply_local_channel, apply_local_outcome, partial_trace_joint, random::random_channel, random::random_measurement,
    trace_norm, DensityOperator, KrausChannel, Keep, Ket, Operator,
};
use qbc::verify::{self, VerifyOptions};

/// Sub-check results of one criterion.
#[derive(Default)]
struct Checks {
    items: Vec<(bool, String)>,
}

impl Checks {
    fn push(&mut self, ok: bool, text: String) {
        self.items.push((ok, text));
    }

    fn le(&mut self, name: &str, value: f64, bound: f64) {
        self.push(value <= bound, format!("{name}: {value:.6e} <= {bound:.6e}"));
    }

    fn ge(&mut self, name: &str, value: f64, bound: f64) {
        self.push(value >= bound, format!("{name}: {value:.6e} >= {bound:.6e}"));
    }

    fn holds(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(ok, format!("{name}: {}", detail.into()));
    }

    fn passed(&self) -> bool {
        self.items.iter().all(|(ok, _)| *ok)
    }
}

type Criterion = fn(&mut Checks) -> qbc::Result<()>;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("parity-encoding concealment closed form", criterion_1),
        ("impossibility chain for QBC0", criterion_2),
        ("channel extension for QBC01", criterion_3),
        ("Uhlmann optimality", criterion_4),
        ("binary and M-ary detection", criterion_5),
        ("local state invariance", criterion_6),
        ("parity of binomial trials", criterion_7),
        ("QBC2 end to end", criterion_8),
        ("QBC3 union bound and entangled overlap", criterion_9),
        ("verify determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut checks = Checks::default();
        let outcome = run(&mut checks);
        if let Err(e) = &outcome {
            checks.push(false, format!("error: {e}"));
        }
        let ok = checks.passed();
        failed += !ok as usize;
        println!(
            "criterion {:>2} {}: {name} ({:.1} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for (ok, text) in &checks.items {
            println!("    {} {text}", if *ok { "ok  " } else { "VIOL" });
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1. ½ + ½(1 − 2p_e)ⁿ against the trace norm of the explicit mixtures.
// ---------------------------------------------------------------------------

fn criterion_1(ch: &mut Checks) -> qbc::Result<()> {
    const TOL: f64 = 1e-9;
    const BUDGET_S: f64 = 10.0;
    let start = Instant::now();
    let mut library = Vec::new();
    for o2 in [0.0f64, 0.25, 0.5, 0.81] {
        for n in 1..=10 {
            let o = o2.sqrt();
            library.push((o, n, qbc0_concealment(n, o)?, qbc0_exact_concealment(n, o)?));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let (mut closed, mut exact) = (0.0f64, 0.0f64);
    for (o, n, cf, ex) in library {
        let oracle = common::parity_guess_probability(n, o);
        closed = closed.max((cf - oracle).abs());
        exact = exact.max((ex - oracle).abs());
    }
    ch.le("closed form vs explicit mixtures, n=1..10, o² in {0,.25,.5,.81}", closed, TOL);
    ch.le("library mixtures vs explicit mixtures", exact, TOL);
    ch.le("library runtime [s]", elapsed, BUDGET_S);
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. P^A_c ≥ 1 − ε for concealing QBC0 instances.
// ---------------------------------------------------------------------------

/// Success of the aligned cheat: the committer measures A in the basis
/// labelling the odd sequences and opens the sequence found.
fn qbc0_cheat_success(n: usize, o: f64) -> qbc::Result<f64> {
    let (plan, _) = qbc0_cheat_plan(n, o, 0)?;
    let rotated = plan.rotated()?;
    let (da, db) = rotated.dims();
    let amps = rotated.joint().amplitudes();
    let mut total = 0.0;
    for (i, seq) in parity_sequences(n, 1).iter().enumerate().take(da) {
        let target = common::product_vector(seq, o);
        let amp: C = (0..db).map(|b| c(target[b]) * amps[i * db + b]).sum();
        total += amp.norm_sqr();
    }
    Ok(total)
}

fn criterion_2(ch: &mut Checks) -> qbc::Result<()> {
    const EPS_MAX: f64 = 0.2;
    const SLACK: f64 = 1e-9;
    const BUDGET_S: f64 = 60.0;
    let start = Instant::now();
    let (mut gap, mut pac_dev, mut pbc_dev) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut covered = [0usize; 9];
    for o in [0.8, 0.9, 0.95] {
        for n in 4..=8 {
            let eps = 4.0 * (common::parity_guess_probability(n, o) - 0.5);
            if eps > EPS_MAX {
                continue;
            }
            covered[n] += 1;
            let (e0, e1) = qbc0_ensembles(n, o)?;
            let r = ip_chain_report(&e0, &e1, None)?;
            let pac = qbc0_cheat_success(n, o)?;
            gap = gap.max((1.0 - eps) - pac);
            pac_dev = pac_dev.max((pac - r.pac).abs());
            pbc_dev = pbc_dev.max((r.pbc - (0.5 + eps / 4.0)).abs());
        }
    }
    let instances: usize = covered.iter().sum();
    ch.le(&format!("max (1 − ε) − P^A_c over {instances} instances with ε <= 0.2"), gap, SLACK);
    ch.le("library P^A_c vs direct evaluation", pac_dev, SLACK);
    ch.le("library P^B_c vs ½ + ε/4", pbc_dev, SLACK);
    ch.holds("every n in 4..8 covered", covered[4..=8].iter().all(|&k| k > 0), format!("{:?}", &covered[4..=8]));
    ch.le("runtime [s]", start.elapsed().as_secs_f64(), BUDGET_S);
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. QBC01 under loss, against a truncated Fock-space model.
// ---------------------------------------------------------------------------

const FOCK_DIM: usize = 61;

/// Truncated coherent state of a real amplitude.
fn coherent(alpha: f64) -> DVector<C> {
    let mut v = DVector::zeros(FOCK_DIM);
    let mut term = (-alpha * alpha / 2.0).exp();
    v[0] = c(term);
    for k in 1..FOCK_DIM {
        term *= alpha / (k as f64).sqrt();
        v[k] = c(term);
    }
    v
}

/// Kraus operators of the pure-loss channel with transmission `eta`.
fn loss_kraus(eta: f64) -> Vec<M> {
    (0..FOCK_DIM)
        .map(|l| {
            let mut a = M::zeros(FOCK_DIM, FOCK_DIM);
            for k in l..FOCK_DIM {
                let amp = common::binomial(k as u64, l as u64).sqrt()
                    * eta.powf((k - l) as f64 / 2.0)
                    * (1.0 - eta).powf(l as f64 / 2.0);
                a[(k - l, k)] = c(amp);
            }
            a
        })
        .collect()
}

/// One mode of the lossy channel restricted to the two-dimensional span of
/// its possible outputs.
struct ModeModel {
    /// `E† L(|a_x⟩⟨a_y|) E` for labels `x, y`.
    blocks: [[M; 2]; 2],
    /// Coordinates of the attenuated label states `|√η a_x⟩`.
    verifier: [DVector<C>; 2],
    /// Largest trace lost by the restriction.
    leak: f64,
}

fn mode_model(separation: f64, eta: f64) -> ModeModel {
    let amps = [separation / 2.0, -separation / 2.0];
    let input = amps.map(coherent);
    let output = amps.map(|a| coherent(eta.sqrt() * a));
    let e0 = output[0].normalize();
    let e1 = (&output[1] - &e0 * e0.dotc(&output[1])).normalize();
    let basis = M::from_columns(&[e0, e1]);
    let kraus = loss_kraus(eta);
    let mut leak = 0.0f64;
    let block = |x: usize, y: usize, leak: &mut f64| {
        let rho = &input[x] * input[y].adjoint();
        let out = kraus.iter().fold(M::zeros(FOCK_DIM, FOCK_DIM), |acc, a| acc + a * &rho * a.adjoint());
        let restricted = basis.adjoint() * &out * &basis;
        *leak = leak.max((out.trace() - restricted.trace()).norm());
        restricted
    };
    let blocks = [[block(0, 0, &mut leak), block(0, 1, &mut leak)], [block(1, 0, &mut leak), block(1, 1, &mut leak)]];
    let verifier = [basis.adjoint() * &output[0], basis.adjoint() * &output[1]];
    ModeModel { blocks, verifier, leak }
}

/// `Σ_{jk} coeff[j,k] ⊗_l block(rows[j][l], cols[k][l])`.
fn restrict(rows: &[Vec<u8>], cols: &[Vec<u8>], coeff: &M, model: &ModeModel) -> M {
    let n = rows[0].len();
    let mut out = M::zeros(1 << n, 1 << n);
    for (j, rj) in rows.iter().enumerate() {
        for (k, ck) in cols.iter().enumerate() {
            let w = coeff[(j, k)];
            if w.norm() == 0.0 {
                continue;
            }
            let t = (0..n).fold(M::from_element(1, 1, c(1.0)), |acc, l| acc.kronecker(&model.blocks[rj[l] as usize][ck[l] as usize]));
            out += t * w;
        }
    }
    out
}

struct FockValues {
    eps: f64,
    eps_received: f64,
    pac: f64,
    chain_bound: f64,
    leak: f64,
}

fn fock_oracle(n: usize, eta: f64, separation: f64) -> qbc::Result<FockValues> {
    let lossless = mode_model(separation, 1.0);
    let lossy = mode_model(separation, eta);
    let g = coherent(separation / 2.0).dotc(&coherent(-separation / 2.0)).re;
    let (plan, _) = qbc0_cheat_plan(n, g, 0)?;
    let ua = plan.ua.matrix();
    let src = parity_sequences(n, 0);
    let dst = parity_sequences(n, 1);
    let m = src.len();
    let uniform = M::from_diagonal_element(m, m, c(1.0 / m as f64));
    let eps_with = |model: &ModeModel| trace_norm_c(&(restrict(&src, &src, &uniform, model) - restrict(&dst, &dst, &uniform, model)));

    let (mut pac, mut chain) = (0.0, 0.0);
    for (i, target_seq) in dst.iter().enumerate() {
        let coeffs: Vec<C> = (0..m).map(|j| ua[(i, j)] / c((m as f64).sqrt())).collect();
        let branch = M::from_fn(m, m, |j, k| coeffs[j] * coeffs[k].conj());
        let p_tilde = restrict(&src, &src, &branch, &lossless).trace().re;
        let received = restrict(&src, &src, &branch, &lossy);
        let v = (0..n).fold(DVector::from_element(1, c(1.0)), |acc, l| acc.kronecker(&lossy.verifier[target_seq[l] as usize]));
        pac += (v.adjoint() * &received * &v)[(0, 0)].re;
        let single = std::slice::from_ref(target_seq);
        let target = restrict(single, single, &M::from_element(1, 1, c(1.0)), &lossy);
        if p_tilde > 0.0 {
            chain += p_tilde * trace_norm_c(&(received / c(p_tilde) - target));
        }
    }
    Ok(FockValues {
        eps: eps_with(&lossless),
        eps_received: eps_with(&lossy),
        pac,
        chain_bound: 1.0 - chain,
        leak: lossless.leak.max(lossy.leak),
    })
}

fn trace_norm_c(m: &M) -> f64 {
    common::trace_norm(m)
}

fn criterion_3(ch: &mut Checks) -> qbc::Result<()> {
    const SLACK: f64 = 1e-8;
    const AGREE: f64 = 1e-8;
    const SEPARATION: f64 = 0.3;
    let (mut bound_gap, mut dev, mut leak) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut worst_at = String::new();
    for eta in [0.3, 0.5, 0.9] {
        for n in 1..=4 {
            let r = qbc01_report(n, eta, SEPARATION)?;
            let f = fock_oracle(n, eta, SEPARATION)?;
            bound_gap = bound_gap.max((1.0 - 2.0 * r.eps.sqrt()) - r.pac);
            let d = [
                (r.eps - f.eps).abs(),
                (r.eps_received - f.eps_received).abs(),
                (r.pac - f.pac).abs(),
                (r.chain_bound - f.chain_bound).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if d > dev {
                dev = d;
                worst_at = format!("eta={eta} n={n}");
            }
            leak = leak.max(f.leak);
        }
    }
    ch.le("max (1 − 2√ε) − P^A_c, eta in {0.3,0.5,0.9}, n=1..4, separation 0.3", bound_gap, SLACK);
    ch.le(&format!("coherent frame vs Fock cutoff 60 (worst {worst_at})"), dev, AGREE);
    ch.le("Fock truncation leakage", leak, 1e-12);
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. |⟨Φ₀|Φ₁⟩|² = F and no better alignment.
// ---------------------------------------------------------------------------

fn criterion_4(ch: &mut Checks) -> qbc::Result<()> {
    const TOL: f64 = 1e-8;
    const PAIRS: usize = 200;
    const ALTERNATIVES: usize = 50;
    let mut rng = common::rng(4);
    let (mut dev, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..PAIRS {
        let d = rng.random_range(2..=6);
        let (a, b) = (common::random_density(d, &mut rng), common::random_density(d, &mut rng));
        let plan = uhlmann_align(&DensityOperator::new(a.clone())?, &DensityOperator::new(b.clone())?)?;
        let ov = plan.achieved_overlap()?;
        dev = dev.max((ov - common::fidelity(&a, &b)).abs());
        let da = plan.phi0.dims().0;
        for _ in 0..ALTERNATIVES {
            let v = Operator::new(common::random_unitary(da, &mut rng))?;
            let alt = plan.phi1.inner(&plan.phi0.apply_local_a(&v)?)?.norm_sqr();
            excess = excess.max(alt - ov);
        }
    }
    ch.le(&format!("|overlap − F| over {PAIRS} pairs, dims 2..6"), dev, TOL);
    ch.le(&format!("best of {ALTERNATIVES} random alignments minus aligned overlap"), excess, TOL);
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. Helstrom, the orthogonal-support characterization, and p_A.
// ---------------------------------------------------------------------------

/// Best projective qubit measurement by a Bloch-sphere grid refined around
/// its maximum, or the trivial guess when that is better.
fn qubit_grid_optimum(r0: &M, r1: &M, p0: f64) -> f64 {
    let success = |theta: f64, phi: f64| {
        let v = DVector::from_vec(vec![c((theta / 2.0).cos()), C::from_polar((theta / 2.0).sin(), phi)]);
        let e0 = (v.adjoint() * r0 * &v)[(0, 0)].re;
        let e1 = (v.adjoint() * r1 * &v)[(0, 0)].re;
        p0 * e0 + (1.0 - p0) * (1.0 - e1)
    };
    let (mut best, mut bt, mut bp) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=90 {
        for j in 0..180 {
            let (t, p) = (PI * i as f64 / 90.0, 2.0 * PI * j as f64 / 180.0);
            let s = success(t, p);
            if s > best {
                (best, bt, bp) = (s, t, p);
            }
        }
    }
    let mut w = PI / 90.0;
    for _ in 0..60 {
        let (ct, cp) = (bt, bp);
        for i in -5..=5 {
            for j in -5..=5 {
                let (t, p) = (ct + w * i as f64 / 5.0, cp + w * j as f64 / 5.0);
                let s = success(t, p);
                if s > best {
                    (best, bt, bp) = (s, t, p);
                }
            }
        }
        w *= 0.6;
    }
    best.max(p0).max(1.0 - p0)
}

fn criterion_5(ch: &mut Checks) -> qbc::Result<()> {
    const HELSTROM_TOL: f64 = 1e-6;
    const A1_TOL: f64 = 1e-9;
    const PA_CEILING: f64 = 1.0 - 1e-3;
    const CERT_MAX: f64 = 1e-4;
    let mut rng = common::rng(5);

    let mut dev = 0.0f64;
    for _ in 0..100 {
        let (a, b) = (common::random_density(2, &mut rng), common::random_density(2, &mut rng));
        let p0 = rng.random_range(0.05..0.95);
        let (pbar, _) = helstrom_binary(&DensityOperator::new(a.clone())?, &DensityOperator::new(b.clone())?, p0)?;
        dev = dev.max((pbar - qubit_grid_optimum(&a, &b, p0)).abs());
    }
    ch.le("Helstrom vs Bloch-sphere search, 100 qubit instances", dev, HELSTROM_TOL);

    let (mut orth, mut overlapping, mut pair_orth, mut pair_overlap) =
        (0.0f64, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..500 {
        let d = rng.random_range(2..=6);
        let (l0, l1) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
        let (r0, r1) = common::orthogonal_pair(d, &mut rng);
        orth = orth.max((trace_norm(&(&r0 * c(l0) - &r1 * c(l1))) - (l0 + l1)).abs());
        pair_orth = pair_orth.max((trace_norm(&(&r0 - &r1)) - 2.0).abs());
        let (a, b) = (common::random_density(d, &mut rng), common::random_density(d, &mut rng));
        if (&a * &b).iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-6 {
            overlapping = overlapping.max(trace_norm(&(&a * c(l0) - &b * c(l1))) - (l0 + l1));
            pair_overlap = pair_overlap.max(trace_norm(&(&a - &b)));
        }
    }
    ch.le("orthogonal supports: | ‖λ0ρ0 − λ1ρ1‖₁ − (λ0+λ1) |", orth, A1_TOL);
    ch.le("overlapping supports: ‖λ0ρ0 − λ1ρ1‖₁ − (λ0+λ1)", overlapping, -A1_TOL);
    ch.le("orthogonal supports: | ‖ρ0 − ρ1‖₁ − 2 |", pair_orth, 1e-8);
    ch.le("overlapping supports: ‖ρ0 − ρ1‖₁", pair_overlap, 2.0 - 1e-8);

    // The optimal 24-outcome detector, re-evaluated from its POM.
    let r = qbc2_optimal_detector();
    let states: Vec<M> = permutations()
        .iter()
        .map(|p| {
            let v = set_kets(p).iter().fold(DVector::from_element(1, c(1.0)), |acc, k| acc.kronecker(k.amplitudes()));
            &v * v.adjoint()
        })
        .collect();
    let elements = r.pom.elements();
    let value: f64 = states.iter().zip(elements).map(|(s, e)| (s * e).trace().re / 24.0).sum();
    let completeness = elements.iter().fold(M::zeros(16, 16), |acc, e| acc + e) - M::identity(16, 16);
    let min_eig = elements.iter().flat_map(common::herm_eigenvalues).fold(f64::INFINITY, f64::min);
    // Z = Y + s·I dominates every p_k ρ_k, so tr Z bounds the optimum.
    let y = states.iter().zip(elements).fold(M::zeros(16, 16), |acc, (s, e)| acc + s * e * c(1.0 / 24.0));
    let y = (&y + y.adjoint()) * c(0.5);
    let shift = states
        .iter()
        .map(|s| common::herm_eigenvalues(&(s * c(1.0 / 24.0) - &y)).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::NEG_INFINITY, f64::max);
    let dual = y.trace().re + 16.0 * shift;
    ch.le("p_A", r.pcm, PA_CEILING);
    ch.le("duality certificate", r.certificate, CERT_MAX);
    ch.le("p_A vs direct POM evaluation", (value - r.pcm).abs(), 1e-10);
    ch.le("independent dual bound minus p_A", dual - r.pcm, CERT_MAX);
    ch.le("POM completeness defect", completeness.iter().map(|z| z.norm()).fold(0.0, f64::max), 1e-9);
    ch.ge("smallest POM eigenvalue", min_eig, -1e-9);
    ch.le("p_A vs shipped ground truth", (r.pcm - ground_truth::pinned().p_a.value).abs(), 1e-9);
    Ok(())
}

// ---------------------------------------------------------------------------
// 6. Local operations do not move the other marginal.
// ---------------------------------------------------------------------------

fn criterion_6(ch: &mut Checks) -> qbc::Result<()> {
    const TOL: f64 = 1e-10;
    let mut rng = common::rng(6);
    let (mut oracle_change, mut library_change, mut library_dev) = (0.0f64, 0.0f64, 0.0f64);
    let pairs = 150;
    for t in 0..pairs {
        let (da, db) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let joint = if t % 2 == 0 {
            let v = DVector::from_fn(da * db, |_, _| C::new(common::normal(&mut rng), common::normal(&mut rng))).normalize();
            &v * v.adjoint()
        } else {
            common::random_density(da * db, &mut rng)
        };
        let channel = match t % 3 {
            0 => KrausChannel::unitary(&Operator::new(common::random_unitary(da, &mut rng))?)?,
            1 => random_measurement(da, &mut rng),
            _ => random_channel(da, rng.random_range(1..=3), &mut rng),
        };
        let before = common::trace_out_a(&joint, da, db);
        let after_oracle = common::apply_on_a(&joint, channel.ops(), db);
        oracle_change = oracle_change.max(max_abs(&(common::trace_out_a(&after_oracle, da, db) - &before)));
        let rho = DensityOperator::new(joint.clone())?;
        let after = apply_local_channel(&rho, (da, db), &channel)?;
        library_dev = library_dev.max(max_abs(&(after.matrix() - &after_oracle)));
        let marginal = partial_trace_joint(&after, da, db, Keep::B)?;
        library_change = library_change.max(max_abs(&(marginal.matrix() - &before)));
    }
    ch.le(&format!("marginal change, direct evaluation, {pairs} channel/state pairs"), oracle_change, TOL);
    ch.le("marginal change, library", library_change, TOL);
    ch.le("library channel action vs direct", library_dev, TOL);

    let bell = DensityOperator::from_pure(&Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])?);
    let before = partial_trace_joint(&bell, 2, 2, Keep::B)?;
    let keep_zero = Operator::new(Ket::basis(2, 0).projector().into_matrix())?;
    let after = partial_trace_joint(&apply_local_outcome(&bell, (2, 2), &keep_zero)?, 2, 2, Keep::B)?;
    ch.ge("post-selected outcome moves the marginal", max_abs(&(after.matrix() - before.matrix())), 1e-3);
    Ok(())
}

fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 7. Parity of m Bernoulli trials.
// ---------------------------------------------------------------------------

fn criterion_7(ch: &mut Checks) -> qbc::Result<()> {
    const TOL: f64 = 1e-12;
    let (mut closed, mut direct, mut recurrence, mut own) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in [0.0f64, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0] {
        let mut prev = 0.0; // zero trials: the sum is even
        for m in 1..=30u32 {
            let odd: f64 = (1..=m as u64)
                .step_by(2)
                .map(|k| common::binomial(m as u64, k) * p.powi(k as i32) * (1.0 - p).powi((m as u64 - k) as i32))
                .sum();
            closed = closed.max((parity_binomial(m, p) - odd).abs());
            direct = direct.max((parity_binomial_direct(m, p) - odd).abs());
            recurrence = recurrence.max(parity_recurrence_residual(m, p).abs());
            let stepped = prev + p * (1.0 - 2.0 * prev);
            own = own.max((stepped - odd).abs());
            prev = odd;
        }
    }
    ch.le("closed form vs direct summation, m <= 30", closed, TOL);
    ch.le("library summation vs direct summation", direct, TOL);
    ch.le("recurrence residual", recurrence, TOL);
    ch.le("recurrence stepped from the summation", own, TOL);
    Ok(())
}

// ---------------------------------------------------------------------------
// 8. QBC2.
// ---------------------------------------------------------------------------

fn criterion_8(ch: &mut Checks) -> qbc::Result<()> {
    const RUNS: u64 = 10_000;
    const SIGMAS: f64 = 3.0;
    const NAME_LIE: f64 = 0.75;

    let honest = ProtocolParams::qbc2(8, 3, 0);
    let mut rejected = 0;
    for i in 0..RUNS {
        let t = run_protocol(&honest.with_seed(derive_seed(0x8_0001, i)), &AdamStrategy::Honest, &BabeStrategy::Honest)?;
        rejected += !t.accepted() as usize;
    }
    ch.le(&format!("honest rejections in {RUNS} runs (n=8, m=3)"), rejected as f64, 0.0);

    // Lying about the name: sent U_b|λ_q⟩, checked against U_{1−b}|λ_r⟩.
    let mut total = 0.0;
    let mut cases = 0;
    for p in permutations() {
        for q in 0..4 {
            for r in (0..4).filter(|&r| r != q) {
                for b in 0..2 {
                    let sent = S0_ANGLES[p[q]] + b as f64 * PI / 2.0;
                    let expected = S0_ANGLES[p[r]] + (1 - b) as f64 * PI / 2.0;
                    total += (sent - expected).cos().powi(2);
                    cases += 1;
                }
            }
        }
    }
    let enumerated = total / cases as f64;
    ch.le("name-lie: library vs direct enumeration", (qbc2_name_lie_enumeration() - enumerated).abs(), 1e-12);
    ch.holds(
        "name-lie per-set success equals 3/4",
        (qbc2_name_lie_enumeration() - NAME_LIE).abs() <= 1e-12,
        format!("enumerated {enumerated:.12} over {cases} cases, expected {NAME_LIE}"),
    );

    // π/8 cheating sets: two sets, one kept and one tested.
    let angle = PI / 8.0;
    let expected: f64 = S0_ANGLES.iter().map(|s| (angle - s).cos().powi(2)).product();
    let babe = BabeStrategy::UniformAngle { angle, sets: None };
    let params = ProtocolParams::qbc2(2, 1, 0);
    let mut passes = 0;
    for i in 0..RUNS {
        let t = run_protocol(&params.with_seed(derive_seed(0x8_0002, i)), &AdamStrategy::Honest, &babe)?;
        passes += t.checks.iter().filter(|c| c.name.starts_with("test_set") && c.passed).count();
    }
    let sigma = (expected * (1.0 - expected) / RUNS as f64).sqrt();
    let (rate, _) = common::rate(passes, RUNS as usize);
    ch.le(&format!("π/8 pass rate {rate:.5} vs {expected:.5}, in σ"), (rate - expected).abs() / sigma, SIGMAS);

    // Detection success over m independent sets.
    let pa = qbc2_optimal_detector().pcm;
    let detection = qbc2_detection_matrix(qbc2_optimal_detector())?;
    for m in 1..=4 {
        let exact = pa.powi(m as i32);
        let mc = qbc2_pa_monte_carlo(&detection, m, RUNS as usize, derive_seed(0x8_0003, m as u64));
        let sigma = (exact * (1.0 - exact) / RUNS as f64).sqrt();
        ch.le(&format!("p_A^{m} = {exact:.5} vs Monte Carlo {mc:.5}, in σ"), (mc - exact).abs() / sigma, SIGMAS);
    }
    let mut accepted = 0;
    let cheat = ProtocolParams::qbc2(6, 2, 0);
    for i in 0..2000 {
        let t = run_protocol(&cheat.with_seed(derive_seed(0x8_0004, i)), &AdamStrategy::OptimalDetection, &BabeStrategy::Honest)?;
        accepted += t.accepted() as usize;
    }
    let (rate, sigma) = common::rate(accepted, 2000);
    ch.ge("end-to-end detection cheat acceptance (m=2) + 3σ vs p_A²", rate + SIGMAS * sigma, pa * pa);

    // Planner schedule for shrinking targets.
    let mut rows = Vec::new();
    for eps in [0.2, 0.1, 0.05, 0.02, 0.01] {
        let m = qbc2_planner(eps, pa, 0.5)?.m;
        let p1 = p1_max_search(m as usize, eps)?;
        let plan = qbc2_planner(eps, pa, p1.value)?;
        plan.check()?;
        rows.push((eps, plan));
    }
    let pa_curve: Vec<f64> = rows.iter().map(|(_, p)| p.pa_bound).collect();
    let pu_curve: Vec<f64> = rows.iter().map(|(_, p)| p.pu_bound).collect();
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let show = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    let schedule: Vec<String> = rows.iter().map(|(e, p)| format!("ε={e}: m={} n={} N={}", p.m, p.n, p.big_n)).collect();
    ch.holds("p_A^m decreases along the schedule", decreasing(&pa_curve), show(&pa_curve));
    ch.holds("p̄₁^(N−m) decreases along the schedule", decreasing(&pu_curve), show(&pu_curve));
    ch.holds(
        "both bounds within target",
        rows.iter().all(|(e, p)| p.pa_bound <= *e && p.pu_bound <= *e),
        schedule.join("; "),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 9. QBC3.
// ---------------------------------------------------------------------------

fn criterion_9(ch: &mut Checks) -> qbc::Result<()> {
    const RUNS: u64 = 4000;
    const SIGMAS: f64 = 3.0;
    let (n, o) = (20, 0.5);
    for big_n in [0usize, 2, 5] {
        for literal in [false, true] {
            let mut p = ProtocolParams::qbc3(n, big_n, o, 0);
            p.literal_rule = Some(literal);
            let adam = AdamStrategy::QubitLie { position: None };
            let mut accepted = 0;
            for i in 0..RUNS {
                let t = run_protocol(&p.with_seed(derive_seed(0x9_0000 + big_n as u64, i)), &adam, &BabeStrategy::Honest)?;
                accepted += t.accepted() as usize;
            }
            let (rate, sigma) = common::rate(accepted, RUNS as usize);
            let sigma = sigma.max(1.0 / RUNS as f64);
            let bound = o * o + big_n as f64 / n as f64;
            let rule = if literal { "literal" } else { "strict" };
            ch.le(&format!("N/n={:.2} {rule}: rate {rate:.4} − 3σ vs o² + N/n", big_n as f64 / n as f64), rate - SIGMAS * sigma, bound);
            ch.le("library union bound vs o² + N/n", (qbc3_union_bound(n, big_n, o) - bound).abs(), 1e-15);
        }
    }

    for o in [0.0, FRAC_1_SQRT_2] {
        let (v0, v1) = common::parity_factors(4, o);
        let fid = common::fidelity_factored(&v0, &v1);
        for big_n in 1..=3 {
            let r = qbc3_entangled_overlap_report(4, big_n, o)?;
            let total: f64 = r.branches.iter().map(|b| b.probability).sum();
            let per = r.branches.iter().all(|b| (b.overlap - r.target).abs() <= OVERLAP_MATCH_TOL);
            let avg = (r.averaged - r.target).abs() <= OVERLAP_MATCH_TOL;
            let expected = match (per, avg) {
                (true, true) => "both",
                (true, false) => "per-outcome",
                (false, true) => "averaged",
                (false, false) => "neither",
            };
            let (lo, hi) = r
                .branches
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b.overlap), hi.max(b.overlap)));
            ch.holds(
                &format!("n=4 N={big_n} o={o:.4}: matches 2^-N"),
                r.matching == expected && (total - 1.0).abs() <= 1e-12,
                format!(
                    "report says {}; target {:.6}, averaged {:.6}, per-outcome [{lo:.6}, {hi:.6}] over {} branches",
                    r.matching,
                    r.target,
                    r.averaged,
                    r.branches.len()
                ),
            );
            ch.le(&format!("n=4 N={big_n} o={o:.4}: unmeasured overlap vs fidelity"), (r.unmeasured - fid).abs(), 1e-9);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 10. verify is deterministic.
// ---------------------------------------------------------------------------

fn criterion_10(ch: &mut Checks) -> qbc::Result<()> {
    const BUDGET_S: f64 = 600.0;
    let start = Instant::now();
    let first = verify::run(&VerifyOptions::default())?;
    let second = verify::run(&VerifyOptions::default())?;
    let elapsed = start.elapsed().as_secs_f64();
    let checks = first.checks().count();
    let failed = first.checks().filter(|c| !c.passed).count();
    ch.le(&format!("failed checks out of {checks}"), failed as f64, 0.0);
    ch.holds("two runs byte-identical", first.render() == second.render(), format!("{} bytes", first.render().len()));
    ch.le("runtime of both runs [s]", elapsed, BUDGET_S);
    Ok(())
}
