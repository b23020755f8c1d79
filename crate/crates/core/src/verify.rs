//! Named invariant suites behind `qbc verify`.
//!
//! Every suite draws from its own pinned seed, so the rendered report is
//! byte-identical across runs. Each check prints the measured value and
//! its limit with twelve significant digits.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    hypergeometric_pk, p0, parity_binomial, parity_binomial_direct, parity_recurrence_residual, qbc2_planner,
};
use crate::cheat::{align_purifications, build_purifications, convexity_gap, ip_chain_report, uhlmann_align};
use crate::detect::{
    evaluate_pom, helstrom_binary, optimize_mary, perfect_discrimination_check, pure_binary, HypothesisSet, MaryPom,
};
use crate::error::{Error, Result};
use crate::ground_truth;
use crate::protocols::qbc0::{qbc0_concealment, qbc0_ensembles, qbc0_exact_concealment};
use crate::protocols::qbc01::qbc01_report;
use crate::protocols::qbc2::{permutations, qbc2_conditional_state, qbc2_hypotheses, qbc2_optimal_detector, set_kets};
use crate::protocols::qbc3::{qbc3_entangled_overlap_report, qbc3_union_bound};
use crate::protocols::rng::derive_seed;
use crate::protocols::{run_protocol, AdamStrategy, BabeStrategy, ProtocolParams};
use crate::qstate::linalg::{self, CMatrix, C64};
use crate::qstate::random::{ginibre, random_channel, random_ket, random_measurement, random_mixed, random_unitary};
use crate::qstate::{
    apply_local_channel, apply_local_outcome, fidelity, partial_trace_joint, schmidt_decompose, trace_norm,
    BipartiteState, DensityOperator, Keep, KrausChannel, Ket, StateEnsemble,
};

/// Suite names in execution order.
pub const SUITES: &[&str] = &[
    "schmidt",
    "local-invariance",
    "fuchs-bound",
    "trace-norm-bound",
    "holder",
    "contractivity",
    "helstrom",
    "mary-bounds",
    "orthogonal-supports",
    "qbc2-pa",
    "uhlmann",
    "convexity",
    "plan-invariance",
    "ip-chain",
    "qbc01-chain",
    "determinism",
    "completeness",
    "qbc2-concealment",
    "qbc3-union-bound",
    "entangled-overlap",
    "qbc0-closed-form",
    "parity",
    "hypergeometric",
    "planner",
];

/// Selection and size overrides.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Suites to run; empty means all.
    pub suites: Vec<String>,
    /// Replaces every suite's default number of random trials.
    pub trials: Option<usize>,
    /// Qubit count for the size-parameterized suites (`entangled-overlap`, `qbc0-closed-form`).
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub limit: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Line {
    Check(CheckResult),
    Note { suite: &'static str, text: String },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub lines: Vec<Line>,
}

impl VerifyReport {
    pub fn checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.lines.iter().filter_map(|l| match l {
            Line::Check(c) => Some(c),
            Line::Note { .. } => None,
        })
    }

    pub fn all_passed(&self) -> bool {
        self.checks().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            match line {
                Line::Check(c) => {
                    out.push_str(&format!(
                        "{} {}/{}: value={:.12e} {} {:.12e}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.suite,
                        c.check,
                        c.value,
                        c.relation,
                        c.limit
                    ));
                    if !c.detail.is_empty() {
                        out.push_str(&format!(" ({})", c.detail));
                    }
                    out.push('\n');
                }
                Line::Note { suite, text } => out.push_str(&format!("     {suite}: {text}\n")),
            }
        }
        let total = self.checks().count();
        let passed = self.checks().filter(|c| c.passed).count();
        out.push_str(&format!("verify: {passed}/{total} checks passed\n"));
        out
    }
}

struct Rec<'a> {
    suite: &'static str,
    lines: &'a mut Vec<Line>,
}

impl Rec<'_> {
    fn push(&mut self, check: &str, passed: bool, value: f64, relation: &'static str, limit: f64, detail: String) {
        self.lines.push(Line::Check(CheckResult {
            suite: self.suite,
            check: check.to_string(),
            passed,
            value,
            relation,
            limit,
            detail,
        }));
    }

    fn le(&mut self, check: &str, value: f64, limit: f64, detail: impl Into<String>) {
        self.push(check, value <= limit, value, "<=", limit, detail.into());
    }

    fn ge(&mut self, check: &str, value: f64, limit: f64, detail: impl Into<String>) {
        self.push(check, value >= limit, value, ">=", limit, detail.into());
    }

    fn note(&mut self, text: impl Into<String>) {
        self.lines.push(Line::Note { suite: self.suite, text: text.into() });
    }
}

struct Ctx {
    trials: Option<usize>,
    n: Option<usize>,
}

impl Ctx {
    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

/// Seed of a suite's generator, fixed by its name.
fn suite_rng(name: &str) -> ChaCha8Rng {
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    ChaCha8Rng::seed_from_u64(h)
}

pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    for s in &opts.suites {
        if !SUITES.contains(&s.as_str()) {
            return Err(Error::InvalidParameter(format!("unknown suite '{s}'; available: {}", SUITES.join(", "))));
        }
    }
    let ctx = Ctx { trials: opts.trials, n: opts.n };
    let mut report = VerifyReport::default();
    for &name in SUITES {
        if !opts.suites.is_empty() && !opts.suites.iter().any(|s| s == name) {
            continue;
        }
        let mut rec = Rec { suite: name, lines: &mut report.lines };
        if let Err(e) = run_suite(name, &ctx, &mut rec) {
            rec.push("completed", false, f64::NAN, "<=", 0.0, format!("error: {e}"));
        }
    }
    Ok(report)
}

fn run_suite(name: &str, ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let mut rng = suite_rng(name);
    match name {
        "schmidt" => schmidt(ctx, rec, &mut rng),
        "local-invariance" => local_invariance(ctx, rec, &mut rng),
        "fuchs-bound" => fuchs_bound(ctx, rec, &mut rng),
        "trace-norm-bound" => trace_norm_bound(ctx, rec, &mut rng),
        "holder" => holder(ctx, rec, &mut rng),
        "contractivity" => contractivity(ctx, rec, &mut rng),
        "helstrom" => helstrom(ctx, rec, &mut rng),
        "mary-bounds" => mary_bounds(ctx, rec, &mut rng),
        "orthogonal-supports" => orthogonal_supports(ctx, rec, &mut rng),
        "qbc2-pa" => qbc2_pa_suite(rec),
        "uhlmann" => uhlmann(ctx, rec, &mut rng),
        "convexity" => convexity(ctx, rec, &mut rng),
        "plan-invariance" => plan_invariance(ctx, rec, &mut rng),
        "ip-chain" => ip_chain(ctx, rec, &mut rng),
        "qbc01-chain" => qbc01_chain(rec),
        "determinism" => determinism(ctx, rec),
        "completeness" => completeness(ctx, rec),
        "qbc2-concealment" => qbc2_concealment(rec),
        "qbc3-union-bound" => qbc3_union(ctx, rec),
        "entangled-overlap" => entangled_overlap(ctx, rec),
        "qbc0-closed-form" => qbc0_closed_form(ctx, rec),
        "parity" => parity(rec),
        "hypergeometric" => hypergeometric(rec),
        "planner" => planner(rec),
        _ => unreachable!("suite list and dispatch agree"),
    }
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Density operators with orthogonal supports: a random unitary's columns
/// split into two groups.
fn orthogonal_pair(d: usize, rng: &mut ChaCha8Rng) -> Result<(DensityOperator, DensityOperator)> {
    let u = random_unitary(d, rng).into_matrix();
    let k = rng.random_range(1..d);
    let weights = |range: std::ops::Range<usize>, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let w: Vec<f64> = range.map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let w0 = weights(0..k, rng);
    let w1 = weights(k..d, rng);
    let mut diag0 = vec![0.0; d];
    let mut diag1 = vec![0.0; d];
    diag0[..k].copy_from_slice(&w0);
    diag1[k..].copy_from_slice(&w1);
    let build = |diag: &[f64]| {
        let dm = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) });
        DensityOperator::new(linalg::hermitian_part(&(&u * dm * u.adjoint())))
    };
    Ok((build(&diag0)?, build(&diag1)?))
}

fn random_probabilities(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_ensemble(k: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<StateEnsemble> {
    let p = random_probabilities(k, rng);
    StateEnsemble::new(p.into_iter().map(|pi| (pi, random_ket(d, rng))).collect())
}

// ---------------------------------------------------------------------------
// qstate
// ---------------------------------------------------------------------------

fn schmidt(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(100);
    let (mut recon, mut spec) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let (da, db) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let s = BipartiteState::new(random_ket(da * db, rng), da, db)?;
        let sch = schmidt_decompose(&s);
        let diff = sch.reconstruct() - s.joint().amplitudes();
        recon = recon.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let eig = s.reduced(Keep::B).eigenvalues();
        for (k, e) in eig.iter().enumerate() {
            let c2 = sch.coefficients.get(k).map_or(0.0, |c| c * c);
            spec = spec.max((c2 - e).abs());
        }
    }
    rec.le("reconstruction", recon, 1e-9, format!("trials={trials}"));
    rec.le("coefficients-vs-marginal", spec, 1e-9, format!("trials={trials}"));
    Ok(())
}

fn local_invariance(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(100);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let (da, db) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let joint = if t % 2 == 0 {
            DensityOperator::from_pure(&random_ket(da * db, rng))
        } else {
            random_mixed(da * db, rng)
        };
        let channel = match t % 3 {
            0 => KrausChannel::unitary(&random_unitary(da, rng))?,
            1 => random_measurement(da, rng),
            _ => random_channel(da, rng.random_range(1..=3), rng),
        };
        let before = partial_trace_joint(&joint, da, db, Keep::B)?;
        let after = partial_trace_joint(&apply_local_channel(&joint, (da, db), &channel)?, da, db, Keep::B)?;
        worst = worst.max(linalg::max_abs_entry(&(after.matrix() - before.matrix())));
    }
    rec.le("marginal-change", worst, 1e-10, format!("trials={trials}"));

    // Keeping a single measurement outcome is not a channel.
    let joint = DensityOperator::from_pure(&Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])?);
    let before = partial_trace_joint(&joint, 2, 2, Keep::B)?;
    let proj = Ket::basis(2, 0).projector();
    let k = crate::qstate::Operator::new(proj.into_matrix())?;
    let after = partial_trace_joint(&apply_local_outcome(&joint, (2, 2), &k)?, 2, 2, Keep::B)?;
    let change = linalg::max_abs_entry(&(after.matrix() - before.matrix()));
    rec.ge("selected-outcome-counterexample", change, 1e-3, "post-selection changes the marginal");
    Ok(())
}

fn fuchs_bound(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(500);
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let (r0, r1) = (random_mixed(d, rng), random_mixed(d, rng));
        let tn = trace_norm(&(r0.matrix() - r1.matrix()));
        let f = fidelity(&r0, &r1)?;
        lower = lower.max(2.0 * (1.0 - f.sqrt()) - tn);
        upper = upper.max(tn - 2.0 * (1.0 - f).sqrt());
    }
    rec.le("2(1-sqrtF)-tracenorm", lower, 1e-10, format!("trials={trials}"));
    rec.le("tracenorm-2sqrt(1-F)", upper, 1e-10, format!("trials={trials}"));
    Ok(())
}

fn trace_norm_bound(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(200);
    let (mut generic, mut orth_dev, mut perturbed) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let (a, b) = (random_mixed(d, rng), random_mixed(d, rng));
        generic = generic.max(trace_norm(&(a.matrix() - b.matrix())));
        let (r0, r1) = orthogonal_pair(d, rng)?;
        orth_dev = orth_dev.max((trace_norm(&(r0.matrix() - r1.matrix())) - 2.0).abs());
        let mixed = r1.matrix().scale(1.0 - 1e-3) + r0.matrix().scale(1e-3);
        perturbed = perturbed.max(trace_norm(&(r0.matrix() - mixed)));
    }
    rec.le("generic-max", generic, 2.0 + 1e-12, format!("trials={trials}"));
    rec.le("orthogonal-deviation-from-2", orth_dev, 1e-8, format!("trials={trials}"));
    rec.le("overlapping-max", perturbed, 2.0 - 1e-8, format!("trials={trials}"));
    Ok(())
}

fn holder(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(500);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let x = ginibre(d, d, rng);
        let tau = linalg::hermitian_part(&ginibre(d, d, rng));
        let lhs = linalg::trace(&(&x * &tau)).norm();
        let rhs = linalg::operator_norm(&x) * linalg::trace_norm_of(&tau);
        worst = worst.max((lhs - rhs) / rhs.max(1.0));
    }
    rec.le("|tr X tau| - ||X|| ||tau||_1", worst, 1e-12, format!("trials={trials}, relative"));
    Ok(())
}

fn contractivity(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(200);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let ch = random_channel(d, rng.random_range(1..=4), rng);
        let diff = random_mixed(d, rng).into_matrix() - random_mixed(d, rng).into_matrix();
        worst = worst.max(trace_norm(&ch.apply(&diff)?) - trace_norm(&diff));
    }
    rec.le("||J(diff)||_1 - ||diff||_1", worst, 1e-10, format!("trials={trials}"));
    Ok(())
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

fn helstrom(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(200);
    let (mut mixed, mut pure) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let (r0, r1) = (random_mixed(d, rng), random_mixed(d, rng));
        let p0 = rng.random_range(0.05..0.95);
        let (_, pom) = helstrom_binary(&r0, &r1, p0)?;
        let closed = 0.5 + 0.5 * trace_norm(&(r0.matrix().scale(p0) - r1.matrix().scale(1.0 - p0)));
        let h = HypothesisSet::new(vec![p0, 1.0 - p0], vec![r0, r1])?;
        mixed = mixed.max((evaluate_pom(&h, &MaryPom::from(pom))? - closed).abs());

        let (a, b) = (random_ket(d, rng), random_ket(d, rng));
        let (dense, _) = helstrom_binary(&a.projector(), &b.projector(), p0)?;
        pure = pure.max((pure_binary(&a, &b, p0)? - dense).abs());
    }
    rec.le("optimal-pom-vs-closed-form", mixed, 1e-9, format!("trials={trials}"));
    rec.le("pure-formula-vs-dense", pure, 1e-10, format!("trials={trials}"));
    Ok(())
}

fn mary_bounds(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(100);
    let (mut above_dual, mut below_prior, mut below_pgm) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let m = rng.random_range(2..=4);
        let d = rng.random_range(2..=4);
        let priors = random_probabilities(m, rng);
        let states = (0..m).map(|_| random_mixed(d, rng)).collect();
        let h = HypothesisSet::new(priors.clone(), states)?;
        let r = optimize_mary(&h, 1e-7, 300)?;
        above_dual = above_dual.max(r.pcm - r.upper_bound.min(1.0));
        below_prior = below_prior.max(priors.iter().cloned().fold(0.0, f64::max) - r.pcm);
        below_pgm = below_pgm.max(r.pgm_value - r.pcm);
    }
    rec.le("pcm-minus-dual-bound", above_dual, 1e-12, format!("trials={trials}"));
    rec.le("max-prior-minus-pcm", below_prior, 1e-12, format!("trials={trials}"));
    rec.le("pgm-minus-pcm", below_pgm, 1e-12, format!("trials={trials}"));
    Ok(())
}

fn orthogonal_supports(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(500);
    let (mut orth, mut overlapping) = (0.0f64, f64::NEG_INFINITY);
    let mut skipped = 0;
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let (l0, l1) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
        let (r0, r1) = orthogonal_pair(d, rng)?;
        let tn = trace_norm(&(r0.matrix().scale(l0) - r1.matrix().scale(l1)));
        orth = orth.max((tn - (l0 + l1)).abs());
        let (a, b) = (random_mixed(d, rng), random_mixed(d, rng));
        if linalg::max_abs_entry(&(a.matrix() * b.matrix())) <= 1e-6 {
            skipped += 1;
            continue;
        }
        let tn = trace_norm(&(a.matrix().scale(l0) - b.matrix().scale(l1)));
        overlapping = overlapping.max(tn - (l0 + l1));
    }
    rec.le("orthogonal-supports-deviation", orth, 1e-9, format!("trials={trials}"));
    rec.le("overlapping-excess", overlapping, -1e-9, format!("trials={trials}, skipped={skipped}"));
    Ok(())
}

fn qbc2_pa_suite(rec: &mut Rec) -> Result<()> {
    let r = qbc2_optimal_detector();
    let pinned = &ground_truth::pinned().p_a;
    rec.le("p_A", r.pcm, 1.0 - 1e-3, "no certain identification of a permutation");
    rec.le("certificate", r.certificate, 1e-4, format!("upper={:.12e}", r.upper_bound));
    rec.le("p_A-vs-pinned", (r.pcm - pinned.value).abs(), 1e-9, format!("pinned={:.12e}", pinned.value));
    let perfect = perfect_discrimination_check(&qbc2_hypotheses()?);
    rec.le("perfectly-distinguishable", perfect as u8 as f64, 0.0, "pairwise orthogonality of the 24 hypotheses");
    Ok(())
}

// ---------------------------------------------------------------------------
// cheat
// ---------------------------------------------------------------------------

fn uhlmann(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(200);
    let (mut dev, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..trials {
        let d = rng.random_range(2..=6);
        let (r0, r1) = (random_mixed(d, rng), random_mixed(d, rng));
        let plan = uhlmann_align(&r0, &r1)?;
        let ov = plan.achieved_overlap()?;
        dev = dev.max((ov - fidelity(&r0, &r1)?).abs());
        let da = plan.phi0.dims().0;
        for _ in 0..50 {
            let v = random_unitary(da, rng);
            let alt = plan.phi1.inner(&plan.phi0.apply_local_a(&v)?)?.norm_sqr();
            excess = excess.max(alt - ov);
        }
    }
    rec.le("overlap-vs-fidelity", dev, 1e-8, format!("trials={trials}"));
    rec.le("random-alignment-excess", excess, 1e-8, format!("trials={trials}, alternatives=50"));
    Ok(())
}

fn convexity(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(500);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let k = rng.random_range(1..=8);
        let alpha = random_probabilities(k, rng);
        let lambda: Vec<C64> = ginibre(k, 1, rng).iter().copied().collect();
        worst = worst.max(-convexity_gap(&alpha, &lambda));
    }
    rec.le("negative-gap", worst, 1e-12, format!("trials={trials}"));
    Ok(())
}

fn plan_invariance(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let trials = ctx.trials(100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let d = rng.random_range(2..=4);
        let e0 = random_ensemble(rng.random_range(1..=4), d, rng)?;
        let e1 = random_ensemble(rng.random_range(1..=4), d, rng)?;
        let (phi0, phi1) = build_purifications(&e0, &e1)?;
        let plan = align_purifications(&phi0, &phi1)?;
        let after = plan.rotated()?.reduced(Keep::B);
        worst = worst.max(linalg::max_abs_entry(&(after.matrix() - phi0.reduced(Keep::B).matrix())));
    }
    rec.le("marginal-change", worst, 1e-10, format!("trials={trials}"));
    Ok(())
}

fn ip_chain(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) -> Result<()> {
    let (mut gap, mut chain) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut instances = 0;
    for o in [0.9, 0.95] {
        for n in 4..=8 {
            let (e0, e1) = qbc0_ensembles(n, o)?;
            let r = ip_chain_report(&e0, &e1, None)?;
            if r.eps > 0.2 {
                continue;
            }
            instances += 1;
            gap = gap.max((1.0 - r.eps) - r.pac);
            chain = chain.max(r.branch_distance_sq_sum - 4.0 * r.eps);
            rec.note(format!("qbc0 overlap={o} n={n}: eps={:.12e} pac={:.12e}", r.eps, r.pac));
        }
    }
    rec.le("qbc0 (1-eps)-pac", gap, 1e-9, format!("instances={instances}"));
    rec.le("qbc0 branch-distance-minus-4eps", chain, 1e-9, format!("instances={instances}"));
    let trials = ctx.trials(50);
    let (mut gap, mut chain) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let d = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let r = ip_chain_report(&random_ensemble(k, d, rng)?, &random_ensemble(k, d, rng)?, None)?;
        gap = gap.max((1.0 - r.eps) - r.pac);
        chain = chain.max(r.branch_distance_sq_sum - 4.0 * r.eps);
    }
    rec.le("random (1-eps)-pac", gap, 1e-9, format!("trials={trials}"));
    rec.le("random branch-distance-minus-4eps", chain, 1e-9, format!("trials={trials}"));
    Ok(())
}

fn qbc01_chain(rec: &mut Rec) -> Result<()> {
    let (mut sqrt_gap, mut chain_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for eta in [0.3, 0.5, 0.9] {
        for n in 1..=4 {
            let r = qbc01_report(n, eta, 0.3)?;
            sqrt_gap = sqrt_gap.max(r.sqrt_bound - r.pac);
            chain_gap = chain_gap.max((r.chain_bound - r.pac).max(r.sqrt_bound - r.chain_bound));
        }
    }
    rec.le("(1-2sqrt(eps))-pac", sqrt_gap, 1e-8, "eta in {0.3,0.5,0.9}, n=1..4, separation=0.3");
    rec.le("chain-ordering-violation", chain_gap, 1e-8, "pac >= chain bound >= 1-2sqrt(eps)");
    Ok(())
}

// ---------------------------------------------------------------------------
// protocols
// ---------------------------------------------------------------------------

fn protocol_configs() -> Vec<(ProtocolParams, AdamStrategy, BabeStrategy)> {
    let mut qbc3_literal = ProtocolParams::qbc3(8, 2, 0.5, 0);
    qbc3_literal.literal_rule = Some(true);
    vec![
        (ProtocolParams::qbc0(6, 0.5, 0), AdamStrategy::Honest, BabeStrategy::Honest),
        (ProtocolParams::qbc0(4, 0.5, 0), AdamStrategy::UhlmannMatched, BabeStrategy::Honest),
        (ProtocolParams::qbc01(3, 0.5, 0.3, 0), AdamStrategy::Honest, BabeStrategy::Honest),
        (ProtocolParams::qbc01(3, 0.5, 0.3, 0), AdamStrategy::UhlmannMatched, BabeStrategy::Honest),
        (ProtocolParams::qbc1(5, 0.6, 0), AdamStrategy::Honest, BabeStrategy::Honest),
        (ProtocolParams::qbc1(4, 0.6, 0), AdamStrategy::UhlmannMismatched, BabeStrategy::Honest),
        (ProtocolParams::qbc2(8, 3, 0), AdamStrategy::Honest, BabeStrategy::Honest),
        (ProtocolParams::qbc2(8, 3, 0), AdamStrategy::OptimalDetection, BabeStrategy::Honest),
        (
            ProtocolParams::qbc2(8, 2, 0),
            AdamStrategy::Honest,
            BabeStrategy::UniformAngle { angle: std::f64::consts::PI / 8.0, sets: None },
        ),
        (ProtocolParams::qbc3(8, 2, 0.5, 0), AdamStrategy::Honest, BabeStrategy::Honest),
        (qbc3_literal, AdamStrategy::QubitLie { position: None }, BabeStrategy::Honest),
        (ProtocolParams::qbc3(4, 1, 0.5, 0), AdamStrategy::NoMeasurementCheat, BabeStrategy::Honest),
    ]
}

fn determinism(ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let trials = ctx.trials(10);
    let mut mismatches = 0usize;
    let mut runs = 0usize;
    for (p, a, b) in protocol_configs() {
        for seed in 0..trials as u64 {
            let q = p.with_seed(seed);
            let t1 = run_protocol(&q, &a, &b)?;
            let t2 = run_protocol(&q, &a, &b)?;
            let s1 = t1.to_json_lines()? + &t1.verdict_line()?;
            let s2 = t2.to_json_lines()? + &t2.verdict_line()?;
            mismatches += (s1 != s2) as usize;
            runs += 1;
        }
    }
    rec.le("transcript-mismatches", mismatches as f64, 0.0, format!("runs={runs}"));
    Ok(())
}

fn completeness(ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let trials = ctx.trials(200);
    for (p, a, b) in protocol_configs() {
        if !(a.is_honest() && b == BabeStrategy::Honest) {
            continue;
        }
        let mut rejected = 0usize;
        for i in 0..trials as u64 {
            let q = p.with_seed(derive_seed(0xC0FFEE, i));
            rejected += !run_protocol(&q, &a, &b)?.accepted() as usize;
        }
        rec.le(&format!("{} rejections", p.protocol), rejected as f64, 0.0, format!("runs={trials}"));
    }
    Ok(())
}

fn qbc2_concealment(rec: &mut Rec) -> Result<()> {
    let mut worst = 0.0f64;
    let half = DensityOperator::maximally_mixed(2);
    for p in permutations() {
        let set = set_kets(&p);
        let r0 = qbc2_conditional_state(&set, 0)?;
        let r1 = qbc2_conditional_state(&set, 1)?;
        worst = worst.max(trace_norm(&(r0.matrix() - r1.matrix())));
        worst = worst.max(trace_norm(&(r0.matrix() - half.matrix())));
    }
    rec.le("max-trace-distance", worst, 1e-9, "all 24 honest sets, both bits and I/2");
    Ok(())
}

fn qbc3_union(ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let trials = ctx.trials(2000);
    let (n, o) = (20, 0.5);
    for big_n in [0usize, 2, 5] {
        for literal in [false, true] {
            let mut p = ProtocolParams::qbc3(n, big_n, o, 0);
            p.literal_rule = Some(literal);
            let adam = AdamStrategy::QubitLie { position: None };
            let mut acc = 0usize;
            for i in 0..trials as u64 {
                let q = p.with_seed(derive_seed(0x0B0B + big_n as u64, i));
                acc += run_protocol(&q, &adam, &BabeStrategy::Honest)?.accepted() as usize;
            }
            let rate = acc as f64 / trials as f64;
            let sigma = (rate * (1.0 - rate) / trials as f64).sqrt().max(1.0 / trials as f64);
            let bound = qbc3_union_bound(n, big_n, o);
            let rule = if literal { "literal" } else { "strict" };
            rec.le(
                &format!("N/n={:.2} {rule} rate-3sigma", big_n as f64 / n as f64),
                rate - 3.0 * sigma,
                bound,
                format!("rate={rate:.12e}, runs={trials}"),
            );
        }
    }
    Ok(())
}

fn entangled_overlap(ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let n = ctx.n.unwrap_or(4);
    for o in [0.0, FRAC_1_SQRT_2] {
        for big_n in 1..n {
            let r = qbc3_entangled_overlap_report(n, big_n, o)?;
            let total: f64 = r.branches.iter().map(|b| b.probability).sum();
            let min = r.branches.iter().map(|b| b.overlap).fold(f64::INFINITY, f64::min);
            let max = r.branches.iter().map(|b| b.overlap).fold(f64::NEG_INFINITY, f64::max);
            rec.note(format!(
                "n={n} N={big_n} overlap={o:.12e} target={:.12e} unmeasured={:.12e} averaged={:.12e} per-outcome=[{min:.12e}, {max:.12e}] branches={} matching={}",
                r.target,
                r.unmeasured,
                r.averaged,
                r.branches.len(),
                r.matching
            ));
            rec.le(
                &format!("N={big_n} overlap={o:.4} branch-probability-defect"),
                (total - 1.0).abs(),
                1e-12,
                format!("matching={}", r.matching),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analysis
// ---------------------------------------------------------------------------

fn qbc0_closed_form(ctx: &Ctx, rec: &mut Rec) -> Result<()> {
    let n_max = ctx.n.unwrap_or(10);
    for o in [0.0, 0.3, FRAC_1_SQRT_2, 0.9] {
        let mut worst = 0.0f64;
        for n in 1..=n_max {
            worst = worst.max((qbc0_concealment(n, o)? - qbc0_exact_concealment(n, o)?).abs());
        }
        rec.le(&format!("overlap={o:.4}"), worst, 1e-9, format!("n=1..{n_max}"));
    }
    Ok(())
}

fn parity(rec: &mut Rec) -> Result<()> {
    let (mut direct, mut recur) = (0.0f64, 0.0f64);
    for p in [0.01, 0.1, 0.5] {
        for m in 1..=30 {
            direct = direct.max((parity_binomial(m, p) - parity_binomial_direct(m, p)).abs());
            recur = recur.max(parity_recurrence_residual(m, p).abs());
        }
    }
    rec.le("closed-vs-direct", direct, 1e-12, "m<=30, p in {0.01,0.1,0.5}");
    rec.le("recurrence-residual", recur, 1e-12, "m<=30, p in {0.01,0.1,0.5}");
    Ok(())
}

fn hypergeometric(rec: &mut Rec) -> Result<()> {
    let (mut enum_dev, mut sum_dev, mut p0_dev) = (0.0f64, 0.0f64, 0.0f64);
    for n in 1..=12u64 {
        for big_n in 0..=n {
            let marked = (1u32 << big_n) - 1;
            for m in 0..=n {
                let mut counts = vec![0u64; (m + 1) as usize];
                let mut total = 0u64;
                for subset in 0u32..(1 << n) {
                    if subset.count_ones() as u64 == m {
                        counts[(subset & marked).count_ones() as usize] += 1;
                        total += 1;
                    }
                }
                let mut sum = 0.0;
                for k in 0..=big_n.min(m) {
                    let v = hypergeometric_pk(big_n, n, m, k)?;
                    enum_dev = enum_dev.max((v - counts[k as usize] as f64 / total as f64).abs());
                    sum += v;
                }
                sum_dev = sum_dev.max((sum - 1.0).abs());
                p0_dev = p0_dev.max((p0(big_n, n, m)? - hypergeometric_pk(big_n, n, m, 0)?).abs());
            }
        }
    }
    rec.le("vs-subset-enumeration", enum_dev, 1e-12, "n<=12");
    rec.le("sum-minus-one", sum_dev, 1e-12, "n<=12");
    rec.le("P0-product-vs-pk", p0_dev, 1e-12, "n<=12");
    Ok(())
}

fn planner(rec: &mut Rec) -> Result<()> {
    let gt = ground_truth::pinned();
    for eps in [0.01, 0.05, 0.1, 0.25] {
        let r = qbc2_planner(eps, gt.p_a.value, gt.p1.value)?;
        r.check()?;
        rec.le(&format!("eps={eps} p_A^m"), r.pa_bound, eps, format!("m={} n={} N={}", r.m, r.n, r.big_n));
        rec.le(&format!("eps={eps} p1^(N-m)"), r.pu_bound, eps, format!("P0={:.12e}", r.p0));
    }
    let again = qbc2_planner(gt.epsilon, gt.p_a.value, gt.p1.value)?;
    rec.le("pinned-schedule-mismatch", (again != gt.planner) as u8 as f64, 0.0, "recomputed from pinned constants");
    Ok(())
}
