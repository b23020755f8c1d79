//! QBC2 parameter planner and the search for the largest test-pass
//! probability of a cheating set that still reveals the bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::qbc2::{babe_success, bloch_length, qbc2_pass_probability, S0_ANGLES};

/// `P₀(N, n, m) = Π_{i<m} (n − N − i)/(n − i)`: probability that none of the
/// `N` marked sets is among the `m` kept ones. Equal to
/// `C(n−m, N)/C(n, N)`; the product form stays finite for any `n`.
pub fn p0(big_n: u64, n: u64, m: u64) -> Result<f64> {
    if big_n > n || m > n {
        return Err(Error::InvalidParameter(format!("P0 arguments out of range: N={big_n} n={n} m={m}")));
    }
    let mut v = 1.0;
    for i in 0..m {
        if n - i <= big_n {
            return Ok(0.0);
        }
        v *= (n - big_n - i) as f64 / (n - i) as f64;
    }
    Ok(v)
}

/// Planner output: the chosen `(m, n, N)` schedule and every intermediate
/// bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerResult {
    pub epsilon: f64,
    pub p_a: f64,
    pub p1_bar: f64,
    /// Number of kept sets: smallest `m` with `p_A^m ≤ ε`.
    pub m: u64,
    /// Smallest number of sets for which the threshold reaches `n_target`.
    pub n: u64,
    /// Threshold `f(ε, n, m)`: the smallest number of cheating sets with
    /// `P₀(N, n, m) ≤ 1 − 2ε`. Fewer cheating sets cannot lift the
    /// receiver's guess to `½ + ε`.
    #[serde(rename = "N")]
    pub big_n: u64,
    /// `m + ⌈ln ε / ln p̄₁⌉`: the threshold needed for `p̄₁^{N−m} ≤ ε`.
    pub n_target: u64,
    /// `p_A^m`.
    pub pa_bound: f64,
    /// `p̄₁^{N−m}`, the bound on passing the test with `N` cheating sets.
    pub pu_bound: f64,
    /// `P₀(N, n, m)`.
    pub p0: f64,
    /// `P₀(N − 1, n, m)`, above `1 − 2ε` by minimality of `N`.
    pub p0_below: f64,
    /// `1 − P₀/2`: the receiver's guess bound at the threshold.
    pub pbc_bound: f64,
}

impl PlannerResult {
    /// Re-checks the bound assertions the planner guarantees.
    pub fn check(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::InvalidState(format!("planner bound violated: {what}")));
        if self.pa_bound > self.epsilon {
            return fail("p_A^m > epsilon");
        }
        if self.pu_bound > self.epsilon {
            return fail("p1_bar^(N-m) > epsilon");
        }
        if self.p0 > 1.0 - 2.0 * self.epsilon || self.p0_below <= 1.0 - 2.0 * self.epsilon {
            return fail("N is not the minimal threshold");
        }
        if self.big_n < self.n_target {
            return fail("N below target");
        }
        Ok(())
    }
}

/// Smallest integer `k ≥ 1` with `base^k ≤ eps`, starting from
/// `⌈ln eps / ln base⌉` and correcting for rounding.
fn min_power(base: f64, eps: f64) -> u64 {
    let mut k = ((eps.ln() / base.ln()).ceil() as u64).max(1);
    while base.powi(k as i32) > eps {
        k += 1;
    }
    while k > 1 && base.powi(k as i32 - 1) <= eps {
        k -= 1;
    }
    k
}

/// Smallest `N ≤ n − m` with `P₀(N, n, m) ≤ 1 − 2ε` (`P₀` is decreasing
/// in `N`), found by bisection.
pub fn threshold_f(epsilon: f64, n: u64, m: u64) -> Result<u64> {
    let target = 1.0 - 2.0 * epsilon;
    let (mut lo, mut hi) = (0u64, n - m + 1);
    if p0(n - m + 1, n, m)? > target {
        return Err(Error::Infeasible(format!("no threshold for n={n}, m={m}")));
    }
    // invariant: P0(lo) > target, P0(hi) <= target
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if p0(mid, n, m)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn qbc2_planner(epsilon: f64, p_a: f64, p1_bar: f64) -> Result<PlannerResult> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Infeasible(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    for (name, v) in [("p_a", p_a), ("p1_bar", p1_bar)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let m = min_power(p_a, epsilon);
    let n_target = m + min_power(p1_bar, epsilon);
    // f(ε, n, m) ≥ n_target  ⟺  P₀(n_target − 1, n, m) > 1 − 2ε, monotone in n.
    let ok = |n: u64| -> Result<bool> { Ok(p0(n_target - 1, n, m)? > 1.0 - 2.0 * epsilon) };
    let mut lo = n_target - 1 + m;
    if ok(lo)? {
        return Err(Error::InvalidState("threshold satisfied below the minimal size".into()));
    }
    let mut step = 1u64;
    let mut hi = lo + step;
    while !ok(hi)? {
        lo = hi;
        step = step.checked_mul(2).ok_or_else(|| Error::Infeasible("n overflows".into()))?;
        hi = lo.checked_add(step).ok_or_else(|| Error::Infeasible("n overflows".into()))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n = hi;
    let big_n = threshold_f(epsilon, n, m)?;
    let p0v = p0(big_n, n, m)?;
    let result = PlannerResult {
        epsilon,
        p_a,
        p1_bar,
        m,
        n,
        big_n,
        n_target,
        pa_bound: p_a.powi(m as i32),
        pu_bound: p1_bar.powi((big_n - m) as i32),
        p0: p0v,
        p0_below: p0(big_n - 1, n, m)?,
        pbc_bound: 1.0 - p0v / 2.0,
    };
    result.check()?;
    Ok(result)
}

/// Result of [`p1_max_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1Search {
    pub m: usize,
    pub epsilon: f64,
    /// Smallest Bloch length whose `m`-qubit Helstrom value reaches `½ + ε`.
    pub r_star: f64,
    /// The maximum pass probability `p̄₁`.
    pub value: f64,
    /// Maximizing qubit angles of the cheating set, in name order.
    pub angles: [f64; 4],
    pub bloch_length: f64,
    pub babe_success: f64,
}

/// Grid size of the coarse stage, per angle.
const GRID: usize = 36;

/// Honest set angles, the only point with pass probability 1.
const HONEST: [f64; 4] = S0_ANGLES;

/// First point along the ray `S₀ + t·d` (unit `d`, `t ∈ (0, π]`) whose Bloch
/// length reaches `r_star`, located by stepping then bisection.
fn boundary_point(d: &[f64; 4], r_star: f64) -> Option<[f64; 4]> {
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let at = |t: f64| -> [f64; 4] { std::array::from_fn(|q| HONEST[q] + t * d[q] / norm) };
    let steps = 512;
    let dt = std::f64::consts::PI / steps as f64;
    let mut prev = 0.0;
    for k in 1..=steps {
        let t = k as f64 * dt;
        if bloch_length(&at(t)) >= r_star {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if bloch_length(&at(mid)) >= r_star {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(at(hi));
        }
        prev = t;
    }
    None
}

/// Largest pass probability of a uniform-per-qubit cheating set whose
/// committed qubit still lets the receiver identify the bit from `m` sets
/// with probability at least `½ + ε`.
///
/// The constraint depends on the angles only through the Bloch length `|r|`
/// and `babe_success` is increasing in `|r|`, so it is first reduced to
/// `|r| ≥ r*` by bisection. A coarse grid over the four angles gives a
/// feasible starting value. The refinement then searches over directions
/// `d` away from the honest set `S₀`, scoring each by the pass probability
/// at the first point of the ray `S₀ + t·d` with `|r| = r*`; this keeps
/// every candidate feasible and lets the search slide along the
/// constraint boundary, where the optimum sits.
pub fn p1_max_search(m: usize, epsilon: f64) -> Result<P1Search> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Infeasible(format!("no cheating set reaches 1/2 + {epsilon}")));
    }
    let goal = 0.5 + epsilon;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if babe_success(mid, m) >= goal {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r_star = hi;
    let ident = [0, 1, 2, 3];
    let value = |a: &[f64; 4]| qbc2_pass_probability(a, &ident);

    let step = std::f64::consts::PI / GRID as f64;
    let mut best: Option<([f64; 4], f64)> = None;
    let consider = |a: [f64; 4], best: &mut Option<([f64; 4], f64)>| {
        if bloch_length(&a) >= r_star {
            let v = value(&a);
            if best.is_none_or(|(_, b)| v > b) {
                *best = Some((a, v));
            }
        }
    };
    for i in 0..GRID {
        for j in 0..GRID {
            for k in 0..GRID {
                for l in 0..GRID {
                    consider([i as f64 * step, j as f64 * step, k as f64 * step, l as f64 * step], &mut best);
                }
            }
        }
    }

    let score = |d: &[f64; 4]| boundary_point(d, r_star).map(|a| (a, value(&a)));
    for code in 1..81usize {
        let mut d: [f64; 4] = std::array::from_fn(|q| (code / 3usize.pow(q as u32) % 3) as f64 - 1.0);
        let Some((mut xa, mut fx)) = score(&d) else { continue };
        let mut h = 0.5;
        while h > 1e-10 {
            let mut improved = false;
            for q in 0..4 {
                for sign in [1.0, -1.0] {
                    let mut e = d;
                    e[q] += sign * h;
                    if let Some((ya, fy)) = score(&e) {
                        if fy > fx {
                            d = e;
                            xa = ya;
                            fx = fy;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        consider(xa, &mut best);
    }

    let (x, fx) = best.ok_or_else(|| Error::Infeasible(format!("no feasible cheating set for r* = {r_star}")))?;
    let r = bloch_length(&x);
    Ok(P1Search {
        m,
        epsilon,
        r_star,
        value: fx,
        angles: x.map(|a| a.rem_euclid(std::f64::consts::PI)),
        bloch_length: r,
        babe_success: babe_success(r, m),
    })
}
