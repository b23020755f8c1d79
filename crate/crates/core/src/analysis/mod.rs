//! Security analysis over protocol families: closed-form combinatorics,
//! finite-size concealment/binding sweeps with log-linear fits, and the
//! QBC2 parameter planner.

pub mod planner;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{binomial, ln_binomial};

use crate::cheat::ip_chain_report;
use crate::error::{Error, Result};
use crate::protocols::qbc0::{qbc0_concealment, qbc0_ensembles};
use crate::protocols::qbc2::qbc2_pa_monte_carlo;
use crate::protocols::ProtocolId;

pub use planner::{p0, p1_max_search, qbc2_planner, P1Search, PlannerResult};

/// Above this size binomials are evaluated in log space.
pub const LOG_SPACE_THRESHOLD: u64 = 30;

/// `C(n, k)`, exact below [`LOG_SPACE_THRESHOLD`] and via `exp(ln C)` above.
pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        0.0
    } else if n <= LOG_SPACE_THRESHOLD {
        binomial(n, k)
    } else {
        ln_binomial(n, k).exp()
    }
}

/// `P_k = C(N,k) C(n−N, m−k) / C(n,m)`: probability that exactly `k` of the
/// `N` marked sets are among `m` drawn without replacement from `n`.
pub fn hypergeometric_pk(big_n: u64, n: u64, m: u64, k: u64) -> Result<f64> {
    if big_n > n || m > n || k > big_n.min(m) {
        return Err(Error::InvalidParameter(format!("hypergeometric arguments out of range: N={big_n} n={n} m={m} k={k}")));
    }
    if m - k > n - big_n {
        return Ok(0.0);
    }
    if n <= LOG_SPACE_THRESHOLD {
        Ok(binomial(big_n, k) * binomial(n - big_n, m - k) / binomial(n, m))
    } else {
        Ok((ln_binomial(big_n, k) + ln_binomial(n - big_n, m - k) - ln_binomial(n, m)).exp())
    }
}

/// Probability that a sum of `m` independent bits, each 1 with probability
/// `p`, is odd: `½ − ½(1 − 2p)^m`.
pub fn parity_binomial(m: u32, p: f64) -> f64 {
    0.5 - 0.5 * (1.0 - 2.0 * p).powi(m as i32)
}

/// Direct summation of the odd binomial terms.
pub fn parity_binomial_direct(m: u32, p: f64) -> f64 {
    (1..=m as u64)
        .step_by(2)
        .map(|k| binom(m as u64, k) * p.powi(k as i32) * (1.0 - p).powi((m as u64 - k) as i32))
        .sum()
}

/// `P_{m+1} − P_m − p(1 − 2P_m)`, zero for the exact solution.
pub fn parity_recurrence_residual(m: u32, p: f64) -> f64 {
    let pm = parity_binomial(m, p);
    parity_binomial(m + 1, p) - pm - p * (1.0 - 2.0 * pm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Exact,
    LowerBound,
    UpperBound,
    MonteCarlo,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Exact => "exact",
            ValueKind::LowerBound => "lower-bound",
            ValueKind::UpperBound => "upper-bound",
            ValueKind::MonteCarlo => "monte-carlo",
        }
    }
}

/// One grid point of a sweep. Wall time is kept in memory for progress
/// reporting but never serialized, so outputs are byte-stable.
#[derive(Clone, Debug, Serialize)]
pub struct SecurityReport {
    pub protocol: ProtocolId,
    pub n: usize,
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub overlap: Option<f64>,
    pub eta: Option<f64>,
    /// Receiver's optimal early-guess probability.
    pub pbc: f64,
    pub pbc_kind: ValueKind,
    /// Committer's cheating probability.
    pub pac: f64,
    pub pac_kind: ValueKind,
    pub stderr: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

impl SecurityReport {
    pub fn validate(&self) -> Result<()> {
        if !(0.5 - 1e-12..=1.0 + 1e-12).contains(&self.pbc) {
            return Err(Error::InvalidState(format!("pbc {} outside [1/2, 1]", self.pbc)));
        }
        if !(0.0..=1.0).contains(&self.pac) {
            return Err(Error::InvalidState(format!("pac {} outside [0, 1]", self.pac)));
        }
        let mc = self.pac_kind == ValueKind::MonteCarlo || self.pbc_kind == ValueKind::MonteCarlo;
        if mc && !self.stderr.is_some_and(|s| s > 0.0) {
            return Err(Error::InvalidState("Monte Carlo entry without positive stderr".into()));
        }
        Ok(())
    }
}

/// Fixed CSV header.
pub const CSV_HEADER: [&str; 12] =
    ["protocol", "n", "m", "N", "overlap", "eta", "pbc", "pbc_kind", "pac", "pac_kind", "stderr", "seed"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Reports as CSV with [`CSV_HEADER`].
pub fn reports_to_csv(reports: &[SecurityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.protocol.name().to_string(),
            r.n.to_string(),
            opt(r.m),
            opt(r.big_n),
            r.overlap.map(num).unwrap_or_default(),
            r.eta.map(num).unwrap_or_default(),
            num(r.pbc),
            r.pbc_kind.name().to_string(),
            num(r.pac),
            r.pac_kind.name().to_string(),
            r.stderr.map(num).unwrap_or_default(),
            opt(r.seed),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Family and fixed parameters of a sweep; the grid variable is `n` for
/// QBC0 and `m` for the QBC2 families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SweepFamily {
    /// Closed-form concealment and the exact aligned cheat.
    Qbc0 { overlap: f64 },
    /// Honest receiver (`pbc = ½`) and `pac = p_A^m`.
    Qbc2 { p_a: f64 },
    /// As `Qbc2` with `pac` estimated by sampling the detector.
    Qbc2MonteCarlo { detection: Vec<Vec<f64>>, trials: usize, seed: u64 },
}

/// Least-squares line through `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub points: usize,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let k = xs.len();
    if k < 2 || ys.len() != k {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some(LinearFit { slope, intercept, rms_residual: (rss / k as f64).sqrt(), points: k })
}

/// Log-linear fits of a sweep: `ln(pbc − ½)` and `ln(1 − pac)` (QBC0) or
/// `ln pac` (QBC2) against the grid variable. Points where the logarithm
/// is undefined are left out.
#[derive(Clone, Debug, Serialize)]
pub struct SweepFit {
    pub variable: &'static str,
    pub log_pbc_excess: Option<LinearFit>,
    pub log_pac: Option<LinearFit>,
    /// `"1-pac"` or `"pac"`.
    pub pac_transform: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub family: SweepFamily,
    pub rows: Vec<SecurityReport>,
    /// Grid points that could not be evaluated (for example beyond the
    /// dimension cap), with the reason.
    pub errors: Vec<(usize, String)>,
    pub fit: SweepFit,
}

fn sweep_point(family: &SweepFamily, x: usize) -> Result<SecurityReport> {
    let start = std::time::Instant::now();
    let mut r = match family {
        SweepFamily::Qbc0 { overlap } => {
            let pbc = qbc0_concealment(x, *overlap)?;
            let (e0, e1) = qbc0_ensembles(x, *overlap)?;
            let chain = ip_chain_report(&e0, &e1, None)?;
            SecurityReport {
                protocol: ProtocolId::Qbc0,
                n: x,
                m: None,
                big_n: None,
                overlap: Some(*overlap),
                eta: None,
                pbc,
                pbc_kind: ValueKind::Exact,
                pac: chain.pac,
                pac_kind: ValueKind::Exact,
                stderr: None,
                samples: None,
                seed: None,
                wall_time: Default::default(),
            }
        }
        SweepFamily::Qbc2 { p_a } => SecurityReport {
            protocol: ProtocolId::Qbc2,
            n: x,
            m: Some(x),
            big_n: None,
            overlap: None,
            eta: None,
            pbc: 0.5,
            pbc_kind: ValueKind::Exact,
            pac: p_a.powi(x as i32),
            pac_kind: ValueKind::Exact,
            stderr: None,
            samples: None,
            seed: None,
            wall_time: Default::default(),
        },
        SweepFamily::Qbc2MonteCarlo { detection, trials, seed } => {
            let s = crate::protocols::rng::derive_seed(*seed, x as u64);
            let est = qbc2_pa_monte_carlo(detection, x, *trials, s);
            let se = (est * (1.0 - est) / *trials as f64).sqrt().max(1.0 / *trials as f64);
            SecurityReport {
                protocol: ProtocolId::Qbc2,
                n: x,
                m: Some(x),
                big_n: None,
                overlap: None,
                eta: None,
                pbc: 0.5,
                pbc_kind: ValueKind::Exact,
                pac: est,
                pac_kind: ValueKind::MonteCarlo,
                stderr: Some(se),
                samples: Some(*trials),
                seed: Some(s),
                wall_time: Default::default(),
            }
        }
    };
    r.wall_time = start.elapsed();
    r.validate()?;
    Ok(r)
}

/// Evaluates every grid point in parallel; failures are collected per point
/// instead of aborting the sweep. Rows come back in grid order.
pub fn us_ip_sweep(family: &SweepFamily, grid: &[usize]) -> SweepOutput {
    let results: Vec<(usize, Result<SecurityReport>)> =
        grid.par_iter().map(|&x| (x, sweep_point(family, x))).collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (x, r) in results {
        match r {
            Ok(rep) => rows.push(rep),
            Err(e) => errors.push((x, e.to_string())),
        }
    }
    let qbc0 = matches!(family, SweepFamily::Qbc0 { .. });
    let xs_for = |f: &dyn Fn(&SecurityReport) -> f64| -> (Vec<f64>, Vec<f64>) {
        rows.iter()
            .filter_map(|r| {
                let y = f(r);
                y.is_finite().then_some((if qbc0 { r.n } else { r.m.unwrap_or(r.n) } as f64, y))
            })
            .unzip()
    };
    let (x1, y1) = xs_for(&|r| (r.pbc - 0.5).ln());
    let (x2, y2) = xs_for(&|r| if qbc0 { (1.0 - r.pac).ln() } else { r.pac.ln() });
    let fit = SweepFit {
        variable: if qbc0 { "n" } else { "m" },
        log_pbc_excess: least_squares(&x1, &y1),
        log_pac: least_squares(&x2, &y2),
        pac_transform: if qbc0 { "1-pac" } else { "pac" },
    };
    SweepOutput { family: family.clone(), rows, errors, fit }
}
