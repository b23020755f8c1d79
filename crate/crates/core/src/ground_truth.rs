//! Pinned numerical constants for QBC2: the optimal permutation-detection
//! probability `p_A` with its duality certificate, the largest test-pass
//! probability `p̄₁` of an informative cheating set, and the planner's
//! schedule built from them.
//!
//! The values live in `data/ground_truth.json`, written by `qbc pa` and
//! `qbc plan --write`, and are compiled into the library so tests catch
//! regressions.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::analysis::{p1_max_search, qbc2_planner, P1Search, PlannerResult};
use crate::error::Result;
use crate::protocols::qbc2::qbc2_pa;

pub const FORMAT_VERSION: u32 = 1;

/// Contents of the shipped ground-truth file.
pub const GROUND_TRUTH_JSON: &str = include_str!("../data/ground_truth.json");

/// `p_A` together with the optimizer bracket that certifies it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaRecord {
    pub value: f64,
    pub upper_bound: f64,
    pub certificate: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub version: u32,
    pub p_a: PaRecord,
    /// Security target used for `p̄₁` and the planner.
    pub epsilon: f64,
    pub p1: P1Search,
    pub planner: PlannerResult,
}

impl GroundTruth {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn compute_pa(tol: f64, max_iter: usize) -> Result<PaRecord> {
    let r = qbc2_pa(tol, max_iter)?;
    Ok(PaRecord {
        value: r.pcm,
        upper_bound: r.upper_bound,
        certificate: r.certificate,
        tolerance: tol,
        max_iter,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Recomputes every constant from scratch: `p_A`, then `m` for `epsilon`,
/// then `p̄₁` at that `m`, then the planner.
pub fn compute(epsilon: f64, tol: f64, max_iter: usize) -> Result<GroundTruth> {
    let p_a = compute_pa(tol, max_iter)?;
    let m = qbc2_planner(epsilon, p_a.value, 0.5)?.m;
    let p1 = p1_max_search(m as usize, epsilon)?;
    let planner = qbc2_planner(epsilon, p_a.value, p1.value)?;
    Ok(GroundTruth { version: FORMAT_VERSION, p_a, epsilon, p1, planner })
}

/// The shipped constants, parsed once.
pub fn pinned() -> &'static GroundTruth {
    static CELL: OnceLock<GroundTruth> = OnceLock::new();
    CELL.get_or_init(|| GroundTruth::from_json(GROUND_TRUTH_JSON).expect("shipped ground-truth file is valid"))
}
