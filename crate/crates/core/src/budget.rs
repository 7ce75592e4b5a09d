//! Tolerances and size budgets shared by the exact solvers.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for metric axioms, weight sums and pushforward equality.
pub const TOL: f64 = 1e-12;

/// Tolerance for distance and weight matching in isomorphism tests.
pub const ISO_TOL: f64 = 1e-9;

/// Scaled tolerance, relative once magnitudes exceed one.
pub(crate) fn tol_at(x: f64) -> f64 {
    if x.is_finite() {
        TOL * x.abs().max(1.0)
    } else {
        TOL
    }
}

/// Size limits above which exact routines refuse with a resource-limit error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest space a product or power may produce.
    pub max_points: usize,
    /// Largest domain for the exact Lipschitz domination search.
    pub dominance_points: usize,
    /// Largest space for the exact isomorphism search.
    pub iso_points: usize,
    /// Largest `|X|·|Y|` for the exact box distance.
    pub box_pairs: usize,
    /// Largest support for the subset-scan Prokhorov oracle.
    pub subset_scan_points: usize,
    /// Largest support for the exact partial diameter.
    pub pdiam_points: usize,
    /// Largest space for the exact separation distance.
    pub sep_points: usize,
    /// Largest space for the exact covering number.
    pub cov_points: usize,
    /// Largest domain for the exact maximum-weight independent set.
    pub mwis_points: usize,
    /// Node limit for backtracking searches.
    pub search_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_points: 4096,
            dominance_points: 9,
            iso_points: 10,
            box_pairs: 20,
            subset_scan_points: 14,
            pdiam_points: 22,
            sep_points: 40,
            cov_points: 40,
            mwis_points: 12,
            search_nodes: 20_000_000,
        }
    }
}
