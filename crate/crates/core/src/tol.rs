//! Numerical tolerances shared across the crate.
//!
//! The fixed constants guard type invariants and are not meant to be tuned.
//! [`Tolerances`] collects the thresholds that are configuration: witness
//! dead-bands, classification thresholds and completeness checks.

use serde::{Deserialize, Serialize};

/// Max-norm bound on `M - M†` for Hermitian operators.
pub const HERM_TOL: f64 = 1e-10;
/// Lowest admissible eigenvalue of a positive operator.
pub const PSD_TOL: f64 = 1e-10;
/// Slack on state norms and traces.
pub const NORM_TOL: f64 = 1e-9;
/// Below this trace a POVM element cannot define a retrodicted state.
pub const TRACE_FLOOR: f64 = 1e-12;
/// Elements with a smaller trace are flagged as null outcomes.
pub const NULL_TRACE: f64 = 1e-14;
/// Slack allowed on Born probabilities before they are rejected.
pub const PROBABILITY_TOL: f64 = 1e-9;
/// Wigner lower bound slack in the ħ = 1 convention.
pub const WIGNER_BOUND_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-norm residual of `ΣΠ − I` on the guarded subspace.
    pub completeness_tol: f64,
    /// Projectivity threshold for the "projective" categories.
    pub pi_min: f64,
    /// Ideality threshold separating ideal from non-ideal projective outcomes.
    pub zeta_min: f64,
    /// Negativity-volume dead-band.
    pub neg_tol: f64,
    /// Sub-vacuum variance dead-band.
    pub sq_tol: f64,
    /// Allowed shortfall of the moment-matched overlap for a Gaussian verdict.
    pub gauss_tol: f64,
    /// Tail weight λ^{2d} above which a TMSV truncation triggers a warning.
    pub tail_tol: f64,
    /// Tail weight λ^{2d} above which scans refuse to run.
    pub tail_refuse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            completeness_tol: 1e-9,
            pi_min: 0.99,
            zeta_min: 0.99,
            neg_tol: 1e-6,
            sq_tol: 1e-6,
            gauss_tol: 1e-3,
            tail_tol: 1e-8,
            tail_refuse: 1e-6,
        }
    }
}
