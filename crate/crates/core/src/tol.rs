//! Default tolerances and thresholds, collected in one place.

/// Row-sum tolerance for simplex and tangent-space membership.
pub const ROW_SUM: f64 = 1e-12;
/// Opinion threshold used when classifying simulated states.
pub const THETA_SIM: f64 = 0.05;
/// Opinion threshold used in exact computations.
pub const THETA_EXACT: f64 = 0.0;
/// Finite-difference step for balance terms and Jacobians.
pub const FD_STEP: f64 = 1e-5;
/// `|γ − δ|` at or below this is treated as mode interaction.
pub const MODE_INTERACTION: f64 = 1e-12;
/// Pivot tolerance for Gram–Schmidt orthonormalization.
pub const GRAM_SCHMIDT_PIVOT: f64 = 1e-10;
/// Maximum number of elements enumerated when closing a subgroup.
pub const GROUP_ELEMENT_CAP: usize = 10_000;
/// Maximum `|S_n × S_k|` accepted by the brute-force axial oracle.
pub const ORACLE_ORDER_CAP: usize = 10_000;
/// Integration is declared divergent past this sup-norm.
pub const DIVERGENCE_BOUND: f64 = 100.0;
/// Switchiness metric above this (per unit time) is switch-like.
pub const SWITCH_THRESHOLD: f64 = 0.1;
/// Cap on option permutations tried by nearest-axial matching.
pub const NEAREST_AXIAL_PERM_CAP: usize = 720;
