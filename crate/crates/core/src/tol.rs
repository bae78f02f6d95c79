//! Numerical tolerances used across the crate.

/// Absolute tolerance on constraint residuals when classifying points.
pub const FEAS: f64 = 1e-8;
/// Smallest pivot magnitude accepted by the simplex.
pub const PIVOT: f64 = 1e-10;
/// Optimality and phase-one feasibility tolerance of the simplex.
pub const LP: f64 = 1e-9;
/// Rows with every entry at or below this are treated as zero.
pub const ZERO_ROW: f64 = 1e-12;
/// A cost vector with norm at or below this counts as zero.
pub const ZERO_COST: f64 = 1e-9;
/// `|bᵀy|` at or below this counts as zero in the relative gap.
pub const ZERO_RHS: f64 = 1e-12;
