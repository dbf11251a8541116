use std::sync::OnceLock;

/// Absolute geometric tolerance for all polytope predicates.
pub const DEFAULT_GEOM_EPS: f64 = 1e-9;

/// Residual allowed in the instantaneous power balance of storage-less units [MW].
pub const BALANCE_EPS: f64 = 1e-6;

/// The geometric tolerance in effect for this process.
///
/// `FLEXCUBE_EPS` overrides the default; it is read once and meant for testing.
pub fn geom_eps() -> f64 {
    static EPS: OnceLock<f64> = OnceLock::new();
    *EPS.get_or_init(|| {
        std::env::var("FLEXCUBE_EPS")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|e| e.is_finite() && *e > 0.0)
            .unwrap_or(DEFAULT_GEOM_EPS)
    })
}
