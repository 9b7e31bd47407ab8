//! Pass thresholds shared by the verification battery and the tests.

/// Purely algebraic identities (transform roundtrips, intertwining,
/// composition, heat-equation split), relative to the input scale.
pub const ALGEBRAIC: f64 = 1e-12;

/// `f → c → u → f` reconstruction, relative to `max |f|`.
pub const ROUNDTRIP: f64 = 1e-10;

/// Comparisons that pass through a time integrator.
pub const INTEGRATOR: f64 = 1e-8;

/// Drift of `Σ f` under evolution.
pub const CONSERVATION: f64 = 1e-9;

/// Drift of `Σ f` under exact sector propagation.
pub const CONSERVATION_EXACT: f64 = 1e-12;

/// A perturbed product state must show a polymer at least this large.
pub const CORRELATION_DETECT: f64 = 1e-5;

/// Slack allowed when checking that truncation errors do not grow with
/// `k_max`.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// `residual / scale`, or the bare residual for a zero scale.
pub fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}
