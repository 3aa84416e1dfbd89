//! Central numeric tolerances.
//!
//! Exact identities are checked at machine-precision scale; statistical and
//! quadrature checks carry their own looser thresholds at the call site.

/// Round-trip transform error, relative.
pub const ROUND_TRIP: f64 = 1e-12;

/// Mean-zero check: `|c_0| ≤ MEAN_ZERO · max|c_k|`.
pub const MEAN_ZERO: f64 = 1e-12;

/// Pointwise exact-identity tolerance (trace-free, symmetry, reconstruction).
pub const EXACT: f64 = 1e-12;

/// Spectral-solve identities (anti-divergence inversion, Leray idempotence).
pub const SPECTRAL: f64 = 1e-10;

/// Block-suite identities (mean flux, transport, normalization).
pub const BLOCKS: f64 = 1e-10;

/// Direction-set pair identity, pure arithmetic on rational vectors.
pub const PAIR_IDENTITY: f64 = 1e-14;

/// Ladder bookkeeping residual, relative to the larger side.
pub const BOOKKEEPING: f64 = 1e-8;

/// Relative comparison helper: `|a - b| ≤ tol · max(|a|, |b|, floor)`.
pub fn close_rel(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * (a.abs().max(b.abs()).max(floor))
}
