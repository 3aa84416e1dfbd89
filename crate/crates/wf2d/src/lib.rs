//! Spectral toolkit for the 2-D torus `[-π, π]²`.
//!
//! The crate builds, step by step, a convex-integration ladder for the
//! stochastically forced generalized Navier-Stokes equations with fractional
//! dissipation `(-Δ)^m`, `m ∈ (0, 1)`:
//!
//! * [`field`] — collocation-sample / Fourier-mode field representation with
//!   exact spectral calculus and the norms the estimates use,
//! * [`ops`] — Fourier multiplier operators (fractional Laplacian, Leray and
//!   band projections) and the torus anti-divergence,
//! * [`blocks`] — intermittent stationary flows `W_ζ = η_ζ b_ζ` and their
//!   frequency-support identities,
//! * [`geometry`] — the eight-direction set and the amplitude coefficients
//!   `γ_ζ` reconstructing a trace-free symmetric matrix,
//! * [`noise`] — the Ornstein-Uhlenbeck forcing layer (additive regime) and
//!   the geometric-Brownian multiplier (multiplicative regime),
//! * [`params`] — the full parameter schedule and its admissibility checker,
//! * [`amplitude`], [`mollify`], [`perturb`], [`stress`], [`iterate`] — the
//!   ladder step itself: mollification, stress-to-amplitude map, perturbation
//!   synthesis, oscillation algebra and Reynolds/pressure assembly,
//! * [`verify`], [`sweep`], [`report`] — the verification harness, scaling
//!   sweeps and machine-readable reports backing the CLI.

pub mod amplitude;
pub mod blocks;
pub mod chi;
pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod iterate;
pub mod mollify;
pub mod noise;
pub mod ops;
pub mod params;
pub mod perturb;
pub mod report;
pub mod stress;
pub mod sweep;
pub mod timegrid;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Components, TorusField};
pub use geometry::TraceFreeSym2;
