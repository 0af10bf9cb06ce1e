//! Crate-wide error type.
//!
//! Variants are grouped by pipeline stage so that callers (in particular the
//! CLI) can map them onto coarse failure categories: configuration,
//! identification, filter design, and simulation divergence.

use alloc::string::String;
use alloc::vec::Vec;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    // --- configuration / construction -----------------------------------
    #[error("transfer function denominator is zero (all coefficients vanish)")]
    ZeroDenominator,

    #[error("improper transfer function: numerator degree {num_deg} exceeds denominator degree {den_deg}")]
    Improper { num_deg: usize, den_deg: usize },

    #[error("invalid band [{f_lo}, {f_hi}] rad/s: edges must satisfy 0 < f_lo < f_hi")]
    InvalidBand { f_lo: f64, f_hi: f64 },

    #[error("invalid time series: dt = {dt} must be positive and length {len} must be at least 1")]
    InvalidTimeSeries { dt: f64, len: usize },

    #[error("time step {dt} s too coarse for thermal time constant {rc_hours} h (need dt <= {max_dt} s)")]
    TimeStepTooCoarse { dt: f64, rc_hours: f64, max_dt: f64 },

    #[error("unknown load class `{0}`")]
    UnknownLoadClass(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    // --- frequency-domain evaluation -------------------------------------
    #[error("evaluation grid hits a pole: denominator vanishes at s = {re} + {im}j rad/s")]
    PoleOnGrid { re: f64, im: f64 },

    // --- identification ---------------------------------------------------
    #[error(
        "identification visited {unvisited_count} state(s) fewer than {floor} times \
         (first few: {first_unvisited:?}); lengthen the nominal simulation or raise the \
         disturbance intensity so every (mode, bin) pair is reached"
    )]
    UnvisitedStates {
        unvisited_count: usize,
        first_unvisited: Vec<String>,
        floor: usize,
    },

    #[error(
        "chain is reducible: {unreachable_count} state(s) not mutually reachable from state 0 \
         (first few: {unreachable:?}); the invariant pmf is not unique"
    )]
    ReducibleChain {
        unreachable_count: usize,
        unreachable: Vec<String>,
    },

    #[error(
        "invariant pmf solve left residual {residual:.3e} > 1e-10; the chain is nearly \
         reducible and the pmf is numerically untrustworthy"
    )]
    IllConditionedChain { residual: f64 },

    // --- filter design ----------------------------------------------------
    #[error(
        "rational fit error {max_err_db:.2} dB over the band exceeds the {limit_db} dB limit \
         for order ({num_deg}, {den_deg}); try a higher order"
    )]
    FitTooCoarse {
        max_err_db: f64,
        limit_db: f64,
        num_deg: usize,
        den_deg: usize,
    },

    #[error("inverse filter requires a minimum-phase fit, but a zero sits at {re} + {im}j")]
    NotMinimumPhase { re: f64, im: f64 },

    #[error(
        "compensated response is {max_phase_deg:.0} deg out of phase inside the service band \
         (limit {limit_deg:.0} deg); the magnitude-only fit settled on a reflected zero, so the \
         inverse cancels gain but not phase — change the fit order or grid"
    )]
    PhaseFlippedFit { max_phase_deg: f64, limit_deg: f64 },

    // --- simulation -------------------------------------------------------
    #[error(
        "mean-field state went negative ({min:.3e} at t = {t} s), beyond the -1e-9 roundoff \
         allowance; reduce the integration step"
    )]
    MeanFieldNegative { t: f64, min: f64 },

    #[error("closed loop diverged: |frequency deviation| = {freq_dev:.3} Hz > 1 Hz at t = {t} s")]
    Divergence { t: f64, freq_dev: f64 },
}
