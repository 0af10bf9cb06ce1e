//! Core library for simulating "virtual batteries" built from fleets of
//! flexible electric loads.
//!
//! The pipeline, end to end:
//!
//! 1. [`load`] — physical thermostatic-load models (air conditioners, water
//!    heaters) are simulated and reduced to finite Markov chains by
//!    Monte-Carlo identification; pool pumps get a hand-built cyclic chain.
//! 2. [`mean_field`] — each chain is wrapped in a family of exponentially
//!    tilted transition matrices (the randomized local control), whose
//!    population-level behavior is the nonlinear mean-field ODE; the ODE is
//!    linearized to an (A, B, C) state-space model about nominal behavior.
//! 3. [`filter_design`] — the linearized aggregate response is fitted with a
//!    low-order minimum-phase rational function and approximately inverted,
//!    then composed with a Butterworth bandpass, so that each load class
//!    looks all-pass (gain one, phase zero) over its band of service.
//! 4. [`agents`] — the same local control run as N individual stochastic
//!    agents with Poisson clocks, used to validate the mean-field limit and
//!    to measure quality-of-service (cycling, temperature excursions).
//! 5. [`grid`] — the closed loop: grid plant, PI compensator, per-class
//!    prefilters, mean-field (or agent) actuation, ideal high/low-pass
//!    actuators, disturbance injection, and the associated metrics.
//!
//! Supporting modules: [`lti`] (transfer functions, state space, exact ZOH
//! simulation, Butterworth designs) and [`signal`] (uniformly sampled time
//! series plus synthetic disturbance/reference generators).
//!
//! The crate is `no_std` + `alloc`; everything that touches files, clocks, or
//! a terminal lives in the companion `ddsim` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agents;
pub mod error;
pub mod filter_design;
pub mod grid;
pub mod load;
pub mod lti;
pub mod mean_field;
pub mod signal;

pub use error::{Error, Result};
