//! Continuous-time LTI toolkit.
//!
//! Rational transfer functions in `s` ([`TransferFunction`]), controllable
//! canonical state-space realizations ([`StateSpace`]), exact zero-order-hold
//! time-domain simulation ([`simulate_lti`], [`ZohSimulator`]), and
//! Butterworth bandpass/low-pass/high-pass designs.
//!
//! Convention: every frequency in this crate is in rad/s. The service bands
//! quoted in cycles per hour are converted at the boundary with
//! [`crate::signal::cyc_per_hour_to_rad_per_s`].

mod butter;
mod expm;
pub mod poly;
mod sim;
mod ss;
mod tf;

pub use butter::{butterworth_bandpass, butterworth_highpass, butterworth_lowpass};
pub use expm::expm;
pub use sim::{simulate_lti, ZohSimulator};
pub use ss::{to_state_space, StateSpace};
pub use tf::{Connection, TransferFunction};
