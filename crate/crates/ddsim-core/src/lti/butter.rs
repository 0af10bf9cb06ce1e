//! Butterworth filter designs used for the service-band prefilters and the
//! ideal high/low-pass actuators.

use alloc::vec;

use crate::error::{Error, Result};
use crate::lti::TransferFunction;

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Order-2 Butterworth prototype `1/(p^2 + sqrt(2) p + 1)` transformed to a
/// bandpass over `[f_lo, f_hi]` rad/s (order 4 in `s`).
///
/// By construction `|M(j w0)| = 1` at the geometric center `w0 =
/// sqrt(f_lo * f_hi)` and `|M| = 1/sqrt(2)` at both edges.
pub fn butterworth_bandpass(f_lo: f64, f_hi: f64) -> Result<TransferFunction> {
    if !(f_lo > 0.0) || !(f_hi > f_lo) {
        return Err(Error::InvalidBand { f_lo, f_hi });
    }
    let w0sq = f_lo * f_hi;
    let bw = f_hi - f_lo;
    // Substitute p = (s^2 + w0^2) / (bw * s) into the prototype and clear
    // denominators: den = (s^2+w0^2)^2 + sqrt(2) bw s (s^2+w0^2) + bw^2 s^2.
    let num = vec![bw * bw, 0.0, 0.0];
    let den = vec![
        1.0,
        SQRT2 * bw,
        2.0 * w0sq + bw * bw,
        SQRT2 * bw * w0sq,
        w0sq * w0sq,
    ];
    TransferFunction::new(&num, &den)
}

/// Order-2 Butterworth low-pass with cutoff `fc` rad/s and unity DC gain.
pub fn butterworth_lowpass(fc: f64) -> Result<TransferFunction> {
    if !(fc > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fc",
            value: fc,
            requirement: "cutoff must be positive",
        });
    }
    TransferFunction::new(&[fc * fc], &[1.0, SQRT2 * fc, fc * fc])
}

/// Order-2 Butterworth high-pass with cutoff `fc` rad/s and unity
/// high-frequency gain.
pub fn butterworth_highpass(fc: f64) -> Result<TransferFunction> {
    if !(fc > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fc",
            value: fc,
            requirement: "cutoff must be positive",
        });
    }
    TransferFunction::new(&[1.0, 0.0, 0.0], &[1.0, SQRT2 * fc, fc * fc])
}
