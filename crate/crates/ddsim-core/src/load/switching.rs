//! The designed half of the nominal dynamics: randomized mode switching.
//!
//! At each sampling instant the load consults a probability curve over its
//! deadband position. A cooling device's switch-on curve rises toward the
//! hot end; its switch-off curve is the same curve mirrored about the
//! deadband center, so the design is one shape evaluated two ways. Heating
//! devices swap the two roles.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::mean_field::StateGrid;

/// Logistic switching-curve shape. `center_offset` is the inflection point
/// as a fraction of the deadband (0 = cold end, 1 = hot end); `steepness` is
/// the logistic slope in deadband-fraction units. Large steepness approaches the
/// deterministic thermostat; the default (12) leaves enough randomness for
/// the population to stay well mixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticShape {
    pub center_offset: f64,
    pub steepness: f64,
}

impl LogisticShape {
    fn eval(&self, frac: f64) -> f64 {
        1.0 / (1.0 + Float::exp(-self.steepness * (frac - self.center_offset)))
    }
}

/// Per-bin switch-on and switch-off probabilities.
///
/// The mirror symmetry `p_off(bin) = p_on(last - bin)` makes the rule
/// even-handed about the deadband center. For heating devices the roles are
/// exchanged (switch on when cold).
pub fn switching_curves(
    d_half: usize,
    shape: LogisticShape,
    cooling: bool,
) -> (Vec<f64>, Vec<f64>) {
    let base: Vec<f64> = (0..d_half)
        .map(|k| shape.eval(k as f64 / (d_half - 1) as f64))
        .collect();
    let mirrored: Vec<f64> = base.iter().rev().copied().collect();
    if cooling {
        (base, mirrored)
    } else {
        (mirrored, base)
    }
}

/// Assembles the `d x 2` mode-transition matrix from the switching curves:
/// row `x = (mode, bin)` holds the probabilities of being (off, on) at the
/// next instant. Column 0 is off, column 1 is on.
pub fn build_r0(grid: &StateGrid, p_on: &[f64], p_off: &[f64]) -> DMatrix<f64> {
    let d = grid.d();
    let mut r0 = DMatrix::<f64>::zeros(d, 2);
    for x in 0..d {
        let bin = grid.bin_of(x);
        if grid.is_on(x) {
            r0[(x, 0)] = p_off[bin];
            r0[(x, 1)] = 1.0 - p_off[bin];
        } else {
            r0[(x, 0)] = 1.0 - p_on[bin];
            r0[(x, 1)] = p_on[bin];
        }
    }
    r0
}
