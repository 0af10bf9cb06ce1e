//! Exact zero-order-hold time-domain simulation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::expm::expm;
use crate::lti::StateSpace;
use crate::signal::TimeSeries;

/// Steps a state-space system under a piecewise-constant (ZOH) input with the
/// exact discretization
///
/// ```text
/// [Ad  Bd]          ([A  B]     )
/// [ 0   I]  =  expm ([0  0] * dt)
/// ```
///
/// so that for inputs held constant over each step the discrete state matches
/// the continuous solution to roundoff. Used both for standalone filter
/// simulation and inside the closed grid loop.
#[derive(Debug, Clone)]
pub struct ZohSimulator {
    ad: DMatrix<f64>,
    bd: DMatrix<f64>,
    c: DMatrix<f64>,
    d: f64,
    x: DVector<f64>,
    dt: f64,
}

impl ZohSimulator {
    /// Discretizes `ss` at step `dt` (SISO; `dt > 0`).
    pub fn new(ss: &StateSpace, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidTimeSeries { dt, len: 1 });
        }
        let n = ss.order();
        let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = ss.a[(i, j)] * dt;
            }
            aug[(i, n)] = ss.b[(i, 0)] * dt;
        }
        let e = expm(&aug);
        let ad = e.view((0, 0), (n, n)).into_owned();
        let bd = e.view((0, n), (n, 1)).into_owned();
        Ok(Self {
            ad,
            bd,
            c: ss.c.clone(),
            d: ss.d[(0, 0)],
            x: DVector::zeros(n),
            dt,
        })
    }

    /// Current output `C x + D u` for the input about to be applied.
    pub fn output(&self, u: f64) -> f64 {
        let mut y = self.d * u;
        for i in 0..self.x.len() {
            y += self.c[(0, i)] * self.x[i];
        }
        y
    }

    /// Emits the output at the current instant, then advances the state one
    /// step with `u` held over the interval.
    pub fn step(&mut self, u: f64) -> f64 {
        let y = self.output(u);
        self.x = &self.ad * &self.x + &self.bd * u;
        y
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Resets the state to zero.
    pub fn reset(&mut self) {
        self.x.fill(0.0);
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }
}

/// Simulates a proper LTI system from rest under the input series, sample for
/// sample: `y[k]` is the output at `t[k]` with `u[k]` applied from `t[k]`
/// onward (zero-order hold). Output length equals input length.
pub fn simulate_lti(ss: &StateSpace, u: &TimeSeries) -> Result<TimeSeries> {
    let mut sim = ZohSimulator::new(ss, u.dt)?;
    let values = u.values.iter().map(|&uk| sim.step(uk)).collect();
    TimeSeries::new(u.t0, u.dt, values, &u.units)
}
