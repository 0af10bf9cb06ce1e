//! Pool pumps as a cyclic phase chain.
//!
//! A pump nominally runs about half of every day. Instead of a temperature,
//! its "nature" coordinate is progress through the current on- or off-stint:
//! a chain of phases traversed left to right, with mode flips on completing
//! the last phase. A small per-sample defection probability to the opposite
//! mode keeps every state reachable and gives the command leverage at every
//! phase. The phase-advance probability is calibrated so the expected stint
//! matches the configured dwell.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mean_field::{expected_mode_dwells, ControlledModel, SamplingRates, StateGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolConfig {
    /// Phases per mode; more phases concentrate the stint-length
    /// distribution around its mean.
    pub phases: usize,
    /// Poisson sampling rate, 1/s.
    pub sampling_rate: f64,
    /// Per-sample probability of defecting to the opposite mode's first
    /// phase.
    pub defect: f64,
    /// Target expected stint length in each mode, seconds.
    pub mean_dwell_s: f64,
    /// Pump draw while on, kW.
    pub util_kw: f64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            // Six phases spread the stint lengths enough (sd ~ 5 h about the
            // 12 h mean) that the population's 24 h cycle decoheres over a
            // couple of periods.  With many more phases the fleet keeps a
            // coherent internal clock: the aggregate rings at the cycle
            // harmonics across the whole service band, no low-order filter
            // can invert the dents, and a strong command entrains the clock
            // so tracking error *grows* over days instead of settling.
            phases: 6,
            sampling_rate: 1.0 / 60.0,
            // Interior optimum under command drive: enough defection to damp
            // cycle echoes and give the command direct mode-flip leverage,
            // little enough that the phase clock still sets the dwell (the
            // tilt modulates defection exponentially, so a large defection
            // flow is itself a strong nonlinearity, and far past ~1.3e-3 the
            // 12 h target dwell becomes unreachable outright).
            defect: 4.5e-4,
            mean_dwell_s: 12.0 * 3600.0,
            util_kw: 1.0,
        }
    }
}

impl PoolConfig {
    /// `S0` for a given phase-advance probability. From phase `k` of either
    /// mode: defect with probability `e`; otherwise advance with probability
    /// `advance` (wrapping from the last phase into the opposite mode) or
    /// hold position.
    fn s0(&self, advance: f64) -> DMatrix<f64> {
        let grid = StateGrid::new(self.phases);
        let d = grid.d();
        let mut s0 = DMatrix::<f64>::zeros(d, d);
        for x in 0..d {
            let on = grid.is_on(x);
            let k = grid.bin_of(x);
            let opposite_start = grid.index(!on, 0);
            let next = if k + 1 < self.phases {
                grid.index(on, k + 1)
            } else {
                opposite_start
            };
            s0[(x, opposite_start)] += self.defect;
            s0[(x, next)] += (1.0 - self.defect) * advance;
            s0[(x, x)] += (1.0 - self.defect) * (1.0 - advance);
        }
        s0
    }

    fn dwell_for(&self, advance: f64) -> Result<f64> {
        let model = self.build_with(advance)?;
        let (on, _) = expected_mode_dwells(&model)?;
        Ok(on)
    }

    fn build_with(&self, advance: f64) -> Result<ControlledModel> {
        let grid = StateGrid::new(self.phases);
        ControlledModel::build(
            grid,
            self.s0(advance),
            grid.uniform_util(self.util_kw),
            SamplingRates::symmetric(self.sampling_rate),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value, ok) in [
            ("phases", self.phases as f64, self.phases >= 2),
            (
                "sampling_rate",
                self.sampling_rate,
                self.sampling_rate > 0.0,
            ),
            (
                "defect",
                self.defect,
                self.defect > 0.0 && self.defect < 0.5,
            ),
            ("mean_dwell_s", self.mean_dwell_s, self.mean_dwell_s > 0.0),
            ("util_kw", self.util_kw, self.util_kw > 0.0),
        ] {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    requirement: "pool chain parameter out of range",
                });
            }
        }
        Ok(())
    }
}

/// Builds the pool-pump model, bisecting the phase-advance probability until
/// the chain's expected on-stint matches `mean_dwell_s`. The chain is
/// symmetric between modes, so the off-stint matches too and the duty cycle
/// is exactly one half.
pub fn pool_nominal_model(cfg: &PoolConfig) -> Result<ControlledModel> {
    cfg.validate()?;
    // Without the defection path the stint is Erlang(phases) with mean
    // phases / (advance * rate); start the bracket around that value.
    let ideal = cfg.phases as f64 / (cfg.sampling_rate * cfg.mean_dwell_s);
    if ideal >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "mean_dwell_s",
            value: cfg.mean_dwell_s,
            requirement: "dwell too short for the phase count at this sampling rate",
        });
    }
    let (mut lo, mut hi) = (ideal / 4.0, (ideal * 4.0).min(1.0 - 1e-9));
    // Dwell is monotone decreasing in the advance probability.
    if !(cfg.dwell_for(lo)? > cfg.mean_dwell_s && cfg.dwell_for(hi)? < cfg.mean_dwell_s) {
        return Err(Error::InvalidParameter {
            name: "defect",
            value: cfg.defect,
            requirement: "defection dominates the stint length; target dwell unreachable",
        });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cfg.dwell_for(mid)? > cfg.mean_dwell_s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cfg.build_with(0.5 * (lo + hi))
}
