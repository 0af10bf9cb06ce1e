//! Identification of the nature half of the dynamics: where the temperature
//! bin goes between one Poisson sampling instant and the next, conditioned on
//! the load's current (mode, bin) state.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tcl::{NominalTrajectory, TemperatureGrid};
use super::LoadClass;
use crate::error::{Error, Result};
use crate::mean_field::{SamplingRates, StateGrid};

/// Knobs for the simulate-and-identify pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyConfig {
    pub rates: SamplingRates,
    /// Number of temperature bins per mode.
    pub d_half: usize,
    /// Thermal simulation step, seconds.
    pub dt: f64,
    /// Thermal simulation length, seconds.
    pub horizon_s: f64,
    /// Samples before this time are discarded (start-up transient).
    pub warmup_s: f64,
    /// Minimum sample count per (mode, bin) state for the empirical
    /// conditional to be trusted.
    pub min_visits: usize,
    pub seed: u64,
}

impl IdentifyConfig {
    /// Class defaults. Horizons are sized so that even the least-visited
    /// temperature bin collects well over `min_visits` samples: water heaters
    /// cycle rarely, so they simulate longer. The warm-up discards the first
    /// ten nominal cycles to wash out the fixed starting condition.
    pub fn for_class(class: LoadClass, seed: u64) -> Result<Self> {
        let day = 86_400.0;
        let horizon_s = match class {
            LoadClass::Ac => 7.0 * day,
            LoadClass::FastWaterHeater => 30.0 * day,
            LoadClass::SlowWaterHeater => 45.0 * day,
            LoadClass::Pool => {
                return Err(Error::UnknownLoadClass(alloc::string::String::from(
                    "pool (no identification step)",
                )))
            }
        };
        let (on, off) = super::TclParams::nominal(class)?.analytic_dwell_times();
        Ok(Self {
            rates: class.sampling_rates(),
            d_half: 20,
            dt: 1.0,
            horizon_s,
            warmup_s: 10.0 * (on + off),
            min_visits: 20,
            seed,
        })
    }
}

/// Draws Poisson sampling instants over the trajectory and counts bin
/// transitions. See [`identify_q0_at`] for the estimator itself.
///
/// The sampling rate follows the load's mode, so the clock is a
/// Markov-modulated Poisson process. It is realized by thinning on the
/// trajectory grid — each grid step fires with probability
/// `1 - exp(-rate(mode) * dt)` — which re-scales the clock at mode switches
/// exactly (a persistent exponential draw would let the slow off-rate bleed
/// into the start of each on-stint and starve the entry bins of samples).
pub fn identify_q0(
    traj: &NominalTrajectory,
    grid: &TemperatureGrid,
    cfg: &IdentifyConfig,
) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5851_f42d_4c95_7f2d);
    let p_fire = [
        1.0 - Float::exp(-cfg.rates.rate_for(false) * traj.dt),
        1.0 - Float::exp(-cfg.rates.rate_for(true) * traj.dt),
    ];
    let skip = (cfg.warmup_s / traj.dt) as usize;
    let mut times = Vec::new();
    for k in skip..traj.len() {
        let u: f64 = rng.random_range(0.0..1.0);
        if u < p_fire[traj.mode[k] as usize] {
            times.push(traj.t0 + k as f64 * traj.dt);
        }
    }
    identify_q0_at(traj, grid, &times, cfg.min_visits)
}

/// Empirical estimate of `Q0(x, n')`: the probability that the *next*
/// sampling instant finds the temperature in bin `n'`, given state
/// `x = (mode, bin)` at the current instant. Each consecutive pair of sample
/// times contributes one count; rows are normalized by their totals (the
/// conditional form of Bayes' rule on the empirical pair distribution).
///
/// Rows with fewer than `min_visits` counts make the estimate untrustworthy
/// and fail loudly instead of returning a half-identified model.
pub fn identify_q0_at(
    traj: &NominalTrajectory,
    grid: &TemperatureGrid,
    sample_times: &[f64],
    min_visits: usize,
) -> Result<DMatrix<f64>> {
    let sgrid = StateGrid::new(grid.d_half);
    let d = sgrid.d();
    let mut counts = DMatrix::<f64>::zeros(d, grid.d_half);
    let mut totals = vec![0usize; d];
    for pair in sample_times.windows(2) {
        let (on, theta) = traj.state_at(pair[0]);
        let (_, theta_next) = traj.state_at(pair[1]);
        let x = sgrid.index(on, grid.bin_of(theta));
        counts[(x, grid.bin_of(theta_next))] += 1.0;
        totals[x] += 1;
    }
    let thin: Vec<usize> = (0..d).filter(|&x| totals[x] < min_visits).collect();
    if !thin.is_empty() {
        return Err(Error::UnvisitedStates {
            unvisited_count: thin.len(),
            first_unvisited: thin.iter().take(8).map(|&x| sgrid.label(x)).collect(),
            floor: min_visits,
        });
    }
    let mut q0 = counts;
    for x in 0..d {
        let row_total = totals[x] as f64;
        for n in 0..grid.d_half {
            q0[(x, n)] /= row_total;
        }
    }
    Ok(q0)
}
