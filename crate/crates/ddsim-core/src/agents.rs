//! Finite populations of individually simulated loads.
//!
//! Each agent runs the same randomized local policy that defines the
//! mean-field model: an exponential clock at its state's sampling rate, and
//! a draw from the tilted transition row `S_zeta(x, .)` at each tick
//! (self-transitions included — the chain is uniformized, so ticking without
//! moving is meaningful). Agreement between a fleet's empirical average and
//! the mean-field trajectory is the law-of-large-numbers check that the
//! aggregate model earns its keep.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mean_field::{myopic_tilt, ControlledModel};
use crate::signal::TimeSeries;

/// Per-agent quality-of-service counters, aggregated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QosMetrics {
    /// Mean number of on/off mode switches per agent per day.
    pub switches_per_agent_day: f64,
    /// Mean landings per agent-day in a "regret" state: an end bin whose
    /// nominal policy says to flip modes with probability above one half
    /// (the agent is past the point where the thermostat rule would have
    /// acted).
    pub excursions_per_agent_day: f64,
}

/// A population of agents sharing one controlled-Markov model.
#[derive(Debug, Clone)]
pub struct Fleet {
    states: Vec<usize>,
    /// Absolute time of each agent's next sampling tick, seconds.
    next_tick: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
    t: f64,
    switches: u64,
    excursions: u64,
    /// States counted as excursions (see [`QosMetrics`]).
    regret_states: Vec<bool>,
    /// Cached per-row cumulative distributions of `S_zeta` for the command
    /// currently in force.
    cached_zeta: f64,
    row_cdf: DMatrix<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn row_cdf_for(model: &ControlledModel, zeta: f64) -> DMatrix<f64> {
    let s = myopic_tilt(&model.s0, &model.util, zeta);
    let d = s.nrows();
    let mut cdf = DMatrix::<f64>::zeros(d, d);
    for x in 0..d {
        let mut acc = 0.0;
        for y in 0..d {
            acc += s[(x, y)];
            cdf[(x, y)] = acc;
        }
        // Guard the last entry against roundoff so a draw of ~1.0 cannot
        // fall off the row.
        cdf[(x, d - 1)] = 1.0;
    }
    cdf
}

impl Fleet {
    /// `n` agents with states drawn from the model's invariant pmf, clocks
    /// already exponentially staggered. Each agent gets its own counter-mode
    /// stream, so fleets of different sizes share no randomness.
    pub fn new(model: &ControlledModel, n: usize, t0: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                requirement: "a fleet needs at least one agent",
            });
        }
        let d = model.grid.d();
        // Inverse-CDF of the invariant pmf.
        let mut pi_cdf = Vec::with_capacity(d);
        let mut acc = 0.0;
        for x in 0..d {
            acc += model.pi0[x];
            pi_cdf.push(acc);
        }
        pi_cdf[d - 1] = 1.0;

        let mut mix = seed;
        let mut states = Vec::with_capacity(n);
        let mut next_tick = Vec::with_capacity(n);
        let mut rngs = Vec::with_capacity(n);
        for _ in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(&mut mix));
            let u: f64 = rng.random_range(0.0..1.0);
            let x = pi_cdf.partition_point(|&c| c < u).min(d - 1);
            let rate = model.rates.rate_for(model.grid.is_on(x));
            let e: f64 = 1.0 - rng.random_range(0.0..1.0);
            next_tick.push(t0 + -Float::ln(e) / rate);
            states.push(x);
            rngs.push(rng);
        }

        // Regret states: end bins where the nominal rule itself flips modes
        // with probability > 1/2.
        let half = model.grid.d_half;
        let regret_states = (0..d)
            .map(|x| {
                let bin = model.grid.bin_of(x);
                if bin != 0 && bin != half - 1 {
                    return false;
                }
                let flip: f64 = (0..d)
                    .filter(|&y| model.grid.is_on(y) != model.grid.is_on(x))
                    .map(|y| model.s0[(x, y)])
                    .sum();
                flip > 0.5
            })
            .collect();

        Ok(Self {
            states,
            next_tick,
            rngs,
            t: t0,
            switches: 0,
            excursions: 0,
            regret_states,
            cached_zeta: 0.0,
            row_cdf: row_cdf_for(model, 0.0),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Advances every agent to `until` under a constant command `zeta`,
    /// processing each agent's Poisson ticks in order.
    pub fn step(&mut self, model: &ControlledModel, zeta: f64, until: f64) {
        if zeta != self.cached_zeta {
            self.row_cdf = row_cdf_for(model, zeta);
            self.cached_zeta = zeta;
        }
        let d = model.grid.d();
        for i in 0..self.states.len() {
            let mut x = self.states[i];
            let mut tick = self.next_tick[i];
            while tick < until {
                let u: f64 = self.rngs[i].random_range(0.0..1.0);
                let row = self.row_cdf.row(x);
                let mut y = 0usize;
                while y + 1 < d && row[y] < u {
                    y += 1;
                }
                if model.grid.is_on(y) != model.grid.is_on(x) {
                    self.switches += 1;
                }
                if self.regret_states[y] && y != x {
                    self.excursions += 1;
                }
                x = y;
                let rate = model.rates.rate_for(model.grid.is_on(x));
                let e: f64 = 1.0 - self.rngs[i].random_range(0.0..1.0);
                tick += -Float::ln(e) / rate;
            }
            self.states[i] = x;
            self.next_tick[i] = tick;
        }
        self.t = until;
    }

    /// Mean power per agent right now, kW.
    pub fn mean_power(&self, model: &ControlledModel) -> f64 {
        let total: f64 = self.states.iter().map(|&x| model.util[x]).sum();
        total / self.states.len() as f64
    }

    /// Empirical state distribution.
    pub fn histogram(&self, model: &ControlledModel) -> Vec<f64> {
        let mut h = alloc::vec![0.0; model.grid.d()];
        for &x in &self.states {
            h[x] += 1.0 / self.states.len() as f64;
        }
        h
    }

    pub fn switch_count(&self) -> u64 {
        self.switches
    }

    pub fn excursion_count(&self) -> u64 {
        self.excursions
    }
}

/// A fleet run's output: the empirical mean power on the command grid plus
/// quality-of-service counters.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetHistory {
    /// Mean power per agent, kW, aligned with the command series.
    pub power: TimeSeries,
    pub qos: QosMetrics,
    pub switches_total: u64,
    pub excursions_total: u64,
}

/// Drives a fleet along a command series. The command is zero-order-held for
/// `hold_s` seconds at a time (the broadcast period), regardless of the
/// series' own sample spacing.
pub fn run_fleet(
    model: &ControlledModel,
    n: usize,
    seed: u64,
    zeta: &TimeSeries,
    hold_s: f64,
) -> Result<FleetHistory> {
    let held = zeta.quantize_zoh(hold_s);
    let mut fleet = Fleet::new(model, n, held.t0, seed)?;
    let mut power = Vec::with_capacity(held.len());
    power.push(fleet.mean_power(model));
    for k in 0..held.len() - 1 {
        fleet.step(model, held.values[k], held.time_at(k + 1));
        power.push(fleet.mean_power(model));
    }
    let days = (held.t_end() - held.t0) / 86_400.0;
    let agent_days = (n as f64 * days).max(f64::MIN_POSITIVE);
    Ok(FleetHistory {
        power: TimeSeries::new(held.t0, held.dt, power, "kW")?,
        qos: QosMetrics {
            switches_per_agent_day: fleet.switches as f64 / agent_days,
            excursions_per_agent_day: fleet.excursions as f64 / agent_days,
        },
        switches_total: fleet.switches,
        excursions_total: fleet.excursions,
    })
}
