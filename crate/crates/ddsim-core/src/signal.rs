//! Uniformly sampled time series and synthetic test signals.
//!
//! [`TimeSeries`] is the carrier for every signal in the pipeline: commands,
//! per-class control inputs, power deviations, frequency deviations, and
//! disturbances. Synthetic generators stand in for proprietary grid data:
//! band-limited multisines for references and disturbances, and a stylized
//! daily net-load curve for the ramp-tracking experiment.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Time of the first sample, seconds.
    pub t0: f64,
    /// Sample spacing, seconds (strictly positive).
    pub dt: f64,
    /// Sample values.
    pub values: Vec<f64>,
    /// Unit label carried through IO (e.g. "MW", "Hz", "degC").
    pub units: String,
}

impl TimeSeries {
    /// Builds a series, enforcing `dt > 0` and at least one sample.
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, units: &str) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::InvalidTimeSeries {
                dt,
                len: values.len(),
            });
        }
        Ok(Self {
            t0,
            dt,
            values,
            units: String::from(units),
        })
    }

    /// An all-zero series of `n` samples.
    pub fn zeros(t0: f64, dt: f64, n: usize, units: &str) -> Result<Self> {
        Self::new(t0, dt, vec![0.0; n], units)
    }

    /// Samples `f(t)` on a uniform grid of `n` points starting at `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, units: &str, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|k| f(t0 + k as f64 * dt)).collect();
        Self::new(t0, dt, values, units)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.time_at(self.len() - 1)
    }

    /// `(t, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| (self.time_at(k), v))
    }

    /// Value at time `t` under the zero-order-hold convention (last sample at
    /// or before `t`; clamped at the ends).
    pub fn sample_zoh(&self, t: f64) -> f64 {
        let k = ((t - self.t0) / self.dt).floor();
        let k = (k.max(0.0) as usize).min(self.len() - 1);
        self.values[k]
    }

    /// Elementwise map, preserving the grid.
    pub fn map(&self, units: &str, f: impl Fn(f64) -> f64) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            values: self.values.iter().map(|&v| f(v)).collect(),
            units: String::from(units),
        }
    }

    /// Elementwise sum; grids must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            t0: self.t0,
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            units: self.units.clone(),
        })
    }

    /// Elementwise difference `self - other`; grids must match.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            t0: self.t0,
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            units: self.units.clone(),
        })
    }

    /// The sub-series with sample times in `[from_s, to_s]` (inclusive).
    pub fn window(&self, from_s: f64, to_s: f64) -> Result<Self> {
        let lo = ((from_s - self.t0) / self.dt).ceil().max(0.0) as usize;
        let hi = (((to_s - self.t0) / self.dt).floor() as usize).min(self.len() - 1);
        if lo > hi {
            return Err(Error::InvalidTimeSeries { dt: self.dt, len: 0 });
        }
        Ok(Self {
            t0: self.time_at(lo),
            dt: self.dt,
            values: self.values[lo..=hi].to_vec(),
            units: self.units.clone(),
        })
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                context: "time series grids",
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    /// Root-mean-square of the samples.
    pub fn rms(&self) -> f64 {
        let ss: f64 = self.values.iter().map(|v| v * v).sum();
        (ss / self.len() as f64).sqrt()
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Pearson correlation with another series on the same grid.
    pub fn correlation(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let (ma, mb) = (self.mean(), other.mean());
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            let (da, db) = (a - ma, b - mb);
            cov += da * db;
            va += da * da;
            vb += db * db;
        }
        Ok(cov / (va.sqrt() * vb.sqrt()))
    }

    /// Quantizes the series onto a coarser hold grid: the value at `t` becomes
    /// the value at the last multiple of `hold_s` at or before `t`. Used for
    /// the 20-second command delivery to loads.
    pub fn quantize_zoh(&self, hold_s: f64) -> Self {
        let mut out = self.clone();
        for k in 0..out.len() {
            let t = out.time_at(k);
            let boundary = (t / hold_s).floor() * hold_s;
            out.values[k] = self.sample_zoh(boundary);
        }
        out
    }
}

/// Converts a frequency from cycles per hour (the unit used for the load
/// service bands) to rad/s, the unit used everywhere internally.
pub fn cyc_per_hour_to_rad_per_s(f_cyc_hr: f64) -> f64 {
    f_cyc_hr * 2.0 * core::f64::consts::PI / 3600.0
}

/// A band-limited multisine: equal-amplitude sinusoids at `n_components`
/// log-spaced frequencies inside `[f_lo, f_hi]` rad/s with random phases,
/// scaled so the peak absolute value equals `peak`.
///
/// This is the synthetic stand-in for proprietary regulation-signal data in
/// both open-loop references and closed-loop disturbances.
pub fn band_limited_multisine(
    f_lo: f64,
    f_hi: f64,
    n_components: usize,
    peak: f64,
    t0: f64,
    dt: f64,
    n: usize,
    seed: u64,
    units: &str,
) -> Result<TimeSeries> {
    if !(f_lo > 0.0) || f_hi <= f_lo {
        return Err(Error::InvalidBand { f_lo, f_hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n_components.max(1);
    let ratio = f_hi / f_lo;
    let mut comps = Vec::with_capacity(m);
    for i in 0..m {
        let frac = if m == 1 { 0.5 } else { i as f64 / (m - 1) as f64 };
        let omega = f_lo * ratio.powf(frac);
        let phase: f64 = rng.random_range(0.0..2.0 * core::f64::consts::PI);
        comps.push((omega, phase));
    }
    let mut ts = TimeSeries::from_fn(t0, dt, n, units, |t| {
        comps.iter().map(|&(w, p)| (w * t + p).sin()).sum()
    })?;
    let scale = peak / ts.max_abs().max(f64::MIN_POSITIVE);
    for v in &mut ts.values {
        *v *= scale;
    }
    Ok(ts)
}

/// An in-band tracking reference with a regulation-like spectrum: sinusoids
/// at `n_components` log-spaced frequencies strictly inside `(f_lo, f_hi)`
/// (placed at geometric cell centers so no component sits on a band edge),
/// amplitudes proportional to `1/omega`, random phases, peak absolute value
/// scaled to `peak`.
///
/// Balancing-reserve deployments are dominated by their slow components;
/// an equal-amplitude multisine would put far more high-frequency energy
/// into a class band than any realistic reference does.
pub fn tracking_reference(
    f_lo: f64,
    f_hi: f64,
    n_components: usize,
    peak: f64,
    t0: f64,
    dt: f64,
    n: usize,
    seed: u64,
    units: &str,
) -> Result<TimeSeries> {
    if !(f_lo > 0.0) || f_hi <= f_lo {
        return Err(Error::InvalidBand { f_lo, f_hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d));
    let m = n_components.max(1);
    let ratio = f_hi / f_lo;
    let mut comps = Vec::with_capacity(m);
    for i in 0..m {
        let frac = (i as f64 + 0.5) / m as f64;
        let omega = f_lo * ratio.powf(frac);
        let phase: f64 = rng.random_range(0.0..2.0 * core::f64::consts::PI);
        comps.push((omega, phase, f_lo / omega));
    }
    let mut ts = TimeSeries::from_fn(t0, dt, n, units, |t| {
        comps.iter().map(|&(w, p, a)| a * (w * t + p).sin()).sum()
    })?;
    let scale = peak / ts.max_abs().max(f64::MIN_POSITIVE);
    for v in &mut ts.values {
        *v *= scale;
    }
    Ok(ts)
}

/// A synthetic grid disturbance: low-frequency multisine components spanning
/// periods from about a day down to a few minutes, weighted toward low
/// frequency the way net-load imbalances are. Peak absolute value equals
/// `peak_mw`.
///
/// The first stretch (up to two hours, or 5% of the horizon if shorter) is
/// shaped by a raised-cosine onset so the series grows smoothly from zero:
/// recorded imbalance traces start near balance, and a step-sized initial
/// disturbance would otherwise dominate every transient metric downstream.
pub fn synthetic_disturbance(
    peak_mw: f64,
    t0: f64,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    // (period in seconds, relative weight): most energy in multi-hour swings,
    // a meaningful mid band around tens of minutes, and a fast tail.
    let bands: [(f64, f64); 8] = [
        (86_400.0, 1.0),
        (28_800.0, 0.8),
        (10_800.0, 0.6),
        (3_600.0, 0.45),
        (1_800.0, 0.3),
        (600.0, 0.15),
        (180.0, 0.06),
        (60.0, 0.02),
    ];
    let comps: Vec<(f64, f64, f64)> = bands
        .iter()
        .map(|&(period, w)| {
            let omega = 2.0 * core::f64::consts::PI / period;
            let phase: f64 = rng.random_range(0.0..2.0 * core::f64::consts::PI);
            (omega, phase, w)
        })
        .collect();
    let onset = Float::min(7200.0, 0.05 * dt * n as f64).max(dt);
    let mut ts = TimeSeries::from_fn(t0, dt, n, "MW", |t| {
        let raw: f64 = comps
            .iter()
            .map(|&(w, p, a)| a * (w * t + p).sin())
            .sum();
        let rel = t - t0;
        let window = if rel < onset {
            0.5 * (1.0 - Float::cos(core::f64::consts::PI * rel / onset))
        } else {
            1.0
        };
        raw * window
    })?;
    let scale = peak_mw / ts.max_abs().max(f64::MIN_POSITIVE);
    for v in &mut ts.values {
        *v *= scale;
    }
    Ok(ts)
}

/// A stylized daily net-load trajectory ("duck curve"): high morning and
/// evening shoulders with a deep midday depression from solar generation.
/// Catmull-Rom interpolation through fixed control points, values in MW,
/// repeated as needed to cover `n` samples.
pub fn duck_curve_net_load(t0: f64, dt: f64, n: usize) -> Result<TimeSeries> {
    // (hour of day, net load in MW). Depth and shoulders sized so the daily
    // swing is a few GW against a ~20 GW base, with a steep evening ramp.
    const KNOTS: [(f64, f64); 9] = [
        (0.0, 21_000.0),
        (4.0, 19_500.0),
        (7.0, 21_500.0),
        (10.0, 17_500.0),
        (13.0, 14_500.0),
        (16.0, 16_000.0),
        (19.0, 26_000.0),
        (22.0, 23_500.0),
        (24.0, 21_000.0),
    ];
    let eval = |hour: f64| -> f64 {
        let h = hour - 24.0 * Float::floor(hour / 24.0);
        // Locate the knot interval and apply Catmull-Rom with clamped ends.
        let mut i = 0;
        while i + 1 < KNOTS.len() && KNOTS[i + 1].0 <= h {
            i += 1;
        }
        let i = i.min(KNOTS.len() - 2);
        let (x1, y1) = KNOTS[i];
        let (x2, y2) = KNOTS[i + 1];
        let y0 = if i == 0 { y1 } else { KNOTS[i - 1].1 };
        let y3 = if i + 2 >= KNOTS.len() { y2 } else { KNOTS[i + 2].1 };
        let u = ((h - x1) / (x2 - x1)).clamp(0.0, 1.0);
        let (u2, u3) = (u * u, u * u * u);
        0.5 * ((2.0 * y1)
            + (y2 - y0) * u
            + (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3) * u2
            + (3.0 * y1 - y0 - 3.0 * y2 + y3) * u3)
    };
    TimeSeries::from_fn(t0, dt, n, "MW", |t| eval(t / 3600.0))
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<TimeSeries>();
}
