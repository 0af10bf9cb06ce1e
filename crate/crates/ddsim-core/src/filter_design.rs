//! Inversion-based design of the per-load command filters.
//!
//! Each load class turns the balancing-authority signal into its local
//! command through a filter `M = G_fit^{-1} * BP`: a low-order rational fit
//! of the class's aggregate frequency response, inverted and made proper,
//! then band-limited to the slice of spectrum the class is responsible for.
//! Within its band the class then tracks the reference nearly one-to-one;
//! outside, the bandpass rolls the demand off before it can excite the
//! population's own resonances.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lti::poly::{self, Complex64};
use crate::lti::{butterworth_bandpass, TransferFunction};

/// Measured (or model-derived) frequency response samples on an ascending
/// positive grid, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyData {
    pub omega: Vec<f64>,
    pub response: Vec<Complex64>,
}

impl FrequencyData {
    pub fn new(omega: Vec<f64>, response: Vec<Complex64>) -> Result<Self> {
        if omega.len() != response.len() {
            return Err(Error::DimensionMismatch {
                context: "frequency data",
                expected: omega.len(),
                got: response.len(),
            });
        }
        if omega.is_empty() || omega.windows(2).any(|w| w[0] >= w[1]) || omega[0] <= 0.0 {
            return Err(Error::InvalidBand {
                f_lo: omega.first().copied().unwrap_or(f64::NAN),
                f_hi: omega.last().copied().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { omega, response })
    }

    /// Logarithmically spaced grid over `[lo, hi]`, endpoints included.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        let (llo, lhi) = (Float::ln(lo), Float::ln(hi));
        (0..n)
            .map(|k| Float::exp(llo + (lhi - llo) * k as f64 / (n - 1) as f64))
            .collect()
    }

    /// Same grid with every response scaled by `g` (e.g. kW-per-load to
    /// aggregate MW).
    pub fn scaled(&self, g: f64) -> Self {
        Self {
            omega: self.omega.clone(),
            response: self.response.iter().map(|h| h * g).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Fit and composition knobs for one class's filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRecipe {
    /// Rational fit orders (numerator, denominator), denominator at least
    /// the numerator for a proper fit.
    pub num_deg: usize,
    pub den_deg: usize,
    /// Total least-squares passes: one unweighted, the rest reweighted by
    /// the previous denominator (Sanathanan-Koerner).
    pub iterations: usize,
    /// Worst in-band magnitude mismatch tolerated before the fit order is
    /// declared too low, dB.
    pub max_fit_err_db: f64,
    /// The bandpass is widened to `[band_lo / widen_lo, band_hi * widen_hi]`
    /// so its phase lag stays small across the responsibility band.
    pub widen_lo: f64,
    pub widen_hi: f64,
    /// Roll-off corner for making the inverse proper, as a multiple of the
    /// band top.
    pub rolloff_mult: f64,
    /// Frequency span of the fit grid relative to the band: grid runs over
    /// `[band_lo / fit_span_lo, band_hi * fit_span_hi]`. Wide enough to pin
    /// the fit's behavior beyond the band (the attenuation region), narrow
    /// enough that the least squares spends its orders where they matter.
    pub fit_span_lo: f64,
    pub fit_span_hi: f64,
    /// Points in the log-spaced fit grid.
    pub fit_points: usize,
}

impl Default for FilterRecipe {
    fn default() -> Self {
        Self {
            num_deg: 2,
            den_deg: 3,
            iterations: 3,
            max_fit_err_db: 3.0,
            widen_lo: 3.0,
            widen_hi: 3.0,
            rolloff_mult: 10.0,
            fit_span_lo: 3.0,
            fit_span_hi: 30.0,
            fit_points: 120,
        }
    }
}

impl FilterRecipe {
    /// The log-spaced design grid this recipe wants for a given band, rad/s.
    pub fn fit_grid(&self, band: (f64, f64)) -> Vec<f64> {
        FrequencyData::log_grid(
            band.0 / self.fit_span_lo,
            band.1 * self.fit_span_hi,
            self.fit_points,
        )
    }
}

/// Weighted-iterative rational fit of frequency-response data.
///
/// Each pass solves the linearized (Levy) least-squares problem
/// `N(jw) - H(jw) D(jw) ~ 0` with the denominator's constant term pinned to
/// one, weighting rows by `1 / |D_prev(jw)|` after the first pass so the fit
/// converges toward the true magnitude error. Frequencies are normalized to
/// the grid's geometric center before solving, which keeps the Vandermonde
/// columns comparable. Unstable poles and non-minimum-phase zeros are
/// reflected into the left half-plane (this preserves magnitude exactly),
/// and the achieved fit must stay within `max_fit_err_db` of the data.
pub fn fit_rational(data: &FrequencyData, recipe: &FilterRecipe) -> Result<TransferFunction> {
    if recipe.num_deg > recipe.den_deg {
        return Err(Error::Improper {
            num_deg: recipe.num_deg,
            den_deg: recipe.den_deg,
        });
    }
    let k = data.len();
    let n_unknowns = recipe.num_deg + 1 + recipe.den_deg;
    if 2 * k < n_unknowns {
        return Err(Error::DimensionMismatch {
            context: "rational fit (need at least as many real equations as unknowns)",
            expected: n_unknowns,
            got: 2 * k,
        });
    }
    let omega_c = Float::sqrt(data.omega[0] * data.omega[k - 1]);
    let s_hat: Vec<Complex64> = data
        .omega
        .iter()
        .map(|&w| Complex64::new(0.0, w / omega_c))
        .collect();

    let mut weights = vec![1.0; k];
    let mut num_asc = vec![Complex64::new(0.0, 0.0); recipe.num_deg + 1];
    let mut den_asc = vec![Complex64::new(1.0, 0.0)];
    for _pass in 0..recipe.iterations.max(1) {
        let mut a = DMatrix::<f64>::zeros(2 * k, n_unknowns);
        let mut rhs = DVector::<f64>::zeros(2 * k);
        for i in 0..k {
            let h = data.response[i];
            let w = weights[i];
            let mut pw = Complex64::new(1.0, 0.0);
            for m in 0..=recipe.num_deg {
                a[(2 * i, m)] = w * pw.re;
                a[(2 * i + 1, m)] = w * pw.im;
                pw *= s_hat[i];
            }
            let mut pw = s_hat[i];
            for m in 1..=recipe.den_deg {
                let v = -h * pw;
                a[(2 * i, recipe.num_deg + m)] = w * v.re;
                a[(2 * i + 1, recipe.num_deg + m)] = w * v.im;
                pw *= s_hat[i];
            }
            rhs[2 * i] = w * h.re;
            rhs[2 * i + 1] = w * h.im;
        }
        let qr = a.qr();
        let mut proj = qr.q().transpose() * &rhs;
        if !qr.r().solve_upper_triangular_mut(&mut proj) {
            return Err(Error::FitTooCoarse {
                max_err_db: f64::INFINITY,
                limit_db: recipe.max_fit_err_db,
                num_deg: recipe.num_deg,
                den_deg: recipe.den_deg,
            });
        }
        num_asc = (0..=recipe.num_deg)
            .map(|m| Complex64::new(proj[m], 0.0))
            .collect();
        den_asc = core::iter::once(Complex64::new(1.0, 0.0))
            .chain((1..=recipe.den_deg).map(|m| Complex64::new(proj[recipe.num_deg + m], 0.0)))
            .collect();
        for i in 0..k {
            let d = poly_eval_ascending(&den_asc, s_hat[i]);
            weights[i] = 1.0 / d.norm().max(1e-12);
        }
    }

    // Back to unscaled s (coefficient of s^m picks up omega_c^-m), descending
    // order, real parts (imaginary parts are zero by construction).
    let unscale = |asc: &[Complex64]| -> Vec<f64> {
        let mut desc: Vec<f64> = asc
            .iter()
            .enumerate()
            .map(|(m, c)| c.re * Float::powi(omega_c, -(m as i32)))
            .collect();
        desc.reverse();
        desc
    };
    let num = unscale(&num_asc);
    let den = unscale(&den_asc);

    // Stabilize and make minimum-phase by reflecting roots; magnitudes on the
    // imaginary axis are unchanged.
    let stabilized = |coeffs: &[f64]| -> Vec<f64> {
        let mut roots = poly::roots(coeffs);
        poly::reflect_to_left_half_plane(&mut roots);
        let lead = coeffs[0];
        poly::from_roots(&roots, lead)
    };
    let fit = TransferFunction::new(&stabilized(&num), &stabilized(&den))?;

    let max_err_db = data
        .omega
        .iter()
        .zip(&data.response)
        .map(|(&w, h)| {
            let model = fit.freq(w).unwrap_or(Complex64::new(f64::NAN, 0.0));
            Float::abs(20.0 * Float::log10(model.norm() / h.norm()))
        })
        .fold(0.0, f64::max);
    if !(max_err_db <= recipe.max_fit_err_db) {
        return Err(Error::FitTooCoarse {
            max_err_db,
            limit_db: recipe.max_fit_err_db,
            num_deg: recipe.num_deg,
            den_deg: recipe.den_deg,
        });
    }
    Ok(fit)
}

fn poly_eval_ascending(asc: &[Complex64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in asc.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

/// Proper inverse of a fitted response: `den / num` padded with repeated real
/// poles at `rolloff_omega` (DC-gain neutral) to absorb the inverse's excess
/// numerator degree. Fails if the fit is not strictly minimum-phase, since
/// its zeros become the inverse's poles.
pub fn inverse_filter(fit: &TransferFunction, rolloff_omega: f64) -> Result<TransferFunction> {
    if !(rolloff_omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rolloff_omega",
            value: rolloff_omega,
            requirement: "roll-off corner must be positive",
        });
    }
    for z in fit.zeros() {
        if z.re >= 0.0 {
            return Err(Error::NotMinimumPhase { re: z.re, im: z.im });
        }
    }
    // Pad with (s/w_r + 1)^k, which leaves the DC gain den(0)/num(0) intact.
    let excess = fit.den_degree() - fit.num_degree();
    let num = fit.den.clone();
    let mut den = fit.num.clone();
    for _ in 0..excess {
        den = poly::mul(&den, &[1.0 / rolloff_omega, 1.0]);
    }
    TransferFunction::new(&num, &den)
}

/// A class's complete command filter.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFilter {
    /// Properized inverse of the fitted class response.
    pub m_inv: TransferFunction,
    /// Band-limiting stage (widened Butterworth bandpass).
    pub m_bp: TransferFunction,
    /// The product actually run by the loads.
    pub m_total: TransferFunction,
    /// Responsibility band `[lo, hi]`, rad/s.
    pub band: (f64, f64),
}

impl LocalFilter {
    /// Scales the end-to-end gain (used to split a class's target response
    /// across subgroups by population share).
    pub fn scaled(&self, g: f64) -> Self {
        Self {
            m_inv: self.m_inv.scaled(g),
            m_bp: self.m_bp.clone(),
            m_total: self.m_total.scaled(g),
            band: self.band,
        }
    }
}

/// Flatness of an achieved loop `M(jw) G(jw)` over the responsibility band,
/// evaluated on the *measured* response samples, not the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub max_gain_db: f64,
    pub min_gain_db: f64,
    /// Largest absolute phase deviation from zero in band, degrees.
    pub max_phase_deg: f64,
    /// Loop attenuation at `atten_mult` times the band top, dB below unity
    /// (positive = attenuated); `None` when the data grid does not reach
    /// that frequency.
    pub attenuation_db: Option<f64>,
    pub atten_mult: f64,
}

pub fn flatness_report(
    m: &TransferFunction,
    data: &FrequencyData,
    band: (f64, f64),
    atten_mult: f64,
) -> Result<FlatnessReport> {
    let mut max_gain_db = f64::NEG_INFINITY;
    let mut min_gain_db = f64::INFINITY;
    let mut max_phase_deg = 0.0f64;
    let mut attenuation_db = None;
    for (&w, h) in data.omega.iter().zip(&data.response) {
        let loop_gain = m.freq(w)? * h;
        if w >= band.0 && w <= band.1 {
            let g_db = 20.0 * Float::log10(loop_gain.norm());
            max_gain_db = max_gain_db.max(g_db);
            min_gain_db = min_gain_db.min(g_db);
            max_phase_deg = max_phase_deg.max(Float::abs(loop_gain.arg().to_degrees()));
        }
        if attenuation_db.is_none() && w >= atten_mult * band.1 {
            attenuation_db = Some(-20.0 * Float::log10(loop_gain.norm()));
        }
    }
    if !max_gain_db.is_finite() {
        return Err(Error::InvalidBand {
            f_lo: band.0,
            f_hi: band.1,
        });
    }
    Ok(FlatnessReport {
        max_gain_db,
        min_gain_db,
        max_phase_deg,
        attenuation_db,
        atten_mult,
    })
}

/// End-to-end design for one class (or subgroup): fit the aggregate response,
/// invert it, and band-limit the result.
pub fn design_local_filter(
    data: &FrequencyData,
    band: (f64, f64),
    recipe: &FilterRecipe,
) -> Result<LocalFilter> {
    if !(band.0 > 0.0 && band.0 < band.1) {
        return Err(Error::InvalidBand {
            f_lo: band.0,
            f_hi: band.1,
        });
    }
    let fit = fit_rational(data, recipe)?;
    let m_inv = inverse_filter(&fit, recipe.rolloff_mult * band.1)?;
    // Zero reflection preserves magnitude but not phase, so a fit that strayed
    // into the right half plane sails through the magnitude gate and comes out
    // inverting the response it is meant to cancel.  Catch that here: inside
    // the band the compensated response must stay loosely in phase.  Healthy
    // designs sit under ~30 deg (fit error plus the properization pole), so a
    // 60 deg limit only trips on genuinely flipped fits.
    const PHASE_LIMIT_DEG: f64 = 60.0;
    let mut max_phase_deg = 0.0_f64;
    for (&w, &g) in data.omega.iter().zip(data.response.iter()) {
        if w < band.0 || w > band.1 {
            continue;
        }
        let compensated = m_inv.freq(w)? * g;
        max_phase_deg = max_phase_deg.max(compensated.arg().abs().to_degrees());
    }
    if max_phase_deg > PHASE_LIMIT_DEG {
        return Err(Error::PhaseFlippedFit {
            max_phase_deg,
            limit_deg: PHASE_LIMIT_DEG,
        });
    }
    let m_bp = butterworth_bandpass(band.0 / recipe.widen_lo, band.1 * recipe.widen_hi)?;
    let m_total = m_inv.series(&m_bp);
    Ok(LocalFilter {
        m_inv,
        m_bp,
        m_total,
        band,
    })
}
