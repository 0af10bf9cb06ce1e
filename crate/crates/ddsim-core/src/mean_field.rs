//! Controlled Markov machinery for load populations.
//!
//! A load's nominal behavior is a continuous-time Markov chain with rate
//! matrix `A0 = r (S0 - I)`, where `S0` is the transition matrix at Poisson
//! sampling instants. Local control perturbs `S0` by an exponential tilt
//! weighted by the power consumption of the next state, giving the family
//! `S_zeta`; the population-level effect is the nonlinear mean-field ODE
//! `dmu/dt = mu A_zeta`, linearized here to an `(A, B, C)` state-space model
//! about the invariant pmf.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lti::poly::Complex64;
use crate::lti::StateSpace;
use crate::signal::TimeSeries;

/// Layout of the chain's state space `X = {off, on} x {bins}`.
///
/// States are indexed off-block first, then on-block, each in ascending bin
/// order: `index = mode * d_half + bin` with off = 0, on = 1. The "bins" are
/// temperature bins for TCLs and cycle phases for pool pumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateGrid {
    pub d_half: usize,
}

impl StateGrid {
    pub fn new(d_half: usize) -> Self {
        Self { d_half }
    }

    /// Total number of states `d = 2 * d_half`.
    pub fn d(&self) -> usize {
        2 * self.d_half
    }

    pub fn index(&self, on: bool, bin: usize) -> usize {
        debug_assert!(bin < self.d_half);
        (on as usize) * self.d_half + bin
    }

    pub fn is_on(&self, idx: usize) -> bool {
        idx >= self.d_half
    }

    pub fn bin_of(&self, idx: usize) -> usize {
        idx % self.d_half
    }

    /// Human-readable state label used in CSV headers and error messages.
    pub fn label(&self, idx: usize) -> String {
        let mode = if self.is_on(idx) { '+' } else { '-' };
        format!("({},{})", mode, self.bin_of(idx))
    }

    /// Power-per-state vector: 0 kW off, `rho` kW on, independent of bin.
    pub fn uniform_util(&self, rho: f64) -> DVector<f64> {
        DVector::from_fn(self.d(), |i, _| if self.is_on(i) { rho } else { 0.0 })
    }
}

/// Poisson sampling rates, possibly asymmetric between modes (water heaters
/// sample fast while on and slowly while off). `symmetric(r)` recovers the
/// single-rate construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingRates {
    /// Rate while on, 1/s.
    pub r_on: f64,
    /// Rate while off, 1/s.
    pub r_off: f64,
}

impl SamplingRates {
    pub fn symmetric(r: f64) -> Self {
        Self { r_on: r, r_off: r }
    }

    pub fn rate_for(&self, on: bool) -> f64 {
        if on {
            self.r_on
        } else {
            self.r_off
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_on", self.r_on), ("r_off", self.r_off)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    requirement: "sampling rate must be positive and finite",
                });
            }
        }
        Ok(())
    }
}

/// Composes the factored transition matrix `S0(x, (u', n')) = R0(x, u') *
/// Q0(x, n')`: mode dynamics from the switching matrix, bin dynamics from the
/// identified nature matrix. `R0` columns are (off, on); `Q0` columns are
/// bins.
pub fn compose_s0(r0: &DMatrix<f64>, q0: &DMatrix<f64>, grid: &StateGrid) -> Result<DMatrix<f64>> {
    let d = grid.d();
    if r0.nrows() != d || r0.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            context: "R0 (d rows x 2 mode columns)",
            expected: d * 2,
            got: r0.nrows() * r0.ncols(),
        });
    }
    if q0.nrows() != d || q0.ncols() != grid.d_half {
        return Err(Error::DimensionMismatch {
            context: "Q0 (d rows x d/2 bin columns)",
            expected: d * grid.d_half,
            got: q0.nrows() * q0.ncols(),
        });
    }
    let mut s0 = DMatrix::<f64>::zeros(d, d);
    for x in 0..d {
        for mode in 0..2 {
            for bin in 0..grid.d_half {
                s0[(x, mode * grid.d_half + bin)] = r0[(x, mode)] * q0[(x, bin)];
            }
        }
    }
    Ok(s0)
}

/// Rate matrix `A0 = r (S0 - I)` with a single sampling rate. The diagonal is
/// set to the negated off-diagonal row sum so rows sum to zero exactly in
/// floating point (probability conservation in the ODE then holds to
/// roundoff).
pub fn rate_matrix(s0: &DMatrix<f64>, r: f64) -> DMatrix<f64> {
    rate_matrix_rows(s0, |_| r)
}

/// Rate matrix with mode-dependent rates: rows whose state is on are scaled
/// by `r_on`, off rows by `r_off`.
pub fn rate_matrix_asym(s0: &DMatrix<f64>, rates: &SamplingRates, grid: &StateGrid) -> DMatrix<f64> {
    rate_matrix_rows(s0, |x| rates.rate_for(grid.is_on(x)))
}

fn rate_matrix_rows(s0: &DMatrix<f64>, rate_of_row: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let d = s0.nrows();
    let mut a0 = DMatrix::<f64>::zeros(d, d);
    for x in 0..d {
        let r = rate_of_row(x);
        let mut off_diag_sum = 0.0;
        for y in 0..d {
            if y != x {
                let v = r * s0[(x, y)];
                a0[(x, y)] = v;
                off_diag_sum += v;
            }
        }
        a0[(x, x)] = -off_diag_sum;
    }
    a0
}

/// Checks mutual reachability of every state from state 0 on the support
/// graph of `a0`; returns the states that fail.
fn reachability_gaps(a0: &DMatrix<f64>) -> Vec<usize> {
    let d = a0.nrows();
    let bfs = |transpose: bool| -> Vec<bool> {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..d {
                let edge = if transpose { a0[(y, x)] } else { a0[(x, y)] };
                if x != y && edge > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    let fwd = bfs(false);
    let bwd = bfs(true);
    (0..d).filter(|&i| !(fwd[i] && bwd[i])).collect()
}

/// Invariant pmf of the chain: the normalized left null vector of `A0`.
///
/// Requires irreducibility (checked by reachability on the support graph).
/// Solved densely by replacing the last column of `A0` with ones — the
/// standard full-rank embedding of `pi A0 = 0, sum(pi) = 1`.
pub fn invariant_pmf(a0: &DMatrix<f64>) -> Result<DVector<f64>> {
    let d = a0.nrows();
    let gaps = reachability_gaps(a0);
    if !gaps.is_empty() {
        return Err(Error::ReducibleChain {
            unreachable_count: gaps.len(),
            unreachable: gaps.iter().take(8).map(|i| format!("{}", i)).collect(),
        });
    }
    let mut m = a0.clone();
    for x in 0..d {
        m[(x, d - 1)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(d);
    rhs[d - 1] = 1.0;
    let pi = m.transpose().lu().solve(&rhs).ok_or(Error::ReducibleChain {
        unreachable_count: 0,
        unreachable: vec![String::from("singular solve")],
    })?;

    // Clean roundoff and verify the residual honestly before normalizing.
    let mut pi: DVector<f64> = pi.map(|v| if v < 0.0 && v > -1e-12 { 0.0 } else { v });
    let residual = (a0.transpose() * &pi).amax();
    if residual > 1e-10 || pi.min() < 0.0 {
        return Err(Error::IllConditionedChain { residual });
    }
    let total: f64 = pi.iter().sum();
    pi /= total;
    Ok(pi)
}

/// Exponentially tilted transition matrix
/// `S_zeta(x, x') = S0(x, x') exp(zeta U(x')) / Z(x)`.
///
/// Each row is computed with its largest exponent factored out, so any finite
/// `zeta` is safe from overflow; zero entries of `S0` stay exactly zero.
pub fn myopic_tilt(s0: &DMatrix<f64>, util: &DVector<f64>, zeta: f64) -> DMatrix<f64> {
    let d = s0.nrows();
    let mut s = DMatrix::<f64>::zeros(d, d);
    for x in 0..d {
        let mut max_exp = f64::NEG_INFINITY;
        for y in 0..d {
            if s0[(x, y)] > 0.0 {
                max_exp = max_exp.max(zeta * util[y]);
            }
        }
        let mut z = 0.0;
        for y in 0..d {
            if s0[(x, y)] > 0.0 {
                let w = s0[(x, y)] * Float::exp(zeta * util[y] - max_exp);
                s[(x, y)] = w;
                z += w;
            }
        }
        for y in 0..d {
            s[(x, y)] /= z;
        }
    }
    s
}

/// Entrywise derivative of `S_zeta` at `zeta = 0`:
/// `dS(x, x') = S0(x, x') (U(x') - sum_z S0(x, z) U(z))`. Rows sum to zero.
pub fn tilt_derivative(s0: &DMatrix<f64>, util: &DVector<f64>) -> DMatrix<f64> {
    let d = s0.nrows();
    let mut ds = DMatrix::<f64>::zeros(d, d);
    for x in 0..d {
        let row_mean: f64 = (0..d).map(|z| s0[(x, z)] * util[z]).sum();
        for y in 0..d {
            ds[(x, y)] = s0[(x, y)] * (util[y] - row_mean);
        }
    }
    ds
}

/// Linear state-space approximation of the mean-field dynamics about the
/// invariant pmf: state `Phi ~ mu - pi0`, input `zeta`, output `y - y_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    /// `A = A0^T`.
    pub a: DMatrix<f64>,
    /// `B_k = sum_x pi0(x) A0'(x, x^k)` where `A0'` is the rate-scaled tilt
    /// derivative.
    pub b: DVector<f64>,
    /// `C_k = U(x^k)`.
    pub c: DVector<f64>,
    /// Invariant pmf, kept for the zero-frequency solve.
    pub pi0: DVector<f64>,
}

impl Linearization {
    /// Frequency response `C (jw I - A)^{-1} B` via a complex linear solve.
    ///
    /// `A` has a simple zero eigenvalue along the conserved probability-mass
    /// direction; since `sum_k B_k = 0` the dynamics never leave the simplex
    /// tangent space, and the `w = 0` limit is evaluated there with a
    /// rank-one-shifted real solve.
    pub fn freq(&self, omega: f64) -> Result<Complex64> {
        let d = self.a.nrows();
        if omega == 0.0 {
            // Solve A x = -B subject to 1^T x = 0 via M = A + pi0 * 1^T.
            let mut m = self.a.clone();
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += self.pi0[i];
                }
            }
            let x = m.lu().solve(&(-&self.b)).ok_or(Error::PoleOnGrid {
                re: 0.0,
                im: 0.0,
            })?;
            return Ok(Complex64::new(self.c.dot(&x), 0.0));
        }
        let mut m = DMatrix::<Complex<f64>>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = Complex::new(-self.a[(i, j)], 0.0);
            }
            m[(i, i)] += Complex::new(0.0, omega);
        }
        let rhs = DVector::from_iterator(d, self.b.iter().map(|&v| Complex::new(v, 0.0)));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or(Error::PoleOnGrid { re: 0.0, im: omega })?;
        let mut y = Complex64::new(0.0, 0.0);
        for i in 0..d {
            y += Complex::new(self.c[i], 0.0) * x[i];
        }
        Ok(y)
    }

    /// Response over a frequency grid.
    pub fn freq_response(&self, omega: &[f64]) -> Result<Vec<Complex64>> {
        omega.iter().map(|&w| self.freq(w)).collect()
    }

    /// The `(A, B, C)` triple as a simulatable state-space system (D = 0).
    pub fn to_state_space(&self) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: DMatrix::from_column_slice(self.a.nrows(), 1, self.b.as_slice()),
            c: DMatrix::from_row_slice(1, self.a.nrows(), self.c.as_slice()),
            d: DMatrix::zeros(1, 1),
        }
    }
}

/// Free-function form of [`Linearization::freq_response`].
pub fn mf_frequency_response(lin: &Linearization, omega: &[f64]) -> Result<Vec<Complex64>> {
    lin.freq_response(omega)
}

/// Builds the linearization from the nominal artifacts. The tilt enters
/// before the per-row rates (tilt `S0` first, then scale rows), matching the
/// order used everywhere else in this crate.
pub fn linearize(
    s0: &DMatrix<f64>,
    a0: &DMatrix<f64>,
    pi0: &DVector<f64>,
    util: &DVector<f64>,
    rates: &SamplingRates,
    grid: &StateGrid,
) -> Linearization {
    let ds = tilt_derivative(s0, util);
    let d = s0.nrows();
    // B_k = sum_x pi0(x) * rate(x) * dS(x, k)
    let b = DVector::from_fn(d, |k, _| {
        (0..d)
            .map(|x| pi0[x] * rates.rate_for(grid.is_on(x)) * ds[(x, k)])
            .sum()
    });
    Linearization {
        a: a0.transpose(),
        b,
        c: util.clone(),
        pi0: pi0.clone(),
    }
}

/// A load class reduced to its controlled-Markov artifacts: everything the
/// mean-field, agent, and filter-design layers need.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledModel {
    pub grid: StateGrid,
    /// Nominal transition matrix at sampling instants (row-stochastic).
    pub s0: DMatrix<f64>,
    /// Nominal rate matrix (rows sum to zero).
    pub a0: DMatrix<f64>,
    pub rates: SamplingRates,
    /// Power per state, kW.
    pub util: DVector<f64>,
    /// Invariant pmf of the nominal chain.
    pub pi0: DVector<f64>,
    pub lin: Linearization,
}

impl ControlledModel {
    /// Validates `s0`, then derives the rate matrix, invariant pmf, and
    /// linearization.
    pub fn build(
        grid: StateGrid,
        s0: DMatrix<f64>,
        util: DVector<f64>,
        rates: SamplingRates,
    ) -> Result<Self> {
        rates.validate()?;
        let d = grid.d();
        if s0.nrows() != d || s0.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "S0 (d x d)",
                expected: d * d,
                got: s0.nrows() * s0.ncols(),
            });
        }
        if util.len() != d {
            return Err(Error::DimensionMismatch {
                context: "utility vector",
                expected: d,
                got: util.len(),
            });
        }
        for x in 0..d {
            let row_sum: f64 = (0..d).map(|y| s0[(x, y)]).sum();
            if (row_sum - 1.0).abs() > 1e-9 || (0..d).any(|y| s0[(x, y)] < 0.0) {
                return Err(Error::InvalidParameter {
                    name: "S0 row sum",
                    value: row_sum,
                    requirement: "rows must be nonnegative and sum to 1",
                });
            }
        }
        let a0 = rate_matrix_asym(&s0, &rates, &grid);
        let pi0 = invariant_pmf(&a0)?;
        let lin = linearize(&s0, &a0, &pi0, &util, &rates, &grid);
        Ok(Self {
            grid,
            s0,
            a0,
            rates,
            util,
            pi0,
            lin,
        })
    }

    /// Tilted rate matrix at a fixed command `zeta`.
    pub fn rate_matrix_tilted(&self, zeta: f64) -> DMatrix<f64> {
        let s = myopic_tilt(&self.s0, &self.util, zeta);
        rate_matrix_asym(&s, &self.rates, &self.grid)
    }

    /// Steady-state average power at the nominal model, kW per load.
    pub fn y_bar(&self) -> f64 {
        self.pi0.dot(&self.util)
    }

    /// Maximum per-load power, kW.
    pub fn rho_max(&self) -> f64 {
        self.util.amax()
    }

    /// Stationary average power of the tilted chain, kW per load. Monotone
    /// nondecreasing in `zeta` — the design goal of the tilt.
    pub fn stationary_power(&self, zeta: f64) -> Result<f64> {
        let pi = invariant_pmf(&self.rate_matrix_tilted(zeta))?;
        Ok(pi.dot(&self.util))
    }
}

/// Expected (on, off) dwell times of the nominal chain, seconds.
///
/// The dwell in a mode block is the mean absorption time of the block's
/// sub-generator, averaged over the stationary entry distribution (the
/// probability flux from the opposite block). Computed from the fundamental
/// matrix: `tau` solves `-A_bb tau = 1`.
pub fn expected_mode_dwells(model: &ControlledModel) -> Result<(f64, f64)> {
    let on = block_dwell(model, true)?;
    let off = block_dwell(model, false)?;
    Ok((on, off))
}

fn block_dwell(model: &ControlledModel, on: bool) -> Result<f64> {
    let d = model.grid.d();
    let block: Vec<usize> = (0..d).filter(|&i| model.grid.is_on(i) == on).collect();
    let rest: Vec<usize> = (0..d).filter(|&i| model.grid.is_on(i) != on).collect();
    let nb = block.len();
    let m = DMatrix::<f64>::from_fn(nb, nb, |r, c| -model.a0[(block[r], block[c])]);
    let ones = DVector::<f64>::from_element(nb, 1.0);
    let tau = m.lu().solve(&ones).ok_or(Error::IllConditionedChain {
        residual: f64::INFINITY,
    })?;
    // Stationary entry flux from the opposite block into each block state.
    let mut nu = DVector::<f64>::zeros(nb);
    for (j, &bj) in block.iter().enumerate() {
        nu[j] = rest.iter().map(|&i| model.pi0[i] * model.a0[(i, bj)]).sum();
    }
    let total = nu.sum();
    if !(total > 0.0) {
        return Err(Error::ReducibleChain {
            unreachable_count: nb,
            unreachable: vec![String::from(if on { "on block" } else { "off block" })],
        });
    }
    Ok(nu.dot(&tau) / total)
}

/// Streaming integrator for the mean-field ODE `dmu/dt = mu A_zeta` (classic
/// fixed-step RK4; the tilted generator is rebuilt only when `zeta` changes).
///
/// Long closed-loop runs step this directly instead of materializing the full
/// distribution trajectory.
#[derive(Debug, Clone)]
pub struct MeanFieldSim<'m> {
    model: &'m ControlledModel,
    /// Transposed tilted generator, so stages are plain matrix-vector products.
    gen_t: DMatrix<f64>,
    zeta: f64,
    mu: DVector<f64>,
    t: f64,
    dt: f64,
    /// True while the state is bit-identical to the invariant pmf under a
    /// zero command. The ODE's exact solution is then constant, so steps are
    /// skipped rather than accumulating spurious roundoff drift — which also
    /// lets an undisturbed loop rest at its equilibrium *exactly*.
    at_equilibrium: bool,
    // Reusable RK4 stage buffers.
    k1: DVector<f64>,
    k2: DVector<f64>,
    k3: DVector<f64>,
    k4: DVector<f64>,
    tmp: DVector<f64>,
}

impl<'m> MeanFieldSim<'m> {
    pub fn new(model: &'m ControlledModel, mu0: DVector<f64>, t0: f64, dt: f64) -> Result<Self> {
        let d = model.grid.d();
        if mu0.len() != d {
            return Err(Error::DimensionMismatch {
                context: "initial distribution",
                expected: d,
                got: mu0.len(),
            });
        }
        let total: f64 = mu0.iter().sum();
        if (total - 1.0).abs() > 1e-9 || mu0.min() < 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu0 total mass",
                value: total,
                requirement: "initial distribution must be a pmf",
            });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidTimeSeries { dt, len: 1 });
        }
        let at_equilibrium = mu0 == model.pi0;
        Ok(Self {
            gen_t: model.a0.transpose(),
            zeta: 0.0,
            mu: mu0,
            t: t0,
            dt,
            at_equilibrium,
            k1: DVector::zeros(d),
            k2: DVector::zeros(d),
            k3: DVector::zeros(d),
            k4: DVector::zeros(d),
            tmp: DVector::zeros(d),
            model,
        })
    }

    /// Sets the command in force for subsequent steps; rebuilds the tilted
    /// generator only on change.
    pub fn set_zeta(&mut self, zeta: f64) {
        if zeta != self.zeta {
            self.gen_t = self.model.rate_matrix_tilted(zeta).transpose();
            self.zeta = zeta;
            self.at_equilibrium = false;
        }
    }

    /// Advances one RK4 step under the currently held `zeta`; returns the
    /// average power (kW per load) at the new time.
    pub fn step(&mut self) -> Result<f64> {
        if self.at_equilibrium {
            self.t += self.dt;
            return Ok(self.power());
        }
        let h = self.dt;
        self.k1.gemv(1.0, &self.gen_t, &self.mu, 0.0);
        self.tmp.copy_from(&self.mu);
        self.tmp.axpy(h / 2.0, &self.k1, 1.0);
        self.k2.gemv(1.0, &self.gen_t, &self.tmp, 0.0);
        self.tmp.copy_from(&self.mu);
        self.tmp.axpy(h / 2.0, &self.k2, 1.0);
        self.k3.gemv(1.0, &self.gen_t, &self.tmp, 0.0);
        self.tmp.copy_from(&self.mu);
        self.tmp.axpy(h, &self.k3, 1.0);
        self.k4.gemv(1.0, &self.gen_t, &self.tmp, 0.0);

        self.mu.axpy(h / 6.0, &self.k1, 1.0);
        self.mu.axpy(h / 3.0, &self.k2, 1.0);
        self.mu.axpy(h / 3.0, &self.k3, 1.0);
        self.mu.axpy(h / 6.0, &self.k4, 1.0);
        self.t += h;

        let min = self.mu.min();
        if min < -1e-9 {
            return Err(Error::MeanFieldNegative { t: self.t, min });
        }
        Ok(self.power())
    }

    /// Current average power, kW per load.
    pub fn power(&self) -> f64 {
        self.mu.dot(&self.model.util)
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Total probability mass (should stay within 1e-9 of one).
    pub fn mass(&self) -> f64 {
        self.mu.iter().sum()
    }
}

/// Integrates the mean-field ODE under a command series, returning the full
/// distribution trajectory and the average-power output on the same grid.
/// `mu[k]`/`y[k]` correspond to `zeta.time_at(k)`; `zeta[k]` is held over
/// `[t_k, t_{k+1})`.
pub fn integrate_mean_field(
    model: &ControlledModel,
    zeta: &TimeSeries,
    mu0: DVector<f64>,
) -> Result<(Vec<DVector<f64>>, TimeSeries)> {
    let mut sim = MeanFieldSim::new(model, mu0, zeta.t0, zeta.dt)?;
    let n = zeta.len();
    let mut mus = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    mus.push(sim.mu().clone());
    y.push(sim.power());
    for k in 0..n - 1 {
        sim.set_zeta(zeta.values[k]);
        sim.step()?;
        mus.push(sim.mu().clone());
        y.push(sim.power());
    }
    Ok((mus, TimeSeries::new(zeta.t0, zeta.dt, y, "kW")?))
}
