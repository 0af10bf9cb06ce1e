//! The balancing-authority loop: plant, compensator, and resource classes.
//!
//! Sign conventions, fixed here and used everywhere:
//! * `disturbance` is extra net demand in MW (positive pulls frequency down),
//! * a class's output is its *consumption deviation* in MW,
//! * the plant maps the net power imbalance `-(disturbance + consumption
//!   deviations)` to the frequency deviation in Hz,
//! * the compensator turns the frequency deviation directly into the shared
//!   reference `U` in MW (negative when demand must shed), which each class
//!   passes through its own command filter.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::filter_design::LocalFilter;
use crate::lti::poly::Complex64;
use crate::lti::{
    butterworth_highpass, butterworth_lowpass, to_state_space, TransferFunction, ZohSimulator,
};
use crate::mean_field::{ControlledModel, MeanFieldSim};
use crate::signal::TimeSeries;

/// Grid-side plant: frequency deviation (Hz) per MW of net power imbalance.
/// Second-order machine dynamics with a pair of well-damped poles and a DC
/// gain of about 1.92e-4 Hz/MW.
pub fn default_plant() -> TransferFunction {
    TransferFunction::new(&[2.488e-5, 2.057e-5], &[1.0, 0.3827, 0.1071])
        .expect("fixed plant coefficients are valid")
}

/// Balancing-authority PI compensator `(kp s + ki) / s`, MW per Hz.
pub fn pi_compensator(kp: f64, ki: f64) -> TransferFunction {
    TransferFunction::new(&[kp, ki], &[1.0, 0.0]).expect("PI coefficients are valid")
}

/// Sinusoidal availability schedule `g(t) = 1 - amplitude * sin(omega t)`,
/// modeling a slow swell and shrink of the responsive population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSchedule {
    pub amplitude: f64,
    /// rad/s; one cycle a day is `2 pi / 86400`.
    pub omega: f64,
}

impl GainSchedule {
    pub fn gain(&self, t: f64) -> f64 {
        1.0 - self.amplitude * Float::sin(self.omega * t)
    }
}

/// What stands behind a command filter: a load population or a conventional
/// (ideal) actuator that simply realizes the filtered reference.
#[derive(Debug, Clone)]
pub enum ResourceKind {
    Load {
        model: ControlledModel,
        /// Population size behind this entry.
        n_loads: f64,
    },
    Ideal,
}

/// One dispatchable entry in the loop: a filter plus whatever realizes it.
/// Heterogeneous classes appear as several entries ("subgroups"), each with
/// its own identified model and filter scaled by its population share.
#[derive(Debug, Clone)]
pub struct ResourceClass {
    pub name: String,
    pub kind: ResourceKind,
    pub filter: LocalFilter,
    /// Static output scaling (used for responsibility splits such as the
    /// conventional-generation blend).
    pub output_gain: f64,
    /// Optional time-varying availability applied to the output.
    pub gain_schedule: Option<GainSchedule>,
    /// Cap on `|zeta| * rho_max`: commands are clipped before broadcast so a
    /// runaway reference cannot freeze the exponential tilt.
    pub zeta_rho_cap: f64,
}

impl ResourceClass {
    pub fn load(name: &str, model: ControlledModel, n_loads: f64, filter: LocalFilter) -> Self {
        Self {
            name: String::from(name),
            kind: ResourceKind::Load { model, n_loads },
            filter,
            output_gain: 1.0,
            gain_schedule: None,
            zeta_rho_cap: 30.0,
        }
    }

    pub fn ideal(name: &str, filter: LocalFilter, output_gain: f64) -> Self {
        Self {
            name: String::from(name),
            kind: ResourceKind::Ideal,
            filter,
            output_gain,
            gain_schedule: None,
            zeta_rho_cap: 30.0,
        }
    }

    /// Steady-state consumption of the population, MW.
    pub fn baseline_mw(&self) -> f64 {
        match &self.kind {
            ResourceKind::Load { model, n_loads } => n_loads * model.y_bar() / 1000.0,
            ResourceKind::Ideal => 0.0,
        }
    }

    /// Symmetric swing the population can sustain indefinitely, MW: the
    /// smaller of "everything extra it could turn on" and "everything it
    /// could shed".
    pub fn capacity_mw(&self) -> f64 {
        match &self.kind {
            ResourceKind::Load { model, n_loads } => {
                let duty = model.y_bar() / model.rho_max();
                n_loads * model.rho_max() * duty.min(1.0 - duty) / 1000.0
            }
            ResourceKind::Ideal => f64::INFINITY,
        }
    }
}

/// Conventional fast actuation: order-2 high-pass picking up everything above
/// the fastest load class.
pub fn conventional_highpass(corner: f64) -> Result<TransferFunction> {
    butterworth_highpass(corner)
}

/// Conventional slow actuation: order-2 low-pass covering frequencies below
/// the slowest load class.
pub fn conventional_lowpass(corner: f64) -> Result<TransferFunction> {
    butterworth_lowpass(corner)
}

/// Composite virtual-battery response `sum_c gain_c M_c(jw) G_c(jw)` in MW
/// per MW of reference, with `G` the per-load linearization scaled to the
/// population (ideal entries contribute `M` alone).
pub fn total_response(classes: &[ResourceClass], omega: &[f64]) -> Result<Vec<Complex64>> {
    let mut total = alloc::vec![Complex64::new(0.0, 0.0); omega.len()];
    for class in classes {
        for (k, &w) in omega.iter().enumerate() {
            let m = class.filter.m_total.freq(w)?;
            let g = match &class.kind {
                ResourceKind::Load { model, n_loads } => {
                    model.lin.freq(w)? * (n_loads / 1000.0)
                }
                ResourceKind::Ideal => Complex64::new(1.0, 0.0),
            };
            total[k] += m * g * class.output_gain;
        }
    }
    Ok(total)
}

/// Everything the closed loop needs besides the resources.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub plant: TransferFunction,
    /// PI gains, MW per Hz (proportional) and MW per Hz-second (integral).
    pub kp: f64,
    pub ki: f64,
    /// Loop step, seconds.
    pub dt: f64,
    /// Commands are re-broadcast to loads every `hold_s` seconds.
    pub hold_s: f64,
    /// Aborts when the frequency deviation exceeds this, Hz.
    pub divergence_hz: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            plant: default_plant(),
            kp: 516.0,
            ki: 258.0,
            dt: 1.0,
            hold_s: 20.0,
            divergence_hz: 1.0,
        }
    }
}

/// Closed-loop run output. All series share the disturbance's time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Frequency deviation from nominal, Hz.
    pub freq_dev: TimeSeries,
    /// Shared balancing reference, MW.
    pub u: TimeSeries,
    /// Consumption deviation per resource entry, MW.
    pub class_power: Vec<(String, TimeSeries)>,
    /// Combined output of the ideal (conventional) entries, MW.
    pub u_ideal: TimeSeries,
    pub disturbance: TimeSeries,
}

enum ClassSim<'m> {
    Load {
        filter: ZohSimulator,
        mf: MeanFieldSim<'m>,
        zeta_held: f64,
        zeta_cap: f64,
        y_bar: f64,
        n_loads: f64,
    },
    Ideal {
        filter: ZohSimulator,
    },
}

struct ClassState<'m> {
    sim: ClassSim<'m>,
    output_gain: f64,
    schedule: Option<GainSchedule>,
    is_ideal: bool,
}

fn build_class_sims<'m>(
    classes: &'m [ResourceClass],
    dt: f64,
) -> Result<Vec<ClassState<'m>>> {
    classes
        .iter()
        .map(|class| {
            let filter = ZohSimulator::new(&to_state_space(&class.filter.m_total)?, dt)?;
            let sim = match &class.kind {
                ResourceKind::Load { model, n_loads } => ClassSim::Load {
                    filter,
                    mf: MeanFieldSim::new(model, model.pi0.clone(), 0.0, dt)?,
                    zeta_held: 0.0,
                    zeta_cap: class.zeta_rho_cap / model.rho_max(),
                    y_bar: model.y_bar(),
                    n_loads: *n_loads,
                },
                ResourceKind::Ideal => ClassSim::Ideal { filter },
            };
            Ok(ClassState {
                sim,
                output_gain: class.output_gain,
                schedule: class.gain_schedule,
                is_ideal: matches!(class.kind, ResourceKind::Ideal),
            })
        })
        .collect()
}

impl<'m> ClassState<'m> {
    /// Advances one loop step under reference `u`; returns the consumption
    /// deviation in MW. `broadcast` marks the steps on which held commands
    /// are refreshed.
    fn step(&mut self, u: f64, t: f64, broadcast: bool) -> Result<f64> {
        let raw = match &mut self.sim {
            ClassSim::Load {
                filter,
                mf,
                zeta_held,
                zeta_cap,
                y_bar,
                n_loads,
            } => {
                let zeta_now = filter.step(u);
                if broadcast {
                    *zeta_held = zeta_now.clamp(-*zeta_cap, *zeta_cap);
                    mf.set_zeta(*zeta_held);
                }
                let y = mf.step()?;
                (y - *y_bar) * *n_loads / 1000.0
            }
            ClassSim::Ideal { filter } => filter.step(u),
        };
        let g = self.schedule.map_or(1.0, |s| s.gain(t));
        Ok(raw * self.output_gain * g)
    }
}

/// Runs the frequency-regulation loop against a demand disturbance.
///
/// Per step: read the plant's frequency deviation (the plant is strictly
/// proper, so there is no algebraic loop), form the PI reference, let every
/// resource filter-and-respond, then drive the plant with the net imbalance.
pub fn run_closed_loop(
    cfg: &GridConfig,
    classes: &[ResourceClass],
    disturbance: &TimeSeries,
) -> Result<SimResult> {
    if disturbance.dt != cfg.dt {
        return Err(Error::InvalidTimeSeries {
            dt: disturbance.dt,
            len: disturbance.len(),
        });
    }
    let n = disturbance.len();
    let hold_steps = (cfg.hold_s / cfg.dt).round().max(1.0) as usize;
    let mut plant = ZohSimulator::new(&to_state_space(&cfg.plant)?, cfg.dt)?;
    let mut sims = build_class_sims(classes, cfg.dt)?;
    let mut integral = 0.0f64;

    let mut freq_dev = Vec::with_capacity(n);
    let mut u_series = Vec::with_capacity(n);
    let mut u_ideal = Vec::with_capacity(n);
    let mut class_power: Vec<Vec<f64>> = classes.iter().map(|_| Vec::with_capacity(n)).collect();

    for k in 0..n {
        let t = disturbance.time_at(k);
        let df = plant.output(0.0);
        if Float::abs(df) > cfg.divergence_hz {
            return Err(Error::Divergence { t, freq_dev: df });
        }
        integral += cfg.dt * df;
        let u = cfg.kp * df + cfg.ki * integral;

        let broadcast = k % hold_steps == 0;
        let mut consumption_dev = 0.0;
        let mut ideal_out = 0.0;
        for (i, cs) in sims.iter_mut().enumerate() {
            let y = cs.step(u, t, broadcast)?;
            class_power[i].push(y);
            consumption_dev += y;
            if cs.is_ideal {
                ideal_out += y;
            }
        }

        plant.step(-(disturbance.values[k] + consumption_dev));
        freq_dev.push(df);
        u_series.push(u);
        u_ideal.push(ideal_out);
    }

    let t0 = disturbance.t0;
    let dt = disturbance.dt;
    Ok(SimResult {
        freq_dev: TimeSeries::new(t0, dt, freq_dev, "Hz")?,
        u: TimeSeries::new(t0, dt, u_series, "MW")?,
        class_power: classes
            .iter()
            .zip(class_power)
            .map(|(c, v)| Ok((c.name.clone(), TimeSeries::new(t0, dt, v, "MW")?)))
            .collect::<Result<Vec<_>>>()?,
        u_ideal: TimeSeries::new(t0, dt, u_ideal, "MW")?,
        disturbance: disturbance.clone(),
    })
}

/// One class's open-loop tracking record.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTracking {
    pub name: String,
    /// Achieved consumption deviation, MW.
    pub power_dev: TimeSeries,
    /// What the class is *supposed* to deliver: the reference through its
    /// band-limiting stage alone.
    pub benchmark: TimeSeries,
    /// RMS tracking error over the benchmark's RMS.
    pub rms_error_norm: f64,
}

/// Feeds a shared reference directly to the resources (no plant, no
/// compensator) and scores each class against its band-limited benchmark.
pub fn run_open_loop(
    classes: &[ResourceClass],
    reference: &TimeSeries,
    hold_s: f64,
) -> Result<Vec<ClassTracking>> {
    let dt = reference.dt;
    let n = reference.len();
    let hold_steps = (hold_s / dt).round().max(1.0) as usize;
    let mut sims = build_class_sims(classes, dt)?;
    let mut out = Vec::with_capacity(classes.len());
    for (i, class) in classes.iter().enumerate() {
        let mut bench_sim = ZohSimulator::new(&to_state_space(&class.filter.m_bp)?, dt)?;
        let mut power = Vec::with_capacity(n);
        let mut bench = Vec::with_capacity(n);
        for k in 0..n {
            let t = reference.time_at(k);
            let u = reference.values[k];
            power.push(sims[i].step(u, t, k % hold_steps == 0)?);
            bench.push(bench_sim.step(u) * class.output_gain);
        }
        let power = TimeSeries::new(reference.t0, dt, power, "MW")?;
        let benchmark = TimeSeries::new(reference.t0, dt, bench, "MW")?;
        let err = power.sub(&benchmark)?;
        let denom = benchmark.rms().max(f64::MIN_POSITIVE);
        out.push(ClassTracking {
            name: class.name.clone(),
            rms_error_norm: err.rms() / denom,
            power_dev: power,
            benchmark,
        });
    }
    Ok(out)
}

/// The command series a load population would receive for a given reference:
/// the class filter's output, clipped and zero-order-held at the broadcast
/// period. This is what finite fleets consume.
pub fn command_series(
    class: &ResourceClass,
    reference: &TimeSeries,
    hold_s: f64,
) -> Result<TimeSeries> {
    let (zeta_cap, units) = match &class.kind {
        ResourceKind::Load { model, .. } => (class.zeta_rho_cap / model.rho_max(), "1"),
        ResourceKind::Ideal => (f64::INFINITY, "MW"),
    };
    let mut filter = ZohSimulator::new(&to_state_space(&class.filter.m_total)?, reference.dt)?;
    let mut vals = Vec::with_capacity(reference.len());
    for k in 0..reference.len() {
        let z = filter.step(reference.values[k]);
        vals.push(z.clamp(-zeta_cap, zeta_cap));
    }
    Ok(TimeSeries::new(reference.t0, reference.dt, vals, units)?.quantize_zoh(hold_s))
}

/// Time-averaged squared regulation effort `(1/T) integral u(t)^2 dt`
/// (trapezoidal), the mileage-like cost used to price conventional actuation.
pub fn mileage_cost(u: &TimeSeries) -> f64 {
    if u.len() < 2 {
        return u.values.first().map_or(0.0, |v| v * v);
    }
    let mut acc = 0.0;
    for w in u.values.windows(2) {
        acc += 0.5 * (w[0] * w[0] + w[1] * w[1]) * u.dt;
    }
    acc / (u.dt * (u.len() - 1) as f64)
}
