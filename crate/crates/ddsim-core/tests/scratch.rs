//! Temporary calibration diagnostics (not part of the final suite).

use ddsim_core::filter_design::{
    design_local_filter, flatness_report, FilterRecipe, FrequencyData, LocalFilter,
};
use ddsim_core::grid::{
    conventional_highpass, conventional_lowpass, run_closed_loop, GridConfig, ResourceClass,
};
use ddsim_core::load::{nominal_model, LoadClass, TclParams};
use ddsim_core::lti::TransferFunction;
use ddsim_core::mean_field::expected_mode_dwells;
use ddsim_core::signal::synthetic_disturbance;

fn paper_fleet() -> Vec<ResourceClass> {
    paper_fleet_hp(0.5)
}

fn paper_fleet_hp(hp_corner_rel: f64) -> Vec<ResourceClass> {
    let pops = [
        (LoadClass::Ac, 1.0e6),
        (LoadClass::FastWaterHeater, 5.0e6),
        (LoadClass::SlowWaterHeater, 5.0e6),
        (LoadClass::Pool, 1.0e6),
    ];
    let mut classes = Vec::new();
    let mut ac_hi = 0.0;
    let mut pool_lo = 0.0;
    for (class, n) in pops {
        let model = nominal_model(class, 7).expect("model");
        let (lo, hi) = class.band_rad_per_s();
        if class == LoadClass::Ac {
            ac_hi = hi;
        }
        if class == LoadClass::Pool {
            pool_lo = lo;
        }
        let recipe = class.filter_recipe();
        let omega = recipe.fit_grid((lo, hi));
        let resp = model.lin.freq_response(&omega).expect("response");
        let data = FrequencyData::new(omega, resp).unwrap();
        let lf = design_local_filter(&data, (lo, hi), &recipe)
            .expect("filter")
            .scaled(1000.0 / n);
        classes.push(ResourceClass::load(class.name(), model, n, lf));
    }
    let unity = TransferFunction::new(&[1.0], &[1.0]).unwrap();
    let hp = conventional_highpass(ac_hi * hp_corner_rel).unwrap();
    classes.push(ResourceClass::ideal(
        "gen-fast",
        LocalFilter {
            m_inv: unity.clone(),
            m_bp: hp.clone(),
            m_total: hp,
            band: (ac_hi, ac_hi * 100.0),
        },
        1.0,
    ));
    let lp = conventional_lowpass(pool_lo).unwrap();
    classes.push(ResourceClass::ideal(
        "gen-slow",
        LocalFilter {
            m_inv: unity,
            m_bp: lp.clone(),
            m_total: lp,
            band: (pool_lo / 100.0, pool_lo),
        },
        0.25,
    ));
    classes
}

#[test]
fn spike_hp_corner() {
    let cfg = GridConfig::default();
    let horizon = 24 * 3600;
    let d = synthetic_disturbance(1000.0, 0.0, cfg.dt, horizon, 11).unwrap();
    let off = run_closed_loop(
        &GridConfig {
            kp: 0.0,
            ki: 0.0,
            ..GridConfig::default()
        },
        &[],
        &d,
    )
    .unwrap();
    for rel in [1.0, 0.67, 0.5, 0.33] {
        let classes = paper_fleet_hp(rel);
        let res = run_closed_loop(&cfg, &classes, &d).unwrap();
        let mut tv = classes.clone();
        tv[0].gain_schedule = Some(ddsim_core::grid::GainSchedule {
            amplitude: 0.5,
            omega: 727e-7,
        });
        let res_tv = run_closed_loop(&cfg, &tv, &d).unwrap();
        println!(
            "hp corner x{:.2}: nominal max|df| {:.5} Hz (ratio {:.1}x), tv {:.5} Hz (ratio {:.1}x)",
            rel,
            res.freq_dev.max_abs(),
            off.freq_dev.max_abs() / res.freq_dev.max_abs(),
            res_tv.freq_dev.max_abs(),
            off.freq_dev.max_abs() / res_tv.freq_dev.max_abs()
        );
    }
}

#[test]
fn spike_fit_residual() {
    for class in LoadClass::ALL {
        let model = nominal_model(class, 7).expect("model");
        let (lo, hi) = class.band_rad_per_s();
        let mut combos = Vec::new();
        for (nd, dd) in [(3usize, 4usize), (4, 4)] {
            for roll in [10.0, 20.0] {
                for (glo, ghi) in [(3.0, 30.0), (3.0, 3.0), (2.0, 5.0)] {
                    combos.push((nd, dd, roll, glo, ghi));
                }
            }
        }
        for (nd, dd, roll, glo, ghi) in combos {
            let label = format!("({},{}) roll {:>2} grid /{}..*{}", nd, dd, roll, glo, ghi);
            let omega = FrequencyData::log_grid(lo / glo, hi * ghi, 120);
            let resp = model.lin.freq_response(&omega).expect("resp");
            let data = FrequencyData::new(omega, resp).unwrap();
            let recipe = FilterRecipe {
                num_deg: nd,
                den_deg: dd,
                rolloff_mult: roll,
                ..class.filter_recipe()
            };
            match design_local_filter(&data, (lo, hi), &recipe) {
                Ok(lf) => {
                    // worst |m_inv * G - 1| across the band, on a fresh dense grid
                    let band_w = FrequencyData::log_grid(lo, hi, 200);
                    let band_resp = model.lin.freq_response(&band_w).expect("resp");
                    let mut worst = 0.0f64;
                    for (w, g) in band_w.iter().zip(&band_resp) {
                        let mi = lf.m_inv.freq(*w).unwrap();
                        worst = worst.max((mi * g - 1.0).norm());
                    }
                    let full = FrequencyData::log_grid(lo / 3.0, hi * 30.0, 200);
                    let full_resp = model.lin.freq_response(&full).expect("resp");
                    let fdata = FrequencyData::new(full, full_resp).unwrap();
                    let rep = flatness_report(&lf.m_total, &fdata, (lo, hi), 10.0).unwrap();
                    println!(
                        "[{}] {}: worst |mG-1| {:.1}%, flat [{:+.2},{:+.2}] dB {:.1} deg atten {:.1} dB stable {}",
                        class.name(),
                        label,
                        100.0 * worst,
                        rep.min_gain_db,
                        rep.max_gain_db,
                        rep.max_phase_deg,
                        rep.attenuation_db.unwrap(),
                        lf.m_total.is_stable()
                    );
                }
                Err(e) => println!("[{}] {}: FAILED {}", class.name(), label, e),
            }
        }
    }
}

#[test]
fn spike_pool_sweep() {
    use ddsim_core::load::{pool_nominal_model, PoolConfig};
    use ddsim_core::mean_field::expected_mode_dwells;
    let (lo, hi) = LoadClass::Pool.band_rad_per_s();
    for (phases, rate, defect) in [(6usize, 1.0 / 60.0, 4.5e-4)] {
        let cfg = PoolConfig {
            phases,
            sampling_rate: rate,
            defect,
            ..PoolConfig::default()
        };
        let model = match pool_nominal_model(&cfg) {
            Ok(m) => m,
            Err(e) => {
                println!(
                    "pool p{} r1/{:.0} e{:.0e}: build failed: {}",
                    phases,
                    1.0 / rate,
                    defect,
                    e
                );
                continue;
            }
        };
        let (on, off) = expected_mode_dwells(&model).unwrap();
        let duty = model.y_bar() / 1.0;
        // static linearity: stationary power dev at zeta = 2 vs 2x zeta = 1
        let y0 = model.y_bar();
        let d1 = model.stationary_power(1.0).unwrap() - y0;
        let d2 = model.stationary_power(2.0).unwrap() - y0;
        print!(
            "pool p{:<2} r1/{:<3.0} e{:.0e}: dwell {:.2}/{:.2} h duty {:.4} cyc {:.2} h  static d1 {:+.4} d2/2d1 {:.3}",
            phases,
            1.0 / rate,
            defect,
            on / 3600.0,
            off / 3600.0,
            duty,
            (on + off) / 3600.0,
            d1,
            d2 / (2.0 * d1)
        );
        // linear gain across band (kW/pool per unit zeta -> MW per zeta at 1e6 pools)
        let probe: Vec<f64> = [lo, lo * 2.0, (lo * hi).sqrt(), hi / 2.0, hi]
            .into_iter()
            .collect();
        let g: Vec<f64> = model
            .lin
            .freq_response(&probe)
            .unwrap()
            .iter()
            .map(|h| h.norm() * 1000.0)
            .collect();
        print!("  MW/zeta [");
        for v in &g {
            print!(" {:.0}", v);
        }
        println!(" ]");
        for (nd, dd) in [(3usize, 4usize), (4, 4)] {
            let omega = FrequencyData::log_grid(lo / 3.0, hi * 3.0, 120);
            let resp = model.lin.freq_response(&omega).expect("resp");
            let data = FrequencyData::new(omega, resp).unwrap();
            let recipe = FilterRecipe {
                num_deg: nd,
                den_deg: dd,
                widen_lo: 3.0,
                widen_hi: 3.0,
                ..FilterRecipe::default()
            };
            match design_local_filter(&data, (lo, hi), &recipe) {
                Ok(f) => {
                    let interior = FrequencyData::log_grid(lo * 1.2, hi / 1.2, 150);
                    let worst = interior
                        .iter()
                        .map(|&w| {
                            let gg = model.lin.freq(w).unwrap();
                            let mi = f.m_inv.freq(w).unwrap();
                            (mi * gg - ddsim_core::lti::poly::Complex64::new(1.0, 0.0)).norm()
                        })
                        .fold(0.0, f64::max);
                    // flatness vs wide raw data
                    let womega = FrequencyData::log_grid(lo / 3.0, hi * 30.0, 120);
                    let wresp = model.lin.freq_response(&womega).unwrap();
                    let wdata = FrequencyData::new(womega, wresp).unwrap();
                    let rep =
                        ddsim_core::filter_design::flatness_report(&f.m_total, &wdata, (lo, hi), 10.0)
                            .unwrap();
                    println!(
                        "    ({},{}): interior worst |mG-1| {:.3}  flat [{:+.2},{:+.2}] dB {:.1} deg atten {:.1} dB",
                        nd,
                        dd,
                        worst,
                        rep.min_gain_db,
                        rep.max_gain_db,
                        rep.max_phase_deg,
                        rep.attenuation_db.unwrap_or(f64::NAN)
                    );
                }
                Err(e) => println!("    ({},{}): design failed: {}", nd, dd, e),
            }
        }
    }
}

#[test]
fn spike_ac_sigma() {
    use ddsim_core::grid::run_open_loop;
    use ddsim_core::load::{build_tcl_model, IdentifyConfig};
    use ddsim_core::signal::tracking_reference;
    let class = LoadClass::Ac;
    let band = class.band_rad_per_s();
    let n = 1.0e6;
    for sigma in [0.1, 0.15, 0.2, 0.25] {
        let mut params = TclParams::nominal(class).unwrap();
        params.sigma_w = sigma;
        let model = match build_tcl_model(
            &params,
            class.switching_shape(),
            &IdentifyConfig::for_class(class, 7).unwrap(),
        ) {
            Ok(m) => m,
            Err(e) => {
                println!("[ac] sigma {:.2}: build failed: {}", sigma, e);
                continue;
            }
        };
        // resonance: argmax of |G| over a wide grid
        let wide = FrequencyData::log_grid(1.0e-5, 3.0e-2, 300);
        let mags: Vec<f64> = model
            .lin
            .freq_response(&wide)
            .unwrap()
            .iter()
            .map(|h| h.norm())
            .collect();
        let (kmax, &peak) = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let w_peak = wide[kmax];
        // static linearity
        let y0 = model.y_bar();
        let d1 = model.stationary_power(1.0).unwrap() - y0;
        let d2 = model.stationary_power(2.0).unwrap() - y0;
        let d45 = model.stationary_power(4.5).unwrap() - y0;
        print!(
            "[ac] sigma {:.2}: peak {:.2e}@{:.2e} rad/s  d2/2d1 {:.3} d4.5/4.5d1 {:.3}",
            sigma,
            peak,
            w_peak,
            d2 / (2.0 * d1),
            d45 / (4.5 * d1)
        );
        let recipe = class.filter_recipe();
        let omega = recipe.fit_grid(band);
        let resp = model.lin.freq_response(&omega).unwrap();
        let data = FrequencyData::new(omega, resp).unwrap();
        let lf = match design_local_filter(&data, band, &recipe) {
            Ok(f) => f.scaled(1000.0 / n),
            Err(e) => {
                println!("  design failed: {}", e);
                continue;
            }
        };
        let rc = ResourceClass::load(class.name(), model, n, lf);
        let cap = rc.capacity_mw();
        let horizon = 2 * 86_400;
        let skip = 86_400 / 2;
        for frac in [0.5, 0.2] {
            let reference =
                tracking_reference(band.0, band.1, 5, frac * cap, 0.0, 1.0, horizon, 33, "MW")
                    .unwrap();
            let tracks = run_open_loop(core::slice::from_ref(&rc), &reference, 20.0).unwrap();
            let tr = &tracks[0];
            let e = tr.power_dev.sub(&tr.benchmark).unwrap();
            let num: f64 = e.values[skip..].iter().map(|v| v * v).sum::<f64>();
            let den: f64 = tr.benchmark.values[skip..].iter().map(|v| v * v).sum();
            print!("  {:.0}%: late {:.2}%", frac * 100.0, 100.0 * (num / den).sqrt());
        }
        println!("  (cap {:.0} MW)", cap);
    }
}

#[test]
fn spike_pool_tracking() {
    use ddsim_core::grid::run_open_loop;
    use ddsim_core::load::{pool_nominal_model, PoolConfig};
    use ddsim_core::mean_field::expected_mode_dwells;
    use ddsim_core::signal::tracking_reference;
    let class = LoadClass::Pool;
    let band = class.band_rad_per_s();
    let n = 1.0e6;
    for (phases, defect) in [
        (6usize, 3.0e-4),
        (6, 4.5e-4),
        (6, 5.5e-4),
        (5, 5.0e-4),
        (5, 7.0e-4),
        (4, 5.0e-4),
        (4, 7.0e-4),
    ] {
        let cfg = PoolConfig {
            phases,
            defect,
            ..PoolConfig::default()
        };
        let model = match pool_nominal_model(&cfg) {
            Ok(m) => m,
            Err(e) => {
                println!("pool p{} e{:.1e}: build failed: {}", phases, defect, e);
                continue;
            }
        };
        let (on, off) = expected_mode_dwells(&model).unwrap();
        let recipe = class.filter_recipe();
        let omega = recipe.fit_grid(band);
        let resp = model.lin.freq_response(&omega).unwrap();
        let data = FrequencyData::new(omega, resp).unwrap();
        let lf = match design_local_filter(&data, band, &recipe) {
            Ok(f) => f.scaled(1000.0 / n),
            Err(e) => {
                println!("pool p{} e{:.1e}: design failed: {}", phases, defect, e);
                continue;
            }
        };
        let rc = ResourceClass::load(class.name(), model, n, lf);
        let cap = rc.capacity_mw();
        let horizon = 6 * 86_400;
        let skip = 2 * 86_400;
        print!(
            "pool p{:<2} e{:.1e}: dwell {:.2}/{:.2} h cap {:.0} MW",
            phases,
            defect,
            on / 3600.0,
            off / 3600.0,
            cap
        );
        for frac in [0.5, 0.25] {
            let reference =
                tracking_reference(band.0, band.1, 5, frac * cap, 0.0, 1.0, horizon, 33, "MW")
                    .unwrap();
            let tracks = run_open_loop(core::slice::from_ref(&rc), &reference, 20.0).unwrap();
            let tr = &tracks[0];
            let e = tr.power_dev.sub(&tr.benchmark).unwrap();
            let num: f64 = e.values[skip..].iter().map(|v| v * v).sum::<f64>();
            let den: f64 = tr.benchmark.values[skip..].iter().map(|v| v * v).sum();
            let drift = e.values[skip..].iter().sum::<f64>() / (horizon - skip) as f64;
            print!(
                "  {:.0}%: late {:.2}% drift {:+.1} MW",
                frac * 100.0,
                100.0 * (num / den).sqrt(),
                drift
            );
        }
        println!();
    }
}

#[test]
fn spike_wh_center() {
    use ddsim_core::load::{build_tcl_model, IdentifyConfig, LogisticShape};
    use ddsim_core::lti::poly::Complex64;
    let proxy = |lin: &ddsim_core::mean_field::Linearization,
                 f: &ddsim_core::filter_design::LocalFilter,
                 band: (f64, f64)| {
        let m = 5;
        let ratio = band.1 / band.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..m {
            let w = band.0 * ratio.powf((i as f64 + 0.5) / m as f64);
            let a = band.0 / w;
            let g = lin.freq(w).unwrap();
            let mi = f.m_inv.freq(w).unwrap();
            let e = (mi * g - Complex64::new(1.0, 0.0)).norm();
            num += (a * e) * (a * e);
            den += a * a;
        }
        (num / den).sqrt()
    };
    for (class, center) in [
        (LoadClass::FastWaterHeater, 0.87),
        (LoadClass::SlowWaterHeater, 0.85),
    ] {
        let band = class.band_rad_per_s();
        for sw in [0.1, 0.2, 0.35] {
            let mut params = TclParams::nominal(class).unwrap();
            params.sigma_w = sw;
            let shape = LogisticShape {
                center_offset: center,
                steepness: 30.0,
            };
            let model =
                build_tcl_model(&params, shape, &IdentifyConfig::for_class(class, 7).unwrap())
                    .unwrap();
            let (on, off) = expected_mode_dwells(&model).unwrap();
            let fund = 2.0 * core::f64::consts::PI / (on + off); // rad/s
            let recipe = class.filter_recipe();
            let omega = recipe.fit_grid(band);
            let resp = model.lin.freq_response(&omega).unwrap();
            let data = FrequencyData::new(omega, resp).unwrap();
            match design_local_filter(&data, band, &recipe) {
                Ok(f) => {
                    let womega = FrequencyData::log_grid(band.0 / 3.0, band.1 * 30.0, 120);
                    let wresp = model.lin.freq_response(&womega).unwrap();
                    let wdata = FrequencyData::new(womega, wresp).unwrap();
                    let rep =
                        flatness_report(&f.m_total, &wdata, band, 10.0).unwrap();
                    println!(
                        "[{}] sw{:.2}: on {:.1} min off {:.2} h fund/lo {:.3}  proxy {:.4} flat [{:+.2},{:+.2}] {:.1} deg atten {:.1}",
                        class.name(),
                        sw,
                        on / 60.0,
                        off / 3600.0,
                        fund / band.0,
                        proxy(&model.lin, &f, band),
                        rep.min_gain_db,
                        rep.max_gain_db,
                        rep.max_phase_deg,
                        rep.attenuation_db.unwrap_or(f64::NAN)
                    );
                }
                Err(e) => println!("[{}] sw{:.2}: design failed: {}", class.name(), sw, e),
            }
        }
    }
}

#[test]
fn spike_hetero_tracking() {
    use ddsim_core::grid::run_open_loop;
    use ddsim_core::load::sampled_models;
    use ddsim_core::signal::tracking_reference;
    let mut failures = 0;
    for (class, frac) in [
        (LoadClass::SlowWaterHeater, 0.5),
        (LoadClass::FastWaterHeater, 0.5),
        (LoadClass::Ac, 0.2),
        (LoadClass::Ac, 0.5),
    ] {
        let n_total = match class {
            LoadClass::Ac => 1.0e6,
            _ => 5.0e6,
        };
        let k = 4usize;
        let band = class.band_rad_per_s();
        let mut groups = Vec::new();
        for (gi, model) in sampled_models(class, k, 1000).unwrap().into_iter().enumerate() {
            let n_g = n_total / k as f64;
            match ddsim_core::load::design_class_filter(&model, class) {
                Ok(lf) => {
                    // each subgroup services an equal share of the class target
                    let lf = lf.scaled(1000.0 / n_total);
                    groups.push(ResourceClass::load(class.name(), model, n_g, lf));
                }
                Err(e) => {
                    println!("[{}] subgroup {} design failed: {}", class.name(), gi, e);
                    failures += 1;
                }
            }
        }
        if groups.len() < k {
            continue;
        }
        let cap: f64 = groups.iter().map(|g| g.capacity_mw()).sum();
        let horizon = if class == LoadClass::Pool {
            2 * 86_400
        } else {
            86_400
        };
        let reference =
            tracking_reference(band.0, band.1, 5, frac * cap, 0.0, 1.0, horizon, 33, "MW")
                .unwrap();
        let tracks = run_open_loop(&groups, &reference, 20.0).unwrap();
        // combined deviation vs the class benchmark (same bandpass for all)
        let mut combined = tracks[0].power_dev.clone();
        for tr in &tracks[1..] {
            combined = combined.add(&tr.power_dev).unwrap();
        }
        for (gi, tr) in tracks.iter().enumerate() {
            let share = tr.benchmark.map("MW", |v| v / k as f64);
            let e = tr.power_dev.sub(&share).unwrap();
            println!(
                "    subgroup {}: share err {:.2}% (dev rms {:.1} MW, share rms {:.1} MW)",
                gi,
                100.0 * e.rms() / share.rms(),
                tr.power_dev.rms(),
                share.rms()
            );
        }
        let bench = &tracks[0].benchmark;
        let e = combined.sub(bench).unwrap();
        let err = (e.values.iter().map(|v| v * v).sum::<f64>()
            / bench.values.iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        println!(
            "[{}] {:.0}% cap hetero x{}: cap {:.0} MW rms err {:.2}%",
            class.name(),
            frac * 100.0,
            k,
            cap,
            err * 100.0
        );
    }
    assert_eq!(failures, 0);
}

#[test]
fn spike_ac_shape() {
    use ddsim_core::load::{build_tcl_model, IdentifyConfig, LogisticShape};
    use ddsim_core::lti::poly::Complex64;
    let class = LoadClass::Ac;
    let params = TclParams::nominal(class).unwrap();
    let band = class.band_rad_per_s();
    let rho = params.rho_tr / params.cop; // electrical kW while on
    for (center, steep) in [
        (0.9, 30.0),
        (0.85, 20.0),
        (0.8, 15.0),
        (0.8, 10.0),
        (0.7, 10.0),
        (0.75, 12.0),
    ] {
        let shape = LogisticShape {
            center_offset: center,
            steepness: steep,
        };
        let model = match build_tcl_model(
            &params,
            shape,
            &IdentifyConfig::for_class(class, 7).unwrap(),
        ) {
            Ok(m) => m,
            Err(e) => {
                println!("[ac] c{:.2} k{:.0}: build failed: {}", center, steep, e);
                continue;
            }
        };
        let (on, off) = expected_mode_dwells(&model).unwrap();
        // resonance location
        let grid = FrequencyData::log_grid(1.0e-4, 3.0e-2, 160);
        let resp = model.lin.freq_response(&grid).unwrap();
        let (mut pk_w, mut pk_g) = (0.0, 0.0);
        for (&w, h) in grid.iter().zip(&resp) {
            if h.norm() > pk_g {
                pk_g = h.norm();
                pk_w = w;
            }
        }
        // static linearity: slope ratio at zeta*rho = 2 and 4.5 vs small-signal
        let y0 = model.y_bar();
        let slope = (model.stationary_power(0.05 / rho).unwrap() - y0) / (0.05 / rho);
        let lin_ratio = |zr: f64| {
            let z = zr / rho;
            (model.stationary_power(z).unwrap() - y0) / (slope * z)
        };
        let recipe = class.filter_recipe();
        let omega = recipe.fit_grid(band);
        let dresp = model.lin.freq_response(&omega).unwrap();
        let data = FrequencyData::new(omega, dresp).unwrap();
        let proxy = match design_local_filter(&data, band, &recipe) {
            Ok(f) => {
                let m = 5;
                let ratio = band.1 / band.0;
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..m {
                    let w = band.0 * ratio.powf((i as f64 + 0.5) / m as f64);
                    let a = band.0 / w;
                    let g = model.lin.freq(w).unwrap();
                    let mi = f.m_inv.freq(w).unwrap();
                    let e = (mi * g - Complex64::new(1.0, 0.0)).norm();
                    num += (a * e) * (a * e);
                    den += a * a;
                }
                (num / den).sqrt()
            }
            Err(_) => f64::NAN,
        };
        println!(
            "[ac] c{:.2} k{:>2.0}: on {:.1} off {:.1} min duty {:.3} peak {:.2} @ {:.2e}  y(2)/lin {:.3} y(4.5)/lin {:.3} y(-4.5)/lin {:.3}  proxy {:.4}",
            center,
            steep,
            on / 60.0,
            off / 60.0,
            y0 / rho,
            pk_g,
            pk_w,
            lin_ratio(2.0),
            lin_ratio(4.5),
            lin_ratio(-4.5),
            proxy
        );
    }
}

#[test]
fn spike_weighted_proxy() {
    use ddsim_core::lti::poly::Complex64;
    // Red-spectrum component placement mirroring tracking_reference: 5 cell
    // centers, amplitude ~ 1/omega.
    let proxy = |lin: &ddsim_core::mean_field::Linearization,
                 f: &ddsim_core::filter_design::LocalFilter,
                 band: (f64, f64)| {
        let m = 5;
        let ratio = band.1 / band.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..m {
            let w = band.0 * ratio.powf((i as f64 + 0.5) / m as f64);
            let a = band.0 / w;
            let g = lin.freq(w).unwrap();
            let mi = f.m_inv.freq(w).unwrap();
            let e = (mi * g - Complex64::new(1.0, 0.0)).norm();
            num += (a * e) * (a * e);
            den += a * a;
        }
        (num / den).sqrt()
    };
    for class in LoadClass::ALL {
        let model = nominal_model(class, 7).expect("model");
        let band = class.band_rad_per_s();
        let base = class.filter_recipe();
        let mut candidates: Vec<(&str, FilterRecipe)> = vec![("class ", base)];
        if matches!(
            class,
            LoadClass::FastWaterHeater | LoadClass::SlowWaterHeater
        ) {
            for (tag, span_lo, span_hi, pts, roll) in [
                ("s1.5/3  ", 1.5, 3.0, 120usize, 10.0),
                ("s1.2/2  ", 1.2, 2.0, 160, 10.0),
                ("s1.2/2.5", 1.2, 2.5, 160, 10.0),
                ("s1.2/3  ", 1.2, 3.0, 160, 10.0),
                ("s1.3/2  ", 1.3, 2.0, 160, 10.0),
                ("s1.3/2.5", 1.3, 2.5, 160, 10.0),
                ("s1.5/2  ", 1.5, 2.0, 160, 10.0),
                ("s1.5/2.5", 1.5, 2.5, 160, 10.0),
            ] {
                candidates.push((
                    tag,
                    FilterRecipe {
                        fit_span_lo: span_lo,
                        fit_span_hi: span_hi,
                        fit_points: pts,
                        rolloff_mult: roll,
                        ..base
                    },
                ));
            }
        }
        for (tag, recipe) in candidates {
            let omega = recipe.fit_grid(band);
            let resp = model.lin.freq_response(&omega).expect("resp");
            let data = FrequencyData::new(omega, resp).unwrap();
            match design_local_filter(&data, band, &recipe) {
                Ok(f) => {
                    let womega = FrequencyData::log_grid(band.0 / 3.0, band.1 * 30.0, 120);
                    let wresp = model.lin.freq_response(&womega).unwrap();
                    let wdata = FrequencyData::new(womega, wresp).unwrap();
                    let rep = ddsim_core::filter_design::flatness_report(
                        &f.m_total, &wdata, band, 10.0,
                    )
                    .unwrap();
                    // worst composite loop gain outside the band (skirts must
                    // not bump back above unity anywhere)
                    let out_peak_db = wdata
                        .omega
                        .iter()
                        .zip(&wdata.response)
                        .filter(|(&w, _)| w < band.0 || w > band.1)
                        .map(|(&w, h)| {
                            20.0 * (f.m_total.freq(w).unwrap() * h).norm().log10()
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    println!(
                        "[{}] {}: proxy {:.4}  flat [{:+.2},{:+.2}] dB {:.1} deg atten {:.1} dB outpk {:+.1} dB",
                        class.name(),
                        tag,
                        proxy(&model.lin, &f, band),
                        rep.min_gain_db,
                        rep.max_gain_db,
                        rep.max_phase_deg,
                        rep.attenuation_db.unwrap_or(f64::NAN),
                        out_peak_db
                    );
                }
                Err(e) => println!("[{}] {}: design failed: {}", class.name(), tag, e),
            }
        }
    }
}

#[test]
fn spike_fit_profile() {
    use ddsim_core::filter_design::fit_rational;
    for (class, nd, dd) in [
        (LoadClass::Ac, 4usize, 4usize),
        (LoadClass::FastWaterHeater, 3, 4),
        (LoadClass::FastWaterHeater, 4, 4),
        (LoadClass::Pool, 4, 4),
    ] {
        let model = nominal_model(class, 7).expect("model");
        let (lo, hi) = class.band_rad_per_s();
        let omega = FrequencyData::log_grid(lo / 3.0, hi * 30.0, 120);
        let resp = model.lin.freq_response(&omega).expect("resp");
        let data = FrequencyData::new(omega, resp).unwrap();
        let recipe = FilterRecipe {
            num_deg: nd,
            den_deg: dd,
            ..class.filter_recipe()
        };
        let fit = match fit_rational(&data, &recipe) {
            Ok(f) => f,
            Err(e) => {
                println!("[{}] ({},{}): fit failed: {}", class.name(), nd, dd, e);
                continue;
            }
        };
        println!("[{}] ({},{}) fit vs data across band:", class.name(), nd, dd);
        for i in 0..=10 {
            let w = lo * (hi / lo).powf(i as f64 / 10.0);
            let g = model.lin.freq(w).unwrap();
            let f = fit.freq(w).unwrap();
            println!(
                "    w {:.3e}: |G| {:.4} |fit| {:.4} ({:+.2} dB) phase err {:+.1} deg",
                w,
                g.norm(),
                f.norm(),
                20.0 * (f.norm() / g.norm()).log10(),
                (f / g).arg().to_degrees()
            );
        }
    }
}

#[test]
fn spike_agents_vs_mean_field() {
    use ddsim_core::agents::run_fleet;
    use ddsim_core::mean_field::integrate_mean_field;
    use ddsim_core::signal::band_limited_multisine;

    for class in [LoadClass::Ac, LoadClass::Pool] {
        let model = nominal_model(class, 7).expect("model");
        let (lo, hi) = class.band_rad_per_s();
        let duty = model.y_bar() / model.rho_max();
        let target_kw = 0.5 * model.rho_max() * duty.min(1.0 - duty);
        let center = (lo * hi).sqrt();
        let gain = model.lin.freq(center).unwrap().norm();
        let zeta = band_limited_multisine(
            lo,
            hi,
            6,
            target_kw / gain,
            0.0,
            1.0,
            86_400,
            21,
            "1",
        )
        .unwrap()
        .quantize_zoh(20.0);
        let t = std::time::Instant::now();
        let (_, y) = integrate_mean_field(&model, &zeta, model.pi0.clone()).expect("mf");
        let mf_s = t.elapsed().as_secs_f64();
        let t = std::time::Instant::now();
        let fleet = run_fleet(&model, 2000, 99, &zeta, 20.0).expect("fleet");
        let fleet_s = t.elapsed().as_secs_f64();
        let err = fleet.power.sub(&y).unwrap();
        println!(
            "[{}] zeta*rho peak {:.2}; mf {:.1}s fleet {:.1}s; rms err {:.4} kW = {:.2}% of ybar {:.3}; swing rms {:.3} kW",
            class.name(),
            zeta.max_abs() * model.rho_max(),
            mf_s,
            fleet_s,
            err.rms(),
            100.0 * err.rms() / model.y_bar(),
            model.y_bar(),
            y.map("kW", |v| v - model.y_bar()).rms()
        );
    }
}

#[test]
fn spike_open_loop_tracking() {
    use ddsim_core::agents::run_fleet;
    use ddsim_core::grid::{command_series, run_open_loop};
    use ddsim_core::signal::{tracking_reference, TimeSeries};

    let classes = paper_fleet();
    for rc in classes.iter().take(4) {
        let (lo, hi) = rc.filter.band;
        let cap = rc.capacity_mw();
        // settle ~ a few time constants of the band-lo mode, then evaluate
        // over at least two periods of the slowest reference component
        let (horizon, skip) = match rc.name.as_str() {
            "wh-slow" => (3 * 86_400, 86_400),
            "pool" => (4 * 86_400, 2 * 86_400),
            _ => (2 * 86_400, 86_400 / 2),
        };
        for frac in [0.5, 0.25, 0.1] {
            let reference =
                tracking_reference(lo, hi, 5, frac * cap, 0.0, 1.0, horizon, 33, "MW").unwrap();
            let zeta = command_series(rc, &reference, 20.0).unwrap();
            let zrho = match &rc.kind {
                ddsim_core::grid::ResourceKind::Load { model, .. } => {
                    zeta.max_abs() * model.rho_max()
                }
                _ => 0.0,
            };
            let tracks = run_open_loop(core::slice::from_ref(rc), &reference, 20.0).unwrap();
            let tr = &tracks[0];
            let late_err: f64 = {
                let e = tr.power_dev.sub(&tr.benchmark).unwrap();
                let num: f64 = e.values[skip..].iter().map(|v| v * v).sum::<f64>();
                let den: f64 = tr.benchmark.values[skip..].iter().map(|v| v * v).sum();
                (num / den).sqrt()
            };
            println!(
                "[{}] {:.0}% cap: rms err {:.2}% (late {:.2}%), max |zeta*rho| {:.2}",
                rc.name,
                frac * 100.0,
                100.0 * tr.rms_error_norm,
                100.0 * late_err,
                zrho
            );
        }
    }

    // AC cycling at 20% capacity vs same-seed nominal
    let ac = &classes[0];
    let model = match &ac.kind {
        ddsim_core::grid::ResourceKind::Load { model, .. } => model.clone(),
        _ => unreachable!(),
    };
    let (lo, hi) = ac.filter.band;
    let cap = ac.capacity_mw();
    let reference = tracking_reference(lo, hi, 5, 0.2 * cap, 0.0, 1.0, 86_400, 44, "MW").unwrap();
    let zeta = command_series(ac, &reference, 20.0).unwrap();
    let run = run_fleet(&model, 2000, 77, &zeta, 20.0).unwrap();
    let nominal_zeta = TimeSeries::zeros(0.0, 1.0, 86_400, "1").unwrap();
    let nominal = run_fleet(&model, 2000, 77, &nominal_zeta, 20.0).unwrap();
    println!(
        "AC cycling: tracking {:.2} vs nominal {:.2} switches/agent-day -> ratio {:.3}",
        run.qos.switches_per_agent_day,
        nominal.qos.switches_per_agent_day,
        run.qos.switches_per_agent_day / nominal.qos.switches_per_agent_day
    );
}

#[test]
fn spike_closed_loop() {
    let t = std::time::Instant::now();
    let classes = paper_fleet();
    println!("fleet built in {:.2}s", t.elapsed().as_secs_f64());
    for c in &classes {
        println!(
            "  [{}] baseline {:.0} MW capacity {:.0} MW",
            c.name,
            c.baseline_mw(),
            c.capacity_mw()
        );
    }
    let cfg = GridConfig::default();
    let horizon = 24 * 3600;
    let d = synthetic_disturbance(1000.0, 0.0, cfg.dt, horizon, 11).unwrap();

    let t = std::time::Instant::now();
    let res = run_closed_loop(&cfg, &classes, &d).expect("closed loop");
    let wall = t.elapsed().as_secs_f64();
    println!(
        "closed loop {} steps in {:.2}s ({:.0} steps/s)",
        horizon,
        wall,
        horizon as f64 / wall
    );

    // aggregate actuation (all consumption deviations) vs -D
    let mut agg = res.class_power[0].1.clone();
    for (_, p) in &res.class_power[1..] {
        agg = agg.sub(&p.map("MW", |v| -v)).unwrap(); // agg - (-p) = agg + p
    }
    let neg_d = d.map("MW", |v| -v);
    let corr = agg.correlation(&neg_d).unwrap();
    println!("corr(U_agg, -D) = {:.5}", corr);
    println!("max |df| = {:.5} Hz", res.freq_dev.max_abs());

    // compensator off: same disturbance, no actuation
    let off_cfg = GridConfig {
        kp: 0.0,
        ki: 0.0,
        ..GridConfig::default()
    };
    let off = run_closed_loop(&off_cfg, &[], &d).expect("open loop");
    println!(
        "compensator-off max |df| = {:.5} Hz (ratio {:.1}x)",
        off.freq_dev.max_abs(),
        off.freq_dev.max_abs() / res.freq_dev.max_abs()
    );
    let late_max = |ts: &ddsim_core::signal::TimeSeries| {
        ts.values[7200..]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    println!(
        "post-onset: max |df| = {:.5} Hz vs off {:.5} Hz (ratio {:.1}x)",
        late_max(&res.freq_dev),
        late_max(&off.freq_dev),
        late_max(&off.freq_dev) / late_max(&res.freq_dev)
    );

    // D == 0 exactness
    let zero = ddsim_core::signal::TimeSeries::zeros(0.0, cfg.dt, 3600, "MW").unwrap();
    let rest = run_closed_loop(&cfg, &classes, &zero).expect("rest");
    println!("D==0 max |df| = {:e}", rest.freq_dev.max_abs());

    // linear composition at the disturbance component frequencies
    let periods = [86_400.0, 28_800.0, 10_800.0, 3_600.0, 1_800.0, 600.0, 180.0, 60.0];
    let weights = [1.0, 0.8, 0.6, 0.45, 0.3, 0.15, 0.06, 0.02];
    let wsum: f64 = weights.iter().sum();
    let omegas: Vec<f64> = periods
        .iter()
        .map(|p| 2.0 * std::f64::consts::PI / p)
        .collect();
    let h_full = ddsim_core::grid::total_response(&classes, &omegas).unwrap();
    let mut half = classes.clone();
    half[0].output_gain = 0.5;
    let h_half = ddsim_core::grid::total_response(&half, &omegas).unwrap();
    let gp = ddsim_core::grid::default_plant();
    for (k, &w) in omegas.iter().enumerate() {
        let gpw = gp.freq(w).unwrap();
        let gc = ddsim_core::grid::pi_compensator(cfg.kp, cfg.ki).freq(w).unwrap();
        let amp = weights[k] / wsum * 1000.0;
        let s_full = 1.0 / (1.0 + gpw * gc * h_full[k]).norm();
        let s_half = 1.0 / (1.0 + gpw * gc * h_half[k]).norm();
        println!(
            "  T {:>6.0}s |H| {:.2} -> {:.2}; est df {:.2} -> {:.2} mHz (amp {:.0} MW)",
            periods[k],
            h_full[k].norm(),
            h_half[k].norm(),
            amp * gpw.norm() * s_full * 1000.0,
            amp * gpw.norm() * s_half * 1000.0,
            amp
        );
    }

    // time-varying AC availability
    let mut tv = classes.clone();
    tv[0].gain_schedule = Some(ddsim_core::grid::GainSchedule {
        amplitude: 0.5,
        omega: 727e-7,
    });
    let res_tv = run_closed_loop(&cfg, &tv, &d).expect("tv run");
    println!(
        "tv-gain: max |df| = {:.5} Hz (ratio {:.1}x), corr stays {:.5}",
        res_tv.freq_dev.max_abs(),
        off.freq_dev.max_abs() / res_tv.freq_dev.max_abs(),
        {
            let mut agg = res_tv.class_power[0].1.clone();
            for (_, p) in &res_tv.class_power[1..] {
                agg = agg.sub(&p.map("MW", |v| -v)).unwrap();
            }
            agg.correlation(&neg_d).unwrap()
        }
    );

    // alpha sweep: AC band responsibility shifts to an ideal actuator
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut blend = classes.clone();
        blend[0].output_gain = alpha;
        let ac_bp = blend[0].filter.m_bp.clone();
        let unity = TransferFunction::new(&[1.0], &[1.0]).unwrap();
        blend.push(ResourceClass::ideal(
            "gen-ac-blend",
            LocalFilter {
                m_inv: unity,
                m_bp: ac_bp.clone(),
                m_total: ac_bp,
                band: blend[0].filter.band,
            },
            1.0 - alpha,
        ));
        let r = run_closed_loop(&cfg, &blend, &d).expect("blend run");
        let fast = r
            .class_power
            .iter()
            .filter(|(n, _)| n == "gen-fast" || n == "gen-ac-blend")
            .map(|(_, p)| p.clone())
            .reduce(|a, b| a.sub(&b.map("MW", |v| -v)).unwrap())
            .unwrap();
        println!(
            "alpha {:.2}: J2 {:.1} MW^2, max|df| {:.5} Hz",
            alpha,
            ddsim_core::grid::mileage_cost(&fast),
            r.freq_dev.max_abs()
        );
    }
}

fn model_report(class: LoadClass) {
    let t = std::time::Instant::now();
    let model = nominal_model(class, 7).expect("model builds");
    let build_s = t.elapsed().as_secs_f64();
    let duty = model.y_bar() / model.rho_max();
    let (on, off) = expected_mode_dwells(&model).expect("dwells");
    println!(
        "[{}] build {:.2}s duty {:.4} chain dwells on {:.1} min / off {:.2} h",
        class.name(),
        build_s,
        duty,
        on / 60.0,
        off / 3600.0
    );
    if class.is_tcl() {
        let p = TclParams::nominal(class).unwrap();
        let (aon, aoff) = p.analytic_dwell_times();
        println!(
            "    analytic dwells on {:.1} min / off {:.2} h, duty {:.4}",
            aon / 60.0,
            aoff / 3600.0,
            p.duty_cycle()
        );
    }
    // zeta response monotonicity and range
    for zr in [-5.0, -2.0, 0.0, 2.0, 5.0] {
        let z = zr / model.rho_max();
        let y = model.stationary_power(z).expect("stationary power");
        println!("    zeta*rho {:+.0} -> stationary duty {:.4}", zr, y / model.rho_max());
    }
    // linearization response peak
    let (lo, hi) = class.band_rad_per_s();
    let grid = FrequencyData::log_grid(lo / 30.0, hi * 30.0, 200);
    let resp = model.lin.freq_response(&grid).expect("freq response");
    let (mut peak_w, mut peak_g) = (0.0, 0.0);
    for (w, h) in grid.iter().zip(&resp) {
        if h.norm() > peak_g {
            peak_g = h.norm();
            peak_w = *w;
        }
    }
    println!(
        "    band [{:.2e}, {:.2e}] rad/s; |G| peak {:.3} kW at {:.2e} rad/s; DC {:.3}",
        lo,
        hi,
        peak_g,
        peak_w,
        model.lin.freq(0.0).unwrap().re
    );
}

#[test]
fn report_models() {
    for class in LoadClass::ALL {
        model_report(class);
    }
}

#[test]
fn report_filters() {
    for class in LoadClass::ALL {
        let model = nominal_model(class, 7).expect("model builds");
        let (lo, hi) = class.band_rad_per_s();
        let omega = FrequencyData::log_grid(lo / 3.0, hi * 30.0, 120);
        let resp = model.lin.freq_response(&omega).expect("response");
        let data = FrequencyData::new(omega, resp).unwrap();
        let chosen = class.filter_recipe();
        for recipe in [chosen.clone()] {
            let (nd, dd) = (recipe.num_deg, recipe.den_deg);
            match design_local_filter(&data, (lo, hi), &recipe) {
                Ok(lf) => {
                    let rep = flatness_report(&lf.m_total, &data, (lo, hi), 10.0).unwrap();
                    println!(
                        "[{}] fit ({},{}): band gain [{:+.2}, {:+.2}] dB, phase {:.1} deg, atten {:?} dB, stable {}",
                        class.name(),
                        nd,
                        dd,
                        rep.min_gain_db,
                        rep.max_gain_db,
                        rep.max_phase_deg,
                        rep.attenuation_db,
                        lf.m_total.is_stable()
                    );
                    if !lf.m_total.is_stable() {
                        let worst = lf
                            .m_total
                            .poles()
                            .into_iter()
                            .max_by(|a, b| a.re.total_cmp(&b.re))
                            .unwrap();
                        println!(
                            "      worst m_total pole {:+.3e} {:+.3e}j; m_inv stable {} m_bp stable {}",
                            worst.re,
                            worst.im,
                            lf.m_inv.is_stable(),
                            lf.m_bp.is_stable()
                        );
                    }
                }
                Err(e) => println!("[{}] fit ({},{}): FAILED: {}", class.name(), nd, dd, e),
            }
        }
    }
}
