//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 4 5`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nanosense_core::chip::{
    intervals, min_mw_heater_gap, rtd_resistance, rtd_temperature, schedule_timeline, Channel, DutyCycleSchedule,
    RtdCalibration,
};
use nanosense_core::io;
use nanosense_core::media::{
    ensemble, inject_directed, simulate_brownian, simulate_viscoelastic, stokes_einstein_d, viscosity_at,
    DirectedSegmentSpec, SlopeSign, Trajectory, ViscoelasticModel, ViscousMediumModel,
};
use nanosense_core::odmr::{
    allan_deviation, build_interpolation, calibrate_kappa, crb, crb_temperature_sensitivity, default_grid,
    fit_bins, fit_double_lorentzian, fit_white_noise, octave_factors, synthesize_series, CrbParams,
    KappaCalibration, KappaLevel, Lineshape, OdmrScan, ScanTiming, ShiftFitOptions,
};
use nanosense_core::rheology::{
    anomalous_exponent, complex_modulus, ensemble_variance, external_force_spectrum, fit_diffusion,
    fit_hydrodynamic_radius, linear_lags, log_lags, msd, psd, AxisSet, ComplexModulus, DiffusionFitMode,
    MsdCurve, MsdOptions, PsdOptions, TemperatureDiffusionPoint,
};
use nanosense_core::rng::{derive_seed, substream};
use nanosense_core::segmentation::{
    class_exponents, directionality_ratio, gamma_null, segment, MotionClass, SegmentOptions,
};
use nanosense_core::stats::{mean, std_dev};
use nanosense_core::tracker::{static_benchmark, track, StaticBenchmarkOptions, TrackOptions, TrackerConfig};
use nanosense_core::units::{celsius_to_kelvin, thermal_energy, NM};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

const SEED: u64 = 1;
const XY: AxisSet = AxisSet([true, true, false]);

struct Outcome {
    pass: bool,
    detail: String,
    /// Bytes that must be identical when the criterion is re-run.
    artifact: Vec<u8>,
}

type Check = fn(u64) -> Outcome;

fn slope_loglog(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn within(v: f64, target: f64, rel: f64) -> bool {
    (v / target - 1.0).abs() <= rel
}

// 1
fn tracking_shot_noise_law(seed: u64) -> Outcome {
    let t = Instant::now();
    let b = [1e4, 3e4, 1e5, 3e5, 1e6, 3e6, 1e7];
    let rows = static_benchmark(&b, &TrackerConfig::default(), &StaticBenchmarkOptions { seed, ..Default::default() })
        .expect("benchmark");
    let d: Vec<f64> = rows.iter().map(|r| r.apparent_d_xy).collect();
    let slope = slope_loglog(&b, &d);
    let elapsed = t.elapsed();
    let lost = rows.iter().any(|r| r.lost_lock);
    let mut artifact = String::new();
    for r in &rows {
        writeln!(artifact, "{:?},{:?},{:?},{:?}", r.brightness, r.apparent_d_xy, r.apparent_d_z, r.rms_nm).unwrap();
    }
    Outcome {
        pass: (slope + 1.0).abs() <= 0.15 && !lost && elapsed < Duration::from_secs(120),
        detail: format!("slope {slope:.3} (target -1 ± 0.15), lock kept: {}, {elapsed:.1?}", !lost),
        artifact: artifact.into_bytes(),
    }
}

// 2
fn dynamic_tracking_recovery(seed: u64) -> Outcome {
    let t = Instant::now();
    let cfg = TrackerConfig::default();
    let mut ok = true;
    let mut detail = String::new();
    let mut artifact = Vec::new();
    for (i, &d) in [1e2, 1e3, 1e4, 5e4].iter().enumerate() {
        let truth = simulate_brownian(d, 180_000, 1e-3, derive_seed(seed, "medium", i as u64)).unwrap();
        let out = track(&truth, &cfg, &TrackOptions::new(1e6, derive_seed(seed, "tracker-photons", i as u64))).unwrap();
        let c = msd(&out.estimate, XY, &linear_lags(20), &MsdOptions::default()).unwrap();
        let f = fit_diffusion(&c, DiffusionFitMode::WithOffset { tau_min: 0.0, tau_max: f64::INFINITY }).unwrap();
        ok &= within(f.d, d, 0.10) && !out.diagnostics.lost_lock();
        write!(detail, "{d:.0e}->{:+.1}% ", 100.0 * (f.d / d - 1.0)).unwrap();
        io::write_trajectory(&mut artifact, &out.estimate).unwrap();
    }
    let fast = simulate_brownian(5e5, 60_000, 1e-3, derive_seed(seed, "medium", 4)).unwrap();
    let out = track(&fast, &cfg, &TrackOptions::new(1e6, derive_seed(seed, "tracker-photons", 4))).unwrap();
    let flagged = out.diagnostics.lost_lock();
    io::write_diagnostics(&mut artifact, &out.diagnostics).unwrap();
    let elapsed = t.elapsed();
    Outcome {
        pass: ok && flagged && elapsed < Duration::from_secs(300),
        detail: format!("{detail}(within 10%); lock loss at 5e5 flagged: {flagged} (update {:?}), {elapsed:.1?}", out.diagnostics.lock_lost_at),
        artifact,
    }
}

// 3
fn static_resolution_anchor(seed: u64) -> Outcome {
    let cfg = TrackerConfig::default();
    let b = [1e5, 3e5, 1e6, 3e6, 1e7];
    let rows = static_benchmark(&b, &cfg, &StaticBenchmarkOptions { seed, ..Default::default() }).unwrap();
    let rms: Vec<f64> = rows.iter().map(|r| r.rms_nm).collect();
    let slope = slope_loglog(&b, &rms);
    let lx: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let intercept = mean(&rms.iter().map(|v| v.ln()).collect::<Vec<_>>()) - slope * mean(&lx);
    let calibrated = ((3.7f64.ln() - intercept) / slope).exp();
    let check = static_benchmark(
        &[calibrated],
        &cfg,
        &StaticBenchmarkOptions { seed: derive_seed(seed, "anchor", 0), ..Default::default() },
    )
    .unwrap();
    let anchor = check[0].rms_nm;
    let scaling = (slope + 0.5).abs() <= 0.1;
    let anchored = within(anchor, 3.7, 0.3);
    Outcome {
        pass: scaling && anchored,
        detail: format!(
            "rms ∝ PL^{slope:.3} (gate -0.5 ± 0.1); {anchor:.2} nm at calibrated {calibrated:.3e} counts/s with {} ms updates (3.7 ± 30%)",
            cfg.t_orbit * 1e3
        ),
        artifact: format!("{slope:?},{calibrated:?},{anchor:?}").into_bytes(),
    }
}

fn zero_shift_bins(shape: &Lineshape, lambda0: f64, n: usize, seed: u64, timing: &ScanTiming) -> Vec<OdmrScan> {
    synthesize_series(shape, lambda0, &default_grid(), timing, &vec![0.0; n], seed).unwrap()
}

fn reference_template(shape: &Lineshape, lambda0: f64, n: usize, seed: u64, timing: &ScanTiming) -> Lineshape {
    let reference = zero_shift_bins(shape, lambda0, n, derive_seed(seed, "odmr-reference", 0), timing);
    build_interpolation(&reference).unwrap()
}

/// Sample variance is consistent with `variance >= bound` at 3 standard
/// errors of a Gaussian sample variance.
fn not_below_bound(sample_var: f64, bound_var: f64, n: usize) -> bool {
    sample_var >= bound_var * (1.0 - 3.0 * (2.0 / (n as f64 - 1.0)).sqrt())
}

// 4
fn thermometry_sensitivity(seed: u64) -> Outcome {
    let t = Instant::now();
    let shape = Lineshape::default_double();
    let timing = ScanTiming::default();
    let kappa = -60.0;
    let template = reference_template(&shape, 10.0, 500, seed, &timing);
    let bins = zero_shift_bins(&shape, 10.0, 1500, seed, &timing);
    let series = fit_bins(&bins, &template, timing.bin, &ShiftFitOptions::default()).unwrap();
    let cal = KappaCalibration { kappa, sigma_kappa: 0.0, f0: 0.0, t_ref: 0.0 };
    let temps = series.temperatures(&cal).unwrap();
    let dt: Vec<f64> = temps.iter().map(|p| p.1).collect();
    let curve = allan_deviation(&dt, timing.bin, &octave_factors(dt.len())).unwrap();
    let allan = fit_white_noise(&curve, timing.bin, 60.0).unwrap();
    let grid = default_grid();
    let bound = crb(&shape, 10.0, &grid, CrbParams::AmplitudeAndShift).unwrap();
    let crb_s = crb_temperature_sensitivity(&bound, kappa, &timing).unwrap();

    // estimator variance against the bound at several photon budgets
    let mut mc_ok = true;
    let mut ratios = Vec::new();
    let mut check = |fits: &[f64], lambda0: f64| {
        let b = crb(&shape, lambda0, &grid, CrbParams::AmplitudeAndShift).unwrap();
        let bound_var = b.shift_sd_for(timing.scans_per_bin() as f64).powi(2);
        let v = std_dev(fits).powi(2);
        mc_ok &= not_below_bound(v, bound_var, fits.len());
        ratios.push(format!("Λ0={lambda0}: {:.3}", v / bound_var));
    };
    let dfs: Vec<f64> = series.fits.iter().filter(|f| f.converged).map(|f| f.df).collect();
    check(&dfs, 10.0);
    for (k, lambda0) in [5.0, 20.0].into_iter().enumerate() {
        let s = derive_seed(seed, "odmr-budget", k as u64);
        let tpl = reference_template(&shape, lambda0, 500, s, &timing);
        let b = zero_shift_bins(&shape, lambda0, 600, s, &timing);
        let f = fit_bins(&b, &tpl, timing.bin, &ShiftFitOptions::default()).unwrap();
        let d: Vec<f64> = f.fits.iter().filter(|f| f.converged).map(|f| f.df).collect();
        check(&d, lambda0);
    }
    let elapsed = t.elapsed();
    let mut artifact = Vec::new();
    io::write_temperature_series(&mut artifact, &temps).unwrap();
    Outcome {
        pass: within(allan.sensitivity, 2.3, 0.25)
            && within(crb_s, 2.1, 0.25)
            && mc_ok
            && elapsed < Duration::from_secs(600),
        detail: format!(
            "Allan {:.3} °C/√Hz (2.3 ± 25%, slope {:.2}), CRB {crb_s:.3} (2.1 ± 25%), var/CRB [{}], {elapsed:.1?}",
            allan.sensitivity,
            allan.slope,
            ratios.join(", ")
        ),
        artifact,
    }
}

// 5
fn kappa_calibration(seed: u64) -> Outcome {
    use nanosense_core::chip::{setpoint_series, TemperatureSchedule};
    let shape = Lineshape::default_double();
    let timing = ScanTiming::default();
    let kappa_true = -60.0;
    let hold = 900.0;
    let schedule = TemperatureSchedule::staircase(25.0, 4.0, 4, hold).unwrap();
    let temps = setpoint_series(&schedule, timing.bin, 5.0 * hold - timing.bin).unwrap();
    let shifts: Vec<f64> = temps.iter().map(|p| kappa_true * 1e3 * (p.1 - 25.0)).collect();
    let template = reference_template(&shape, 10.0, 500, seed, &timing);
    let bins = synthesize_series(&shape, 10.0, &default_grid(), &timing, &shifts, seed).unwrap();
    let series = fit_bins(&bins, &template, timing.bin, &ShiftFitOptions::default()).unwrap();
    let levels: Vec<KappaLevel> = (0..5)
        .map(|l| {
            // skip the two-minute settling at the start of each level
            let lo = l as f64 * hold + 120.0;
            let hi = (l + 1) as f64 * hold;
            KappaLevel {
                temperature_c: 25.0 + 4.0 * l as f64,
                shifts: series
                    .times
                    .iter()
                    .zip(&series.fits)
                    .filter(|(t, f)| f.converged && **t >= lo && **t < hi)
                    .map(|(_, f)| f.df)
                    .collect(),
            }
        })
        .collect();
    let cal = calibrate_kappa(&levels).unwrap();
    let z = (cal.kappa - kappa_true) / cal.sigma_kappa;
    Outcome {
        pass: z.abs() <= 2.0 && (0.1..=1.0).contains(&cal.sigma_kappa),
        detail: format!(
            "κ = {:.3} ± {:.3} kHz/°C (true -60, {z:+.2}σ; σ_κ of order 0.4)",
            cal.kappa, cal.sigma_kappa
        ),
        artifact: format!("{:?},{:?},{:?}", cal.kappa, cal.sigma_kappa, cal.f0).into_bytes(),
    }
}

// 6
fn two_parameter_advantage(seed: u64) -> Outcome {
    let shape = Lineshape::default_double();
    let timing = ScanTiming::default();
    let seed = derive_seed(seed, "two-parameter", 0);
    let reference = zero_shift_bins(&shape, 10.0, 500, derive_seed(seed, "odmr-reference", 0), &timing);
    let template = build_interpolation(&reference).unwrap();
    let global = fit_double_lorentzian(&OdmrScan::accumulate(&reference).unwrap(), &shape, 10.0).unwrap();
    let bins = zero_shift_bins(&shape, 10.0, 200, seed, &timing);
    let interp = fit_bins(&bins, &template, timing.bin, &ShiftFitOptions::default()).unwrap();
    let two: Vec<f64> = interp.fits.iter().filter(|f| f.converged).map(|f| f.df).collect();
    let seven_fits: Vec<_> = bins
        .par_iter()
        .map(|b| fit_double_lorentzian(b, &global.shape, global.lambda0).unwrap())
        .collect();
    let seven: Vec<f64> = seven_fits.iter().filter(|f| f.converged).map(|f| f.df).collect();
    let ratio = std_dev(&two) / std_dev(&seven);
    Outcome {
        pass: ratio < 0.8 && two.len() >= 190 && seven.len() >= 190,
        detail: format!(
            "δf spread {:.3} MHz (interpolation, {} fits) vs {:.3} MHz (7-parameter, {} fits): ratio {ratio:.3} (< 0.8)",
            std_dev(&two) / 1e6,
            two.len(),
            std_dev(&seven) / 1e6,
            seven.len()
        ),
        artifact: format!("{two:?}{seven:?}").into_bytes(),
    }
}

/// Time-domain MSD with a transition between two diffusive regimes.
fn kelvin_voigt_msd(t: f64) -> f64 {
    4.0 * 1e3 * t + 4.0 * 200.0 * (1.0 - (-t / 0.1).exp())
}

/// `∫ msd(t)·e^{-st} dt` by Simpson's rule in `u = ln t`.
fn laplace(msd_fn: fn(f64) -> f64, s: f64) -> f64 {
    let (lo, hi) = ((1e-12f64).ln(), (60.0 / s).ln());
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |u: f64| {
        let t = u.exp();
        msd_fn(t) * (-s * t).exp() * t
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

// 7
fn rheology_oracles(seed: u64) -> Outcome {
    let d = 1e3;
    let dt = 0.01;
    let n_traj = 200;
    let trajs = ensemble(n_traj, seed, |s| simulate_brownian(d, 1999, dt, s)).unwrap();
    let n = trajs[0].len();
    let lags = linear_lags(n / 20);
    let curves: Vec<MsdCurve> = trajs.par_iter().map(|t| msd(t, XY, &lags, &MsdOptions::default()).unwrap()).collect();

    // (a) per-trajectory slopes through the origin
    let slopes: Vec<f64> = curves
        .iter()
        .map(|c| {
            let sxy: f64 = c.taus.iter().zip(&c.msd).map(|(t, m)| t * m).sum();
            let sxx: f64 = c.taus.iter().map(|t| t * t).sum();
            sxy / sxx
        })
        .collect();
    let slope = mean(&slopes);
    let se = std_dev(&slopes) / (n_traj as f64).sqrt();
    let a_ok = (slope - 4.0 * d).abs() <= 3.0 * se;

    // (b) per-trajectory variance estimate vs ensemble variance
    let ens = ensemble_variance(&curves).unwrap();
    let ratios: Vec<f64> = (0..lags.len())
        .map(|i| mean(&curves.iter().map(|c| c.var[i]).collect::<Vec<_>>()) / ens.var[i])
        .collect();
    let (rmin, rmax) = ratios.iter().fold((f64::MAX, f64::MIN), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    let b_ok = rmin >= 0.8 && rmax <= 1.2;

    // (c) Mason against the numerical Laplace transform
    let taus: Vec<f64> = (0..=60).map(|i| 10f64.powf(-4.0 + 0.1 * i as f64)).collect();
    let smooth = MsdCurve {
        msd: taus.iter().map(|t| kelvin_voigt_msd(*t)).collect(),
        var: vec![0.0; taus.len()],
        lags: (1..=taus.len()).collect(),
        n_samples: vec![1; taus.len()],
        taus: taus.clone(),
        dims: 2,
        noise_floor_nm2: 100.0,
    };
    let (t_k, r_nm) = (298.15, 28.0);
    let g = complex_modulus(&smooth, t_k, r_nm).unwrap();
    let mut c_err: f64 = 0.0;
    for (f, g_abs) in g.freqs.iter().zip(&g.g_abs) {
        let tau = 1.0 / f;
        if !(10f64.powf(-1.5) - 1e-12..=10f64.powf(-0.5) + 1e-12).contains(&tau) {
            continue;
        }
        let s = 1.0 / tau;
        let oracle = thermal_energy(t_k) / (PI * r_nm * NM * s * laplace(kelvin_voigt_msd, s) * 1e-18);
        c_err = c_err.max((g_abs / oracle - 1.0).abs());
    }
    let c_ok = c_err <= 0.15;

    // (d) viscous input: exact line and simulated ensemble
    let exact = MsdCurve { msd: taus.iter().map(|t| 4.0 * d * t).collect(), ..smooth.clone() };
    let ge = complex_modulus(&exact, t_k, r_nm).unwrap();
    let exact_ratio = ge.g_prime.iter().zip(&ge.g_dprime).map(|(a, b)| a / b).fold(0.0f64, |m, r| m.max(r.abs()));
    let llags = log_lags(n / 20, 12);
    let log_curves: Vec<MsdCurve> = trajs.par_iter().map(|t| msd(t, XY, &llags, &MsdOptions::default()).unwrap()).collect();
    let mean_curve = ensemble_variance(&log_curves).unwrap();
    let gs = complex_modulus(&mean_curve, t_k, r_nm).unwrap();
    let sim_ratio = gs.g_prime.iter().zip(&gs.g_dprime).map(|(a, b)| a / b).fold(0.0f64, |m, r| m.max(r.abs()));
    let d_ok = exact_ratio < 0.05 && sim_ratio < 0.05;

    Outcome {
        pass: a_ok && b_ok && c_ok && d_ok,
        detail: format!(
            "(a) slope {:.1} vs 4D {:.0} ± 3×{:.1} {}; (b) variance ratio [{rmin:.3}, {rmax:.3}] {}; (c) Mason/Laplace max dev {:.1}% {}; (d) G'/G'' exact {exact_ratio:.1e}, simulated {sim_ratio:.3} {}",
            slope,
            4.0 * d,
            se,
            mark(a_ok),
            mark(b_ok),
            100.0 * c_err,
            mark(c_ok),
            mark(d_ok)
        ),
        artifact: format!("{slopes:?}{ratios:?}{:?}", gs.g_abs).into_bytes(),
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

// 8
fn radius_fit(seed: u64) -> Outcome {
    let medium = ViscousMediumModel::glycerol(SlopeSign::Negative);
    let cfg = TrackerConfig::default();
    let temps = [22.0, 25.0, 28.0, 31.0, 34.0, 37.0];
    let points: Vec<TemperatureDiffusionPoint> = temps
        .par_iter()
        .enumerate()
        .map(|(i, &tc)| {
            let eta = viscosity_at(&medium, tc).unwrap();
            let d = stokes_einstein_d(celsius_to_kelvin(tc), 28.0, eta).unwrap();
            let truth = simulate_brownian(d, 120_000, 1e-3, derive_seed(seed, "medium", i as u64)).unwrap();
            let out = track(&truth, &cfg, &TrackOptions::new(1e6, derive_seed(seed, "tracker-photons", i as u64))).unwrap();
            let c = msd(&out.estimate, XY, &linear_lags(20), &MsdOptions::default()).unwrap();
            let f = fit_diffusion(&c, DiffusionFitMode::WithOffset { tau_min: 0.0, tau_max: f64::INFINITY }).unwrap();
            TemperatureDiffusionPoint { temperature_c: tc, d: f.d, sigma: f.sigma }
        })
        .collect();
    let r = fit_hydrodynamic_radius(&points, &medium).unwrap();
    Outcome {
        pass: (r.r_nm - 28.0).abs() <= 1.0,
        detail: format!(
            "r = {:.2} ± {:.2} nm from 6 tracked temperatures (28 ± 1), χ²_red {:.2}",
            r.r_nm, r.sigma_nm, r.chi2_reduced
        ),
        artifact: format!("{points:?}{:?}", r.r_nm).into_bytes(),
    }
}

// 9
fn gamma_statistics(seed: u64) -> Outcome {
    let null = gamma_null(75, 2, 0.95).unwrap();
    let n_windows = 100_000u64;
    let chunk = 1000u64;
    let gammas: Vec<f64> = (0..n_windows / chunk)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, "gamma-mc", c);
            (0..chunk)
                .map(|_| {
                    let mut p = [0.0f64; 3];
                    let mut pts = Vec::with_capacity(76);
                    pts.push(p);
                    for _ in 0..75 {
                        p[0] += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                        p[1] += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                        pts.push(p);
                    }
                    directionality_ratio(&pts, 2).unwrap().unwrap()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let fp = gammas.iter().filter(|g| **g > null.critical_gamma).count() as f64 / gammas.len() as f64;
    let bins = 50;
    let width = 1.0 / bins as f64;
    let mut hist = vec![0.0; bins];
    for g in &gammas {
        hist[((g / width) as usize).min(bins - 1)] += 1.0;
    }
    let peak = null.pdf.iter().cloned().fold(0.0, f64::max);
    let sup = hist
        .iter()
        .enumerate()
        .map(|(i, c)| (c / (gammas.len() as f64 * width) - null.pdf_at((i as f64 + 0.5) * width)).abs())
        .fold(0.0, f64::max);
    let crit_ok = (null.critical_gamma - 0.228).abs() <= 0.005;
    let fp_ok = (0.04..=0.06).contains(&fp);
    let sup_ok = sup / peak < 0.05;
    Outcome {
        pass: crit_ok && fp_ok && sup_ok,
        detail: format!(
            "critical γ {:.4} (0.228 ± 0.005) {}; false positives {:.2}% over 1e5 windows {}; sup|f - hist| {:.2}% of peak {}",
            null.critical_gamma,
            mark(crit_ok),
            100.0 * fp,
            mark(fp_ok),
            100.0 * sup / peak,
            mark(sup_ok)
        ),
        artifact: format!("{fp:?}{hist:?}").into_bytes(),
    }
}

// 10
fn class_separation(seed: u64) -> Outcome {
    let null = gamma_null(75, 2, 0.95).unwrap();
    let dirs = [[800.0, 600.0, 0.0], [-600.0, 800.0, 0.0], [0.0, -1000.0, 0.0], [1000.0, 0.0, 0.0]];
    let per_traj: Vec<(Vec<f64>, Vec<f64>, Vec<u8>)> = (0..5u64)
        .into_par_iter()
        .map(|k| {
            let base = simulate_brownian(5e3, 20_000, 9.6e-3, derive_seed(seed, "medium", k)).unwrap();
            let specs: Vec<DirectedSegmentSpec> = (0..10)
                .map(|j| DirectedSegmentSpec { start: 1000 + j * 1800, duration: 150, velocity: dirs[j % 4] })
                .collect();
            let traj = inject_directed(&base, &specs).unwrap();
            let s = segment(&traj, &null, &SegmentOptions::default()).unwrap();
            let c = class_exponents(&traj, &s.labels, 2).unwrap();
            let mut bytes = Vec::new();
            io::write_labels(&mut bytes, &s.labels).unwrap();
            let get = |cl| c.get(cl).map(|x| x.alphas.clone()).unwrap_or_default();
            (get(MotionClass::NonDirected), get(MotionClass::Directed), bytes)
        })
        .collect();
    let nd: Vec<f64> = per_traj.iter().flat_map(|p| p.0.clone()).collect();
    let dir: Vec<f64> = per_traj.iter().flat_map(|p| p.1.clone()).collect();
    let (m_nd, m_dir) = (mean(&nd), mean(&dir));

    let model = ViscoelasticModel { alpha: 0.3, k_alpha: 1e3 };
    let fbm: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let t = simulate_viscoelastic(&model, 2000, 9.6e-3, derive_seed(seed, "fbm", k)).unwrap();
            let c = msd(&t, XY, &linear_lags(50), &MsdOptions::default()).unwrap();
            anomalous_exponent(&c, 0.0, f64::INFINITY).unwrap().alpha
        })
        .collect();
    let m_fbm = mean(&fbm);
    let nd_ok = (0.9..=1.1).contains(&m_nd);
    let dir_ok = m_dir > 1.5;
    let fbm_ok = (m_fbm - 0.3).abs() <= 0.1;
    let mut artifact: Vec<u8> = per_traj.iter().flat_map(|p| p.2.clone()).collect();
    artifact.extend(format!("{fbm:?}").bytes());
    Outcome {
        pass: nd_ok && dir_ok && fbm_ok,
        detail: format!(
            "non-directed α {m_nd:.3} ± {:.3} ({} segs, [0.9, 1.1]) {}; directed α {m_dir:.3} ± {:.3} ({} segs, > 1.5) {}; fBm α {m_fbm:.3} (0.3 ± 0.1) {}",
            std_dev(&nd),
            nd.len(),
            mark(nd_ok),
            std_dev(&dir),
            dir.len(),
            mark(dir_ok),
            mark(fbm_ok)
        ),
        artifact,
    }
}

// 11
fn force_extraction(seed: u64) -> Outcome {
    let (eta, r_nm, t_k) = (0.5, 28.0, celsius_to_kelvin(25.0));
    let d = stokes_einstein_d(t_k, r_nm, eta).unwrap();
    let dt = 1e-3;
    let n = 600_000;
    let thermal = simulate_brownian(d, n, dt, derive_seed(seed, "medium", 0)).unwrap();
    let drag = 6.0 * PI * eta * r_nm * NM;
    let band = (2.0 * PI * 2.0, 2.0 * PI * 50.0);
    let opts = PsdOptions::default();

    let spectrum = |traj: &Trajectory| {
        let p = psd(traj, XY, &opts).unwrap();
        let freqs: Vec<f64> = p.freqs.iter().copied().filter(|f| *f > 0.0).collect();
        let g = ComplexModulus::viscous(freqs, eta).unwrap();
        external_force_spectrum(&p, &g, r_nm, t_k).unwrap()
    };
    let eq = spectrum(&thermal);
    let eq_ratio = eq.band_ratio(band.0, band.1);

    // white force with one-sided density equal to the thermal level,
    // integrated through the viscous drag
    let s_force = 4.0 * thermal_energy(t_k) * drag;
    let step_sd = (s_force * dt / 2.0).sqrt() / drag / NM;
    let mut rng = substream(seed, "force-drive", 0);
    let mut offset = [0.0f64; 3];
    let mut driven_pts = Vec::with_capacity(thermal.len());
    for (i, p) in thermal.points.iter().enumerate() {
        if i > 0 {
            for o in offset.iter_mut().take(2) {
                *o += step_sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            }
        }
        driven_pts.push([p[0] + offset[0], p[1] + offset[1], p[2]]);
    }
    let driven = Trajectory::new(dt, 0.0, driven_pts).unwrap();
    let fs = spectrum(&driven);
    let recovered: Vec<f64> = fs
        .omegas
        .iter()
        .zip(&fs.external)
        .filter(|(w, _)| **w >= band.0 && **w <= band.1)
        .map(|(_, e)| e / s_force)
        .collect();
    let level = mean(&recovered);
    Outcome {
        pass: eq_ratio < 0.1 && within(level, 1.0, 0.25),
        detail: format!(
            "equilibrium |external|/thermal {eq_ratio:.3} (< 0.1); injected drive recovered at {:.1}% of its level (100 ± 25%)",
            100.0 * level
        ),
        artifact: format!("{:?}{:?}", eq.external, fs.external).into_bytes(),
    }
}

// 12
fn chip_invariants(_seed: u64) -> Outcome {
    let cal = RtdCalibration::default();
    let mut rtd_err: f64 = 0.0;
    for i in 0..=6000 {
        let t = i as f64 * 0.01;
        rtd_err = rtd_err.max((rtd_temperature(rtd_resistance(t, &cal).unwrap(), &cal).unwrap() - t).abs());
    }
    let rtd_ok = rtd_err <= 1e-9;

    let base = DutyCycleSchedule::default();
    let variants = [
        base,
        DutyCycleSchedule { heater_on: 0.0, ..base },
        DutyCycleSchedule { heater_on: 0.01, buffer: 0.002, switch_edge: 0.0001, ..base },
        DutyCycleSchedule { period: 0.1, mw_on: 0.05, heater_on: 0.03, buffer: 0.01, switch_edge: 0.001 },
        DutyCycleSchedule { mw_on: 0.18, heater_on: 0.01, buffer: 0.005, ..base },
    ];
    let mut overlap_ok = true;
    let mut artifact = Vec::new();
    for d in &variants {
        let ev = schedule_timeline(d, 2.0).unwrap();
        if let Some(gap) = min_mw_heater_gap(&ev, d.switch_edge) {
            overlap_ok &= gap >= d.buffer - d.switch_edge - 1e-12 && gap > 0.0;
        }
        io::write_timeline(&mut artifact, &ev).unwrap();
    }
    let ev = schedule_timeline(&base, 0.2).unwrap();
    let iv = intervals(&ev);
    let ms = |ticks: u64| ticks as f64 * 10e-6 * 1e3;
    let mw: Vec<(f64, f64)> = iv.iter().filter(|i| i.0 == Channel::Mw).map(|i| (ms(i.1), ms(i.2))).collect();
    let heater: Vec<(f64, f64)> = iv.iter().filter(|i| i.0 == Channel::Heater).map(|i| (ms(i.1), ms(i.2))).collect();
    let close = |a: &[(f64, f64)], b: (f64, f64)| a.len() == 1 && (a[0].0 - b.0).abs() < 1e-9 && (a[0].1 - b.1).abs() < 1e-9;
    let timing_ok = close(&mw, (0.0, 160.0)) && close(&heater, (165.0, 195.0));
    let rejected = schedule_timeline(&DutyCycleSchedule { heater_on: 0.04, ..base }, 1.0).is_err();
    Outcome {
        pass: rtd_ok && overlap_ok && timing_ok && rejected,
        detail: format!(
            "RTD round trip max {rtd_err:.1e} °C {}; non-overlap on {} schedules {}; default MW {mw:?} ms, heater {heater:?} ms {}; 40 ms heater rejected {}",
            mark(rtd_ok),
            variants.len(),
            mark(overlap_ok),
            mark(timing_ok),
            mark(rejected)
        ),
        artifact,
    }
}

fn run_guarded(f: Check, seed: u64) -> Outcome {
    match catch_unwind(AssertUnwindSafe(|| f(seed))) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome { pass: false, detail: format!("panicked: {msg}"), artifact: Vec::new() }
        }
    }
}

fn main() {
    let criteria: [(u32, &str, Check); 12] = [
        (1, "tracking shot-noise law", tracking_shot_noise_law),
        (2, "dynamic tracking recovery", dynamic_tracking_recovery),
        (3, "static resolution anchor", static_resolution_anchor),
        (4, "thermometry sensitivity", thermometry_sensitivity),
        (5, "kappa calibration", kappa_calibration),
        (6, "two-parameter advantage", two_parameter_advantage),
        (7, "rheology oracles", rheology_oracles),
        (8, "radius fit", radius_fit),
        (9, "gamma statistics", gamma_statistics),
        (10, "class separation", class_separation),
        (11, "force extraction", force_extraction),
        (12, "chip", chip_invariants),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);

    let mut failures = 0;
    let mut first_pass = Vec::new();
    for (id, name, f) in criteria.iter().filter(|c| wanted(c.0)) {
        let t = Instant::now();
        let o = run_guarded(*f, SEED);
        println!("{} [{id:>2}] {name}: {} ({:.1?})", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed());
        failures += usize::from(!o.pass);
        first_pass.push((*id, o.artifact));
    }

    if wanted(13) {
        let t = Instant::now();
        let mut differing = Vec::new();
        for (id, artifact) in &first_pass {
            let f = criteria.iter().find(|c| c.0 == *id).expect("known id").2;
            let again = run_guarded(f, SEED).artifact;
            if again.is_empty() || again != *artifact {
                differing.push(*id);
            }
        }
        let pass = differing.is_empty() && !first_pass.is_empty();
        println!(
            "{} [13] reproducibility: {} criteria re-run with seed {SEED}, differing: {differing:?} ({:.1?})",
            if pass { "PASS" } else { "FAIL" },
            first_pass.len(),
            t.elapsed()
        );
        failures += usize::from(!pass);
    }
    println!("acceptance: {failures} failing");
    if failures > 0 {
        std::process::exit(1);
    }
}
