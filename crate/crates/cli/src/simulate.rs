use nanosense_core::chip::{min_mw_heater_gap, schedule_timeline, setpoint_series};
use nanosense_core::io;
use nanosense_core::media::{
    inject_directed, simulate_brownian, simulate_viscoelastic, stokes_einstein_d, viscosity_at, Trajectory,
    ViscoelasticModel,
};
use nanosense_core::odmr::{
    build_interpolation, fit_bins, synthesize_series, KappaCalibration, ShiftFitOptions,
};
use nanosense_core::rng::derive_seed;
use nanosense_core::tracker::{track, TrackOptions};
use nanosense_core::units::celsius_to_kelvin;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, MediumSpec, MotionSpec, OdmrSpec, ScheduleSpec, TrackerSpec};
use crate::error::CliError;
use crate::output::Outputs;

/// Checks every section before anything is generated.
fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.medium.is_none() && cfg.odmr.is_none() && cfg.schedule.is_none() {
        return Err(CliError::Config(
            "nothing to simulate: config needs a medium, odmr or schedule section".into(),
        ));
    }
    if cfg.tracker.is_some() && cfg.medium.is_none() {
        return Err(CliError::Config("tracker section requires a medium section".into()));
    }
    if let Some(m) = &cfg.medium {
        if !(m.dt_s > 0.0) || !(m.duration_s > 0.0) || m.n_steps() == 0 {
            return Err(CliError::Config("medium dt_s and duration_s must be > 0 with duration >= dt".into()));
        }
        match &m.motion {
            MotionSpec::Brownian { d_nm2_per_s } if !(*d_nm2_per_s >= 0.0) => {
                return Err(CliError::Config("d_nm2_per_s must be >= 0".into()));
            }
            MotionSpec::Viscous { viscosity, radius_nm, temperatures_c } => {
                let model = viscosity.model()?;
                if temperatures_c.is_empty() {
                    return Err(CliError::Config("temperatures_c must list at least one temperature".into()));
                }
                for &t in temperatures_c {
                    stokes_einstein_d(celsius_to_kelvin(t), *radius_nm, viscosity_at(&model, t)?)?;
                }
            }
            MotionSpec::Viscoelastic { alpha, k_alpha } => {
                ViscoelasticModel { alpha: *alpha, k_alpha: *k_alpha }.validate()?;
            }
            _ => {}
        }
    }
    if let Some(t) = &cfg.tracker {
        t.geometry.validate()?;
        if !(t.brightness_cps > 0.0) {
            return Err(CliError::Config("brightness_cps must be > 0".into()));
        }
    }
    if let Some(s) = &cfg.schedule {
        s.duty.validate()?;
        if !(s.timeline_s > 0.0) || !(s.setpoint_dt_s > 0.0) {
            return Err(CliError::Config("timeline_s and setpoint_dt_s must be > 0".into()));
        }
        if let Some(t) = &s.temperature {
            t.validate()?;
        }
    }
    if let Some(o) = &cfg.odmr {
        o.lineshape.validate()?;
        o.timing.validate()?;
        o.grid()?;
        if !(o.lambda0 > 0.0) {
            return Err(CliError::Config("odmr lambda0 must be > 0".into()));
        }
        if !(o.kappa_khz_per_c != 0.0 && o.kappa_khz_per_c.is_finite()) {
            return Err(CliError::Config("odmr kappa_khz_per_c must be finite and non-zero".into()));
        }
        if o.reference_bins < 1 {
            return Err(CliError::Config("odmr reference_bins must be >= 1".into()));
        }
        let duration = o.duration_s.ok_or_else(|| CliError::Config("odmr duration_s is required".into()))?;
        if !(duration >= o.timing.bin) {
            return Err(CliError::Config("odmr duration_s must cover at least one bin".into()));
        }
        if let Some(s) = &cfg.schedule {
            if s.duty != o.timing.duty {
                return Err(CliError::Config(
                    "odmr timing.duty differs from schedule.duty; give the duty cycle once, in schedule".into(),
                ));
            }
        }
    }
    Ok(())
}

fn truths(m: &MediumSpec, seed: u64) -> Result<Vec<Trajectory>, CliError> {
    let n = m.n_steps();
    let mut out = Vec::new();
    match &m.motion {
        MotionSpec::Brownian { d_nm2_per_s } => {
            out.push(simulate_brownian(*d_nm2_per_s, n, m.dt_s, derive_seed(seed, "medium", 0))?);
        }
        MotionSpec::Viscoelastic { alpha, k_alpha } => {
            let model = ViscoelasticModel { alpha: *alpha, k_alpha: *k_alpha };
            out.push(simulate_viscoelastic(&model, n, m.dt_s, derive_seed(seed, "medium", 0))?);
        }
        MotionSpec::Viscous { viscosity, radius_nm, temperatures_c } => {
            let model = viscosity.model()?;
            for (i, &t) in temperatures_c.iter().enumerate() {
                let eta = viscosity_at(&model, t)?;
                let d = stokes_einstein_d(celsius_to_kelvin(t), *radius_nm, eta)?;
                let mut traj = simulate_brownian(d, n, m.dt_s, derive_seed(seed, "medium", i as u64))?;
                traj.set_meta("temperature_c", t);
                traj.set_meta("radius_nm", radius_nm);
                traj.set_meta("eta_pa_s", eta);
                out.push(traj);
            }
        }
    }
    if !m.directed.is_empty() {
        out = out
            .iter()
            .map(|t| {
                let mut d = inject_directed(t, &m.directed)?;
                d.set_meta("directed_segments", m.directed.len());
                Ok(d)
            })
            .collect::<Result<_, nanosense_core::Error>>()?;
    }
    Ok(out)
}

fn suffix(i: usize, n: usize) -> String {
    if n == 1 {
        String::new()
    } else {
        format!("_{i:02}")
    }
}

fn run_tracker(truths: &[Trajectory], spec: &TrackerSpec, seed: u64, out: &mut Outputs) -> Result<Vec<Value>, CliError> {
    let mut summary = Vec::new();
    for (i, truth) in truths.iter().enumerate() {
        let opts = TrackOptions::new(spec.brightness_cps, derive_seed(seed, "tracker-photons", i as u64));
        let res = track(truth, &spec.geometry, &opts)?;
        let mut est = res.estimate;
        for (k, v) in &truth.meta {
            est.meta.entry(k.clone()).or_insert_with(|| v.clone());
        }
        est.set_meta("brightness_cps", spec.brightness_cps);
        let sfx = suffix(i, truths.len());
        out.csv(format!("tracked{sfx}.csv"), |w| io::write_trajectory(w, &est))?;
        out.csv(format!("diagnostics{sfx}.csv"), |w| io::write_diagnostics(w, &res.diagnostics))?;
        summary.push(json!({
            "updates": est.len(),
            "rms_error_nm": res.diagnostics.rms_error(),
            "mean_photons_per_update": res.diagnostics.mean_photons,
            "lock_lost_at_update": res.diagnostics.lock_lost_at,
        }));
    }
    Ok(summary)
}

/// Temperature offsets from the first setpoint, averaged over each bin.
fn bin_temperatures(schedule: Option<&ScheduleSpec>, bin: f64, n_bins: usize) -> Result<Vec<f64>, CliError> {
    let Some(temp) = schedule.and_then(|s| s.temperature.as_ref()) else {
        return Ok(vec![0.0; n_bins]);
    };
    let series = setpoint_series(temp, bin, n_bins as f64 * bin)?;
    let base = temp.steps[0].1;
    Ok((0..n_bins)
        .map(|k| 0.5 * (series[k].1 + series[(k + 1).min(series.len() - 1)].1) - base)
        .collect())
}

fn run_odmr(spec: &OdmrSpec, schedule: Option<&ScheduleSpec>, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let grid = spec.grid()?;
    let bin = spec.timing.bin;
    let duration = spec.duration_s.expect("validated");
    let n_bins = (duration / bin + 1e-9).floor() as usize;
    let true_dt = bin_temperatures(schedule, bin, n_bins)?;
    let shifts: Vec<f64> = true_dt.iter().map(|t| spec.kappa_khz_per_c * 1e3 * t).collect();
    let reference = synthesize_series(
        &spec.lineshape,
        spec.lambda0,
        &grid,
        &spec.timing,
        &vec![0.0; spec.reference_bins],
        derive_seed(seed, "odmr-reference", 0),
    )?;
    let template = build_interpolation(&reference)?;
    let bins = synthesize_series(&spec.lineshape, spec.lambda0, &grid, &spec.timing, &shifts, seed)?;
    let series = fit_bins(&bins, &template, bin, &ShiftFitOptions::default())?;
    let t_ref = schedule
        .and_then(|s| s.temperature.as_ref())
        .map_or(0.0, |t| t.steps[0].1);
    let cal = KappaCalibration {
        kappa: spec.kappa_khz_per_c,
        sigma_kappa: 0.0,
        f0: 0.0,
        t_ref,
    };
    let temps = series.temperatures(&cal)?;
    out.csv("temperature.csv", |w| io::write_temperature_series(w, &temps))?;
    if spec.write_spectra {
        out.csv("odmr.csv", |w| io::write_odmr(w, &bins))?;
    }
    let residual: Vec<f64> = series
        .times
        .iter()
        .zip(&series.fits)
        .zip(&true_dt)
        .filter(|((_, f), _)| f.converged)
        .map(|((_, f), t)| f.df / (spec.kappa_khz_per_c * 1e3) - t)
        .collect();
    Ok(json!({
        "bins": bins.len(),
        "converged_bins": series.converged_count(),
        "shifted_out_bins": bins.iter().filter(|b| b.shifted_out).count(),
        "reference_bins": spec.reference_bins,
        "rms_temperature_error_c": (residual.iter().map(|r| r * r).sum::<f64>() / residual.len().max(1) as f64).sqrt(),
    }))
}

fn run_schedule(s: &ScheduleSpec, duration: f64, out: &mut Outputs) -> Result<Value, CliError> {
    let events = schedule_timeline(&s.duty, s.timeline_s)?;
    let gap = min_mw_heater_gap(&events, s.duty.switch_edge);
    if let Some(g) = gap {
        if g < s.duty.buffer - s.duty.switch_edge - 1e-12 {
            return Err(CliError::Runtime(format!("timeline gap {g} s violates the buffer")));
        }
    }
    out.csv("timeline.csv", |w| io::write_timeline(w, &events))?;
    if let Some(t) = &s.temperature {
        let series = setpoint_series(t, s.setpoint_dt_s, duration)?;
        out.csv("setpoints.csv", |w| io::write_setpoints(w, &series))?;
    }
    Ok(json!({
        "timeline_events": events.len(),
        "min_mw_heater_gap_s": gap,
        "duty_factor": s.duty.duty_factor(),
    }))
}

pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<(Outputs, Value), CliError> {
    validate(cfg)?;
    let mut out = Outputs::default();
    let mut summary = serde_json::Map::new();
    summary.insert("seed".into(), json!(seed));
    if let Some(m) = &cfg.medium {
        let truths = truths(m, seed)?;
        for (i, t) in truths.iter().enumerate() {
            out.csv(format!("truth{}.csv", suffix(i, truths.len())), |w| io::write_trajectory(w, t))?;
        }
        summary.insert("trajectories".into(), json!(truths.len()));
        if let Some(spec) = &cfg.tracker {
            summary.insert("tracking".into(), Value::Array(run_tracker(&truths, spec, seed, &mut out)?));
        }
    }
    if let Some(o) = &cfg.odmr {
        summary.insert("odmr".into(), run_odmr(o, cfg.schedule.as_ref(), seed, &mut out)?);
    }
    if let Some(s) = &cfg.schedule {
        let duration = cfg
            .odmr
            .as_ref()
            .and_then(|o| o.duration_s)
            .or(cfg.medium.as_ref().map(|m| m.duration_s))
            .or(s.temperature.as_ref().map(|t| t.steps.last().expect("validated").0 + 10.0 * t.tau))
            .unwrap_or(s.timeline_s);
        summary.insert("schedule".into(), run_schedule(s, duration, &mut out)?);
    }
    summary.insert("files".into(), json!(out.names().collect::<Vec<_>>()));
    Ok((out, Value::Object(summary)))
}
