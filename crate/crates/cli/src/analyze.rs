use std::collections::BTreeSet;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nanosense_core::io;
use nanosense_core::media::Trajectory;
use nanosense_core::odmr::{
    allan_deviation, build_interpolation, calibrate_kappa, fit_bins, fit_white_noise, octave_factors,
    KappaCalibration, KappaLevel, OdmrScan, ScanTiming, ShiftFitOptions,
};
use nanosense_core::rheology::{
    anomalous_exponent, complex_modulus, external_force_spectrum, fit_diffusion, fit_hydrodynamic_radius,
    linear_lags, log_lags, msd, psd, AxisSet, ComplexModulus, MsdOptions, PsdOptions,
    TemperatureDiffusionPoint,
};
use nanosense_core::segmentation::{class_exponents, gamma_null, segment, MotionClass, SegmentOptions};
use nanosense_core::units::celsius_to_kelvin;
use serde_json::{json, Value};

use crate::config::{AnalysisSpec, OdmrAnalysisSpec};
use crate::error::{in_file, CliError};
use crate::output::Outputs;

const DEFAULT_TEMPERATURE_C: f64 = 25.0;

enum Input {
    Trajectory(Trajectory),
    Odmr(Vec<OdmrScan>),
}

fn load(path: &Path) -> Result<Input, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    let reader = BufReader::new(text.as_bytes());
    if header.contains("x_nm") {
        io::read_trajectory(reader).map(Input::Trajectory).map_err(|e| in_file(path, e))
    } else if header.contains("counts") {
        io::read_odmr(reader).map(Input::Odmr).map_err(|e| in_file(path, e))
    } else if header.is_empty() {
        Err(CliError::Config(format!("{}: file is empty", path.display())))
    } else {
        Err(CliError::Config(format!("{}: unrecognised header `{header}`", path.display())))
    }
}

fn stems(paths: &[PathBuf]) -> Vec<String> {
    let mut used = BTreeSet::new();
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let base = p.file_stem().map_or_else(|| format!("input{i}"), |s| s.to_string_lossy().into_owned());
            let name = if used.contains(&base) { format!("{base}_{i}") } else { base };
            used.insert(name.clone());
            name
        })
        .collect()
}

fn validate(spec: &AnalysisSpec) -> Result<AxisSet, CliError> {
    let axes = AxisSet::parse(&spec.axes)?;
    if spec.max_lag == 0 {
        return Err(CliError::Config("max_lag must be >= 1".into()));
    }
    if let Some(r) = spec.radius_nm {
        if !(r > 0.0) {
            return Err(CliError::Config("radius_nm must be > 0".into()));
        }
    }
    if let Some(v) = &spec.viscosity {
        v.model()?;
    }
    if !(spec.psd_segment_s > 0.0) {
        return Err(CliError::Config("psd_segment_s must be > 0".into()));
    }
    if let Some(s) = &spec.segmentation {
        gamma_null(s.window, s.dims, s.confidence)?;
    }
    if spec.force.is_some() && spec.radius_nm.is_none() {
        return Err(CliError::Config("force analysis needs analysis.radius_nm".into()));
    }
    Ok(axes)
}

struct TrajectoryResult {
    summary: Value,
    point: Option<TemperatureDiffusionPoint>,
}

fn value_sigma(v: f64, s: f64) -> Value {
    json!({ "value": v, "sigma": s })
}

fn analyze_trajectory(
    stem: &str,
    traj: &Trajectory,
    spec: &AnalysisSpec,
    axes: AxisSet,
    out: &mut Outputs,
) -> Result<TrajectoryResult, CliError> {
    traj.require_analysable()?;
    let n = traj.len();
    let max_lag = spec.max_lag.min(n - 1);
    let lags = match spec.log_lags {
        Some(k) => log_lags(max_lag, k),
        None => linear_lags(max_lag),
    };
    let opts = MsdOptions {
        estimator: spec.estimator,
        noise_floor_nm2: spec.noise_floor_nm2,
    };
    let curve = msd(traj, axes, &lags, &opts)?;
    out.csv(format!("{stem}_msd.csv"), |w| io::write_msd(w, &curve))?;

    let mut s = serde_json::Map::new();
    s.insert("samples".into(), json!(n));
    let fit = fit_diffusion(&curve, spec.fit.mode())?;
    s.insert(
        "diffusion_nm2_per_s".into(),
        json!({ "value": fit.d, "sigma": fit.sigma, "below_floor": fit.below_floor }),
    );
    let (lo, hi) = spec.exponent_range_s.unwrap_or((0.0, f64::INFINITY));
    match anomalous_exponent(&curve, lo, hi) {
        Ok(a) => s.insert("alpha".into(), value_sigma(a.alpha, a.sigma)),
        Err(e) => s.insert("alpha".into(), json!({ "error": e.to_string() })),
    };

    let (temperature, source) = match traj.meta_f64("temperature_c") {
        Some(t) => (t, "metadata"),
        None => match spec.temperature_c {
            Some(t) => (t, "config"),
            None => (DEFAULT_TEMPERATURE_C, "default"),
        },
    };
    s.insert("temperature_c".into(), json!({ "value": temperature, "source": source }));
    let t_k = celsius_to_kelvin(temperature);

    let modulus = match spec.radius_nm {
        Some(r) => {
            let g = complex_modulus(&curve, t_k, r)?;
            out.csv(format!("{stem}_modulus.csv"), |w| io::write_modulus(w, &g))?;
            s.insert("modulus_flagged_points".into(), json!(g.flagged.iter().filter(|f| **f).count()));
            Some(g)
        }
        None => None,
    };

    let psd_opts = PsdOptions { segment_s: spec.psd_segment_s };
    match psd(traj, axes, &psd_opts) {
        Ok(p) => {
            out.csv(format!("{stem}_psd.csv"), |w| io::write_psd(w, &p))?;
            if let (Some(f), Some(r), Some(g)) = (&spec.force, spec.radius_nm, &modulus) {
                let freqs: Vec<f64> = p.freqs.iter().copied().filter(|f| *f > 0.0).collect();
                let reference = match f.eta_pa_s {
                    Some(eta) => ComplexModulus::viscous(freqs, eta)?,
                    None => g.clone(),
                };
                let fs = external_force_spectrum(&p, &reference, r, t_k)?;
                out.csv(format!("{stem}_force.csv"), |w| io::write_force(w, &fs))?;
                let (lo, hi) = f.band_hz.unwrap_or((0.0, f64::INFINITY));
                let two_pi = 2.0 * std::f64::consts::PI;
                s.insert(
                    "force".into(),
                    json!({
                        "modulus": if f.eta_pa_s.is_some() { "viscous" } else { "mason" },
                        "band_ratio_external_over_thermal": fs.band_ratio(two_pi * lo, two_pi * hi),
                        "clipped_points": fs.clipped.iter().filter(|c| **c).count(),
                    }),
                );
            }
        }
        Err(e @ nanosense_core::Error::NotEnoughData(_)) => {
            s.insert("psd".into(), json!({ "skipped": e.to_string() }));
        }
        Err(e) => return Err(e.into()),
    }

    if let Some(seg) = &spec.segmentation {
        let null = gamma_null(seg.window, seg.dims, seg.confidence)?;
        let opts = SegmentOptions {
            window: seg.window,
            min_length_nm: seg.min_length_nm,
            fit_alpha: true,
        };
        let res = segment(traj, &null, &opts)?;
        out.csv(format!("{stem}_labels.csv"), |w| io::write_labels(w, &res.labels))?;
        let classes = class_exponents(traj, &res.labels, seg.dims)?;
        let mut c = serde_json::Map::new();
        for class in [MotionClass::NonDirected, MotionClass::Directed] {
            let count = res.labels.iter().filter(|l| l.class == class).count();
            let alpha = classes.get(class).map(|cs| json!({ "mean": cs.mean, "sd": cs.sd, "segments": cs.alphas.len() }));
            c.insert(class.as_str().into(), json!({ "segments": count, "alpha": alpha }));
        }
        c.insert("critical_gamma".into(), json!(null.critical_gamma));
        c.insert("supra_fraction".into(), json!(res.supra_fraction));
        c.insert("undefined_windows".into(), json!(res.undefined_windows));
        c.insert("notices".into(), json!(classes.notices));
        s.insert("segmentation".into(), Value::Object(c));
    }

    let point = (source == "metadata").then_some(TemperatureDiffusionPoint {
        temperature_c: temperature,
        d: fit.d,
        sigma: fit.sigma,
    });
    Ok(TrajectoryResult {
        summary: Value::Object(s),
        point,
    })
}

fn analyze_odmr(stem: &str, scans: &[OdmrScan], spec: &OdmrAnalysisSpec, out: &mut Outputs) -> Result<Value, CliError> {
    let bin = spec.bin_s.unwrap_or(ScanTiming::default().bin);
    let n_template = spec.template_bins.unwrap_or(scans.len()).clamp(1, scans.len());
    let template = build_interpolation(&scans[..n_template])?;
    let series = fit_bins(scans, &template, bin, &ShiftFitOptions::default())?;
    let mut s = serde_json::Map::new();
    s.insert("bins".into(), json!(scans.len()));
    s.insert("converged_bins".into(), json!(series.converged_count()));

    let cal = if spec.levels.is_empty() {
        KappaCalibration {
            kappa: spec.kappa_khz_per_c,
            sigma_kappa: 0.0,
            f0: 0.0,
            t_ref: 0.0,
        }
    } else {
        let levels: Vec<KappaLevel> = spec
            .levels
            .iter()
            .map(|l| KappaLevel {
                temperature_c: l.temperature_c,
                shifts: series
                    .times
                    .iter()
                    .zip(&series.fits)
                    .filter(|(t, f)| f.converged && **t >= l.start_s && **t < l.end_s)
                    .map(|(_, f)| f.df)
                    .collect(),
            })
            .collect();
        let cal = calibrate_kappa(&levels)?;
        s.insert("kappa_khz_per_c".into(), value_sigma(cal.kappa, cal.sigma_kappa));
        cal
    };
    let temps = series.temperatures(&cal)?;
    out.csv(format!("{stem}_temperature.csv"), |w| io::write_temperature_series(w, &temps))?;

    let dt: Vec<f64> = temps.iter().map(|p| p.1).collect();
    let factors = octave_factors(dt.len());
    if factors.is_empty() {
        s.insert("allan".into(), json!({ "skipped": "fewer than 3 converged bins" }));
    } else {
        let curve = allan_deviation(&dt, bin, &factors)?;
        out.csv(format!("{stem}_allan.csv"), |w| io::write_allan(w, &curve))?;
        let (lo, hi) = spec.allan_fit_s.unwrap_or((bin, f64::INFINITY));
        match fit_white_noise(&curve, lo, hi) {
            Ok(f) => s.insert("sensitivity_c_per_rthz".into(), json!({ "value": f.sensitivity, "allan_slope": f.slope })),
            Err(e) => s.insert("sensitivity_c_per_rthz".into(), json!({ "error": e.to_string() })),
        };
    }
    Ok(Value::Object(s))
}

pub fn run(spec: &AnalysisSpec, inputs: &[PathBuf]) -> Result<(Outputs, Value), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("analyze needs at least one --input file".into()));
    }
    let axes = validate(spec)?;
    let loaded: Vec<Input> = inputs.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let names = stems(inputs);
    let mut out = Outputs::default();
    let mut per_input = serde_json::Map::new();
    let mut points = Vec::new();
    for ((input, name), path) in loaded.iter().zip(&names).zip(inputs) {
        let summary = match input {
            Input::Trajectory(t) => {
                let r = analyze_trajectory(name, t, spec, axes, &mut out).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                    other => other,
                })?;
                points.extend(r.point);
                r.summary
            }
            Input::Odmr(scans) => analyze_odmr(name, scans, &spec.odmr.clone().unwrap_or_default(), &mut out)?,
        };
        per_input.insert(name.clone(), summary);
    }
    let mut summary = serde_json::Map::new();
    summary.insert("inputs".into(), Value::Object(per_input));
    if let Some(v) = &spec.viscosity {
        let distinct: BTreeSet<u64> = points.iter().map(|p| p.temperature_c.to_bits()).collect();
        if distinct.len() >= 3 {
            let r = fit_hydrodynamic_radius(&points, &v.model()?)?;
            summary.insert(
                "hydrodynamic_radius_nm".into(),
                json!({ "value": r.r_nm, "sigma": r.sigma_nm, "chi2_reduced": r.chi2_reduced, "temperatures": points.len() }),
            );
        } else {
            summary.insert(
                "hydrodynamic_radius_nm".into(),
                json!({ "skipped": "needs trajectories at >= 3 temperatures with temperature_c metadata" }),
            );
        }
    }
    summary.insert("files".into(), json!(out.names().collect::<Vec<_>>()));
    Ok((out, Value::Object(summary)))
}
