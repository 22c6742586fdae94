use std::io::BufReader;
use std::path::Path;

use nanosense_core::io;
use nanosense_core::odmr::{allan_deviation, crb, crb_temperature_sensitivity, fit_white_noise, octave_factors, CrbParams};
use nanosense_core::segmentation::gamma_null;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, OdmrSpec};
use crate::error::{in_file, CliError};
use crate::output::Outputs;

pub fn run_crb(cfg: &ExperimentConfig, params: CrbParams, lambda0: Option<f64>) -> Result<(Outputs, Value), CliError> {
    let spec: OdmrSpec = match &cfg.odmr {
        Some(o) => o.clone(),
        None => serde_json::from_str("{}").expect("odmr fields all have defaults"),
    };
    spec.lineshape.validate()?;
    spec.timing.validate()?;
    let lambda0 = lambda0.unwrap_or(spec.lambda0);
    if !(lambda0 > 0.0) {
        return Err(CliError::Config("lambda0 must be > 0".into()));
    }
    let grid = spec.grid()?;
    let bound = crb(&spec.lineshape, lambda0, &grid, params)?;
    let sensitivity = crb_temperature_sensitivity(&bound, spec.kappa_khz_per_c, &spec.timing)?;
    let summary = json!({
        "params": bound.names,
        "lambda0": lambda0,
        "kappa_khz_per_c": spec.kappa_khz_per_c,
        "shift_sd_per_scan_hz": bound.shift_sd(),
        "shift_sd_per_bin_hz": bound.shift_sd_for(spec.timing.scans_per_bin() as f64),
        "sensitivity_c_per_rthz": sensitivity,
    });
    println!("crb_sensitivity_C_per_rtHz={sensitivity:.4}");
    Ok((Outputs::default(), summary))
}

pub fn run_allan(cfg: &ExperimentConfig, input: &Path) -> Result<(Outputs, Value), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let rows = io::read_temperature_series(BufReader::new(text.as_bytes())).map_err(|e| in_file(input, e))?;
    if rows.len() < 3 {
        return Err(CliError::Config(format!("{}: need >= 3 samples", input.display())));
    }
    let tau0 = rows[1].0 - rows[0].0;
    if !(tau0 > 0.0) {
        return Err(CliError::Config(format!("{}: timestamps must increase", input.display())));
    }
    let series: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let curve = allan_deviation(&series, tau0, &octave_factors(series.len()))?;
    let mut out = Outputs::default();
    out.csv("allan.csv", |w| io::write_allan(w, &curve))?;
    let odmr = cfg.analysis.odmr.clone().unwrap_or_default();
    let (lo, hi) = odmr.allan_fit_s.unwrap_or((tau0, f64::INFINITY));
    let fit = if curve.adev.iter().all(|a| *a == 0.0) {
        println!("allan deviation is zero at every averaging time");
        json!({ "value": 0.0 })
    } else {
        match fit_white_noise(&curve, lo, hi) {
            Ok(f) => {
                println!("allan_sensitivity={:.4} slope={:.3}", f.sensitivity, f.slope);
                json!({ "value": f.sensitivity, "allan_slope": f.slope })
            }
            Err(e) => json!({ "error": e.to_string() }),
        }
    };
    let summary = json!({
        "samples": series.len(),
        "tau0_s": tau0,
        "taus_s": curve.taus,
        "adev": curve.adev,
        "sensitivity_per_rthz": fit,
    });
    Ok((out, summary))
}

pub fn run_gamma_null(
    cfg: &ExperimentConfig,
    n: Option<usize>,
    m: Option<usize>,
    confidence: Option<f64>,
) -> Result<(Outputs, Value), CliError> {
    let base = cfg.analysis.segmentation.clone().unwrap_or_default();
    let g = gamma_null(n.unwrap_or(base.window), m.unwrap_or(base.dims), confidence.unwrap_or(base.confidence))?;
    println!("critical_gamma={:.5}", g.critical_gamma);
    let mut out = Outputs::default();
    out.csv("gamma_null.csv", |w| io::write_gamma_null(w, &g))?;
    let summary = json!({
        "n": g.n,
        "m": g.m,
        "confidence": g.confidence,
        "critical_gamma": g.critical_gamma,
        "mass_above_one": g.mass_above_one,
    });
    Ok((out, summary))
}
