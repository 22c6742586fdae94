//! CSV exchange formats.
//!
//! Every table starts with a header row; `#key=value` comment lines may
//! precede it and carry metadata. Writers emit floats in Rust's shortest
//! round-trip form, so identical values always produce identical bytes.
//! Readers report the 1-based line number of the first malformed row.

use std::io::{BufRead, Write};

use crate::chip::{Channel, TimelineEvent};
use crate::error::{Error, Result};
use crate::media::Trajectory;
use crate::odmr::{AllanCurve, OdmrScan};
use crate::rheology::{ComplexModulus, ForceSpectrum, MsdCurve, Psd};
use crate::segmentation::{GammaNull, MotionClass, SegmentLabel};
use crate::tracker::TrackDiagnostics;

/// Metadata keys that describe the producing program rather than the data.
const VOLATILE_KEYS: &[&str] = &["generator"];

/// Header row plus data rows of a parsed table, with source line numbers.
#[derive(Debug, Clone, Default)]
struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    /// `(line, fields)`; `fields` is empty for a blank separator line.
    rows: Vec<(usize, Vec<String>)>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn read_table<R: BufRead>(reader: R) -> Result<Table> {
    let mut t = Table::default();
    let mut last = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        last = n;
        let s = line.trim();
        if let Some(c) = s.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                let k = k.trim();
                if !VOLATILE_KEYS.contains(&k) {
                    t.meta.push((k.to_string(), v.trim().to_string()));
                }
            }
            continue;
        }
        if t.header.is_empty() {
            if s.is_empty() {
                continue;
            }
            t.header = s.split(',').map(|f| f.trim().to_string()).collect();
            continue;
        }
        let fields = if s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(|f| f.trim().to_string()).collect()
        };
        t.rows.push((n, fields));
    }
    if t.header.is_empty() {
        return Err(parse_err(last.max(1), "missing header row"));
    }
    Ok(t)
}

impl Table {
    /// Column indices for `names`, all required.
    fn columns(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| parse_err(self.header_line(), format!("missing column `{n}`")))
            })
            .collect()
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn header_line(&self) -> usize {
        self.rows.first().map_or(1, |r| r.0.saturating_sub(1).max(1))
    }

    fn data_rows(&self) -> impl Iterator<Item = &(usize, Vec<String>)> {
        self.rows.iter().filter(|r| !r.1.is_empty())
    }

    fn require_rows(&self) -> Result<()> {
        if self.data_rows().next().is_none() {
            return Err(parse_err(self.header_line() + 1, "no data rows"));
        }
        Ok(())
    }

    fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn field(line: usize, fields: &[String], col: usize) -> Result<&str> {
    fields
        .get(col)
        .map(String::as_str)
        .ok_or_else(|| parse_err(line, format!("expected at least {} fields, got {}", col + 1, fields.len())))
}

fn number(line: usize, fields: &[String], col: usize) -> Result<f64> {
    let s = field(line, fields, col)?;
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("non-finite value `{s}`")))
    }
}

fn index(line: usize, fields: &[String], col: usize) -> Result<usize> {
    let s = field(line, fields, col)?;
    s.parse()
        .map_err(|_| parse_err(line, format!("`{s}` is not a non-negative integer")))
}

fn write_meta<W: Write>(w: &mut W, key: &str, value: impl std::fmt::Display) -> Result<()> {
    writeln!(w, "#{key}={value}")?;
    Ok(())
}

/// Writes `#key=value` lines for the trajectory metadata, then the samples.
pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    write_meta(w, "dt_s", traj.dt)?;
    for (k, v) in traj.meta.iter().filter(|(k, _)| k.as_str() != "dt_s") {
        write_meta(w, k, v)?;
    }
    writeln!(w, "t_s,x_nm,y_nm,z_nm")?;
    for (i, p) in traj.points.iter().enumerate() {
        writeln!(w, "{},{},{},{}", traj.time(i), p[0], p[1], p[2])?;
    }
    Ok(())
}

/// Reads a uniformly sampled trajectory. The sample period comes from the
/// `#dt_s` metadata line when present, otherwise from the timestamp span;
/// every timestamp must sit on a uniform grid to 1e-6 of a period.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<Trajectory> {
    let t = read_table(r)?;
    t.require_rows()?;
    let cols = t.columns(&["t_s", "x_nm", "y_nm", "z_nm"])?;
    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for (line, f) in t.data_rows() {
        times.push(number(*line, f, cols[0])?);
        points.push([number(*line, f, cols[1])?, number(*line, f, cols[2])?, number(*line, f, cols[3])?]);
        lines.push(*line);
    }
    let dt = match t.meta_value("dt_s") {
        Some(v) => v
            .parse()
            .map_err(|_| parse_err(1, format!("metadata dt_s=`{v}` is not a number")))?,
        None if times.len() >= 2 => (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64,
        None => 1.0,
    };
    if !(dt > 0.0) || (times.len() >= 2 && times[1] <= times[0]) {
        return Err(parse_err(lines[lines.len().min(2) - 1], "timestamps must increase"));
    }
    // grid check against the first step so the first offending row is named
    let step = if times.len() >= 2 { times[1] - times[0] } else { dt };
    for (i, &ti) in times.iter().enumerate() {
        let expected = times[0] + i as f64 * step;
        if (ti - expected).abs() > 1e-6 * dt {
            return Err(parse_err(lines[i], format!("non-uniform sampling: t = {ti}, expected {expected}")));
        }
    }
    let mut traj = Trajectory::new(dt, times[0], points).map_err(|e| parse_err(lines[0], e.to_string()))?;
    for (k, v) in t.meta.into_iter().filter(|(k, _)| k != "dt_s") {
        traj.meta.insert(k, v);
    }
    Ok(traj)
}

pub fn write_diagnostics<W: Write>(w: &mut W, d: &TrackDiagnostics) -> Result<()> {
    if let Some(i) = d.lock_lost_at {
        write_meta(w, "lock_lost_at", i)?;
    }
    write_meta(w, "mean_photons", d.mean_photons)?;
    writeln!(w, "t_s,err_nm,locked")?;
    for ((t, e), l) in d.times.iter().zip(&d.err_nm).zip(&d.locked) {
        writeln!(w, "{t},{e},{}", u8::from(*l))?;
    }
    Ok(())
}

/// Writes the curve; the sample period, axis count and noise floor go into
/// metadata so the curve can be read back.
pub fn write_msd<W: Write>(w: &mut W, c: &MsdCurve) -> Result<()> {
    if let (Some(&tau), Some(&lag)) = (c.taus.first(), c.lags.first()) {
        write_meta(w, "dt_s", tau / lag as f64)?;
    }
    write_meta(w, "dims", c.dims)?;
    write_meta(w, "noise_floor_nm2", c.noise_floor_nm2)?;
    writeln!(w, "tau_s,msd_nm2,var_nm4,k")?;
    for i in 0..c.len() {
        writeln!(w, "{},{},{},{}", c.taus[i], c.msd[i], c.var[i], c.n_samples[i])?;
    }
    Ok(())
}

pub fn read_msd<R: BufRead>(r: R) -> Result<MsdCurve> {
    let t = read_table(r)?;
    t.require_rows()?;
    let cols = t.columns(&["tau_s", "msd_nm2", "var_nm4", "k"])?;
    let meta_num = |key: &str, default: f64| -> Result<f64> {
        match t.meta_value(key) {
            Some(v) => v
                .parse()
                .map_err(|_| parse_err(1, format!("metadata {key}=`{v}` is not a number"))),
            None => Ok(default),
        }
    };
    let dims = meta_num("dims", 2.0)? as usize;
    if !(1..=3).contains(&dims) {
        return Err(parse_err(1, format!("dims must be 1, 2 or 3, got {dims}")));
    }
    let floor = meta_num("noise_floor_nm2", crate::rheology::DEFAULT_NOISE_FLOOR_NM2)?;
    let mut c = MsdCurve {
        taus: Vec::new(),
        lags: Vec::new(),
        msd: Vec::new(),
        var: Vec::new(),
        n_samples: Vec::new(),
        dims,
        noise_floor_nm2: floor,
    };
    for (line, f) in t.data_rows() {
        let tau = number(*line, f, cols[0])?;
        if !(tau > 0.0) || c.taus.last().is_some_and(|&p| tau <= p) {
            return Err(parse_err(*line, "lag times must be positive and increasing"));
        }
        c.taus.push(tau);
        c.msd.push(number(*line, f, cols[1])?);
        c.var.push(number(*line, f, cols[2])?);
        c.n_samples.push(index(*line, f, cols[3])?);
    }
    let dt = meta_num("dt_s", c.taus[0])?;
    c.lags = c.taus.iter().map(|t| (t / dt).round().max(1.0) as usize).collect();
    Ok(c)
}

pub fn write_modulus<W: Write>(w: &mut W, g: &ComplexModulus) -> Result<()> {
    writeln!(w, "f_hz,g_abs_pa,g_prime_pa,g_dprime_pa,alpha")?;
    for i in 0..g.len() {
        writeln!(w, "{},{},{},{},{}", g.freqs[i], g.g_abs[i], g.g_prime[i], g.g_dprime[i], g.alpha[i])?;
    }
    Ok(())
}

pub fn write_psd<W: Write>(w: &mut W, p: &Psd) -> Result<()> {
    write_meta(w, "dims", p.dims)?;
    write_meta(w, "segments", p.segments)?;
    writeln!(w, "f_hz,psd_nm2_per_hz")?;
    for (f, d) in p.freqs.iter().zip(&p.density) {
        writeln!(w, "{f},{d}")?;
    }
    Ok(())
}

pub fn write_force<W: Write>(w: &mut W, fs: &ForceSpectrum) -> Result<()> {
    writeln!(w, "omega_rad_s,thermal,external")?;
    for i in 0..fs.omegas.len() {
        writeln!(w, "{},{},{}", fs.omegas[i], fs.thermal[i], fs.external[i])?;
    }
    Ok(())
}

/// One `f_hz,counts` block per scan, blocks separated by a blank line.
pub fn write_odmr<W: Write>(w: &mut W, scans: &[OdmrScan]) -> Result<()> {
    if let Some(s) = scans.first() {
        write_meta(w, "scans_per_block", s.n_scans)?;
    }
    writeln!(w, "f_hz,counts")?;
    for (k, s) in scans.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        for (f, c) in s.freqs.iter().zip(&s.counts) {
            writeln!(w, "{f},{c}")?;
        }
    }
    Ok(())
}

/// Reads ODMR spectra in block form or in long form with a `scan_id`
/// column. Each block is taken to hold `#scans_per_block` scans (default 1).
pub fn read_odmr<R: BufRead>(r: R) -> Result<Vec<OdmrScan>> {
    let t = read_table(r)?;
    t.require_rows()?;
    let cols = t.columns(&["f_hz", "counts"])?;
    let n_scans = match t.meta_value("scans_per_block") {
        Some(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| parse_err(1, format!("scans_per_block=`{v}` is not a positive integer")))?,
        None => 1,
    };
    let id_col = t.optional_column("scan_id");
    let mut blocks: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut current: Option<String> = None;
    let mut fresh = true;
    for (line, f) in &t.rows {
        if f.is_empty() {
            fresh = true;
            continue;
        }
        let key = match id_col {
            Some(c) => Some(field(*line, f, c)?.to_string()),
            None => None,
        };
        let new_block = if id_col.is_some() { key != current } else { fresh };
        if new_block {
            blocks.push((*line, Vec::new(), Vec::new()));
            current = key;
            fresh = false;
        }
        let b = blocks.last_mut().expect("block pushed above");
        b.1.push(number(*line, f, cols[0])?);
        b.2.push(number(*line, f, cols[1])?);
    }
    blocks
        .into_iter()
        .map(|(line, freqs, counts)| {
            if counts.iter().any(|c| *c < 0.0) {
                return Err(parse_err(line, "negative counts"));
            }
            OdmrScan::new(freqs, counts, n_scans).map_err(|e| parse_err(line, e.to_string()))
        })
        .collect()
}

/// Temperature change series: `(t_s, dT_C, sigma_C)` rows.
pub fn write_temperature_series<W: Write>(w: &mut W, rows: &[(f64, f64, f64)]) -> Result<()> {
    writeln!(w, "t_s,dT_C,sigma_C")?;
    for (t, d, s) in rows {
        writeln!(w, "{t},{d},{s}")?;
    }
    Ok(())
}

pub fn read_temperature_series<R: BufRead>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    let t = read_table(r)?;
    t.require_rows()?;
    let cols = t.columns(&["t_s", "dT_C", "sigma_C"])?;
    t.data_rows()
        .map(|(line, f)| Ok((number(*line, f, cols[0])?, number(*line, f, cols[1])?, number(*line, f, cols[2])?)))
        .collect()
}

pub fn write_labels<W: Write>(w: &mut W, labels: &[SegmentLabel]) -> Result<()> {
    writeln!(w, "start_idx,end_idx,gamma,class,displacement_nm,alpha")?;
    for l in labels {
        let alpha = l.alpha.map(|a| a.to_string()).unwrap_or_default();
        let gamma = if l.gamma.is_finite() { l.gamma.to_string() } else { String::new() };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            l.start,
            l.end,
            gamma,
            l.class.as_str(),
            l.displacement_nm,
            alpha
        )?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<SegmentLabel>> {
    let t = read_table(r)?;
    t.require_rows()?;
    let cols = t.columns(&["start_idx", "end_idx", "gamma", "class", "displacement_nm", "alpha"])?;
    t.data_rows()
        .map(|(line, f)| {
            let (line, f) = (*line, f.as_slice());
            let start = index(line, f, cols[0])?;
            let end = index(line, f, cols[1])?;
            if end < start {
                return Err(parse_err(line, "end_idx precedes start_idx"));
            }
            let gamma = if field(line, f, cols[2])?.is_empty() { f64::NAN } else { number(line, f, cols[2])? };
            let class = match field(line, f, cols[3])? {
                "directed" => MotionClass::Directed,
                "non-directed" => MotionClass::NonDirected,
                other => return Err(parse_err(line, format!("unknown class `{other}`"))),
            };
            let alpha = if field(line, f, cols[5])?.is_empty() { None } else { Some(number(line, f, cols[5])?) };
            Ok(SegmentLabel {
                start,
                end,
                gamma,
                class,
                displacement_nm: number(line, f, cols[4])?,
                alpha,
            })
        })
        .collect()
}

pub fn write_timeline<W: Write>(w: &mut W, events: &[TimelineEvent]) -> Result<()> {
    writeln!(w, "t_s,channel,state")?;
    for e in events {
        let channel = match e.channel {
            Channel::Mw => "mw",
            Channel::Heater => "heater",
        };
        writeln!(w, "{},{channel},{}", e.time(), if e.on { "on" } else { "off" })?;
    }
    Ok(())
}

pub fn write_setpoints<W: Write>(w: &mut W, series: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "t_s,T_C")?;
    for (t, v) in series {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn write_allan<W: Write>(w: &mut W, c: &AllanCurve) -> Result<()> {
    writeln!(w, "tau_s,adev,n_terms")?;
    for i in 0..c.taus.len() {
        writeln!(w, "{},{},{}", c.taus[i], c.adev[i], c.n_terms[i])?;
    }
    Ok(())
}

/// Tabulated null density of the directionality ratio.
pub fn write_gamma_null<W: Write>(w: &mut W, g: &GammaNull) -> Result<()> {
    write_meta(w, "n", g.n)?;
    write_meta(w, "m", g.m)?;
    write_meta(w, "confidence", g.confidence)?;
    write_meta(w, "critical_gamma", g.critical_gamma)?;
    writeln!(w, "gamma,pdf")?;
    for (x, p) in g.gammas.iter().zip(&g.pdf) {
        writeln!(w, "{x},{p}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::simulate_brownian;

    fn bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Vec<u8> {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        buf
    }

    #[test]
    fn trajectory_round_trip() {
        let mut t = simulate_brownian(1e3, 50, 0.0096, 3).unwrap();
        t.t0 = 1.5;
        let b = bytes(|w| write_trajectory(w, &t));
        let back = read_trajectory(b.as_slice()).unwrap();
        assert_eq!(back.points, t.points);
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.dt, t.dt);
        assert_eq!(bytes(|w| write_trajectory(w, &back)), b);
    }

    #[test]
    fn generator_line_is_not_metadata() {
        let src = "#generator=x 1.0\n#seed=4\nt_s,x_nm,y_nm,z_nm\n0,1,2,3\n0.5,1,2,3\n";
        let t = read_trajectory(src.as_bytes()).unwrap();
        assert_eq!(t.meta.len(), 1);
        assert_eq!(t.dt, 0.5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("t_s,x_nm,y_nm,z_nm\n", 2),
            ("#a=b\nt_s,x_nm,y_nm,z_nm\n0,0,0,0\n0.1,0,zero,0\n", 4),
            ("t_s,x_nm,y_nm\n0,0,0\n", 1),
            ("t_s,x_nm,y_nm,z_nm\n0,0,0,0\n0.1,0,0,0\n0.3,0,0,0\n", 4),
            ("t_s,x_nm,y_nm,z_nm\n0,0,0\n", 2),
        ];
        for (src, line) in cases {
            match read_trajectory(src.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{src:?}"),
                other => panic!("{src:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn odmr_block_and_long_forms_agree() {
        let blocks = "#scans_per_block=80\nf_hz,counts\n1,5\n2,4\n3,5\n\n1,6\n2,3\n3,6\n";
        let long = "#scans_per_block=80\nscan_id,f_hz,counts\n0,1,5\n0,2,4\n0,3,5\n1,1,6\n1,2,3\n1,3,6\n";
        let a = read_odmr(blocks.as_bytes()).unwrap();
        let b = read_odmr(long.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].counts, vec![6.0, 3.0, 6.0]);
        assert_eq!(a[0].n_scans, 80);
        let again = read_odmr(bytes(|w| write_odmr(w, &a)).as_slice()).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn labels_round_trip_with_missing_alpha() {
        let labels = vec![
            SegmentLabel { start: 0, end: 10, gamma: 0.1, class: MotionClass::NonDirected, displacement_nm: 12.5, alpha: None },
            SegmentLabel { start: 11, end: 99, gamma: 0.9, class: MotionClass::Directed, displacement_nm: 800.0, alpha: Some(1.7) },
        ];
        let back = read_labels(bytes(|w| write_labels(w, &labels)).as_slice()).unwrap();
        assert_eq!(back, labels);
        let bad = "start_idx,end_idx,gamma,class,displacement_nm,alpha\n0,1,0.5,sideways,1,\n";
        assert!(matches!(read_labels(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn msd_round_trip() {
        let c = MsdCurve {
            taus: vec![0.01, 0.02, 0.05],
            lags: vec![1, 2, 5],
            msd: vec![40.0, 80.0, 200.0],
            var: vec![1.0, 2.0, 5.0],
            n_samples: vec![99, 98, 95],
            dims: 2,
            noise_floor_nm2: 100.0,
        };
        assert_eq!(read_msd(bytes(|w| write_msd(w, &c)).as_slice()).unwrap(), c);
    }

    #[test]
    fn temperature_series_round_trip() {
        let rows = vec![(0.0, 0.1, 0.3), (0.4, -0.2, 0.3)];
        let back = read_temperature_series(bytes(|w| write_temperature_series(w, &rows)).as_slice()).unwrap();
        assert_eq!(back, rows);
    }
}
