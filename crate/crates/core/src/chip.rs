//! Sensing-chip support: RTD conversion, heater/microwave duty cycle and
//! temperature setpoint schedules.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Period of the global synchronisation clock (s).
pub const CLOCK_TICK: f64 = 10e-6;

/// Linear gold RTD, `R(T) = R0·(1 + η·(T − T0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtdCalibration {
    /// Ω
    pub r0: f64,
    /// °C
    pub t0: f64,
    /// 1/°C
    pub eta: f64,
    /// Uncertainty of `eta`, used for the propagated temperature error.
    #[serde(default)]
    pub sigma_eta: f64,
}

impl Default for RtdCalibration {
    fn default() -> Self {
        Self {
            r0: 100.0,
            t0: 20.0,
            eta: 2.44e-3,
            sigma_eta: 0.12e-3,
        }
    }
}

impl RtdCalibration {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("R0", self.r0)?;
        ensure_finite("T0", self.t0)?;
        ensure_positive("eta", self.eta)?;
        ensure_finite("sigma_eta", self.sigma_eta)
    }
}

pub fn rtd_temperature(r: f64, cal: &RtdCalibration) -> Result<f64> {
    cal.validate()?;
    ensure_positive("resistance", r)?;
    Ok(cal.t0 + (r / cal.r0 - 1.0) / cal.eta)
}

/// Temperature with the error propagated from the uncertainty of `eta`.
pub fn rtd_temperature_with_sigma(r: f64, cal: &RtdCalibration) -> Result<(f64, f64)> {
    let t = rtd_temperature(r, cal)?;
    Ok((t, (t - cal.t0).abs() * cal.sigma_eta / cal.eta))
}

pub fn rtd_resistance(t_c: f64, cal: &RtdCalibration) -> Result<f64> {
    cal.validate()?;
    ensure_finite("temperature", t_c)?;
    Ok(cal.r0 * (1.0 + cal.eta * (t_c - cal.t0)))
}

/// One period: microwave from 0 to `mw_on`, then a buffer, the heater window
/// and a closing buffer. `switch_edge` is the settling time of the heater
/// switch, counted on both sides of the heater window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DutyCycleSchedule {
    pub period: f64,
    pub mw_on: f64,
    pub heater_on: f64,
    pub buffer: f64,
    pub switch_edge: f64,
}

impl Default for DutyCycleSchedule {
    fn default() -> Self {
        Self {
            period: 0.2,
            mw_on: 0.16,
            heater_on: 0.03,
            buffer: 0.005,
            switch_edge: 0.0005,
        }
    }
}

fn ticks(name: &str, v: f64) -> Result<u64> {
    ensure_finite(name, v)?;
    if v < 0.0 {
        return Err(Error::invalid(format!("{name} must be >= 0")));
    }
    let t = (v / CLOCK_TICK).round();
    if (t * CLOCK_TICK - v).abs() > 1e-9 {
        return Err(Error::ScheduleRejected {
            constraint: format!("{name} = {v} s is not a multiple of the 10 us clock"),
        });
    }
    Ok(t as u64)
}

fn reject(constraint: impl Into<String>) -> Error {
    Error::ScheduleRejected { constraint: constraint.into() }
}

impl DutyCycleSchedule {
    /// Durations in clock ticks after checking every constraint.
    fn tick_counts(&self) -> Result<[u64; 5]> {
        let t = [
            ticks("period", self.period)?,
            ticks("mw_on", self.mw_on)?,
            ticks("heater_on", self.heater_on)?,
            ticks("buffer", self.buffer)?,
            ticks("switch_edge", self.switch_edge)?,
        ];
        let [period, mw, heater, buffer, edge] = t;
        if period == 0 {
            return Err(reject("period must be > 0"));
        }
        if mw == 0 {
            return Err(reject("mw_on must be > 0"));
        }
        if heater > 0 && edge >= buffer {
            return Err(reject("switch_edge must be shorter than buffer"));
        }
        if mw + 2 * buffer + heater > period {
            return Err(reject(format!(
                "mw_on + 2*buffer + heater_on = {:.6} s exceeds period {:.6} s",
                (mw + 2 * buffer + heater) as f64 * CLOCK_TICK,
                self.period
            )));
        }
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.tick_counts().map(|_| ())
    }

    /// Fraction of each period spent counting photons.
    pub fn duty_factor(&self) -> f64 {
        self.mw_on / self.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Mw,
    Heater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineEvent {
    /// Clock ticks since start.
    pub tick: u64,
    pub channel: Channel,
    pub on: bool,
}

impl TimelineEvent {
    pub fn time(&self) -> f64 {
        self.tick as f64 * CLOCK_TICK
    }
}

/// On/off events on the 100 kHz clock grid for all periods starting before
/// `duration`. Events are time ordered.
pub fn schedule_timeline(d: &DutyCycleSchedule, duration: f64) -> Result<Vec<TimelineEvent>> {
    let [period, mw, heater, buffer, _] = d.tick_counts()?;
    ensure_positive("duration", duration)?;
    let end = (duration / CLOCK_TICK).round() as u64;
    let mut out = Vec::new();
    let mut start = 0;
    while start < end {
        out.push(TimelineEvent { tick: start, channel: Channel::Mw, on: true });
        out.push(TimelineEvent { tick: start + mw, channel: Channel::Mw, on: false });
        if heater > 0 {
            let h = start + mw + buffer;
            out.push(TimelineEvent { tick: h, channel: Channel::Heater, on: true });
            out.push(TimelineEvent { tick: h + heater, channel: Channel::Heater, on: false });
        }
        start += period;
    }
    Ok(out)
}

/// Collapses events into `(channel, on_tick, off_tick)` intervals.
pub fn intervals(events: &[TimelineEvent]) -> Vec<(Channel, u64, u64)> {
    let mut open: [Option<u64>; 2] = [None, None];
    let mut out = Vec::new();
    for e in events {
        let slot = match e.channel {
            Channel::Mw => 0,
            Channel::Heater => 1,
        };
        if e.on {
            open[slot] = Some(e.tick);
        } else if let Some(s) = open[slot].take() {
            out.push((e.channel, s, e.tick));
        }
    }
    out
}

/// Smallest gap (s) between any microwave interval and any heater interval
/// widened by `switch_edge` on both sides. `None` when there is no heater.
pub fn min_mw_heater_gap(events: &[TimelineEvent], switch_edge: f64) -> Option<f64> {
    let iv = intervals(events);
    let edge = switch_edge / CLOCK_TICK;
    let mut best: Option<f64> = None;
    for &(ca, a0, a1) in &iv {
        if ca != Channel::Mw {
            continue;
        }
        for &(cb, b0, b1) in &iv {
            if cb != Channel::Heater {
                continue;
            }
            let (h0, h1) = (b0 as f64 - edge, b1 as f64 + edge);
            let gap = if h0 >= a1 as f64 {
                h0 - a1 as f64
            } else if a0 as f64 >= h1 {
                a0 as f64 - h1
            } else {
                -1.0
            };
            let g = gap * CLOCK_TICK;
            best = Some(best.map_or(g, |b: f64| b.min(g)));
        }
    }
    best
}

/// Whether the photon counters are gated on at time `t`.
pub fn counting_gate(d: &DutyCycleSchedule, t: f64) -> bool {
    let phase = t.rem_euclid(d.period);
    phase < d.mw_on
}

/// Piecewise-constant setpoints approached through a first-order lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSchedule {
    /// `(start time s, setpoint °C)`, times strictly increasing.
    pub steps: Vec<(f64, f64)>,
    /// Lag time constant (s).
    #[serde(default = "TemperatureSchedule::default_tau")]
    pub tau: f64,
}

impl TemperatureSchedule {
    /// A 99 % settling time of 120 s.
    pub fn default_tau() -> f64 {
        120.0 / 100f64.ln()
    }

    pub fn new(steps: Vec<(f64, f64)>) -> Result<Self> {
        let s = Self { steps, tau: Self::default_tau() };
        s.validate()?;
        Ok(s)
    }

    /// Staircase from `base`: `n_steps` increments of `step_c` every `hold` s.
    pub fn staircase(base: f64, step_c: f64, n_steps: usize, hold: f64) -> Result<Self> {
        Self::new((0..=n_steps).map(|i| (i as f64 * hold, base + i as f64 * step_c)).collect())
    }

    /// Alternates between `base` and `base + amplitude` every `hold` s.
    pub fn cycle(base: f64, amplitude: f64, n_half_cycles: usize, hold: f64) -> Result<Self> {
        Self::new(
            (0..n_half_cycles)
                .map(|i| (i as f64 * hold, if i % 2 == 0 { base } else { base + amplitude }))
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::invalid("temperature schedule has no steps"));
        }
        ensure_positive("tau", self.tau)?;
        for &(t, v) in &self.steps {
            ensure_finite("step time", t)?;
            ensure_finite("setpoint", v)?;
        }
        if self.steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("schedule times must be strictly increasing"));
        }
        Ok(())
    }

    /// Commanded setpoint at time `t`.
    pub fn setpoint_at(&self, t: f64) -> f64 {
        let i = self.steps.partition_point(|s| s.0 <= t);
        self.steps[i.saturating_sub(1)].1
    }
}

/// Substrate temperature sampled every `dt` over `duration`, starting at the
/// first setpoint.
pub fn setpoint_series(s: &TemperatureSchedule, dt: f64, duration: f64) -> Result<Vec<(f64, f64)>> {
    s.validate()?;
    ensure_positive("dt", dt)?;
    ensure_positive("duration", duration)?;
    let t0 = s.steps[0].0;
    let n = (duration / dt).floor() as usize + 1;
    let decay = (-dt / s.tau).exp();
    let mut temp = s.steps[0].1;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        if i > 0 {
            // exact solution for a setpoint constant over the step
            let target = s.setpoint_at(t - dt);
            temp = target + (temp - target) * decay;
        }
        out.push((t, temp));
    }
    Ok(out)
}
