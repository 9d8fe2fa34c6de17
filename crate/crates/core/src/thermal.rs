//! Per-voxel heater model and lumped enthalpy thermal model.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};

/// Electrical model of one voxel's perimeter heater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeaterParams {
    /// Sheet resistance (ohm per square).
    pub r_s: f64,
    /// Meander factor, at least 1.
    pub kappa: f64,
    /// Trace width (mm).
    pub omega: f64,
    /// Series resistance of harness and switch (ohm).
    pub r_ser: f64,
    /// Drive voltage (V).
    pub v: f64,
    /// PWM frequency (Hz).
    pub f_pwm: f64,
}

impl Default for HeaterParams {
    fn default() -> Self {
        Self {
            r_s: 1.0,
            kappa: 1.0,
            omega: 2.0,
            r_ser: 3.0,
            v: 34.0,
            f_pwm: 1000.0,
        }
    }
}

impl HeaterParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_s", self.r_s),
            ("kappa", self.kappa),
            ("omega", self.omega),
            ("r_ser", self.r_ser),
            ("v", self.v),
            ("f_pwm", self.f_pwm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SkinError::validation(format!(
                    "heater {name} must be positive, got {v}"
                )));
            }
        }
        if self.kappa < 1.0 {
            return Err(SkinError::validation(format!(
                "heater kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Lumped thermal model of one voxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    /// Heat capacity (J/K).
    pub c_th: f64,
    /// Conductance to ambient (W/K).
    pub g_th: f64,
    /// Latent energy absorbed at the melt temperature (J).
    pub q_melt: f64,
    /// Melt temperature (degC).
    pub t_m: f64,
    /// Fraction of electrical power that heats the voxel.
    pub eta: f64,
    /// Ambient temperature (degC).
    pub t_amb: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            c_th: 9.0,
            g_th: 0.2,
            q_melt: 320.0,
            t_m: 62.0,
            eta: 0.8,
            t_amb: 25.0,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_th", self.c_th),
            ("g_th", self.g_th),
            ("q_melt", self.q_melt),
            ("eta", self.eta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SkinError::validation(format!(
                    "thermal {name} must be positive, got {v}"
                )));
            }
        }
        if self.eta > 1.0 {
            return Err(SkinError::validation(format!(
                "thermal eta must be <= 1, got {}",
                self.eta
            )));
        }
        if !(self.t_m.is_finite() && self.t_amb.is_finite() && self.t_m > self.t_amb) {
            return Err(SkinError::validation("melt temperature must exceed ambient"));
        }
        Ok(())
    }

    pub fn time_constant(&self) -> f64 {
        self.c_th / self.g_th
    }

    /// Largest step size accepted by the integrator.
    pub fn max_dt(&self) -> f64 {
        self.time_constant().min(1.0) / 20.0
    }

    /// Enthalpy of the onset of melting, relative to ambient.
    fn h_solidus(&self) -> f64 {
        self.c_th * (self.t_m - self.t_amb)
    }

    /// Temperature and phase fraction for a given enthalpy relative to ambient.
    pub fn state_of(&self, enthalpy: f64) -> (f64, f64) {
        let hs = self.h_solidus();
        if enthalpy < hs {
            (self.t_amb + enthalpy / self.c_th, 0.0)
        } else if enthalpy <= hs + self.q_melt {
            (self.t_m, (enthalpy - hs) / self.q_melt)
        } else {
            (self.t_m + (enthalpy - hs - self.q_melt) / self.c_th, 1.0)
        }
    }

    /// Enthalpy relative to ambient for a temperature and phase fraction.
    pub fn enthalpy_of(&self, temperature: f64, phase_fraction: f64) -> f64 {
        self.c_th * (temperature - self.t_amb) + self.q_melt * phase_fraction.clamp(0.0, 1.0)
    }
}

/// Heater resistance of a perimeter trace of length `3 S0`.
pub fn heater_resistance(h: &HeaterParams, s_0: f64) -> f64 {
    h.kappa * h.r_s * (3.0 * s_0 / h.omega)
}

/// Average power dissipated in the heater under PWM.
pub fn joule_power(h: &HeaterParams, s_0: f64, duty: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(SkinError::validation(format!("duty must lie in [0,1], got {duty}")));
    }
    let r_h = heater_resistance(h, s_0);
    Ok(power_from_resistance(h.v, r_h, h.r_ser, duty))
}

/// `duty * V^2 * R_h / (R_h + R_ser)^2`.
pub fn power_from_resistance(v: f64, r_h: f64, r_ser: f64, duty: f64) -> f64 {
    duty * v * v * r_h / ((r_h + r_ser) * (r_h + r_ser))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeltTime {
    /// Loss-free closed-form estimate `Q (R_h + R_ser) / (eta V^2)`.
    pub closed_form: f64,
    /// Melt completion from ambient at full duty under the enthalpy model.
    pub simulated: f64,
}

/// Closed-form melt time `Q (R_h + R_ser) / (eta V^2)`.
pub fn melt_time_closed_form(t: &ThermalParams, h: &HeaterParams, s_0: f64) -> f64 {
    let r_h = heater_resistance(h, s_0);
    t.q_melt * (r_h + h.r_ser) / (t.eta * h.v * h.v)
}

/// Smallest drive voltage whose full-duty power beats the losses at `T_m`.
pub fn minimum_voltage(t: &ThermalParams, h: &HeaterParams, s_0: f64) -> f64 {
    let r_h = heater_resistance(h, s_0);
    (r_h + h.r_ser) * (t.g_th * (t.t_m - t.t_amb) / (t.eta * r_h)).sqrt()
}

fn check_reachable(t: &ThermalParams, h: &HeaterParams, s_0: f64) -> Result<()> {
    let p = joule_power(h, s_0, 1.0)?;
    if t.eta * p <= t.g_th * (t.t_m - t.t_amb) {
        return Err(SkinError::infeasible(format!(
            "insufficient power: {:.3} W effective at full duty cannot overcome {:.3} W loss at T_m; \
             minimum drive voltage is {:.3} V",
            t.eta * p,
            t.g_th * (t.t_m - t.t_amb),
            minimum_voltage(t, h, s_0)
        )));
    }
    Ok(())
}

/// Melt time estimates for a voxel starting at ambient.
pub fn melt_time(t: &ThermalParams, h: &HeaterParams, s_0: f64) -> Result<MeltTime> {
    t.validate()?;
    h.validate()?;
    check_reachable(t, h, s_0)?;
    let closed_form = melt_time_closed_form(t, h, s_0);
    let dt = t.max_dt();
    let sim = Simulator::new(t, h, s_0, dt)?;
    let simulated = sim
        .run_until(
            ThermalState::ambient(t),
            1.0,
            |s| s.phase_fraction >= 1.0,
            100.0 * (closed_form + t.time_constant()),
        )?
        .ok_or_else(|| SkinError::infeasible("melt did not complete within the simulation horizon"))?
        .t;
    Ok(MeltTime { closed_form, simulated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolTime {
    /// `C_th / G_th`.
    pub time_constant: f64,
    /// Time from a fully melted voxel at `T_m` until the phase fraction returns to 0.
    pub solidification: f64,
}

pub fn cool_time(t: &ThermalParams) -> Result<CoolTime> {
    t.validate()?;
    let time_constant = t.time_constant();
    // Heater parameters are irrelevant at zero duty.
    let sim = Simulator::new(t, &HeaterParams::default(), 1.0, t.max_dt())?;
    let start = ThermalState {
        t: 0.0,
        temperature: t.t_m,
        phase_fraction: 1.0,
    };
    let horizon = 100.0 * (time_constant + t.q_melt / (t.g_th * (t.t_m - t.t_amb)));
    let solidification = sim
        .run_until(start, 0.0, |s| s.phase_fraction <= 0.0, horizon)?
        .map(|s| s.t)
        .ok_or_else(|| SkinError::infeasible("voxel did not solidify within the simulation horizon"))?;
    Ok(CoolTime {
        time_constant,
        solidification,
    })
}

/// Piecewise-constant duty command. Each segment holds from its start time
/// until the next segment's start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutySchedule {
    pub segments: Vec<(f64, f64)>,
}

impl DutySchedule {
    pub fn constant(duty: f64) -> Self {
        Self {
            segments: vec![(0.0, duty)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(SkinError::validation("duty schedule has no segments"));
        }
        for w in self.segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(SkinError::validation(
                    "duty schedule start times must increase strictly",
                ));
            }
        }
        for &(t, d) in &self.segments {
            if !t.is_finite() || !(0.0..=1.0).contains(&d) {
                return Err(SkinError::validation(format!("invalid duty segment ({t}, {d})")));
            }
        }
        Ok(())
    }

    pub fn duty_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|&(s, _)| s <= t);
        if idx == 0 {
            0.0
        } else {
            self.segments[idx - 1].1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub temperature: f64,
    pub phase_fraction: f64,
    /// Electrical power delivered to the heater (W).
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransientTrace {
    pub samples: Vec<TraceSample>,
}

impl TransientTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,T,phase_fraction,P_in\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", s.t, s.temperature, s.phase_fraction, s.power);
        }
        out
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    /// First time the phase fraction reaches `level` while rising.
    pub fn first_time_at_or_above(&self, level: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.phase_fraction >= level).map(|s| s.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t: f64,
    pub temperature: f64,
    pub phase_fraction: f64,
}

impl ThermalState {
    pub fn ambient(t: &ThermalParams) -> Self {
        Self {
            t: 0.0,
            temperature: t.t_amb,
            phase_fraction: 0.0,
        }
    }
}

/// Explicit enthalpy integrator for one voxel.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub thermal: ThermalParams,
    pub full_power: f64,
    pub dt: f64,
}

impl Simulator {
    pub fn new(t: &ThermalParams, h: &HeaterParams, s_0: f64, dt: f64) -> Result<Self> {
        t.validate()?;
        h.validate()?;
        Self::with_power(t, joule_power(h, s_0, 1.0)?, dt)
    }

    pub fn with_power(t: &ThermalParams, full_power: f64, dt: f64) -> Result<Self> {
        t.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SkinError::validation(format!("dt must be positive, got {dt}")));
        }
        if dt > t.max_dt() * (1.0 + 1e-12) {
            return Err(SkinError::validation(format!(
                "dt {dt} s exceeds the stability limit {} s",
                t.max_dt()
            )));
        }
        if !(full_power.is_finite() && full_power >= 0.0) {
            return Err(SkinError::validation(format!("invalid heater power {full_power}")));
        }
        Ok(Self {
            thermal: *t,
            full_power,
            dt,
        })
    }

    fn advance(&self, enthalpy: f64, duty: f64, dt: f64) -> Result<f64> {
        let (temp, _) = self.thermal.state_of(enthalpy);
        let q = self.thermal.eta * duty * self.full_power - self.thermal.g_th * (temp - self.thermal.t_amb);
        let next = enthalpy + dt * q;
        if !next.is_finite() {
            return Err(SkinError::validation("thermal integration produced a non-finite value"));
        }
        Ok(next)
    }

    fn sample(&self, t: f64, enthalpy: f64, duty: f64) -> TraceSample {
        let (temperature, phase_fraction) = self.thermal.state_of(enthalpy);
        TraceSample {
            t,
            temperature,
            phase_fraction,
            power: duty * self.full_power,
        }
    }

    /// Integrates a duty schedule from `start` for `horizon` seconds.
    pub fn run(&self, start: ThermalState, schedule: &DutySchedule, horizon: f64) -> Result<TransientTrace> {
        schedule.validate()?;
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(SkinError::validation(format!(
                "horizon must be non-negative, got {horizon}"
            )));
        }
        let steps = (horizon / self.dt).round() as usize;
        let mut h = self.thermal.enthalpy_of(start.temperature, start.phase_fraction);
        let mut samples = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = start.t + k as f64 * self.dt;
            let duty = schedule.duty_at(t);
            samples.push(self.sample(t, h, duty));
            if k < steps {
                h = self.advance(h, duty, self.dt)?;
            }
        }
        Ok(TransientTrace { samples })
    }

    /// Integrates at constant duty until `stop` holds, returning the first
    /// state that satisfies it, or `None` after `horizon` seconds.
    pub fn run_until(
        &self,
        start: ThermalState,
        duty: f64,
        stop: impl Fn(&ThermalState) -> bool,
        horizon: f64,
    ) -> Result<Option<ThermalState>> {
        let mut h = self.thermal.enthalpy_of(start.temperature, start.phase_fraction);
        let steps = (horizon / self.dt).ceil() as usize;
        for k in 0..=steps {
            let (temperature, phase_fraction) = self.thermal.state_of(h);
            let state = ThermalState {
                t: start.t + k as f64 * self.dt,
                temperature,
                phase_fraction,
            };
            if stop(&state) {
                return Ok(Some(state));
            }
            h = self.advance(h, duty, self.dt)?;
        }
        Ok(None)
    }
}

/// Simulates one voxel from ambient under a duty schedule.
pub fn simulate_transient(
    t: &ThermalParams,
    h: &HeaterParams,
    s_0: f64,
    schedule: &DutySchedule,
    dt: f64,
    horizon: f64,
) -> Result<TransientTrace> {
    Simulator::new(t, h, s_0, dt)?.run(ThermalState::ambient(t), schedule, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub input: f64,
    pub loss: f64,
    pub stored: f64,
    /// `|input - loss - stored| / input`.
    pub relative_error: f64,
}

/// Trapezoidal energy balance over a trace.
pub fn energy_audit(t: &ThermalParams, trace: &TransientTrace) -> Result<EnergyAudit> {
    let (first, last) = match (trace.samples.first(), trace.samples.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(SkinError::validation("energy audit needs a non-empty trace")),
    };
    let mut input = 0.0;
    let mut loss = 0.0;
    for w in trace.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        input += 0.5 * dt * t.eta * (w[0].power + w[1].power);
        loss += 0.5 * dt * t.g_th * (w[0].temperature + w[1].temperature - 2.0 * t.t_amb);
    }
    let stored =
        t.enthalpy_of(last.temperature, last.phase_fraction) - t.enthalpy_of(first.temperature, first.phase_fraction);
    let relative_error = if input > 0.0 {
        (input - loss - stored).abs() / input
    } else {
        (loss + stored).abs()
    };
    Ok(EnergyAudit {
        input,
        loss,
        stored,
        relative_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub heat_time: f64,
    pub cool_time: f64,
    pub cycle_time: f64,
    pub audit: EnergyAudit,
    pub trace: TransientTrace,
}

/// Full duty from ambient until fully melted, then zero duty until fully
/// solidified.
pub fn simulate_cycle(t: &ThermalParams, h: &HeaterParams, s_0: f64, dt: f64) -> Result<CycleReport> {
    check_reachable(t, h, s_0)?;
    let sim = Simulator::new(t, h, s_0, dt)?;
    let horizon = 100.0 * (melt_time_closed_form(t, h, s_0) + t.time_constant());
    let melted = sim
        .run_until(ThermalState::ambient(t), 1.0, |s| s.phase_fraction >= 1.0, horizon)?
        .ok_or_else(|| SkinError::infeasible("melt did not complete"))?;
    let heat_time = melted.t;
    let solid = sim
        .run_until(melted, 0.0, |s| s.phase_fraction <= 0.0, horizon)?
        .ok_or_else(|| SkinError::infeasible("voxel did not re-solidify"))?;
    let cool_time = solid.t - heat_time;
    let schedule = DutySchedule {
        segments: vec![(0.0, 1.0), (heat_time, 0.0)],
    };
    let trace = sim.run(ThermalState::ambient(t), &schedule, solid.t)?;
    let audit = energy_audit(t, &trace)?;
    Ok(CycleReport {
        heat_time,
        cool_time,
        cycle_time: heat_time + cool_time,
        audit,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec_heater() -> HeaterParams {
        // R_h = 27 ohm at S0 = 18 with 12 V drive.
        HeaterParams {
            v: 12.0,
            ..HeaterParams::default()
        }
    }

    #[test]
    fn resistance_examples() {
        let h = HeaterParams {
            r_s: 25.0,
            kappa: 1.2,
            omega: 2.0,
            ..HeaterParams::default()
        };
        assert_relative_eq!(heater_resistance(&h, 18.0), 810.0, max_relative = 1e-12);
        let one = HeaterParams {
            r_s: 1.0,
            kappa: 1.0,
            omega: 54.0,
            ..HeaterParams::default()
        };
        assert_relative_eq!(heater_resistance(&one, 18.0), 1.0, max_relative = 1e-12);
        let wide = HeaterParams { omega: 4.0, ..h };
        assert_relative_eq!(heater_resistance(&wide, 18.0), 405.0, max_relative = 1e-12);
    }

    #[test]
    fn power_examples() {
        let h = spec_heater();
        assert_relative_eq!(heater_resistance(&h, 18.0), 27.0, max_relative = 1e-12);
        assert_relative_eq!(joule_power(&h, 18.0, 1.0).unwrap(), 4.32, max_relative = 1e-12);
        assert_eq!(joule_power(&h, 18.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(joule_power(&h, 18.0, 0.5).unwrap(), 2.16, max_relative = 1e-12);
        assert!(joule_power(&h, 18.0, 1.5).is_err());
        assert!(joule_power(&h, 18.0, -0.1).is_err());
    }

    #[test]
    fn closed_form_melt_examples() {
        let t = ThermalParams {
            q_melt: 120.0,
            ..ThermalParams::default()
        };
        let h = spec_heater();
        assert_relative_eq!(melt_time_closed_form(&t, &h, 18.0), 31.25, max_relative = 1e-12);
        let h2 = HeaterParams { v: 24.0, ..h };
        assert_relative_eq!(melt_time_closed_form(&t, &h2, 18.0), 31.25 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn unreachable_melt_reports_minimum_voltage() {
        let t = ThermalParams::default();
        let h = spec_heater();
        let err = melt_time(&t, &h, 18.0).unwrap_err();
        assert_eq!(err.kind(), "infeasible");
        let v_min = minimum_voltage(&t, &h, 18.0);
        let ok = HeaterParams { v: v_min * 1.01, ..h };
        assert!(melt_time(&t, &ok, 18.0).is_ok());
        let p = joule_power(&HeaterParams { v: v_min, ..h }, 18.0, 1.0).unwrap();
        assert_relative_eq!(t.eta * p, t.g_th * (t.t_m - t.t_amb), max_relative = 1e-12);
    }

    #[test]
    fn melt_time_cubes_with_voxel_size() {
        let h = HeaterParams {
            r_ser: 1e-300,
            ..HeaterParams::default()
        };
        let q_per_area = 320.0 / (18.0 * 18.0);
        let at = |s0: f64| {
            let t = ThermalParams {
                q_melt: q_per_area * s0 * s0,
                ..ThermalParams::default()
            };
            melt_time_closed_form(&t, &h, s0)
        };
        assert_relative_eq!(at(36.0) / at(18.0), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn cool_time_examples() {
        let t = ThermalParams::default();
        let c = cool_time(&t).unwrap();
        assert_relative_eq!(c.time_constant, 45.0, max_relative = 1e-12);
        let oracle = t.q_melt / (t.g_th * (t.t_m - t.t_amb));
        assert!((c.solidification - oracle).abs() <= 2.0 * t.max_dt());
        let fast = cool_time(&ThermalParams { g_th: 0.4, ..t }).unwrap();
        assert_relative_eq!(fast.time_constant, 22.5, max_relative = 1e-12);
    }

    #[test]
    fn heating_plateaus_at_melt_temperature() {
        let t = ThermalParams::default();
        let h = HeaterParams::default();
        let trace = simulate_transient(&t, &h, 18.0, &DutySchedule::constant(1.0), 0.01, 60.0).unwrap();
        let plateau: Vec<_> = trace
            .samples
            .iter()
            .filter(|s| s.phase_fraction > 0.0 && s.phase_fraction < 1.0)
            .collect();
        assert!(!plateau.is_empty());
        assert!(plateau.iter().all(|s| s.temperature == t.t_m));
        for w in plateau.windows(2) {
            assert!(w[1].phase_fraction >= w[0].phase_fraction);
        }
        assert!(trace.last().unwrap().temperature > t.t_m);
    }

    #[test]
    fn zero_duty_stays_ambient() {
        let t = ThermalParams::default();
        let trace = simulate_transient(
            &t,
            &HeaterParams::default(),
            18.0,
            &DutySchedule::constant(0.0),
            0.05,
            100.0,
        )
        .unwrap();
        assert!(trace
            .samples
            .iter()
            .all(|s| s.temperature == t.t_amb && s.phase_fraction == 0.0));
    }

    #[test]
    fn halving_dt_converges() {
        let t = ThermalParams::default();
        let h = HeaterParams::default();
        let sched = DutySchedule {
            segments: vec![(0.0, 1.0), (40.0, 0.3)],
        };
        let a = simulate_transient(&t, &h, 18.0, &sched, 0.05, 120.0).unwrap();
        let b = simulate_transient(&t, &h, 18.0, &sched, 0.025, 120.0).unwrap();
        let ta = a.last().unwrap().temperature;
        let tb = b.last().unwrap().temperature;
        assert!((ta - tb).abs() / tb < 0.005);
    }

    #[test]
    fn unstable_dt_rejected() {
        let t = ThermalParams::default();
        let err = simulate_transient(
            &t,
            &HeaterParams::default(),
            18.0,
            &DutySchedule::constant(1.0),
            0.1,
            10.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn default_cycle_matches_targets() {
        let r = simulate_cycle(&ThermalParams::default(), &HeaterParams::default(), 18.0, 0.01).unwrap();
        assert!((r.heat_time - 30.0).abs() <= 3.0, "heat {}", r.heat_time);
        assert!((r.cool_time - 45.0).abs() <= 4.5, "cool {}", r.cool_time);
        assert!(r.cycle_time <= 75.0);
        assert!(r.audit.relative_error < 0.01);
    }

    #[test]
    fn closed_form_agrees_in_loss_free_regime() {
        let t = ThermalParams {
            g_th: 0.01,
            c_th: 0.5,
            q_melt: 400.0,
            ..ThermalParams::default()
        };
        let h = HeaterParams {
            r_ser: 0.01,
            ..HeaterParams::default()
        };
        let m = melt_time(&t, &h, 18.0).unwrap();
        assert!((m.simulated - m.closed_form).abs() / m.simulated < 0.2, "{m:?}");
    }

    #[test]
    fn trace_csv_header() {
        let trace = TransientTrace {
            samples: vec![TraceSample {
                t: 0.0,
                temperature: 25.0,
                phase_fraction: 0.0,
                power: 1.5,
            }],
        };
        assert_eq!(trace.to_csv(), "t,T,phase_fraction,P_in\n0,25,0,1.5\n");
    }
}
