//! Per-voxel thermal calibration against a simulated plant.
//!
//! Each voxel is characterised in four passes: a low-duty resistance
//! measurement, a stepped duty sweep to steady state, a monotone fit of
//! temperature against duty whose inverse gives the feedforward duty for a
//! target temperature, and a step response that yields the thermal time
//! constant.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::geometry::Address;
use crate::thermal::{power_from_resistance, ThermalParams};

/// Ground truth of one simulated voxel plus its instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantModel {
    /// True heater resistance (ohm).
    pub r_h: f64,
    /// True series resistance (ohm).
    pub r_ser: f64,
    /// Drive voltage (V).
    pub v: f64,
    pub thermal: ThermalParams,
    /// Temperature sensor noise std (degC).
    pub sensor_noise: f64,
    /// Current sense noise std (A).
    pub current_noise: f64,
    /// Broken heater trace: no current flows.
    #[serde(default)]
    pub open_circuit: bool,
    pub seed: u64,
}

impl PlantModel {
    pub fn nominal(seed: u64) -> Self {
        PlantModel {
            r_h: 27.0,
            r_ser: 3.0,
            v: 34.0,
            thermal: ThermalParams::default(),
            sensor_noise: 0.5,
            current_noise: 0.002,
            open_circuit: false,
            seed,
        }
    }

    pub fn noiseless(self) -> Self {
        PlantModel {
            sensor_noise: 0.0,
            current_noise: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thermal.validate()?;
        for (name, v) in [("r_h", self.r_h), ("r_ser", self.r_ser), ("v", self.v)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SkinError::validation(format!("plant {name} must be positive, got {v}")));
            }
        }
        if !(self.sensor_noise >= 0.0 && self.current_noise >= 0.0) {
            return Err(SkinError::validation("noise levels must be non-negative"));
        }
        Ok(())
    }

    /// Heater power at full duty (W).
    pub fn full_power(&self) -> f64 {
        if self.open_circuit {
            0.0
        } else {
            power_from_resistance(self.v, self.r_h, self.r_ser, 1.0)
        }
    }

    /// Exact steady-state temperature under constant duty.
    pub fn steady_temperature(&self, duty: f64) -> f64 {
        self.thermal.t_amb + self.thermal.eta * duty * self.full_power() / self.thermal.g_th
    }

    /// Same plant with heater resistance, heat capacity and conductance each
    /// scaled by an independent uniform factor in `[1 - spread, 1 + spread]`.
    pub fn perturbed(&self, spread: f64, rng: &mut impl Rng) -> Self {
        let mut f = || {
            if spread > 0.0 {
                rng.random_range(1.0 - spread..=1.0 + spread)
            } else {
                1.0
            }
        };
        let r_h = self.r_h * f();
        let c_th = self.thermal.c_th * f();
        let g_th = self.thermal.g_th * f();
        PlantModel {
            r_h,
            thermal: ThermalParams {
                c_th,
                g_th,
                ..self.thermal
            },
            ..*self
        }
    }
}

/// A population of perturbed plants at consecutive addresses of a
/// `rows x cols` sheet, reproducible from `seed`.
pub fn plant_population(
    nominal: &PlantModel,
    rows: usize,
    cols: usize,
    spread: f64,
    seed: u64,
) -> Vec<(Address, PlantModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let mut p = nominal.perturbed(spread, &mut rng);
            p.seed = rng.random();
            out.push((Address::new(row, col), p));
        }
    }
    out
}

/// Settings of the calibration procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Duty grid of the sweep, ascending.
    pub duty_grid: Vec<f64>,
    /// Settling threshold on |dT/dt| (degC/s).
    pub epsilon: f64,
    /// Longest dwell per duty (s).
    pub t_max: f64,
    /// Sensor sampling rate (Hz).
    pub f_s: f64,
    pub f_pwm: f64,
    /// Window of the slope regression (s).
    pub slope_window: f64,
    /// Consecutive one-second slope checks below `epsilon` that end a dwell.
    pub settle_checks: usize,
    /// Fraction of the dwell averaged for the steady-state reading.
    pub tail_fraction: f64,
    /// Assumed series resistance subtracted from the measured total (ohm).
    pub r_ser_estimate: f64,
    /// Duty of the resistance measurement.
    pub resistance_duty: f64,
    pub resistance_samples: usize,
    /// Currents below this floor mark an open circuit (A).
    pub current_floor: f64,
    /// The sweep stops once a reading comes this close to the melt temperature.
    pub melt_margin: f64,
    /// Duties of the identification step.
    pub step_duties: (f64, f64),
    /// Length of the recorded step response (s).
    pub step_duration: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            duty_grid: (0..=15).map(|i| i as f64 * 0.02).collect(),
            epsilon: 0.01,
            t_max: 300.0,
            f_s: 1000.0,
            f_pwm: 1000.0,
            slope_window: 5.0,
            settle_checks: 5,
            tail_fraction: 0.1,
            r_ser_estimate: 3.0,
            resistance_duty: 0.05,
            resistance_samples: 7,
            current_floor: 1e-3,
            melt_margin: 3.0,
            step_duties: (0.04, 0.12),
            step_duration: 240.0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(SkinError::validation(m.to_string()));
        if self.duty_grid.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return fail("duty grid values must lie in [0, 1]");
        }
        if self.duty_grid.windows(2).any(|w| w[1] <= w[0]) {
            return fail("duty grid must be strictly ascending");
        }
        let positive = [
            self.epsilon,
            self.t_max,
            self.f_s,
            self.f_pwm,
            self.slope_window,
            self.step_duration,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return fail("epsilon, t_max, f_s, f_pwm, slope_window and step_duration must be positive");
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return fail("tail_fraction must lie in (0, 1]");
        }
        if self.resistance_samples < 5 {
            return fail("resistance measurement needs at least 5 samples");
        }
        if self.settle_checks == 0 {
            return fail("settle_checks must be at least 1");
        }
        Ok(())
    }
}

/// Running simulation of one plant with noisy instruments.
pub struct PlantSim {
    plant: PlantModel,
    dt: f64,
    enthalpy: f64,
    pub t: f64,
    rng: ChaCha8Rng,
    sensor: Option<Normal<f64>>,
    current: Option<Normal<f64>>,
}

impl PlantSim {
    pub fn new(plant: &PlantModel, f_s: f64) -> Result<Self> {
        plant.validate()?;
        let dt = 1.0 / f_s;
        if dt > plant.thermal.max_dt() * (1.0 + 1e-12) {
            return Err(SkinError::validation(format!(
                "sampling period {dt} s exceeds the integration limit {} s",
                plant.thermal.max_dt()
            )));
        }
        let normal = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).expect("positive std"));
        Ok(PlantSim {
            plant: *plant,
            dt,
            enthalpy: 0.0,
            t: 0.0,
            rng: ChaCha8Rng::seed_from_u64(plant.seed),
            sensor: normal(plant.sensor_noise),
            current: normal(plant.current_noise),
        })
    }

    pub fn temperature(&self) -> f64 {
        self.plant.thermal.state_of(self.enthalpy).0
    }

    /// Advances one sample period at `duty` and returns the sensor reading.
    pub fn step(&mut self, duty: f64) -> f64 {
        let th = &self.plant.thermal;
        let q = th.eta * duty * self.plant.full_power() - th.g_th * (self.temperature() - th.t_amb);
        self.enthalpy += self.dt * q;
        self.t += self.dt;
        let noise = self.sensor.map_or(0.0, |n| n.sample(&mut self.rng));
        self.temperature() + noise
    }

    /// One (V, I) reading during the on-phase of the PWM.
    pub fn measure_vi(&mut self) -> (f64, f64) {
        let v = self.plant.v;
        let i = if self.plant.open_circuit {
            0.0
        } else {
            v / (self.plant.r_h + self.plant.r_ser)
        };
        let noise = self.current.map_or(0.0, |n| n.sample(&mut self.rng));
        (v, (i + noise).max(0.0))
    }
}

/// Measured resistances of one voxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceEstimate {
    pub r_tot: f64,
    pub r_h: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of `V/I` over the readings, less the assumed series resistance.
pub fn resistance_from_samples(
    samples: &[(f64, f64)],
    r_ser_estimate: f64,
    current_floor: f64,
) -> Result<ResistanceEstimate> {
    if samples.is_empty() {
        return Err(SkinError::validation("no (V, I) samples"));
    }
    let mut currents: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if median(&mut currents) < current_floor {
        return Err(SkinError::infeasible("open circuit: heater current below floor"));
    }
    let mut ratios: Vec<f64> = samples
        .iter()
        .filter(|s| s.1 >= current_floor)
        .map(|s| s.0 / s.1)
        .collect();
    let r_tot = median(&mut ratios);
    Ok(ResistanceEstimate {
        r_tot,
        r_h: r_tot - r_ser_estimate,
    })
}

pub fn measure_resistance(sim: &mut PlantSim, cfg: &CalibrationConfig) -> Result<ResistanceEstimate> {
    let per_period = (cfg.f_s / cfg.f_pwm).max(1.0).round() as usize;
    let mut samples = Vec::with_capacity(cfg.resistance_samples);
    for _ in 0..cfg.resistance_samples {
        samples.push(sim.measure_vi());
        for _ in 0..per_period {
            sim.step(cfg.resistance_duty);
        }
    }
    resistance_from_samples(&samples, cfg.r_ser_estimate, cfg.current_floor)
}

/// Steady-state reading at one duty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub duty: f64,
    /// Tail-window mean temperature (degC).
    pub temperature: f64,
    /// Dwell length (s).
    pub dwell: f64,
    /// False when `t_max` elapsed before the slope settled.
    pub settled: bool,
}

/// Least-squares slope of equally spaced readings.
fn regression_slope(y: &[f64], dt: f64) -> f64 {
    let n = y.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - tm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    sxy / sxx / dt
}

/// Holds `duty` until the slope settles or `t_max` elapses.
pub fn dwell(sim: &mut PlantSim, duty: f64, cfg: &CalibrationConfig) -> SweepSample {
    let per_second = cfg.f_s.round().max(1.0) as usize;
    let window = ((cfg.slope_window * cfg.f_s).round() as usize).max(2);
    let limit = (cfg.t_max * cfg.f_s).round() as usize;
    let mut readings = Vec::with_capacity(limit.min(1 << 16));
    let mut calm = 0;
    let mut settled = false;
    while readings.len() < limit {
        readings.push(sim.step(duty));
        let n = readings.len();
        if n >= window && n % per_second == 0 {
            let slope = regression_slope(&readings[n - window..], 1.0 / cfg.f_s);
            calm = if slope.abs() < cfg.epsilon { calm + 1 } else { 0 };
            if calm >= cfg.settle_checks {
                settled = true;
                break;
            }
        }
    }
    let n = readings.len();
    let tail = ((n as f64 * cfg.tail_fraction).ceil() as usize).clamp(1, n);
    SweepSample {
        duty,
        temperature: readings[n - tail..].iter().sum::<f64>() / tail as f64,
        dwell: n as f64 / cfg.f_s,
        settled,
    }
}

/// Steps through the duty grid from the current state. The sweep ends early
/// once a reading nears the melt temperature, which keeps the voxel out of
/// the latent plateau.
pub fn duty_sweep(sim: &mut PlantSim, cfg: &CalibrationConfig) -> Result<Vec<SweepSample>> {
    cfg.validate()?;
    let ceiling = sim.plant.thermal.t_m - cfg.melt_margin;
    let mut out = Vec::with_capacity(cfg.duty_grid.len());
    for &d in &cfg.duty_grid {
        let s = dwell(sim, d, cfg);
        out.push(s);
        if s.temperature >= ceiling {
            break;
        }
    }
    Ok(out)
}

/// Monotone temperature-versus-duty fit and its inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseDutyMap {
    /// `(duty, temperature)` knots, strictly increasing in both.
    pub knots: Vec<(f64, f64)>,
}

impl InverseDutyMap {
    pub fn duty_range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn temperature_range(&self) -> (f64, f64) {
        (self.knots[0].1, self.knots[self.knots.len() - 1].1)
    }

    /// Fitted temperature at `duty`, clamped to the knot range.
    pub fn temperature_at(&self, duty: f64) -> f64 {
        let k = &self.knots;
        if duty <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if duty <= w[1].0 {
                let s = (duty - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + s * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }

    /// Duty whose fitted temperature equals `target`, by bisection.
    pub fn duty_for(&self, target: f64) -> Result<f64> {
        let (t_lo, t_hi) = self.temperature_range();
        if !(target >= t_lo && target <= t_hi) {
            return Err(SkinError::OutOfRange(format!(
                "target {target:.3} degC outside calibrated range [{t_lo:.3}, {t_hi:.3}]"
            )));
        }
        let (mut lo, mut hi) = self.duty_range();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.temperature_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Isotonic regression of temperature on duty over the settled samples,
/// with pooled blocks collapsed to single knots so the map is invertible.
pub fn fit_inverse_map(samples: &[SweepSample]) -> Result<InverseDutyMap> {
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.settled)
        .map(|s| (s.duty, s.temperature))
        .collect();
    if pts.len() < 3 {
        return Err(SkinError::validation(format!(
            "need at least 3 settled samples, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // pool adjacent violators; each block keeps (sum duty, sum temperature, count)
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for (d, t) in pts {
        blocks.push((d, t, 1.0));
        while blocks.len() >= 2 {
            let b = blocks[blocks.len() - 1];
            let a = blocks[blocks.len() - 2];
            if a.1 / a.2 >= b.1 / b.2 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (a.0 + b.0, a.1 + b.1, a.2 + b.2);
            } else {
                break;
            }
        }
    }
    let knots: Vec<(f64, f64)> = blocks.iter().map(|b| (b.0 / b.2, b.1 / b.2)).collect();
    if knots.len() < 2 {
        return Err(SkinError::validation("temperature does not increase with duty"));
    }
    Ok(InverseDutyMap { knots })
}

/// Result of a step identification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFit {
    pub tau: f64,
    pub t_start: f64,
    pub t_final: f64,
    /// Root mean square residual (degC).
    pub rms: f64,
}

/// Least-squares fit of `T(t) = T_final + (T_start - T_final) exp(-t/tau)`.
/// For fixed `tau` the model is linear, so only `tau` is searched.
pub fn fit_first_order(readings: &[f64], dt: f64) -> Result<StepFit> {
    if readings.len() < 10 {
        return Err(SkinError::validation("step response too short to fit"));
    }
    // centring keeps the closed-form residual free of cancellation
    let mean = readings.iter().sum::<f64>() / readings.len() as f64;
    let centred: Vec<f64> = readings.iter().map(|y| y - mean).collect();
    let readings = &centred[..];
    let syy: f64 = readings.iter().map(|y| y * y).sum();
    let linear = |tau: f64| -> (f64, f64, f64) {
        // basis 1 and e_i = r^i with r = exp(-dt/tau); T = a + b e
        let r = (-dt / tau).exp();
        let (mut s1, mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut e = 1.0;
        for &y in readings {
            s1 += 1.0;
            se += e;
            see += e * e;
            sy += y;
            sey += e * y;
            e *= r;
        }
        let det = s1 * see - se * se;
        let a = (see * sy - se * sey) / det;
        let b = (s1 * sey - se * sy) / det;
        (a, b, (syy - a * sy - b * sey).max(0.0))
    };
    let span = dt * readings.len() as f64;
    let (mut lo, mut hi) = ((dt).ln(), (20.0 * span).ln());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| linear(x.exp()).2;
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let tau = (0.5 * (lo + hi)).exp();
    let (a, b, sse) = linear(tau);
    Ok(StepFit {
        tau,
        t_start: mean + a + b,
        t_final: mean + a,
        rms: (sse / readings.len() as f64).sqrt(),
    })
}

/// Settles at `d0`, steps to `d1` and fits a first-order response.
pub fn step_identify(sim: &mut PlantSim, d0: f64, d1: f64, cfg: &CalibrationConfig) -> Result<StepFit> {
    if !(0.0..=1.0).contains(&d0) || !(0.0..=1.0).contains(&d1) {
        return Err(SkinError::validation("step duties must lie in [0, 1]"));
    }
    if d1 <= d0 {
        return Err(SkinError::validation(format!(
            "degenerate step: d1 {d1} must exceed d0 {d0}"
        )));
    }
    dwell(sim, d0, cfg);
    let n = (cfg.step_duration * cfg.f_s).round() as usize;
    let readings: Vec<f64> = (0..n).map(|_| sim.step(d1)).collect();
    let fit = fit_first_order(&readings, 1.0 / cfg.f_s)?;
    let noise = sim.plant.sensor_noise;
    let amplitude = (fit.t_final - fit.t_start).abs();
    if amplitude <= 3.0 * noise.max(1e-9) || fit.rms > 3.0 * noise + 0.02 * amplitude {
        return Err(SkinError::infeasible(format!(
            "step response is not first order: amplitude {amplitude:.3} degC, residual {:.3} degC",
            fit.rms
        )));
    }
    Ok(fit)
}

/// Output of the calibration of one voxel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub address: Address,
    pub r_h: f64,
    pub r_tot: f64,
    pub tau_th: f64,
    pub inverse_map: InverseDutyMap,
    pub duty_range: (f64, f64),
    pub temperature_range: (f64, f64),
    /// Duties whose dwell hit `t_max` before settling.
    pub unsettled: Vec<f64>,
}

impl CalibrationRecord {
    /// Feedforward duty for a target temperature.
    pub fn duty_for(&self, target: f64) -> Result<f64> {
        self.inverse_map.duty_for(target)
    }
}

/// Records keyed by `row,col`, with faulted voxels listed separately.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    pub records: BTreeMap<String, CalibrationRecord>,
    pub faults: BTreeMap<String, String>,
}

impl CalibrationStore {
    pub fn get(&self, a: Address) -> Option<&CalibrationRecord> {
        self.records.get(&a.key())
    }
}

pub fn calibrate_voxel(address: Address, plant: &PlantModel, cfg: &CalibrationConfig) -> Result<CalibrationRecord> {
    cfg.validate()?;
    let mut sim = PlantSim::new(plant, cfg.f_s)?;
    let res = measure_resistance(&mut sim, cfg)?;
    let mut sim = PlantSim::new(plant, cfg.f_s)?;
    let samples = duty_sweep(&mut sim, cfg)?;
    let inverse_map = fit_inverse_map(&samples)?;
    let mut step_sim = PlantSim::new(
        &PlantModel {
            seed: plant.seed.wrapping_add(1),
            ..*plant
        },
        cfg.f_s,
    )?;
    let (d0, d1) = cfg.step_duties;
    let fit = step_identify(&mut step_sim, d0, d1, cfg)?;
    Ok(CalibrationRecord {
        address,
        r_h: res.r_h,
        r_tot: res.r_tot,
        tau_th: fit.tau,
        duty_range: inverse_map.duty_range(),
        temperature_range: inverse_map.temperature_range(),
        inverse_map,
        unsettled: samples.iter().filter(|s| !s.settled).map(|s| s.duty).collect(),
    })
}

/// Calibrates every plant; per-voxel failures become faults.
pub fn calibrate_all(plants: &[(Address, PlantModel)], cfg: &CalibrationConfig) -> Result<CalibrationStore> {
    cfg.validate()?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(plants.len().max(1));
    let chunk = plants.len().div_ceil(workers).max(1);
    let results: Vec<Result<CalibrationRecord>> = std::thread::scope(|scope| {
        let handles: Vec<_> = plants
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|(a, p)| calibrate_voxel(*a, p, cfg))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("calibration worker panicked"))
            .collect()
    });
    let mut store = CalibrationStore::default();
    for ((a, _), result) in plants.iter().zip(results) {
        match result {
            Ok(r) => {
                store.records.insert(a.key(), r);
            }
            Err(e) => {
                store.faults.insert(a.key(), e.to_string());
            }
        }
    }
    Ok(store)
}

/// Steady-state temperatures reached when every calibrated voxel is driven
/// at its feedforward duty for `target`.
pub fn closed_loop_temperatures(
    plants: &[(Address, PlantModel)],
    store: &CalibrationStore,
    target: f64,
) -> Result<Vec<(Address, f64)>> {
    let mut out = Vec::new();
    for (a, p) in plants {
        if let Some(r) = store.get(*a) {
            out.push((*a, p.steady_temperature(r.duty_for(target)?)));
        }
    }
    Ok(out)
}

/// Max minus min of the temperatures.
pub fn spread(temps: &[(Address, f64)]) -> f64 {
    let (lo, hi) = temps
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, t)| {
            (lo.min(*t), hi.max(*t))
        });
    if temps.is_empty() {
        0.0
    } else {
        hi - lo
    }
}
