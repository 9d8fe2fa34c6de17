//! Power-budgeted staggering of voxel heating and melt-front equalization.
//!
//! Heating jobs are non-preemptive: each voxel receives one contiguous heat
//! interval. Cooling draws no electrical power, so cool intervals are
//! reported but never constrained.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationRecord, CalibrationStore};
use crate::error::{Result, SkinError};
use crate::geometry::{Address, VoxelGrid};
use crate::thermal::{heater_resistance, power_from_resistance, HeaterParams, Simulator, ThermalParams, ThermalState};

/// Relative slack on power comparisons.
const POWER_TOL: f64 = 1e-9;

pub const MAX_BRUTE_FORCE_JOBS: usize = 6;

/// Cap on the placement outcomes visited per order by the budget envelope.
pub const MAX_BUDGET_LEVELS: usize = 256;

/// Electrical and thermal model of one voxel's heater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelDrive {
    pub thermal: ThermalParams,
    pub v: f64,
    pub r_h: f64,
    pub r_ser: f64,
}

/// How heat intervals are sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationModel {
    /// Loss-free `Q (R_h + R_ser) / (eta V^2 duty)`.
    ClosedForm,
    /// Melt completion from ambient under the enthalpy model.
    #[default]
    Simulated,
}

impl VoxelDrive {
    pub fn full_power(&self) -> f64 {
        power_from_resistance(self.v, self.r_h, self.r_ser, 1.0)
    }

    /// Energy to take the voxel from ambient to fully melted (J).
    pub fn melt_energy(&self) -> f64 {
        self.thermal.c_th * (self.thermal.t_m - self.thermal.t_amb) + self.thermal.q_melt
    }

    /// True when `duty` delivers more than the loss at the melt temperature.
    pub fn can_melt(&self, duty: f64) -> bool {
        self.thermal.eta * duty * self.full_power() > self.thermal.g_th * (self.thermal.t_m - self.thermal.t_amb)
    }

    /// Drive built from a calibration record. The record's steady-state map
    /// gives the conductance through its slope `eta P / G`, and the time
    /// constant then gives the heat capacity.
    pub fn from_record(record: &CalibrationRecord, nominal: &ThermalParams, v: f64) -> Result<Self> {
        let r_ser = record.r_tot - record.r_h;
        if !(record.r_h > 0.0 && r_ser > 0.0) {
            return Err(SkinError::validation(format!(
                "record {} has non-positive resistances",
                record.address
            )));
        }
        let knots = &record.inverse_map.knots;
        let n = knots.len() as f64;
        let (md, mt) = knots.iter().fold((0.0, 0.0), |(a, b), k| (a + k.0 / n, b + k.1 / n));
        let (sxy, sxx) = knots.iter().fold((0.0, 0.0), |(a, b), k| {
            (a + (k.0 - md) * (k.1 - mt), b + (k.0 - md) * (k.0 - md))
        });
        let slope = sxy / sxx;
        if !(slope.is_finite() && slope > 0.0) {
            return Err(SkinError::validation(format!(
                "record {} has a flat duty map",
                record.address
            )));
        }
        let p = power_from_resistance(v, record.r_h, r_ser, 1.0);
        let g_th = nominal.eta * p / slope;
        let thermal = ThermalParams {
            g_th,
            c_th: record.tau_th * g_th,
            ..*nominal
        };
        thermal.validate()?;
        Ok(VoxelDrive {
            thermal,
            v,
            r_h: record.r_h,
            r_ser,
        })
    }

    /// Melt completion time from ambient at constant `duty` under the lumped
    /// model without discretization: an exponential approach to `T_m`
    /// followed by melting at constant net power.
    pub fn predicted_melt_time(&self, duty: f64) -> Result<f64> {
        if !(duty > 0.0 && duty <= 1.0) {
            return Err(SkinError::validation(format!(
                "heating duty must lie in (0, 1], got {duty}"
            )));
        }
        if !self.can_melt(duty) {
            return Err(SkinError::infeasible(format!(
                "duty {duty:.4} cannot overcome the loss at the melt temperature"
            )));
        }
        let t = &self.thermal;
        let q = t.eta * duty * self.full_power();
        let net = q - t.g_th * (t.t_m - t.t_amb);
        Ok(t.time_constant() * (q / net).ln() + t.q_melt / net)
    }

    /// Heat time at `duty` from ambient.
    pub fn melt_time(&self, duty: f64, model: DurationModel) -> Result<f64> {
        if !(duty > 0.0 && duty <= 1.0) {
            return Err(SkinError::validation(format!(
                "heating duty must lie in (0, 1], got {duty}"
            )));
        }
        match model {
            DurationModel::ClosedForm => {
                Ok(self.thermal.q_melt * (self.r_h + self.r_ser) / (self.thermal.eta * self.v * self.v * duty))
            }
            DurationModel::Simulated => {
                if !self.can_melt(duty) {
                    return Err(SkinError::infeasible(format!(
                        "duty {duty:.4} cannot overcome the loss at the melt temperature"
                    )));
                }
                let t = &self.thermal;
                let sim = Simulator::with_power(t, self.full_power(), t.max_dt())?;
                let net = t.eta * duty * self.full_power() - t.g_th * (t.t_m - t.t_amb);
                let horizon = 10.0 * (self.melt_energy() / net + t.time_constant());
                sim.run_until(ThermalState::ambient(t), duty, |s| s.phase_fraction >= 1.0, horizon)?
                    .map(|s| s.t)
                    .ok_or_else(|| SkinError::infeasible("melt did not complete within the simulation horizon"))
            }
        }
    }

    /// Time for a fully melted voxel to solidify with the heater off.
    pub fn solidification_time(&self) -> Result<f64> {
        let t = &self.thermal;
        let sim = Simulator::with_power(t, self.full_power(), t.max_dt())?;
        let start = ThermalState {
            t: 0.0,
            temperature: t.t_m,
            phase_fraction: 1.0,
        };
        let horizon = 10.0 * (t.time_constant() + t.q_melt / (t.g_th * (t.t_m - t.t_amb)));
        sim.run_until(start, 0.0, |s| s.phase_fraction <= 0.0, horizon)?
            .map(|s| s.t)
            .ok_or_else(|| SkinError::infeasible("voxel did not solidify within the simulation horizon"))
    }
}

/// Drive models of every non-trimmed voxel: from its calibration record
/// when the store has one, otherwise from the nominal heater and thermal
/// parameters.
pub fn grid_drives(
    grid: &VoxelGrid,
    store: Option<&CalibrationStore>,
    heater: &HeaterParams,
    thermal: &ThermalParams,
) -> Result<BTreeMap<Address, VoxelDrive>> {
    heater.validate()?;
    thermal.validate()?;
    let nominal = VoxelDrive {
        thermal: *thermal,
        v: heater.v,
        r_h: heater_resistance(heater, grid.params.s_0),
        r_ser: heater.r_ser,
    };
    grid.active_addresses()
        .into_iter()
        .map(|a| {
            let drive = match store.and_then(|s| s.get(a)) {
                Some(record) => VoxelDrive::from_record(record, thermal, heater.v)?,
                None => nominal,
            };
            Ok((a, drive))
        })
        .collect()
}

/// Supply limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    /// Peak total power (W).
    pub peak: f64,
    #[serde(default)]
    pub branches: Vec<BranchLimit>,
}

/// Limit on the summed power of one harness branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchLimit {
    pub addresses: BTreeSet<Address>,
    pub limit: f64,
}

impl PowerBudget {
    pub fn new(peak: f64) -> Self {
        PowerBudget {
            peak,
            branches: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak.is_finite() && self.peak > 0.0) {
            return Err(SkinError::validation(format!(
                "power budget must be positive, got {}",
                self.peak
            )));
        }
        if self.branches.iter().any(|b| !(b.limit.is_finite() && b.limit > 0.0)) {
            return Err(SkinError::validation("branch limits must be positive"));
        }
        Ok(())
    }
}

/// Desired end state of a set of voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPhase {
    Melted,
    Solid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationRequest {
    pub addresses: BTreeSet<Address>,
    pub target: TargetPhase,
    /// Soft completion deadline (s).
    #[serde(default)]
    pub deadline: Option<f64>,
}

/// One heating job: constant power for a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub address: Address,
    /// Average power at the job's duty (W).
    pub power: f64,
    pub duration: f64,
    pub duty: f64,
    #[serde(default)]
    pub deadline: Option<f64>,
}

impl Job {
    pub fn energy(&self) -> f64 {
        self.power * self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Heat,
    Cool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub address: Address,
    pub kind: IntervalKind,
    pub start: f64,
    pub end: f64,
    pub duty: f64,
    /// Average electrical power over the interval (W).
    pub power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub intervals: Vec<Interval>,
    /// End of the last heat interval (s).
    pub makespan: f64,
}

impl Schedule {
    pub fn heat_intervals(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|i| i.kind == IntervalKind::Heat)
    }

    /// Power timeline: one event per heat start or end, ends before starts at
    /// equal times, with the total power after the event. The duty is the
    /// voxel's commanded duty after the event.
    pub fn timeline(&self) -> Vec<TimelineEvent> {
        let mut events: Vec<(f64, u8, Address, f64, f64)> = Vec::new();
        for i in self.heat_intervals() {
            events.push((i.start, 1, i.address, i.duty, i.power));
            events.push((i.end, 0, i.address, 0.0, -i.power));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut load = 0.0;
        events
            .into_iter()
            .map(|(t, _, address, duty, dp)| {
                load += dp;
                if load.abs() < 1e-12 {
                    load = 0.0;
                }
                TimelineEvent {
                    t,
                    address,
                    duty,
                    cumulative_power: load,
                }
            })
            .collect()
    }

    /// CSV projection of `timeline`: `t,voxel,duty,cumulative_power`, with
    /// the voxel written `row:col`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,voxel,duty,cumulative_power\n");
        for e in self.timeline() {
            let _ = writeln!(
                out,
                "{:.6},{}:{},{:.6},{:.6}",
                e.t, e.address.row, e.address.col, e.duty, e.cumulative_power
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub t: f64,
    pub address: Address,
    pub duty: f64,
    pub cumulative_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Power {
        t: f64,
        load: f64,
        limit: f64,
    },
    Branch {
        t: f64,
        branch: usize,
        load: f64,
        limit: f64,
    },
    Overlap {
        address: Address,
        t: f64,
    },
    Duty {
        address: Address,
        duty: f64,
    },
    Deadline {
        address: Address,
        end: f64,
        deadline: f64,
    },
}

fn over(load: f64, limit: f64) -> bool {
    load > limit * (1.0 + POWER_TOL)
}

fn load_at<'a>(intervals: impl Iterator<Item = &'a Interval>, t: f64) -> f64 {
    intervals.filter(|i| i.start <= t && t < i.end).map(|i| i.power).sum()
}

/// Event-sweep check of power limits, interval disjointness, duty range and
/// deadlines. Violations are returned, never raised.
pub fn validate_schedule(schedule: &Schedule, budget: &PowerBudget) -> Vec<Violation> {
    let mut out = Vec::new();
    let heat: Vec<&Interval> = schedule.heat_intervals().collect();
    let mut starts: Vec<f64> = heat.iter().map(|i| i.start).collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    for &t in &starts {
        let load = load_at(heat.iter().copied(), t);
        if over(load, budget.peak) {
            out.push(Violation::Power {
                t,
                load,
                limit: budget.peak,
            });
        }
        for (k, b) in budget.branches.iter().enumerate() {
            let load = load_at(heat.iter().copied().filter(|i| b.addresses.contains(&i.address)), t);
            if over(load, b.limit) {
                out.push(Violation::Branch {
                    t,
                    branch: k,
                    load,
                    limit: b.limit,
                });
            }
        }
    }
    let mut per_voxel: BTreeMap<Address, Vec<&Interval>> = BTreeMap::new();
    for i in &schedule.intervals {
        per_voxel.entry(i.address).or_default().push(i);
        if !(0.0..=1.0).contains(&i.duty) {
            out.push(Violation::Duty {
                address: i.address,
                duty: i.duty,
            });
        }
        if let Some(d) = i.deadline {
            if i.kind == IntervalKind::Heat && i.end > d {
                out.push(Violation::Deadline {
                    address: i.address,
                    end: i.end,
                    deadline: d,
                });
            }
        }
    }
    for (a, mut list) in per_voxel {
        list.sort_by(|x, y| x.start.total_cmp(&y.start));
        for w in list.windows(2) {
            if w[1].start < w[0].end - 1e-12 {
                out.push(Violation::Overlap {
                    address: a,
                    t: w[1].start,
                });
            }
        }
    }
    out
}

fn check_jobs(jobs: &[Job], budget: &PowerBudget) -> Result<()> {
    budget.validate()?;
    let mut seen = BTreeSet::new();
    for j in jobs {
        if !seen.insert(j.address) {
            return Err(SkinError::validation(format!("voxel {} requested twice", j.address)));
        }
        if !(j.power.is_finite() && j.power >= 0.0 && j.duration.is_finite() && j.duration >= 0.0) {
            return Err(SkinError::validation(format!(
                "job for {} has invalid power or duration",
                j.address
            )));
        }
        if over(j.power, budget.peak) {
            return Err(SkinError::infeasible(format!(
                "voxel {} needs {:.3} W, above the {:.3} W budget",
                j.address, j.power, budget.peak
            )));
        }
        for b in budget.branches.iter().filter(|b| b.addresses.contains(&j.address)) {
            if over(j.power, b.limit) {
                return Err(SkinError::infeasible(format!(
                    "voxel {} needs {:.3} W, above its {:.3} W branch limit",
                    j.address, j.power, b.limit
                )));
            }
        }
    }
    Ok(())
}

/// Peak load of an accepted placement test, or `None` when the placement
/// breaks a limit.
fn fits(placed: &[Interval], job: &Job, start: f64, peak: f64, branches: &[BranchLimit]) -> Option<f64> {
    let end = start + job.duration;
    let mut probes = vec![start];
    probes.extend(placed.iter().map(|i| i.start).filter(|&t| t > start && t < end));
    let branches: Vec<&BranchLimit> = branches.iter().filter(|b| b.addresses.contains(&job.address)).collect();
    let mut highest: f64 = 0.0;
    for &t in &probes {
        let load = load_at(placed.iter(), t) + job.power;
        if over(load, peak) {
            return None;
        }
        highest = highest.max(load);
        for b in &branches {
            let load = load_at(placed.iter().filter(|i| b.addresses.contains(&i.address)), t);
            if over(load + job.power, b.limit) {
                return None;
            }
        }
    }
    Some(highest)
}

/// Places jobs one at a time, in the given order, at their earliest start
/// that keeps every limit satisfied. Only time zero and the ends of placed
/// jobs can be earliest starts, because the load only drops at job ends.
///
/// Also returns the largest total load among the accepted placement tests.
/// Every peak limit from that load up to `peak` yields the same schedule.
fn earliest_fit(order: &[&Job], peak: f64, branches: &[BranchLimit]) -> (Schedule, f64) {
    let mut placed: Vec<Interval> = Vec::with_capacity(order.len());
    let mut highest: f64 = 0.0;
    for job in order {
        let mut candidates: Vec<f64> = std::iter::once(0.0).chain(placed.iter().map(|i| i.end)).collect();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let (start, load) = candidates
            .into_iter()
            .find_map(|s| fits(&placed, job, s, peak, branches).map(|l| (s, l)))
            .expect("the latest end always fits a job within the limits");
        highest = highest.max(load);
        placed.push(Interval {
            address: job.address,
            kind: IntervalKind::Heat,
            start,
            end: start + job.duration,
            duty: job.duty,
            power: job.power,
            deadline: job.deadline,
        });
    }
    let makespan = placed.iter().map(|i| i.end).fold(0.0, f64::max);
    placed.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.address.cmp(&b.address)));
    (
        Schedule {
            intervals: placed,
            makespan,
        },
        highest,
    )
}

/// Best earliest-fit schedule for a fixed order over every peak limit not
/// above the budget. A schedule built under a lower limit also respects the
/// budget, and taking the best over all lower limits makes the makespan
/// non-increasing in the budget.
///
/// Limits are visited from the budget downward, one per distinct placement
/// outcome. The search stops once the energy bound `sum(P t) / limit` reaches
/// the incumbent, once the largest job no longer fits, or after
/// `MAX_BUDGET_LEVELS` outcomes.
fn budget_envelope(order: &[&Job], budget: &PowerBudget, incumbent: Option<Schedule>) -> Option<Schedule> {
    let energy: f64 = order.iter().map(|j| j.energy()).sum();
    let longest = order.iter().map(|j| j.duration).fold(0.0, f64::max);
    let largest = order.iter().map(|j| j.power).fold(0.0, f64::max);
    let mut best = incumbent;
    let mut peak = budget.peak;
    for _ in 0..MAX_BUDGET_LEVELS {
        if let Some(b) = &best {
            if b.makespan <= longest || energy / peak >= b.makespan - 1e-12 {
                break;
            }
        }
        let (s, highest) = earliest_fit(order, peak, &budget.branches);
        if best.as_ref().is_none_or(|b| s.makespan < b.makespan - 1e-12) {
            best = Some(s);
        }
        peak = highest / (1.0 + POWER_TOL) / (1.0 + 1e-12);
        if over(largest, peak) || highest <= 0.0 {
            break;
        }
    }
    best
}

/// Greedy longest-job-first staggering: jobs sorted by energy, largest
/// first, each placed at its earliest feasible start.
pub fn plan_jobs(jobs: &[Job], budget: &PowerBudget) -> Result<Schedule> {
    check_jobs(jobs, budget)?;
    let mut order: Vec<&Job> = jobs.iter().collect();
    order.sort_by(|a, b| {
        b.energy()
            .total_cmp(&a.energy())
            .then(b.duration.total_cmp(&a.duration))
            .then(a.address.cmp(&b.address))
    });
    Ok(budget_envelope(&order, budget, None).unwrap_or_default())
}

/// Minimum makespan over every placement order, each under the same budget
/// envelope as the greedy planner.
pub fn brute_force_schedule(jobs: &[Job], budget: &PowerBudget) -> Result<Schedule> {
    check_jobs(jobs, budget)?;
    if jobs.len() > MAX_BRUTE_FORCE_JOBS {
        return Err(SkinError::validation(format!(
            "exhaustive search is limited to {MAX_BRUTE_FORCE_JOBS} voxels, got {}",
            jobs.len()
        )));
    }
    let mut order: Vec<&Job> = jobs.iter().collect();
    order.sort_by_key(|a| a.address);
    let mut best = budget_envelope(&order, budget, None);
    let n = order.len();
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            best = budget_envelope(&order, budget, best);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best.unwrap_or_default())
}

/// Options of `plan_schedule`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanOptions {
    pub duration_model: DurationModel,
    /// Scale duties so every voxel in a request melts at the same time.
    pub equalize: bool,
}

/// Turns activation requests into a budget-respecting schedule.
pub fn plan_schedule(
    requests: &[ActivationRequest],
    budget: &PowerBudget,
    drives: &BTreeMap<Address, VoxelDrive>,
    options: PlanOptions,
) -> Result<Schedule> {
    let mut jobs = Vec::new();
    let mut cool = Vec::new();
    for req in requests {
        let group: Vec<(Address, VoxelDrive)> = req
            .addresses
            .iter()
            .map(|a| {
                drives
                    .get(a)
                    .map(|d| (*a, *d))
                    .ok_or_else(|| SkinError::validation(format!("no drive model for voxel {a}")))
            })
            .collect::<Result<_>>()?;
        match req.target {
            TargetPhase::Melted => {
                let duties = if options.equalize {
                    equalize_melt_fronts(&group)?
                } else {
                    group.iter().map(|(a, _)| (*a, 1.0)).collect()
                };
                for (a, d) in &group {
                    let duty = duties[a];
                    jobs.push(Job {
                        address: *a,
                        power: duty * d.full_power(),
                        duration: d.melt_time(duty, options.duration_model)?,
                        duty,
                        deadline: req.deadline,
                    });
                }
            }
            TargetPhase::Solid => {
                for (a, d) in &group {
                    cool.push(Interval {
                        address: *a,
                        kind: IntervalKind::Cool,
                        start: 0.0,
                        end: d.solidification_time()?,
                        duty: 0.0,
                        power: 0.0,
                        deadline: req.deadline,
                    });
                }
            }
        }
    }
    let mut schedule = plan_jobs(&jobs, budget)?;
    let heat_end: BTreeMap<Address, f64> = schedule.heat_intervals().map(|i| (i.address, i.end)).collect();
    for (a, end) in heat_end {
        let d = drives[&a];
        schedule.intervals.push(Interval {
            address: a,
            kind: IntervalKind::Cool,
            start: end,
            end: end + d.solidification_time()?,
            duty: 0.0,
            power: 0.0,
            deadline: None,
        });
    }
    schedule.intervals.extend(cool);
    schedule
        .intervals
        .sort_by(|a, b| a.start.total_cmp(&b.start).then(a.address.cmp(&b.address)));
    Ok(schedule)
}

/// Per-voxel duty making the predicted melt completion equal across a group.
/// The slowest voxel runs at duty 1 and every other voxel is slowed to match
/// it. Predictions use `VoxelDrive::predicted_melt_time`, so with negligible
/// losses the duty is proportional to melt energy over full-duty power.
pub fn equalize_melt_fronts(group: &[(Address, VoxelDrive)]) -> Result<BTreeMap<Address, f64>> {
    let mut full = Vec::with_capacity(group.len());
    for (a, d) in group {
        let t = d
            .predicted_melt_time(1.0)
            .map_err(|_| SkinError::infeasible(format!("voxel {a} cannot melt at full duty")))?;
        full.push(t);
    }
    let target = full.iter().copied().fold(0.0, f64::max);
    let mut out = BTreeMap::new();
    for ((a, d), t1) in group.iter().zip(full) {
        if t1 >= target {
            out.insert(*a, 1.0);
            continue;
        }
        // predicted time falls strictly with duty above the melt threshold
        let t = &d.thermal;
        let mut lo = t.g_th * (t.t_m - t.t_amb) / (t.eta * d.full_power());
        let mut hi = 1.0;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match d.predicted_melt_time(mid) {
                Ok(tm) if tm <= target => hi = mid,
                _ => lo = mid,
            }
        }
        out.insert(*a, hi);
    }
    Ok(out)
}

/// Simulated melt completion times of a group at the given duties, and their
/// spread `(max - min) / mean`.
pub fn melt_completion_spread(
    group: &[(Address, VoxelDrive)],
    duties: &BTreeMap<Address, f64>,
) -> Result<(Vec<f64>, f64)> {
    let times: Vec<f64> = group
        .iter()
        .map(|(a, d)| d.melt_time(duties.get(a).copied().unwrap_or(1.0), DurationModel::Simulated))
        .collect::<Result<_>>()?;
    if times.is_empty() {
        return Ok((times, 0.0));
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(*t), h.max(*t)));
    Ok((times, (hi - lo) / mean))
}
