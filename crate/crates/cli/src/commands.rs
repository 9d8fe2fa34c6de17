use std::collections::BTreeSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use voxskin_core::calibration::{calibrate_all, closed_loop_temperatures, plant_population, spread, CalibrationStore};
use voxskin_core::design::{design_sweep, iso_stiffness, sweep_values, SweepParameter, SweepState};
use voxskin_core::geometry::{build_grid, Address, VoxelGrid};
use voxskin_core::joints::{
    evaluate_pattern, preset_specs, synthesize_pattern, ActivationPattern, JointKind, JointSpec, SizeClass,
};
use voxskin_core::mechanics::Mode;
use voxskin_core::provenance::Provenance;
use voxskin_core::scheduler::{
    grid_drives, plan_schedule, validate_schedule, ActivationRequest, BranchLimit, DurationModel, PlanOptions,
    PowerBudget, TargetPhase,
};
use voxskin_core::thermal::simulate_cycle;
use voxskin_core::{Result, SkinError};
use voxskin_service::{Session, SessionConfig};

use crate::config::{read_json, ToolConfig};

#[derive(Debug, Parser)]
#[command(
    name = "voxskin",
    version,
    about = "Design, simulation and activation planning for voxel lattice skins"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Tool configuration JSON (design, mechanics, heater, thermal, calibration, plant).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Design parameter JSON; overrides the `params` section of --config.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed of every stochastic element.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON is always written; csv adds the command's CSV projection.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameter sweep with power-law fits and optional iso-stiffness pairs.
    Design(DesignArgs),
    /// Thermal cycle of one voxel, or stiffness of an activation pattern.
    Simulate(SimulateArgs),
    /// Per-voxel calibration of a simulated population.
    Calibrate(CalibrateArgs),
    /// Joint pattern synthesis and evaluation.
    Synth(SynthArgs),
    /// Power-budgeted heating schedule.
    Schedule(ScheduleArgs),
    /// HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DesignArgs {
    /// t_f, t_sheet or N_theta.
    #[arg(long = "param")]
    pub parameter: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
    /// Explicit comma-separated values instead of --from/--to/--steps.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// solid or melted.
    #[arg(long, default_value = "solid")]
    pub state: String,
    /// Stiffness level for iso-stiffness (t_f, t_sheet) pairs.
    #[arg(long)]
    pub iso_level: Option<f64>,
    #[arg(long, default_value = "axial")]
    pub iso_mode: String,
    /// Sheet thickness search range `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0])]
    pub iso_range: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimTarget {
    Cycle,
    Stiffness,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimTarget::Cycle)]
    pub target: SimTarget,
    /// Integration step (s); defaults to the stability limit.
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub pattern: PatternArgs,
}

#[derive(Debug, Args, Serialize, Default)]
pub struct PatternArgs {
    /// Canonical preset name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Pattern JSON file (as written by `synth`).
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// Semicolon-separated `row,col` list.
    #[arg(long)]
    pub addresses: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// Number of voxels, taken row-major from the grid.
    #[arg(long)]
    pub voxels: Option<usize>,
    /// Common target of the closed-loop check (degC).
    #[arg(long, default_value_t = 50.0)]
    pub target: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// bend_unilateral, hinge_bilateral, twist, shear or axial_compress.
    #[arg(long)]
    pub joint: Option<String>,
    /// small or large.
    #[arg(long, default_value = "small")]
    pub size: String,
    /// Anchor `row,col`; defaults to the preset anchor of the joint kind.
    #[arg(long)]
    pub location: Option<String>,
    #[arg(long)]
    pub band_width: Option<usize>,
    /// Full rows melted by axial_compress.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub stagger: Option<usize>,
    /// Canonical preset name instead of an explicit joint.
    #[arg(long, conflicts_with = "joint")]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationArg {
    ClosedForm,
    Simulated,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    /// Peak power budget (W).
    #[arg(long)]
    pub budget: f64,
    /// JSON array of activation requests.
    #[arg(long)]
    pub requests: Option<PathBuf>,
    /// JSON array of branch limits `{addresses, limit}`.
    #[arg(long)]
    pub branches: Option<PathBuf>,
    /// Calibration output whose records size each voxel.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub equalize: bool,
    #[arg(long, value_enum, default_value_t = DurationArg::Simulated)]
    pub duration_model: DurationArg,
    #[command(flatten)]
    pub pattern: PatternArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

/// Runs a command and returns the files it wrote.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let g = &cli.global;
    let cfg = ToolConfig::load(g.config.as_deref(), g.params.as_deref())?;
    match &cli.command {
        Command::Design(a) => design(g, &cfg, a),
        Command::Simulate(a) => simulate(g, &cfg, a),
        Command::Calibrate(a) => calibrate(g, &cfg, a),
        Command::Synth(a) => synth(g, &cfg, a),
        Command::Schedule(a) => schedule(g, &cfg, a),
        Command::Serve(a) => serve(&cfg, a).map(|()| Vec::new()),
    }
}

/// Writes `<name>.json` (and `<name>.csv` when asked) stamped with the
/// version and the hash of everything that determined the result.
struct Writer<'a> {
    global: &'a GlobalArgs,
    name: &'static str,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(global: &'a GlobalArgs, name: &'static str, cfg: &ToolConfig, args: &impl Serialize) -> Result<Self> {
        let inputs = json!({"command": name, "args": args, "config": cfg, "seed": global.seed});
        Ok(Writer {
            global,
            name,
            provenance: Provenance::of(&inputs)?,
            written: Vec::new(),
        })
    }

    fn path(&self, ext: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.global.out)
            .map_err(|e| SkinError::Io(format!("{}: {e}", self.global.out.display())))?;
        Ok(self.global.out.join(format!("{}.{ext}", self.name)))
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<()> {
        fs::write(&path, text).map_err(|e| SkinError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, result: &impl Serialize) -> Result<()> {
        let doc = json!({
            "version": self.provenance.version,
            "config_hash": self.provenance.config_hash,
            "command": self.name,
            "seed": self.global.seed,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        let path = self.path("json")?;
        self.write(path, &text)
    }

    fn csv(&mut self, body: impl FnOnce() -> String) -> Result<()> {
        if self.global.format != Format::Csv {
            return Ok(());
        }
        let text = self.provenance.csv_header() + &body();
        let path = self.path("csv")?;
        self.write(path, &text)
    }
}

fn design(g: &GlobalArgs, cfg: &ToolConfig, a: &DesignArgs) -> Result<Vec<PathBuf>> {
    let parameter: SweepParameter = a.parameter.parse()?;
    let state: SweepState = a.state.parse()?;
    let values = if a.values.is_empty() {
        let (from, to) = match (a.from, a.to) {
            (Some(f), Some(t)) => (f, t),
            _ => return Err(SkinError::validation("give --from and --to, or --values")),
        };
        sweep_values(parameter, from, to, a.steps)?
    } else {
        a.values.clone()
    };
    let sweep = design_sweep(&cfg.params, parameter, &values, state, &cfg.mechanics)?;
    let iso = match a.iso_level {
        Some(level) => {
            let mode: Mode = a.iso_mode.parse()?;
            let range = match a.iso_range.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => return Err(SkinError::validation("--iso-range takes two values lo,hi")),
            };
            let t_f: Vec<f64> = if parameter == SweepParameter::MetalThickness {
                values.clone()
            } else {
                vec![cfg.params.t_f]
            };
            Some(iso_stiffness(
                &cfg.params,
                mode,
                state,
                level,
                &t_f,
                range,
                &cfg.mechanics,
            )?)
        }
        None => None,
    };
    let mut w = Writer::new(g, "design", cfg, a)?;
    w.json(&json!({"sweep": sweep, "iso_stiffness": iso}))?;
    w.csv(|| sweep.to_csv())?;
    if let Some(e) = &sweep.fit_error {
        return Err(SkinError::validation(format!("sweep written but not fitted: {e}")));
    }
    Ok(w.written)
}

fn parse_addresses(list: &str) -> Result<BTreeSet<Address>> {
    list.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect()
}

/// Pattern from exactly one of --preset, --pattern or --addresses; `None`
/// when none is given.
fn resolve_pattern(grid: &VoxelGrid, p: &PatternArgs) -> Result<Option<ActivationPattern>> {
    let given = [p.preset.is_some(), p.pattern.is_some(), p.addresses.is_some()];
    if given.iter().filter(|x| **x).count() > 1 {
        return Err(SkinError::validation(
            "give only one of --preset, --pattern, --addresses",
        ));
    }
    let pattern = if let Some(name) = &p.preset {
        Some(preset(grid, name)?)
    } else if let Some(path) = &p.pattern {
        let v: Value = read_json(path)?;
        // accept both a bare pattern and a `synth` artifact
        let inner = v.pointer("/result/pattern").cloned().unwrap_or(v);
        Some(serde_json::from_value::<ActivationPattern>(inner)?)
    } else if let Some(list) = &p.addresses {
        Some(ActivationPattern::new("custom", parse_addresses(list)?))
    } else {
        None
    };
    if let Some(p) = &pattern {
        p.validate(grid)?;
    }
    Ok(pattern)
}

fn preset(grid: &VoxelGrid, name: &str) -> Result<ActivationPattern> {
    let specs = preset_specs(grid);
    let spec = specs.iter().find(|(n, _)| n == name).map(|(_, s)| s).ok_or_else(|| {
        let names: Vec<&str> = specs.iter().map(|(n, _)| n.as_str()).collect();
        SkinError::validation(format!("unknown preset {name:?}; expected one of {}", names.join(", ")))
    })?;
    let mut p = synthesize_pattern(spec, grid)?;
    p.label = name.to_string();
    Ok(p)
}

fn simulate(g: &GlobalArgs, cfg: &ToolConfig, a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let mut w = Writer::new(g, "simulate", cfg, a)?;
    match a.target {
        SimTarget::Cycle => {
            let dt = a.dt.unwrap_or(cfg.thermal.max_dt());
            let report = simulate_cycle(&cfg.thermal, &cfg.heater, cfg.params.s_0, dt)?;
            w.json(&report)?;
            w.csv(|| report.trace.to_csv())?;
        }
        SimTarget::Stiffness => {
            let grid = build_grid(&cfg.params)?;
            let pattern = resolve_pattern(&grid, &a.pattern)?.unwrap_or_else(|| ActivationPattern::new("empty", []));
            let report = evaluate_pattern(&grid, &pattern, &cfg.mechanics)?;
            w.json(&json!({"pattern": pattern, "report": report}))?;
            w.csv(|| report.after.to_csv())?;
        }
    }
    Ok(w.written)
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationSummary {
    voxels: usize,
    calibrated: usize,
    faults: usize,
    target: f64,
    closed_loop_spread: f64,
    open_loop_spread: f64,
}

fn calibrate(g: &GlobalArgs, cfg: &ToolConfig, a: &CalibrateArgs) -> Result<Vec<PathBuf>> {
    let grid = build_grid(&cfg.params)?;
    let total = grid.rows * grid.cols;
    let n = a.voxels.unwrap_or(total);
    if n == 0 || n > total {
        return Err(SkinError::validation(format!("--voxels must lie in 1..={total}")));
    }
    let nominal = cfg.nominal_plant(g.seed);
    let mut plants = plant_population(&nominal, grid.rows, grid.cols, cfg.plant.spread, g.seed);
    plants.truncate(n);
    for (addr, p) in plants.iter_mut() {
        p.open_circuit = cfg.plant.open_circuit.contains(addr);
    }
    let store = calibrate_all(&plants, &cfg.calibration)?;
    let closed = closed_loop_temperatures(&plants, &store, a.target)?;
    // uncalibrated reference: every voxel at the duty that brings the
    // nominal plant to the target
    let t = &nominal.thermal;
    let nominal_duty = (t.g_th * (a.target - t.t_amb) / (t.eta * nominal.full_power())).clamp(0.0, 1.0);
    let open: Vec<(Address, f64)> = plants
        .iter()
        .filter(|(addr, _)| store.get(*addr).is_some())
        .map(|(addr, p)| (*addr, p.steady_temperature(nominal_duty)))
        .collect();
    let summary = CalibrationSummary {
        voxels: n,
        calibrated: store.records.len(),
        faults: store.faults.len(),
        target: a.target,
        closed_loop_spread: spread(&closed),
        open_loop_spread: spread(&open),
    };
    let mut w = Writer::new(g, "calibrate", cfg, a)?;
    w.json(&json!({"summary": summary, "store": store}))?;
    w.csv(|| {
        let mut s = String::from("voxel,r_h,r_tot,tau_th,duty_min,duty_max,t_min,t_max\n");
        for r in store.records.values() {
            s.push_str(&format!(
                "{}:{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.address.row,
                r.address.col,
                r.r_h,
                r.r_tot,
                r.tau_th,
                r.duty_range.0,
                r.duty_range.1,
                r.temperature_range.0,
                r.temperature_range.1
            ));
        }
        s
    })?;
    Ok(w.written)
}

fn parse_size(s: &str) -> Result<SizeClass> {
    match s {
        "small" => Ok(SizeClass::Small),
        "large" => Ok(SizeClass::Large),
        other => Err(SkinError::validation(format!(
            "unknown size {other:?}; expected small or large"
        ))),
    }
}

fn synth(g: &GlobalArgs, cfg: &ToolConfig, a: &SynthArgs) -> Result<Vec<PathBuf>> {
    let grid = build_grid(&cfg.params)?;
    let pattern = match (&a.preset, &a.joint) {
        (Some(name), None) => preset(&grid, name)?,
        (None, Some(kind)) => {
            let kind: JointKind = kind.parse()?;
            let size = parse_size(&a.size)?;
            let spec = if kind == JointKind::AxialCompress {
                JointSpec::axial_compress(a.rows.unwrap_or(grid.rows))
            } else {
                // preset anchor and band of the kind unless overridden
                let base = preset_specs(&grid)
                    .into_iter()
                    .map(|(_, s)| s)
                    .find(|s| s.kind == kind)
                    .expect("every non-compression kind has a preset");
                let location = match &a.location {
                    Some(l) => l.parse()?,
                    None => base.location,
                };
                let mut spec = JointSpec::new(kind, location, a.band_width.unwrap_or(base.band_width), size);
                if let Some(s) = a.stagger {
                    spec.stagger = s;
                }
                spec
            };
            let mut p = synthesize_pattern(&spec, &grid)?;
            p.label = format!("{kind}_{}", a.size);
            p
        }
        _ => return Err(SkinError::validation("give exactly one of --joint or --preset")),
    };
    let report = evaluate_pattern(&grid, &pattern, &cfg.mechanics)?;
    let mut w = Writer::new(g, "synth", cfg, a)?;
    w.json(&json!({"pattern": pattern, "report": report}))?;
    w.csv(|| {
        let mut s = String::from("row,col\n");
        for addr in &pattern.addresses {
            s.push_str(&format!("{},{}\n", addr.row, addr.col));
        }
        s
    })?;
    Ok(w.written)
}

fn load_store(path: &Path) -> Result<CalibrationStore> {
    let v: Value = read_json(path)?;
    let inner = v.pointer("/result/store").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner)?)
}

fn schedule(g: &GlobalArgs, cfg: &ToolConfig, a: &ScheduleArgs) -> Result<Vec<PathBuf>> {
    let grid = build_grid(&cfg.params)?;
    let requests: Vec<ActivationRequest> = match (&a.requests, resolve_pattern(&grid, &a.pattern)?) {
        (Some(_), Some(_)) => return Err(SkinError::validation("give either --requests or a pattern, not both")),
        (Some(path), None) => read_json(path)?,
        (None, Some(p)) => vec![ActivationRequest {
            addresses: p.addresses,
            target: TargetPhase::Melted,
            deadline: None,
        }],
        (None, None) => {
            return Err(SkinError::validation(
                "give --requests, --preset, --pattern or --addresses",
            ))
        }
    };
    for r in &requests {
        if let Some(addr) = r.addresses.iter().find(|x| !grid.is_active(**x)) {
            return Err(SkinError::validation(format!(
                "voxel {addr} is outside the grid or trimmed"
            )));
        }
    }
    let branches: Vec<BranchLimit> = match &a.branches {
        Some(p) => read_json(p)?,
        None => Vec::new(),
    };
    let budget = PowerBudget {
        peak: a.budget,
        branches,
    };
    let store = a.calibration.as_deref().map(load_store).transpose()?;
    let drives = grid_drives(&grid, store.as_ref(), &cfg.heater, &cfg.thermal)?;
    let options = PlanOptions {
        duration_model: match a.duration_model {
            DurationArg::ClosedForm => DurationModel::ClosedForm,
            DurationArg::Simulated => DurationModel::Simulated,
        },
        equalize: a.equalize,
    };
    let schedule = plan_schedule(&requests, &budget, &drives, options)?;
    let violations = validate_schedule(&schedule, &budget);
    let mut w = Writer::new(g, "schedule", cfg, a)?;
    w.json(&json!({"budget": budget, "schedule": schedule, "violations": violations}))?;
    w.csv(|| schedule.to_csv())?;
    Ok(w.written)
}

fn serve(cfg: &ToolConfig, a: &ServeArgs) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| SkinError::validation(format!("bad listen address: {e}")))?;
    let session = Session::new(SessionConfig {
        params: cfg.params,
        mechanics: cfg.mechanics,
        heater: cfg.heater,
        thermal: cfg.thermal,
    })?;
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(SkinError::from)?;
    eprintln!("{}", json!({"listening": addr.to_string()}));
    rt.block_on(voxskin_service::serve(addr, session))
        .map_err(SkinError::from)
}
