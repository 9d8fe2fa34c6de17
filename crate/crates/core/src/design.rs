//! Parametric design sweeps, power-law fits and iso-stiffness pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::geometry::{build_grid, Address, DesignParams, VoxelGrid};
use crate::mechanics::{
    fit_scaling_exponent, mode_stiffness, stiffness_report, MechConfig, Mode, ScalingFit, StiffnessReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "t_f")]
    MetalThickness,
    #[serde(rename = "t_sheet")]
    SheetThickness,
    #[serde(rename = "N_theta")]
    Resolution,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MetalThickness => "t_f",
            SweepParameter::SheetThickness => "t_sheet",
            SweepParameter::Resolution => "N_theta",
        }
    }

    /// The design with this parameter set to `value`. Resolution values are
    /// rounded to the nearest integer.
    pub fn apply(self, base: &DesignParams, value: f64) -> Result<DesignParams> {
        if !(value.is_finite() && value > 0.0) {
            return Err(SkinError::validation(format!(
                "{} must be positive, got {value}",
                self.name()
            )));
        }
        let p = match self {
            SweepParameter::MetalThickness => base.with_t_f(value),
            SweepParameter::SheetThickness => base.with_t_sheet(value),
            SweepParameter::Resolution => base.with_n_theta(value.round() as u32),
        };
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = SkinError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_f" => Ok(SweepParameter::MetalThickness),
            "t_sheet" => Ok(SweepParameter::SheetThickness),
            "N_theta" | "n_theta" => Ok(SweepParameter::Resolution),
            other => Err(SkinError::validation(format!(
                "unknown sweep parameter {other:?}; expected t_f, t_sheet or N_theta"
            ))),
        }
    }
}

/// Which voxels are melted while sweeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepState {
    #[default]
    Solid,
    Melted,
}

impl FromStr for SweepState {
    type Err = SkinError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solid" => Ok(SweepState::Solid),
            "melted" => Ok(SweepState::Melted),
            other => Err(SkinError::validation(format!(
                "unknown state {other:?}; expected solid or melted"
            ))),
        }
    }
}

fn activation(grid: &VoxelGrid, state: SweepState) -> BTreeSet<Address> {
    match state {
        SweepState::Solid => BTreeSet::new(),
        SweepState::Melted => grid.active_addresses().into_iter().collect(),
    }
}

/// `steps` evenly spaced values over `[from, to]`; integer-rounded and
/// deduplicated for the resolution parameter.
pub fn sweep_values(parameter: SweepParameter, from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && from > 0.0 && to >= from) {
        return Err(SkinError::validation(format!(
            "sweep range must be positive and ordered, got [{from}, {to}]"
        )));
    }
    if steps == 0 {
        return Err(SkinError::validation("sweep needs at least one step"));
    }
    let mut v: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                from
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    if parameter == SweepParameter::Resolution {
        v.iter_mut().for_each(|x| *x = x.round());
        v.dedup();
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: StiffnessReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub stiffness: ScalingFit,
    pub area_normalized: ScalingFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSweep {
    pub parameter: SweepParameter,
    pub state: SweepState,
    pub rows: Vec<SweepRow>,
    /// Log-log fits per mode; empty when the sweep cannot be fitted.
    pub fits: BTreeMap<Mode, ModeFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

impl DesignSweep {
    /// `value,axial,shear,bending,torsion,axial_area,shear_area,bending_area,torsion_area`
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "{},axial,shear,bending,torsion,axial_area,shear_area,bending_area,torsion_area\n",
            self.parameter
        );
        for row in &self.rows {
            let r = &row.report;
            s.push_str(&format!(
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                row.value,
                r.axial,
                r.shear,
                r.bending,
                r.torsion,
                r.axial_area,
                r.shear_area,
                r.bending_area,
                r.torsion_area
            ));
        }
        s
    }
}

/// Stiffness table over the sweep values and a power-law fit per mode.
pub fn design_sweep(
    base: &DesignParams,
    parameter: SweepParameter,
    values: &[f64],
    state: SweepState,
    cfg: &MechConfig,
) -> Result<DesignSweep> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let grid = build_grid(&parameter.apply(base, value)?)?;
        let report = stiffness_report(&grid, &activation(&grid, state), cfg)?;
        rows.push(SweepRow { value, report });
    }
    let fit = |f: &dyn Fn(&StiffnessReport) -> f64| {
        fit_scaling_exponent(&rows.iter().map(|r| (r.value, f(&r.report))).collect::<Vec<_>>())
    };
    let mut fits = BTreeMap::new();
    let mut fit_error = None;
    for mode in Mode::ALL {
        match (fit(&|r| r.get(mode)), fit(&|r| r.get_area(mode))) {
            (Ok(stiffness), Ok(area_normalized)) => {
                fits.insert(
                    mode,
                    ModeFit {
                        stiffness,
                        area_normalized,
                    },
                );
            }
            (Err(e), _) | (_, Err(e)) => {
                fit_error = Some(e.to_string());
                fits.clear();
                break;
            }
        }
    }
    Ok(DesignSweep {
        parameter,
        state,
        rows,
        fits,
        fit_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoPoint {
    pub t_f: f64,
    /// `None` when the level is not reached inside the sheet range.
    pub t_sheet: Option<f64>,
}

/// For each metal thickness, the sheet thickness giving `level` in `mode`.
/// Roots are bracketed on `t_sheet_range` and refined by bisection in log
/// space to `1e-6` relative.
pub fn iso_stiffness(
    base: &DesignParams,
    mode: Mode,
    state: SweepState,
    level: f64,
    t_f_values: &[f64],
    t_sheet_range: (f64, f64),
    cfg: &MechConfig,
) -> Result<Vec<IsoPoint>> {
    if !(level.is_finite() && level > 0.0) {
        return Err(SkinError::validation(format!(
            "iso-stiffness level must be positive, got {level}"
        )));
    }
    let (lo0, hi0) = t_sheet_range;
    if !(lo0 > 0.0 && hi0 > lo0) {
        return Err(SkinError::validation("t_sheet range must be positive and ordered"));
    }
    let mut out = Vec::with_capacity(t_f_values.len());
    for &t_f in t_f_values {
        let with_f = base.with_t_f(t_f);
        let k = |t_sheet: f64| -> Result<f64> {
            let p = with_f.with_t_sheet(t_sheet);
            p.validate()?;
            let grid = build_grid(&p)?;
            Ok(mode_stiffness(&grid, &activation(&grid, state), mode, cfg)? - level)
        };
        // the sheet cannot be thinner than the metal it carries
        let lo = lo0.max(t_f);
        if lo >= hi0 {
            out.push(IsoPoint { t_f, t_sheet: None });
            continue;
        }
        let (mut a, mut b) = (lo, hi0);
        let (fa, fb) = (k(a)?, k(b)?);
        if fa * fb > 0.0 {
            out.push(IsoPoint { t_f, t_sheet: None });
            continue;
        }
        let rising = fb > fa;
        while b / a - 1.0 > 1e-6 {
            let m = (a * b).sqrt();
            if (k(m)? < 0.0) == rising {
                a = m;
            } else {
                b = m;
            }
        }
        out.push(IsoPoint {
            t_f,
            t_sheet: Some((a * b).sqrt()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_names_round_trip() {
        for p in [
            SweepParameter::MetalThickness,
            SweepParameter::SheetThickness,
            SweepParameter::Resolution,
        ] {
            assert_eq!(p.name().parse::<SweepParameter>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!("width".parse::<SweepParameter>().is_err());
    }

    #[test]
    fn sweep_values_spacing() {
        let v = sweep_values(SweepParameter::MetalThickness, 0.5, 2.0, 4).unwrap();
        assert_eq!(v, vec![0.5, 1.0, 1.5, 2.0]);
        let n = sweep_values(SweepParameter::Resolution, 6.0, 12.0, 4).unwrap();
        assert_eq!(n, vec![6.0, 8.0, 10.0, 12.0]);
        assert_eq!(
            sweep_values(SweepParameter::MetalThickness, 1.0, 1.0, 1).unwrap(),
            vec![1.0]
        );
        assert!(sweep_values(SweepParameter::MetalThickness, 2.0, 1.0, 3).is_err());
        assert!(sweep_values(SweepParameter::MetalThickness, -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn single_step_sweep_reports_fit_error() {
        let s = design_sweep(
            &DesignParams::reference(),
            SweepParameter::MetalThickness,
            &[1.0],
            SweepState::Solid,
            &MechConfig::default(),
        )
        .unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!(s.fits.is_empty());
        assert!(s.fit_error.unwrap().contains("at least 3"));
    }

    #[test]
    fn iso_point_reproduces_level() {
        let base = DesignParams::reference();
        let cfg = MechConfig::default();
        let grid = build_grid(&base.with_t_sheet(4.0)).unwrap();
        let level = mode_stiffness(&grid, &activation(&grid, SweepState::Melted), Mode::Axial, &cfg).unwrap();
        let pts = iso_stiffness(
            &base,
            Mode::Axial,
            SweepState::Melted,
            level,
            &[1.0, 1e-3],
            (1.0, 10.0),
            &cfg,
        )
        .unwrap();
        assert!((pts[0].t_sheet.unwrap() - 4.0).abs() < 1e-4);
        // the thinnest metal leaves the elastomer alone, still reachable
        assert!(pts[1].t_sheet.is_some());
        let unreachable = iso_stiffness(
            &base,
            Mode::Axial,
            SweepState::Melted,
            level * 1e6,
            &[1.0],
            (1.0, 10.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(unreachable[0].t_sheet, None);
    }
}
