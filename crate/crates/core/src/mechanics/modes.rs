//! Mode stiffness extraction.
//!
//! The bottom node line is clamped. Every node on the top line is rigidly
//! coupled to a driver that imposes one unit rigid motion:
//!
//! - axial: translation along the band axis (y), N/mm
//! - shear: in-plane translation along the circumference (x), N/mm
//! - bending: out-of-plane rotation about the circumferential axis; the
//!   moment is divided by the sheet height to give an end force, N/deg
//! - torsion: in-plane rotation about the sheet normal, N mm/deg
//!
//! Stiffness is the generalized reaction per unit imposed motion, which
//! equals twice the strain energy of the solved field.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::geometry::{normalize_stiffness, Address, VoxelGrid};

use super::frame::{SymmetricOperator, DOF_PER_NODE};
use super::lattice::{build_lattice, LatticeModel};
use super::material::MechConfig;

const DEG: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Axial,
    Shear,
    Bending,
    Torsion,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Axial, Mode::Shear, Mode::Bending, Mode::Torsion];

    pub fn unit(self) -> &'static str {
        match self {
            Mode::Axial | Mode::Shear => "N/mm",
            Mode::Bending => "N/deg",
            Mode::Torsion => "N*mm/deg",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Axial => "axial",
            Mode::Shear => "shear",
            Mode::Bending => "bending",
            Mode::Torsion => "torsion",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = SkinError;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SkinError::validation(format!("unknown mode '{s}'")))
    }
}

/// Solved displacement field for one mode.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub mode: Mode,
    pub stiffness: f64,
    pub model: LatticeModel,
    pub displacement: DVector<f64>,
}

impl ModeSolution {
    /// Strain energy summed per owning voxel.
    pub fn voxel_energies(&self) -> BTreeMap<Address, f64> {
        let mut out = BTreeMap::new();
        for e in &self.model.frame.elements {
            if let Some(o) = e.owner {
                let en = self.model.frame.element_energy(e, &self.displacement);
                *out.entry(self.model.owners[o]).or_insert(0.0) += en;
            }
        }
        out
    }
}

/// Unit rigid motion of the top line: per-node prescribed DOF values.
fn driver_motion(model: &LatticeModel, mode: Mode) -> BTreeMap<usize, f64> {
    let mut p = BTreeMap::new();
    for &n in &model.bottom_nodes {
        for d in 0..DOF_PER_NODE {
            p.insert(n * DOF_PER_NODE + d, 0.0);
        }
    }
    let xc = if model.top_nodes.is_empty() {
        0.0
    } else {
        model.top_nodes.iter().map(|&n| model.frame.nodes[n].x).sum::<f64>() / model.top_nodes.len() as f64
    };
    for &n in &model.top_nodes {
        let mut v = [0.0; DOF_PER_NODE];
        match mode {
            Mode::Axial => v[1] = 1.0,
            Mode::Shear => v[0] = 1.0,
            // rotation about the x axis through the top line: nodes lie on the axis
            Mode::Bending => v[3] = 1.0,
            Mode::Torsion => {
                v[1] = model.frame.nodes[n].x - xc;
                v[5] = 1.0;
            }
        }
        for (d, val) in v.into_iter().enumerate() {
            p.insert(n * DOF_PER_NODE + d, val);
        }
    }
    p
}

/// Rejects substructures touching neither boundary line, and load paths that
/// never connect the clamped line to the driven one.
fn floating_check(model: &LatticeModel) -> Result<()> {
    let bottom: BTreeSet<usize> = model.bottom_nodes.iter().copied().collect();
    let top: BTreeSet<usize> = model.top_nodes.iter().copied().collect();
    let owned_by = |comp: &BTreeSet<usize>| -> Vec<Address> {
        let voxels: BTreeSet<Address> = model
            .frame
            .elements
            .iter()
            .filter(|e| comp.contains(&e.nodes[0]))
            .filter_map(|e| e.owner.map(|o| model.owners[o]))
            .collect();
        voxels.into_iter().collect()
    };
    let comps = model.frame.components();
    for comp in &comps {
        if comp.is_disjoint(&bottom) && comp.is_disjoint(&top) {
            return Err(SkinError::Singular { voxels: owned_by(comp) });
        }
    }
    if !comps.iter().any(|c| !c.is_disjoint(&bottom) && !c.is_disjoint(&top)) {
        let driven: BTreeSet<usize> = comps
            .iter()
            .filter(|c| !c.is_disjoint(&top))
            .flatten()
            .copied()
            .collect();
        return Err(SkinError::Singular {
            voxels: owned_by(&driven),
        });
    }
    Ok(())
}

/// Solves one mode on an already built lattice.
pub fn solve_mode(model: LatticeModel, op: &SymmetricOperator, mode: Mode) -> Result<ModeSolution> {
    floating_check(&model)?;
    let prescribed = driver_motion(&model, mode);
    let u = model.frame.solve_prescribed(op, &prescribed)?;
    let f = op.mul(&u);
    let raw: f64 = prescribed.iter().map(|(&d, &v)| v * f[d]).sum();
    let stiffness = match mode {
        Mode::Axial | Mode::Shear => raw,
        Mode::Bending => raw * DEG / model.height,
        Mode::Torsion => raw * DEG,
    };
    Ok(ModeSolution {
        mode,
        stiffness: stiffness.max(0.0),
        model,
        displacement: u,
    })
}

pub fn mode_solution(
    grid: &VoxelGrid,
    activation: &BTreeSet<Address>,
    mode: Mode,
    cfg: &MechConfig,
) -> Result<ModeSolution> {
    let model = build_lattice(grid, activation, cfg)?;
    let op = model.frame.assemble();
    solve_mode(model, &op, mode)
}

/// Generalized stiffness of the grid in one mode under an activation pattern.
pub fn mode_stiffness(grid: &VoxelGrid, activation: &BTreeSet<Address>, mode: Mode, cfg: &MechConfig) -> Result<f64> {
    mode_solution(grid, activation, mode, cfg).map(|s| s.stiffness)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessReport {
    pub axial: f64,
    pub shear: f64,
    pub bending: f64,
    pub torsion: f64,
    pub axial_area: f64,
    pub shear_area: f64,
    pub bending_area: f64,
    pub torsion_area: f64,
}

impl StiffnessReport {
    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Axial => self.axial,
            Mode::Shear => self.shear,
            Mode::Bending => self.bending,
            Mode::Torsion => self.torsion,
        }
    }

    pub fn get_area(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Axial => self.axial_area,
            Mode::Shear => self.shear_area,
            Mode::Bending => self.bending_area,
            Mode::Torsion => self.torsion_area,
        }
    }

    /// CSV projection: `mode,value,unit,normalized` where `normalized` is the
    /// area-normalized value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,value,unit,normalized\n");
        for m in Mode::ALL {
            s.push_str(&format!(
                "{},{:.9e},{},{:.9e}\n",
                m,
                self.get(m),
                m.unit(),
                self.get_area(m)
            ));
        }
        s
    }
}

/// All four mode stiffnesses from a single assembly.
pub fn stiffness_report(grid: &VoxelGrid, activation: &BTreeSet<Address>, cfg: &MechConfig) -> Result<StiffnessReport> {
    let model = build_lattice(grid, activation, cfg)?;
    let op = model.frame.assemble();
    let mut vals = [0.0; 4];
    for (i, m) in Mode::ALL.into_iter().enumerate() {
        vals[i] = solve_mode(model.clone(), &op, m)?.stiffness;
    }
    let n = |k: f64| normalize_stiffness(k, &grid.params);
    Ok(StiffnessReport {
        axial: vals[0],
        shear: vals[1],
        bending: vals[2],
        torsion: vals[3],
        axial_area: n(vals[0])?,
        shear_area: n(vals[1])?,
        bending_area: n(vals[2])?,
        torsion_area: n(vals[3])?,
    })
}
