//! Per-voxel lifecycle: phase, damage and trimming.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::geometry::{Address, Orientation, VoxelGrid};
use crate::mechanics::FailureEnvelope;
use crate::thermal::TransientTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Solid,
    Melting,
    Melted,
    Cooling,
}

impl Phase {
    /// Allowed transitions: solid -> melting -> melted -> cooling -> solid.
    /// A cooling voxel may also be re-heated (cooling -> melting).
    pub fn can_transition(self, to: Phase) -> bool {
        use Phase::*;
        self == to
            || matches!(
                (self, to),
                (Solid, Melting) | (Melting, Melted) | (Melted, Cooling) | (Cooling, Solid) | (Cooling, Melting)
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Health {
    Healthy,
    Fractured,
    Trimmed,
}

/// Per-voxel ligament geometry for sacrificial voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryOverride {
    pub t_f: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelRecord {
    pub address: Address,
    pub orientation: Orientation,
    pub phase: Phase,
    pub health: Health,
    /// Liquid fraction in [0, 1].
    pub phase_fraction: f64,
    /// Degrees Celsius.
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_override: Option<GeometryOverride>,
    /// Key of this voxel's entry in the calibration store.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
}

/// Non-fatal condition reported alongside a completed operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Vec<Address>>,
}

impl VoxelRecord {
    pub fn new(address: Address) -> Self {
        VoxelRecord {
            address,
            orientation: Orientation::of_col(address.col),
            phase: Phase::Solid,
            health: Health::Healthy,
            phase_fraction: 0.0,
            temperature: 25.0,
            geometry_override: None,
            calibration: None,
        }
    }

    pub fn is_trimmed(&self) -> bool {
        self.health == Health::Trimmed
    }

    pub fn is_healthy_solid(&self) -> bool {
        self.health == Health::Healthy && self.phase == Phase::Solid
    }

    /// Whether the metal ligaments carry load: solid and not fractured.
    pub fn metal_engaged(&self) -> bool {
        self.health == Health::Healthy && self.phase == Phase::Solid
    }

    /// Moves the phase to match a new liquid fraction. `heating` tells a
    /// partially liquid voxel whether it is on the way up or down.
    pub fn set_phase_fraction(&mut self, fraction: f64, heating: bool) -> Result<()> {
        let fraction = fraction.clamp(0.0, 1.0);
        let next = if fraction <= 0.0 {
            Phase::Solid
        } else if fraction >= 1.0 {
            Phase::Melted
        } else if heating {
            Phase::Melting
        } else {
            Phase::Cooling
        };
        // walk through intermediate states so a coarse update stays legal
        let path: &[Phase] = match (self.phase, next) {
            (Phase::Solid, Phase::Melted) => &[Phase::Melting, Phase::Melted],
            (Phase::Melted, Phase::Solid) => &[Phase::Cooling, Phase::Solid],
            (Phase::Melting, Phase::Solid) => &[Phase::Cooling, Phase::Solid],
            (Phase::Melting, Phase::Cooling) => &[Phase::Melted, Phase::Cooling],
            _ => std::slice::from_ref(&next),
        };
        for &p in path {
            if !self.phase.can_transition(p) {
                return Err(SkinError::validation(format!(
                    "illegal phase transition {:?} -> {:?} at {}",
                    self.phase, p, self.address
                )));
            }
            self.phase = p;
        }
        self.phase_fraction = match self.phase {
            Phase::Solid => 0.0,
            Phase::Melted => 1.0,
            _ => fraction,
        };
        Ok(())
    }
}

/// Fractures a solid voxel when `load` strictly exceeds the governing
/// failure load of its ligaments.
pub fn apply_overload(voxel: &VoxelRecord, load: f64, envelope: &FailureEnvelope) -> Result<VoxelRecord> {
    match (voxel.health, voxel.phase) {
        (Health::Trimmed, _) => Err(SkinError::validation(format!("voxel {} is trimmed", voxel.address))),
        (_, Phase::Solid) => {
            let mut out = voxel.clone();
            if voxel.health == Health::Healthy && load > envelope.governing_load() {
                out.health = Health::Fractured;
            }
            Ok(out)
        }
        _ => Err(SkinError::validation(format!(
            "voxel {} is not solid; liquid alloy flows instead of fracturing",
            voxel.address
        ))),
    }
}

/// True when the trace fully melts (fraction reaches 1) and later fully
/// re-solidifies (fraction back to 0).
pub fn completes_cycle(trace: &TransientTrace) -> bool {
    let mut melted = false;
    for s in &trace.samples {
        if !melted && s.phase_fraction >= 1.0 {
            melted = true;
        } else if melted && s.phase_fraction <= 0.0 {
            return true;
        }
    }
    false
}

/// Heals a fractured voxel if the supplied trace contains a full
/// melt/solidify cycle. Otherwise the voxel is returned unchanged with a
/// diagnostic.
pub fn thermal_reset(voxel: &VoxelRecord, trace: &TransientTrace) -> (VoxelRecord, Option<Diagnostic>) {
    let mut out = voxel.clone();
    if voxel.is_trimmed() {
        return (
            out,
            Some(Diagnostic {
                code: "trimmed".into(),
                message: format!("voxel {} is trimmed and cannot be reset", voxel.address),
                components: vec![],
            }),
        );
    }
    if !completes_cycle(trace) {
        return (
            out,
            Some(Diagnostic {
                code: "incomplete_cycle".into(),
                message: format!(
                    "voxel {}: trace never completed a full melt and re-solidification",
                    voxel.address
                ),
                components: vec![],
            }),
        );
    }
    out.health = Health::Healthy;
    out.phase = Phase::Solid;
    out.phase_fraction = 0.0;
    if let Some(last) = trace.samples.last() {
        out.temperature = last.temperature;
    }
    (out, None)
}

/// Marks `region` as trimmed. Survivors keep their addresses. Returns a
/// diagnostic when the remaining lattice falls apart into several pieces.
pub fn trim(grid: &VoxelGrid, region: &BTreeSet<Address>) -> Result<(VoxelGrid, Option<Diagnostic>)> {
    if let Some(bad) = region.iter().find(|a| !grid.contains(**a)) {
        return Err(SkinError::validation(format!("trim address {bad} outside grid")));
    }
    let mut out = grid.clone();
    for a in region {
        if let Some(c) = out.cell_mut(*a) {
            c.health = Health::Trimmed;
        }
    }
    let comps = connected_components(&out);
    let diag = (comps.len() > 1).then(|| Diagnostic {
        code: "disconnected".into(),
        message: format!("trimming split the lattice into {} components", comps.len()),
        components: comps,
    });
    Ok((out, diag))
}

/// Edge-connected components of the active (non-trimmed) voxels, each sorted,
/// ordered by their smallest address.
pub fn connected_components(grid: &VoxelGrid) -> Vec<Vec<Address>> {
    let mut seen = BTreeSet::new();
    let mut comps = Vec::new();
    for start in grid.active_addresses() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in grid.neighbors(a) {
                if grid.is_active(b) && seen.insert(b) {
                    comp.push(b);
                    queue.push_back(b);
                }
            }
        }
        comp.sort();
        comps.push(comp);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DesignParams};
    use crate::thermal::TraceSample;

    fn envelope(min_load: f64) -> FailureEnvelope {
        FailureEnvelope::from_loads(90.0, min_load, 3.44)
    }

    fn trace(fractions: &[f64]) -> TransientTrace {
        TransientTrace {
            samples: fractions
                .iter()
                .enumerate()
                .map(|(i, &f)| TraceSample {
                    t: i as f64,
                    temperature: 62.0,
                    phase_fraction: f,
                    power: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn overload_thresholds() {
        let v = VoxelRecord::new(Address::new(0, 0));
        let env = envelope(7.61);
        assert_eq!(apply_overload(&v, 100.0, &env).unwrap().health, Health::Fractured);
        assert_eq!(apply_overload(&v, 0.0, &env).unwrap(), v);
        assert_eq!(apply_overload(&v, env.governing_load(), &env).unwrap(), v);
    }

    #[test]
    fn overload_on_melted_rejected() {
        let mut v = VoxelRecord::new(Address::new(0, 0));
        v.set_phase_fraction(1.0, true).unwrap();
        assert!(apply_overload(&v, 100.0, &envelope(7.61)).is_err());
    }

    #[test]
    fn reset_requires_full_cycle() {
        let mut v = VoxelRecord::new(Address::new(1, 1));
        v.health = Health::Fractured;
        let (healed, d) = thermal_reset(&v, &trace(&[0.0, 0.5, 1.0, 0.4, 0.0]));
        assert_eq!(healed.health, Health::Healthy);
        assert!(d.is_none());

        let (still, d) = thermal_reset(&v, &trace(&[0.0, 0.3, 0.6, 0.2, 0.0]));
        assert_eq!(still.health, Health::Fractured);
        assert_eq!(d.unwrap().code, "incomplete_cycle");

        let ok = VoxelRecord::new(Address::new(0, 0));
        let (same, _) = thermal_reset(&ok, &trace(&[0.0, 1.0, 0.0]));
        assert_eq!(same.health, Health::Healthy);
    }

    #[test]
    fn phase_machine() {
        assert!(Phase::Solid.can_transition(Phase::Melting));
        assert!(!Phase::Solid.can_transition(Phase::Cooling));
        assert!(!Phase::Melted.can_transition(Phase::Melting));
        let mut v = VoxelRecord::new(Address::new(0, 0));
        v.set_phase_fraction(0.4, true).unwrap();
        assert_eq!(v.phase, Phase::Melting);
        v.set_phase_fraction(1.0, true).unwrap();
        assert_eq!((v.phase, v.phase_fraction), (Phase::Melted, 1.0));
        v.set_phase_fraction(0.5, false).unwrap();
        assert_eq!(v.phase, Phase::Cooling);
        v.set_phase_fraction(0.0, false).unwrap();
        assert_eq!((v.phase, v.phase_fraction), (Phase::Solid, 0.0));
    }

    #[test]
    fn trim_keeps_addresses() {
        let g = build_grid(&DesignParams::reference()).unwrap();
        let region: BTreeSet<_> = [(1, 9), (1, 10), (2, 9), (2, 10)]
            .into_iter()
            .map(|(r, c)| Address::new(r, c))
            .collect();
        let (t, diag) = trim(&g, &region).unwrap();
        assert!(diag.is_none());
        assert_eq!(t.active_addresses().len(), 76);
        for a in t.active_addresses() {
            assert_eq!(t.cell(a).unwrap().address, a);
        }

        let (same, _) = trim(&g, &BTreeSet::new()).unwrap();
        assert_eq!(same, g);
    }

    #[test]
    fn trimming_a_column_band_disconnects() {
        let g = build_grid(&DesignParams::reference()).unwrap();
        let region: BTreeSet<_> = (0..4).flat_map(|r| (9..12).map(move |c| Address::new(r, c))).collect();
        let (_, diag) = trim(&g, &region).unwrap();
        let d = diag.expect("disconnection warning");
        assert_eq!(d.components.len(), 2);
    }

    #[test]
    fn trim_outside_grid_rejected() {
        let g = build_grid(&DesignParams::reference()).unwrap();
        let region = BTreeSet::from([Address::new(9, 0)]);
        assert!(trim(&g, &region).is_err());
    }
}
