use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};

use super::material::{MaterialLabel, MaterialState};

/// Cross-section and span of one ligament.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LigamentGeometry {
    /// Span, normally the voxel edge `s_0`.
    pub length: f64,
    /// In-plane width `alpha * s_0`.
    pub width: f64,
    /// Through-thickness `t_f`.
    pub thickness: f64,
}

impl LigamentGeometry {
    pub fn new(length: f64, width: f64, thickness: f64) -> Self {
        LigamentGeometry {
            length,
            width,
            thickness,
        }
    }

    /// Second moment for transverse (through-thickness) bending, `w t^3 / 12`.
    pub fn transverse_inertia(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    fn check(&self) -> Result<()> {
        let ok = [self.length, self.width, self.thickness]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(SkinError::validation("ligament dimensions must be positive"))
        }
    }
}

/// Axial (`k_s`) and transverse bending (`k_b`) stiffness of one ligament.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LigamentStiffness {
    pub axial: f64,
    pub bending: f64,
}

/// `k_s = E w t / L` and the fixed-fixed frame value `k_b = 12 E I / L^3`.
pub fn ligament_stiffness(geom: &LigamentGeometry, material: &MaterialState) -> Result<LigamentStiffness> {
    geom.check()?;
    let e = material.modulus;
    let l = geom.length;
    Ok(LigamentStiffness {
        axial: e * geom.width * geom.thickness / l,
        bending: 12.0 * e * geom.transverse_inertia() / l.powi(3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Yield,
    Buckling,
}

/// Per-ligament strength limits of a solid metal ligament.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEnvelope {
    /// Yield load, N.
    pub f_y: f64,
    /// Euler buckling load, N.
    pub f_cr: f64,
    pub governing: FailureMode,
    /// Thickness at which yield and buckling loads coincide, mm.
    pub crossover_t_f: f64,
}

impl FailureEnvelope {
    pub fn from_loads(f_y: f64, f_cr: f64, crossover_t_f: f64) -> Self {
        FailureEnvelope {
            f_y,
            f_cr,
            governing: if f_cr < f_y {
                FailureMode::Buckling
            } else {
                FailureMode::Yield
            },
            crossover_t_f,
        }
    }

    /// `min(F_y, F_cr)`.
    pub fn governing_load(&self) -> f64 {
        self.f_y.min(self.f_cr)
    }
}

/// Yield and Euler buckling loads for a ligament of span `L`.
///
/// `end_factor` scales the pinned-pinned Euler load (1.0 = pinned-pinned,
/// 4.0 = fixed-fixed). The crossover thickness solves `F_y = F_cr` for `t_f`.
pub fn failure_envelope(geom: &LigamentGeometry, material: &MaterialState, end_factor: f64) -> Result<FailureEnvelope> {
    geom.check()?;
    if material.label != MaterialLabel::MetalSolid {
        return Err(SkinError::validation(
            "failure envelope requires solid metal; elastomer does not yield or buckle",
        ));
    }
    if !(end_factor > 0.0) {
        return Err(SkinError::validation("buckling end factor must be positive"));
    }
    let e = material.modulus;
    let l = geom.length;
    let f_y = material.yield_stress * geom.width * geom.thickness;
    let f_cr = end_factor * PI * PI * e * geom.transverse_inertia() / (l * l);
    // w t sigma = c pi^2 E w t^3 / (12 L^2)  =>  t = L sqrt(12 sigma / (c pi^2 E))
    let crossover = l * (12.0 * material.yield_stress / (end_factor * PI * PI * e)).sqrt();
    Ok(FailureEnvelope::from_loads(f_y, f_cr, crossover))
}
