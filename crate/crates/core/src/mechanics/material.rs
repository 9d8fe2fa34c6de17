use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialLabel {
    MetalSolid,
    Elastomer,
}

/// Effective isotropic material of a ligament. Temperature and strain-rate
/// dependence of the yield stress are folded into one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialState {
    /// N/mm^2.
    pub modulus: f64,
    /// N/mm^2; zero for the elastomer.
    pub yield_stress: f64,
    pub label: MaterialLabel,
}

impl MaterialState {
    pub fn metal(modulus: f64, yield_stress: f64) -> Self {
        MaterialState {
            modulus,
            yield_stress,
            label: MaterialLabel::MetalSolid,
        }
    }

    pub fn elastomer(modulus: f64) -> Self {
        MaterialState {
            modulus,
            yield_stress: 0.0,
            label: MaterialLabel::Elastomer,
        }
    }
}

/// Material constants and modelling switches for the lattice frame.
///
/// The moduli are configuration values. Every comparison the toolkit makes
/// depends on ratios and orderings rather than on these absolutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MechConfig {
    pub e_metal: f64,
    pub e_elastomer: f64,
    pub sigma_y: f64,
    /// Poisson ratio used for the torsion constant of every ligament.
    pub poisson: f64,
    /// Adds the silicone sheet as a parallel ligament set.
    pub membrane: bool,
    /// Euler end-condition factor (1.0 = pinned-pinned).
    pub buckling_end_factor: f64,
}

impl Default for MechConfig {
    fn default() -> Self {
        MechConfig {
            e_metal: 9250.0,
            e_elastomer: 1.0,
            sigma_y: 30.0,
            poisson: 0.35,
            membrane: true,
            buckling_end_factor: 1.0,
        }
    }
}

impl MechConfig {
    pub fn metal(&self) -> MaterialState {
        MaterialState::metal(self.e_metal, self.sigma_y)
    }

    pub fn elastomer(&self) -> MaterialState {
        MaterialState::elastomer(self.e_elastomer)
    }

    pub fn shear_modulus(&self, e: f64) -> f64 {
        e / (2.0 * (1.0 + self.poisson))
    }
}
