use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use voxskin_core::calibration::{CalibrationConfig, PlantModel};
use voxskin_core::geometry::{Address, DesignParams};
use voxskin_core::mechanics::MechConfig;
use voxskin_core::thermal::{heater_resistance, HeaterParams, ThermalParams};
use voxskin_core::{Result, SkinError};

/// Simulated hardware used by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Relative +/- spread of resistance and thermal parameters.
    pub spread: f64,
    /// Temperature sensor noise std (degC).
    pub sensor_noise: f64,
    /// Current sense noise std (A).
    pub current_noise: f64,
    /// Voxels with a broken heater trace.
    pub open_circuit: BTreeSet<Address>,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            spread: 0.2,
            sensor_noise: 0.5,
            current_noise: 0.002,
            open_circuit: BTreeSet::new(),
        }
    }
}

/// Everything a command reads besides its flags. Every section is optional
/// and defaults to the reference design.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub params: DesignParams,
    pub mechanics: MechConfig,
    pub heater: HeaterParams,
    pub thermal: ThermalParams,
    pub calibration: CalibrationConfig,
    pub plant: PlantConfig,
}

impl ToolConfig {
    pub fn load(path: Option<&Path>, params: Option<&Path>) -> Result<Self> {
        let mut cfg: ToolConfig = match path {
            Some(p) => read_json(p)?,
            None => ToolConfig::default(),
        };
        if let Some(p) = params {
            cfg.params = read_json(p)?;
        }
        cfg.params.validate()?;
        cfg.heater.validate()?;
        cfg.thermal.validate()?;
        cfg.calibration.validate()?;
        Ok(cfg)
    }

    /// Nominal plant matching the configured heater and thermal model.
    pub fn nominal_plant(&self, seed: u64) -> PlantModel {
        PlantModel {
            r_h: heater_resistance(&self.heater, self.params.s_0),
            r_ser: self.heater.r_ser,
            v: self.heater.v,
            thermal: self.thermal,
            sensor_noise: self.plant.sensor_noise,
            current_noise: self.plant.current_noise,
            open_circuit: false,
            seed,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| SkinError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SkinError::validation(format!("{}: {e}", path.display())))
}
