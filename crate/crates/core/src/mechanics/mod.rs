//! Ligament-level frame model of the lattice.

pub mod frame;
pub mod lattice;
pub mod ligament;
pub mod material;
pub mod modes;
pub mod scaling;
pub mod topology;

pub use frame::{FrameModel, SymmetricOperator};
pub use lattice::{assemble_global, build_lattice, LatticeModel};
pub use ligament::{
    failure_envelope, ligament_stiffness, FailureEnvelope, FailureMode, LigamentGeometry, LigamentStiffness,
};
pub use material::{MaterialLabel, MaterialState, MechConfig};
pub use modes::{mode_solution, mode_stiffness, solve_mode, stiffness_report, Mode, ModeSolution, StiffnessReport};
pub use scaling::{fit_scaling_exponent, ScalingFit};

use crate::error::Result;
use crate::geometry::DesignParams;
use crate::voxel::VoxelRecord;

/// Failure envelope of one voxel's ligaments, honouring a sacrificial
/// geometry override.
pub fn voxel_envelope(params: &DesignParams, voxel: &VoxelRecord, cfg: &MechConfig) -> Result<FailureEnvelope> {
    let (t_f, alpha) = voxel
        .geometry_override
        .map(|o| (o.t_f, o.alpha))
        .unwrap_or((params.t_f, params.alpha));
    let geom = LigamentGeometry::new(params.s_0, alpha * params.s_0, t_f);
    failure_envelope(&geom, &cfg.metal(), cfg.buckling_end_factor)
}
pub use topology::{tile, topology_compare, topology_stiffness, BandSpec, TiledBand, Topology, TopologyResult};
