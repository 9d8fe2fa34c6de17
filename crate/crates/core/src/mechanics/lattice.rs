//! Maps a voxel grid onto a frame model of the unwrapped sheet.
//!
//! Node lines sit at `y = j * (sqrt3/2) s_0`, nodes along a line at half-edge
//! steps `x = i * s_0 / 2`. Odd rows are shifted by half an edge, so every
//! row shares its bounding node lines with its neighbours and the sheet is a
//! regular triangulated lattice. Each voxel contributes its own three metal
//! ligaments, so an interior edge carries two parallel ligaments, one from
//! each adjacent voxel. The interlayer stand-off only enters the band height.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;

use crate::error::{Result, SkinError};
use crate::geometry::{Address, Orientation, VoxelGrid, SQRT3_2};

use super::frame::{ElementKind, FrameElement, FrameModel, Section, SymmetricOperator};
use super::material::MechConfig;

/// Width of the membrane ligament set. Three bars of area `(sqrt3/4) L t`
/// reproduce the in-plane stiffness of an equilateral sheet triangle with
/// Poisson ratio 1/3.
pub const MEMBRANE_WIDTH_FACTOR: f64 = 0.433_012_701_892_219_3;

#[derive(Debug, Clone)]
pub struct LatticeModel {
    pub frame: FrameModel,
    /// `(line, half-edge index)` of every node.
    pub node_keys: Vec<(usize, usize)>,
    /// Voxel address for each owner index used in `frame.elements`.
    pub owners: Vec<Address>,
    pub bottom_nodes: Vec<usize>,
    pub top_nodes: Vec<usize>,
    /// Height of the modelled sheet (stand-off excluded).
    pub height: f64,
}

/// Node keys of a voxel's triangle, as (line, half-edge index), in the order
/// (a, b, apex) where a-b is the horizontal edge.
pub fn voxel_nodes(a: Address) -> [(usize, usize); 3] {
    let p = a.row % 2;
    let k = a.col / 2;
    match Orientation::of_col(a.col) {
        Orientation::Up => [(a.row, p + 2 * k), (a.row, p + 2 * k + 2), (a.row + 1, p + 2 * k + 1)],
        Orientation::Down => [
            (a.row + 1, p + 2 * k + 1),
            (a.row + 1, p + 2 * k + 3),
            (a.row, p + 2 * k + 2),
        ],
    }
}

/// Builds the frame for `grid` with the voxels in `activation` treated as melted.
pub fn build_lattice(grid: &VoxelGrid, activation: &BTreeSet<Address>, cfg: &MechConfig) -> Result<LatticeModel> {
    for a in activation {
        match grid.cell(*a) {
            None => return Err(SkinError::validation(format!("activation address {a} outside grid"))),
            Some(c) if c.is_trimmed() => {
                return Err(SkinError::validation(format!(
                    "activation references trimmed voxel {a}"
                )))
            }
            _ => {}
        }
    }
    let p = &grid.params;
    let s0 = p.s_0;
    let h = SQRT3_2 * s0;
    let g_metal = cfg.shear_modulus(cfg.e_metal);
    let g_elast = cfg.shear_modulus(cfg.e_elastomer);

    let mut node_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut frame = FrameModel::default();
    let mut node_keys = Vec::new();
    let mut owners = Vec::new();

    for cell in grid.cells.iter().filter(|c| !c.is_trimmed()) {
        let owner = owners.len();
        owners.push(cell.address);
        let keys = voxel_nodes(cell.address);
        let ids: Vec<usize> = keys
            .iter()
            .map(|&key| {
                *node_ids.entry(key).or_insert_with(|| {
                    frame
                        .nodes
                        .push(Vector3::new(key.1 as f64 * s0 / 2.0, key.0 as f64 * h, 0.0));
                    node_keys.push(key);
                    frame.nodes.len() - 1
                })
            })
            .collect();

        let (t_f, alpha) = cell
            .geometry_override
            .map(|o| (o.t_f, o.alpha))
            .unwrap_or((p.t_f, p.alpha));
        let engaged = cell.metal_engaged() && !activation.contains(&cell.address);
        let (e, g) = if engaged {
            (cfg.e_metal, g_metal)
        } else {
            (cfg.e_elastomer, g_elast)
        };
        let metal = Section::rectangular(e, g, alpha * s0, t_f);
        let t_membrane = p.t_sheet - t_f;
        let membrane = (cfg.membrane && t_membrane > 0.0)
            .then(|| Section::rectangular(cfg.e_elastomer, g_elast, MEMBRANE_WIDTH_FACTOR * s0, t_membrane));

        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let nodes = [ids[i], ids[j]];
            frame.elements.push(FrameElement {
                nodes,
                section: metal,
                kind: ElementKind::Metal,
                owner: Some(owner),
            });
            if let Some(section) = membrane {
                frame.elements.push(FrameElement {
                    nodes,
                    section,
                    kind: ElementKind::Membrane,
                    owner: Some(owner),
                });
            }
        }
    }

    let rows = grid.rows;
    let mut bottom_nodes = Vec::new();
    let mut top_nodes = Vec::new();
    for (&(line, _), &id) in &node_ids {
        if line == 0 {
            bottom_nodes.push(id);
        } else if line == rows {
            top_nodes.push(id);
        }
    }
    Ok(LatticeModel {
        frame,
        node_keys,
        owners,
        bottom_nodes,
        top_nodes,
        height: rows as f64 * h,
    })
}

/// Global stiffness operator of the grid under an activation pattern.
pub fn assemble_global(
    grid: &VoxelGrid,
    activation: &BTreeSet<Address>,
    cfg: &MechConfig,
) -> Result<(LatticeModel, SymmetricOperator)> {
    let model = build_lattice(grid, activation, cfg)?;
    let op = model.frame.assemble();
    Ok((model, op))
}
