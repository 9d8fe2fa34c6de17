//! Equal-mass comparison of planar lattice topologies on a cylindrical band.
//!
//! Each topology is tiled on the unwrapped band (circumference by height),
//! members get a common out-of-plane thickness and a width chosen so that the
//! total metal mass matches the budget, and the four mode stiffnesses are
//! extracted with the same boundary conditions as the voxel sheet.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};

use super::frame::{ElementKind, FrameElement, FrameModel, Section};
use super::lattice::LatticeModel;
use super::material::MechConfig;
use super::modes::{solve_mode, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Cubic,
    FishScale,
    Hexagonal,
    Kagome,
    Parallelogram,
    Reentrant,
    Triangular,
}

impl Topology {
    pub const ALL: [Topology; 7] = [
        Topology::Cubic,
        Topology::FishScale,
        Topology::Hexagonal,
        Topology::Kagome,
        Topology::Parallelogram,
        Topology::Reentrant,
        Topology::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Cubic => "cubic",
            Topology::FishScale => "fish_scale",
            Topology::Hexagonal => "hexagonal",
            Topology::Kagome => "kagome",
            Topology::Parallelogram => "parallelogram",
            Topology::Reentrant => "reentrant",
            Topology::Triangular => "triangular",
        }
    }

    /// Row pitch, x offset of odd rows, and the member segments of one cell
    /// in row-local coordinates, for a cell period `p` around the band.
    fn cell(self, p: f64) -> Cell {
        let s3 = 3f64.sqrt();
        match self {
            Topology::Triangular => {
                let h = s3 / 2.0 * p;
                Cell::new(
                    h,
                    p / 2.0,
                    vec![
                        ((0.0, 0.0), (p, 0.0)),
                        ((0.0, 0.0), (p / 2.0, h)),
                        ((p, 0.0), (p / 2.0, h)),
                    ],
                )
            }
            Topology::Cubic => Cell::new(p, 0.0, vec![((0.0, 0.0), (p, 0.0)), ((0.0, 0.0), (0.0, p))]),
            Topology::Parallelogram => {
                let h = s3 / 2.0 * p;
                Cell::new(h, p / 2.0, vec![((0.0, 0.0), (p, 0.0)), ((0.0, 0.0), (p / 2.0, h))])
            }
            Topology::Hexagonal => {
                let b = p / s3;
                Cell::new(
                    1.5 * b,
                    p / 2.0,
                    vec![
                        ((0.0, 0.0), (0.0, b)),
                        ((0.0, b), (p / 2.0, 1.5 * b)),
                        ((0.0, b), (-p / 2.0, 1.5 * b)),
                    ],
                )
            }
            Topology::Reentrant => {
                // ribs twice the arm length, arms inclined 30 degrees below horizontal
                let l = p / s3;
                let (c, s) = (p / 2.0, l / 2.0);
                Cell::new(
                    2.0 * l - s,
                    c,
                    vec![
                        ((0.0, 0.0), (0.0, 2.0 * l)),
                        ((0.0, 2.0 * l), (c, 2.0 * l - s)),
                        ((0.0, 2.0 * l), (-c, 2.0 * l - s)),
                    ],
                )
            }
            Topology::Kagome => {
                let a = p / 2.0;
                let h = s3 / 2.0 * a;
                Cell::new(
                    2.0 * h,
                    a,
                    vec![
                        ((0.0, 0.0), (a, 0.0)),
                        ((0.0, 0.0), (a / 2.0, h)),
                        ((a, 0.0), (a / 2.0, h)),
                        ((a, 0.0), (2.0 * a, 0.0)),
                        ((a / 2.0, h), (a, 2.0 * h)),
                        ((a / 2.0, h), (0.0, 2.0 * h)),
                    ],
                )
            }
            Topology::FishScale => {
                // semicircular scales meeting tangentially at the crowns of the row below
                let r = p / 2.0;
                let pts: Vec<(f64, f64)> = (0..=FISH_SCALE_SEGMENTS)
                    .map(|k| {
                        let phi = PI * (1.0 - k as f64 / FISH_SCALE_SEGMENTS as f64);
                        (r + r * phi.cos(), r * phi.sin())
                    })
                    .collect();
                Cell::new(r, r, pts.windows(2).map(|w| (w[0], w[1])).collect())
            }
        }
    }
}

const FISH_SCALE_SEGMENTS: usize = 8;

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = SkinError;
    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| SkinError::validation(format!("unknown topology '{s}'")))
    }
}

type Segment = ((f64, f64), (f64, f64));

struct Cell {
    pitch: f64,
    odd_offset: f64,
    segments: Vec<Segment>,
}

impl Cell {
    fn new(pitch: f64, odd_offset: f64, segments: Vec<Segment>) -> Self {
        Self {
            pitch,
            odd_offset,
            segments,
        }
    }
}

/// Band and budget shared by every topology in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandSpec {
    /// Cylinder radius, mm.
    pub radius: f64,
    /// Band height along the cylinder axis, mm.
    pub height: f64,
    /// Unit cells around the circumference.
    pub cells_around: usize,
    /// Total metal mass, g.
    pub mass_budget: f64,
    /// Metal density, g/mm^3.
    pub density: f64,
    /// Out-of-plane member thickness, mm.
    pub thickness: f64,
    /// Largest vertical stretch accepted when fitting whole rows to the height.
    pub max_row_stretch: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec {
            radius: 30.0,
            height: 30.0,
            cells_around: 12,
            mass_budget: 30.0,
            density: 7.88e-3,
            thickness: 3.0,
            max_row_stretch: 0.25,
        }
    }
}

impl BandSpec {
    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.radius
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.radius, self.height, self.mass_budget, self.density, self.thickness];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.cells_around == 0 {
            return Err(SkinError::validation(
                "band dimensions and mass budget must be positive",
            ));
        }
        Ok(())
    }
}

/// A topology tiled on the band, before member sizing.
#[derive(Debug, Clone)]
pub struct TiledBand {
    pub topology: Topology,
    pub nodes: Vec<Vector3<f64>>,
    pub members: Vec<[usize; 2]>,
    pub bottom_nodes: Vec<usize>,
    pub top_nodes: Vec<usize>,
    pub rows: usize,
    pub total_length: f64,
}

const KEY_SCALE: f64 = 1e6;
const EPS: f64 = 1e-9;

/// Tiles whole rows of `topology` on the unwrapped band, stretching rows
/// vertically so they fill the band height exactly.
pub fn tile(topology: Topology, band: &BandSpec) -> Result<TiledBand> {
    band.validate()?;
    let w = band.circumference();
    let period = w / band.cells_around as f64;
    let cell = topology.cell(period);
    let rows = (band.height / cell.pitch).round().max(1.0) as usize;
    let stretch = band.height / (rows as f64 * cell.pitch);
    if (stretch - 1.0).abs() > band.max_row_stretch {
        return Err(SkinError::validation(format!(
            "{topology} rows of pitch {:.3} mm cannot tile a {:.3} mm band",
            cell.pitch, band.height
        )));
    }
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut members = std::collections::BTreeSet::new();
    let mut node_of = |x: f64, y: f64, nodes: &mut Vec<Vector3<f64>>| -> usize {
        let key = ((x * KEY_SCALE).round() as i64, (y * KEY_SCALE).round() as i64);
        *index.entry(key).or_insert_with(|| {
            nodes.push(Vector3::new(x, y, 0.0));
            nodes.len() - 1
        })
    };
    let inside = |x: f64, y: f64| x >= -EPS && x <= w + EPS && y >= -EPS && y <= band.height + EPS;
    for row in 0..rows {
        let y0 = row as f64 * cell.pitch;
        let x0 = if row % 2 == 1 { cell.odd_offset } else { 0.0 };
        for i in -1..=band.cells_around as i64 {
            let ox = x0 + i as f64 * period;
            for &((ax, ay), (bx, by)) in &cell.segments {
                let (ax, ay, bx, by) = (ox + ax, (y0 + ay) * stretch, ox + bx, (y0 + by) * stretch);
                let Some(((ax, ay), (bx, by))) = clip_to_height((ax, ay), (bx, by), band.height) else {
                    continue;
                };
                if !(inside(ax, ay) && inside(bx, by)) {
                    continue;
                }
                let a = node_of(ax, ay, &mut nodes);
                let b = node_of(bx, by, &mut nodes);
                if a != b {
                    members.insert([a.min(b), a.max(b)]);
                }
            }
        }
    }
    let members: Vec<[usize; 2]> = members.into_iter().collect();
    let total_length = members.iter().map(|m| (nodes[m[1]] - nodes[m[0]]).norm()).sum();
    let on = |y: f64| {
        (0..nodes.len())
            .filter(|&n| (nodes[n].y - y).abs() < 1e-6)
            .collect::<Vec<_>>()
    };
    let bottom_nodes = on(0.0);
    let top_nodes = on(band.height);
    if bottom_nodes.is_empty() || top_nodes.is_empty() {
        return Err(SkinError::validation(format!(
            "{topology} leaves no nodes on a band edge"
        )));
    }
    Ok(TiledBand {
        topology,
        nodes,
        members,
        bottom_nodes,
        top_nodes,
        rows,
        total_length,
    })
}

/// Cuts a segment at the bottom and top band edges.
fn clip_to_height(a: (f64, f64), b: (f64, f64), h: f64) -> Option<Segment> {
    let (lo, hi) = if a.1 <= b.1 { (a, b) } else { (b, a) };
    if hi.1 < -EPS || lo.1 > h + EPS {
        return None;
    }
    let at = |y: f64| (lo.0 + (hi.0 - lo.0) * (y - lo.1) / (hi.1 - lo.1), y);
    let lo = if lo.1 < -EPS { at(0.0) } else { lo };
    let hi = if hi.1 > h + EPS { at(h) } else { hi };
    if (hi.1 - lo.1).abs() < EPS && (hi.0 - lo.0).abs() < EPS {
        return None;
    }
    Some((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyResult {
    pub topology: Topology,
    /// In-plane member width meeting the mass budget, mm.
    pub member_width: f64,
    pub raw: BTreeMap<Mode, f64>,
    /// Raw stiffness divided by the best topology in the same mode.
    pub normalized: BTreeMap<Mode, f64>,
    /// 1-based rank per mode, 1 being stiffest.
    pub rank: BTreeMap<Mode, usize>,
    /// Smallest normalized value over the four modes.
    pub worst_mode: f64,
}

/// Raw mode stiffnesses of one topology at the band's mass budget.
pub fn topology_stiffness(topology: Topology, band: &BandSpec, cfg: &MechConfig) -> Result<(f64, BTreeMap<Mode, f64>)> {
    let tiled = tile(topology, band)?;
    let volume = band.mass_budget / band.density;
    let width = volume / (band.thickness * tiled.total_length);
    let section = Section::rectangular(cfg.e_metal, cfg.shear_modulus(cfg.e_metal), width, band.thickness);
    let frame = FrameModel {
        elements: tiled
            .members
            .iter()
            .map(|&nodes| FrameElement {
                nodes,
                section,
                kind: ElementKind::Metal,
                owner: None,
            })
            .collect(),
        nodes: tiled.nodes,
    };
    let model = LatticeModel {
        node_keys: Vec::new(),
        owners: Vec::new(),
        bottom_nodes: tiled.bottom_nodes,
        top_nodes: tiled.top_nodes,
        height: band.height,
        frame,
    };
    let op = model.frame.assemble();
    let mut raw = BTreeMap::new();
    for mode in Mode::ALL {
        raw.insert(mode, solve_mode(model.clone(), &op, mode)?.stiffness);
    }
    Ok((width, raw))
}

/// Ranks topologies at equal mass, normalizing each mode by its best value.
pub fn topology_compare(topologies: &[Topology], band: &BandSpec, cfg: &MechConfig) -> Result<Vec<TopologyResult>> {
    if topologies.is_empty() {
        return Err(SkinError::validation("no topologies to compare"));
    }
    let mut rows = Vec::new();
    for &t in topologies {
        let (w, raw) = topology_stiffness(t, band, cfg)?;
        rows.push((t, w, raw));
    }
    let mut out: Vec<TopologyResult> = rows
        .iter()
        .map(|(t, w, raw)| TopologyResult {
            topology: *t,
            member_width: *w,
            raw: raw.clone(),
            normalized: BTreeMap::new(),
            rank: BTreeMap::new(),
            worst_mode: 0.0,
        })
        .collect();
    for mode in Mode::ALL {
        let best = rows.iter().map(|r| r.2[&mode]).fold(0.0, f64::max);
        for r in out.iter_mut() {
            let v = r.raw[&mode];
            r.normalized.insert(mode, if best > 0.0 { v / best } else { 0.0 });
            let rank = 1 + rows.iter().filter(|o| o.2[&mode] > v).count();
            r.rank.insert(mode, rank);
        }
    }
    for r in out.iter_mut() {
        r.worst_mode = r.normalized.values().copied().fold(f64::INFINITY, f64::min);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_topology_tiles_the_default_band() {
        let band = BandSpec::default();
        for t in Topology::ALL {
            let tiled = tile(t, &band).unwrap();
            assert!(tiled.members.len() > 10, "{t}");
            assert!(!tiled.bottom_nodes.is_empty() && !tiled.top_nodes.is_empty(), "{t}");
        }
    }

    #[test]
    fn equal_mass_sizing() {
        let band = BandSpec::default();
        for t in Topology::ALL {
            let tiled = tile(t, &band).unwrap();
            let (w, _) = topology_stiffness(t, &band, &MechConfig::default()).unwrap();
            let mass = w * band.thickness * tiled.total_length * band.density;
            assert!((mass - band.mass_budget).abs() < 1e-9 * band.mass_budget, "{t}");
        }
    }

    #[test]
    fn self_comparison_normalizes_to_one() {
        let r = topology_compare(&[Topology::Kagome], &BandSpec::default(), &MechConfig::default()).unwrap();
        for m in Mode::ALL {
            assert_eq!(r[0].normalized[&m], 1.0);
            assert_eq!(r[0].rank[&m], 1);
        }
    }

    #[test]
    fn untileable_band_is_rejected() {
        let band = BandSpec {
            height: 3.0,
            max_row_stretch: 0.05,
            ..BandSpec::default()
        };
        assert!(tile(Topology::Cubic, &band).is_err());
    }

    fn compare_all() -> Vec<TopologyResult> {
        topology_compare(&Topology::ALL, &BandSpec::default(), &MechConfig::default()).unwrap()
    }

    fn find(r: &[TopologyResult], t: Topology) -> &TopologyResult {
        r.iter().find(|x| x.topology == t).unwrap()
    }

    #[test]
    fn triangular_beats_hexagonal_in_every_mode() {
        let r = compare_all();
        let (tri, hex) = (find(&r, Topology::Triangular), find(&r, Topology::Hexagonal));
        for m in Mode::ALL {
            assert!(tri.raw[&m] > hex.raw[&m], "{m}");
        }
    }

    #[test]
    fn triangular_has_best_worst_mode() {
        let r = compare_all();
        let tri = find(&r, Topology::Triangular).worst_mode;
        for x in &r {
            if x.topology != Topology::Triangular {
                assert!(tri > x.worst_mode, "{}", x.topology);
            }
        }
        assert_eq!(find(&r, Topology::Triangular).rank[&Mode::Shear], 1);
    }

    #[test]
    #[ignore = "an axis-aligned square grid is stretch dominated along the band axis and out-stiffs the triangular lattice in axial, bending and torsion at equal mass"]
    fn triangular_ranks_first_in_every_mode() {
        let r = compare_all();
        for m in Mode::ALL {
            assert_eq!(find(&r, Topology::Triangular).rank[&m], 1, "{m}");
        }
    }

    #[test]
    fn names_round_trip() {
        for t in Topology::ALL {
            assert_eq!(t.name().parse::<Topology>().unwrap(), t);
        }
    }
}
