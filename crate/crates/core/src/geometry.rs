//! Helical band geometry, unwrapped-sheet addressing and closed-form kinematics.
//!
//! Lengths are millimetres throughout. The kinematic functions are plain
//! formulas over the parameter vector and do not re-validate it; `build_grid`
//! is the validating entry point.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::voxel::VoxelRecord;

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Geometric and material parameter vector of one band design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignParams {
    /// Cylinder radius.
    pub r: f64,
    /// Helix turn count.
    pub m: u32,
    /// Voxels per turn.
    pub n_theta: u32,
    /// Stacked layers.
    pub n_z: u32,
    /// Nominal voxel edge length.
    pub s_0: f64,
    /// Fabricated (reduced) edge length.
    pub s_l: f64,
    /// Interlayer stand-off.
    pub h_0: f64,
    /// Metal ligament thickness.
    pub t_f: f64,
    pub t_sheet: f64,
    /// Ligament thickness fraction `t_f / t_sheet`.
    pub phi_f: f64,
    /// Ligament width fraction; width = `alpha * s_0`.
    pub alpha: f64,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl DesignParams {
    /// The 4 x 20 reference band: ten 18 mm voxels per turn, two turns, four layers.
    pub fn reference() -> Self {
        let n_theta = 10;
        let s_0 = 18.0;
        DesignParams {
            r: s_0 * n_theta as f64 / (2.0 * PI),
            m: 2,
            n_theta,
            n_z: 4,
            s_0,
            s_l: 12.6,
            h_0: 2.0,
            t_f: 1.0,
            t_sheet: 3.0,
            phi_f: 1.0 / 3.0,
            alpha: 1.0 / 6.0,
        }
    }

    /// Reference band with the deeply reduced edge used for axial compression.
    pub fn compression_reference() -> Self {
        DesignParams {
            s_l: 6.3,
            ..Self::reference()
        }
    }

    /// Same radius, different resolution; `s_0` and `s_l` follow the closure rule.
    pub fn with_n_theta(&self, n_theta: u32) -> Self {
        let s_0 = 2.0 * PI * self.r / n_theta as f64;
        DesignParams {
            n_theta,
            s_0,
            s_l: self.s_l * s_0 / self.s_0,
            ..*self
        }
    }

    /// Changes the metal thickness at fixed sheet thickness.
    pub fn with_t_f(&self, t_f: f64) -> Self {
        DesignParams {
            t_f,
            phi_f: t_f / self.t_sheet,
            ..*self
        }
    }

    /// Changes the sheet thickness at fixed metal thickness.
    pub fn with_t_sheet(&self, t_sheet: f64) -> Self {
        DesignParams {
            t_sheet,
            phi_f: self.t_f / t_sheet,
            ..*self
        }
    }

    /// Ligament width `alpha * s_0`.
    pub fn ligament_width(&self) -> f64 {
        self.alpha * self.s_0
    }

    pub fn cols(&self) -> usize {
        (self.n_theta * self.m) as usize
    }

    pub fn rows(&self) -> usize {
        self.n_z as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(SkinError::validation(what.to_string()));
        let finite = [
            self.r,
            self.s_0,
            self.s_l,
            self.h_0,
            self.t_f,
            self.t_sheet,
            self.phi_f,
            self.alpha,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite");
        }
        if self.r <= 0.0 {
            return fail("r > 0");
        }
        if self.m < 1 {
            return fail("m >= 1");
        }
        if self.n_theta < 3 {
            return fail("n_theta >= 3");
        }
        if self.n_z < 1 {
            return fail("n_z >= 1");
        }
        if self.s_l <= 0.0 || self.s_0 <= 0.0 {
            return fail("s_0 > 0 and s_l > 0");
        }
        if self.s_l >= self.s_0 {
            return fail("s_l < s_0 (fabrication reduces edge length)");
        }
        if self.h_0 < 0.0 {
            return fail("h_0 >= 0");
        }
        if self.t_sheet <= 0.0 || self.t_f <= 0.0 {
            return fail("t_sheet > 0 and t_f > 0");
        }
        if !(self.phi_f > 0.0 && self.phi_f <= 1.0) {
            return fail("phi_f in (0, 1]");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha in (0, 1)");
        }
        if ((self.t_f - self.phi_f * self.t_sheet) / self.t_f).abs() > 1e-9 {
            return fail("t_f = phi_f * t_sheet");
        }
        let circ = 2.0 * PI * self.r;
        if ((self.s_0 * self.n_theta as f64 - circ) / circ).abs() > 1e-6 {
            return fail("circumferential closure s_0 * n_theta = 2*pi*r");
        }
        Ok(())
    }
}

/// Row-major voxel address: `row` is the layer from the bottom, `col` the
/// azimuthal index unrolled across turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    pub row: usize,
    pub col: usize,
}

impl Address {
    pub const fn new(row: usize, col: usize) -> Self {
        Address { row, col }
    }

    /// Compact `row,col` form used as a JSON object key.
    pub fn key(&self) -> String {
        format!("{},{}", self.row, self.col)
    }
}

impl std::str::FromStr for Address {
    type Err = SkinError;

    /// Parses `row,col`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let bad = || SkinError::validation(format!("address '{s}' is not of the form row,col"));
        let (r, c) = inner.split_once(',').ok_or_else(bad)?;
        Ok(Address::new(
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Up,
    Down,
}

impl Orientation {
    /// Even columns point up.
    pub fn of_col(col: usize) -> Self {
        if col.is_multiple_of(2) {
            Orientation::Up
        } else {
            Orientation::Down
        }
    }
}

/// Unwrapped row-column sheet of triangular voxels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub params: DesignParams,
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells; `cells[row * cols + col]`.
    pub cells: Vec<VoxelRecord>,
}

impl VoxelGrid {
    pub fn index(&self, a: Address) -> Option<usize> {
        (a.row < self.rows && a.col < self.cols).then(|| a.row * self.cols + a.col)
    }

    pub fn contains(&self, a: Address) -> bool {
        self.index(a).is_some()
    }

    pub fn cell(&self, a: Address) -> Option<&VoxelRecord> {
        self.index(a).map(|i| &self.cells[i])
    }

    pub fn cell_mut(&mut self, a: Address) -> Option<&mut VoxelRecord> {
        self.index(a).map(move |i| &mut self.cells[i])
    }

    pub fn orientation(&self, a: Address) -> Orientation {
        Orientation::of_col(a.col)
    }

    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Address::new(r, c)))
    }

    /// Addresses of cells that are not trimmed.
    pub fn active_addresses(&self) -> Vec<Address> {
        self.cells
            .iter()
            .filter(|c| !c.is_trimmed())
            .map(|c| c.address)
            .collect()
    }

    pub fn is_active(&self, a: Address) -> bool {
        self.cell(a).is_some_and(|c| !c.is_trimmed())
    }

    /// Edge-adjacent neighbours of a voxel within the grid bounds.
    ///
    /// In-row neighbours share a slanted edge. Across rows, odd rows are
    /// shifted by half an edge, so an up triangle shares its base with the
    /// down triangle below it and a down triangle shares its top edge with the
    /// up triangle above.
    pub fn neighbors(&self, a: Address) -> Vec<Address> {
        let mut out = Vec::with_capacity(3);
        if a.col > 0 {
            out.push(Address::new(a.row, a.col - 1));
        }
        if a.col + 1 < self.cols {
            out.push(Address::new(a.row, a.col + 1));
        }
        match self.orientation(a) {
            Orientation::Up if a.row > 0 => {
                // base nodes at half-edge positions p, p+2 with p = parity(row) + col
                let p = a.row % 2 + a.col;
                // the down triangle below has top nodes q+1, q+3 with q = parity(row-1) + 2k
                let q = (a.row - 1) % 2;
                if p > q && (p - q - 1).is_multiple_of(2) {
                    let k = (p - q - 1) / 2;
                    let col = 2 * k + 1;
                    if col < self.cols {
                        out.push(Address::new(a.row - 1, col));
                    }
                }
            }
            Orientation::Down if a.row + 1 < self.rows => {
                let k = a.col / 2;
                let p = a.row % 2 + 2 * k + 1;
                let q = (a.row + 1) % 2;
                if p >= q && (p - q).is_multiple_of(2) {
                    let col = p - q;
                    if col < self.cols {
                        out.push(Address::new(a.row + 1, col));
                    }
                }
            }
            _ => {}
        }
        out
    }
}

/// Builds the unwrapped grid: `n_z` rows by `n_theta * m` columns, all voxels
/// solid and healthy.
pub fn build_grid(params: &DesignParams) -> Result<VoxelGrid> {
    params.validate()?;
    let rows = params.rows();
    let cols = params.cols();
    let cells = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| VoxelRecord::new(Address::new(r, c))))
        .collect();
    Ok(VoxelGrid {
        params: *params,
        rows,
        cols,
        cells,
    })
}

/// Band height `H = (sqrt3/2) S_0 N_z + (N_z - 1) h_0`.
pub fn band_height(p: &DesignParams) -> f64 {
    let n_z = p.n_z as f64;
    SQRT3_2 * p.s_0 * n_z + (n_z - 1.0).max(0.0) * p.h_0
}

/// Stroke bound `(sqrt3/2) S_L N_z`.
pub fn max_stroke(p: &DesignParams) -> f64 {
    SQRT3_2 * p.s_l * p.n_z as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRatio {
    pub ratio: f64,
    /// False when the stand-off is too large for the `S_L / S_0` approximation.
    pub valid: bool,
}

pub fn compression_ratio(p: &DesignParams) -> CompressionRatio {
    CompressionRatio {
        ratio: p.s_l / p.s_0,
        valid: p.h_0 <= 0.1 * SQRT3_2 * p.s_0,
    }
}

/// Unwrapped sheet area `2 pi m R H`.
pub fn sheet_area(p: &DesignParams) -> f64 {
    2.0 * PI * p.m as f64 * p.r * band_height(p)
}

/// Stiffness per unit unwrapped sheet area.
pub fn normalize_stiffness(k: f64, p: &DesignParams) -> Result<f64> {
    let area = sheet_area(p);
    if area <= 0.0 || !area.is_finite() {
        return Err(SkinError::validation("sheet area must be positive"));
    }
    Ok(k / area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_dimensions() {
        let g = build_grid(&DesignParams::reference()).unwrap();
        assert_eq!((g.rows, g.cols), (4, 20));
        assert_eq!(g.cells.len(), 80);
        assert!(g.cells.iter().all(|c| c.is_healthy_solid()));
    }

    #[test]
    fn minimal_closure_grid_alternates() {
        let p = DesignParams {
            n_theta: 3,
            m: 1,
            n_z: 1,
            r: 3.0 * 18.0 / (2.0 * PI),
            ..DesignParams::reference()
        };
        let g = build_grid(&p).unwrap();
        assert_eq!((g.rows, g.cols), (1, 3));
        let o: Vec<_> = g.addresses().map(|a| g.orientation(a)).collect();
        assert_eq!(o, vec![Orientation::Up, Orientation::Down, Orientation::Up]);
    }

    #[test]
    fn closure_violation_rejected() {
        let p = DesignParams {
            r: 30.0,
            ..DesignParams::reference()
        };
        let err = build_grid(&p).unwrap_err();
        assert!(err.to_string().contains("closure"), "{err}");
    }

    #[test]
    fn other_invariants_rejected() {
        let base = DesignParams::reference();
        let bad = [
            DesignParams { s_l: 18.0, ..base },
            DesignParams { t_f: 1.5, ..base },
            DesignParams { alpha: 1.0, ..base },
            DesignParams { h_0: -1.0, ..base },
        ];
        for p in bad {
            assert!(matches!(build_grid(&p), Err(SkinError::Validation(_))));
        }
    }

    #[test]
    fn band_height_examples() {
        let p = DesignParams::reference();
        assert_relative_eq!(
            band_height(&p),
            0.866_025_403_784_438_6 * 72.0 + 6.0,
            max_relative = 1e-12
        );
        assert!((band_height(&p) - 68.354).abs() < 1e-3);
        let one = DesignParams { n_z: 1, h_0: 7.0, ..p };
        assert!((band_height(&one) - 15.588).abs() < 1e-3);
    }

    #[test]
    fn stroke_and_ratio_examples() {
        let p = DesignParams::reference();
        assert!((max_stroke(&p) - 43.648).abs() < 1e-3);
        assert!((max_stroke(&DesignParams::compression_reference()) - 21.824).abs() < 1e-3);
        assert_eq!(max_stroke(&DesignParams { s_l: 0.0, ..p }), 0.0);

        let c = compression_ratio(&DesignParams { h_0: 0.0, ..p });
        assert_relative_eq!(c.ratio, 0.7, max_relative = 1e-12);
        assert!(c.valid);
        assert!(!compression_ratio(&DesignParams { h_0: 5.0, ..p }).valid);
        let near = compression_ratio(&DesignParams { s_l: 18.0 - 1e-9, ..p });
        assert!((near.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn area_examples() {
        let p = DesignParams {
            m: 3,
            r: 30.0,
            ..DesignParams::reference()
        };
        assert!((sheet_area(&p) - 38_653.18).abs() < 0.01);
        let q = DesignParams {
            m: 1,
            r: 30.0,
            n_z: 1,
            h_0: 0.0,
            ..DesignParams::reference()
        };
        assert!((sheet_area(&q) - 2938.3).abs() < 0.1);
        let k = normalize_stiffness(1000.0, &p).unwrap();
        assert!((k - 0.02587).abs() < 1e-5);
        assert_eq!(normalize_stiffness(0.0, &p).unwrap(), 0.0);
        let flat = DesignParams { s_0: 0.0, n_z: 1, ..p };
        assert!(normalize_stiffness(1.0, &flat).is_err());
    }

    #[test]
    fn neighbors_are_symmetric_and_bounded() {
        let g = build_grid(&DesignParams::reference()).unwrap();
        for a in g.addresses() {
            let n = g.neighbors(a);
            assert!(n.len() <= 3);
            for b in n {
                assert!(g.neighbors(b).contains(&a), "{a} -> {b}");
            }
        }
        // interior voxels have all three neighbours
        assert_eq!(g.neighbors(Address::new(1, 5)).len(), 3);
        assert_eq!(g.neighbors(Address::new(2, 6)).len(), 3);
    }
}
