//! Virtual-joint activation patterns, their evaluation and axial compression.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};
use crate::geometry::{band_height, max_stroke, Address, DesignParams, VoxelGrid, SQRT3_2};
use crate::mechanics::{build_lattice, solve_mode, stiffness_report, MechConfig, Mode, StiffnessReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    BendUnilateral,
    HingeBilateral,
    Twist,
    Shear,
    AxialCompress,
}

impl JointKind {
    pub const ALL: [JointKind; 5] = [
        JointKind::BendUnilateral,
        JointKind::HingeBilateral,
        JointKind::Twist,
        JointKind::Shear,
        JointKind::AxialCompress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JointKind::BendUnilateral => "bend_unilateral",
            JointKind::HingeBilateral => "hinge_bilateral",
            JointKind::Twist => "twist",
            JointKind::Shear => "shear",
            JointKind::AxialCompress => "axial_compress",
        }
    }

    fn is_hinge(self) -> bool {
        matches!(self, JointKind::BendUnilateral | JointKind::HingeBilateral)
    }
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointKind {
    type Err = SkinError;
    fn from_str(s: &str) -> Result<Self> {
        JointKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SkinError::validation(format!("unknown joint kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    #[default]
    Small,
    Large,
}

impl SizeClass {
    fn factor(self) -> usize {
        match self {
            SizeClass::Small => 1,
            SizeClass::Large => 2,
        }
    }
}

fn default_stagger() -> usize {
    1
}

fn default_gap() -> usize {
    1
}

/// Parametric description of a virtual joint.
///
/// Rows count along the skin axis, columns around the circumference. The
/// anchor is the lowest-row, lowest-column corner of the band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub kind: JointKind,
    pub location: Address,
    /// Band thickness in rows. Large joints use twice as many rows.
    pub band_width: usize,
    #[serde(default)]
    pub magnitude: SizeClass,
    /// Full rows melted by an axial compression joint.
    #[serde(default)]
    pub rows_activated: Option<usize>,
    /// Column offset between consecutive rows of a staggered band.
    #[serde(default = "default_stagger")]
    pub stagger: usize,
    /// Melted run length in columns. Unilateral bands default to the rest of
    /// the row; staggered bands default to a kind-specific run.
    #[serde(default)]
    pub span: Option<usize>,
    /// Solid columns left between consecutive runs of a staggered band.
    #[serde(default = "default_gap")]
    pub gap: usize,
}

impl JointSpec {
    pub fn new(kind: JointKind, location: Address, band_width: usize, magnitude: SizeClass) -> Self {
        Self {
            kind,
            location,
            band_width,
            magnitude,
            rows_activated: None,
            stagger: default_stagger(),
            span: None,
            gap: default_gap(),
        }
    }

    pub fn axial_compress(rows: usize) -> Self {
        Self {
            rows_activated: Some(rows),
            ..Self::new(JointKind::AxialCompress, Address::new(0, 0), 1, SizeClass::Small)
        }
    }

    pub fn with_span(mut self, span: usize) -> Self {
        self.span = Some(span);
        self
    }
}

/// Default run length of a twist band: long runs bridged by single solid
/// columns, which frees rotation about the sheet normal.
pub const TWIST_RUN: usize = 9;
/// Default run length of a shear band: short runs whose solid bridges form
/// inclined struts, which frees lateral sliding while carrying axial load.
pub const SHEAR_RUN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationPattern {
    pub label: String,
    #[serde(default)]
    pub spec: Option<JointSpec>,
    pub addresses: BTreeSet<Address>,
}

impl ActivationPattern {
    pub fn new(label: impl Into<String>, addresses: impl IntoIterator<Item = Address>) -> Self {
        Self {
            label: label.into(),
            spec: None,
            addresses: addresses.into_iter().collect(),
        }
    }

    pub fn validate(&self, grid: &VoxelGrid) -> Result<()> {
        for a in &self.addresses {
            match grid.cell(*a) {
                None => return Err(SkinError::validation(format!("pattern address {a} outside grid"))),
                Some(c) if c.is_trimmed() => {
                    return Err(SkinError::validation(format!("pattern references trimmed voxel {a}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Image under the half-turn that maps the sheet onto itself.
    pub fn half_turn(&self, grid: &VoxelGrid) -> Self {
        Self {
            label: self.label.clone(),
            spec: None,
            addresses: self.addresses.iter().map(|&a| half_turn_address(grid, a)).collect(),
        }
    }
}

/// Image of a voxel under a half-turn about the sheet centre.
///
/// Every row of triangles is a parallelogram and consecutive rows shift by
/// half an edge, so a reflection never maps the lattice onto itself. A
/// half-turn does whenever the row count is even: it exchanges up and down
/// triangles and carries row `r` onto row `rows - 1 - r`.
pub fn half_turn_address(grid: &VoxelGrid, a: Address) -> Address {
    Address::new(grid.rows - 1 - a.row, grid.cols - 1 - a.col)
}

/// True when the half-turn maps the lattice of `grid` onto itself.
pub fn has_half_turn_symmetry(grid: &VoxelGrid) -> bool {
    grid.rows.is_multiple_of(2) && grid.cols.is_multiple_of(2)
}

fn span_error(spec: &JointSpec, grid: &VoxelGrid) -> SkinError {
    SkinError::validation(format!(
        "{} band anchored at {} with width {} does not fit a {}x{} grid",
        spec.kind, spec.location, spec.band_width, grid.rows, grid.cols
    ))
}

/// Deterministic address set for a joint specification.
pub fn synthesize_pattern(spec: &JointSpec, grid: &VoxelGrid) -> Result<ActivationPattern> {
    if spec.band_width == 0 {
        return Err(SkinError::validation("band_width must be at least 1"));
    }
    if spec.kind != JointKind::AxialCompress && !grid.contains(spec.location) {
        return Err(SkinError::validation(format!("anchor {} outside grid", spec.location)));
    }
    let f = spec.magnitude.factor();
    let (r0, c0) = (spec.location.row, spec.location.col);
    let mut set = BTreeSet::new();
    match spec.kind {
        JointKind::BendUnilateral => {
            let rows = spec.band_width * f;
            let cols = spec.span.unwrap_or(grid.cols.saturating_sub(c0));
            if cols == 0 || r0 + rows > grid.rows || c0 + cols > grid.cols {
                return Err(span_error(spec, grid));
            }
            for r in r0..r0 + rows {
                for c in c0..c0 + cols {
                    set.insert(Address::new(r, c));
                }
            }
        }
        JointKind::HingeBilateral => {
            let rows = spec.band_width * f;
            if r0 + rows > grid.rows {
                return Err(span_error(spec, grid));
            }
            for r in r0..r0 + rows {
                for c in 0..grid.cols {
                    set.insert(Address::new(r, c));
                }
            }
        }
        JointKind::Twist | JointKind::Shear => {
            let rows = spec.band_width * f;
            let default_run = if spec.kind == JointKind::Twist {
                TWIST_RUN
            } else {
                SHEAR_RUN
            };
            let run = spec.span.unwrap_or(default_run);
            if run == 0 || r0 + rows > grid.rows || run > grid.cols {
                return Err(span_error(spec, grid));
            }
            staggered_band(grid, &mut set, r0, rows, c0, run, spec.gap, spec.stagger);
        }
        JointKind::AxialCompress => {
            let rows = spec
                .rows_activated
                .ok_or_else(|| SkinError::validation("axial_compress requires rows_activated"))?;
            if rows == 0 || rows > grid.rows {
                return Err(SkinError::validation(format!(
                    "rows_activated must lie in 1..={}, got {rows}",
                    grid.rows
                )));
            }
            for r in 0..rows {
                for c in 0..grid.cols {
                    set.insert(Address::new(r, c));
                }
            }
        }
    }
    set.retain(|a| grid.is_active(*a));
    Ok(ActivationPattern {
        label: format!("{}_{}", spec.kind, if f == 1 { "small" } else { "large" }),
        spec: Some(spec.clone()),
        addresses: set,
    })
}

/// Runs of `run` melted columns repeating every `run + gap` columns in each
/// of `rows` rows, shifted by `stagger` columns per row and clipped to the
/// grid.
#[allow(clippy::too_many_arguments)]
fn staggered_band(
    grid: &VoxelGrid,
    set: &mut BTreeSet<Address>,
    r0: usize,
    rows: usize,
    c0: usize,
    run: usize,
    gap: usize,
    stagger: usize,
) {
    let period = (run + gap) as i64;
    let cols = grid.cols as i64;
    for i in 0..rows {
        let phase = (c0 + stagger * i) as i64;
        let mut start = phase - period * (phase / period + 1);
        while start < cols {
            for c in start.max(0)..(start + run as i64).min(cols) {
                set.insert(Address::new(r0 + i, c as usize));
            }
            start += period;
        }
    }
}

/// The six canonical joint configurations on a grid, keyed by label.
pub fn preset_specs(grid: &VoxelGrid) -> Vec<(String, JointSpec)> {
    let mid_row = grid.rows.saturating_sub(1) / 2;
    let band_row = mid_row.min(grid.rows.saturating_sub(2));
    vec![
        (
            "bend_unilateral_small".into(),
            JointSpec::new(JointKind::BendUnilateral, Address::new(0, 0), 1, SizeClass::Small),
        ),
        (
            "bend_unilateral_large".into(),
            JointSpec::new(JointKind::BendUnilateral, Address::new(0, 0), 1, SizeClass::Large),
        ),
        (
            "hinge_bilateral_small".into(),
            JointSpec::new(JointKind::HingeBilateral, Address::new(mid_row, 0), 1, SizeClass::Small),
        ),
        (
            "hinge_bilateral_large".into(),
            JointSpec::new(JointKind::HingeBilateral, Address::new(mid_row, 0), 1, SizeClass::Large),
        ),
        (
            "twist".into(),
            JointSpec::new(JointKind::Twist, Address::new(band_row, 0), 2, SizeClass::Small),
        ),
        (
            "shear".into(),
            JointSpec::new(JointKind::Shear, Address::new(band_row, 0), 2, SizeClass::Small),
        ),
    ]
}

pub fn presets(grid: &VoxelGrid) -> Result<Vec<ActivationPattern>> {
    preset_specs(grid)
        .into_iter()
        .map(|(label, spec)| {
            let mut p = synthesize_pattern(&spec, grid)?;
            p.label = label;
            Ok(p)
        })
        .collect()
}

/// Names of the nested activation sets used for stepwise modulation.
pub const ACTIVATION_SETS: [(&str, usize); 6] = [
    ("Zero", 0),
    ("Two", 2),
    ("Three", 3),
    ("Four", 4),
    ("Six", 6),
    ("Twelve", 12),
];

/// Voxels sorted by distance of their centroid from the sheet centre, ties
/// broken by address.
fn centre_order(grid: &VoxelGrid) -> Vec<Address> {
    let s0 = grid.params.s_0;
    let centroid = |a: Address| {
        let x = (a.col as f64 + 1.0 + (a.row % 2) as f64) * s0 / 2.0;
        let y = (a.row as f64 + 0.5) * SQRT3_2 * s0;
        (x, y)
    };
    let xc = (grid.cols as f64 + 2.0) / 2.0 * s0 / 2.0;
    let yc = grid.rows as f64 * SQRT3_2 * s0 / 2.0;
    let mut v: Vec<(i64, Address)> = grid
        .active_addresses()
        .into_iter()
        .map(|a| {
            let (x, y) = centroid(a);
            ((((x - xc).powi(2) + (y - yc).powi(2)) * 1e6).round() as i64, a)
        })
        .collect();
    v.sort();
    v.into_iter().map(|(_, a)| a).collect()
}

/// The named activation set, nested so that each set contains all smaller ones.
pub fn activation_set(grid: &VoxelGrid, name: &str) -> Result<ActivationPattern> {
    let count = ACTIVATION_SETS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, c)| *c)
        .ok_or_else(|| SkinError::validation(format!("unknown activation set '{name}'")))?;
    let order = centre_order(grid);
    if count > order.len() {
        return Err(SkinError::validation(format!(
            "grid has fewer than {count} active voxels"
        )));
    }
    Ok(ActivationPattern::new(name, order.into_iter().take(count)))
}

/// Two-voxel patterns near the sheet centre for comparing pair orientation.
///
/// The axial pair stacks two voxels along the skin axis across a shared
/// horizontal edge. Each circumferential pair lies in one of the two rows the
/// axial pair occupies, at the same columns, so averaging the two separates
/// orientation from position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPatterns {
    pub axial: ActivationPattern,
    pub circumferential: [ActivationPattern; 2],
}

pub fn two_patterns(grid: &VoxelGrid) -> Result<PairPatterns> {
    if grid.rows < 2 || grid.cols < 3 {
        return Err(SkinError::validation("grid too small for two-voxel patterns"));
    }
    let r = (grid.rows - 2) / 2;
    let mid = grid.cols / 2;
    let (lower, upper) = [mid - 1, mid]
        .into_iter()
        .map(|c| Address::new(r, c))
        .find_map(|a| grid.neighbors(a).into_iter().find(|n| n.row == r + 1).map(|n| (a, n)))
        .ok_or_else(|| SkinError::validation("no stacked voxel pair near the centre"))?;
    let c0 = lower.col.min(upper.col);
    let c1 = lower.col.max(upper.col);
    let circ = |row: usize, label: &str| ActivationPattern::new(label, [Address::new(row, c0), Address::new(row, c1)]);
    let out = PairPatterns {
        axial: ActivationPattern::new("two_axial", [lower, upper]),
        circumferential: [
            circ(r, "two_circumferential_lower"),
            circ(r + 1, "two_circumferential_upper"),
        ],
    };
    for p in std::iter::once(&out.axial).chain(&out.circumferential) {
        p.validate(grid)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub label: String,
    pub before: StiffnessReport,
    pub after: StiffnessReport,
    /// Mode with the largest relative stiffness drop.
    pub dominant_mode: Mode,
    /// Fractional drop per mode, in mode order.
    pub relative_drop: BTreeMap<Mode, f64>,
    /// Rotational stiffness about the band axis (hinge kinds only).
    pub rotational_stiffness: Option<f64>,
    pub localization: f64,
}

fn dominant(before: &StiffnessReport, after: &StiffnessReport) -> (Mode, BTreeMap<Mode, f64>) {
    let drops: BTreeMap<Mode, f64> = Mode::ALL
        .into_iter()
        .map(|m| {
            let b = before.get(m);
            (m, if b > 0.0 { 1.0 - after.get(m) / b } else { 0.0 })
        })
        .collect();
    let mut best = Mode::Axial;
    for m in Mode::ALL {
        if drops[&m] > drops[&best] {
            best = m;
        }
    }
    (best, drops)
}

/// Stiffness before and after activation, dominant compliant mode, and strain
/// localization under that mode.
pub fn evaluate_pattern(grid: &VoxelGrid, pattern: &ActivationPattern, cfg: &MechConfig) -> Result<JointReport> {
    pattern.validate(grid)?;
    let before = stiffness_report(grid, &BTreeSet::new(), cfg)?;
    let after = if pattern.addresses.is_empty() {
        before.clone()
    } else {
        stiffness_report(grid, &pattern.addresses, cfg)?
    };
    let (dominant_mode, relative_drop) = dominant(&before, &after);
    let is_hinge = pattern.spec.as_ref().map(|s| s.kind.is_hinge()).unwrap_or(false);
    let localization = if pattern.addresses.is_empty() {
        0.0
    } else {
        localization_metric(grid, pattern, dominant_mode, cfg)?
    };
    Ok(JointReport {
        label: pattern.label.clone(),
        rotational_stiffness: is_hinge.then_some(after.bending),
        before,
        after,
        dominant_mode,
        relative_drop,
        localization,
    })
}

/// Activated voxels together with their edge-adjacent neighbours.
pub fn one_ring(grid: &VoxelGrid, addresses: &BTreeSet<Address>) -> BTreeSet<Address> {
    let mut out = addresses.clone();
    for &a in addresses {
        out.extend(grid.neighbors(a).into_iter().filter(|n| grid.is_active(*n)));
    }
    out
}

/// Fraction of strain energy stored in the activated voxels and their 1-ring
/// under the given load case.
pub fn localization_metric(grid: &VoxelGrid, pattern: &ActivationPattern, mode: Mode, cfg: &MechConfig) -> Result<f64> {
    if pattern.addresses.is_empty() {
        return Err(SkinError::validation("localization of an empty pattern is undefined"));
    }
    pattern.validate(grid)?;
    let model = build_lattice(grid, &pattern.addresses, cfg)?;
    let op = model.frame.assemble();
    let sol = solve_mode(model, &op, mode)?;
    let region = one_ring(grid, &pattern.addresses);
    let energies = sol.voxel_energies();
    let total: f64 = energies.values().sum();
    if total <= 0.0 {
        return Err(SkinError::validation("load case stores no strain energy"));
    }
    let inside: f64 = energies
        .iter()
        .filter(|(a, _)| region.contains(a))
        .map(|(_, e)| e)
        .sum();
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Axial shortening fraction when `rows_activated` full rows melt and
/// collapse by their full stroke.
pub fn predict_compression(params: &DesignParams, rows_activated: usize) -> Result<f64> {
    params.validate()?;
    if rows_activated > params.n_z as usize {
        return Err(SkinError::validation(format!(
            "rows_activated {rows_activated} exceeds N_z = {}",
            params.n_z
        )));
    }
    let per_row = max_stroke(params) / params.n_z as f64;
    Ok(per_row * rows_activated as f64 / band_height(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use approx::assert_relative_eq;

    fn grid() -> VoxelGrid {
        build_grid(&DesignParams::reference()).unwrap()
    }

    #[test]
    fn compression_examples() {
        let p = DesignParams::compression_reference();
        let full = predict_compression(&p, 4).unwrap();
        let oracle = (3f64.sqrt() / 2.0 * 6.3 * 4.0) / (3f64.sqrt() / 2.0 * 18.0 * 4.0 + 6.0);
        assert_relative_eq!(full, oracle, max_relative = 1e-12);
        assert!((full - 0.319).abs() < 5e-4);
        assert_eq!(predict_compression(&p, 0).unwrap(), 0.0);
        assert!((predict_compression(&p, 2).unwrap() - 0.160).abs() < 5e-4);
        assert!(predict_compression(&p, 5).is_err());
    }

    #[test]
    fn hinge_large_contains_small() {
        let g = grid();
        let small = synthesize_pattern(
            &JointSpec::new(JointKind::HingeBilateral, Address::new(1, 0), 1, SizeClass::Small),
            &g,
        )
        .unwrap();
        let large = synthesize_pattern(
            &JointSpec::new(JointKind::HingeBilateral, Address::new(1, 0), 1, SizeClass::Large),
            &g,
        )
        .unwrap();
        assert!(small.addresses.is_subset(&large.addresses));
        assert_eq!(small.addresses.len(), 20);
        assert_eq!(large.addresses.len(), 40);
    }

    #[test]
    fn axial_compress_all_rows_is_everything() {
        let g = grid();
        let p = synthesize_pattern(&JointSpec::axial_compress(4), &g).unwrap();
        assert_eq!(p.addresses.len(), 80);
        assert!(synthesize_pattern(&JointSpec::axial_compress(5), &g).is_err());
        assert!(synthesize_pattern(&JointSpec::axial_compress(0), &g).is_err());
    }

    #[test]
    fn twist_staggers_one_column_per_row() {
        let g = grid();
        let spec = JointSpec::new(JointKind::Twist, Address::new(0, 3), 4, SizeClass::Small).with_span(1);
        let p = synthesize_pattern(&JointSpec { gap: 19, ..spec }, &g).unwrap();
        let cols: Vec<_> = p.addresses.iter().map(|a| (a.row, a.col)).collect();
        assert_eq!(cols, vec![(0, 3), (1, 4), (2, 5), (3, 6)]);
        let band = synthesize_pattern(
            &JointSpec::new(JointKind::Twist, Address::new(1, 0), 2, SizeClass::Small),
            &g,
        )
        .unwrap();
        for a in &band.addresses {
            if a.row == 1 && a.col + 1 < g.cols {
                let shifted = Address::new(2, a.col + 1);
                assert!(band.addresses.contains(&shifted), "{shifted} missing");
            }
        }
    }

    #[test]
    fn oversized_band_rejected() {
        let g = grid();
        let spec = JointSpec::new(JointKind::HingeBilateral, Address::new(3, 0), 1, SizeClass::Large);
        assert!(synthesize_pattern(&spec, &g).is_err());
        let spec = JointSpec::new(JointKind::Twist, Address::new(3, 0), 2, SizeClass::Small);
        assert!(synthesize_pattern(&spec, &g).is_err());
        let spec = JointSpec::new(JointKind::BendUnilateral, Address::new(0, 15), 1, SizeClass::Small).with_span(6);
        assert!(synthesize_pattern(&spec, &g).is_err());
        let spec = JointSpec::new(JointKind::Shear, Address::new(0, 0), 0, SizeClass::Small);
        assert!(synthesize_pattern(&spec, &g).is_err());
    }

    #[test]
    fn activation_sets_are_nested() {
        let g = grid();
        let mut prev = BTreeSet::new();
        for (name, n) in ACTIVATION_SETS {
            let s = activation_set(&g, name).unwrap();
            assert_eq!(s.addresses.len(), n);
            assert!(prev.is_subset(&s.addresses));
            prev = s.addresses;
        }
    }

    #[test]
    fn empty_pattern_is_unchanged() {
        let g = grid();
        let r = evaluate_pattern(&g, &ActivationPattern::new("none", []), &MechConfig::default()).unwrap();
        assert_eq!(r.before, r.after);
        assert!(localization_metric(
            &g,
            &ActivationPattern::new("none", []),
            Mode::Axial,
            &MechConfig::default()
        )
        .is_err());
    }

    #[test]
    fn whole_grid_localizes_fully() {
        let g = grid();
        let all = ActivationPattern::new("all", g.addresses());
        let l = localization_metric(&g, &all, Mode::Axial, &MechConfig::default()).unwrap();
        assert_relative_eq!(l, 1.0, max_relative = 1e-12);
    }
}
