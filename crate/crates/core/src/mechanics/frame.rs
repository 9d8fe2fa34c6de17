//! Linear 3D Euler-Bernoulli frame: element matrices, assembly and a
//! prescribed-displacement solve.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};

use crate::error::{Result, SkinError};

pub const DOF_PER_NODE: usize = 6;

type Mat12 = SMatrix<f64, 12, 12>;

/// Rectangular ligament section. The width lies in the sheet plane, the
/// thickness through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub e: f64,
    pub g: f64,
    pub area: f64,
    /// In-plane bending, `t w^3 / 12`.
    pub i_in: f64,
    /// Through-thickness bending, `w t^3 / 12`.
    pub i_out: f64,
    pub j: f64,
}

impl Section {
    pub fn rectangular(e: f64, g: f64, width: f64, thickness: f64) -> Self {
        let (a, b) = if width >= thickness {
            (width, thickness)
        } else {
            (thickness, width)
        };
        // Saint-Venant torsion constant of a solid rectangle
        let beta = (1.0 - 0.63 * (b / a) * (1.0 - b.powi(4) / (12.0 * a.powi(4)))) / 3.0;
        Section {
            e,
            g,
            area: width * thickness,
            i_in: thickness * width.powi(3) / 12.0,
            i_out: width * thickness.powi(3) / 12.0,
            j: beta * a * b.powi(3),
        }
    }

    pub fn scaled_modulus(&self, factor: f64) -> Self {
        Section {
            e: self.e * factor,
            g: self.g * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Metal,
    Membrane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameElement {
    pub nodes: [usize; 2],
    pub section: Section,
    pub kind: ElementKind,
    /// Index of the voxel (or cell) that owns this element.
    pub owner: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameModel {
    pub nodes: Vec<Vector3<f64>>,
    pub elements: Vec<FrameElement>,
}

/// Sparse symmetric stiffness operator stored as a coordinate map holding
/// both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    pub dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymmetricOperator {
    pub fn new(dim: usize) -> Self {
        SymmetricOperator {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            *self.entries.entry((i, j)).or_insert(0.0) += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |K_ij - K_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim);
        for (i, j, v) in self.iter() {
            y[i] += v * x[j];
        }
        y
    }
}

/// Local stiffness in element axes, DOF order `[u v w rx ry rz]` per node.
fn local_matrix(s: &Section, l: f64) -> Mat12 {
    let mut k = Mat12::zeros();
    let ea = s.e * s.area / l;
    let gj = s.g * s.j / l;
    let (ez, ey) = (s.e * s.i_in, s.e * s.i_out);
    let l2 = l * l;
    let l3 = l2 * l;

    let mut set = |i: usize, j: usize, v: f64| {
        k[(i, j)] = v;
        k[(j, i)] = v;
    };
    set(0, 0, ea);
    set(6, 6, ea);
    set(0, 6, -ea);
    set(3, 3, gj);
    set(9, 9, gj);
    set(3, 9, -gj);

    // bending in the local x-y plane (v, rz)
    set(1, 1, 12.0 * ez / l3);
    set(1, 5, 6.0 * ez / l2);
    set(1, 7, -12.0 * ez / l3);
    set(1, 11, 6.0 * ez / l2);
    set(5, 5, 4.0 * ez / l);
    set(5, 7, -6.0 * ez / l2);
    set(5, 11, 2.0 * ez / l);
    set(7, 7, 12.0 * ez / l3);
    set(7, 11, -6.0 * ez / l2);
    set(11, 11, 4.0 * ez / l);

    // bending in the local x-z plane (w, ry)
    set(2, 2, 12.0 * ey / l3);
    set(2, 4, -6.0 * ey / l2);
    set(2, 8, -12.0 * ey / l3);
    set(2, 10, -6.0 * ey / l2);
    set(4, 4, 4.0 * ey / l);
    set(4, 8, 6.0 * ey / l2);
    set(4, 10, 2.0 * ey / l);
    set(8, 8, 12.0 * ey / l3);
    set(8, 10, 6.0 * ey / l2);
    set(10, 10, 4.0 * ey / l);
    k
}

/// Rows are the local axes in global coordinates. For elements in the
/// sheet plane the local z axis is the sheet normal, so `i_out` governs
/// out-of-plane deflection.
fn rotation(a: &Vector3<f64>, b: &Vector3<f64>) -> (Matrix3<f64>, f64) {
    let d = b - a;
    let l = d.norm();
    let ex = d / l;
    let reference = if ex.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let ey = reference.cross(&ex).normalize();
    let ez = ex.cross(&ey);
    (Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]), l)
}

impl FrameModel {
    pub fn dofs(&self) -> usize {
        self.nodes.len() * DOF_PER_NODE
    }

    pub fn element_length(&self, e: &FrameElement) -> f64 {
        (self.nodes[e.nodes[1]] - self.nodes[e.nodes[0]]).norm()
    }

    /// Element stiffness in global axes.
    pub fn element_matrix(&self, e: &FrameElement) -> Mat12 {
        let (r, l) = rotation(&self.nodes[e.nodes[0]], &self.nodes[e.nodes[1]]);
        let mut t = Mat12::zeros();
        for b in 0..4 {
            t.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(&r);
        }
        t.transpose() * local_matrix(&e.section, l) * t
    }

    fn element_dofs(e: &FrameElement) -> [usize; 12] {
        let mut d = [0; 12];
        for (k, n) in e.nodes.iter().enumerate() {
            for i in 0..DOF_PER_NODE {
                d[k * DOF_PER_NODE + i] = n * DOF_PER_NODE + i;
            }
        }
        d
    }

    pub fn assemble(&self) -> SymmetricOperator {
        let mut op = SymmetricOperator::new(self.dofs());
        for e in &self.elements {
            let ke = self.element_matrix(e);
            let dofs = Self::element_dofs(e);
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in dofs.iter().enumerate() {
                    op.add(i, j, ke[(a, b)]);
                }
            }
        }
        op
    }

    /// Strain energy `u^T K_e u / 2` of one element.
    pub fn element_energy(&self, e: &FrameElement, u: &DVector<f64>) -> f64 {
        let ke = self.element_matrix(e);
        let dofs = Self::element_dofs(e);
        let ue = SMatrix::<f64, 12, 1>::from_fn(|i, _| u[dofs[i]]);
        0.5 * (ue.transpose() * ke * ue)[(0, 0)]
    }

    /// Node sets connected through elements. Nodes without elements are omitted.
    pub fn components(&self) -> Vec<BTreeSet<usize>> {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut used = vec![false; self.nodes.len()];
        for e in &self.elements {
            let [a, b] = e.nodes;
            used[a] = true;
            used[b] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for n in 0..self.nodes.len() {
            if used[n] {
                let r = find(&mut parent, n);
                groups.entry(r).or_default().insert(n);
            }
        }
        groups.into_values().collect()
    }

    /// Solves `K u = f` with the listed DOFs prescribed and zero external load
    /// on the rest. DOFs of nodes without elements are held at zero.
    pub fn solve_prescribed(&self, op: &SymmetricOperator, prescribed: &BTreeMap<usize, f64>) -> Result<DVector<f64>> {
        let n = op.dim;
        let mut used = vec![false; self.nodes.len()];
        for e in &self.elements {
            used[e.nodes[0]] = true;
            used[e.nodes[1]] = true;
        }
        let mut free_index = vec![usize::MAX; n];
        let mut free = Vec::new();
        for dof in 0..n {
            if used[dof / DOF_PER_NODE] && !prescribed.contains_key(&dof) {
                free_index[dof] = free.len();
                free.push(dof);
            }
        }
        let mut u = DVector::zeros(n);
        for (&d, &v) in prescribed {
            u[d] = v;
        }
        if free.is_empty() {
            return Ok(u);
        }
        let nf = free.len();
        let mut kff = DMatrix::zeros(nf, nf);
        let mut rhs = DVector::zeros(nf);
        for (i, j, v) in op.iter() {
            let fi = free_index[i];
            if fi == usize::MAX {
                continue;
            }
            let fj = free_index[j];
            if fj != usize::MAX {
                kff[(fi, fj)] = v;
            } else if let Some(p) = prescribed.get(&j) {
                rhs[fi] -= v * p;
            }
        }
        let scale = kff.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let chol = kff.clone().cholesky().ok_or(SkinError::Singular { voxels: vec![] })?;
        let x = chol.solve(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SkinError::Singular { voxels: vec![] });
        }
        // reject near-singular factorizations
        let resid = (&kff * &x - &rhs).norm();
        if resid > 1e-8 * (rhs.norm() + scale * x.norm()).max(f64::MIN_POSITIVE) {
            return Err(SkinError::Singular { voxels: vec![] });
        }
        for (k, &dof) in free.iter().enumerate() {
            u[dof] = x[k];
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn beam(l: f64, dir: Vector3<f64>) -> FrameModel {
        let s = Section::rectangular(1000.0, 400.0, 3.0, 1.0);
        FrameModel {
            nodes: vec![Vector3::zeros(), dir.normalize() * l],
            elements: vec![FrameElement {
                nodes: [0, 1],
                section: s,
                kind: ElementKind::Metal,
                owner: None,
            }],
        }
    }

    fn clamp_first(extra: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        let mut p: BTreeMap<usize, f64> = (0..6).map(|d| (d, 0.0)).collect();
        p.extend(extra.iter().copied());
        p
    }

    #[test]
    fn cantilever_tip_stiffness() {
        // out-of-plane tip deflection of a cantilever: k = 3 E I / L^3
        let m = beam(18.0, Vector3::new(1.0, 1.0, 0.0));
        let op = m.assemble();
        let u = m.solve_prescribed(&op, &clamp_first(&[(6 + 2, 1.0)])).unwrap();
        let f = op.mul(&u);
        let s = m.elements[0].section;
        assert_relative_eq!(f[8], 3.0 * s.e * s.i_out / 18f64.powi(3), max_relative = 1e-10);

        // in-plane: deflection along the in-plane normal uses i_in
        let d = Vector3::new(-1.0, 1.0, 0.0) / 2f64.sqrt();
        let u = m.solve_prescribed(&op, &clamp_first(&[(6, d.x), (7, d.y)])).unwrap();
        let f = op.mul(&u);
        let fn_ = f[6] * d.x + f[7] * d.y;
        assert_relative_eq!(fn_, 3.0 * s.e * s.i_in / 18f64.powi(3), max_relative = 1e-10);
    }

    #[test]
    fn rigid_body_modes_carry_no_force() {
        let m = beam(7.0, Vector3::new(0.3, 0.9, 0.0));
        let op = m.assemble();
        // translation
        let mut u = DVector::zeros(12);
        u[0] = 1.0;
        u[6] = 1.0;
        assert!(op.mul(&u).norm() < 1e-9);
        // rotation about z through origin: v = x, rz = 1
        let b = m.nodes[1];
        let mut u = DVector::zeros(12);
        u[5] = 1.0;
        u[11] = 1.0;
        u[6] = -b.y;
        u[7] = b.x;
        assert!(op.mul(&u).norm() < 1e-9 * op.max_abs());
    }

    #[test]
    fn torsion_constant_thin_strip() {
        let s = Section::rectangular(1.0, 1.0, 100.0, 1.0);
        assert!((s.j - 100.0 / 3.0 * (1.0 - 0.0063)).abs() < 1e-6);
    }

    #[test]
    fn floating_part_is_singular() {
        let mut m = beam(5.0, Vector3::x());
        m.nodes.push(Vector3::new(10.0, 0.0, 0.0));
        m.nodes.push(Vector3::new(12.0, 0.0, 0.0));
        let e = m.elements[0].clone();
        m.elements.push(FrameElement { nodes: [2, 3], ..e });
        let op = m.assemble();
        assert_eq!(m.components().len(), 2);
        assert!(m.solve_prescribed(&op, &clamp_first(&[])).is_err());
    }
}
