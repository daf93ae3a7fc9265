//! Continuous Lagrange spaces of degree 1 or 2 on simplicial meshes.
//!
//! Degrees of freedom are nodal values: mesh vertices first, then (for degree
//! 2) edge midpoints in order of first appearance. Shape functions are written
//! in barycentric coordinates, so the same code serves intervals and triangles.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::function::FunctionSpec;
use crate::mesh::{on_boundary, Mesh, MeshPair, Point, COORD_TOL};

/// Barycentric tolerance for point location.
const LOCATE_TOL: f64 = 1e-12;

/// Affine geometry of one simplex: vertices and barycentric gradients.
#[derive(Clone, Debug)]
pub struct Simplex {
    pub vertices: Vec<Point>,
    pub grad_lambda: Vec<Point>,
    pub measure: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Point>) -> Self {
        match vertices.len() {
            2 => {
                let len = vertices[1][0] - vertices[0][0];
                Simplex {
                    grad_lambda: vec![[-1.0 / len, 0.0], [1.0 / len, 0.0]],
                    measure: len.abs(),
                    vertices,
                }
            }
            _ => {
                let [a, b, c] = [vertices[0], vertices[1], vertices[2]];
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                // ∇λ_i is the inward normal of the opposite edge scaled by 1/(2·area).
                let g = |p: Point, q: Point| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
                Simplex {
                    grad_lambda: vec![g(b, c), g(c, a), g(a, b)],
                    measure: 0.5 * det.abs(),
                    vertices,
                }
            }
        }
    }

    pub fn barycentric(&self, x: Point) -> Vec<f64> {
        let v0 = self.vertices[0];
        let mut lambda: Vec<f64> = self.grad_lambda[1..]
            .iter()
            .map(|g| g[0] * (x[0] - v0[0]) + g[1] * (x[1] - v0[1]))
            .collect();
        let l0 = 1.0 - lambda.iter().sum::<f64>();
        lambda.insert(0, l0);
        lambda
    }
}

/// Local vertex pairs carrying the edge degrees of freedom.
fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 1 {
        &[(0, 1)]
    } else {
        &[(0, 1), (1, 2), (2, 0)]
    }
}

/// Values and gradients of the local shape functions at barycentric point `lambda`.
pub fn shape_functions(
    degree: usize,
    geom: &Simplex,
    lambda: &[f64],
    values: &mut Vec<f64>,
    grads: &mut Vec<Point>,
) {
    values.clear();
    grads.clear();
    let gl = &geom.grad_lambda;
    match degree {
        1 => {
            values.extend_from_slice(lambda);
            grads.extend_from_slice(gl);
        }
        _ => {
            for (i, &l) in lambda.iter().enumerate() {
                values.push(l * (2.0 * l - 1.0));
                let s = 4.0 * l - 1.0;
                grads.push([s * gl[i][0], s * gl[i][1]]);
            }
            for &(i, j) in local_edges(lambda.len() - 1) {
                values.push(4.0 * lambda[i] * lambda[j]);
                grads.push([
                    4.0 * (lambda[i] * gl[j][0] + lambda[j] * gl[i][0]),
                    4.0 * (lambda[i] * gl[j][1] + lambda[j] * gl[i][1]),
                ]);
            }
        }
    }
}

#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    dirichlet: bool,
    dof_coords: Vec<Point>,
    dirichlet_mask: Vec<bool>,
    n_local: usize,
    element_dofs: Vec<usize>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    support: Vec<Vec<usize>>,
    geometry: Vec<Simplex>,
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn has_dirichlet(&self) -> bool {
        self.dirichlet
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet_mask
    }

    /// Global degrees of freedom of element `k` in local order.
    pub fn element_dofs(&self, k: usize) -> &[usize] {
        &self.element_dofs[k * self.n_local..(k + 1) * self.n_local]
    }

    /// Position of `dof` among the unconstrained degrees of freedom.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Elements on which the shape function of `dof` is nonzero.
    pub fn support(&self, dof: usize) -> &[usize] {
        &self.support[dof]
    }

    pub fn geometry(&self, k: usize) -> &Simplex {
        &self.geometry[k]
    }

    /// Lowest-index element containing `x`.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.mesh.n_elements()).find(|&k| {
            let lambda = self.geometry[k].barycentric(x);
            lambda.iter().all(|&l| l >= -LOCATE_TOL) && (self.dim() == 2 || x[1].abs() <= LOCATE_TOL)
        })
    }
}

/// Builds the Lagrange space of the given degree, masking boundary DOFs when `dirichlet`.
pub fn build_space(mesh: Arc<Mesh>, degree: usize, dirichlet: bool) -> Result<Arc<FeSpace>> {
    if degree != 1 && degree != 2 {
        return invalid(format!("unsupported polynomial degree {degree}"));
    }
    let dim = mesh.dim();
    let n_vertices = mesh.n_nodes();
    let mut dof_coords: Vec<Point> = mesh.nodes().to_vec();
    let edges = local_edges(dim);
    let n_local = if degree == 1 { dim + 1 } else { dim + 1 + edges.len() };
    let mut element_dofs = Vec::with_capacity(n_local * mesh.n_elements());
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    for k in 0..mesh.n_elements() {
        let verts = mesh.element(k);
        element_dofs.extend_from_slice(verts);
        if degree == 2 {
            for &(i, j) in edges {
                let (a, b) = (verts[i].min(verts[j]), verts[i].max(verts[j]));
                let next = dof_coords.len();
                let id = *edge_ids.entry((a, b)).or_insert_with(|| {
                    let (pa, pb) = (mesh.node(a), mesh.node(b));
                    dof_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    next
                });
                element_dofs.push(id);
            }
        }
    }
    let n_dofs = dof_coords.len();
    let dirichlet_mask: Vec<bool> = (0..n_dofs)
        .map(|d| {
            dirichlet
                && if d < n_vertices {
                    mesh.is_boundary(d)
                } else {
                    on_boundary(dim, dof_coords[d])
                }
        })
        .collect();
    let mut free_index = vec![None; n_dofs];
    let mut free_dofs = Vec::new();
    for d in 0..n_dofs {
        if !dirichlet_mask[d] {
            free_index[d] = Some(free_dofs.len());
            free_dofs.push(d);
        }
    }
    let mut support = vec![Vec::new(); n_dofs];
    for k in 0..mesh.n_elements() {
        for &d in &element_dofs[k * n_local..(k + 1) * n_local] {
            support[d].push(k);
        }
    }
    let geometry = (0..mesh.n_elements())
        .map(|k| Simplex::new(mesh.element_vertices(k)))
        .collect();
    Ok(Arc::new(FeSpace {
        mesh,
        degree,
        dirichlet,
        dof_coords,
        dirichlet_mask,
        n_local,
        element_dofs,
        free_index,
        free_dofs,
        support,
        geometry,
    }))
}

/// Coefficient vector over all degrees of freedom of a space.
#[derive(Clone, Debug)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    /// Wraps a full coefficient vector; constrained entries are forced to zero.
    pub fn new(space: Arc<FeSpace>, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return invalid(format!(
                "coefficient vector has length {}, space has {} dofs",
                coeffs.len(),
                space.n_dofs()
            ));
        }
        for (c, &masked) in coeffs.iter_mut().zip(&space.dirichlet_mask) {
            if masked {
                *c = 0.0;
            }
        }
        Ok(FeFunction { space, coeffs })
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        FeFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// Builds a function from values at the free degrees of freedom.
    pub fn from_free(space: Arc<FeSpace>, free: &[f64]) -> Result<Self> {
        if free.len() != space.n_free() {
            return invalid("free coefficient vector has the wrong length");
        }
        let mut coeffs = vec![0.0; space.n_dofs()];
        for (&d, &v) in space.free_dofs.iter().zip(free) {
            coeffs[d] = v;
        }
        Ok(FeFunction { space, coeffs })
    }

    /// The nodal basis function attached to `dof`.
    pub fn basis(space: Arc<FeSpace>, dof: usize) -> Self {
        let mut f = FeFunction::zero(space);
        f.coeffs[dof] = 1.0;
        f
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_coeffs(&self) -> Vec<f64> {
        self.space.free_dofs.iter().map(|&d| self.coeffs[d]).collect()
    }

    /// `self + alpha * other` on the same space.
    pub fn axpy(&self, alpha: f64, other: &FeFunction) -> Result<FeFunction> {
        if !Arc::ptr_eq(&self.space, &other.space) {
            return invalid("functions live on different spaces");
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + alpha * b).collect();
        Ok(FeFunction {
            space: self.space.clone(),
            coeffs,
        })
    }

    /// Value and gradient at `x` using the polynomial of element `k`.
    pub fn eval_in_element(&self, k: usize, x: Point) -> (f64, Point) {
        let geom = &self.space.geometry[k];
        let lambda = geom.barycentric(x);
        let mut vals = Vec::with_capacity(self.space.n_local);
        let mut grads = Vec::with_capacity(self.space.n_local);
        shape_functions(self.space.degree, geom, &lambda, &mut vals, &mut grads);
        let mut v = 0.0;
        let mut g = [0.0, 0.0];
        for ((&d, &phi), dphi) in self.space.element_dofs(k).iter().zip(&vals).zip(&grads) {
            let c = self.coeffs[d];
            v += c * phi;
            g[0] += c * dphi[0];
            g[1] += c * dphi[1];
        }
        (v, g)
    }

    /// Value and gradient at `x`; on element interfaces the lowest-index element wins.
    pub fn evaluate(&self, x: Point) -> Result<(f64, Point)> {
        let k = self
            .space
            .locate(x)
            .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
        Ok(self.eval_in_element(k, x))
    }

    /// Plain-text export: `n_dofs`, then one coefficient per line with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.coeffs.len());
        for c in &self.coeffs {
            let _ = writeln!(out, "{c:.16e}");
        }
        out
    }

    pub fn from_text(space: Arc<FeSpace>, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let n: usize = lines
            .next()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::InvalidArgument("missing dof count".into()))?;
        let coeffs: Vec<f64> = lines
            .take(n)
            .map(|l| {
                l.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad coefficient `{l}`")))
            })
            .collect::<Result<_>>()?;
        FeFunction::new(space, coeffs)
    }
}

/// Nodal interpolant: `u` sampled at every unconstrained DOF, zero elsewhere.
pub fn interpolate_nodal(space: &Arc<FeSpace>, u: &FunctionSpec) -> FeFunction {
    let coeffs = (0..space.n_dofs())
        .map(|d| {
            if space.dirichlet_mask[d] {
                0.0
            } else {
                u.value(space.dof_coords[d])
            }
        })
        .collect();
    FeFunction {
        space: space.clone(),
        coeffs,
    }
}

/// Which mesh of a pair a space is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Projector onto the intersection of the spaces built over the two meshes of
/// a pair: keeps the coefficients of shape functions common to both spaces.
#[derive(Debug)]
pub struct IntersectionProjector {
    space_a: Arc<FeSpace>,
    space_b: Arc<FeSpace>,
    a_to_b: Vec<Option<usize>>,
    b_to_a: Vec<Option<usize>>,
}

impl IntersectionProjector {
    pub fn new(pair: &MeshPair, space_a: Arc<FeSpace>, space_b: Arc<FeSpace>) -> Result<Self> {
        if space_a.degree != space_b.degree {
            return invalid(format!(
                "degree mismatch: {} vs {}",
                space_a.degree, space_b.degree
            ));
        }
        if *space_a.mesh != *pair.mesh_a || *space_b.mesh != *pair.mesh_b {
            return invalid("spaces are not built on the meshes of the pair");
        }
        let mut a_to_b = vec![None; space_a.n_dofs()];
        let mut b_to_a = vec![None; space_b.n_dofs()];
        for d in 0..space_a.n_dofs() {
            let sup_a = space_a.support(d);
            if sup_a.iter().any(|&k| pair.partner_in_b(k).is_none()) {
                continue;
            }
            let Some(kb) = pair.partner_in_b(sup_a[0]) else { continue };
            let p = space_a.dof_coords[d];
            let Some(db) = space_b.element_dofs(kb).iter().copied().find(|&e| {
                let q = space_b.dof_coords[e];
                (p[0] - q[0]).abs() <= COORD_TOL && (p[1] - q[1]).abs() <= COORD_TOL
            }) else {
                continue;
            };
            let sup_b = space_b.support(db);
            if sup_b.len() == sup_a.len() && sup_b.iter().all(|&k| pair.partner_in_a(k).is_some()) {
                a_to_b[d] = Some(db);
                b_to_a[db] = Some(d);
            }
        }
        Ok(IntersectionProjector {
            space_a,
            space_b,
            a_to_b,
            b_to_a,
        })
    }

    pub fn space(&self, side: Side) -> &Arc<FeSpace> {
        match side {
            Side::A => &self.space_a,
            Side::B => &self.space_b,
        }
    }

    /// Number of shape functions common to both spaces.
    pub fn n_shared(&self) -> usize {
        self.a_to_b.iter().filter(|m| m.is_some()).count()
    }

    pub fn side_of(&self, f: &FeFunction) -> Result<Side> {
        if Arc::ptr_eq(&f.space, &self.space_a) {
            Ok(Side::A)
        } else if Arc::ptr_eq(&f.space, &self.space_b) {
            Ok(Side::B)
        } else {
            invalid("function does not belong to either space of the projector")
        }
    }

    fn map(&self, side: Side) -> &[Option<usize>] {
        match side {
            Side::A => &self.a_to_b,
            Side::B => &self.b_to_a,
        }
    }

    /// `π_h f`, expressed in the space `f` lives in.
    pub fn project(&self, f: &FeFunction) -> Result<FeFunction> {
        let map = self.map(self.side_of(f)?);
        let coeffs = f
            .coeffs
            .iter()
            .zip(map)
            .map(|(&c, m)| if m.is_some() { c } else { 0.0 })
            .collect();
        Ok(FeFunction {
            space: f.space.clone(),
            coeffs,
        })
    }

    /// `π_h f`, expressed in the other space of the pair.
    pub fn project_to_other(&self, f: &FeFunction) -> Result<FeFunction> {
        let side = self.side_of(f)?;
        let map = self.map(side);
        let target = match side {
            Side::A => self.space_b.clone(),
            Side::B => self.space_a.clone(),
        };
        let mut coeffs = vec![0.0; target.n_dofs()];
        for (d, m) in map.iter().enumerate() {
            if let Some(e) = m {
                coeffs[*e] = f.coeffs[d];
            }
        }
        Ok(FeFunction {
            space: target,
            coeffs,
        })
    }
}

/// One-shot `π_h f` for a function on either mesh of `pair`.
pub fn intersection_project(pair: &MeshPair, f: &FeFunction) -> Result<FeFunction> {
    let space = f.space();
    let mesh = space.mesh();
    let on_a = Arc::ptr_eq(mesh, &pair.mesh_a) || **mesh == *pair.mesh_a;
    let on_b = Arc::ptr_eq(mesh, &pair.mesh_b) || **mesh == *pair.mesh_b;
    let projector = if on_a {
        let other = build_space(pair.mesh_b.clone(), space.degree, space.dirichlet)?;
        IntersectionProjector::new(pair, space.clone(), other)?
    } else if on_b {
        let other = build_space(pair.mesh_a.clone(), space.degree, space.dirichlet)?;
        IntersectionProjector::new(pair, other, space.clone())?
    } else {
        return invalid("function is not defined on either mesh of the pair");
    };
    projector.project(f)
}
