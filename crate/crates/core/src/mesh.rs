//! Simplicial meshes of the unit interval and the unit square.
//!
//! Meshes are immutable values: every perturbation returns a new mesh with the
//! same connectivity. A [`MeshPair`] records which elements two meshes of the
//! same domain have in common and the measure of the region where they differ.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Physical coordinate. One-dimensional meshes leave the second entry at zero.
pub type Point = [f64; 2];

/// Per-coordinate tolerance deciding that two elements are geometrically identical.
pub const COORD_TOL: f64 = 1e-14;

/// Tolerance used when deciding whether a point lies on the boundary of the unit domain.
const BOUNDARY_TOL: f64 = 1e-12;

/// Orientation of the diagonal splitting each lattice square of a structured mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Bottom-left to top-right.
    #[default]
    Forward,
    /// Bottom-right to top-left.
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    /// Flat connectivity, `dim + 1` node indices per element.
    elements: Vec<usize>,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    /// Builds a mesh from raw parts, checking that every element has positive measure.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<Point>,
        elements: Vec<usize>,
        boundary_nodes: &[usize],
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return invalid(format!("mesh dimension must be 1 or 2, got {dim}"));
        }
        if elements.len() % (dim + 1) != 0 {
            return invalid("connectivity length is not a multiple of the element size");
        }
        if let Some(&bad) = elements.iter().find(|&&i| i >= nodes.len()) {
            return invalid(format!("element references missing node {bad}"));
        }
        let mut boundary = vec![false; nodes.len()];
        for &b in boundary_nodes {
            if b >= nodes.len() {
                return invalid(format!("boundary node {b} does not exist"));
            }
            boundary[b] = true;
        }
        let mut mesh = Mesh {
            dim,
            nodes,
            elements,
            boundary,
            h: 0.0,
        };
        mesh.validate()?;
        mesh.h = (0..mesh.n_elements())
            .map(|k| mesh.diameter(k))
            .fold(0.0, f64::max);
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.n_elements() {
            let measure = self.signed_measure(k);
            if !(measure > 0.0) {
                return Err(Error::DegenerateMesh {
                    element: k,
                    measure,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    /// Node indices of element `k`.
    pub fn element(&self, k: usize) -> &[usize] {
        let m = self.dim + 1;
        &self.elements[k * m..(k + 1) * m]
    }

    /// Vertex coordinates of element `k`.
    pub fn element_vertices(&self, k: usize) -> Vec<Point> {
        self.element(k).iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Length (1-D) or counterclockwise signed area (2-D) of element `k`.
    pub fn signed_measure(&self, k: usize) -> f64 {
        let v = self.element(k);
        let p = |i: usize| self.nodes[v[i]];
        match self.dim {
            1 => p(1)[0] - p(0)[0],
            _ => triangle_signed_area(p(0), p(1), p(2)),
        }
    }

    pub fn measure(&self, k: usize) -> f64 {
        self.signed_measure(k).abs()
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.measure(k)).sum()
    }

    pub fn diameter(&self, k: usize) -> f64 {
        let verts = self.element_vertices(k);
        let mut d: f64 = 0.0;
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                d = d.max(distance(verts[i], verts[j]));
            }
        }
        d
    }

    /// Ratio of diameter to inradius; for intervals this is 2.
    pub fn shape_ratio(&self, k: usize) -> f64 {
        match self.dim {
            1 => 2.0,
            _ => {
                let v = self.element_vertices(k);
                let perimeter =
                    distance(v[0], v[1]) + distance(v[1], v[2]) + distance(v[2], v[0]);
                let inradius = 2.0 * self.measure(k) / perimeter;
                self.diameter(k) / inradius
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)` of element `k`.
    pub fn bounding_box(&self, k: usize) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &i in self.element(k) {
            let p = self.nodes[i];
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }

    pub fn centroid(&self, k: usize) -> Point {
        let v = self.element(k);
        let mut c = [0.0; 2];
        for &i in v {
            c[0] += self.nodes[i][0];
            c[1] += self.nodes[i][1];
        }
        let n = v.len() as f64;
        [c[0] / n, c[1] / n]
    }

    /// Elements incident to each node.
    pub fn node_to_elements(&self) -> Vec<Vec<usize>> {
        let mut map = vec![Vec::new(); self.n_nodes()];
        for k in 0..self.n_elements() {
            for &i in self.element(k) {
                map[i].push(k);
            }
        }
        map
    }

    /// Plain-text export: header `dim n_nodes n_elements`, then node lines,
    /// element lines and a final line of boundary node indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.dim, self.n_nodes(), self.n_elements());
        for p in &self.nodes {
            let coords: Vec<String> = p[..self.dim].iter().map(|c| format!("{c:.16e}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
        for k in 0..self.n_elements() {
            let ids: Vec<String> = self.element(k).iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
        let b: Vec<String> = self.boundary_nodes().iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", b.join(" "));
        out
    }

    /// Parses the format written by [`Mesh::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |m: &str| Error::InvalidArgument(format!("mesh text: {m}"));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("malformed header")))
            .collect::<Result<_>>()?;
        let [dim, n_nodes, n_elements] = header[..] else {
            return Err(bad("header needs three integers"));
        };
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let line = lines.next().ok_or_else(|| bad("truncated node block"))?;
            let mut p = [0.0; 2];
            for (c, tok) in line.split_whitespace().take(2).enumerate() {
                p[c] = tok.parse().map_err(|_| bad("malformed coordinate"))?;
            }
            nodes.push(p);
        }
        let mut elements = Vec::with_capacity(n_elements * (dim + 1));
        for _ in 0..n_elements {
            let line = lines.next().ok_or_else(|| bad("truncated element block"))?;
            for tok in line.split_whitespace() {
                elements.push(tok.parse().map_err(|_| bad("malformed element"))?);
            }
        }
        let boundary: Vec<usize> = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("malformed boundary index")))
            .collect::<Result<_>>()?;
        Mesh::from_parts(dim, nodes, elements, &boundary)
    }

    fn with_nodes(&self, nodes: Vec<Point>) -> Result<Self> {
        let mesh = Mesh {
            dim: self.dim,
            nodes,
            elements: self.elements.clone(),
            boundary: self.boundary.clone(),
            h: 0.0,
        };
        mesh.validate()?;
        let h = (0..mesh.n_elements())
            .map(|k| mesh.diameter(k))
            .fold(0.0, f64::max);
        Ok(Mesh { h, ..mesh })
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn triangle_signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Euclidean distance from `p` to the boundary of the unit interval or square.
pub fn distance_to_boundary(dim: usize, p: Point) -> f64 {
    let dx = p[0].min(1.0 - p[0]);
    if dim == 1 {
        dx
    } else {
        dx.min(p[1].min(1.0 - p[1]))
    }
}

pub fn on_boundary(dim: usize, p: Point) -> bool {
    distance_to_boundary(dim, p).abs() <= BOUNDARY_TOL
}

/// Uniform grid of the unit interval with `n` elements.
pub fn build_uniform_interval(n: usize) -> Result<Mesh> {
    if n < 2 {
        return invalid(format!("interval mesh needs n >= 2, got {n}"));
    }
    let nodes = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    let elements = (0..n).flat_map(|i| [i, i + 1]).collect();
    Mesh::from_parts(1, nodes, elements, &[0, n])
}

/// Structured mesh of the unit square: an `n × n` lattice with every square
/// split into two isosceles right triangles along the same diagonal.
pub fn build_uniform_square(n: usize) -> Result<Mesh> {
    build_uniform_square_with(n, Diagonal::Forward)
}

pub fn build_uniform_square_with(n: usize, diagonal: Diagonal) -> Result<Mesh> {
    if n < 2 {
        return invalid(format!("square mesh needs n >= 2, got {n}"));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(id(i, j));
            }
        }
    }
    let mut elements = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let forward = match diagonal {
                Diagonal::Forward => true,
                Diagonal::Backward => false,
            };
            if forward {
                elements.extend([v00, v10, v11, v00, v11, v01]);
            } else {
                elements.extend([v00, v10, v01, v10, v11, v01]);
            }
        }
    }
    Mesh::from_parts(2, nodes, elements, &boundary)
}

/// Moves the node nearest to `point` (lowest index on ties) by `displacement`.
pub fn perturb_node_nearest(m: &Mesh, point: Point, displacement: Point) -> Result<Mesh> {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &p) in m.nodes.iter().enumerate() {
        let d = distance(p, point);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    if m.boundary[best] {
        return invalid(format!(
            "node {best} nearest to ({}, {}) lies on the boundary",
            point[0], point[1]
        ));
    }
    let mut nodes = m.nodes.clone();
    nodes[best][0] += displacement[0];
    nodes[best][1] += displacement[1];
    m.with_nodes(nodes)
}

/// Moves every interior node lying at distance `band_distance` from the
/// boundary by `displacement`.
pub fn perturb_boundary_band(m: &Mesh, band_distance: f64, displacement: Point) -> Result<Mesh> {
    if m.dim != 2 {
        return invalid("boundary-band perturbation needs a 2-D mesh");
    }
    let mut nodes = m.nodes.clone();
    for (i, p) in nodes.iter_mut().enumerate() {
        if m.boundary[i] {
            continue;
        }
        if (distance_to_boundary(2, *p) - band_distance).abs() <= BOUNDARY_TOL {
            p[0] += displacement[0];
            p[1] += displacement[1];
        }
    }
    m.with_nodes(nodes)
}

/// Two meshes of one domain with their geometrically identical elements matched.
#[derive(Clone, Debug)]
pub struct MeshPair {
    pub mesh_a: Arc<Mesh>,
    pub mesh_b: Arc<Mesh>,
    /// `(index in a, index in b)` for every geometrically identical element pair.
    pub shared_elements: Vec<(usize, usize)>,
    pub differing_region_measure: f64,
    pub gamma_nominal: f64,
    a_to_b: Vec<Option<usize>>,
    b_to_a: Vec<Option<usize>>,
}

impl MeshPair {
    /// Partner of element `k` of mesh a in mesh b, if the element is shared.
    pub fn partner_in_b(&self, k: usize) -> Option<usize> {
        self.a_to_b[k]
    }

    pub fn partner_in_a(&self, k: usize) -> Option<usize> {
        self.b_to_a[k]
    }

    /// Elements of mesh a that have no identical partner in mesh b.
    pub fn differing_in_a(&self) -> Vec<usize> {
        (0..self.a_to_b.len()).filter(|&k| self.a_to_b[k].is_none()).collect()
    }

    pub fn differing_in_b(&self) -> Vec<usize> {
        (0..self.b_to_a.len()).filter(|&k| self.b_to_a[k].is_none()).collect()
    }

    /// Differing-region measure computed from mesh b's side.
    pub fn differing_measure_from_b(&self) -> f64 {
        let shared: f64 = self.shared_elements.iter().map(|&(_, kb)| self.mesh_b.measure(kb)).sum();
        self.mesh_b.total_measure() - shared
    }
}

fn same_element(a: &Mesh, ka: usize, b: &Mesh, kb: usize) -> bool {
    let va = a.element_vertices(ka);
    let vb = b.element_vertices(kb);
    va.iter().all(|p| {
        vb.iter()
            .any(|q| (p[0] - q[0]).abs() <= COORD_TOL && (p[1] - q[1]).abs() <= COORD_TOL)
    })
}

/// Matches the geometrically identical elements of two meshes of the same domain.
pub fn classify_pair(a: Arc<Mesh>, b: Arc<Mesh>, gamma_nominal: f64) -> Result<MeshPair> {
    if a.dim != b.dim {
        return invalid(format!(
            "cannot pair a {}-D mesh with a {}-D mesh",
            a.dim, b.dim
        ));
    }
    let total_a = a.total_measure();
    if (total_a - b.total_measure()).abs() > 1e-12 {
        return invalid("meshes do not cover the same domain");
    }
    // Candidates in b sorted by centroid x so each lookup is a window scan.
    let mut by_x: Vec<(f64, usize)> = (0..b.n_elements()).map(|k| (b.centroid(k)[0], k)).collect();
    by_x.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));

    let mut a_to_b = vec![None; a.n_elements()];
    let mut b_to_a = vec![None; b.n_elements()];
    let mut shared = Vec::new();
    let window = 2.0 * COORD_TOL;
    for ka in 0..a.n_elements() {
        let cx = a.centroid(ka)[0];
        let start = by_x.partition_point(|&(x, _)| x < cx - window);
        for &(x, kb) in &by_x[start..] {
            if x > cx + window {
                break;
            }
            if b_to_a[kb].is_none() && same_element(&a, ka, &b, kb) {
                a_to_b[ka] = Some(kb);
                b_to_a[kb] = Some(ka);
                shared.push((ka, kb));
                break;
            }
        }
    }
    let shared_measure: f64 = shared.iter().map(|&(ka, _)| a.measure(ka)).sum();
    Ok(MeshPair {
        differing_region_measure: (total_a - shared_measure).max(0.0),
        mesh_a: a,
        mesh_b: b,
        shared_elements: shared,
        gamma_nominal,
        a_to_b,
        b_to_a,
    })
}
