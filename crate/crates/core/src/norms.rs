//! Sobolev norms `‖·‖_{s,η}` of exact functions, discrete functions and
//! differences of discrete functions living on two different meshes.
//!
//! For finite `η` the norm is `(Σ_{|α|≤s} ∫ |∂^α v|^η)^{1/η}`; for `η = ∞` it is
//! the largest of `|∂^α v|` over a fixed sample lattice in every element.

use std::fmt;
use std::sync::Arc;

use crate::clip::{clip_convex, clip_interval, fan_triangulate, polygon_area};
use crate::error::{invalid, Error, Result};
use crate::function::FunctionSpec;
use crate::mesh::{build_uniform_interval, build_uniform_square, Mesh, MeshPair, Point};
use crate::quadrature::{graded_points, quadrature_rule, QuadratureRule, MAX_DEGREE_1D, MAX_DEGREE_2D};
use crate::space::{FeFunction, Simplex};

/// Sample points per element for `η = ∞` in one dimension.
pub const SUP_SAMPLES_1D: usize = 25;
/// Lattice order for `η = ∞` in two dimensions: `(m+1)(m+2)/2 = 45` points.
pub const SUP_LATTICE_2D: usize = 8;
/// Tolerance on the area of the clipped fragments of the differing region.
pub const CLIP_AREA_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct NormSpec {
    pub s: usize,
    pub eta: f64,
    /// Restricts integration to these elements (of the first mesh for cross-mesh norms).
    pub region: Option<Vec<usize>>,
}

impl NormSpec {
    pub fn new(s: usize, eta: f64) -> Result<Self> {
        if s > 1 {
            return invalid(format!("norms of order {s} are not supported"));
        }
        if !(eta >= 2.0) {
            return invalid(format!("integrability must be at least 2, got {eta}"));
        }
        Ok(NormSpec { s, eta, region: None })
    }

    pub fn l2() -> Self {
        NormSpec {
            s: 0,
            eta: 2.0,
            region: None,
        }
    }

    pub fn h1() -> Self {
        NormSpec {
            s: 1,
            eta: 2.0,
            region: None,
        }
    }

    pub fn with_region(mut self, elements: Vec<usize>) -> Self {
        self.region = Some(elements);
        self
    }

    /// Parses `L2`, `H1` or `W<s>,<eta>` such as `W1,inf`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t.to_ascii_uppercase().as_str() {
            "L2" => return Ok(Self::l2()),
            "H1" => return Ok(Self::h1()),
            _ => {}
        }
        let body = t
            .strip_prefix('W')
            .or_else(|| t.strip_prefix('w'))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown norm `{t}`")))?;
        let (s, eta) = body
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("unknown norm `{t}`")))?;
        let s: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad order in `{t}`")))?;
        let eta = match eta.trim() {
            "inf" | "∞" => f64::INFINITY,
            e => e
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad integrability in `{t}`")))?,
        };
        Self::new(s, eta)
    }

    pub fn label(&self) -> String {
        match (self.s, self.eta) {
            (0, e) if e == 2.0 => "L2".into(),
            (1, e) if e == 2.0 => "H1".into(),
            (s, e) if e.is_infinite() => format!("W{s},inf"),
            (s, e) => format!("W{s},{e}"),
        }
    }

    fn in_region(&self, k: usize) -> bool {
        self.region.as_ref().map_or(true, |r| r.contains(&k))
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Running sums (or maxima) of `|∂^α v|^η`, one per multi-index.
#[derive(Clone, Debug)]
struct Accumulator {
    eta: f64,
    parts: Vec<f64>,
}

impl Accumulator {
    fn new(s: usize, dim: usize, eta: f64) -> Self {
        Accumulator {
            eta,
            parts: vec![0.0; 1 + s * dim],
        }
    }

    fn add(&mut self, w: f64, v: f64, g: Point) {
        for (i, part) in self.parts.iter_mut().enumerate() {
            let c = match i {
                0 => v,
                _ => g[i - 1],
            }
            .abs();
            if self.eta.is_infinite() {
                *part = part.max(c);
            } else if self.eta == 2.0 {
                *part += w * c * c;
            } else {
                *part += w * c.powf(self.eta);
            }
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (p, q) in self.parts.iter_mut().zip(&other.parts) {
            if self.eta.is_infinite() {
                *p = p.max(*q);
            } else {
                *p += q;
            }
        }
    }

    fn components(&self) -> Vec<f64> {
        self.parts
            .iter()
            .map(|&p| if self.eta.is_infinite() { p } else { p.powf(1.0 / self.eta) })
            .collect()
    }

    fn total(&self) -> f64 {
        if self.eta.is_infinite() {
            self.parts.iter().cloned().fold(0.0, f64::max)
        } else {
            self.parts.iter().sum::<f64>().powf(1.0 / self.eta)
        }
    }
}

/// Sample lattice for `η = ∞` on a simplex, with unit weights.
fn sample_points(vertices: &[Point]) -> Vec<(Point, f64)> {
    if vertices.len() == 2 {
        let (a, b) = (vertices[0][0], vertices[1][0]);
        (0..SUP_SAMPLES_1D)
            .map(|i| {
                let t = i as f64 / (SUP_SAMPLES_1D - 1) as f64;
                ([a + t * (b - a), 0.0], 1.0)
            })
            .collect()
    } else {
        let m = SUP_LATTICE_2D;
        let [v0, v1, v2] = [vertices[0], vertices[1], vertices[2]];
        let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
        for i in 0..=m {
            for j in 0..=m - i {
                let (s, t) = (i as f64 / m as f64, j as f64 / m as f64);
                let p = [
                    v0[0] + s * (v1[0] - v0[0]) + t * (v2[0] - v0[0]),
                    v0[1] + s * (v1[1] - v0[1]) + t * (v2[1] - v0[1]),
                ];
                out.push((p, 1.0));
            }
        }
        out
    }
}

fn max_degree(dim: usize) -> usize {
    if dim == 1 {
        MAX_DEGREE_1D
    } else {
        MAX_DEGREE_2D
    }
}

/// Rule exact for `|p|^η` with `p` of degree `poly_degree`, when `η` is an even integer.
fn power_rule(dim: usize, poly_degree: usize, eta: f64, extra: usize) -> Result<QuadratureRule> {
    let d = (eta.ceil() as usize).saturating_mul(poly_degree) + extra;
    quadrature_rule(dim, d.min(max_degree(dim)))
}

fn element_points(rule: Option<&QuadratureRule>, vertices: &[Point], singular: &[Point]) -> Vec<(Point, f64)> {
    match rule {
        Some(r) => graded_points(r, vertices, singular),
        None => sample_points(vertices),
    }
}

fn check_spec(spec: &NormSpec) -> Result<()> {
    NormSpec::new(spec.s, spec.eta).map(|_| ())
}

fn exact_diff_accumulator(f: &FeFunction, u: &FunctionSpec, spec: &NormSpec) -> Result<Accumulator> {
    check_spec(spec)?;
    if spec.s == 1 && !u.has_gradient() {
        return invalid(format!("the H^1 norm needs the gradient of `{}`", u.name()));
    }
    let space = f.space();
    let dim = space.dim();
    let rule = if spec.eta.is_infinite() {
        None
    } else {
        Some(power_rule(dim, space.degree(), spec.eta, 6)?)
    };
    let mut acc = Accumulator::new(spec.s, dim, spec.eta);
    for k in 0..space.mesh().n_elements() {
        if !spec.in_region(k) {
            continue;
        }
        let geom = space.geometry(k);
        for (x, w) in element_points(rule.as_ref(), &geom.vertices, u.singular_points()) {
            let (fv, fg) = f.eval_in_element(k, x);
            let ug = if spec.s == 1 { u.gradient(x).unwrap_or([0.0; 2]) } else { [0.0; 2] };
            acc.add(w, fv - u.value(x), [fg[0] - ug[0], fg[1] - ug[1]]);
        }
    }
    Ok(acc)
}

/// `‖f − u‖_{s,η}` for a discrete `f` and an exact `u`.
pub fn sobolev_norm_exact_diff(f: &FeFunction, u: &FunctionSpec, spec: &NormSpec) -> Result<f64> {
    Ok(exact_diff_accumulator(f, u, spec)?.total())
}

fn fe_accumulator(f: &FeFunction, spec: &NormSpec) -> Result<Accumulator> {
    check_spec(spec)?;
    let space = f.space();
    let dim = space.dim();
    let rule = if spec.eta.is_infinite() {
        None
    } else {
        Some(power_rule(dim, space.degree(), spec.eta, 0)?)
    };
    let mut acc = Accumulator::new(spec.s, dim, spec.eta);
    for k in 0..space.mesh().n_elements() {
        if !spec.in_region(k) {
            continue;
        }
        for (x, w) in element_points(rule.as_ref(), &space.geometry(k).vertices, &[]) {
            let (v, g) = f.eval_in_element(k, x);
            acc.add(w, v, g);
        }
    }
    Ok(acc)
}

/// `‖f‖_{s,η}` of a discrete function.
pub fn fe_norm(f: &FeFunction, spec: &NormSpec) -> Result<f64> {
    Ok(fe_accumulator(f, spec)?.total())
}

/// `‖∂^α f‖_{0,η}` for every multi-index `|α| ≤ s`: value first, then first derivatives.
pub fn fe_norm_components(f: &FeFunction, spec: &NormSpec) -> Result<Vec<f64>> {
    Ok(fe_accumulator(f, spec)?.components())
}

fn same_mesh(space_mesh: &Arc<Mesh>, pair_mesh: &Arc<Mesh>) -> bool {
    Arc::ptr_eq(space_mesh, pair_mesh)
        || (space_mesh.n_elements() == pair_mesh.n_elements()
            && space_mesh.nodes() == pair_mesh.nodes()
            && (0..space_mesh.n_elements()).all(|k| space_mesh.element(k) == pair_mesh.element(k)))
}

fn boxes_overlap(a: (Point, Point), b: (Point, Point)) -> bool {
    let tol = 1e-14;
    a.0[0] <= b.1[0] + tol && b.0[0] <= a.1[0] + tol && a.0[1] <= b.1[1] + tol && b.0[1] <= a.1[1] + tol
}

/// Fragments `(element of a, element of b, simplex vertices)` tiling the differing region.
pub fn differing_fragments(pair: &MeshPair) -> Vec<(usize, usize, Vec<Point>)> {
    let (ma, mb) = (&pair.mesh_a, &pair.mesh_b);
    let cands: Vec<(usize, (Point, Point))> =
        pair.differing_in_b().into_iter().map(|k| (k, mb.bounding_box(k))).collect();
    let mut out = Vec::new();
    for ka in pair.differing_in_a() {
        let bb = ma.bounding_box(ka);
        let va = ma.element_vertices(ka);
        for &(kb, bbb) in &cands {
            if !boxes_overlap(bb, bbb) {
                continue;
            }
            let vb = mb.element_vertices(kb);
            if ma.dim() == 1 {
                if let Some([lo, hi]) = clip_interval([va[0][0], va[1][0]], [vb[0][0], vb[1][0]]) {
                    out.push((ka, kb, vec![[lo, 0.0], [hi, 0.0]]));
                }
            } else {
                let poly = clip_convex(&va, &vb);
                for t in fan_triangulate(&poly) {
                    out.push((ka, kb, t.to_vec()));
                }
            }
        }
    }
    out
}

fn fragment_measure(v: &[Point]) -> f64 {
    if v.len() == 2 {
        (v[1][0] - v[0][0]).abs()
    } else {
        polygon_area(v).abs()
    }
}

/// `‖f_a − f_b‖_{s,η}` for discrete functions on the two meshes of `pair`.
///
/// Shared elements are integrated directly; the differing region is cut into
/// the overlaps of elements of both meshes, on which the difference is a polynomial.
pub fn cross_mesh_norm(f_a: &FeFunction, f_b: &FeFunction, pair: &MeshPair, spec: &NormSpec) -> Result<f64> {
    check_spec(spec)?;
    let (sa, sb) = (f_a.space(), f_b.space());
    if sa.degree() != sb.degree() {
        return invalid(format!(
            "degree mismatch: {} on mesh a, {} on mesh b",
            sa.degree(),
            sb.degree()
        ));
    }
    if !same_mesh(sa.mesh(), &pair.mesh_a) || !same_mesh(sb.mesh(), &pair.mesh_b) {
        return invalid("functions are not defined on the meshes of the pair");
    }
    let dim = sa.dim();
    let rule = if spec.eta.is_infinite() {
        None
    } else {
        Some(power_rule(dim, sa.degree(), spec.eta, 0)?)
    };
    let mut acc = Accumulator::new(spec.s, dim, spec.eta);
    for &(ka, kb) in &pair.shared_elements {
        if !spec.in_region(ka) {
            continue;
        }
        for (x, w) in element_points(rule.as_ref(), &sa.geometry(ka).vertices, &[]) {
            let (va, ga) = f_a.eval_in_element(ka, x);
            let (vb, gb) = f_b.eval_in_element(kb, x);
            acc.add(w, va - vb, [ga[0] - gb[0], ga[1] - gb[1]]);
        }
    }
    let fragments = differing_fragments(pair);
    let mut frag_measure = 0.0;
    let mut part = Accumulator::new(spec.s, dim, spec.eta);
    for (ka, kb, verts) in &fragments {
        frag_measure += fragment_measure(verts);
        if !spec.in_region(*ka) {
            continue;
        }
        for (x, w) in element_points(rule.as_ref(), verts, &[]) {
            let (va, ga) = f_a.eval_in_element(*ka, x);
            let (vb, gb) = f_b.eval_in_element(*kb, x);
            part.add(w, va - vb, [ga[0] - gb[0], ga[1] - gb[1]]);
        }
    }
    let expected: f64 = pair.differing_in_a().iter().map(|&k| pair.mesh_a.measure(k)).sum();
    if (frag_measure - expected).abs() > CLIP_AREA_TOL
        || (frag_measure - pair.differing_region_measure).abs() > CLIP_AREA_TOL
    {
        return Err(Error::Geometry(format!(
            "clipped fragments cover {frag_measure:e}, differing region measures {expected:e}"
        )));
    }
    acc.merge(&part);
    Ok(acc.total())
}

/// Value of a seminorm `|u|_{k,η}` and whether it was approximated numerically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeminormValue {
    pub value: f64,
    pub approximate: bool,
}

/// Cells per direction of the background mesh used when no analytic value is known.
const DENSE_CELLS_1D: usize = 4096;
const DENSE_CELLS_2D: usize = 128;

/// `|u|_{k,η} = (Σ_{|α|=k} ∫ |∂^α u|^η)^{1/η}`, or the largest `|∂^α u|` for `η = ∞`.
pub fn seminorm_exact(u: &FunctionSpec, k: usize, eta: f64) -> Result<SeminormValue> {
    if !(eta >= 1.0) {
        return invalid(format!("integrability must be at least 1, got {eta}"));
    }
    if let Some(v) = u.known_seminorm(k, eta) {
        return Ok(SeminormValue {
            value: v,
            approximate: false,
        });
    }
    let dim = u.dim();
    let probe = [0.5, if dim == 2 { 0.5 } else { 0.0 }];
    if u.derivative(k, probe).is_none() {
        return invalid(format!("derivatives of order {k} of `{}` are not available", u.name()));
    }
    let mesh = if dim == 1 {
        build_uniform_interval(DENSE_CELLS_1D)?
    } else {
        build_uniform_square(DENSE_CELLS_2D)?
    };
    let rule = if eta.is_infinite() {
        None
    } else {
        Some(quadrature_rule(dim, 10)?)
    };
    let mut total = 0.0f64;
    for e in 0..mesh.n_elements() {
        let geom = Simplex::new(mesh.element_vertices(e));
        for (x, w) in element_points(rule.as_ref(), &geom.vertices, u.singular_points()) {
            let Some(d) = u.derivative(k, x) else { continue };
            for c in d {
                if !c.is_finite() {
                    continue;
                }
                if eta.is_infinite() {
                    total = total.max(c.abs());
                } else {
                    total += w * c.abs().powf(eta);
                }
            }
        }
    }
    let value = if eta.is_infinite() { total } else { total.powf(1.0 / eta) };
    Ok(SeminormValue {
        value,
        approximate: true,
    })
}

/// Default threshold below which a function counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-13;

/// Total measure of the elements on which `f` is not identically below `threshold`.
pub fn support_measure(f: &FeFunction, threshold: f64) -> f64 {
    let space = f.space();
    let rule = quadrature_rule(space.dim(), 2 * space.degree()).expect("supported degree");
    let mut total = 0.0;
    for k in 0..space.mesh().n_elements() {
        let at_dofs = space.element_dofs(k).iter().any(|&d| f.coeffs()[d].abs() > threshold);
        let nonzero = at_dofs
            || rule
                .on_simplex(&space.geometry(k).vertices)
                .iter()
                .any(|&(x, _)| f.eval_in_element(k, x).0.abs() > threshold);
        if nonzero {
            total += space.mesh().measure(k);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{classify_pair, perturb_node_nearest};
    use crate::space::{build_space, interpolate_nodal};
    use std::f64::consts::PI;

    #[test]
    fn parse_and_label() {
        assert_eq!(NormSpec::parse("L2").unwrap(), NormSpec::l2());
        assert_eq!(NormSpec::parse("h1").unwrap(), NormSpec::h1());
        assert_eq!(NormSpec::parse("W1,inf").unwrap().label(), "W1,inf");
        assert_eq!(NormSpec::parse("W0,4").unwrap().label(), "W0,4");
        assert!(NormSpec::parse("W2,2").is_err());
        assert!(NormSpec::parse("W0,1").is_err());
        assert!(NormSpec::parse("X").is_err());
    }

    #[test]
    fn exact_norms_of_sine() {
        let s = build_space(Arc::new(build_uniform_interval(8).unwrap()), 1, true).unwrap();
        let zero = FeFunction::zero(s.clone());
        let u = FunctionSpec::sin_1d();
        let v = sobolev_norm_exact_diff(&zero, &u, &NormSpec::l2()).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
        let v = sobolev_norm_exact_diff(&zero, &u, &NormSpec::h1()).unwrap();
        assert!((v - (0.5 + PI * PI / 2.0).sqrt()).abs() < 1e-12);
        let no_grad = FunctionSpec::new("u", 1, |x| x[0]);
        assert!(sobolev_norm_exact_diff(&zero, &no_grad, &NormSpec::h1()).is_err());
    }

    #[test]
    fn interpolant_error_against_simpson() {
        let s = build_space(Arc::new(build_uniform_interval(8).unwrap()), 1, true).unwrap();
        let u = FunctionSpec::sin_1d();
        let ih = interpolate_nodal(&s, &u);
        let v = sobolev_norm_exact_diff(&ih, &u, &NormSpec::l2()).unwrap();
        let n = 100_000;
        let h = 1.0 / n as f64;
        let g = |x: f64| {
            let d = ih.evaluate([x, 0.0]).unwrap().0 - (PI * x).sin();
            d * d
        };
        let mut simpson = g(0.0) + g(1.0);
        for i in 1..n {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        simpson *= h / 3.0;
        assert!((v - simpson.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn hat_on_perturbed_grid() {
        let a = Arc::new(build_uniform_interval(8).unwrap());
        let b = Arc::new(perturb_node_nearest(&a, [0.25, 0.0], [0.03125, 0.0]).unwrap());
        let pair = classify_pair(b.clone(), a.clone(), 1.0).unwrap();
        let sa = build_space(b, 1, true).unwrap();
        let sb = build_space(a, 1, true).unwrap();
        let hat = FeFunction::basis(sa, 2);
        let zero = FeFunction::zero(sb);
        let v = cross_mesh_norm(&hat, &zero, &pair, &NormSpec::l2()).unwrap();
        let expected = ((0.15625 + 0.09375) / 3.0f64).sqrt();
        assert!((v - expected).abs() < 1e-14);
        assert!((expected - 0.28868).abs() < 1e-5);
        assert!((support_measure(&hat, SUPPORT_THRESHOLD) - 0.25).abs() < 1e-15);
        assert_eq!(support_measure(&zero, SUPPORT_THRESHOLD), 0.0);
    }

    #[test]
    fn identical_meshes_reduce_to_same_mesh_norm() {
        let m = Arc::new(build_uniform_square(4).unwrap());
        let pair = classify_pair(m.clone(), m.clone(), 2.0).unwrap();
        let s = build_space(m, 2, true).unwrap();
        let f = interpolate_nodal(&s, &FunctionSpec::sin_2d());
        let g = FeFunction::basis(s.clone(), 12);
        for spec in [NormSpec::l2(), NormSpec::h1()] {
            let cross = cross_mesh_norm(&f, &g, &pair, &spec).unwrap();
            let same = fe_norm(&f.axpy(-1.0, &g).unwrap(), &spec).unwrap();
            assert!((cross - same).abs() < 1e-13);
            assert_eq!(cross_mesh_norm(&f, &f, &pair, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn seminorms() {
        let u = FunctionSpec::sin_1d();
        let v = seminorm_exact(&u, 2, f64::INFINITY).unwrap();
        assert_eq!(v.value, PI * PI);
        assert!(!v.approximate);
        assert_eq!(seminorm_exact(&u, 2, 2.0).unwrap().value, PI * PI / 2f64.sqrt());
        let r = FunctionSpec::regularity(4.0);
        let d = seminorm_exact(&r, 1, f64::INFINITY).unwrap();
        assert!(d.approximate);
        // Largest slope is at the origin, where u' = -1.
        assert!((d.value - 1.0).abs() < 1e-12);
        let dense = (0..=100_000)
            .map(|i| r.gradient([i as f64 / 1e5, 0.0]).unwrap()[0].abs())
            .fold(0.0, f64::max);
        assert!((d.value - dense).abs() < 1e-9);
        // ∫ (e(e-1) x^{e-2})² with e = 7/4 gives (e(e-1))² / (2e - 3).
        let e = 1.75f64;
        let d2 = seminorm_exact(&r, 2, 2.0).unwrap();
        assert!((d2.value - (e * (e - 1.0)) / (2.0 * e - 3.0).sqrt()).abs() < 1e-6);
        assert!(seminorm_exact(&r, 3, 2.0).is_err());
    }
}
