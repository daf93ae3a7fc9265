//! Gauss–Legendre rules on the unit interval and collapsed (Duffy) product
//! rules on the reference triangle.

use crate::error::{invalid, Result};
use crate::mesh::Point;

/// Highest exactness degree offered on the interval.
pub const MAX_DEGREE_1D: usize = 20;
/// Highest exactness degree offered on the triangle.
pub const MAX_DEGREE_2D: usize = 14;

/// Quadrature on a reference simplex: `[0,1]` or the triangle `(0,0),(1,0),(0,1)`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Maps the rule onto a simplex with the given vertices, returning
    /// physical points and weights scaled by the Jacobian determinant.
    pub fn on_simplex(&self, vertices: &[Point]) -> Vec<(Point, f64)> {
        let v0 = vertices[0];
        match self.dim {
            1 => {
                let len = (vertices[1][0] - v0[0]).abs();
                self.points
                    .iter()
                    .zip(&self.weights)
                    .map(|(p, &w)| ([v0[0] + p[0] * (vertices[1][0] - v0[0]), 0.0], w * len))
                    .collect()
            }
            _ => {
                let e1 = [vertices[1][0] - v0[0], vertices[1][1] - v0[1]];
                let e2 = [vertices[2][0] - v0[0], vertices[2][1] - v0[1]];
                let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
                self.points
                    .iter()
                    .zip(&self.weights)
                    .map(|(p, &w)| {
                        (
                            [
                                v0[0] + p[0] * e1[0] + p[1] * e2[0],
                                v0[1] + p[0] * e1[1] + p[1] * e2[1],
                            ],
                            w * det,
                        )
                    })
                    .collect()
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration
/// on the Legendre polynomial from Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (z * p1 - p0) / (z * z - 1.0))
}

/// Rule on the reference simplex of `dimension` exact for polynomials of
/// total degree `exactness_degree`.
pub fn quadrature_rule(dimension: usize, exactness_degree: usize) -> Result<QuadratureRule> {
    match dimension {
        1 => {
            if exactness_degree > MAX_DEGREE_1D {
                return invalid(format!(
                    "1-D quadrature supports degree <= {MAX_DEGREE_1D}, got {exactness_degree}"
                ));
            }
            let n = exactness_degree / 2 + 1;
            let (x, w) = gauss_legendre(n);
            Ok(QuadratureRule {
                dim: 1,
                points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
                weights: w.iter().map(|&wi| 0.5 * wi).collect(),
                exactness_degree,
            })
        }
        2 => {
            if exactness_degree > MAX_DEGREE_2D {
                return invalid(format!(
                    "2-D quadrature supports degree <= {MAX_DEGREE_2D}, got {exactness_degree}"
                ));
            }
            // The collapse adds one power of the first coordinate.
            let n = (exactness_degree + 1) / 2 + 1;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for i in 0..n {
                let xi = 0.5 * (x[i] + 1.0);
                for j in 0..n {
                    let eta = 0.5 * (x[j] + 1.0);
                    points.push([xi, eta * (1.0 - xi)]);
                    weights.push(0.25 * w[i] * w[j] * (1.0 - xi));
                }
            }
            Ok(QuadratureRule {
                dim: 2,
                points,
                weights,
                exactness_degree,
            })
        }
        _ => invalid(format!("quadrature dimension must be 1 or 2, got {dimension}")),
    }
}

/// Depth of the geometric grading toward a singular vertex.
const GRADING_LEVELS: usize = 40;

/// Physical points and weights for `rule` on a simplex, refined geometrically
/// toward any of `singular` that coincides with a vertex (or, in 1-D, lies inside).
pub fn graded_points(rule: &QuadratureRule, vertices: &[Point], singular: &[Point]) -> Vec<(Point, f64)> {
    let close = |p: Point, q: Point| (p[0] - q[0]).abs() <= 1e-14 && (p[1] - q[1]).abs() <= 1e-14;
    for s in singular {
        if rule.dim == 1 {
            let (a, b) = (vertices[0][0], vertices[1][0]);
            if s[0] > a.min(b) + 1e-14 && s[0] < a.max(b) - 1e-14 {
                let mut out = graded_points(rule, &[vertices[0], *s], singular);
                out.extend(graded_points(rule, &[*s, vertices[1]], singular));
                return out;
            }
        }
        if let Some(corner) = vertices.iter().position(|&v| close(v, *s)) {
            return graded_toward(rule, vertices, corner);
        }
    }
    rule.on_simplex(vertices)
}

fn graded_toward(rule: &QuadratureRule, vertices: &[Point], corner: usize) -> Vec<(Point, f64)> {
    let v = vertices[corner];
    let others: Vec<Point> = (0..vertices.len()).filter(|&i| i != corner).map(|i| vertices[i]).collect();
    let mid = |p: Point, t: f64| [v[0] + t * (p[0] - v[0]), v[1] + t * (p[1] - v[1])];
    let mut out = Vec::new();
    let mut t = 1.0;
    for _ in 0..GRADING_LEVELS {
        let half = 0.5 * t;
        if rule.dim == 1 {
            out.extend(rule.on_simplex(&[mid(others[0], half), mid(others[0], t)]));
        } else {
            let (p1, p2) = (mid(others[0], t), mid(others[1], t));
            let (m1, m2) = (mid(others[0], half), mid(others[1], half));
            out.extend(rule.on_simplex(&[m1, p1, p2]));
            out.extend(rule.on_simplex(&[m1, p2, m2]));
        }
        t = half;
    }
    let mut last = vec![v];
    last.extend(others.iter().map(|&p| mid(p, t)));
    out.extend(rule.on_simplex(&last));
    out
}
