//! Exact functions `u` with their derivatives and known seminorm values.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
/// Evaluates all partial derivatives of one total order, one entry per multi-index.
pub type DerivativeFn = Arc<dyn Fn(Point) -> Vec<f64> + Send + Sync>;

/// A function together with whatever derivative information is known about it.
#[derive(Clone)]
pub struct FunctionSpec {
    name: String,
    dim: usize,
    value: ScalarFn,
    gradient: Option<VectorFn>,
    derivatives: Vec<(usize, DerivativeFn)>,
    seminorms: Vec<(usize, f64, f64)>,
    singular_points: Vec<Point>,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl FunctionSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FunctionSpec {
            name: name.into(),
            dim,
            value: Arc::new(value),
            gradient: None,
            derivatives: Vec::new(),
            seminorms: Vec::new(),
            singular_points: Vec::new(),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    /// Registers the partial derivatives of total order `k`.
    pub fn with_derivative(
        mut self,
        k: usize,
        d: impl Fn(Point) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.derivatives.retain(|(order, _)| *order != k);
        self.derivatives.push((k, Arc::new(d)));
        self
    }

    /// Records the analytic value of `|u|_{k,eta}`; `eta` may be infinite.
    pub fn with_seminorm(mut self, k: usize, eta: f64, value: f64) -> Self {
        self.seminorms.push((k, eta, value));
        self
    }

    /// Marks a point where derivatives blow up; integration grades toward it.
    pub fn with_singular_point(mut self, p: Point) -> Self {
        self.singular_points.push(p);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: Point) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: Point) -> Option<Point> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn singular_points(&self) -> &[Point] {
        &self.singular_points
    }

    pub fn known_seminorm(&self, k: usize, eta: f64) -> Option<f64> {
        self.seminorms
            .iter()
            .find(|(order, e, _)| *order == k && *e == eta)
            .map(|&(_, _, v)| v)
    }

    /// Partial derivatives of order `k`; orders 0 and 1 fall back to value and gradient.
    pub fn derivative(&self, k: usize, x: Point) -> Option<Vec<f64>> {
        if let Some((_, d)) = self.derivatives.iter().find(|(order, _)| *order == k) {
            return Some(d(x));
        }
        match k {
            0 => Some(vec![self.value(x)]),
            1 => self.gradient(x).map(|g| g[..self.dim].to_vec()),
            _ => None,
        }
    }

    /// Linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &FunctionSpec, beta: f64) -> FunctionSpec {
        let (f, g) = (self.value.clone(), other.value.clone());
        let mut out = FunctionSpec::new(
            format!("{alpha}*{} + {beta}*{}", self.name, other.name),
            self.dim,
            move |x| alpha * f(x) + beta * g(x),
        );
        if let (Some(gf), Some(gg)) = (self.gradient.clone(), other.gradient.clone()) {
            out = out.with_gradient(move |x| {
                let (a, b) = (gf(x), gg(x));
                [alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]]
            });
        }
        out.singular_points = self.singular_points.clone();
        out.singular_points.extend_from_slice(&other.singular_points);
        out
    }

    /// `sin(πx)` on the unit interval.
    pub fn sin_1d() -> Self {
        let s2 = 2f64.sqrt();
        let mut f = FunctionSpec::new("sin(pi x)", 1, |x| (PI * x[0]).sin())
            .with_gradient(|x| [PI * (PI * x[0]).cos(), 0.0])
            .with_seminorm(0, 2.0, 1.0 / s2);
        for k in 0..=4usize {
            f = f
                .with_derivative(k, move |x| {
                    vec![PI.powi(k as i32) * (PI * x[0] + k as f64 * PI / 2.0).sin()]
                })
                .with_seminorm(k, f64::INFINITY, PI.powi(k as i32))
                .with_seminorm(k, 2.0, PI.powi(k as i32) / s2);
        }
        f
    }

    /// `sin(πx) sin(πy)` on the unit square.
    pub fn sin_2d() -> Self {
        FunctionSpec::new("sin(pi x) sin(pi y)", 2, |x| (PI * x[0]).sin() * (PI * x[1]).sin())
            .with_gradient(|x| {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                [PI * cx * sy, PI * sx * cy]
            })
            .with_derivative(2, |x| {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                let p2 = PI * PI;
                vec![-p2 * sx * sy, p2 * cx * cy, -p2 * sx * sy]
            })
            .with_seminorm(0, 2.0, 0.5)
            .with_seminorm(0, f64::INFINITY, 1.0)
            .with_seminorm(1, f64::INFINITY, PI)
            .with_seminorm(1, 2.0, PI / 2f64.sqrt())
            .with_seminorm(2, f64::INFINITY, PI * PI)
    }

    /// `x^(2 - 1/p) - x`, which lies in `W^{2,q}` only for `q < p`.
    pub fn regularity(p: f64) -> Self {
        let e = 2.0 - 1.0 / p;
        FunctionSpec::new(format!("x^(2-1/{p}) - x"), 1, move |x| x[0].max(0.0).powf(e) - x[0])
            .with_gradient(move |x| [e * x[0].max(0.0).powf(e - 1.0) - 1.0, 0.0])
            .with_derivative(2, move |x| vec![e * (e - 1.0) * x[0].max(0.0).powf(e - 2.0)])
            .with_singular_point([0.0, 0.0])
    }

    /// Affine function `c + g·x`.
    pub fn affine(dim: usize, c: f64, g: Point) -> Self {
        FunctionSpec::new("affine", dim, move |x| c + g[0] * x[0] + g[1] * x[1])
            .with_gradient(move |_| g)
            .with_derivative(2, move |_| vec![0.0; if dim == 1 { 1 } else { 3 }])
    }

    pub fn zero(dim: usize) -> Self {
        FunctionSpec::affine(dim, 0.0, [0.0, 0.0])
    }

    /// Resolves the function names accepted in study configuration files:
    /// `sin`, `regularity(p)`, `zero`.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        let name = name.trim();
        if name == "sin" {
            return Ok(if dim == 1 { Self::sin_1d() } else { Self::sin_2d() });
        }
        if name == "zero" {
            return Ok(Self::zero(dim));
        }
        if let Some(arg) = name.strip_prefix("regularity(").and_then(|s| s.strip_suffix(')')) {
            if dim != 1 {
                return invalid("regularity(p) is defined on the unit interval only");
            }
            let p: f64 = arg
                .trim()
                .parse()
                .map_err(|_| crate::Error::InvalidArgument(format!("bad exponent `{arg}`")))?;
            if !(p > 2.0) {
                return invalid(format!("regularity(p) needs p > 2, got {p}"));
            }
            return Ok(Self::regularity(p));
        }
        invalid(format!("unknown function `{name}`"))
    }
}
