//! Bilinear forms `a_h` and their assembly over the free degrees of freedom.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::function::{FunctionSpec, VectorFn};
use crate::linalg::{BandCholesky, CsrMatrix};
use crate::mesh::Point;
use crate::quadrature::{graded_points, quadrature_rule, MAX_DEGREE_1D, MAX_DEGREE_2D};
use crate::space::{shape_functions, FeSpace};
use crate::theory::Delta;

/// Declarative description of a bilinear form.
#[derive(Clone)]
pub enum BilinearFormSpec {
    /// `∫ u w`
    Mass,
    /// `∫ ∇u·∇w`
    Stiffness,
    /// `∫ ∇u·∇w − ∫ (v·∇u) w + κ ∫ u w`
    Adr { kappa: f64, velocity: VectorFn },
    /// `base + h^δ · perturbation`; `mu`, `nu`, `q` describe the bound on the difference.
    Perturbed {
        base: Box<BilinearFormSpec>,
        delta: Delta,
        perturbation: Box<BilinearFormSpec>,
        mu: usize,
        nu: usize,
        q: f64,
    },
}

impl fmt::Debug for BilinearFormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BilinearFormSpec::Mass => write!(f, "Mass"),
            BilinearFormSpec::Stiffness => write!(f, "Stiffness"),
            BilinearFormSpec::Adr { kappa, .. } => write!(f, "Adr {{ kappa: {kappa} }}"),
            BilinearFormSpec::Perturbed {
                base,
                delta,
                perturbation,
                ..
            } => write!(f, "Perturbed({base:?} + h^{delta} {perturbation:?})"),
        }
    }
}

impl BilinearFormSpec {
    pub fn adr(kappa: f64, velocity: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        BilinearFormSpec::Adr {
            kappa,
            velocity: Arc::new(velocity),
        }
    }

    /// `base + h^δ · mass`, for which the difference is bounded with `μ = ν = 0`, `q = 2`.
    pub fn mass_perturbed(base: BilinearFormSpec, delta: Delta) -> Self {
        BilinearFormSpec::Perturbed {
            base: Box::new(base),
            delta,
            perturbation: Box::new(BilinearFormSpec::Mass),
            mu: 0,
            nu: 0,
            q: 2.0,
        }
    }

    /// Sobolev order `s` on which the form is coercive.
    pub fn order(&self) -> usize {
        match self {
            BilinearFormSpec::Mass => 0,
            BilinearFormSpec::Stiffness | BilinearFormSpec::Adr { .. } => 1,
            BilinearFormSpec::Perturbed {
                base, perturbation, ..
            } => base.order().max(perturbation.order()),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            BilinearFormSpec::Mass | BilinearFormSpec::Stiffness => true,
            BilinearFormSpec::Adr { .. } => false,
            BilinearFormSpec::Perturbed {
                base, perturbation, ..
            } => base.is_symmetric() && perturbation.is_symmetric(),
        }
    }

    /// Flattens the form into coefficients of its elementary terms at mesh size `h`.
    fn terms(&self, h: f64) -> Terms {
        match self {
            BilinearFormSpec::Mass => Terms {
                diffusion: 0.0,
                reaction: 1.0,
                advection: Vec::new(),
            },
            BilinearFormSpec::Stiffness => Terms {
                diffusion: 1.0,
                reaction: 0.0,
                advection: Vec::new(),
            },
            BilinearFormSpec::Adr { kappa, velocity } => Terms {
                diffusion: 1.0,
                reaction: *kappa,
                advection: vec![(velocity.clone(), 1.0)],
            },
            BilinearFormSpec::Perturbed {
                base,
                delta,
                perturbation,
                ..
            } => {
                let mut t = base.terms(h);
                let w = delta.weight(h);
                if w != 0.0 {
                    let p = perturbation.terms(h);
                    t.diffusion += w * p.diffusion;
                    t.reaction += w * p.reaction;
                    t.advection.extend(p.advection.into_iter().map(|(v, c)| (v, w * c)));
                }
                t
            }
        }
    }
}

struct Terms {
    diffusion: f64,
    reaction: f64,
    advection: Vec<(VectorFn, f64)>,
}

impl Terms {
    /// Integrand `a(u, w)` at one point from values and gradients of `u` and `w`.
    fn integrand(&self, x: Point, u: f64, du: Point, w: f64, dw: Point) -> f64 {
        let mut s = self.diffusion * (du[0] * dw[0] + du[1] * dw[1]) + self.reaction * u * w;
        for (v, c) in &self.advection {
            let vel = v(x);
            s -= c * (vel[0] * du[0] + vel[1] * du[1]) * w;
        }
        s
    }
}

/// Galerkin matrix over the free degrees of freedom.
#[derive(Clone, Debug)]
pub struct AssembledMatrix {
    pub matrix: CsrMatrix,
    pub symmetric: bool,
    /// Cholesky factor of the symmetric part; its existence certifies coercivity.
    pub symmetric_part_factor: BandCholesky,
}

/// Quadrature exactness used for the Galerkin matrix.
fn matrix_exactness(degree: usize) -> usize {
    2 * degree + 2
}

/// Quadrature exactness used for load vectors with a non-polynomial `u`.
pub fn load_exactness(degree: usize) -> usize {
    2 * degree + 4
}

/// Assembles `A[i][j] = a_h(N_j, N_i)` over free DOFs and checks coercivity by
/// factoring the symmetric part.
pub fn assemble_matrix(space: &FeSpace, form: &BilinearFormSpec) -> Result<AssembledMatrix> {
    let terms = form.terms(space.mesh().h());
    let rule = quadrature_rule(space.dim(), matrix_exactness(space.degree()))?;
    let n_local = space.n_local();
    let mut triplets = Vec::with_capacity(space.mesh().n_elements() * n_local * n_local);
    let mut vals = Vec::with_capacity(n_local);
    let mut grads = Vec::with_capacity(n_local);
    let mut local = vec![0.0; n_local * n_local];
    for k in 0..space.mesh().n_elements() {
        let geom = space.geometry(k);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (x, w) in rule.on_simplex(&geom.vertices) {
            let lambda = geom.barycentric(x);
            shape_functions(space.degree(), geom, &lambda, &mut vals, &mut grads);
            for i in 0..n_local {
                for j in 0..n_local {
                    local[i * n_local + j] += w * terms.integrand(x, vals[j], grads[j], vals[i], grads[i]);
                }
            }
        }
        let dofs = space.element_dofs(k);
        for i in 0..n_local {
            let Some(fi) = space.free_index(dofs[i]) else { continue };
            for j in 0..n_local {
                let Some(fj) = space.free_index(dofs[j]) else { continue };
                triplets.push((fi, fj, local[i * n_local + j]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(space.n_free(), &triplets);
    let symmetric = form.is_symmetric();
    let factor = if symmetric {
        BandCholesky::factor(&matrix)?
    } else {
        let sym_part = matrix.add(0.5, &matrix.transpose(), 0.5);
        BandCholesky::factor(&sym_part)?
    };
    Ok(AssembledMatrix {
        matrix,
        symmetric,
        symmetric_part_factor: factor,
    })
}

/// Load vector `b[i] = a_h(u, N_i)` over free DOFs. When `u` has singular
/// points the highest available rule is used on every element.
pub fn assemble_load(space: &FeSpace, form: &BilinearFormSpec, u: &FunctionSpec) -> Result<Vec<f64>> {
    let exactness = if u.singular_points().is_empty() {
        load_exactness(space.degree())
    } else {
        let cap = if space.dim() == 1 { MAX_DEGREE_1D } else { MAX_DEGREE_2D };
        cap.max(load_exactness(space.degree()))
    };
    assemble_load_with(space, form, u, exactness)
}

pub fn assemble_load_with(
    space: &FeSpace,
    form: &BilinearFormSpec,
    u: &FunctionSpec,
    exactness: usize,
) -> Result<Vec<f64>> {
    if form.order() >= 1 && !u.has_gradient() {
        return invalid(format!("form {form:?} needs the gradient of `{}`", u.name()));
    }
    let terms = form.terms(space.mesh().h());
    let rule = quadrature_rule(space.dim(), exactness)?;
    let n_local = space.n_local();
    let mut load = vec![0.0; space.n_free()];
    let mut vals = Vec::with_capacity(n_local);
    let mut grads = Vec::with_capacity(n_local);
    let mut local = vec![0.0; n_local];
    for k in 0..space.mesh().n_elements() {
        let geom = space.geometry(k);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (x, w) in graded_points(&rule, &geom.vertices, u.singular_points()) {
            let lambda = geom.barycentric(x);
            shape_functions(space.degree(), geom, &lambda, &mut vals, &mut grads);
            let uv = u.value(x);
            let du = u.gradient(x).unwrap_or([0.0, 0.0]);
            for i in 0..n_local {
                local[i] += w * terms.integrand(x, uv, du, vals[i], grads[i]);
            }
        }
        for (i, &d) in space.element_dofs(k).iter().enumerate() {
            if let Some(fi) = space.free_index(d) {
                load[fi] += local[i];
            }
        }
    }
    Ok(load)
}
