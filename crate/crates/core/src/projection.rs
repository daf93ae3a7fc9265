//! Galerkin projections `r_h u` defined by `a_h(r_h u, w) = a_h(u, w)` for all `w` in the space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{assemble_load, assemble_matrix, AssembledMatrix, BilinearFormSpec};
use crate::function::FunctionSpec;
use crate::linalg::{conjugate_gradient, norm2, BandLu};
use crate::space::{FeFunction, FeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    Direct,
    Cg,
    /// Reuses the factorization computed during the coercivity check.
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual target for iterative solves.
    pub tolerance: f64,
    /// Defaults to ten times the system size.
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Auto,
            tolerance: 1e-13,
            max_iterations: None,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        SolverConfig {
            method: SolverMethod::Direct,
            ..Default::default()
        }
    }

    pub fn cg(tolerance: f64) -> Self {
        SolverConfig {
            method: SolverMethod::Cg,
            tolerance,
            max_iterations: None,
        }
    }
}

/// Solves `A x = b` for an assembled Galerkin matrix.
pub fn solve(a: &AssembledMatrix, b: &[f64], solver: &SolverConfig) -> Result<Vec<f64>> {
    let n = a.matrix.n();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "load has {} entries, matrix has {n} rows",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if solver.method == SolverMethod::Cg {
        if !a.symmetric {
            return Err(Error::SolverFailure(
                "conjugate gradients need a symmetric matrix".into(),
            ));
        }
        let max_iter = solver.max_iterations.unwrap_or(10 * n);
        return Ok(conjugate_gradient(&a.matrix, b, solver.tolerance, max_iter)?.solution);
    }
    let x = if a.symmetric {
        a.symmetric_part_factor.solve(b)
    } else {
        BandLu::factor(&a.matrix)?.solve(b)
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("direct solve produced non-finite values".into()));
    }
    Ok(x)
}

/// Relative residual `‖b − A x‖ / ‖b‖`.
pub fn relative_residual(a: &AssembledMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matrix.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Projection `r_h u` of an exact function onto `space` with respect to `form`.
pub fn project(
    space: &Arc<FeSpace>,
    form: &BilinearFormSpec,
    u: &FunctionSpec,
    solver: &SolverConfig,
) -> Result<FeFunction> {
    let a = assemble_matrix(space, form)?;
    project_assembled(space, &a, form, u, solver)
}

/// Same as [`project`] with a matrix assembled beforehand.
pub fn project_assembled(
    space: &Arc<FeSpace>,
    a: &AssembledMatrix,
    form: &BilinearFormSpec,
    u: &FunctionSpec,
    solver: &SolverConfig,
) -> Result<FeFunction> {
    let b = assemble_load(space, form, u)?;
    let x = solve(a, &b, solver)?;
    FeFunction::from_free(space.clone(), &x)
}

/// Views a discrete function as an exact one, evaluated by point location.
pub fn as_function_spec(f: &FeFunction) -> FunctionSpec {
    let (fv, fg) = (f.clone(), f.clone());
    FunctionSpec::new("discrete", f.space().dim(), move |x| {
        fv.evaluate(x).map(|(v, _)| v).unwrap_or(0.0)
    })
    .with_gradient(move |x| fg.evaluate(x).map(|(_, g)| g).unwrap_or([0.0, 0.0]))
}
