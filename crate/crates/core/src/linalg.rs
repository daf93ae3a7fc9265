//! Sparse matrices and the solvers used for the Galerkin systems: banded
//! Cholesky and LU factorizations after reverse Cuthill–McKee reordering, and
//! Jacobi-preconditioned conjugate gradients.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            // Stable sort keeps the summation order deterministic.
            row.sort_by_key(|&(j, _)| j);
            let mut p = 0;
            while p < row.len() {
                let j = row[p].0;
                let mut v = 0.0;
                while p < row.len() && row[p].0 == j {
                    v += row[p].1;
                    p += 1;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        CsrMatrix::from_triplets(self.n, &triplets)
    }

    /// `alpha * self + beta * other`.
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        let mut triplets: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, alpha * v)))
            .collect();
        triplets.extend((0..other.n).flat_map(|i| other.row(i).map(move |(j, v)| (i, j, beta * v))));
        CsrMatrix::from_triplets(self.n, &triplets)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.add(1.0, &t, -1.0).max_abs()
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= 1e-14 * self.max_abs()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill–McKee ordering of the matrix graph; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    // Symmetrize the pattern so nonsymmetric matrices are handled too.
    let mut sym = adj.clone();
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            if !sym[j].contains(&i) {
                sym[j].push(i);
            }
        }
    }
    let degree: Vec<usize> = sym.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = sym[v].iter().copied().filter(|&j| !visited[j]).collect();
            nb.sort_by_key(|&j| (degree[j], j));
            for j in nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

fn bandwidth(a: &CsrMatrix, inv: &[usize]) -> usize {
    (0..a.n)
        .flat_map(|i| a.row(i).map(move |(j, _)| inv[i].abs_diff(inv[j])))
        .max()
        .unwrap_or(0)
}

/// Banded Cholesky factor `P A Pᵀ = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    perm: Vec<usize>,
    /// Row `i` holds `L[i][i - bw ..= i]`.
    lower: Vec<f64>,
}

impl BandCholesky {
    /// Factors the symmetric matrix `a`; a non-positive pivot means `a` is not positive definite.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let inv = inverse_permutation(&perm);
        let bw = bandwidth(a, &inv);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pj <= pi {
                    l[pi * w + (pj + bw - pi)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[i * w + (j + bw - i)];
                let kstart = lo.max(j.saturating_sub(bw));
                for k in kstart..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::CoercivityViolation {
                            row: perm[i],
                            pivot: s,
                        });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky {
            n,
            bw,
            perm,
            lower: l,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.lower[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.lower[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.lower[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.lower[i * w + bw];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }
}

/// Banded LU factorization without pivoting. Safe for matrices whose
/// symmetric part is positive definite, which is the case for coercive forms.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    bw: usize,
    perm: Vec<usize>,
    /// Row `i` holds entries `i - bw ..= i + bw`; L below the diagonal (unit), U on and above.
    band: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let inv = inverse_permutation(&perm);
        let bw = bandwidth(a, &inv);
        let w = 2 * bw + 1;
        let idx = |i: usize, j: usize| i * w + (j + bw - i);
        let mut m = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                m[idx(inv[i], inv[j])] = v;
            }
        }
        for k in 0..n {
            let pivot = m[idx(k, k)];
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::SolverFailure(format!("zero pivot at row {}", perm[k])));
            }
            let hi = (k + bw + 1).min(n);
            for i in k + 1..hi {
                let f = m[idx(i, k)] / pivot;
                if f == 0.0 {
                    continue;
                }
                m[idx(i, k)] = f;
                for j in k + 1..hi {
                    m[idx(i, j)] -= f * m[idx(k, j)];
                }
            }
        }
        Ok(BandLu {
            n,
            bw,
            perm,
            band: m,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, 2 * self.bw + 1);
        let idx = |i: usize, j: usize| i * w + (j + bw - i);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[idx(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.band[idx(i, k)] * y[k];
            }
            y[i] = s / self.band[idx(i, i)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Debug)]
pub struct CgResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `a`.
/// Stops once `‖b − A x‖ ≤ tol · ‖b‖` with the residual recomputed explicitly.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgResult> {
    let n = a.n;
    if b.len() != n {
        return invalid("right-hand side length does not match the matrix");
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgResult {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::CoercivityViolation { row: i, pivot: diag[i] });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::CoercivityViolation { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm {
            // Confirm against the true residual; recurrence drift can fake convergence.
            let ax = a.matvec(&x);
            let true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rel = norm2(&true_r) / bnorm;
            if rel <= tol {
                return Ok(CgResult {
                    solution: x,
                    iterations: it,
                    relative_residual: rel,
                });
            }
            r = true_r;
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = a.matvec(&x);
    let rel = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
    Err(Error::SolverFailure(format!(
        "conjugate gradients did not reach {tol:e} in {max_iter} iterations (residual {rel:e})"
    )))
}
