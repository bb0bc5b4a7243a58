//! Compressed sparse row storage, preconditioned conjugate gradients and sparse Cholesky.

use super::space::{DofKind, Q2Space};
use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side as FaerSide};
use std::sync::OnceLock;

/// Row-compressed nonzero structure of the reduced system.
#[derive(Debug, Clone)]
pub struct SparsityPattern {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    symbolic: OnceLock<SymbolicLlt<usize>>,
}

impl SparsityPattern {
    pub(crate) fn for_space(space: &Q2Space) -> Self {
        let n = space.num_free();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut exp = Vec::new();
        let mut free = Vec::with_capacity(54);
        for cell in 0..space.mesh().num_cells() {
            free.clear();
            for dof in space.element_dofs(cell) {
                space.expand(dof, &mut exp);
                for &(d, _) in &exp {
                    if let DofKind::Free(i) = space.dof_kind(d) {
                        free.push(i);
                    }
                }
            }
            free.sort_unstable();
            free.dedup();
            for &i in &free {
                rows[i].extend_from_slice(&free);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, symbolic: OnceLock::new() }
    }

    /// Fill-reducing symbolic factorization, computed once per pattern.
    pub fn symbolic_cholesky(&self) -> Result<SymbolicLlt<usize>> {
        if let Some(s) = self.symbolic.get() {
            return Ok(s.clone());
        }
        let s = analyze(&self.row_ptr, &self.cols)?;
        Ok(self.symbolic.get_or_init(|| s).clone())
    }
}

fn analyze(row_ptr: &[usize], cols: &[usize]) -> Result<SymbolicLlt<usize>> {
    let n = row_ptr.len() - 1;
    // A symmetric CSR matrix is its own CSC transpose.
    let view = SymbolicSparseColMatRef::new_checked(n, n, row_ptr, None, cols);
    SymbolicLlt::try_new(view, FaerSide::Upper).map_err(|e| Error::InvalidArgument(format!("symbolic factorization: {e:?}")))
}

/// Square sparse matrix in CSR format.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: &SparsityPattern) -> Self {
        Self { row_ptr: pattern.row_ptr.clone(), cols: pattern.cols.clone(), values: vec![0.0; pattern.cols.len()] }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, values }
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        let k = row.binary_search(&j).expect("entry outside sparsity pattern");
        self.values[self.row_ptr[i] + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).map_or(0.0, |k| self.values[self.row_ptr[i] + k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[a..b].iter().zip(&self.values[a..b]).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        (0..self.nrows()).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| (self.values[k] - self.get(self.cols[k], i)).abs() <= tol * scale)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Jacobi-preconditioned conjugate gradients.
    Pcg,
    /// Sparse Cholesky followed by iterative refinement.
    Cholesky,
}

/// Linear solver selection and stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual `‖b - Ax‖ / ‖b‖`.
    pub tolerance: f64,
    /// PCG iterations, or refinement steps for Cholesky.
    pub max_iterations: usize,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 100_000, method: SolverMethod::Cholesky }
    }
}

impl SolverConfig {
    pub fn pcg() -> Self {
        Self { method: SolverMethod::Pcg, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients; `x` holds the initial guess on entry.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], config: &SolverConfig) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let mut inv_diag = Vec::with_capacity(n);
    for d in a.diagonal() {
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { iteration: 0, curvature: d });
        }
        inv_diag.push(1.0 / d);
    }

    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > config.tolerance {
        if it >= config.max_iterations {
            return Err(Error::SolverNotConverged { iterations: it, residual: res });
        }
        a.mul_vec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::NotPositiveDefinite { iteration: it, curvature: pq });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / bnorm;
    }
    Ok(SolveStats { iterations: it, residual: res })
}

fn relative_residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64], bnorm: f64) -> f64 {
    a.mul_vec(x, r);
    for i in 0..b.len() {
        r[i] = b[i] - r[i];
    }
    dot(r, r).sqrt() / bnorm
}

/// Direct solve with a numeric factorization on `symbolic`, then iterative
/// refinement until the relative residual meets `config.tolerance`.
pub fn cholesky(a: &CsrMatrix, b: &[f64], x: &mut [f64], symbolic: SymbolicLlt<usize>, config: &SolverConfig) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let view = SparseColMatRef::new(SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.cols), &a.values);
    let llt = Llt::try_new_with_symbolic(symbolic, view, FaerSide::Upper).map_err(|e| match e {
        LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
            Error::NotPositiveDefinite { iteration: index, curvature: if index < n { a.get(index, index) } else { f64::NAN } }
        }
        LltError::Generic(g) => Error::InvalidArgument(format!("numeric factorization: {g:?}")),
    })?;
    let mut r = vec![0.0; n];
    x.copy_from_slice(b);
    llt.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
    let mut res = relative_residual(a, b, x, &mut r, bnorm);
    let mut it = 0;
    while res > config.tolerance {
        if it >= config.max_iterations.min(10) {
            return Err(Error::SolverNotConverged { iterations: it, residual: res });
        }
        llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut r, n, 1));
        for i in 0..n {
            x[i] += r[i];
        }
        res = relative_residual(a, b, x, &mut r, bnorm);
        it += 1;
    }
    Ok(SolveStats { iterations: it, residual: res })
}

/// Solves with the method in `config`; `x` holds the initial guess on entry.
pub fn solve_system(a: &CsrMatrix, pattern: Option<&SparsityPattern>, b: &[f64], x: &mut [f64], config: &SolverConfig) -> Result<SolveStats> {
    match config.method {
        SolverMethod::Pcg => pcg(a, b, x, config),
        SolverMethod::Cholesky => {
            let symbolic = match pattern {
                Some(p) => p.symbolic_cholesky()?,
                None => analyze(&a.row_ptr, &a.cols)?,
            };
            cholesky(a, b, x, symbolic, config)
        }
    }
}
