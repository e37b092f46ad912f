//! Small dense linear algebra used by the quadratic-program solver.
//!
//! Problems here are tiny (tens of unknowns), so plain row-major storage and
//! textbook elimination are sufficient.

use std::fmt;
use std::ops::{Index, IndexMut};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    /// Builds a matrix from column vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `½ xᵀ M x`.
    pub fn half_quadratic_form(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.mul_vec(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-14 * max|A|`.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let tiny = 1e-14 * m.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))?;
        if m[(p, k)].abs() <= tiny {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.data.swap(p * n + j, k * n + j);
            }
            x.swap(p, k);
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    Some(x)
}

/// Affine solution set of `A x = b`.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    /// Minimum-norm particular solution.
    pub particular: Vec<f64>,
    /// Orthonormal basis of the null space of `A`, one vector per entry.
    pub basis: Vec<Vec<f64>>,
    pub rank: usize,
}

/// Gauss–Jordan elimination with full pivoting. `rel_tol` is relative to
/// `max|A|`. Returns `Err(residual)` when the system is inconsistent.
pub fn affine_solution(a: &Matrix, b: &[f64], rel_tol: f64) -> Result<AffineSolution, f64> {
    let (rows, cols) = (a.rows(), a.cols());
    assert_eq!(rows, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let tol = rel_tol * m.max_abs().max(1.0);
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut is_pivot = vec![false; cols];

    for t in 0..rows.min(cols) {
        let mut best = (0usize, 0usize, 0.0f64);
        for (i, row) in m.data.chunks_exact(cols).enumerate().skip(t) {
            for (j, x) in row.iter().enumerate() {
                if !is_pivot[j] && x.abs() > best.2 {
                    best = (i, j, x.abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (p, c, _) = best;
        if p != t {
            for j in 0..cols {
                m.data.swap(p * cols + j, t * cols + j);
            }
            rhs.swap(p, t);
        }
        let pivot = m[(t, c)];
        for j in 0..cols {
            m[(t, j)] /= pivot;
        }
        rhs[t] /= pivot;
        let pivot_row = m.data[t * cols..(t + 1) * cols].to_vec();
        for (i, row) in m.data.chunks_exact_mut(cols).enumerate() {
            let f = row[c];
            if i == t || f == 0.0 {
                continue;
            }
            for (x, v) in row.iter_mut().zip(&pivot_row) {
                *x -= f * v;
            }
            rhs[i] -= f * rhs[t];
        }
        is_pivot[c] = true;
        pivot_cols.push(c);
    }

    let rank = pivot_cols.len();
    let scale = 1.0 + norm_inf(b);
    let inconsistency = rhs[rank..].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if inconsistency > 1e3 * rel_tol * scale {
        return Err(inconsistency);
    }

    let mut particular = vec![0.0; cols];
    for (t, &c) in pivot_cols.iter().enumerate() {
        particular[c] = rhs[t];
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for f in (0..cols).filter(|&j| !is_pivot[j]) {
        let mut v = vec![0.0; cols];
        v[f] = 1.0;
        for (t, &c) in pivot_cols.iter().enumerate() {
            v[c] = -m[(t, f)];
        }
        basis.push(v);
    }
    orthonormalize(&mut basis);
    // Project out the null-space component so the particular solution is the
    // minimum-norm one.
    for z in &basis {
        let coef = dot(&particular, z);
        for (p, zi) in particular.iter_mut().zip(z) {
            *p -= coef * zi;
        }
    }
    Ok(AffineSolution {
        particular,
        basis,
        rank,
    })
}

/// Modified Gram–Schmidt, applied twice for stability.
fn orthonormalize(vectors: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..vectors.len() {
            let (done, rest) = vectors.split_at_mut(i);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
            let norm = dot(v, v).sqrt();
            for vi in v.iter_mut() {
                *vi /= norm;
            }
        }
    }
}
