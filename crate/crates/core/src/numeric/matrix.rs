//! Minimal dense symmetric/square matrix support: LU decomposition with
//! partial pivoting, inverse, log-determinant and principal submatrices.
//! Structures here are at most d x d with d around a dozen, so a plain
//! `Vec<f64>` row-major store is enough.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Principal submatrix on the given (distinct) index list, in order.
    pub fn submatrix(&self, idx: &[usize]) -> Matrix {
        let k = idx.len();
        let mut m = Matrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    fn lu(&self) -> Result<(Vec<f64>, Vec<usize>, f64)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut max = a[col * n + col].abs();
            for row in (col + 1)..n {
                let v = a[row * n + col].abs();
                if v > max {
                    max = v;
                    pivot = row;
                }
            }
            if max < 1e-300 {
                return Err(Error::NonFinite {
                    context: "singular matrix in LU decomposition".into(),
                });
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                perm.swap(col, pivot);
                sign = -sign;
            }
            let diag = a[col * n + col];
            for row in (col + 1)..n {
                let factor = a[row * n + col] / diag;
                a[row * n + col] = factor;
                for j in (col + 1)..n {
                    a[row * n + j] -= factor * a[col * n + j];
                }
            }
        }
        Ok((a, perm, sign))
    }

    /// Natural log of the determinant; the matrix must be positive definite
    /// in the intended uses (correlation matrices), so a negative
    /// determinant is reported as an error.
    pub fn log_det(&self) -> Result<f64> {
        let (lu, _, sign) = self.lu()?;
        let n = self.n;
        let mut log = 0.0;
        let mut s = sign;
        for i in 0..n {
            let d = lu[i * n + i];
            if d < 0.0 {
                s = -s;
            }
            log += d.abs().ln();
        }
        if s < 0.0 {
            return Err(Error::NonFinite {
                context: "negative determinant for a matrix assumed positive definite".into(),
            });
        }
        Ok(log)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rhs.len(),
            });
        }
        let (lu, perm, _) = self.lu()?;
        Ok(lu_solve(&lu, &perm, self.n, rhs))
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let (lu, perm, _) = self.lu()?;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e.fill(0.0);
            e[col] = 1.0;
            let x = lu_solve(&lu, &perm, n, &e);
            for row in 0..n {
                inv[(row, col)] = x[row];
            }
        }
        Ok(inv)
    }

    /// Cholesky factor L with A = L L'. Errors when the matrix is not
    /// positive definite.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::NonFinite {
                            context: "matrix is not positive definite".into(),
                        });
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Quadratic form `x' A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self[(i, j)] * x[j];
            }
            total += x[i] * row;
        }
        total
    }
}

fn lu_solve(lu: &[f64], perm: &[usize], n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = perm.iter().map(|&p| rhs[p]).collect();
    for i in 1..n {
        for j in 0..i {
            x[i] -= lu[i * n + j] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            x[i] -= lu[i * n + j] * x[j];
        }
        x[i] /= lu[i * n + i];
    }
    x
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}
