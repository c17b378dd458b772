use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};

/// Largest dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 8;

/// Dense square real matrix, row-major.
///
/// Vectors are rows acting on the right: a point `γ` is mapped to `γA`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

/// Wire format: `{"n": 2, "rows": [[1, 0], [0, 1]]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for Matrix {
    type Error = XsectError;

    fn try_from(value: MatrixJson) -> Result<Self> {
        let m = Matrix::from_rows(&value.rows)?;
        if m.n != value.n {
            return Err(XsectError::InvalidInput(format!(
                "declared n = {} but {} rows given",
                value.n, m.n
            )));
        }
        Ok(m)
    }
}

impl From<Matrix> for MatrixJson {
    fn from(m: Matrix) -> Self {
        MatrixJson { n: m.n, rows: m.rows() }
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn scalar(v: f64) -> Self {
        Self::diag(&[v])
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return Err(XsectError::InvalidInput(format!(
                "matrix dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(XsectError::InvalidInput("matrix is not square".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(XsectError::InvalidInput("non-finite matrix entry".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    /// Panicking constructor for literals in tests and examples.
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        Self::from_rows(rows).expect("invalid matrix literal")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let m = self.to_nalgebra();
        m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Row vector times matrix: `γA`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    /// LU factorisation with partial pivoting.
    fn lu(&self) -> (Vec<f64>, Vec<usize>, f64) {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        (a, perm, sign)
    }

    pub fn det(&self) -> f64 {
        let (lu, _, sign) = self.lu();
        (0..self.n).map(|i| lu[i * self.n + i]).product::<f64>() * sign
    }

    /// Inverse; `Singular` when `|det| <= tol * ‖A‖^n`.
    pub fn inverse_tol(&self, tol: f64) -> Result<Matrix> {
        let n = self.n;
        let det = self.det();
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE).powi(n as i32);
        if !det.is_finite() || det.abs() <= tol * scale {
            return Err(XsectError::Singular { det });
        }
        let (lu, perm, _) = self.lu();
        let mut inv = Matrix::zeros(n);
        for col in 0..n {
            // Solve L U x = P e_col.
            let mut x: Vec<f64> = (0..n).map(|i| if perm[i] == col { 1.0 } else { 0.0 }).collect();
            for i in 0..n {
                for j in 0..i {
                    x[i] -= lu[i * n + j] * x[j];
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    x[i] -= lu[i * n + j] * x[j];
                }
                x[i] /= lu[i * n + i];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.inverse_tol(1e-14)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Matrix {
        let n = m.nrows();
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Block-diagonal embedding helper: copies `block` at `(offset, offset)`.
    pub fn set_block(&mut self, offset: usize, block: &Matrix) {
        for i in 0..block.n {
            for j in 0..block.n {
                self[(offset + i, offset + j)] = block[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, 1)`.
pub fn rel_distance(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a = Matrix::new(&[[4.0, 7.0], [2.0, 6.0]]);
        assert!((a.det() - 10.0).abs() < 1e-12);
        let inv = a.inverse().unwrap();
        assert!(rel_distance(&(&a * &inv), &Matrix::identity(2)) < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::new(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(a.inverse(), Err(XsectError::Singular { .. })));
    }

    #[test]
    fn row_action() {
        let a = Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(a.apply(&[2.0, 6.0]), vec![2.0, 8.0]);
    }

    #[test]
    fn json_shape() {
        let a = Matrix::new(&[[1.0, 2.0], [3.0, 4.0]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[[1.0,2.0],[3.0,4.0]]}"#);
        let back: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Matrix>(r#"{"n":3,"rows":[[1]]}"#).is_err());
    }
}
