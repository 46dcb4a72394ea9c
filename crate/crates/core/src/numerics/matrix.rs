use serde::Serialize;

use crate::error::{Error, Result};

/// Symmetric `M x M` matrix. Stored as its upper triangle, so symmetry holds
/// by construction. Determinant and definiteness are computed once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    upper: Vec<f64>,
    det: f64,
    positive_definite: bool,
}

impl SymMatrix {
    /// Builds from an entry function; only `i <= j` is queried.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        Self::from_upper(dim, upper)
    }

    /// Builds from a dense row-major square matrix, symmetrising `(A + Aᵀ)/2`.
    pub fn from_dense(dim: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                dense.len()
            )));
        }
        Ok(Self::from_fn(dim, |i, j| 0.5 * (dense[i * dim + j] + dense[j * dim + i])))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    fn from_upper(dim: usize, upper: Vec<f64>) -> Self {
        let mut m = Self {
            dim,
            upper,
            det: f64::NAN,
            positive_definite: false,
        };
        let dense = m.to_dense();
        m.det = determinant(dim, dense.clone());
        m.positive_definite = cholesky(dim, &dense).is_some();
        m
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive_definite
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_upper(self.dim, self.upper.iter().map(|v| v * c).collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Max-norm of the entries.
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖self − other‖∞` over entries, divided by `‖other‖∞`.
    pub fn relative_deviation(&self, other: &SymMatrix) -> f64 {
        let diff = self
            .upper
            .iter()
            .zip(&other.upper)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        diff / other.max_abs()
    }

    /// Least-squares scale `c` minimising `‖self − c·other‖_F`.
    pub fn projection_scale(&self, other: &SymMatrix) -> f64 {
        let n = self.dim;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                num += self.get(i, j) * other.get(i, j);
                den += other.get(i, j) * other.get(i, j);
            }
        }
        num / den
    }

    /// `Jᵀ · self · J` for a dense row-major `M x M` matrix `J`.
    pub fn congruence(&self, j: &[f64]) -> Self {
        let n = self.dim;
        Self::from_fn(n, |a, b| {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    s += j[k * n + a] * self.get(k, l) * j[l * n + b];
                }
            }
            s
        })
    }
}

/// Determinant by LU with partial pivoting.
pub fn determinant(n: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
        }
    }
    det
}

/// Inverse of a dense row-major matrix by Gauss–Jordan elimination.
pub fn inverse(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs()))
            .unwrap_or(col);
        if m[pivot * n + col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("matrix is singular".into()));
        }
        for k in 0..n {
            m.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = m[row * n + col];
                for k in 0..n {
                    m[row * n + k] -= factor * m[col * n + k];
                    inv[row * n + k] -= factor * inv[col * n + k];
                }
            }
        }
    }
    Ok(inv)
}

fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_by_construction() {
        let m = SymMatrix::from_dense(2, &[2.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert_eq!(m.get(0, 1), 2.0);
        assert!((m.determinant() - 4.0).abs() < 1e-12);
        assert!(m.is_positive_definite());
    }

    #[test]
    fn indefinite_matrix_is_flagged() {
        let m = SymMatrix::diagonal(&[1.0, -2.0]);
        assert!(!m.is_positive_definite());
        assert_eq!(m.determinant(), -2.0);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [4.0, 1.0, 0.5, 2.0, 3.0, 1.0, 0.0, 1.0, 5.0];
        let inv = inverse(3, &a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn congruence_with_diagonal_jacobian() {
        let m = SymMatrix::diagonal(&[4.0, 1.0]);
        let c = m.congruence(&[0.5, 0.0, 0.0, 2.0]);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 1), 4.0);
    }
}
