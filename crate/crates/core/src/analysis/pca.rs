//! Principal components via cyclic Jacobi diagonalisation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues in
/// descending order and the matching unit eigenvectors as columns.
///
/// Sweeps stop once the off-diagonal Frobenius norm is at most `tol` times
/// the Frobenius norm of the input.
pub fn jacobi_eigen(a: &DMatrix<f64>, tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::EmptyMatrix(format!("eigen input is {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Value("eigen input has non-finite entries".into()));
    }
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let bound = tol * m.norm();
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= bound {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::Convergence { sweeps, off_diagonal: off });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        // largest-magnitude entry made positive
        let lead = col.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            col = -col;
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

/// Fitted projection onto the top principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// One unit vector per component.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues of the kept components.
    pub variances: Vec<f64>,
    /// Share of total variance per kept component.
    pub explained_ratio: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        if n < 2 || d == 0 {
            return Err(Error::EmptyMatrix(format!("PCA needs at least 2 rows and 1 column, got {n}x{d}")));
        }
        if x.iter().any(|r| r.len() != d) {
            return Err(Error::Value("ragged PCA input".into()));
        }
        if k == 0 || k > d {
            return Err(Error::Value(format!("k must lie in 1..={d}, got {k}")));
        }
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let centred = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
        let cov = centred.transpose() * &centred / (n as f64 - 1.0);
        let (values, vectors) = jacobi_eigen(&cov, EIGEN_TOL, EIGEN_MAX_SWEEPS)?;
        let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
        let variances: Vec<f64> = values[..k].iter().map(|v| v.max(0.0)).collect();
        let explained_ratio = variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
        let components = (0..k).map(|c| vectors.column(c).iter().copied().collect()).collect();
        Ok(Self { mean, components, variances, explained_ratio })
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.project(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_covariance() {
        let x: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![-2.0, 1.0], vec![2.0, -1.0], vec![-2.0, -1.0]];
        let p = Pca::fit(&x, 2).unwrap();
        assert!((p.components[0][0].abs() - 1.0).abs() < 1e-12);
        assert!((p.explained_ratio[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (vals, _) = jacobi_eigen(&a, EIGEN_TOL, EIGEN_MAX_SWEEPS).unwrap();
        let tr: f64 = 5.0;
        let det = 5.0;
        let disc = ((tr * tr) / 4.0 - det).sqrt();
        assert!((vals[0] - (tr / 2.0 + disc)).abs() < 1e-12);
        assert!((vals[1] - (tr / 2.0 - disc)).abs() < 1e-12);
    }

    #[test]
    fn sweep_limit_reports_convergence() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0]);
        assert!(matches!(jacobi_eigen(&a, 0.0, 1), Err(Error::Convergence { sweeps: 1, .. })));
    }

    #[test]
    fn bad_k() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(Pca::fit(&x, 2).is_err());
        assert!(Pca::fit(&x, 0).is_err());
    }
}
