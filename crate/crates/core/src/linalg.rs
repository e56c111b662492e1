//! Dense symmetric eigendecomposition (nalgebra) and a thin SVD built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative residual `|Mv - lambda v| / |M|` accepted as converged.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

const MAX_ITER: usize = 10_000;

/// Eigenpairs of a symmetric matrix, sorted by eigenvalue descending.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Row-major `n x n` buffer to an nalgebra matrix.
pub(crate) fn to_dmatrix(data: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Full eigendecomposition of the symmetric `n x n` row-major matrix `m`.
///
/// Every returned pair is checked against [`EIGEN_RESIDUAL_TOL`].
pub fn symmetric_eigen(m: &[f64], n: usize) -> Result<EigenPairs> {
    if m.len() != n * n {
        return Err(Error::dim("symmetric matrix", n * n, m.len()));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: vec![],
        });
    }
    let mut mat = to_dmatrix(m, n, n);
    // Symmetrize away rounding asymmetry from the caller's products.
    mat = (&mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(mat.clone(), f64::EPSILON, MAX_ITER).ok_or(
        Error::NotConverged {
            residual: f64::INFINITY,
            tolerance: EIGEN_RESIDUAL_TOL,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        let lambda = eig.eigenvalues[i];
        let v = eig.eigenvectors.column(i);
        let residual = (&mat * v - v * lambda).norm();
        if scale > 0.0 && residual > EIGEN_RESIDUAL_TOL * scale {
            return Err(Error::NotConverged {
                residual: residual / scale,
                tolerance: EIGEN_RESIDUAL_TOL,
            });
        }
        values.push(lambda);
        vectors.push(v.iter().copied().collect());
    }
    Ok(EigenPairs { values, vectors })
}

/// Thin SVD of a row-major `rows x cols` matrix.
///
/// Returns singular values (descending) and the matching right singular
/// vectors, i.e. unit directions in the `cols`-dimensional column space.
/// Computed from the eigendecomposition of the smaller Gram matrix, with
/// each singular value re-measured as `|X v|`. In the wide case pairs with
/// an exactly zero singular value are omitted.
pub fn svd_right(data: &[f64], rows: usize, cols: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if data.len() != rows * cols {
        return Err(Error::dim("svd input", rows * cols, data.len()));
    }
    let x = to_dmatrix(data, rows, cols);
    let mut pairs: Vec<(f64, Vec<f64>)> = if cols <= rows {
        let gram = x.transpose() * &x;
        let eig = symmetric_eigen(gram.as_slice(), cols)?;
        eig.vectors
            .into_iter()
            .map(|v| {
                let sigma = (&x * DVector::from_column_slice(&v)).norm();
                (sigma, v)
            })
            .collect()
    } else {
        let gram = &x * x.transpose();
        let eig = symmetric_eigen(gram.as_slice(), rows)?;
        eig.vectors
            .into_iter()
            .filter_map(|u| {
                let w = x.transpose() * DVector::from_column_slice(&u);
                let sigma = w.norm();
                (sigma > 0.0).then(|| (sigma, (w / sigma).iter().copied().collect()))
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs.into_iter().unzip())
}

/// Row-major product `a (n x k) * b (k x m)`.
pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let prod = to_dmatrix(a, n, k) * to_dmatrix(b, k, m);
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        out.extend(prod.row(i).iter());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = [2.0, 1.0, 1.0, 2.0];
        let e = symmetric_eigen(&m, 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let v = &e.vectors[0];
        assert!((v[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn svd_of_identity() {
        let (s, v) = svd_right(&[1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn svd_of_rank_one_outer_products() {
        for (rows, cols) in [(29, 2), (4, 10), (5, 11), (20, 8)] {
            let u: Vec<f64> = (0..cols).map(|j| (j as f64 * 0.7).sin() + 0.3).collect();
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let data: Vec<f64> = (0..rows * cols)
                .map(|i| (i / cols + 1) as f64 * u[i % cols] / nu)
                .collect();
            let truth = (1..=rows).map(|i| (i * i) as f64).sum::<f64>().sqrt();
            let (s, v) = svd_right(&data, rows, cols).unwrap();
            assert!((s[0] - truth).abs() < 1e-10 * truth, "{rows}x{cols}: {}", s[0]);
            let align: f64 = v[0].iter().zip(&u).map(|(a, b)| a * b / nu).sum();
            assert!((align.abs() - 1.0).abs() < 1e-10);
            assert!(s[1..].iter().all(|&x| x < 1e-12 * truth));
        }
    }

    #[test]
    fn matmul_small() {
        let c = matmul(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0], 2, 2, 2);
        assert_eq!(c, vec![19.0, 22.0, 43.0, 50.0]);
    }
}
