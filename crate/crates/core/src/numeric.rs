//! Small shared wrappers around nalgebra decompositions.

use nalgebra::{DMatrix, Dyn, SVD};

use crate::error::{Error, Result};

/// Relative cutoff under which a singular value or eigenvalue counts as zero.
pub(crate) const RANK_REL_TOL: f64 = 1e-10;

/// SVD with singular values sorted in descending order.
pub(crate) fn try_svd(
    m: &DMatrix<f64>,
    compute_u: bool,
    compute_v: bool,
) -> Result<SVD<f64, Dyn, Dyn>> {
    SVD::try_new(m.clone(), compute_u, compute_v, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted by descending
/// eigenvalue. Eigenvectors are the columns of the returned matrix.
pub(crate) fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::NumericalFailure("symmetric eigendecomposition did not converge".into())
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Count of singular values above the relative rank cutoff.
pub(crate) fn numerical_rank(singular_values: &[f64]) -> usize {
    match singular_values.first() {
        None => 0,
        Some(&max) if max <= 0.0 => 0,
        Some(&max) => singular_values
            .iter()
            .filter(|&&s| s > max * RANK_REL_TOL)
            .count(),
    }
}
