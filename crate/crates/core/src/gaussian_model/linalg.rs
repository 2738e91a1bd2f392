use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest admissible eigenvalue relative to the largest.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

fn eigen_checked(sigma: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::DimensionMismatch {
            expected: sigma.nrows(),
            got: sigma.ncols(),
        });
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let threshold = DEGENERACY_THRESHOLD * max.abs().max(f64::MIN_POSITIVE);
    if !(min >= threshold) || max <= 0.0 {
        return Err(Error::DegenerateCovariance { min_eig: min, threshold });
    }
    Ok(eig)
}

fn spectral_fn(sigma: &DMatrix<f64>, g: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = eigen_checked(sigma)?;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(g));
    let s = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// Symmetric square root of an SPD matrix.
pub fn matrix_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_fn(sigma, f64::sqrt)
}

/// Symmetric inverse square root of an SPD matrix.
pub fn inverse_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_fn(sigma, |l| 1.0 / l.sqrt())
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn min_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    let sym = (sigma + sigma.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}
