//! Multivariate normal densities with a cached Cholesky factor.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_substitute, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    covariance: Matrix,
    chol: Matrix,
    log_det: f64,
}

impl Gaussian {
    /// Fails unless `covariance` is symmetric positive definite.
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let d = mean.len();
        if covariance.rows() != d || covariance.cols() != d {
            return Err(Error::Shape(format!(
                "covariance is {}x{} for a mean of length {d}",
                covariance.rows(),
                covariance.cols()
            )));
        }
        if !covariance.is_finite() || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gaussian parameters".into()));
        }
        let chol = cholesky(&covariance)
            .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
        let log_det = 2.0 * (0..d).map(|i| chol[(i, i)].ln()).sum::<f64>();
        Ok(Gaussian {
            mean,
            covariance,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let y = forward_substitute(&self.chol, &diff);
        let maha: f64 = y.iter().map(|v| v * v).sum();
        -0.5 * (self.dim() as f64 * (2.0 * PI).ln() + self.log_det + maha)
    }
}

/// Weighted mean and covariance (`Σ w (x−μ)(x−μ)ᵀ / Σ w`) of `points`.
pub fn weighted_moments(points: &[&[f64]], weights: &[f64]) -> (Vec<f64>, Matrix) {
    let d = points.first().map_or(0, |p| p.len());
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (p, &w) in points.iter().zip(weights) {
        for j in 0..d {
            mean[j] += w * p[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = Matrix::zeros(d, d);
    for (p, &w) in points.iter().zip(weights) {
        let diff: Vec<f64> = p.iter().zip(&mean).map(|(a, b)| w * (a - b)).collect();
        let plain: Vec<f64> = p.iter().zip(&mean).map(|(a, b)| a - b).collect();
        cov.outer_acc(&diff, &plain);
    }
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= total);
    (mean, cov)
}

pub fn add_ridge(cov: &mut Matrix, ridge: f64) {
    for i in 0..cov.rows() {
        cov[(i, i)] += ridge;
    }
}

/// Keeps the diagonal of `cov` only.
pub fn diagonal_of(cov: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(cov.rows(), cov.cols());
    for i in 0..cov.rows() {
        out[(i, i)] = cov[(i, i)];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_density() {
        let g = Gaussian::new(vec![0.0], Matrix::identity(1)).unwrap();
        assert!((g.log_pdf(&[0.0]) + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((g.log_pdf(&[1.0]) - (g.log_pdf(&[0.0]) - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let c = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Gaussian::new(vec![0.0, 0.0], c).is_err());
    }

    #[test]
    fn moments_of_four_points() {
        let pts: Vec<&[f64]> = vec![&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0], &[2.0, 2.0]];
        let (m, c) = weighted_moments(&pts, &[1.0; 4]);
        assert_eq!(m, vec![1.0, 1.0]);
        assert_eq!(c.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }
}
