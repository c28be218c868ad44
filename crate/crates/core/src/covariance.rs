//! Inter-temporal correlation matrix for the Gaussian copula and its
//! Cholesky factor.
//!
//! The lag structure starts at `θ` for adjacent intervals and decays linearly
//! by `ω` per additional lag, floored at zero. For most realistic parameters
//! that matrix is not positive definite (θ = 0.92, ω = 0.42 already fails at
//! three intervals), so it is repaired before factorisation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest eigenvalue floor used by the repair, whatever the configured jitter.
pub const MIN_EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaParams {
    /// Correlation between adjacent intervals.
    pub theta: f64,
    /// Linear decay of the correlation per additional lag.
    pub omega: f64,
    /// Eigenvalue floor of the repaired matrix.
    pub jitter: f64,
}

impl Default for CopulaParams {
    fn default() -> Self {
        Self {
            theta: 0.92,
            omega: 0.42,
            jitter: 1e-10,
        }
    }
}

impl CopulaParams {
    pub fn new(theta: f64, omega: f64) -> Result<Self> {
        let p = Self {
            theta,
            omega,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!("theta {} outside [0, 1]", self.theta)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!("omega {} must be a finite value >= 0", self.omega)));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid(format!("jitter {} must be a finite value >= 0", self.jitter)));
        }
        Ok(())
    }

    /// Rough parameters from lag-1 and lag-2 autocorrelations: `θ = ρ₁`,
    /// `ω = ρ₁ − ρ₂`, both clamped into their valid ranges.
    pub fn from_lag_correlations(lag1: f64, lag2: f64) -> Self {
        let theta = lag1.clamp(0.0, 1.0);
        Self {
            theta,
            omega: (theta - lag2).max(0.0),
            ..Self::default()
        }
    }

    fn floor(&self) -> f64 {
        self.jitter.max(MIN_EIGENVALUE_FLOOR)
    }
}

/// How a non positive-definite lag matrix is turned into a valid one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceRepair {
    /// Move along the straight line towards the AR(1) matrix `θ^|i−j|` just far
    /// enough to clear the eigenvalue floor. Diagonal and lag-1 entries are
    /// shared by both ends of the line, so they are kept exactly.
    #[default]
    ShrinkToAr1,
    /// Clip eigenvalues at the floor, rebuild, then rescale to unit diagonal.
    EigenClip,
}

/// Lag matrix before any repair: unit diagonal, `max(θ − (L−1)ω, 0)` at lag `L ≥ 1`.
pub fn lag_correlation_matrix(horizon: usize, params: &CopulaParams) -> DMatrix<f64> {
    DMatrix::from_fn(horizon, horizon, |i, j| {
        let lag = i.abs_diff(j);
        if lag == 0 {
            1.0
        } else {
            (params.theta - (lag - 1) as f64 * params.omega).max(0.0)
        }
    })
}

/// Positive-definite correlation matrix for `horizon` intervals using the
/// default repair.
pub fn build_covariance(horizon: usize, params: &CopulaParams) -> Result<DMatrix<f64>> {
    build_covariance_with(horizon, params, CovarianceRepair::default())
}

pub fn build_covariance_with(
    horizon: usize,
    params: &CopulaParams,
    repair: CovarianceRepair,
) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(Error::invalid("correlation matrix needs at least one interval"));
    }
    params.validate()?;
    let raw = lag_correlation_matrix(horizon, params);
    let floor = params.floor();
    if clears_floor(&raw, floor) {
        return Ok(raw);
    }
    log::debug!("lag matrix for T={horizon} is not positive definite, repairing with {repair:?}");
    match repair {
        CovarianceRepair::ShrinkToAr1 => {
            let target = DMatrix::from_fn(horizon, horizon, |i, j| {
                params.theta.powi(i.abs_diff(j) as i32)
            });
            if !clears_floor(&target, floor) {
                log::warn!(
                    "AR(1) target with theta={} is singular, falling back to eigenvalue clipping",
                    params.theta
                );
                return Ok(eigen_clip(&raw, floor));
            }
            Ok(shrink_towards(&raw, &target, floor))
        }
        CovarianceRepair::EigenClip => Ok(eigen_clip(&raw, floor)),
    }
}

fn blend(raw: &DMatrix<f64>, target: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    raw.zip_map(target, |a, b| if a == b { a } else { a + alpha * (b - a) })
}

fn shrink_towards(raw: &DMatrix<f64>, target: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    // smallest eigenvalue is concave along the segment, so the feasible set is [alpha*, 1]
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if clears_floor(&blend(raw, target, mid), floor) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    blend(raw, target, hi)
}

fn eigen_clip(raw: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(raw.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let n = rebuilt.nrows();
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let a = rebuilt[(i, j)] / (scale[i] * scale[j]);
            let b = rebuilt[(j, i)] / (scale[j] * scale[i]);
            0.5 * (a + b)
        }
    })
}

fn clears_floor(m: &DMatrix<f64>, floor: f64) -> bool {
    let shifted = m - DMatrix::identity(m.nrows(), m.ncols()) * floor;
    cholesky(&shifted).is_ok()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Lower-triangular `C` with `C Cᵀ = m`.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::invalid(format!("cholesky of a non-square {}x{} matrix", n, m.ncols())));
    }
    let mut c = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= c[(j, k)] * c[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let djj = d.sqrt();
        c[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / djj;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn raw_matrix_three_intervals() {
        let raw = lag_correlation_matrix(3, &CopulaParams::default());
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.92, 0.5, 0.92, 1.0, 0.92, 0.5, 0.92, 1.0]);
        assert!(max_abs_diff(&raw, &expected) < 1e-15);
    }

    #[test]
    fn lags_are_floored_at_zero() {
        let raw = lag_correlation_matrix(24, &CopulaParams::default());
        assert!(raw.iter().all(|&x| x >= 0.0));
        assert_eq!(raw[(0, 5)], 0.0);
    }

    #[test]
    fn single_interval_is_one() {
        let m = build_covariance(1, &CopulaParams::default()).unwrap();
        assert_eq!(m, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn repaired_matrix_is_positive_definite() {
        for repair in [CovarianceRepair::ShrinkToAr1, CovarianceRepair::EigenClip] {
            let m = build_covariance_with(24, &CopulaParams::default(), repair).unwrap();
            if repair == CovarianceRepair::ShrinkToAr1 {
                // eigenvalue clipping leaves small negative far-lag entries
                assert!(m.iter().all(|&x| x >= 0.0));
            }
            assert!(min_eigenvalue(&m) > 0.0, "{repair:?}");
            for i in 0..24 {
                assert!((m[(i, i)] - 1.0).abs() < 1e-9);
            }
            assert!(max_abs_diff(&m, &m.transpose()) == 0.0);
        }
    }

    #[test]
    fn shrink_keeps_lag_one_exactly() {
        let p = CopulaParams::default();
        let m = build_covariance(24, &p).unwrap();
        for i in 0..23 {
            assert_eq!(m[(i, i + 1)], p.theta);
            assert_eq!(m[(i, i)], 1.0);
        }
    }

    #[test]
    fn positive_definite_input_is_untouched() {
        let p = CopulaParams::new(0.5, 0.1).unwrap();
        let raw = lag_correlation_matrix(10, &p);
        assert!(min_eigenvalue(&raw) > 0.0);
        assert_eq!(build_covariance(10, &p).unwrap(), raw);
        let two = build_covariance(2, &CopulaParams::default()).unwrap();
        assert_eq!(two, lag_correlation_matrix(2, &CopulaParams::default()));
    }

    #[test]
    fn theta_one_falls_back_to_clipping() {
        let p = CopulaParams::new(1.0, 0.2).unwrap();
        let m = build_covariance(6, &p).unwrap();
        assert!(cholesky(&m).is_ok());
    }

    #[test]
    fn cholesky_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_eq!(cholesky(&id).unwrap(), id);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let c = cholesky(&m).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]);
        assert!(max_abs_diff(&c, &expected) < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs() {
        for t in [3, 24, 96] {
            let m = build_covariance(t, &CopulaParams::default()).unwrap();
            let c = cholesky(&m).unwrap();
            assert!(max_abs_diff(&(&c * c.transpose()), &m) < 1e-9);
            for i in 0..t {
                assert!(c[(i, i)] > 0.0);
                for j in (i + 1)..t {
                    assert_eq!(c[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let raw = lag_correlation_matrix(3, &CopulaParams::default());
        assert!(matches!(cholesky(&raw), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn params_validation() {
        assert!(CopulaParams::new(1.2, 0.1).is_err());
        assert!(CopulaParams::new(0.5, -0.1).is_err());
        let p = CopulaParams::from_lag_correlations(0.9, 0.6);
        assert!((p.omega - 0.3).abs() < 1e-12);
    }
}
