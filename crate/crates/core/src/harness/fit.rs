//! Least-squares extrapolation of a sequence to `n -> infinity`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Singular values below this fraction of the largest one count as zero.
const RANK_TOLERANCE: f64 = 1e-12;
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_FIT_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("n values must be distinct and positive")]
    BadAbscissae,
    #[error("design matrix is rank deficient (condition ratio {0:.3e})")]
    RankDeficient(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `c + c1 / n`
    #[serde(rename = "c+c1/n")]
    Linear,
    /// `c + c1 / n + c2 / n^2`
    #[serde(rename = "c+c1/n+c2/n^2")]
    Quadratic,
}

impl FitModel {
    pub fn terms(self) -> usize {
        match self {
            FitModel::Linear => 2,
            FitModel::Quadratic => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub c_fit: f64,
    /// `[c, c1]` or `[c, c1, c2]`.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Fits `value ~ sum_k coeff_k n^(-k)` by an SVD least-squares solve.
pub fn fit_limit(points: &[(usize, f64)], model: FitModel) -> Result<FitResult, FitError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() || ns[0] == 0 {
        return Err(FitError::BadAbscissae);
    }
    let terms = model.terms();
    let design = DMatrix::from_fn(points.len(), terms, |i, k| (points[i].0 as f64).powi(-(k as i32)));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    let ratio = if max_sv > 0.0 { min_sv / max_sv } else { 0.0 };
    if ratio < RANK_TOLERANCE {
        return Err(FitError::RankDeficient(ratio));
    }
    let coeffs = svd
        .solve(&rhs, RANK_TOLERANCE * max_sv)
        .expect("SVD computed with both factors");
    let residuals = &design * &coeffs - &rhs;
    let residual = (residuals.norm_squared() / points.len() as f64).sqrt();
    Ok(FitResult {
        model,
        c_fit: coeffs[0],
        coefficients: coeffs.iter().copied().collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sequence() {
        let pts: Vec<(usize, f64)> = (4..=12).map(|n| (n, 1.0)).collect();
        for model in [FitModel::Linear, FitModel::Quadratic] {
            let f = fit_limit(&pts, model).unwrap();
            assert!((f.c_fit - 1.0).abs() < 1e-14);
            assert!(f.residual < 1e-14);
        }
    }

    #[test]
    fn recovers_linear_model() {
        let pts: Vec<(usize, f64)> = (4..=22).map(|n| (n, 2.0 + 3.0 / n as f64)).collect();
        let f = fit_limit(&pts, FitModel::Linear).unwrap();
        assert!((f.c_fit - 2.0).abs() < 1e-10);
        assert!((f.coefficients[1] - 3.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn nested_model_fits_curvature_better() {
        let pts: Vec<(usize, f64)> = (4..=22)
            .map(|n| (n, 1.0 + 0.5 / n as f64 - 2.0 / (n * n) as f64))
            .collect();
        let lin = fit_limit(&pts, FitModel::Linear).unwrap();
        let quad = fit_limit(&pts, FitModel::Quadratic).unwrap();
        assert!(quad.residual < lin.residual);
        assert!((quad.c_fit - 1.0).abs() < 1e-10);
        assert!((quad.coefficients[2] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_limit(&[(1, 1.0); 3], FitModel::Linear), Err(FitError::TooFewPoints(3)));
        assert_eq!(
            fit_limit(&[(4, 1.0), (4, 1.0), (5, 1.0), (6, 1.0)], FitModel::Linear),
            Err(FitError::BadAbscissae)
        );
        assert_eq!(
            fit_limit(&[(0, 1.0), (4, 1.0), (5, 1.0), (6, 1.0)], FitModel::Linear),
            Err(FitError::BadAbscissae)
        );
    }

    #[test]
    fn rank_deficiency_is_detected() {
        // Four huge n make 1/n and 1/n^2 numerically indistinguishable from 0.
        let pts: Vec<(usize, f64)> = (0..4).map(|k| (usize::MAX - k, 1.0)).collect();
        assert!(matches!(
            fit_limit(&pts, FitModel::Quadratic),
            Err(FitError::RankDeficient(_))
        ));
    }

    proptest! {
        #[test]
        fn exact_in_own_model_class(c in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, lo in 2usize..10) {
            let pts: Vec<(usize, f64)> = (lo..lo + 12)
                .map(|n| (n, c + c1 / n as f64 + c2 / (n * n) as f64))
                .collect();
            let f = fit_limit(&pts, FitModel::Quadratic).unwrap();
            prop_assert!((f.c_fit - c).abs() < 1e-10);
            prop_assert!((f.coefficients[1] - c1).abs() < 1e-8);
        }
    }
}
