//! Spectrum of the Markov integral operator `Tu(x) = ∫ u(y) rho(x, y) dy`.
//!
//! The operator is discretized by the Nyström method on the bridge grid with
//! uniform midpoint weights, so the operator matrix is `(1/m) K` and stays
//! symmetric. Working with the centered kernel `rho - 1` removes the unit
//! eigenvalue: the marginal constraint makes the constant function an exact
//! null vector, and the remaining eigenpairs are the non-unit spectrum of `T`.

pub mod jacobi;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::BridgeSolution;
use crate::numeric::{neumaier_sum, Matrix, NeumaierSum};
use jacobi::{JacobiError, SymmetricEigen};

/// Eigenvalues below this magnitude are numerically indistinguishable from
/// zero and are dropped.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Eigenvalues this close to ±1 make `det(I - T^2)` ill-conditioned.
pub const GAP_GUARD: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("bridge marginals violated: max centered row mean {row_mean:.3e} exceeds {limit:.3e}")]
    UnconvergedBridge { row_mean: f64, limit: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(#[from] JacobiError),
    #[error("spectral gap violated: |lambda| = {0} is within {GAP_GUARD:e} of 1")]
    GapViolation(f64),
    #[error("eigenfunction index {index} out of range ({available} available)")]
    IndexOutOfRange { index: usize, available: usize },
    #[error("eigenvalue {value:.3e} at index {index} is below the noise floor; Nyström extension is ill-conditioned")]
    IllConditionedExtension { index: usize, value: f64 },
    #[error("spectrum grid ({spectrum}) does not match bridge grid ({bridge})")]
    GridMismatch { spectrum: usize, bridge: usize },
    #[error("spectrum file {path}: {message}")]
    File { path: PathBuf, message: String },
}

/// Centered kernel `rho(x_i, x_j) - 1` on the bridge grid.
///
/// Fails when some row mean exceeds `10 * tol` of the bridge, i.e. when the
/// input is not a converged bridge.
pub fn center_kernel(sol: &BridgeSolution) -> Result<Matrix, SpectralError> {
    let mut k = sol.grid_density();
    k.data_mut().iter_mut().for_each(|v| *v -= 1.0);
    let m = sol.m() as f64;
    let row_mean = max_row_mean(&k) / m;
    let limit = 10.0 * sol.tol();
    if row_mean > limit {
        return Err(SpectralError::UnconvergedBridge { row_mean, limit });
    }
    Ok(k)
}

/// `max_i |sum_j k_ij|`
pub fn max_row_mean(k: &Matrix) -> f64 {
    (0..k.rows())
        .map(|i| neumaier_sum(k.row(i).iter().copied()).abs())
        .fold(0.0, f64::max)
}

/// Non-unit spectrum of the bridge operator on an `m`-point grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub m: usize,
    /// Sorted by decreasing magnitude; the constant mode and eigenvalues
    /// below [`NOISE_FLOOR`] are excluded.
    pub eigenvalues: Vec<f64>,
    /// Row `k` holds `phi_k` at the grid nodes, normalized so that
    /// `(1/m) sum phi_k^2 = 1`.
    pub eigenfunctions: Matrix,
    pub sigma2: f64,
    /// `None` when the gap assumption fails numerically.
    pub fredholm_det: Option<f64>,
    pub conjectured_c: Option<f64>,
    pub lipschitz_estimates: Vec<f64>,
    /// Top eigenvalue of the uncentered operator `(1/m) rho`.
    pub unit_eigenvalue_check: f64,
    /// `max_i |phi(x_i) - 1|` for the normalized top eigenvector of `(1/m) rho`.
    pub unit_constancy_deviation: f64,
    /// Eigenvalue of the centered operator along the constant direction,
    /// when it was resolved above the noise floor and removed.
    pub constant_mode_eigenvalue: Option<f64>,
}

/// Gap summary with the assumption flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub sigma2: f64,
    pub assumption_holds: bool,
    pub note: Option<String>,
}

/// Eigendecomposition of the centered kernel matrix with Nyström scaling
/// `1/m`.
pub fn eigendecompose(centered: &Matrix, m: usize) -> Result<Spectrum, SpectralError> {
    let mut op = centered.clone();
    op.scale(1.0 / m as f64);
    let eig = jacobi::eigh(&op)?.sorted_by_magnitude();
    let (unit, deviation) = unit_eigenpair(centered, m);
    Ok(assemble(eig, m, unit, deviation))
}

/// `center_kernel` followed by `eigendecompose`.
pub fn spectrum_of(sol: &BridgeSolution) -> Result<Spectrum, SpectralError> {
    eigendecompose(&center_kernel(sol)?, sol.m())
}

fn assemble(eig: SymmetricEigen, m: usize, unit: f64, unit_dev: f64) -> Spectrum {
    let scale = (m as f64).sqrt();
    let mut eigenvalues = Vec::new();
    let mut rows = Vec::new();
    let mut constant_mode = None;
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() < NOISE_FLOOR {
            continue;
        }
        let phi: Vec<f64> = eig.vectors.row(k).iter().map(|v| v * scale).collect();
        let overlap = neumaier_sum(phi.iter().copied()).abs() / m as f64;
        if overlap > 0.5 && constant_mode.is_none() {
            constant_mode = Some(lambda);
            continue;
        }
        eigenvalues.push(lambda);
        rows.push(phi);
    }
    let eigenfunctions = if rows.is_empty() {
        Matrix::zeros(0, m)
    } else {
        Matrix::from_rows(&rows)
    };
    let lipschitz_estimates = rows.iter().map(|phi| grid_lipschitz(phi)).collect();
    let sigma2 = sigma2_of(&eigenvalues);
    let fredholm_det = fredholm_determinant(&eigenvalues).ok();
    Spectrum {
        m,
        conjectured_c: fredholm_det.map(|d| 1.0 / d.sqrt()),
        eigenvalues,
        eigenfunctions,
        sigma2,
        fredholm_det,
        lipschitz_estimates,
        unit_eigenvalue_check: unit,
        unit_constancy_deviation: unit_dev,
        constant_mode_eigenvalue: constant_mode,
    }
}

/// Dominant eigenpair of `(1/m)(centered + 1)` by power iteration, started
/// from a non-constant vector. Returns the Rayleigh quotient and the largest
/// deviation of the normalized eigenfunction from the constant 1.
fn unit_eigenpair(centered: &Matrix, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let apply = |v: &[f64]| -> Vec<f64> {
        let total = neumaier_sum(v.iter().copied());
        centered
            .mul_vec(v)
            .into_iter()
            .map(|x| (x + total) / mf)
            .collect()
    };
    let normalize = |v: &mut Vec<f64>| {
        let norm = (neumaier_sum(v.iter().map(|x| x * x)) / mf).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64 + 0.5) / mf - 0.3)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mut w = apply(&v);
        lambda = neumaier_sum(w.iter().zip(&v).map(|(a, b)| a * b)) / mf;
        normalize(&mut w);
        jacobi::fix_sign(&mut w);
        let change = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if change < 1e-14 {
            break;
        }
    }
    let deviation = v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    (lambda, deviation)
}

/// Full sorted spectrum of the uncentered operator `(1/m) rho`.
pub fn uncentered_eigenvalues(sol: &BridgeSolution) -> Result<SymmetricEigen, SpectralError> {
    let mut op = sol.grid_density();
    op.scale(1.0 / sol.m() as f64);
    Ok(jacobi::eigh(&op)?.sorted_by_magnitude())
}

fn sigma2_of(eigenvalues: &[f64]) -> f64 {
    1.0 - eigenvalues.iter().map(|l| l * l).fold(0.0, f64::max)
}

/// `sigma^2 = 1 - max lambda^2`, flagged against the requirement
/// `sigma^2 in (0, 1)`.
pub fn spectral_gap(spec: &Spectrum) -> SpectralGap {
    gap_of(&spec.eigenvalues)
}

pub fn gap_of(eigenvalues: &[f64]) -> SpectralGap {
    let top = eigenvalues.iter().map(|l| l * l).fold(0.0, f64::max);
    let sigma2 = 1.0 - top;
    if top == 0.0 {
        SpectralGap {
            sigma2,
            assumption_holds: false,
            note: Some("no non-unit spectrum above the noise floor; gap is the degenerate boundary value 1".into()),
        }
    } else if top >= 1.0 - GAP_GUARD {
        SpectralGap {
            sigma2,
            assumption_holds: false,
            note: Some(format!("largest |lambda| = {} leaves no positive gap", top.sqrt())),
        }
    } else {
        SpectralGap {
            sigma2,
            assumption_holds: true,
            note: None,
        }
    }
}

/// `prod (1 - lambda_i^2)` computed as `exp(sum ln(1 - lambda_i^2))`,
/// ignoring eigenvalues below [`NOISE_FLOOR`].
pub fn fredholm_determinant(eigenvalues: &[f64]) -> Result<f64, SpectralError> {
    let mut log_det = NeumaierSum::new();
    for &lambda in eigenvalues {
        if lambda.abs() < NOISE_FLOOR {
            continue;
        }
        if lambda.abs() >= 1.0 - GAP_GUARD {
            return Err(SpectralError::GapViolation(lambda));
        }
        log_det.add((-lambda * lambda).ln_1p());
    }
    Ok(log_det.value().exp())
}

/// `det(I - T^2)^{-1/2}`.
pub fn conjectured_constant(eigenvalues: &[f64]) -> Result<f64, SpectralError> {
    Ok(1.0 / fredholm_determinant(eigenvalues)?.sqrt())
}

/// Empirical Lipschitz constant `m * max_j |f(x_{j+1}) - f(x_j)|` of a grid
/// function on `[0, 1]`.
pub fn grid_lipschitz(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        * m
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenfunction(&self, index: usize) -> Result<&[f64], SpectralError> {
        if index >= self.len() {
            return Err(SpectralError::IndexOutOfRange {
                index,
                available: self.len(),
            });
        }
        Ok(self.eigenfunctions.row(index))
    }

    /// Lipschitz estimate of the eigenfunction at 0-based `index`.
    pub fn lipschitz_estimate(&self, index: usize) -> Result<f64, SpectralError> {
        self.eigenfunction(index).map(grid_lipschitz)
    }

    pub fn gap(&self) -> SpectralGap {
        spectral_gap(self)
    }

    pub fn fredholm_determinant(&self) -> Result<f64, SpectralError> {
        fredholm_determinant(&self.eigenvalues)
    }

    pub fn conjectured_constant(&self) -> Result<f64, SpectralError> {
        conjectured_constant(&self.eigenvalues)
    }

    /// `max |(1/m) sum_x phi_i phi_j - delta_ij|` over retained pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.m as f64;
        let mut worst = 0.0_f64;
        for i in 0..self.len() {
            for j in i..self.len() {
                let dot = neumaier_sum(
                    self.eigenfunctions
                        .row(i)
                        .iter()
                        .zip(self.eigenfunctions.row(j))
                        .map(|(a, b)| a * b),
                ) / m;
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }

    /// `sum_k lambda_k phi_k(x_i) phi_k(x_j)` over the first `rank`
    /// eigenpairs, on the grid.
    pub fn reconstruct_kernel(&self, rank: usize) -> Matrix {
        let m = self.m;
        let rank = rank.min(self.len());
        Matrix::from_fn(m, m, |i, j| {
            neumaier_sum((0..rank).map(|k| {
                self.eigenvalues[k] * self.eigenfunctions[(k, i)] * self.eigenfunctions[(k, j)]
            }))
        })
    }

    /// Nyström extension of eigenfunction `index` to arbitrary points:
    /// `phi(x) = (1 / (lambda m)) sum_j (rho(x, x_j) - 1) phi(x_j)`.
    pub fn extend(&self, sol: &BridgeSolution, index: usize, points: &[f64]) -> Result<Vec<f64>, SpectralError> {
        if sol.m() != self.m {
            return Err(SpectralError::GridMismatch {
                spectrum: self.m,
                bridge: sol.m(),
            });
        }
        let phi = self.eigenfunction(index)?;
        let lambda = self.eigenvalues[index];
        if lambda.abs() < NOISE_FLOOR {
            return Err(SpectralError::IllConditionedExtension { index, value: lambda });
        }
        let ax: Vec<f64> = points.iter().map(|&x| sol.potential_unchecked(x)).collect();
        let rho = sol.density_matrix_with(points, &ax, sol.nodes(), sol.a_values());
        Ok((0..points.len())
            .map(|p| {
                neumaier_sum(rho.row(p).iter().zip(phi).map(|(r, f)| (r - 1.0) * f))
                    / (lambda * self.m as f64)
            })
            .collect())
    }

    pub fn to_file(&self) -> SpectrumFile {
        let gap = self.gap();
        SpectrumFile {
            m: self.m,
            unit_eigenvalue_check: self.unit_eigenvalue_check,
            eigenvalues: self.eigenvalues.clone(),
            sigma2: self.sigma2,
            fredholm_det: self.fredholm_det,
            conjectured_c: self.conjectured_c,
            lipschitz_estimates: self.lipschitz_estimates.clone(),
            unit_constancy_deviation: self.unit_constancy_deviation,
            constant_mode_eigenvalue: self.constant_mode_eigenvalue,
            gap_assumption_holds: gap.assumption_holds,
        }
    }

    /// Writes `spectrum.json`-style output and, optionally, the eigenvector
    /// file (one eigenfunction per line, `m` values each).
    pub fn write(&self, json: &Path, eigenvectors: Option<&Path>) -> Result<(), SpectralError> {
        let io = |path: &Path, e: std::io::Error| SpectralError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let text = serde_json::to_string_pretty(&self.to_file()).expect("spectrum serializes");
        std::fs::write(json, text + "\n").map_err(|e| io(json, e))?;
        if let Some(path) = eigenvectors {
            let mut out = String::new();
            for k in 0..self.len() {
                let line: Vec<String> = self.eigenfunctions.row(k).iter().map(f64::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            std::fs::write(path, out).map_err(|e| io(path, e))?;
        }
        Ok(())
    }

    /// Reads a spectrum back. Eigenfunctions are only available when the
    /// eigenvector file is supplied.
    pub fn read(json: &Path, eigenvectors: Option<&Path>) -> Result<Self, SpectralError> {
        let err = |path: &Path, message: String| SpectralError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(json).map_err(|e| err(json, e.to_string()))?;
        let file: SpectrumFile = serde_json::from_str(&text).map_err(|e| err(json, e.to_string()))?;
        let eigenfunctions = match eigenvectors {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| err(path, e.to_string()))?;
                let rows = text
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        l.split_whitespace()
                            .map(|t| t.parse::<f64>().map_err(|e| err(path, e.to_string())))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if rows.len() != file.eigenvalues.len() || rows.iter().any(|r| r.len() != file.m) {
                    return Err(err(path, "eigenvector file does not match spectrum".into()));
                }
                if rows.is_empty() {
                    Matrix::zeros(0, file.m)
                } else {
                    Matrix::from_rows(&rows)
                }
            }
            None => Matrix::zeros(0, file.m),
        };
        Ok(Spectrum {
            m: file.m,
            eigenvalues: file.eigenvalues,
            eigenfunctions,
            sigma2: file.sigma2,
            fredholm_det: file.fredholm_det,
            conjectured_c: file.conjectured_c,
            lipschitz_estimates: file.lipschitz_estimates,
            unit_eigenvalue_check: file.unit_eigenvalue_check,
            unit_constancy_deviation: file.unit_constancy_deviation,
            constant_mode_eigenvalue: file.constant_mode_eigenvalue,
        })
    }
}

/// On-disk spectrum summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub m: usize,
    pub unit_eigenvalue_check: f64,
    pub eigenvalues: Vec<f64>,
    pub sigma2: f64,
    pub fredholm_det: Option<f64>,
    #[serde(rename = "conjectured_C")]
    pub conjectured_c: Option<f64>,
    pub lipschitz_estimates: Vec<f64>,
    pub unit_constancy_deviation: f64,
    pub constant_mode_eigenvalue: Option<f64>,
    pub gap_assumption_holds: bool,
}
