//! Partition functions over the symmetric group.
//!
//! ```text
//! L_n = (1/n!) sum_sigma exp(-sum_i c(i/n, sigma_i/n))
//! D_n = (1/n!) sum_sigma prod_i rho(i/n, sigma_i/n) = L_n exp(-2 sum_i a(i/n))
//! ```
//!
//! `D_n` is the well-conditioned quantity (the entries of `rho` are O(1)), so
//! it is computed first and `L_n` follows from the identity. The direct
//! permanent of `exp(-c)` is kept as a second route and cross-checked.

pub mod monte_carlo;
pub mod permanent;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::BridgeSolution;
use crate::numeric::{ln_factorial, neumaier_sum, rel_diff, unit_points, Matrix};
pub use monte_carlo::{mc_estimate_dn, RNG_ALGORITHM};
pub use permanent::{permanent_brute, permanent_ryser, permanent_ryser_capped, BRUTE_CAP, DEFAULT_RYSER_CAP};

/// Relative tolerance between the two `L_n` routes.
pub const ROUTE_TOLERANCE: f64 = 1e-8;
pub const MIN_MC_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("{method} permanent limited to n <= {cap}, got n = {n}")]
    SizeLimit { method: &'static str, n: usize, cap: usize },
    #[error("permanent evaluated to {value:e} for a positive matrix (n = {n}); precision lost")]
    NumericalHealth { n: usize, value: f64 },
    #[error("L_n routes disagree at n = {n}: direct {direct:e} vs identity {identity:e} (relative {relative:.3e})")]
    InternalConsistency {
        n: usize,
        direct: f64,
        identity: f64,
        relative: f64,
    },
    #[error("n must be at least 1")]
    EmptyRange,
    #[error("invalid range {n_min}..={n_max}")]
    InvalidRange { n_min: usize, n_max: usize },
    #[error("Monte-Carlo estimation needs at least {MIN_MC_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("unknown method `{0}` (expected ryser, brute or mc)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ryser")]
    Ryser,
    #[serde(rename = "brute")]
    Brute,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ryser => "ryser",
            Method::Brute => "brute",
            Method::MonteCarlo => "monte-carlo",
        }
    }

    pub fn is_exact(self) -> bool {
        !matches!(self, Method::MonteCarlo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ryser" => Ok(Method::Ryser),
            "brute" => Ok(Method::Brute),
            "mc" | "monte-carlo" => Ok(Method::MonteCarlo),
            other => Err(PartitionError::UnknownMethod(other.to_string())),
        }
    }
}

/// Exact permanent backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMethod {
    Ryser { cap: usize },
    Brute,
}

impl ExactMethod {
    pub fn ryser() -> Self {
        ExactMethod::Ryser { cap: DEFAULT_RYSER_CAP }
    }

    pub fn method(self) -> Method {
        match self {
            ExactMethod::Ryser { .. } => Method::Ryser,
            ExactMethod::Brute => Method::Brute,
        }
    }

    pub fn permanent(self, m: &Matrix) -> Result<f64, PartitionError> {
        match self {
            ExactMethod::Ryser { cap } => permanent_ryser_capped(m, cap),
            ExactMethod::Brute => permanent_brute(m),
        }
    }
}

/// One row of the partition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPoint {
    pub n: usize,
    pub d_n: f64,
    /// `L_n` through the identity `D_n exp(2 sum a(i/n))`.
    pub l_n: f64,
    /// `exp(n Gamma_0) L_n`.
    pub scaled: f64,
    pub method: Method,
    pub mc_stderr: Option<f64>,
    pub seed: Option<u64>,
    /// `L_n` from the permanent of `exp(-c(i/n, j/n))`, when computed.
    pub l_n_direct: Option<f64>,
    /// `2 sum_i a(i/n)`.
    pub log_potential_sum: f64,
}

impl PartitionPoint {
    /// Relative defect of `D_n = L_n exp(-2 sum a(i/n))` using the direct
    /// `L_n` route (falls back to the identity route).
    pub fn identity_defect(&self) -> f64 {
        let l = self.l_n_direct.unwrap_or(self.l_n);
        rel_diff(self.d_n, l * (-self.log_potential_sum).exp())
    }
}

/// `(1/n!) per(M)` evaluated as `exp(ln per(M) - ln n!)`.
fn normalized_permanent(m: &Matrix, method: ExactMethod) -> Result<f64, PartitionError> {
    let n = m.rows();
    let p = method.permanent(m)?;
    if p.is_nan() || p <= 0.0 {
        return Err(PartitionError::NumericalHealth { n, value: p });
    }
    Ok((p.ln() - ln_factorial(n)).exp())
}

fn point_from_dn(sol: &BridgeSolution, n: usize, d_n: f64, log_potential_sum: f64, method: Method) -> PartitionPoint {
    let ln_l = d_n.ln() + log_potential_sum;
    PartitionPoint {
        n,
        d_n,
        l_n: ln_l.exp(),
        scaled: (n as f64 * sol.gamma0() + ln_l).exp(),
        method,
        mc_stderr: None,
        seed: None,
        l_n_direct: None,
        log_potential_sum,
    }
}

/// `2 sum_{i=1}^n a(i/n)` from the off-grid potential.
pub fn log_potential_sum(sol: &BridgeSolution, n: usize) -> f64 {
    2.0 * neumaier_sum(sol.potential_at_unit_points(n))
}

/// `D_n` by an exact permanent of `R_ij = rho(i/n, j/n)`.
pub fn compute_dn(sol: &BridgeSolution, n: usize, method: ExactMethod) -> Result<PartitionPoint, PartitionError> {
    if n == 0 {
        return Err(PartitionError::EmptyRange);
    }
    let r = sol.unit_density(n);
    let d_n = normalized_permanent(&r, method)?;
    Ok(point_from_dn(sol, n, d_n, log_potential_sum(sol, n), method.method()))
}

/// `E_ij = exp(-c(i/n, j/n))`.
pub fn boltzmann_matrix(sol: &BridgeSolution, n: usize) -> Matrix {
    let pts = unit_points(n);
    Matrix::from_fn(n, n, |i, j| (-sol.cost().eval_unchecked(pts[i], pts[j])).exp())
}

/// `L_n` both ways: through `D_n` and the identity, and directly from the
/// permanent of `exp(-c)`. Errors if the routes disagree beyond
/// [`ROUTE_TOLERANCE`].
pub fn compute_ln(sol: &BridgeSolution, n: usize, method: ExactMethod) -> Result<PartitionPoint, PartitionError> {
    let mut point = compute_dn(sol, n, method)?;
    let direct = normalized_permanent(&boltzmann_matrix(sol, n), method)?;
    let relative = rel_diff(direct, point.l_n);
    if relative > ROUTE_TOLERANCE {
        return Err(PartitionError::InternalConsistency {
            n,
            direct,
            identity: point.l_n,
            relative,
        });
    }
    point.l_n_direct = Some(direct);
    Ok(point)
}

/// How to fill the partition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSettings {
    pub method: Method,
    pub ryser_cap: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TableSettings {
    fn default() -> Self {
        Self {
            method: Method::Ryser,
            ryser_cap: DEFAULT_RYSER_CAP,
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// One table row for the configured method.
pub fn partition_point(sol: &BridgeSolution, n: usize, settings: &TableSettings) -> Result<PartitionPoint, PartitionError> {
    match settings.method {
        Method::Ryser => compute_ln(sol, n, ExactMethod::Ryser { cap: settings.ryser_cap }),
        Method::Brute => compute_ln(sol, n, ExactMethod::Brute),
        Method::MonteCarlo => mc_estimate_dn(sol, n, settings.samples, settings.seed),
    }
}

/// `D_n` and `exp(n Gamma_0) L_n` for `n_min..=n_max`. Values of `n` are
/// evaluated in parallel and returned in increasing order.
pub fn scaled_sequence(
    sol: &BridgeSolution,
    n_min: usize,
    n_max: usize,
    settings: &TableSettings,
) -> Result<Vec<PartitionPoint>, PartitionError> {
    if n_min == 0 {
        return Err(PartitionError::EmptyRange);
    }
    if n_min > n_max {
        return Err(PartitionError::InvalidRange { n_min, n_max });
    }
    // Largest n first so the expensive permanents start early.
    let mut points: Vec<PartitionPoint> = (n_min..=n_max)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| partition_point(sol, n, settings))
        .collect::<Result<_, _>>()?;
    points.reverse();
    Ok(points)
}
