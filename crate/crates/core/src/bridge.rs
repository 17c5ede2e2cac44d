//! Static Schrödinger bridge with uniform marginals on `[0, 1]`.
//!
//! The bridge density is `rho(x, y) = exp(-c(x, y) - a(x) - a(y))` where the
//! potential `a` solves
//!
//! ```text
//! exp(a(x)) = ∫ exp(-c(x, y) - a(y)) dy
//! ```
//!
//! which is exactly the requirement that every row of `rho` integrates to 1.
//! The integral is discretized with the composite midpoint rule and the fixed
//! point is found by the damped symmetric Sinkhorn update
//! `a <- (a + T(a)) / 2`, started from `a = 0`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{CostError, CostKind, CostSpec, CostTable};
use crate::numeric::{mean, midpoint_grid, neumaier_sum, unit_points, Matrix, NeumaierSum};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const MIN_GRID: usize = 8;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("grid size must be at least {MIN_GRID}, got {0}")]
    GridTooSmall(usize),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {iterations} iterations (last update {last_change:.3e}, marginal residual {residual:.3e})")]
    IterationLimit {
        iterations: usize,
        last_change: f64,
        residual: f64,
    },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("bridge file {path}: {message}")]
    File { path: PathBuf, message: String },
}

/// Converged grid solution of the bridge system.
#[derive(Debug, Clone)]
pub struct BridgeSolution {
    cost: CostSpec,
    tol: f64,
    nodes: Vec<f64>,
    a_values: Vec<f64>,
    /// `exp(-a)` at the nodes, cached for off-grid evaluation.
    weights: Vec<f64>,
    gamma0: f64,
    iterations: usize,
    residual: f64,
}

/// One application of the fixed-point map at every row of `kernel`.
fn apply_map(kernel: &Matrix, weights: &[f64]) -> Vec<f64> {
    let m = weights.len() as f64;
    (0..kernel.rows())
        .map(|i| {
            let s = neumaier_sum(kernel.row(i).iter().zip(weights).map(|(k, w)| k * w));
            (s / m).ln()
        })
        .collect()
}

/// `max_i |(1/m) sum_j rho(x_i, x_j) - 1|` for the potential `a`.
fn marginal_residual(kernel: &Matrix, a: &[f64]) -> f64 {
    let m = a.len();
    let weights: Vec<f64> = a.iter().map(|v: &f64| (-v).exp()).collect();
    (0..m)
        .map(|i| {
            let s = neumaier_sum(kernel.row(i).iter().zip(&weights).map(|(k, w)| k * w));
            (weights[i] * s / m as f64 - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves for the potential on the midpoint grid with `m` nodes.
///
/// Converged means the undamped update moves `a` by less than `tol` in sup
/// norm and the marginal residual is below `10 * tol`.
pub fn solve(cost: &CostSpec, m: usize, tol: f64, max_iter: usize) -> Result<BridgeSolution, BridgeError> {
    if m < MIN_GRID {
        return Err(BridgeError::GridTooSmall(m));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(BridgeError::InvalidTolerance(tol));
    }
    let nodes = midpoint_grid(m);
    let kernel = Matrix::from_fn(m, m, |i, j| (-cost.eval_unchecked(nodes[i], nodes[j])).exp());

    let mut a = vec![0.0; m];
    let mut last_change = f64::INFINITY;
    for iteration in 1..=max_iter {
        let weights: Vec<f64> = a.iter().map(|v: &f64| (-v).exp()).collect();
        let updated = apply_map(&kernel, &weights);
        last_change = a
            .iter()
            .zip(&updated)
            .map(|(old, new)| (new - old).abs())
            .fold(0.0, f64::max);
        if last_change < tol {
            let residual = marginal_residual(&kernel, &a);
            if residual < 10.0 * tol {
                log::debug!("bridge converged in {iteration} iterations, residual {residual:.3e}");
                return Ok(BridgeSolution::from_parts(cost.clone(), tol, a, iteration, residual));
            }
        }
        for (old, new) in a.iter_mut().zip(&updated) {
            *old = 0.5 * (*old + new);
        }
    }
    Err(BridgeError::IterationLimit {
        iterations: max_iter,
        last_change,
        residual: marginal_residual(&kernel, &a),
    })
}

impl BridgeSolution {
    fn from_parts(cost: CostSpec, tol: f64, a_values: Vec<f64>, iterations: usize, residual: f64) -> Self {
        let m = a_values.len();
        let weights = a_values.iter().map(|v| (-v).exp()).collect();
        let gamma0 = -2.0 * mean(&a_values);
        Self {
            cost,
            tol,
            nodes: midpoint_grid(m),
            a_values,
            weights,
            gamma0,
            iterations,
            residual,
        }
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    /// `Gamma_0 = -2 ∫ a`, midpoint quadrature.
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Potential at an arbitrary point, by one more application of the
    /// fixed-point map against the grid solution.
    pub fn potential_at(&self, x: f64) -> Result<f64, BridgeError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(CostError::Domain { x, y: x }.into());
        }
        Ok(self.potential_unchecked(x))
    }

    pub(crate) fn potential_unchecked(&self, x: f64) -> f64 {
        let s = neumaier_sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&y, w)| (-self.cost.eval_unchecked(x, y)).exp() * w),
        );
        (s / self.m() as f64).ln()
    }

    /// Potential at `i / n`, `i = 1..=n`.
    pub fn potential_at_unit_points(&self, n: usize) -> Vec<f64> {
        unit_points(n).into_iter().map(|x| self.potential_unchecked(x)).collect()
    }

    /// `rho(x, y)`; symmetric in its arguments bit for bit.
    pub fn density(&self, x: f64, y: f64) -> Result<f64, BridgeError> {
        let c = self.cost.evaluate(x, y)?;
        Ok((-c - (self.potential_unchecked(x) + self.potential_unchecked(y))).exp())
    }

    /// `rho(x_i, y_j)` for two point sets, with potentials supplied by the
    /// caller (they must be the potentials at those points).
    pub(crate) fn density_matrix_with(&self, xs: &[f64], ax: &[f64], ys: &[f64], ay: &[f64]) -> Matrix {
        Matrix::from_fn(xs.len(), ys.len(), |i, j| {
            (-self.cost.eval_unchecked(xs[i], ys[j]) - (ax[i] + ay[j])).exp()
        })
    }

    /// `rho` on the solver grid, using the stored potential.
    pub fn grid_density(&self) -> Matrix {
        self.density_matrix_with(&self.nodes, &self.a_values, &self.nodes, &self.a_values)
    }

    /// `R_ij = rho(i/n, j/n)`, potentials from [`Self::potential_at`].
    pub fn unit_density(&self, n: usize) -> Matrix {
        let pts = unit_points(n);
        let a = self.potential_at_unit_points(n);
        self.density_matrix_with(&pts, &a, &pts, &a)
    }

    /// Largest `|(1/m) sum_j rho(x_i, x_j) - 1|`.
    pub fn marginal_residual(&self) -> f64 {
        let rho = self.grid_density();
        (0..self.m())
            .map(|i| (neumaier_sum(rho.row(i).iter().copied()) / self.m() as f64 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Gamma_0` two ways: `-2 ∫ a` and `∫ c rho + ∫ rho log rho`.
    pub fn gamma0_two_ways(&self) -> (f64, f64) {
        let m = self.m();
        let mut acc = NeumaierSum::new();
        for i in 0..m {
            for j in 0..m {
                let c = self.cost.eval_unchecked(self.nodes[i], self.nodes[j]);
                let rho = (-c - (self.a_values[i] + self.a_values[j])).exp();
                acc.add(c * rho);
                acc.add(rho * rho.ln());
            }
        }
        (self.gamma0, acc.value() / (m * m) as f64)
    }

    /// `n * [∫ a - (1/n) sum_{i=1}^n a(i/n)]`, the scaled right-endpoint
    /// Riemann-sum error of the potential.
    pub fn riemann_gap(&self, n: usize) -> f64 {
        let integral = mean(&self.a_values);
        let riemann = neumaier_sum(self.potential_at_unit_points(n));
        n as f64 * integral - riemann
    }

    /// `max_i |a_i - a_{m+1-i}|`.
    pub fn reflection_asymmetry(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|i| (self.a_values[i] - self.a_values[m - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest second divided difference of `a` on the grid; a smoothness
    /// diagnostic for the potential.
    pub fn potential_second_difference(&self) -> f64 {
        let h = 1.0 / self.m() as f64;
        self.a_values
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / (h * h))
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> BridgeFile {
        let cost_table = match self.cost.kind() {
            CostKind::Tabulated(t) => Some(t.source().display().to_string()),
            _ => None,
        };
        BridgeFile {
            cost_kind: self.cost.kind().name().to_string(),
            beta: self.cost.beta(),
            m: self.m(),
            tol: self.tol,
            iterations: self.iterations,
            residual: self.residual,
            gamma0: self.gamma0,
            a_values: self.a_values.clone(),
            cost_table,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BridgeError> {
        let text = serde_json::to_string_pretty(&self.to_file()).expect("bridge file serializes");
        std::fs::write(path, text + "\n").map_err(|e| BridgeError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn read_json(path: &Path) -> Result<Self, BridgeError> {
        let file_err = |message: String| BridgeError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let file: BridgeFile = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        file.into_solution()
    }
}

/// On-disk form of a [`BridgeSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeFile {
    pub cost_kind: String,
    pub beta: f64,
    pub m: usize,
    pub tol: f64,
    pub iterations: usize,
    pub residual: f64,
    pub gamma0: f64,
    pub a_values: Vec<f64>,
    /// Source path of a tabulated cost, re-read on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_table: Option<String>,
}

impl BridgeFile {
    pub fn into_solution(self) -> Result<BridgeSolution, BridgeError> {
        let kind = match (self.cost_kind.as_str(), &self.cost_table) {
            ("tabulated", Some(path)) => CostKind::Tabulated(Arc::new(CostTable::load(Path::new(path))?)),
            ("tabulated", None) => {
                return Err(BridgeError::File {
                    path: PathBuf::new(),
                    message: "tabulated cost without `cost_table` path".into(),
                })
            }
            (name, _) => name.parse()?,
        };
        let cost = CostSpec::new(kind, self.beta)?;
        if self.a_values.len() != self.m || self.m < MIN_GRID {
            return Err(BridgeError::File {
                path: PathBuf::new(),
                message: format!("expected {} potential values, found {}", self.m, self.a_values.len()),
            });
        }
        Ok(BridgeSolution::from_parts(
            cost,
            self.tol,
            self.a_values,
            self.iterations,
            self.residual,
        ))
    }
}
