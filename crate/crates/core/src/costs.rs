//! Cost functions `c(x, y)` on the unit square and empirical checks of the
//! standing assumptions placed on them: vanishing on the diagonal, symmetry,
//! invariance under `(x, y) -> (1 - x, 1 - y)` and two continuous derivatives.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::midpoint_grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cost argument ({x}, {y}) outside the unit square")]
    Domain { x: f64, y: f64 },
    #[error("cost scale beta must be finite and nonnegative, got {0}")]
    InvalidBeta(f64),
    #[error("unknown cost kind `{0}` (expected quadratic, cosine, foot-rule or table:<path>)")]
    UnknownKind(String),
    #[error("failed to read cost table {path}: {message}")]
    TableIo { path: PathBuf, message: String },
    #[error("malformed cost table {path}: {message}")]
    TableFormat { path: PathBuf, message: String },
}

/// Smoothness class of a cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    #[serde(rename = "C2")]
    C2,
    #[serde(rename = "non-C2-on-diagonal")]
    NonC2OnDiagonal,
}

/// A cost sampled on the midpoint grid `(i - 1/2) / m` and bilinearly
/// interpolated in between. The table is symmetrized at load.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    size: usize,
    values: Vec<f64>,
    source: PathBuf,
}

impl CostTable {
    /// Builds a table from `size * size` row-major values, averaging it with
    /// its transpose.
    pub fn new(size: usize, values: Vec<f64>, source: PathBuf) -> Result<Self, CostError> {
        let fmt_err = |message: String| CostError::TableFormat {
            path: source.clone(),
            message,
        };
        if size < 2 {
            return Err(fmt_err(format!("table size must be at least 2, got {size}")));
        }
        if values.len() != size * size {
            return Err(fmt_err(format!(
                "expected {} values, found {}",
                size * size,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(fmt_err(format!("entries must be finite and nonnegative, found {bad}")));
        }
        let mut sym = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                sym[i * size + j] = 0.5 * (values[i * size + j] + values[j * size + i]);
            }
        }
        Ok(Self {
            size,
            values: sym,
            source,
        })
    }

    /// Reads the plain-text format: a header line holding `m`, followed by
    /// `m * m` whitespace-separated reals in row-major order.
    pub fn load(path: &Path) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path).map_err(|e| CostError::TableIo {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path.to_path_buf())
    }

    pub fn parse(text: &str, source: PathBuf) -> Result<Self, CostError> {
        let fmt_err = |message: String| CostError::TableFormat {
            path: source.clone(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| fmt_err("empty file".into()))?;
        let size: usize = header
            .trim()
            .parse()
            .map_err(|_| fmt_err(format!("bad header `{}`", header.trim())))?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| fmt_err(format!("bad number `{tok}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(size, values, source)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    fn interpolate(&self, x: f64, y: f64) -> f64 {
        let m = self.size;
        // Fractional node coordinate, clamped to the outermost nodes.
        let locate = |t: f64| -> (usize, f64) {
            let s = (t * m as f64 - 0.5).clamp(0.0, (m - 1) as f64);
            let i = (s.floor() as usize).min(m - 2);
            (i, s - i as f64)
        };
        let (i, fx) = locate(x);
        let (j, fy) = locate(y);
        let v = |a: usize, b: usize| self.values[a * m + b];
        (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j + 1))
            + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `(x - y)^2`
    Quadratic,
    /// `1 - cos(2 pi (x - y))`
    Cosine,
    /// `|x - y|`, the Spearman foot rule.
    FootRule,
    Tabulated(Arc<CostTable>),
}

impl CostKind {
    pub fn name(&self) -> &'static str {
        match self {
            CostKind::Quadratic => "quadratic",
            CostKind::Cosine => "cosine",
            CostKind::FootRule => "foot-rule",
            CostKind::Tabulated(_) => "tabulated",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Tabulated(t) => write!(f, "table:{}", t.source.display()),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for CostKind {
    type Err = CostError;

    /// Accepts `quadratic`, `cosine`, `foot-rule` and `table:<path>`; the
    /// table is loaded eagerly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "quadratic" => Ok(CostKind::Quadratic),
            "cosine" => Ok(CostKind::Cosine),
            "foot-rule" | "footrule" => Ok(CostKind::FootRule),
            other => match other.strip_prefix("table:") {
                Some(path) => Ok(CostKind::Tabulated(Arc::new(CostTable::load(Path::new(path))?))),
                None => Err(CostError::UnknownKind(other.to_string())),
            },
        }
    }
}

/// A cost function together with its scale factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    kind: CostKind,
    beta: f64,
}

impl CostSpec {
    pub fn new(kind: CostKind, beta: f64) -> Result<Self, CostError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(CostError::InvalidBeta(beta));
        }
        Ok(Self { kind, beta })
    }

    pub fn quadratic(beta: f64) -> Result<Self, CostError> {
        Self::new(CostKind::Quadratic, beta)
    }

    pub fn cosine(beta: f64) -> Result<Self, CostError> {
        Self::new(CostKind::Cosine, beta)
    }

    pub fn foot_rule(beta: f64) -> Result<Self, CostError> {
        Self::new(CostKind::FootRule, beta)
    }

    /// The identically zero cost (quadratic with `beta = 0`).
    pub fn zero() -> Self {
        Self {
            kind: CostKind::Quadratic,
            beta: 0.0,
        }
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn smoothness(&self) -> Smoothness {
        match self.kind {
            CostKind::FootRule if self.beta > 0.0 => Smoothness::NonC2OnDiagonal,
            _ => Smoothness::C2,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, CostKind::Tabulated(_))
    }

    /// `c(x, y)`; errors outside the unit square.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64, CostError> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(CostError::Domain { x, y });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `c(x, y)` without the domain check. Callers must pass points of the
    /// unit square.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        // |x - y| is exactly symmetric under swapping the arguments.
        let d = (x - y).abs();
        let base = match &self.kind {
            CostKind::Quadratic => d * d,
            CostKind::Cosine => 1.0 - (2.0 * std::f64::consts::PI * d).cos(),
            CostKind::FootRule => d,
            CostKind::Tabulated(t) => t.interpolate(x, y),
        };
        self.beta * base
    }
}

/// Maximum violations of each standing assumption on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub grid_points: usize,
    pub diagonal_zero: f64,
    pub symmetry: f64,
    pub reflection: f64,
    pub nonnegativity: f64,
    /// Largest second divided difference on the working grid.
    pub second_difference: f64,
    /// Same quantity on a grid twice as fine.
    pub second_difference_refined: f64,
    /// Second differences did not blow up under refinement.
    pub c2_bounded: bool,
    pub smoothness: Smoothness,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    /// True when all exact assumptions hold within `tol` and the cost looks C².
    pub fn within_hypotheses(&self, tol: f64) -> bool {
        self.diagonal_zero <= tol
            && self.symmetry <= tol
            && self.reflection <= tol
            && self.nonnegativity <= tol
            && self.c2_bounded
            && self.smoothness == Smoothness::C2
    }
}

fn max_second_difference(cost: &CostSpec, g: usize) -> f64 {
    let xs = midpoint_grid(g);
    let h = 1.0 / g as f64;
    let c = |i: usize, j: usize| cost.eval_unchecked(xs[i], xs[j]);
    let mut worst = 0.0_f64;
    for i in 1..g - 1 {
        for j in 1..g - 1 {
            let dxx = c(i + 1, j) - 2.0 * c(i, j) + c(i - 1, j);
            let dyy = c(i, j + 1) - 2.0 * c(i, j) + c(i, j - 1);
            let dxy = (c(i + 1, j + 1) - c(i + 1, j - 1) - c(i - 1, j + 1) + c(i - 1, j - 1)) / 4.0;
            worst = worst.max(dxx.abs()).max(dyy.abs()).max(dxy.abs());
        }
    }
    worst / (h * h)
}

/// Checks the four standing assumptions on the midpoint grid with
/// `grid_points` nodes per axis. Never fails; problems are reported.
pub fn validate_assumptions(cost: &CostSpec, grid_points: usize) -> AssumptionReport {
    let g = grid_points.max(4);
    let xs = midpoint_grid(g);
    let mut diagonal_zero = 0.0_f64;
    let mut symmetry = 0.0_f64;
    let mut reflection = 0.0_f64;
    let mut nonnegativity = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        diagonal_zero = diagonal_zero.max(cost.eval_unchecked(x, x).abs());
        for &y in &xs[i..] {
            let v = cost.eval_unchecked(x, y);
            symmetry = symmetry.max((v - cost.eval_unchecked(y, x)).abs());
            reflection = reflection.max((v - cost.eval_unchecked(1.0 - x, 1.0 - y)).abs());
            if !v.is_finite() {
                nonnegativity = f64::INFINITY;
            } else if v < 0.0 {
                nonnegativity = nonnegativity.max(-v);
            }
        }
    }

    let second_difference = max_second_difference(cost, g);
    let second_difference_refined = max_second_difference(cost, 2 * g);
    // A kink makes the estimate scale like 1/h; a C² cost keeps it flat.
    let c2_bounded = second_difference_refined <= 1.5 * second_difference + 1e-6;

    let smoothness = cost.smoothness();
    let mut warnings = Vec::new();
    if smoothness == Smoothness::NonC2OnDiagonal {
        warnings.push(format!(
            "{} cost is not twice differentiable on the diagonal; results fall outside the smooth-cost hypotheses",
            cost.kind().name()
        ));
    }
    if !c2_bounded {
        warnings.push(format!(
            "second differences grow under refinement ({second_difference:.3e} -> {second_difference_refined:.3e})"
        ));
    }
    for (label, v) in [
        ("diagonal-zero", diagonal_zero),
        ("symmetry", symmetry),
        ("reflection symmetry", reflection),
        ("nonnegativity", nonnegativity),
    ] {
        if v > 1e-12 {
            warnings.push(format!("{label} violated by {v:.3e}"));
        }
    }

    AssumptionReport {
        grid_points: g,
        diagonal_zero,
        symmetry,
        reflection,
        nonnegativity,
        second_difference,
        second_difference_refined,
        c2_bounded,
        smoothness,
        warnings,
    }
}
