//! End-to-end pipeline: bridge, spectrum, partition table, limit fits and
//! series cross-checks, plus the files they are written to.

pub mod config;
pub mod fit;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{self, BridgeError, BridgeSolution, MIN_GRID};
use crate::costs::{validate_assumptions, Smoothness};
use crate::numeric::rel_diff;
use crate::partition::{scaled_sequence, Method, PartitionError, PartitionPoint, RNG_ALGORITHM};
use crate::series::{self, SeriesError};
use crate::spectral::{spectrum_of, SpectralError, Spectrum};
pub use config::{ConfigError, RunConfig};
pub use fit::{fit_limit, FitError, FitModel, FitResult};

/// Relative change allowed in the leading Lipschitz estimates when the grid
/// is halved.
pub const LIPSCHITZ_STABILITY: f64 = 0.2;
/// Number of leading eigenfunctions whose Lipschitz estimates are compared.
pub const LIPSCHITZ_COMPARED: usize = 2;
/// `D_n = L_n exp(-2 sum a)` tolerance re-checked at report time.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Agreement required between the closed-form series and the spectral
/// constant.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;
/// Grid used by the cost-assumption validation.
const ASSUMPTION_GRID: usize = 256;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("bridge stage: {0}")]
    Bridge(#[from] BridgeError),
    #[error("spectral stage: {0}")]
    Spectral(#[from] SpectralError),
    #[error("partition stage: {0}")]
    Partition(#[from] PartitionError),
    #[error("series stage: {0}")]
    Series(#[from] SeriesError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub cost: String,
    pub beta: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub ryser_cap: usize,
    pub rng_algorithm: String,
}

impl ConfigSummary {
    fn from_config(c: &RunConfig) -> Self {
        Self {
            cost: c.cost.to_string(),
            beta: c.beta,
            grid: c.grid,
            tol: c.tol,
            max_iter: c.max_iter,
            n_min: c.n_min,
            n_max: c.n_max,
            method: c.method,
            samples: c.samples,
            seed: c.seed,
            k: c.k,
            l: c.l,
            ryser_cap: c.ryser_cap,
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSummary {
    /// `-2 int a`.
    pub gamma0: f64,
    /// `int c rho + int rho ln rho`.
    pub gamma0_entropic: f64,
    pub iterations: usize,
    pub residual: f64,
    pub marginal_residual: f64,
    pub reflection_asymmetry: f64,
    /// `gamma0` on the half grid, when that grid is large enough.
    pub gamma0_half_grid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub sigma2: f64,
    pub gap_note: Option<String>,
    pub fredholm_det: Option<f64>,
    pub conjectured_c: Option<f64>,
    pub lipschitz_estimates: Vec<f64>,
    pub unit_eigenvalue_check: f64,
    pub unit_constancy_deviation: f64,
    pub orthonormality_defect: f64,
    pub half_grid_fredholm_det: Option<f64>,
    pub half_grid_lipschitz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFit {
    /// `D_n` or `scaled`.
    pub sequence: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub dkl_limit: f64,
    pub dl_closed_form: f64,
    /// `|D^(L) - C| / C` with all eigenvalues.
    pub closed_form_vs_spectral: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    pub gap_holds: bool,
    /// `None` when the half grid is too small to compare against.
    pub lipschitz_stable: Option<bool>,
    pub cost_c2: bool,
    pub cost_within_hypotheses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: ConfigSummary,
    pub bridge: BridgeSummary,
    pub spectrum: SpectralSummary,
    pub partition: Vec<PartitionPoint>,
    /// Largest relative defect of `D_n = L_n exp(-2 sum a(i/n))`, exact
    /// methods only.
    pub identity_max_defect: Option<f64>,
    pub fits: Vec<SequenceFit>,
    pub c_spectral: Option<f64>,
    /// Intercept of the `c + c1/n` fit of `D_n`.
    pub c_fit: Option<f64>,
    /// `|c_fit - C| / C`.
    pub relative_gap: Option<f64>,
    /// `|c_fit(linear) - c_fit(quadratic)| / C` for `D_n`.
    pub model_spread: Option<f64>,
    pub series: SeriesSummary,
    pub assumptions: AssumptionFlags,
    pub warnings: Vec<String>,
    /// Violated hard invariants; empty for a healthy run.
    pub hard_failures: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// `n,method,D_n,L_n,scaled,mc_stderr,seed`, optional fields left empty.
    pub fn partition_csv(&self) -> String {
        partition_csv(&self.partition)
    }
}

/// Report plus the intermediate objects written next to it.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report: VerificationReport,
    pub bridge: BridgeSolution,
    pub spectrum: Spectrum,
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn partition_csv(points: &[PartitionPoint]) -> String {
    let mut out = String::from("n,method,D_n,L_n,scaled,mc_stderr,seed\n");
    for p in points {
        let stderr = p.mc_stderr.map(|v| v.to_string()).unwrap_or_default();
        let seed = p.seed.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", p.n, p.method, p.d_n, p.l_n, p.scaled, stderr, seed);
    }
    out
}

fn relative_to(value: f64, reference: Option<f64>) -> Option<f64> {
    reference.map(|c| (value - c).abs() / c.abs())
}

/// Runs every stage for `config` and assembles the report. Disagreement
/// with the conjectured constant is reported, never raised.
pub fn run_verify(config: &RunConfig) -> Result<VerifyOutcome, HarnessError> {
    let mut config = config.clone();
    let mut warnings = config.validate()?;
    let mut hard_failures = Vec::new();
    let cost = config.cost_spec()?;

    log::info!("bridge: {} (beta = {}) on m = {}", cost.kind(), cost.beta(), config.grid);
    let sol = bridge::solve(&cost, config.grid, config.tol, config.max_iter)?;
    let (gamma0, gamma0_entropic) = sol.gamma0_two_ways();
    let marginal_residual = sol.marginal_residual();
    if marginal_residual > 10.0 * config.tol {
        hard_failures.push(format!("bridge marginal residual {marginal_residual:e} exceeds 10*tol"));
    }
    let half = config.grid / 2;
    let half_sol = if half >= MIN_GRID {
        Some(bridge::solve(&cost, half, config.tol, config.max_iter)?)
    } else {
        warnings.push(format!("half grid {half} is below {MIN_GRID}; refinement checks skipped"));
        None
    };

    log::info!("spectrum on m = {}", config.grid);
    let spectrum = spectrum_of(&sol)?;
    let half_spectrum = half_sol.as_ref().map(spectrum_of).transpose()?;
    let gap = spectrum.gap();
    if let Some(note) = &gap.note {
        warnings.push(note.clone());
    }
    let c_spectral = spectrum.conjectured_c;
    let lipschitz_stable = half_spectrum.as_ref().map(|hs| {
        let count = LIPSCHITZ_COMPARED.min(spectrum.len()).min(hs.len());
        (0..count).all(|k| rel_diff(spectrum.lipschitz_estimates[k], hs.lipschitz_estimates[k]) <= LIPSCHITZ_STABILITY)
    });

    log::info!("partition table n = {}..={} ({})", config.n_min, config.n_max, config.method);
    let points = scaled_sequence(&sol, config.n_min, config.n_max, &config.table_settings())?;
    let identity_max_defect = config
        .method
        .is_exact()
        .then(|| points.iter().map(PartitionPoint::identity_defect).fold(0.0, f64::max));
    if let Some(d) = identity_max_defect {
        if d > IDENTITY_TOLERANCE {
            hard_failures.push(format!("D_n/L_n identity defect {d:e} exceeds {IDENTITY_TOLERANCE:e}"));
        }
    }

    let mut fits = Vec::new();
    let mut fit_of = |name: &str, values: Vec<(usize, f64)>, model: FitModel| match fit_limit(&values, model) {
        Ok(fit) => {
            fits.push(SequenceFit {
                sequence: name.to_string(),
                fit: fit.clone(),
            });
            Some(fit)
        }
        Err(e) => {
            warnings.push(format!("fit of {name} ({model:?}) skipped: {e}"));
            None
        }
    };
    let dn: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.d_n)).collect();
    let scaled: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.scaled)).collect();
    let dn_linear = fit_of("D_n", dn.clone(), FitModel::Linear);
    let dn_quadratic = fit_of("D_n", dn, FitModel::Quadratic);
    fit_of("scaled", scaled.clone(), FitModel::Linear);
    fit_of("scaled", scaled, FitModel::Quadratic);

    let c_fit = dn_linear.as_ref().map(|f| f.c_fit);
    let relative_gap = c_fit.and_then(|v| relative_to(v, c_spectral));
    let model_spread = match (&dn_linear, &dn_quadratic, c_spectral) {
        (Some(a), Some(b), Some(c)) => Some((a.c_fit - b.c_fit).abs() / c.abs()),
        _ => None,
    };

    let l = config.l.unwrap_or(spectrum.len()).min(spectrum.len());
    let lambdas = &spectrum.eigenvalues[..l];
    let dkl = series::dkl_limit(lambdas, config.k)?;
    let closed = series::dl_closed_form(lambdas)?;
    let closed_all = series::dl_closed_form(&spectrum.eigenvalues)?;
    let closed_form_vs_spectral = relative_to(closed_all.value, c_spectral);
    if let Some(d) = closed_form_vs_spectral {
        if d > CLOSED_FORM_TOLERANCE {
            hard_failures.push(format!("closed-form series differs from spectral C by {d:e}"));
        }
    }

    let assumptions = validate_assumptions(&cost, ASSUMPTION_GRID);
    warnings.extend(assumptions.warnings.iter().cloned());
    let flags = AssumptionFlags {
        gap_holds: gap.assumption_holds,
        lipschitz_stable,
        cost_c2: assumptions.smoothness == Smoothness::C2 && assumptions.c2_bounded,
        cost_within_hypotheses: assumptions.within_hypotheses(1e-12),
    };
    for f in &hard_failures {
        log::error!("{f}");
    }

    let report = VerificationReport {
        config: ConfigSummary::from_config(&config),
        bridge: BridgeSummary {
            gamma0,
            gamma0_entropic,
            iterations: sol.iterations(),
            residual: sol.residual(),
            marginal_residual,
            reflection_asymmetry: sol.reflection_asymmetry(),
            gamma0_half_grid: half_sol.as_ref().map(BridgeSolution::gamma0),
        },
        spectrum: SpectralSummary {
            eigenvalues: spectrum.eigenvalues.clone(),
            sigma2: gap.sigma2,
            gap_note: gap.note.clone(),
            fredholm_det: spectrum.fredholm_det,
            conjectured_c: c_spectral,
            lipschitz_estimates: spectrum.lipschitz_estimates.clone(),
            unit_eigenvalue_check: spectrum.unit_eigenvalue_check,
            unit_constancy_deviation: spectrum.unit_constancy_deviation,
            orthonormality_defect: spectrum.orthonormality_defect(),
            half_grid_fredholm_det: half_spectrum.as_ref().and_then(|s| s.fredholm_det),
            half_grid_lipschitz: half_spectrum.as_ref().map(|s| s.lipschitz_estimates.clone()),
        },
        partition: points,
        identity_max_defect,
        fits,
        c_spectral,
        c_fit,
        relative_gap,
        model_spread,
        series: SeriesSummary {
            k: config.k,
            l,
            dkl_limit: dkl.value,
            dl_closed_form: closed.value,
            closed_form_vs_spectral,
        },
        assumptions: flags,
        warnings,
        hard_failures,
    };
    Ok(VerifyOutcome {
        report,
        bridge: sol,
        spectrum,
    })
}

/// Writes `report.json`, `partition.csv`, `spectrum.json`,
/// `eigenfunctions.txt`, `bridge.json` and `convergence.svg` into `dir`.
pub fn emit_outputs(outcome: &VerifyOutcome, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let write = |name: &str, text: String| -> Result<PathBuf, HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    };
    let report = &outcome.report;
    let mut written = vec![
        write("report.json", report.to_json())?,
        write("partition.csv", report.partition_csv())?,
        write("convergence.svg", svg::convergence_svg(&report.partition, report.c_spectral))?,
    ];
    let spectrum_path = dir.join("spectrum.json");
    let eigen_path = dir.join("eigenfunctions.txt");
    outcome.spectrum.write(&spectrum_path, Some(&eigen_path))?;
    let bridge_path = dir.join("bridge.json");
    outcome.bridge.write_json(&bridge_path)?;
    written.extend([spectrum_path, eigen_path, bridge_path]);
    Ok(written)
}
