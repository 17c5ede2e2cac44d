use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mallows_core::bridge::{self, BridgeSolution};
use mallows_core::harness::{self, HarnessError, RunConfig};
use mallows_core::partition::scaled_sequence;
use mallows_core::series::{self, TruncationResult};
use mallows_core::spectral::{spectrum_of, Spectrum};

#[derive(Parser)]
#[command(name = "mallows", version, about = "Mallows partition functions versus the Schrödinger-bridge Fredholm constant")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the Schrödinger potential and write bridge.json.
    Bridge(Common),
    /// Eigendecompose the centered bridge kernel and write spectrum.json.
    Spectrum(Common),
    /// Exact or Monte-Carlo partition table, written to partition.csv.
    Partition(Common),
    /// Truncated series and closed form for the spectrum, written to series.json.
    Series(Common),
    /// Full pipeline with fits; writes every output file.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// quadratic, cosine, foot-rule or table:<path>.
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Quadrature grid size m.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// ryser, brute or mc.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series truncation order (rounded down to even).
    #[arg(long = "K")]
    k: Option<usize>,
    /// Number of eigenvalues in the series checks.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raise the Ryser size cap.
    #[arg(long)]
    ryser_cap: Option<usize>,
    /// Reuse a bridge.json instead of solving.
    #[arg(long)]
    bridge: Option<PathBuf>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, HarnessError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let overrides: [(&str, Option<String>); 14] = [
            ("cost", self.cost.clone()),
            ("beta", self.beta.map(|v| v.to_string())),
            ("grid", self.grid.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("max_iter", self.max_iter.map(|v| v.to_string())),
            ("n_min", self.n_min.map(|v| v.to_string())),
            ("n_max", self.n_max.map(|v| v.to_string())),
            ("method", self.method.clone()),
            ("samples", self.samples.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("K", self.k.map(|v| v.to_string())),
            ("L", self.l.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("ryser_cap", self.ryser_cap.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn load_bridge(&self, config: &RunConfig) -> Result<BridgeSolution, HarnessError> {
        match &self.bridge {
            Some(path) => Ok(BridgeSolution::read_json(path)?),
            None => Ok(bridge::solve(&config.cost_spec()?, config.grid, config.tol, config.max_iter)?),
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: String) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn print_bridge(sol: &BridgeSolution) {
    let (g1, g2) = sol.gamma0_two_ways();
    println!("m                 {}", sol.m());
    println!("iterations        {}", sol.iterations());
    println!("marginal residual {:.3e}", sol.marginal_residual());
    println!("Gamma_0 (-2 int a)        {g1:.15}");
    println!("Gamma_0 (int c rho + ent) {g2:.15}");
}

fn print_spectrum(spec: &Spectrum) {
    println!("unit eigenvalue   {:.15}", spec.unit_eigenvalue_check);
    for (k, l) in spec.eigenvalues.iter().enumerate() {
        println!("lambda_{k:<3} {l:+.15e}  Lip {:.4}", spec.lipschitz_estimates[k]);
    }
    println!("sigma^2           {:.15}", spec.sigma2);
    match (spec.fredholm_det, spec.conjectured_c) {
        (Some(d), Some(c)) => {
            println!("det(I - T^2)      {d:.15}");
            println!("C                 {c:.15}");
        }
        _ => println!("gap assumption fails; determinant not reported"),
    }
}

#[derive(Serialize)]
struct SeriesOutput {
    limit: TruncationResult,
    closed_form: TruncationResult,
    finite_n: Vec<FiniteN>,
}

#[derive(Serialize)]
struct FiniteN {
    n: usize,
    d_nk: TruncationResult,
    d_nkl: TruncationResult,
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Bridge(args) => {
            let config = args.run_config()?;
            let sol = args.load_bridge(&config)?;
            create_dir(&config.out)?;
            sol.write_json(&config.out.join("bridge.json"))?;
            print_bridge(&sol);
        }
        Command::Spectrum(args) => {
            let config = args.run_config()?;
            let sol = args.load_bridge(&config)?;
            let spec = spectrum_of(&sol)?;
            create_dir(&config.out)?;
            spec.write(&config.out.join("spectrum.json"), Some(&config.out.join("eigenfunctions.txt")))?;
            print_spectrum(&spec);
        }
        Command::Partition(args) => {
            let config = args.run_config()?;
            let sol = args.load_bridge(&config)?;
            let points = scaled_sequence(&sol, config.n_min, config.n_max, &config.table_settings())?;
            create_dir(&config.out)?;
            let csv = harness::partition_csv(&points);
            write_text(&config.out.join("partition.csv"), csv.clone())?;
            print!("{csv}");
        }
        Command::Series(args) => {
            let config = args.run_config()?;
            let sol = args.load_bridge(&config)?;
            let spec = spectrum_of(&sol)?;
            let l = config.l.unwrap_or(spec.len()).min(spec.len());
            let lambdas = &spec.eigenvalues[..l];
            let limit = series::dkl_limit(lambdas, config.k)?;
            let closed_form = series::dl_closed_form(lambdas)?;
            let mut finite_n = Vec::new();
            for n in config.n_min..=config.n_max.min(series::EXPANSION_CAP) {
                let k = config.k.min(n);
                finite_n.push(FiniteN {
                    n,
                    d_nk: series::dnk_exact(&series::centered_unit_density(&sol, n), k)?,
                    d_nkl: series::dnkl_exact(&sol, &spec, n, k, l)?,
                });
            }
            let out = SeriesOutput {
                limit,
                closed_form,
                finite_n,
            };
            create_dir(&config.out)?;
            let text = serde_json::to_string_pretty(&out).expect("series output serializes") + "\n";
            write_text(&config.out.join("series.json"), text)?;
            println!("D_K^(L)  (K = {}, L = {l})  {:.15}", config.k, out.limit.value);
            println!("D^(L)    (L = {l})          {:.15}", out.closed_form.value);
            for f in &out.finite_n {
                println!("n = {}  D_nK {:.12}  D_nK^(L) {:.12}", f.n, f.d_nk.value, f.d_nkl.value);
            }
        }
        Command::Verify(args) => {
            let config = args.run_config()?;
            let outcome = harness::run_verify(&config)?;
            harness::emit_outputs(&outcome, &config.out)?;
            let r = &outcome.report;
            println!("Gamma_0           {:.15} / {:.15}", r.bridge.gamma0, r.bridge.gamma0_entropic);
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.12}"));
            println!("C (spectral)      {}", show(r.c_spectral));
            for f in &r.fits {
                println!(
                    "fit {:<7} {:<14} C_fit {:.12}  rms {:.3e}",
                    f.sequence,
                    serde_json::to_value(f.fit.model).expect("model serializes").as_str().unwrap_or(""),
                    f.fit.c_fit,
                    f.fit.residual
                );
            }
            println!("relative gap      {}", show(r.relative_gap));
            println!("model spread      {}", show(r.model_spread));
            for w in &r.warnings {
                println!("warning: {w}");
            }
            println!("outputs in {}", config.out.display());
            if !r.hard_failures.is_empty() {
                for f in &r.hard_failures {
                    eprintln!("invariant violated: {f}");
                }
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
