//! Command line front end: kernel certification, path simulation, Riccati
//! solves, and Monte Carlo validation of the exponential-affine Laplace
//! transform.
//!
//! Exit codes: 0 on success/pass, 2 when a validation check fails, 1 on any
//! other error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use volterra::config::FileConfig;
use volterra::harness::{validate_affine, PathEnsemble, ValidationSetup};
use volterra::kernels::{holder_check, holder_grid, Kernel, TimeChange};
use volterra::positivity::check_preserves_nonnegativity;
use volterra::riccati::{fractional_riccati_check, laplace_transform};
use volterra::scheme::{DomainMode, Variant};

#[derive(Parser)]
#[command(name = "volterra", about = "Stochastic Volterra equation toolkit", version)]
struct Cli {
    /// Sectioned key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Gamma_l certificates of the configured kernel.
    CheckKernel(CheckKernelArgs),
    /// Simulate an ensemble of paths and write them as CSV.
    Simulate(SimulateArgs),
    /// Solve the Riccati-Volterra equation and the Laplace transform.
    Riccati(RiccatiArgs),
    /// Full pipeline: simulate, Monte Carlo Laplace, Riccati comparison.
    Validate,
    /// Kernel regularity fit and optional path-regularity statistics.
    Holder(HolderArgs),
}

#[derive(Args)]
struct CheckKernelArgs {
    #[arg(long, default_value_t = 6)]
    max_l: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    substeps: Option<usize>,
    /// hat | check
    #[arg(long)]
    variant: Option<String>,
    /// enforce | off
    #[arg(long)]
    domain_mode: Option<String>,
    /// Output CSV path (default `<out-dir>/paths.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RiccatiArgs {
    /// Fractional-kernel shortcut: overrides the configured kernel.
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant source value (componentwise).
    #[arg(long)]
    f_const: Option<f64>,
    #[arg(long)]
    grid_steps: Option<usize>,
    /// Output CSV path (default `<out-dir>/psi.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HolderArgs {
    /// Geometric gap levels in the kernel pair grid.
    #[arg(long, default_value_t = 10)]
    gaps: usize,
    /// Base points per gap level.
    #[arg(long, default_value_t = 6)]
    bases: usize,
    #[arg(long, default_value_t = 96)]
    quad_resolution: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Path-statistic exponents (comma separated); runs the scheme when set.
    #[arg(long)]
    exponents: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<FileConfig> {
    let path = cli.config.as_ref().ok_or_else(|| anyhow!("--config <file> is required"))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading configuration {}", path.display()))?;
    Ok(FileConfig::parse(&text)?)
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut file = fs::File::create(path)
        .with_context(|| format!("creating output {}", path.display()))?;
    file.write_all(contents.as_bytes())?;
    Ok(())
}

/// Returns whether the invoked check passed (exit 0) or failed (exit 2).
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::CheckKernel(args) => check_kernel(cli, args),
        Command::Simulate(args) => simulate(cli, args).map(|()| true),
        Command::Riccati(args) => riccati(cli, args).map(|()| true),
        Command::Validate => validate(cli),
        Command::Holder(args) => holder(cli, args).map(|()| true),
    }
}

fn check_kernel(cli: &Cli, args: &CheckKernelArgs) -> Result<bool> {
    let config = load_config(cli)?;
    let kernel = config.kernel()?;
    let seed = cli.seed.unwrap_or(0);
    let report = check_preserves_nonnegativity(
        &kernel,
        args.horizon,
        args.max_l,
        args.samples,
        seed,
        args.tolerance,
    )?;
    let witness_times: Vec<f64> = report
        .witness
        .as_ref()
        .map(|w| w.times().to_vec())
        .unwrap_or_default();
    let json = serde_json::json!({
        "passed": report.passed,
        "min_value": report.min_value,
        "witness_times": witness_times,
        "orders_tested": report.max_order_tested,
        "tuples_tested": report.tuples_tested,
        "tolerance": report.tolerance,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    write_output(&cli.out_dir.join("check_kernel.json"), &serde_json::to_string_pretty(&json)?)?;
    Ok(report.passed)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let config = load_config(cli)?;
    let kernel = config.kernel()?;
    let (model, _params, x0) = config.model()?;
    let domain = config.domain()?;
    let (mut scheme, mut paths) = config.scheme()?;
    if let Some(p) = args.paths {
        paths = p;
    }
    if let Some(n) = args.steps {
        scheme.n_steps = n;
    }
    if let Some(m) = args.substeps {
        scheme.inner_substeps = m.max(1);
    }
    if let Some(v) = &args.variant {
        scheme.variant = match v.as_str() {
            "hat" => Variant::Hat,
            "check" => Variant::Check,
            other => bail!("unknown variant '{other}' (expected hat|check)"),
        };
    }
    if let Some(v) = &args.domain_mode {
        scheme.domain_mode = match v.as_str() {
            "enforce" => DomainMode::Enforce,
            "off" => DomainMode::Off,
            other => bail!("unknown domain mode '{other}' (expected enforce|off)"),
        };
    }
    if let Some(seed) = cli.seed {
        scheme.seed = seed;
    }

    let ensemble =
        PathEnsemble::generate(&kernel, &model, Some(&domain), &x0, &scheme, paths)?;
    let mut csv = String::from("path_id,t,component_index,value\n");
    for (p, values) in ensemble.paths.iter().enumerate() {
        for (k, &t) in ensemble.grid.iter().enumerate() {
            for c in 0..ensemble.dim {
                let v = values[k * ensemble.dim + c];
                csv.push_str(&format!("{p},{t},{c},{v}\n"));
            }
        }
    }
    let out = args.out.clone().unwrap_or_else(|| cli.out_dir.join("paths.csv"));
    write_output(&out, &csv)?;
    eprintln!(
        "wrote {} paths x {} steps to {} (raw violations below -1e-9: {})",
        paths,
        scheme.n_steps,
        out.display(),
        ensemble.raw_violations
    );
    Ok(())
}

fn riccati(cli: &Cli, args: &RiccatiArgs) -> Result<()> {
    let config = load_config(cli)?;
    let kernel = match args.alpha {
        Some(alpha) => Kernel::fractional(alpha)?,
        None => config.kernel()?,
    };
    let (_model, params, x0) = config.model()?;
    let params = params.ok_or_else(|| anyhow!("the riccati solver needs an affine model"))?;
    let horizon = config.scheme().map(|(s, _)| s.horizon).unwrap_or(1.0);
    let (mut rconfig, mut f_const, cfg_alpha) = config.riccati(horizon)?;
    if let Some(n) = args.grid_steps {
        rconfig = volterra::riccati::RiccatiConfig::uniform(n, horizon);
    }
    if let Some(f) = args.f_const {
        f_const = vec![f; params.b0.len()];
    }
    if f_const.len() != params.b0.len() {
        bail!("f_const dimension {} does not match the model ({})", f_const.len(), params.b0.len());
    }

    let f = |_s: f64, out: &mut [f64]| out.copy_from_slice(&f_const);
    let solution = laplace_transform(&kernel, &params, &x0, f, horizon, &rconfig)?;

    let mut csv = String::from("t,component,psi\n");
    for (i, &t) in solution.grid.iter().enumerate() {
        for c in 0..solution.dim {
            let v = solution.psi_at(i)[c];
            csv.push_str(&format!("{t},{c},{v}\n"));
        }
    }
    let out = args.out.clone().unwrap_or_else(|| cli.out_dir.join("psi.csv"));
    write_output(&out, &csv)?;

    let mut json = serde_json::json!({
        "laplace_value": solution.laplace_value,
        "iterations": solution.iterations_used,
        "residual": solution.residual,
        "grid_steps": solution.grid.len() - 1,
    });
    // optional independent fractional cross-check
    if let Some(alpha) = args.alpha.or(cfg_alpha) {
        let (_phi, value) = fractional_riccati_check(
            alpha,
            &TimeChange::Identity,
            &params,
            &x0,
            f,
            horizon,
            rconfig.grid.len() - 1,
        )?;
        json["fractional_check_value"] = serde_json::json!(value);
    }
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn validate(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    let kernel = config.kernel()?;
    let (_model, params, x0) = config.model()?;
    let params = params.ok_or_else(|| anyhow!("validation needs an affine model"))?;
    let (mut scheme, paths) = config.scheme()?;
    if let Some(seed) = cli.seed {
        scheme.seed = seed;
    }
    let horizon = scheme.horizon;
    let (rconfig, f_const, _alpha) = config.riccati(horizon)?;

    let setup = ValidationSetup {
        kernel,
        params,
        x0,
        f_const,
        horizon,
        n_paths: paths,
        scheme,
        riccati_steps: rconfig.grid.len() - 1,
    };
    let report = validate_affine(&setup)?;
    let passed = report.z_score.abs() <= 3.0;
    let json = serde_json::json!({
        "mc_estimate": report.mc_estimate,
        "mc_stderr": report.mc_stderr,
        "riccati_value": report.riccati_value,
        "z_score": report.z_score,
        "invariance_violations": report.invariance_violations,
        "raw_violations": report.raw_violations,
        "runtime_ms": report.runtime_ms,
        "passed": passed,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    write_output(&cli.out_dir.join("validate.json"), &serde_json::to_string_pretty(&json)?)?;
    Ok(passed)
}

fn holder(cli: &Cli, args: &HolderArgs) -> Result<()> {
    let config = load_config(cli)?;
    let kernel = config.kernel()?;
    let grid = holder_grid(args.horizon, args.gaps, args.bases);
    let check = holder_check(&kernel, args.horizon, &grid, args.quad_resolution)?;
    let mut json = serde_json::json!({
        "pairs_used": check.pairs_used,
        "worst_pair": { "t": check.worst_pair.0, "s": check.worst_pair.1 },
        "worst_ratio": check.worst_ratio,
    });
    if let Some(fit) = &check.fit {
        json["eta_hat"] = serde_json::json!(fit.eta);
        json["gamma_hat"] = serde_json::json!(fit.gamma);
    }

    if let Some(spec) = &args.exponents {
        let exponents: Vec<f64> = spec
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("bad exponent '{p}'")))
            .collect::<Result<_>>()?;
        let (mut scheme, paths) = config.scheme()?;
        if let Some(seed) = cli.seed {
            scheme.seed = seed;
        }
        let (model, _params, x0) = config.model()?;
        let domain = config.domain().ok();
        let ensemble =
            PathEnsemble::generate(&kernel, &model, domain.as_ref(), &x0, &scheme, paths)?;
        let stats = ensemble.holder_stats(&exponents)?;
        json["path_stats"] = serde_json::json!(stats
            .iter()
            .map(|s| serde_json::json!({
                "exponent": s.exponent,
                "median": s.median,
                "p95": s.p95,
            }))
            .collect::<Vec<_>>());
    }
    println!("{}", serde_json::to_string_pretty(&json)?);
    write_output(&cli.out_dir.join("holder.json"), &serde_json::to_string_pretty(&json)?)?;
    Ok(())
}
