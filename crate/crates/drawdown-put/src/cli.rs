//! Command-line front end: `price`, `barrier`, `sweep`, and `verify`
//! subcommands over the pricing library.
//!
//! Inputs are on the asset-price scale (`--s`, `--smax`, `--cap-ratio`) and
//! converted to logs internally. Every model flag can also come from a
//! `key=value` config file passed with `--config`; explicit flags win over the
//! file, and the `DRAWDOWN_PUT_SEED` environment variable overrides only the
//! built-in default seed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::figures;
use crate::mc::McConfig;
use crate::model::ModelParams;
use crate::pricer::PriceModel;
use crate::verify;

#[derive(Parser)]
#[command(
    name = "drawdown-put",
    version,
    about = "Perpetual American put capped by a drawdown epoch: closed-form prices, the optimal exercise barrier, CSV sweeps, and a verification suite"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price the option at a state (s, smax) and report the exercise rule
    Price(PriceArgs),
    /// Solve the optimal exercise barrier and report the residual
    Barrier(ModelArgs),
    /// Write a CSV sweep for a named figure or a custom state grid
    Sweep(SweepArgs),
    /// Run the numerical verification suite and print a pass/fail table
    Verify(VerifyArgs),
}

/// Model and contract flags shared by every subcommand. All optional; defaults
/// are the figure-caption parameters.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Riskless rate (> 0)
    #[arg(long)]
    r: Option<f64>,
    /// Diffusion volatility (> 0)
    #[arg(long)]
    sigma: Option<f64>,
    /// Jump intensity (>= 0; 0 switches to the pure-diffusion branch)
    #[arg(long)]
    lambda: Option<f64>,
    /// Jump-size rate of the exponential downward jumps (> 0 when lambda > 0)
    #[arg(long)]
    rho: Option<f64>,
    /// Strike in asset-price units
    #[arg(long = "K")]
    strike: Option<f64>,
    /// Drawdown cap as an asset ratio smax/s (> 1); the log threshold is its log
    #[arg(long = "cap-ratio")]
    cap_ratio: Option<f64>,
    /// key=value file supplying any of the flags; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Current asset price
    #[arg(long)]
    s: Option<f64>,
    /// Running-maximum asset price
    #[arg(long)]
    smax: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Figure id; see `sweep --help` for the list
    #[arg(long, long_help = figure_help())]
    figure: Option<String>,
    /// Comma-separated ascending s grid for a custom sweep
    #[arg(long = "s-grid", value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    /// Comma-separated ascending smax grid for a custom sweep
    #[arg(long = "smax-grid", value_delimiter = ',')]
    smax_grid: Option<Vec<f64>>,
    /// Output path (defaults to <figure>.csv, or sweep.csv for custom grids)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Skip the Monte Carlo comparison (the only slow part)
    #[arg(long)]
    quick: bool,
    /// Seed for the Monte Carlo comparison
    #[arg(long)]
    seed: Option<u64>,
    /// Paths per Monte Carlo estimate
    #[arg(long = "n-paths")]
    n_paths: Option<usize>,
    /// Euler time step
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon cap for the simulation
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Simulation worker threads
    #[arg(long)]
    workers: Option<usize>,
}

fn figure_help() -> String {
    format!("Figure id, one of: {}", figures::FIGURE_IDS.join(", "))
}

/// Entry point used by the binary; parses arguments, runs the subcommand, and
/// maps failures to a nonzero exit code with a message on the error stream.
pub fn main() -> ExitCode {
    // Rust ignores SIGPIPE by default, turning a downstream `| head` into a
    // write error and a panic; restore the usual silent death instead.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Price(args) => cmd_price(args),
        Command::Barrier(args) => cmd_barrier(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Settings resolved from flags, the optional config file, and defaults.
struct Resolved {
    params: ModelParams,
    strike: f64,
    drawdown_c: f64,
    file: FileConfig,
}

fn resolve(model: &ModelArgs) -> Result<Resolved, String> {
    let file = match &model.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let r = pick(model.r, file.f64("r")?, 0.1);
    let sigma = pick(model.sigma, file.f64("sigma")?, 0.2);
    let lambda = pick(model.lambda, file.f64("lambda")?, 0.2);
    let rho = pick(model.rho, file.f64("rho")?, 3.0);
    let strike = pick(model.strike, file.f64("K")?, 100.0);
    let cap_ratio = pick(model.cap_ratio, file.f64("cap-ratio")?, 1.2);
    if !(cap_ratio.is_finite() && cap_ratio > 1.0) {
        return Err(format!("cap-ratio = {cap_ratio} must exceed 1"));
    }
    let params = ModelParams::new(r, sigma, lambda, rho).map_err(|e| e.to_string())?;
    Ok(Resolved { params, strike, drawdown_c: cap_ratio.ln(), file })
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn cmd_price(args: PriceArgs) -> Result<(), String> {
    let resolved = resolve(&args.model)?;
    let s = pick_required(args.s, resolved.file.f64("s")?, "--s")?;
    let smax = pick_required(args.smax, resolved.file.f64("smax")?, "--smax")?;
    if !(s.is_finite() && s > 0.0) || !(smax.is_finite() && smax > 0.0) {
        return Err(format!("prices must be positive, got s = {s}, smax = {smax}"));
    }
    let model = PriceModel::new(&resolved.params, resolved.strike, resolved.drawdown_c)
        .map_err(|e| e.to_string())?;
    let (value, regime) = model.value_with_regime(s.ln(), smax.ln()).map_err(|e| e.to_string())?;
    println!("price = {value:.12}");
    println!("regime = {regime}");
    match model.exercise_boundary(smax.ln()) {
        Some(b) => println!("boundary = {b:.12} (S = {:.12})", b.exp()),
        None => println!("boundary = none"),
    }
    println!("a_star = {:.12} (S = {:.12})", model.a_star(), model.a_star().exp());
    Ok(())
}

fn pick_required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, String> {
    flag.or(file).ok_or_else(|| format!("missing required {name} (flag or config key)"))
}

fn cmd_barrier(args: ModelArgs) -> Result<(), String> {
    let resolved = resolve(&args)?;
    let model = PriceModel::new(&resolved.params, resolved.strike, resolved.drawdown_c)
        .map_err(|e| e.to_string())?;
    println!("a_star = {:.12}", model.a_star());
    println!("exercise_level = {:.12}", model.a_star().exp());
    println!("residual = {:.3e}", model.barrier_residual(model.a_star()));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let resolved = resolve(&args.model)?;
    let custom = args.s_grid.is_some() || args.smax_grid.is_some();
    if args.figure.is_some() == custom {
        return Err("pass either --figure or both --s-grid and --smax-grid".to_string());
    }
    let (csv, default_name) = if let Some(figure) = &args.figure {
        let csv = figures::figure_csv(figure, &resolved.params, resolved.strike, resolved.drawdown_c)
            .map_err(|e| e.to_string())?;
        (csv, format!("{figure}.csv"))
    } else {
        let s_grid = args.s_grid.ok_or("custom sweeps need --s-grid")?;
        let smax_grid = args.smax_grid.ok_or("custom sweeps need --smax-grid")?;
        let csv = figures::custom_csv(&resolved.params, resolved.strike, resolved.drawdown_c, &s_grid, &smax_grid)
            .map_err(|e| e.to_string())?;
        (csv, "sweep.csv".to_string())
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from(default_name));
    fs::write(&out, csv.as_bytes()).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    println!("wrote {} ({} data rows)", out.display(), csv.lines().count().saturating_sub(1));
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), String> {
    let resolved = resolve(&args.model)?;
    let mc_cfg = mc_config(&args, &resolved)?;
    let checks = if args.quick {
        verify::run(true)
    } else {
        verify::run_with_mc_config(&mc_cfg)
    };
    let mut failed = 0usize;
    let mut table = String::new();
    for check in &checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!check.passed);
        let _ = writeln!(table, "{tag}  {} -- {}", check.name, check.detail);
    }
    print!("{table}");
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        let noun = if failed == 1 { "check" } else { "checks" };
        Err(format!("{failed} verification {noun} failed"))
    } else {
        Ok(())
    }
}

fn mc_config(args: &VerifyArgs, resolved: &Resolved) -> Result<McConfig, String> {
    let defaults = McConfig::default();
    let env_seed = match std::env::var("DRAWDOWN_PUT_SEED") {
        Ok(text) => Some(
            text.parse::<u64>()
                .map_err(|_| format!("DRAWDOWN_PUT_SEED = {text:?} is not a 64-bit unsigned integer"))?,
        ),
        Err(_) => None,
    };
    let seed = args
        .seed
        .or(resolved.file.u64("seed")?)
        .or(env_seed)
        .unwrap_or(defaults.seed);
    let cfg = McConfig {
        n_paths: pick(args.n_paths, resolved.file.usize("n-paths")?, defaults.n_paths),
        dt: pick(args.dt, resolved.file.f64("dt")?, defaults.dt),
        t_max: pick(args.t_max, resolved.file.f64("t-max")?, defaults.t_max),
        seed,
        n_workers: pick(args.workers, resolved.file.usize("workers")?, defaults.n_workers),
    };
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(format!("dt = {} must be positive", cfg.dt));
    }
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(format!("t-max = {} must be positive", cfg.t_max));
    }
    if cfg.n_paths == 0 || cfg.n_workers == 0 {
        return Err("n-paths and workers must be at least 1".to_string());
    }
    Ok(cfg)
}

/// `key=value` settings mirroring the flags; `#` starts a comment.
#[derive(Debug, Default)]
struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    const KEYS: [&'static str; 13] = [
        "r", "sigma", "lambda", "rho", "K", "cap-ratio", "s", "smax", "seed", "n-paths", "dt",
        "t-max", "workers",
    ];

    fn load(path: &PathBuf) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key=value, got {raw:?}", path.display(), number + 1))?;
            let key = key.trim();
            if !Self::KEYS.contains(&key) {
                return Err(format!(
                    "{}:{}: unknown key {key:?} (known: {})",
                    path.display(),
                    number + 1,
                    Self::KEYS.join(", ")
                ));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.parse(key)
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, String> {
        self.parse(key)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, String> {
        self.parse(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key {key} has unparseable value {text:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing_and_precedence() {
        let dir = std::env::temp_dir().join("ddput-cli-unit");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ok.conf");
        fs::write(&path, "r = 0.15\nsigma=0.3 # vol\n\n# comment\nseed=7\n").unwrap();
        let file = FileConfig::load(&path).unwrap();
        assert_eq!(file.f64("r").unwrap(), Some(0.15));
        assert_eq!(file.f64("sigma").unwrap(), Some(0.3));
        assert_eq!(file.u64("seed").unwrap(), Some(7));
        assert_eq!(file.f64("lambda").unwrap(), None);
        assert_eq!(pick(Some(0.5), file.f64("r").unwrap(), 0.1), 0.5);
        assert_eq!(pick(None, file.f64("r").unwrap(), 0.1), 0.15);
        assert_eq!(pick(None::<f64>, None, 0.1), 0.1);

        let bad = dir.join("bad.conf");
        fs::write(&bad, "strike=100\n").unwrap();
        assert!(FileConfig::load(&bad).unwrap_err().contains("unknown key"));
        let unparseable = dir.join("unparseable.conf");
        fs::write(&unparseable, "r=fast\n").unwrap();
        let file = FileConfig::load(&unparseable).unwrap();
        assert!(file.f64("r").unwrap_err().contains("unparseable"));
    }

    #[test]
    fn resolver_applies_defaults_and_validates() {
        let args = ModelArgs { r: None, sigma: None, lambda: None, rho: None, strike: None, cap_ratio: None, config: None };
        let resolved = resolve(&args).unwrap();
        assert_eq!(resolved.params.r(), 0.1);
        assert_eq!(resolved.strike, 100.0);
        assert!((resolved.drawdown_c - 1.2f64.ln()).abs() < 1e-15);
        let bad = ModelArgs { cap_ratio: Some(0.9), ..args };
        match resolve(&bad) {
            Err(message) => assert!(message.contains("cap-ratio")),
            Ok(_) => panic!("cap-ratio below 1 must be rejected"),
        }
    }
}
