//! Command-line front end: config resolution, subcommand dispatch, and output files.
//!
//! Every subcommand is a thin wrapper over `nvlab_core`; this crate only parses
//! arguments, resolves an [`ExperimentConfig`], and writes CSV and manifest files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvlab_core::bounds::SeparationProfile;
use nvlab_core::cost::{optimal_order, CostParams};
use nvlab_core::demand::Pmf;
use nvlab_core::harness::{
    evaluate_distributions, generate_distributions, square_checkpoints, ExperimentConfig,
};
use nvlab_core::numfmt::format_float;
use nvlab_core::policy::PolicyKind;

/// Default output directory when `--out` is not given.
pub const OUTPUT_DIR_ENV: &str = "NVLAB_OUTPUT_DIR";

pub const SURFACE_FILE: &str = "surface.csv";
pub const DETAIL_FILE: &str = "detail.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "nvlab",
    version,
    about = "Adaptive inventory control simulation laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment and write the regret surface.
    RunExperiment(RunArgs),
    /// Report cost and separation quantities of one distribution.
    DiagnoseDistribution(DiagnoseArgs),
    /// Report separation and bound constants for a set of distributions.
    BoundsReport(BoundsArgs),
}

/// Experiment fields; each flag overrides the same key in `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any subset of the experiment keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dbar: Option<usize>,
    #[arg(long = "h-plus-b")]
    pub h_plus_b: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of sampled distributions.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Demand paths per distribution.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Horizon in periods.
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long = "gamma-insep")]
    pub gamma_insep: Option<f64>,
    /// Comma-separated subset of newsvendor, sa, updown, oracle.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to 1, 4, 9, ... up to T.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Worker threads; defaults to all cores. Does not affect results.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; falls back to $NVLAB_OUTPUT_DIR, then the current directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Comma-separated probabilities f(0), ..., f(dbar).
    #[arg(long, value_delimiter = ',', required = true)]
    pub pmf: Vec<f64>,
    /// Critical quantile; h and b follow from --h-plus-b.
    #[arg(long, conflicts_with_all = ["h", "b"])]
    pub beta: Option<f64>,
    #[arg(long = "h-plus-b", default_value_t = 10.0, conflicts_with_all = ["h", "b"])]
    pub h_plus_b: f64,
    /// Holding cost; requires --b.
    #[arg(long, requires = "b")]
    pub h: Option<f64>,
    /// Backlog cost; requires --h.
    #[arg(long, requires = "h")]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// CSV of distributions, one row of probabilities per line; replaces sampling.
    #[arg(long)]
    pub pmfs: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys accepted in a config file; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dbar: Option<usize>,
    h_plus_b: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "K")]
    k: Option<usize>,
    #[serde(rename = "L")]
    l: Option<usize>,
    #[serde(rename = "T")]
    t: Option<usize>,
    alphas: Option<Vec<f64>>,
    gamma_insep: Option<f64>,
    policies: Option<Vec<PolicyKind>>,
    seed: Option<u64>,
    checkpoints: Option<Vec<usize>>,
}

/// Resolves defaults, then the file (if any), then flags, and validates.
/// Checkpoints not given anywhere default to the squares up to `T`.
pub fn parse_config(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            toml::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let mut c = ExperimentConfig::default();
    macro_rules! resolve {
        ($field:ident, $flag:ident, $key:ident) => {
            if let Some(v) = args.$flag.clone().or(file.$key) {
                c.$field = v;
            }
        };
    }
    resolve!(dbar, dbar, dbar);
    resolve!(h_plus_b, h_plus_b, h_plus_b);
    resolve!(beta, beta, beta);
    resolve!(num_distributions, k, k);
    resolve!(num_paths, l, l);
    resolve!(horizon, t, t);
    resolve!(alphas, alphas, alphas);
    resolve!(gamma_insep, gamma_insep, gamma_insep);
    resolve!(policies, policies, policies);
    resolve!(seed, seed, seed);
    c.checkpoints = args
        .checkpoints
        .clone()
        .or(file.checkpoints)
        .unwrap_or_else(|| square_checkpoints(c.horizon));
    c.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(c)
}

/// First 16 hex digits of the SHA-256 of the probabilities as little-endian f64 bytes.
pub fn pmf_hash(f: &Pmf) -> String {
    let mut hasher = Sha256::new();
    for p in f.probs() {
        hasher.update(p.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    outputs: Outputs,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Outputs {
    surface: &'static str,
    surface_sha256: String,
    detail: &'static str,
    detail_sha256: String,
}

/// Output directory: explicit flag, then the environment variable, then `.`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs the experiment and writes the surface, detail, and manifest files into `dir`.
pub fn run_experiment_to(config: &ExperimentConfig, dir: &Path) -> CliResult<()> {
    let pmfs = generate_distributions(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let surface =
        evaluate_distributions(config, pmfs).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut surface_csv = Vec::new();
    let mut detail_csv = Vec::new();
    surface
        .write_surface_csv(&mut surface_csv)
        .expect("writing to memory");
    surface
        .write_detail_csv(&mut detail_csv)
        .expect("writing to memory");
    let manifest = Manifest {
        tool: "nvlab",
        version: env!("CARGO_PKG_VERSION"),
        outputs: Outputs {
            surface: SURFACE_FILE,
            surface_sha256: sha256_hex(&surface_csv),
            detail: DETAIL_FILE,
            detail_sha256: sha256_hex(&detail_csv),
        },
        config,
    };
    let manifest = toml::to_string(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;

    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, bytes) in [
        (SURFACE_FILE, &surface_csv[..]),
        (DETAIL_FILE, &detail_csv[..]),
        (MANIFEST_FILE, manifest.as_bytes()),
    ] {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}

/// `quantity,value` rows describing one distribution.
pub fn diagnose<W: Write>(f: &Pmf, params: &CostParams, mut w: W) -> io::Result<()> {
    let beta = params.beta();
    let (y_star, q_star) = optimal_order(params, f);
    let profile = SeparationProfile::new(f, beta);
    let rows = [
        ("dbar", f.dbar().to_string()),
        ("beta", format_float(beta)),
        ("h", format_float(params.h())),
        ("b", format_float(params.b())),
        ("eps_f", format_float(f.eps_f())),
        ("y_star", y_star.to_string()),
        ("q_star", format_float(q_star)),
        ("alpha", format_float(profile.alpha)),
        ("gamma", format_float(profile.gamma)),
        ("delta", format_float(profile.delta)),
        ("kappa", format_float(profile.kappa)),
        ("tau", fmt_opt(profile.tau)),
        (
            "theorem1",
            fmt_opt(profile.theorem1_bound(params, f).map(format_float)),
        ),
    ];
    writeln!(w, "quantity,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

/// `k,f_hash,delta,kappa,tau,theorem1` rows, `k` counted from 0.
pub fn bounds_report<W: Write>(pmfs: &[Pmf], params: &CostParams, mut w: W) -> io::Result<()> {
    writeln!(w, "k,f_hash,delta,kappa,tau,theorem1")?;
    for (k, f) in pmfs.iter().enumerate() {
        let p = SeparationProfile::new(f, params.beta());
        writeln!(
            w,
            "{k},{},{},{},{},{}",
            pmf_hash(f),
            format_float(p.delta),
            format_float(p.kappa),
            fmt_opt(p.tau),
            fmt_opt(p.theorem1_bound(params, f).map(format_float))
        )?;
    }
    Ok(())
}

/// Parses one distribution per nonblank line of comma-separated probabilities.
pub fn parse_pmf_rows(text: &str) -> CliResult<Vec<Pmf>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Validation(format!("line {}: {e}", i + 1)))?;
            Pmf::try_from(row).map_err(|e| CliError::Validation(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn diagnose_params(args: &DiagnoseArgs) -> CliResult<CostParams> {
    let params = match (args.h, args.b) {
        (Some(h), Some(b)) => CostParams::new(h, b),
        _ => CostParams::from_beta(args.h_plus_b, args.beta.unwrap_or(0.5)),
    };
    params.map_err(|e| CliError::Validation(e.to_string()))
}

/// Executes a parsed command, writing any report to `stdout`.
pub fn run<W: Write>(cli: Cli, mut stdout: W) -> CliResult<()> {
    match cli.command {
        Command::RunExperiment(args) => {
            let config = parse_config(&args.config)?;
            let dir = output_dir(args.out.as_deref());
            match args.threads {
                Some(0) => Err(CliError::Validation(
                    "invalid threads: must be at least 1".into(),
                )),
                Some(n) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    pool.install(|| run_experiment_to(&config, &dir))
                }
                None => run_experiment_to(&config, &dir),
            }
        }
        Command::DiagnoseDistribution(args) => {
            let params = diagnose_params(&args)?;
            let f = Pmf::try_from(args.pmf).map_err(|e| CliError::Validation(e.to_string()))?;
            diagnose(&f, &params, &mut stdout).map_err(|e| CliError::Runtime(e.to_string()))
        }
        Command::BoundsReport(args) => {
            let config = parse_config(&args.config)?;
            let params = config
                .params()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let pmfs = match &args.pmfs {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                    parse_pmf_rows(&text)?
                }
                None => {
                    generate_distributions(&config).map_err(|e| CliError::Runtime(e.to_string()))?
                }
            };
            let mut buf = Vec::new();
            bounds_report(&pmfs, &params, &mut buf).expect("writing to memory");
            match &args.out {
                Some(path) => fs::write(path, buf).map_err(io_err(path)),
                None => stdout
                    .write_all(&buf)
                    .map_err(|e| CliError::Runtime(e.to_string())),
            }
        }
    }
}
