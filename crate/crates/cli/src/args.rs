use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable consulted for the worker count when `--threads` is
/// absent.
pub const THREADS_ENV: &str = "SASAKI_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sasaki", version, about = "Weighted Sasakian structures on odd spheres")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Complex dimension parameter; the sphere is S^(2n+1).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated positive weights, e.g. `1,2` or `1/3,1`.
    #[arg(long, global = true)]
    pub weights: Option<String>,
    #[arg(long = "fd-step", global = true, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[arg(long = "quad-order", global = true, default_value_t = 64)]
    pub quad_order: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores, or $SASAKI_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,
    /// File of `key=value` lines mirroring the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Chart,
    Sphere,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Identities,
    Curvature,
    Futaki,
    Variational,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradientArg {
    /// Central differences of the energy in coefficient space.
    Fd,
    FirstVariation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contact-metric identities at sampled points.
    StructureCheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Finite-difference scalar curvature against the closed form.
    Curvature {
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Closed-form and numerical volume.
    Volume,
    /// Futaki invariant along `b`.
    Futaki {
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Use Monte Carlo with this many samples for the sphere route.
        #[arg(long = "mc-samples")]
        mc_samples: Option<usize>,
    },
    /// CSC / Einstein classification of the scaled structure.
    Classify {
        /// Transverse homothety scale.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Energy descent over torus-invariant deformations (n = 1).
    Flow {
        /// Amplitude of the initial `cos(pi sigma)` perturbation.
        #[arg(long, default_value_t = 0.05)]
        perturb: f64,
        #[arg(long = "basis-size", default_value_t = 8)]
        basis_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = GradientArg::Fd)]
        gradient: GradientArg,
        /// Write the JSON flow report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the final profile curves as CSV here.
        #[arg(long = "profile-csv")]
        profile_csv: Option<PathBuf>,
        #[arg(long = "csv-rows", default_value_t = 101)]
        csv_rows: usize,
    },
    /// Run acceptance suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

/// Parses `args`; when `--config` is given, appends the file's settings for
/// every flag not already present on the command line and parses again.
pub fn parse(args: Vec<OsString>) -> Result<Cli, CliError> {
    let cli = Cli::try_parse_from(&args).map_err(CliError::Clap)?;
    let Some(path) = cli.global.config.clone() else {
        return Ok(cli);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("--config: cannot read {}: {e}", path.display())))?;
    let extra = config_tokens(&text, &args)?;
    if extra.is_empty() {
        return Ok(cli);
    }
    let mut merged = args;
    merged.extend(extra);
    Cli::try_parse_from(merged).map_err(CliError::Clap)
}

fn config_tokens(text: &str, args: &[OsString]) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("--config: line {} is not key=value", lineno + 1)));
        };
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(CliError::Usage("--config: nested config files are not supported".into()));
        }
        let flag = format!("--{key}");
        let on_command_line = args.iter().any(|a| {
            a.to_str().is_some_and(|a| a == flag || a.starts_with(&format!("{flag}=")))
        });
        if !on_command_line {
            out.push(OsString::from(format!("{flag}={}", value.trim())));
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    /// Invalid argument value; exit code 2.
    Usage(String),
}

/// Comma-separated reals; each entry is a decimal or an exact ratio `p/q`
/// of integers, converted with a single correctly rounded division.
pub fn parse_reals(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || CliError::Usage(format!("{flag}: cannot parse '{item}'"));
            let v = match item.split_once('/') {
                Some((p, q)) => {
                    let p: i64 = p.trim().parse().map_err(|_| bad())?;
                    let q: i64 = q.trim().parse().map_err(|_| bad())?;
                    const EXACT: i64 = 1 << 53;
                    if q == 0 || p.abs() > EXACT || q.abs() > EXACT {
                        return Err(bad());
                    }
                    p as f64 / q as f64
                }
                None => item.parse::<f64>().map_err(|_| bad())?,
            };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        })
        .collect()
}
