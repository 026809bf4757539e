//! Command-line surface: density tables, Monte Carlo runs, identity
//! evaluation, passage-time tables and the verification report, all driven
//! by a flat `key = value` config file plus overriding flags, fully
//! reproducible from the single seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asymptotics::{estimate_constants, verify_all_with, Artifacts, Tolerances, Verdict};
use crate::density::{density_f, density_f_derivative, density_f_with_err};
use crate::identities::{
    m_from_ptilde_beta, passage_density, passage_survival, DensityFn, TailDefaults,
};
use crate::mc::{
    estimate_density, estimate_p_up, extrapolate_levels, extrapolate_levels_on,
    rescale_to_horizon, simulate_meander_levels, simulate_supremum_levels, MCConfig, MCRun,
};
use crate::params::{validate_params, StableParams};
use crate::table::DensityTable;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line} is not `key = value`: {text}")]
    Malformed { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("missing required setting `{0}` (config file or flag)")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

impl std::fmt::Display for Spacing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Spacing::Log => "log",
            Spacing::Linear => "linear",
        })
    }
}

/// Everything a run needs, resolved from defaults, the config file and the
/// command line (in increasing precedence).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    /// Skeleton resolutions; derived from `n_steps` when absent.
    pub levels: Option<Vec<usize>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
    pub directory: PathBuf,
    pub format: String,
    pub tol_exponent: Option<f64>,
    pub tol_constant: Option<f64>,
    /// Time horizon for tables (densities rescale by self-similarity).
    pub t: f64,
    /// Passage level probed by the passage command and the verifier.
    pub x: f64,
    /// How many marginal derivatives the density command also tabulates.
    pub derivatives: u32,
    /// Emit the conditioned-to-stay-positive table from the meander run.
    pub p_up: bool,
}

struct PendingConfig {
    map: BTreeMap<String, String>,
}

impl PendingConfig {
    fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: i + 1,
                text: raw.to_string(),
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(PendingConfig { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_levels(value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_as::<usize>("levels", part.trim()))
        .collect()
}

impl RunConfig {
    /// Resolves the configuration: defaults, then the config file, then the
    /// command-line overrides. Unknown file keys are an error.
    fn resolve(args: &CommonArgs) -> Result<RunConfig, ConfigError> {
        let mut file = match &args.config {
            Some(path) => PendingConfig::from_file(path)?,
            None => PendingConfig {
                map: BTreeMap::new(),
            },
        };

        let mut alpha: Option<f64> = None;
        let mut c_plus: Option<f64> = None;
        let mut c_minus: Option<f64> = None;
        let mut seed: Option<u64> = None;
        let mut cfg = RunConfig {
            alpha: 0.0,
            c_plus: 0.0,
            c_minus: 0.0,
            seed: 0,
            n_paths: 1_000_000,
            n_steps: 512,
            levels: None,
            x_min: None,
            x_max: None,
            points: 200,
            spacing: Spacing::Log,
            directory: PathBuf::from("."),
            format: "csv".into(),
            tol_exponent: None,
            tol_constant: None,
            t: 1.0,
            x: 2.0,
            derivatives: 0,
            p_up: false,
        };

        if let Some(v) = file.take("alpha") {
            alpha = Some(parse_as("alpha", &v)?);
        }
        if let Some(v) = file.take("c_plus") {
            c_plus = Some(parse_as("c_plus", &v)?);
        }
        if let Some(v) = file.take("c_minus") {
            c_minus = Some(parse_as("c_minus", &v)?);
        }
        if let Some(v) = file.take("seed") {
            seed = Some(parse_as("seed", &v)?);
        }
        if let Some(v) = file.take("n_paths") {
            cfg.n_paths = parse_as("n_paths", &v)?;
        }
        if let Some(v) = file.take("n_steps") {
            cfg.n_steps = parse_as("n_steps", &v)?;
        }
        if let Some(v) = file.take("levels") {
            cfg.levels = Some(parse_levels(&v)?);
        }
        if let Some(v) = file.take("x_min") {
            cfg.x_min = Some(parse_as("x_min", &v)?);
        }
        if let Some(v) = file.take("x_max") {
            cfg.x_max = Some(parse_as("x_max", &v)?);
        }
        if let Some(v) = file.take("points") {
            cfg.points = parse_as("points", &v)?;
        }
        if let Some(v) = file.take("spacing") {
            cfg.spacing = match v.as_str() {
                "log" => Spacing::Log,
                "linear" => Spacing::Linear,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "spacing".into(),
                        value: other.to_string(),
                    })
                }
            };
        }
        if let Some(v) = file.take("directory") {
            cfg.directory = PathBuf::from(v);
        }
        if let Some(v) = file.take("format") {
            if v != "csv" {
                return Err(ConfigError::BadValue {
                    key: "format".into(),
                    value: v,
                });
            }
        }
        if let Some(v) = file.take("tol_exponent") {
            cfg.tol_exponent = Some(parse_as("tol_exponent", &v)?);
        }
        if let Some(v) = file.take("tol_constant") {
            cfg.tol_constant = Some(parse_as("tol_constant", &v)?);
        }
        if let Some(v) = file.take("t") {
            cfg.t = parse_as("t", &v)?;
        }
        if let Some(v) = file.take("x") {
            cfg.x = parse_as("x", &v)?;
        }
        if let Some(v) = file.take("derivatives") {
            cfg.derivatives = parse_as("derivatives", &v)?;
        }
        if let Some(v) = file.take("p_up") {
            cfg.p_up = parse_as("p_up", &v)?;
        }
        if let Some(key) = file.map.keys().next() {
            return Err(ConfigError::UnknownKey(key.clone()));
        }

        // Command line wins.
        if let Some(v) = args.alpha {
            alpha = Some(v);
        }
        if let Some(v) = args.c_plus {
            c_plus = Some(v);
        }
        if let Some(v) = args.c_minus {
            c_minus = Some(v);
        }
        if let Some(v) = args.seed {
            seed = Some(v);
        }
        if let Some(v) = args.paths {
            cfg.n_paths = v;
        }
        if let Some(v) = args.steps {
            cfg.n_steps = v;
        }
        if let Some(v) = args.grid_min {
            cfg.x_min = Some(v);
        }
        if let Some(v) = args.grid_max {
            cfg.x_max = Some(v);
        }
        if let Some(v) = args.grid_points {
            cfg.points = v;
        }
        if let Some(v) = args.grid_log {
            cfg.spacing = if v { Spacing::Log } else { Spacing::Linear };
        }
        if let Some(v) = &args.out {
            cfg.directory = v.clone();
        }
        if let Some(v) = args.t {
            cfg.t = v;
        }
        if let Some(v) = args.x {
            cfg.x = v;
        }

        cfg.alpha = alpha.ok_or(ConfigError::Missing("alpha"))?;
        cfg.c_plus = c_plus.ok_or(ConfigError::Missing("c_plus"))?;
        cfg.c_minus = c_minus.ok_or(ConfigError::Missing("c_minus"))?;
        cfg.seed = seed.ok_or(ConfigError::Missing("seed"))?;
        Ok(cfg)
    }

    fn effective_levels(&self) -> Vec<usize> {
        match &self.levels {
            Some(l) => l.clone(),
            None => {
                let n = self.n_steps;
                if n >= 8 && n % 4 == 0 {
                    vec![n / 4, n / 2, n]
                } else if n >= 4 && n % 2 == 0 {
                    vec![n / 2, n]
                } else {
                    vec![n]
                }
            }
        }
    }

    /// Canonical, deterministic listing of every effective setting;
    /// the config hash is taken over exactly these bytes.
    fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "c_plus = {}", self.c_plus);
        let _ = writeln!(s, "c_minus = {}", self.c_minus);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_paths = {}", self.n_paths);
        let _ = writeln!(s, "n_steps = {}", self.n_steps);
        let levels: Vec<String> = self
            .effective_levels()
            .iter()
            .map(|l| l.to_string())
            .collect();
        let _ = writeln!(s, "levels = {}", levels.join(","));
        match self.x_min {
            Some(v) => {
                let _ = writeln!(s, "x_min = {v}");
            }
            None => {
                let _ = writeln!(s, "x_min = auto");
            }
        }
        match self.x_max {
            Some(v) => {
                let _ = writeln!(s, "x_max = {v}");
            }
            None => {
                let _ = writeln!(s, "x_max = auto");
            }
        }
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "spacing = {}", self.spacing);
        let _ = writeln!(s, "directory = {}", self.directory.display());
        let _ = writeln!(s, "format = {}", self.format);
        if let Some(v) = self.tol_exponent {
            let _ = writeln!(s, "tol_exponent = {v}");
        }
        if let Some(v) = self.tol_constant {
            let _ = writeln!(s, "tol_constant = {v}");
        }
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "x = {}", self.x);
        let _ = writeln!(s, "derivatives = {}", self.derivatives);
        let _ = writeln!(s, "p_up = {}", self.p_up);
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical echo.
    fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    fn params(&self) -> Result<StableParams, CmdError> {
        validate_params(self.alpha, self.c_plus, self.c_minus)
            .map_err(|e| CmdError::Config(e.to_string()))
    }

    fn grid(&self, default_lo: f64, default_hi: f64) -> Vec<f64> {
        let lo = self.x_min.unwrap_or(default_lo);
        let hi = self.x_max.unwrap_or(default_hi);
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let frac = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Log => lo * (hi / lo).powf(frac),
                    Spacing::Linear => lo + (hi - lo) * frac,
                }
            })
            .collect()
    }

    fn tolerances(&self) -> Tolerances {
        match (self.tol_exponent, self.tol_constant) {
            (None, None) => Tolerances::default(),
            (e, c) => Tolerances::uniform(e.unwrap_or(0.15), c.unwrap_or(0.20)),
        }
    }

    fn mc_config(&self) -> MCConfig {
        MCConfig::new(self.n_paths, self.n_steps, self.seed).with_levels(self.effective_levels())
    }
}

#[derive(Debug, Error)]
enum CmdError {
    /// Configuration or usage problems; exit code 2.
    #[error("{0}")]
    Config(String),
    /// Numeric or runtime failures; exit code 1.
    #[error("{0}")]
    Numeric(String),
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Numeric(format!("io error: {e}"))
    }
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stability index in (0, 2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Positive jump intensity coefficient.
    #[arg(long)]
    c_plus: Option<f64>,
    /// Negative jump intensity coefficient.
    #[arg(long)]
    c_minus: Option<f64>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths (also the meander attempt budget).
    #[arg(long)]
    paths: Option<usize>,
    /// Skeleton steps at the finest level.
    #[arg(long)]
    steps: Option<usize>,
    /// Lower grid edge (omit for automatic).
    #[arg(long)]
    grid_min: Option<f64>,
    /// Upper grid edge (omit for automatic).
    #[arg(long)]
    grid_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Log-spaced grid (true) or linear (false).
    #[arg(long)]
    grid_log: Option<bool>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Passage level.
    #[arg(long)]
    x: Option<f64>,
}

#[derive(Parser, Debug)]
#[command(
    name = "stable-sup",
    version,
    about = "Densities attached to the running supremum of a strictly stable process"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the marginal density by characteristic-function inversion.
    Density(CommonArgs),
    /// Simulate the supremum and tabulate its density with level
    /// extrapolation.
    Sup(CommonArgs),
    /// Simulate the meander density and push it through the convolution
    /// identity.
    Meander(CommonArgs),
    /// Tabulate the first-passage density and survival at a level.
    Passage(CommonArgs),
    /// Run the full pipeline and verdict every asymptotic law.
    Verify(CommonArgs),
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> u8 {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&RunConfig) -> Result<(), CmdError>) = match &cli.command {
        Command::Density(a) => (a, cmd_density),
        Command::Sup(a) => (a, cmd_sup),
        Command::Meander(a) => (a, cmd_meander),
        Command::Passage(a) => (a, cmd_passage),
        Command::Verify(a) => (a, cmd_verify),
    };
    let cfg = match RunConfig::resolve(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(CmdError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(CmdError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CmdError> {
    fs::create_dir_all(&cfg.directory)?;
    fs::write(cfg.directory.join("effective_config.txt"), cfg.echo())?;
    Ok(())
}

fn write_csv(
    cfg: &RunConfig,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<(), CmdError> {
    let mut out = format!("# config={} seed={}\n{header}\n", cfg.hash(), cfg.seed);
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    fs::write(cfg.directory.join(name), out)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

fn cmd_density(cfg: &RunConfig) -> Result<(), CmdError> {
    let p = cfg.params()?;
    prepare_out(cfg)?;
    let sigma = p.scale.powf(p.eta);
    let grid = cfg.grid(0.01 * sigma, 100.0 * sigma);
    // Self-similar rescaling to the horizon: the density at time t is
    // t^{-eta} f(x t^{-eta}).
    let scale = cfg.t.powf(-p.eta);
    let mut rows = Vec::with_capacity(grid.len());
    let mut deriv_rows = Vec::with_capacity(grid.len());
    for &x in &grid {
        let (f, err) = density_f_with_err(&p, x * scale)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        rows.push(format!("{},{},{}", num(x), num(f * scale), num(err * scale)));
        if cfg.derivatives >= 1 {
            let mut row = num(x);
            for k in 1..=cfg.derivatives.min(2) {
                let d = density_f_derivative(&p, x * scale, k)
                    .map_err(|e| CmdError::Numeric(e.to_string()))?;
                // Each derivative picks up one more factor of the rescaling.
                let _ = write!(row, ",{}", num(d * scale.powi(k as i32 + 1)));
            }
            deriv_rows.push(row);
        }
    }
    write_csv(cfg, "f_table.csv", "x,f,abs_err", rows)?;
    if cfg.derivatives >= 1 {
        let header = if cfg.derivatives >= 2 {
            "x,f_prime,f_second"
        } else {
            "x,f_prime"
        };
        write_csv(cfg, "f_deriv_table.csv", header, deriv_rows)?;
    }
    Ok(())
}

/// Shared by the sup and meander commands: extrapolate the level ladder,
/// compute the per-point gap between the finest two levels, and serialize.
fn mc_table_rows(
    p: &StableParams,
    runs: &[MCRun],
    table: &DensityTable,
) -> Result<Vec<String>, CmdError> {
    let bias: Vec<f64> = if runs.len() >= 2 {
        let fine = estimate_density(&runs[runs.len() - 1], &table.grid)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        let coarse = estimate_density(&runs[runs.len() - 2], &table.grid)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        fine.values
            .iter()
            .zip(coarse.values.iter())
            .map(|(f, c)| f - c)
            .collect()
    } else {
        vec![0.0; table.len()]
    };
    let _ = p;
    let errs = table
        .errbars
        .as_ref()
        .ok_or_else(|| CmdError::Numeric("extrapolated table lost its error bars".into()))?;
    Ok(table
        .grid
        .iter()
        .zip(table.values.iter())
        .zip(errs.iter().zip(bias.iter()))
        .map(|((&x, &v), (&e, &b))| format!("{},{},{},{}", num(x), num(v), num(e), num(b)))
        .collect())
}

fn write_samples(cfg: &RunConfig, runs: &[MCRun]) -> Result<(), CmdError> {
    for run in runs {
        let rows = run
            .samples
            .iter()
            .map(|&s| format!("{},{},{}", num(s), run.level, cfg.seed));
        write_csv(
            cfg,
            &format!("samples_level_{}.csv", run.level),
            "value,level,seed",
            rows,
        )?;
    }
    Ok(())
}

fn horizon_runs(cfg: &RunConfig, runs: Vec<MCRun>) -> Vec<MCRun> {
    if (cfg.t - 1.0).abs() < 1e-15 {
        runs
    } else {
        runs.into_iter()
            .map(|r| rescale_to_horizon(&r, cfg.t))
            .collect()
    }
}

fn extrapolated(cfg: &RunConfig, runs: &[MCRun]) -> Result<DensityTable, CmdError> {
    let table = match (cfg.x_min, cfg.x_max) {
        (Some(_), Some(_)) | (Some(_), None) | (None, Some(_)) => {
            // An explicit edge pins the grid; fill the other from samples.
            let finest = &runs[runs.len() - 1];
            let auto = crate::mc::auto_grid(finest, cfg.points)
                .ok_or_else(|| CmdError::Numeric("too few positive samples for a grid".into()))?;
            let lo = cfg.x_min.unwrap_or_else(|| auto[0]);
            let hi = cfg.x_max.unwrap_or_else(|| *auto.last().unwrap());
            let n = cfg.points.max(2);
            let grid: Vec<f64> = (0..n)
                .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
                .collect();
            extrapolate_levels_on(runs, &grid)
        }
        (None, None) => extrapolate_levels(runs),
    };
    table.map_err(|e| CmdError::Numeric(e.to_string()))
}

fn cmd_sup(cfg: &RunConfig) -> Result<(), CmdError> {
    let p = cfg.params()?;
    prepare_out(cfg)?;
    let mc = cfg.mc_config();
    let runs = simulate_supremum_levels(&p, &mc).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let runs = horizon_runs(cfg, runs);
    let table = extrapolated(cfg, &runs)?;
    let rows = mc_table_rows(&p, &runs, &table)?;
    write_csv(cfg, "m_table.csv", "x,m,stderr,level_bias", rows)?;
    write_samples(cfg, &runs)?;
    println!("sup: {} levels, mass {:.4}", runs.len(), table.mass());
    Ok(())
}

fn cmd_meander(cfg: &RunConfig) -> Result<(), CmdError> {
    let p = cfg.params()?;
    prepare_out(cfg)?;
    let mc = cfg.mc_config();
    let runs = simulate_meander_levels(&p, &mc).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let runs = horizon_runs(cfg, runs);
    for run in &runs {
        println!(
            "meander: level {} acceptance_rate {:.5} ({} samples)",
            run.level,
            run.acceptance_rate,
            run.samples.len()
        );
    }
    let table = extrapolated(cfg, &runs)?;
    let rows = mc_table_rows(&p, &runs, &table)?;
    write_csv(cfg, "ptilde_table.csv", "x,ptilde,stderr,level_bias", rows)?;

    // Push the (normalized) meander estimate through the convolution
    // identity to get the supremum density on the same grid.
    let ptilde_fn = DensityFn::from_table_auto(&table, TailDefaults::meander(&p))
        .map_err(|e| CmdError::Numeric(e.to_string()))?
        .normalized();
    let m_rows: Result<Vec<String>, CmdError> = table
        .grid
        .iter()
        .map(|&x| {
            let m = m_from_ptilde_beta(&ptilde_fn, &p, x)
                .map_err(|e| CmdError::Numeric(e.to_string()))?;
            Ok(format!("{},{}", num(x), num(m)))
        })
        .collect();
    write_csv(cfg, "m_from_ptilde.csv", "x,m", m_rows?)?;

    if cfg.p_up {
        let p_up = estimate_p_up(&p, &table).map_err(|e| CmdError::Numeric(e.to_string()))?;
        let rows: Vec<String> = match &p_up.errbars {
            Some(errs) => p_up
                .grid
                .iter()
                .zip(p_up.values.iter().zip(errs.iter()))
                .map(|(&x, (&v, &e))| format!("{},{},{}", num(x), num(v), num(e)))
                .collect(),
            None => p_up
                .grid
                .iter()
                .zip(p_up.values.iter())
                .map(|(&x, &v)| format!("{},{},", num(x), num(v)))
                .collect(),
        };
        write_csv(cfg, "p_up_table.csv", "x,p_up,stderr", rows)?;
    }
    Ok(())
}

fn cmd_passage(cfg: &RunConfig) -> Result<(), CmdError> {
    let p = cfg.params()?;
    prepare_out(cfg)?;
    let mc = cfg.mc_config();
    let runs = simulate_supremum_levels(&p, &mc).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let m_table = extrapolate_levels(&runs).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let m_fn = DensityFn::from_table_auto(&m_table, TailDefaults::supremum(&p))
        .map_err(|e| CmdError::Numeric(e.to_string()))?
        .normalized();
    let level = cfg.x;
    let t_grid = cfg.grid(0.01, 100.0);
    let rows: Result<Vec<String>, CmdError> = t_grid
        .iter()
        .map(|&t| {
            let h = passage_density(&m_fn, &p, level, t)
                .map_err(|e| CmdError::Numeric(e.to_string()))?;
            let s = passage_survival(&m_table, &p, level, t)
                .map_err(|e| CmdError::Numeric(e.to_string()))?;
            // Flattens to the predicted plateau when the large-t law holds.
            let scaled = t.powf(p.rho + 1.0) * h;
            Ok(format!(
                "{},{},{},{}",
                num(t),
                num(h),
                num(s),
                num(scaled)
            ))
        })
        .collect();
    write_csv(cfg, "passage_table.csv", "t,h,survival,h_scaled", rows?)?;
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), CmdError> {
    let p = cfg.params()?;
    prepare_out(cfg)?;
    let mc = cfg.mc_config();
    let sup_runs =
        simulate_supremum_levels(&p, &mc).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let m_table = extrapolate_levels(&sup_runs).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let meander_runs =
        simulate_meander_levels(&p, &mc).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let ptilde_table =
        extrapolate_levels(&meander_runs).map_err(|e| CmdError::Numeric(e.to_string()))?;
    let p_up_table =
        estimate_p_up(&p, &ptilde_table).map_err(|e| CmdError::Numeric(e.to_string()))?;

    let m_fn = DensityFn::from_table_auto(&m_table, TailDefaults::supremum(&p))
        .map_err(|e| CmdError::Numeric(e.to_string()))?
        .normalized();
    let f = |x: f64| density_f(&p, x).unwrap_or(f64::NAN);
    let fd = |x: f64| density_f_derivative(&p, x, 1).unwrap_or(f64::NAN);
    let level = cfg.x;
    let h = |t: f64| passage_density(&m_fn, &p, level, t).unwrap_or(f64::NAN);

    let artifacts = Artifacts {
        f: &f,
        f_deriv: Some(&fd),
        m: &m_table,
        ptilde: &ptilde_table,
        p_up: &p_up_table,
        h: &h,
        h_probe_x: level,
    };
    let report = verify_all_with(&p, &artifacts, &cfg.tolerances());

    fs::write(
        cfg.directory.join("report.csv"),
        format!("# config={} seed={}\n{}", cfg.hash(), cfg.seed, report.to_csv()),
    )?;
    fs::write(cfg.directory.join("report.txt"), report.render_text())?;

    let const_rows: Vec<String> = match estimate_constants(&report) {
        Ok(c) => [
            ("A", c.a),
            ("B", c.b),
            ("C", c.c),
            ("D", c.d),
        ]
        .iter()
        .map(|(name, est)| {
            format!(
                "{},{},{},{},{}",
                name,
                num(est.value),
                num(est.ci_lo),
                num(est.ci_hi),
                est.source
            )
        })
        .collect(),
        Err(e) => vec![format!("# unavailable: {e}")],
    };
    write_csv(cfg, "constants.csv", "constant,value,ci_lo,ci_hi,source", const_rows)?;

    print!("{}", report.render_text());
    let failed = report
        .entries
        .iter()
        .filter(|e| e.verdict == Verdict::Fail)
        .count();
    if failed > 0 {
        return Err(CmdError::Numeric(format!("{failed} law(s) failed")));
    }
    println!("verify: all laws passed or were skipped");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> CommonArgs {
        CommonArgs {
            alpha: Some(1.5),
            c_plus: Some(1.0),
            c_minus: Some(1.0),
            seed: Some(7),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_fill_everything_but_the_required_four() {
        let cfg = RunConfig::resolve(&args()).unwrap();
        assert_eq!(cfg.n_paths, 1_000_000);
        assert_eq!(cfg.n_steps, 512);
        assert_eq!(cfg.effective_levels(), vec![128, 256, 512]);
        assert_eq!(cfg.points, 200);
        assert_eq!(cfg.spacing, Spacing::Log);
        assert_eq!(cfg.t, 1.0);
        assert_eq!(cfg.x, 2.0);
        assert!(!cfg.p_up);
    }

    #[test]
    fn missing_required_key_is_an_error() {
        let mut a = args();
        a.seed = None;
        assert!(matches!(
            RunConfig::resolve(&a),
            Err(ConfigError::Missing("seed"))
        ));
    }

    #[test]
    fn file_keys_parse_and_flags_override_them() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "alpha = 1.2  # stability index\nc_plus = 0.5\nc_minus = 0.25\nseed = 11\n\
             n_paths = 5000\nlevels = 32,64\nn_steps = 64\nspacing = linear\np_up = true\n",
        )
        .unwrap();
        let mut a = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        a.alpha = Some(1.4); // flag beats file
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.alpha, 1.4);
        assert_eq!(cfg.c_plus, 0.5);
        assert_eq!(cfg.n_paths, 5000);
        assert_eq!(cfg.effective_levels(), vec![32, 64]);
        assert_eq!(cfg.spacing, Spacing::Linear);
        assert!(cfg.p_up);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "alpha = 1.5\nc_plus = 1\nc_minus = 1\nseed = 3\nbogus = 1\n").unwrap();
        let a = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&a),
            Err(ConfigError::UnknownKey(k)) if k == "bogus"
        ));
    }

    #[test]
    fn hash_tracks_the_effective_config() {
        let cfg1 = RunConfig::resolve(&args()).unwrap();
        let cfg2 = RunConfig::resolve(&args()).unwrap();
        assert_eq!(cfg1.hash(), cfg2.hash());
        let mut a = args();
        a.seed = Some(8);
        let cfg3 = RunConfig::resolve(&a).unwrap();
        assert_ne!(cfg1.hash(), cfg3.hash());
        assert_eq!(cfg1.hash().len(), 16);
    }

    #[test]
    fn grids_follow_spacing_and_edges() {
        let mut a = args();
        a.grid_min = Some(1.0);
        a.grid_max = Some(100.0);
        a.grid_points = Some(3);
        let cfg = RunConfig::resolve(&a).unwrap();
        let g = cfg.grid(0.0, 0.0);
        assert_eq!(g.len(), 3);
        assert!((g[1] - 10.0).abs() < 1e-12, "log midpoint, got {}", g[1]);
        a.grid_log = Some(false);
        let cfg = RunConfig::resolve(&a).unwrap();
        let g = cfg.grid(0.0, 0.0);
        assert!((g[1] - 50.5).abs() < 1e-12, "linear midpoint, got {}", g[1]);
    }

    #[test]
    fn level_ladder_derivation_handles_small_step_counts() {
        let mut a = args();
        a.steps = Some(6);
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.effective_levels(), vec![3, 6]);
        a.steps = Some(7);
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.effective_levels(), vec![7]);
    }
}
