//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid model or unreadable input, 2 numerical
//! failure, 64 usage error.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::DecayError;
use crate::oracle::{diagonalize, discretize, survival_discrete};
use crate::profiles::{ensure_valid, validate, ModelSpec, Support};
use crate::pvcalc::theorems;
use crate::spectral::{
    bound_state, completeness, resonance_poles, spectral_data, BoundRecord, SpectralReport,
};
use crate::survival::{
    linear_grid, log_grid, survival_flat_closed, survival_golden_rule, survival_pole_sum,
    survival_quadrature, AmplitudeSeries,
};
use crate::tailfit::{survival_decomposed, tail_slope, Decomposition};
use crate::tolerance::{ToleranceProfile, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Time or energy grid: `linear:t0,t1,n` or `log:t0,t1,n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Linear { t0: f64, t1: f64, n: usize },
    Log { t0: f64, t1: f64, n: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Linear { t0, t1, n } => linear_grid(t0, t1, n),
            Grid::Log { t0, t1, n } => log_grid(t0, t1, n),
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("grid `{s}` must look like linear:t0,t1,n or log:t0,t1,n"))?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` needs exactly three values"));
        }
        let t0: f64 = parts[0].parse().map_err(|_| format!("bad grid start `{}`", parts[0]))?;
        let t1: f64 = parts[1].parse().map_err(|_| format!("bad grid end `{}`", parts[1]))?;
        let n: usize = parts[2].parse().map_err(|_| format!("bad grid size `{}`", parts[2]))?;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(format!("grid needs finite t0 < t1, got {t0}, {t1}"));
        }
        if n < 2 {
            return Err(format!("grid needs at least 2 points, got {n}"));
        }
        match kind {
            "linear" => Ok(Grid::Linear { t0, t1, n }),
            "log" if t0 > 0.0 => Ok(Grid::Log { t0, t1, n }),
            "log" => Err(format!("log grid needs t0 > 0, got {t0}")),
            other => Err(format!("unknown grid kind `{other}`")),
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("window `{s}` must be a,b"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad window start `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad window end `{b}`"))?;
    if !(a > 0.0 && b > a) {
        return Err(format!("window needs 0 < a < b, got {a}, {b}"));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurvivalMethod {
    Closed,
    Quad,
    Golden,
    Poles,
    Oracle,
    Decomposed,
}

#[derive(Debug, Parser)]
#[command(name = "decaylab", version, about = "Survival amplitudes of a discrete level coupled to a continuum")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// model configuration (JSON)
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// output file; standard output if omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// output format; inferred from the --out extension, CSV by default for series
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// tolerance profile (overrides DECAYLAB_TOL)
    #[arg(long, global = true, value_parser = ToleranceProfile::from_str)]
    pub tol: Option<ToleranceProfile>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the model and echo it with diagnostics
    Describe,
    /// Survival amplitude and probability on a time grid
    Survival {
        #[arg(long, value_enum, default_value = "quad")]
        method: SurvivalMethod,
        #[arg(long, default_value = "linear:0,10,101")]
        grid: Grid,
        /// oracle grid size
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// oracle energy cutoff
        #[arg(long, default_value_t = 50.0)]
        emax: f64,
    },
    /// Resonance poles with residue weights
    Poles {
        #[arg(long, default_value_t = 16)]
        max: usize,
    },
    /// Bound state below a half-line continuum
    Bound,
    /// Continuum weight on an energy grid
    Spectrum {
        #[arg(long)]
        grid: Option<Grid>,
    },
    /// Compare the discretized Hamiltonian with the continuum quadrature
    OracleCompare {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 50.0)]
        emax: f64,
        #[arg(long)]
        grid: Option<Grid>,
        /// also write the eigenvalue dump `k,lambda_k,weight_k` here
        #[arg(long)]
        eigs: Option<PathBuf>,
    },
    /// Late-time power-law fit of the amplitude
    TailFit {
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
    /// Hilbert-transform identities with their residuals
    Theorems,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numeric(DecayError),
}

impl From<DecayError> for Failure {
    fn from(e: DecayError) -> Self {
        match e {
            DecayError::InvalidModel(m) => Failure::Invalid(m),
            other => Failure::Numeric(other),
        }
    }
}

type Outcome = Result<(String, i32), Failure>;

fn load_model(path: &Option<PathBuf>) -> Result<ModelSpec, Failure> {
    let path = path.as_ref().ok_or_else(|| Failure::Invalid("--model is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn series_output(series: &AmplitudeSeries, format: Format) -> String {
    match format {
        Format::Csv => series.to_csv(),
        Format::Json => to_json(series),
    }
}

fn resolve_format(common: &Common, fallback: Format) -> Format {
    if let Some(f) = common.format {
        return f;
    }
    match common.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => fallback,
    }
}

/// Natural time scale `hbar / (2 |Im l|)` of the slowest pole, or of the Golden-Rule rate.
fn lifetime(spec: &ModelSpec, tol: &Tolerances) -> f64 {
    if let Ok(set) = resonance_poles(spec, 16, tol) {
        if let Some(p) = set.leading() {
            return spec.hbar / (2.0 * p.lambda.im.abs());
        }
    }
    let eta = spec.eta(spec.alpha).max(1e-12);
    spec.hbar / (2.0 * PI * eta)
}

fn run_survival(spec: &ModelSpec, method: SurvivalMethod, times: &[f64], n: usize, emax: f64, tol: &Tolerances) -> Result<AmplitudeSeries, DecayError> {
    match method {
        SurvivalMethod::Closed => survival_flat_closed(spec, times),
        SurvivalMethod::Quad => survival_quadrature(spec, times, tol),
        SurvivalMethod::Golden => survival_golden_rule(spec, times),
        SurvivalMethod::Poles => {
            let poles = resonance_poles(spec, usize::MAX, tol)?;
            survival_pole_sum(spec, &poles, times)
        }
        SurvivalMethod::Oracle => {
            let model = discretize(spec, n, emax)?;
            survival_discrete(&diagonalize(&model)?, times)
        }
        SurvivalMethod::Decomposed => survival_decomposed(spec, times, tol),
    }
}

fn execute(cli: &Cli) -> Outcome {
    let tol = cli.common.tol.map(Tolerances::profile).unwrap_or_else(Tolerances::from_env);
    let spec = load_model(&cli.common.model)?;

    if let Command::Describe = cli.command {
        let diagnostics = validate(&spec);
        let mut value = serde_json::to_value(&spec).expect("serializable model");
        value["diagnostics"] = serde_json::to_value(&diagnostics).expect("serializable diagnostics");
        let code = if diagnostics.is_empty() { EXIT_OK } else { EXIT_INVALID };
        return Ok((to_json(&value), code));
    }
    ensure_valid(&spec)?;

    let text = match &cli.command {
        Command::Describe => unreachable!(),
        Command::Survival { method, grid, n, emax } => {
            let series = run_survival(&spec, *method, &grid.points(), *n, *emax, &tol)?;
            series_output(&series, resolve_format(&cli.common, Format::Csv))
        }
        Command::Poles { max } => {
            let poles = resonance_poles(&spec, *max, &tol)?;
            let bound = if spec.is_half_line() { bound_state(&spec, &tol)? } else { None };
            to_json(&SpectralReport::new(Some(&poles), bound, completeness(&spec, &tol)?))
        }
        Command::Bound => {
            let bound = bound_state(&spec, &tol)?;
            to_json(&SpectralReport::new(None, bound, completeness(&spec, &tol)?))
        }
        Command::Spectrum { grid } => {
            let grid = grid.unwrap_or(match spec.support() {
                Support::FullLine => Grid::Linear { t0: spec.alpha - 5.0, t1: spec.alpha + 5.0, n: 201 },
                Support::HalfLine => Grid::Linear { t0: 0.01, t1: 10.0, n: 200 },
            });
            let data = spectral_data(&spec, &grid.points(), &tol)?;
            match resolve_format(&cli.common, Format::Json) {
                Format::Csv => {
                    let mut s = String::from("lambda,weight\n");
                    for (l, w) in data.grid.iter().zip(&data.weight) {
                        s.push_str(&format!("{},{}\n", crate::survival::sig17(*l), crate::survival::sig17(*w)));
                    }
                    s
                }
                Format::Json => to_json(&json!({
                    "grid": data.grid,
                    "weight": data.weight,
                    "bound": data.bound_state.map(|b| BoundRecord { lambda0: b.lambda0, weight: b.weight0 }),
                    "completeness_residual": data.completeness_residual,
                })),
            }
        }
        Command::OracleCompare { n, emax, grid, eigs } => {
            let model = discretize(&spec, *n, *emax)?;
            let eig = diagonalize(&model)?;
            if let Some(path) = eigs {
                std::fs::write(path, eig.to_csv())
                    .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
            }
            let t_rec = model.recurrence_time();
            let window_end = (10.0 * lifetime(&spec, &tol)).min(0.5 * t_rec);
            let times: Vec<f64> = match grid {
                Some(g) => g.points().into_iter().filter(|t| t.abs() < 0.5 * t_rec).collect(),
                None => linear_grid(0.0, window_end, 201),
            };
            let discrete = survival_discrete(&eig, &times)?;
            let continuum = survival_quadrature(&spec, &times, &tol)?;
            let max_abs_diff = discrete
                .amplitude
                .iter()
                .zip(&continuum.amplitude)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let (lowest, lowest_weight) = eig.lowest();
            let bound = if spec.is_half_line() { bound_state(&spec, &tol)? } else { None };
            to_json(&json!({
                "n": n,
                "e_max": emax,
                "recurrence_time": t_rec,
                "window": [times.first().copied().unwrap_or(0.0), times.last().copied().unwrap_or(0.0)],
                "max_abs_diff": max_abs_diff,
                "lowest": { "lambda": lowest, "weight": lowest_weight },
                "bound": bound.map(|b| BoundRecord { lambda0: b.lambda0, weight: b.weight0 }),
                "diagnostics": model.diagnostics,
            }))
        }
        Command::TailFit { window, points } => {
            let d = Decomposition::new(&spec, &tol)?;
            let times = log_grid(window.0, window.1, (*points).max(2));
            let amp = times.iter().map(|&t| d.amplitude(t)).collect::<Result<Vec<Complex64>, _>>()?;
            let series = AmplitudeSeries::new(times, amp, crate::survival::Method::CutDecomposition);
            to_json(&tail_slope(&series, *window)?)
        }
        Command::Theorems => {
            let report = theorems::run(&spec, &tol)?;
            let passed = report.involution_max_residual.is_none_or(|r| r < 1e-4)
                && report.lower_half_plane_max_modulus.is_none_or(|r| r < 1e-6)
                && report.delta_identity_max_residual.is_none_or(|r| r < 1e-4)
                && report.boundary_decreasing()
                && report.resolvent_max_residual < 1e-6
                && report.closed_vs_quadrature_max < 1e-6;
            let mut value = serde_json::to_value(&report).expect("serializable report");
            value["passed"] = json!(passed);
            return Ok((to_json(&value), if passed { EXIT_OK } else { EXIT_NUMERIC }));
        }
    };
    Ok((text, EXIT_OK))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok((text, code)) => match emit(&cli.common.out, &text) {
            Ok(()) => code,
            Err(msg) => {
                eprintln!("error: {msg}");
                EXIT_INVALID
            }
        },
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: invalid model: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            EXIT_NUMERIC
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("linear:0,10,101".parse::<Grid>().unwrap(), Grid::Linear { t0: 0.0, t1: 10.0, n: 101 });
        assert!(matches!("log:1,1e4,5".parse::<Grid>().unwrap(), Grid::Log { .. }));
        assert!("log:0,10,5".parse::<Grid>().is_err());
        assert!("linear:5,1,10".parse::<Grid>().is_err());
        assert!("linear:0,1,1".parse::<Grid>().is_err());
        assert!("cubic:0,1,10".parse::<Grid>().is_err());
        assert_eq!(parse_window("100, 1e4").unwrap(), (100.0, 1e4));
        assert!(parse_window("5,1").is_err());
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(["decaylab", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["decaylab", "survival", "--method", "magic"]), EXIT_USAGE);
        assert_eq!(run(["decaylab", "survival", "--grid", "log:0,1,10"]), EXIT_USAGE);
    }

    #[test]
    fn missing_model_is_invalid() {
        assert_eq!(run(["decaylab", "poles"]), EXIT_INVALID);
        assert_eq!(run(["decaylab", "poles", "--model", "/nonexistent/model.json"]), EXIT_INVALID);
    }
}
