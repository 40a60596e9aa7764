//! Command-line front end: problem ingestion, dispatch, JSON reports and CSV data.
//!
//! Exit status is 0 for a computed verdict (finite or infinite), 2 for an undetermined one
//! and 1 for any error. Reports carry a SHA-256 hash of the canonical configuration and no
//! timestamps, so reruns of one configuration produce identical bytes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bessel::{self, BesselEnd, BesselMatrixProblem};
use crate::maslov::{self, CrossingSummary, LagrangianPath, MaslovOptions};
use crate::nbody::{self, Motion};
use crate::report::{IndexReport, Provenance, Verdict};
use crate::spectral::{self, RellichSetup, DEFAULT_GRID};
use crate::sturm::{self, BoundaryCondition, GridSampled, IntegratorOptions, SlProblem, SturmOptions};
use crate::symplectic::{LagrangianFrame, SymplecticSpace};

/// Environment variable overriding the default integration tolerance.
pub const TOL_ENV: &str = "SYMIND_TOL";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Sl(#[from] sturm::SlError),
    #[error(transparent)]
    Maslov(#[from] maslov::MaslovError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Bessel(#[from] bessel::BesselError),
    #[error(transparent)]
    Nbody(#[from] nbody::NbodyError),
    #[error(transparent)]
    Symplectic(#[from] crate::symplectic::SymplecticError),
}

impl CliError {
    /// `module::Variant` of the innermost error, e.g. `sturm::UnknownCatalogEntry`.
    pub fn code(&self) -> String {
        let debug = format!("{self:?}");
        let names: Vec<&str> = debug
            .split(|c: char| !c.is_alphanumeric() && c != '_')
            .take_while(|s| s.chars().next().is_some_and(|c| c.is_ascii_uppercase()))
            .collect();
        let module = |w: &str| match w {
            "Sl" => Some("sturm"),
            "Maslov" => Some("maslov"),
            "Spectral" => Some("spectral"),
            "Bessel" => Some("bessel"),
            "Nbody" => Some("nbody"),
            "Symplectic" => Some("symplectic"),
            _ => None,
        };
        let mut owner = "cli";
        let mut last = names.first().copied().unwrap_or("Unknown");
        for (k, w) in names.iter().enumerate() {
            match module(w) {
                Some(m) if k + 1 < names.len() => owner = m,
                _ => {
                    last = w;
                    break;
                }
            }
        }
        format!("{owner}::{last}")
    }
}

#[derive(Parser, Debug)]
#[command(name = "symind", version, about = "Maslov, triple and Morse indices of Sturm-Liouville problems")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// μ^CLM of a flowed boundary line against a fixed one, or of a rotating frame.
    Maslov(MaslovArgs),
    /// Triple index ι(α, β, γ).
    Triple(TripleArgs),
    /// Hörmander index s(λ₁, λ₂; μ₁, μ₂).
    Hormander(HormanderArgs),
    /// Conjugate points of a regular problem.
    Conjugate(ConjugateArgs),
    /// Morse index under a boundary condition.
    Morse(MorseArgs),
    /// Spectral flow of a discretized family against the Maslov index.
    SpectralFlow(SpectralFlowArgs),
    /// Eigenvalues escaping to −∞ under a rotating limit-circle condition.
    Rellich(RellichArgs),
    /// Bessel-type classification and conjugate points.
    Bessel(BesselArgs),
    /// Asymptotic Morse index of an N-body motion.
    Nbody(NbodyArgs),
    /// Builtin problems.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Runs a JSON configuration file.
    Run(RunArgs),
}

#[derive(Subcommand, Debug, Serialize)]
pub enum CatalogAction {
    List,
    Describe { name: String },
}

#[derive(Args, Debug, Serialize, Default)]
pub struct Output {
    /// JSON report path (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// CSV data path.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct Tolerances {
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ProblemArgs {
    /// Catalog name (`harmonic`, `bessel(-0.3)`, ...) or a coefficient CSV.
    #[arg(long)]
    pub problem: String,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Line {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Friedrichs,
    /// Columns given by `--bc-frame`.
    Frame,
}

#[derive(Args, Debug, Serialize)]
pub struct MaslovArgs {
    #[arg(long, required_unless_present = "moving")]
    pub problem: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub start: Line,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub reference: Line,
    /// Fixed frame as JSON columns, e.g. `[[1,0]]`.
    #[arg(long, requires = "moving")]
    pub fixed: Option<String>,
    /// Frame turned by `e^{tJ}` for `t` in `[0, angle]`.
    #[arg(long, requires = "fixed")]
    pub moving: Option<String>,
    #[arg(long, default_value_t = std::f64::consts::PI, allow_negative_numbers = true)]
    pub angle: f64,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct TripleArgs {
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub gamma: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct HormanderArgs {
    #[arg(long)]
    pub l1: String,
    #[arg(long)]
    pub l2: String,
    #[arg(long)]
    pub m1: String,
    #[arg(long)]
    pub m2: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct ConjugateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub start: Line,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub reference: Line,
    /// Flow from the right end instead of the left.
    #[arg(long)]
    pub from_right: bool,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct MorseArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub bc: BcKind,
    /// Boundary Lagrangian as JSON columns in `(p_l, x_l, p_r, x_r)` coordinates.
    #[arg(long)]
    pub bc_frame: Option<String>,
    /// Truncation offsets for a singular end, largest first.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct SpectralFlowArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub bc: BcKind,
    #[arg(long)]
    pub bc_frame: Option<String>,
    /// Family `R_s = R + s·shift·I`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    /// Rotates the boundary condition by `e^{σ s π/2 J}` instead of shifting `R`.
    #[arg(long, allow_negative_numbers = true)]
    pub bc_rotation: Option<f64>,
    #[arg(long, num_args = 2, default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    pub s_range: Vec<f64>,
    /// Interior grid nodes of the discretization.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Parameter samples written to the eigenvalue trace.
    #[arg(long, default_value_t = 33)]
    pub trace_points: usize,
    /// Eigenvalues per trace row.
    #[arg(long, default_value_t = 6)]
    pub trace_m: usize,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct RellichArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.02, 0.008])]
    pub u: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 1000.0])]
    pub cutoffs: Vec<f64>,
    #[arg(long, default_value_t = 2048)]
    pub grid: usize,
    /// Sense of the turn away from the Friedrichs condition (+1 or −1).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub turn: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct BesselArgs {
    #[arg(long, allow_negative_numbers = true, required_unless_present = "r", conflicts_with = "r")]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Window `(ε, c]` for the conjugate points of the solution vanishing at `c`.
    #[arg(long, num_args = 2, value_names = ["EPS", "C"])]
    pub window: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct NbodyArgs {
    /// Seed name (two-body, lagrange, euler, square) or a JSON configuration file.
    #[arg(long, required_unless_present = "bbar")]
    pub config: Option<String>,
    /// A symmetric `B̄` given directly as JSON rows.
    #[arg(long, conflicts_with = "config")]
    pub bbar: Option<String>,
    #[arg(long, default_value = "collision")]
    pub motion: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// File form of a single invocation.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub bc: Option<String>,
    /// Command flags without the leading dashes, e.g. `{"omega": 10, "interval": [0, 1]}`.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub numeric: Numeric,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numeric {
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub delta_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

const RUN_COMMANDS: [&str; 9] =
    ["maslov", "triple", "hormander", "conjugate", "morse", "spectral-flow", "rellich", "bessel", "nbody"];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    /// Checks the invariants and expands the configuration into command-line arguments.
    pub fn to_args(&self) -> Result<Vec<String>, CliError> {
        if !RUN_COMMANDS.contains(&self.command.as_str()) {
            return Err(CliError::ConfigInvalid(format!("unknown command `{}`", self.command)));
        }
        let mut args = vec!["symind".to_string(), self.command.clone()];
        if let Some(p) = &self.problem {
            resolve_problem_source(p)?;
            args.extend(["--problem".into(), p.clone()]);
        }
        if let Some(bc) = &self.bc {
            args.extend(["--bc".into(), bc.clone()]);
        }
        for (key, value) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                Value::Bool(true) => args.push(flag),
                Value::Bool(false) | Value::Null => {}
                Value::Array(items) => {
                    args.push(flag);
                    for v in items {
                        args.push(scalar(v)?);
                    }
                }
                v => args.extend([flag, scalar(v)?]),
            }
        }
        if let Some(n) = self.numeric.n {
            if n == 0 {
                return Err(CliError::ConfigInvalid("N must be positive".into()));
            }
            args.extend(["--grid".into(), n.to_string()]);
        }
        if let Some(s) = &self.numeric.delta_schedule {
            if s.iter().any(|d| !(*d > 0.0)) {
                return Err(CliError::ConfigInvalid("delta_schedule entries must be positive".into()));
            }
            args.extend(["--schedule".into(), s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")]);
        }
        for (k, v) in &self.numeric.tolerances {
            if !(*v > 0.0) {
                return Err(CliError::ConfigInvalid(format!("tolerance `{k}` must be positive")));
            }
            args.extend([format!("--{k}"), v.to_string()]);
        }
        if let Some(p) = &self.output.report {
            args.extend(["--report".into(), p.display().to_string()]);
        }
        if let Some(p) = &self.output.csv {
            args.extend(["--csv".into(), p.display().to_string()]);
        }
        Ok(args)
    }
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(CliError::ConfigInvalid(format!("unsupported parameter value {other}"))),
    }
}

enum ProblemSource {
    Catalog,
    File(PathBuf),
}

fn resolve_problem_source(spec: &str) -> Result<ProblemSource, CliError> {
    let name = spec.split('(').next().unwrap_or("").trim().to_ascii_lowercase();
    if sturm::catalog::catalog_names().contains(&name.as_str()) || name == "bessel_r" || name == "nbody_asymptotic" {
        return Ok(ProblemSource::Catalog);
    }
    let path = PathBuf::from(spec);
    if path.is_file() {
        Ok(ProblemSource::File(path))
    } else if spec.ends_with(".csv") || spec.contains('/') {
        Err(CliError::ConfigInvalid(format!("problem file `{spec}` does not exist")))
    } else {
        Err(sturm::SlError::UnknownCatalogEntry(spec.to_string()).into())
    }
}

impl ProblemArgs {
    pub fn resolve(&self) -> Result<SlProblem, CliError> {
        let problem = match resolve_problem_source(&self.problem)? {
            ProblemSource::File(path) => {
                let g = GridSampled::from_csv(&path)?;
                let span = g.span();
                SlProblem::new(g, span).with_label(path.display().to_string())
            }
            ProblemSource::Catalog if self.problem.contains('(') => sturm::parse_catalog(&self.problem)?,
            ProblemSource::Catalog => {
                let named = [("omega", self.omega), ("q", self.q), ("r", self.r), ("a", self.a)];
                let args: Vec<String> = named.iter().filter_map(|(k, v)| v.map(|v| format!("{k}={v}"))).collect();
                sturm::parse_catalog(&format!("{}({})", self.problem, args.join(",")))?
            }
        };
        match &self.interval {
            Some(iv) => {
                if !(iv[0] < iv[1]) {
                    return Err(CliError::ConfigInvalid(format!("empty interval [{}, {}]", iv[0], iv[1])));
                }
                Ok(problem.restricted((iv[0], iv[1])))
            }
            None => Ok(problem),
        }
    }
}

impl Tolerances {
    /// Flags first, then `SYMIND_TOL`, then the defaults.
    pub fn options(&self) -> Result<SturmOptions, CliError> {
        let env = match std::env::var(TOL_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| *v > 0.0)
                    .ok_or_else(|| CliError::ConfigInvalid(format!("{TOL_ENV}={s} is not a positive number")))?,
            ),
            Err(_) => None,
        };
        let defaults = IntegratorOptions::default();
        let pick = |flag: Option<f64>, default: f64| -> Result<f64, CliError> {
            match flag.or(env) {
                Some(v) if v > 0.0 => Ok(v),
                Some(v) => Err(CliError::ConfigInvalid(format!("tolerance {v} must be positive"))),
                None => Ok(default),
            }
        };
        let integrator = IntegratorOptions {
            rtol: pick(self.rtol, defaults.rtol)?,
            atol: pick(self.atol, defaults.atol)?,
            ..defaults
        };
        Ok(SturmOptions { integrator, maslov: MaslovOptions::default() })
    }
}

fn line(space: SymplecticSpace, which: Line) -> LagrangianFrame {
    match which {
        Line::Dirichlet => space.dirichlet(),
        Line::Neumann => space.neumann(),
    }
}

/// Parses JSON columns `[[c₁...], [c₂...]]` into a Lagrangian frame of `ℝ^{2n}`.
pub fn parse_frame(text: &str, space: Option<SymplecticSpace>) -> Result<LagrangianFrame, CliError> {
    let cols: Vec<Vec<f64>> =
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(format!("frame `{text}`: {e}")))?;
    let rows = cols.first().map(Vec::len).unwrap_or(0);
    if cols.is_empty() || rows == 0 || rows % 2 != 0 || cols.iter().any(|c| c.len() != rows) {
        return Err(CliError::ConfigInvalid(format!("frame `{text}` needs columns of one even length")));
    }
    let space = space.unwrap_or_else(|| SymplecticSpace::standard(rows / 2));
    let m = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    Ok(LagrangianFrame::new(space, m)?)
}

fn parse_rows(text: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(format!("matrix `{text}`: {e}")))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::ConfigInvalid("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn boundary_condition(
    kind: BcKind,
    frame: &Option<String>,
    problem: &SlProblem,
) -> Result<BoundaryCondition, CliError> {
    Ok(match kind {
        BcKind::Dirichlet => BoundaryCondition::Dirichlet,
        BcKind::Neumann => BoundaryCondition::Neumann,
        BcKind::Friedrichs => BoundaryCondition::FriedrichsAtSingular,
        BcKind::Frame => {
            let text = frame.as_ref().ok_or_else(|| CliError::ConfigInvalid("--bc frame needs --bc-frame".into()))?;
            let n = problem.dim();
            BoundaryCondition::GeneralLagrangian(parse_frame(text, Some(SymplecticSpace::boundary(n, n)))?)
        }
    })
}

/// A computed report plus optional CSV rows.
pub struct Outcome {
    pub report: IndexReport,
    pub csv: Option<(Vec<String>, Vec<Vec<String>>)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.15e}")
}

fn crossing_rows(crossings: &[CrossingSummary]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["t", "multiplicity", "n_plus", "n_zero", "n_minus"].map(String::from).to_vec();
    let rows = crossings
        .iter()
        .map(|c| {
            vec![
                fmt(c.t),
                c.multiplicity.to_string(),
                c.inertia.n_plus.to_string(),
                c.inertia.n_zero.to_string(),
                c.inertia.n_minus.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

fn run_maslov(a: &MaslovArgs) -> Result<Outcome, CliError> {
    let res = match (&a.fixed, &a.moving) {
        (Some(fixed), Some(moving)) => {
            let fixed = parse_frame(fixed, None)?;
            let moving = parse_frame(moving, Some(fixed.space()))?;
            let space = fixed.space();
            let (lo, hi) = if a.angle >= 0.0 { (0.0, a.angle) } else { (a.angle, 0.0) };
            if lo == hi {
                return Err(CliError::ConfigInvalid("angle must be nonzero".into()));
            }
            let path = LagrangianPath::new(space, (lo, hi), move |t| moving.transform(&space.rotation(t)));
            maslov::maslov_clm(&LagrangianPath::constant(fixed), &path, (lo, hi))?
        }
        _ => {
            let pa = ProblemArgs {
                problem: a.problem.clone().unwrap_or_default(),
                omega: a.omega,
                q: None,
                r: None,
                a: None,
                interval: a.interval.clone(),
            };
            let problem = pa.resolve()?;
            if !problem.is_regular() {
                return Err(spectral::SpectralError::NotRegular.into());
            }
            let opts = a.tol.options()?;
            let span = problem.interval();
            let space = SymplecticSpace::standard(problem.dim());
            let fs = sturm::fundamental_solution(&problem, span.0, span, &opts.integrator)?;
            let path = fs.path(&line(space, a.start));
            maslov::maslov_clm_with(&LagrangianPath::constant(line(space, a.reference)), &path, span, &opts.maslov)?
        }
    };
    let mut report = IndexReport::new("maslov_clm", Verdict::Finite { value: res.index });
    report.crossings = res.crossings.iter().map(|c| c.summary()).collect();
    if let Some(p) = res.perturbation {
        report.value("perturbation", p);
    }
    let csv = crossing_rows(&report.crossings);
    Ok(Outcome { report, csv: Some(csv) })
}

fn run_triple(a: &TripleArgs) -> Result<Outcome, CliError> {
    let alpha = parse_frame(&a.alpha, None)?;
    let beta = parse_frame(&a.beta, Some(alpha.space()))?;
    let gamma = parse_frame(&a.gamma, Some(alpha.space()))?;
    let iota = maslov::triple_index(&alpha, &beta, &gamma)?;
    let (_, q) = maslov::triple_q_form(&alpha, &beta, &gamma)?;
    let mut report = IndexReport::new("triple", Verdict::Finite { value: iota as i64 });
    report.value("form_dim", q.nrows() as f64);
    Ok(Outcome { report, csv: None })
}

fn run_hormander(a: &HormanderArgs) -> Result<Outcome, CliError> {
    let l1 = parse_frame(&a.l1, None)?;
    let space = Some(l1.space());
    let (l2, m1, m2) = (parse_frame(&a.l2, space)?, parse_frame(&a.m1, space)?, parse_frame(&a.m2, space)?);
    let s = maslov::hormander_index(&l1, &l2, &m1, &m2)?;
    let mut report = IndexReport::new("hormander", Verdict::Finite { value: s });
    report.value("iota_m1", maslov::triple_index(&l1, &l2, &m1)? as f64);
    report.value("iota_m2", maslov::triple_index(&l1, &l2, &m2)? as f64);
    Ok(Outcome { report, csv: None })
}

fn run_conjugate(a: &ConjugateArgs) -> Result<Outcome, CliError> {
    let problem = a.problem.resolve()?;
    if !problem.is_regular() {
        return Err(spectral::SpectralError::NotRegular.into());
    }
    let opts = a.tol.options()?;
    let span = problem.interval();
    let space = SymplecticSpace::standard(problem.dim());
    let base = if a.from_right { span.1 } else { span.0 };
    let points =
        sturm::conjugate_points(&problem, base, &line(space, a.start), &line(space, a.reference), span, &opts)?;
    let total: usize = points.iter().map(|p| p.multiplicity).sum();
    let mut report = IndexReport::new("conjugate_points", Verdict::Finite { value: total as i64 });
    for (k, p) in points.iter().enumerate() {
        report.value(&format!("t{:03}", k + 1), p.t);
    }
    let rows = points.iter().map(|p| vec![fmt(p.t), p.multiplicity.to_string()]).collect();
    Ok(Outcome { report, csv: Some((vec!["t".into(), "multiplicity".into()], rows)) })
}

fn run_morse(a: &MorseArgs) -> Result<Outcome, CliError> {
    let problem = a.problem.resolve()?;
    let opts = a.tol.options()?;
    let schedule = a.schedule.clone().unwrap_or_else(|| sturm::DEFAULT_SCHEDULE.to_vec());
    let bc = boundary_condition(a.bc, &a.bc_frame, &problem)?;
    let report = match bc {
        BoundaryCondition::Dirichlet | BoundaryCondition::FriedrichsAtSingular if !problem.is_regular() => {
            sturm::morse_index_dirichlet_with(&problem, &schedule, &opts)?
        }
        bc => sturm::morse_index_general_with(&problem, &bc, &schedule, &opts)?,
    };
    let csv = crossing_rows(&report.crossings);
    Ok(Outcome { report, csv: Some(csv) })
}

fn run_spectral_flow(a: &SpectralFlowArgs) -> Result<Outcome, CliError> {
    let problem = a.problem.resolve()?;
    let n = problem.dim();
    let interval = (a.s_range[0], a.s_range[1]);
    if !(interval.0 < interval.1) {
        return Err(CliError::ConfigInvalid("--s-range must be increasing".into()));
    }
    let bc = boundary_condition(a.bc, &a.bc_frame, &problem)?;
    let trace_bc = bc.clone();
    let mut report;
    let family: Box<dyn Fn(f64) -> (SlProblem, BoundaryCondition) + Sync + Send>;
    if let Some(sigma) = a.bc_rotation {
        let base = match &bc {
            BoundaryCondition::Dirichlet => {
                let std = SymplecticSpace::standard(n);
                std.dirichlet().direct_sum(&std.dirichlet())
            }
            BoundaryCondition::Neumann => {
                let std = SymplecticSpace::standard(n);
                std.neumann().direct_sum(&std.neumann())
            }
            BoundaryCondition::GeneralLagrangian(f) => f.clone(),
            BoundaryCondition::FriedrichsAtSingular => return Err(spectral::SpectralError::NotRegular.into()),
        };
        let space = SymplecticSpace::boundary(n, n);
        let path = move |s: f64| base.transform(&space.rotation(sigma * s * FRAC_PI_2));
        let path2 = path.clone();
        let rep = spectral::morse_jump_check(&problem, path, interval, a.grid)?;
        report = IndexReport::new("spectral_flow", Verdict::Finite { value: rep.spectral_flow });
        report.value("maslov", rep.maslov as f64);
        report.value("morse_start", rep.morse_start as f64);
        report.value("morse_end", rep.morse_end as f64);
        report.value("residual", rep.residual as f64);
        if rep.residual != 0 {
            report.note(format!("Morse jump identity fails by {}", rep.residual));
        }
        let p = problem.clone();
        family = Box::new(move |s| (p.clone(), BoundaryCondition::GeneralLagrangian(path2(s))));
    } else {
        let shift = a.shift;
        let shifted = problem.clone().with_perturbation(move |s, _t| DMatrix::identity(n, n) * (shift * s));
        let fam = shifted.clone();
        let rep = spectral::verify_sf_formula(move |s| fam.at_parameter(s), |_| bc.clone(), interval, a.grid)?;
        report = IndexReport::new("spectral_flow", Verdict::Finite { value: rep.sf });
        report.value("maslov", rep.maslov as f64);
        report.value("cells", rep.cells.len() as f64);
        report.crossings = rep.crossings.clone();
        if !rep.agree {
            report.note(format!("spectral flow {} differs from −μ^CLM = {}", rep.sf, -rep.maslov));
        }
        family = Box::new(move |s| (shifted.at_parameter(s), trace_bc.clone()));
    }
    report.value("grid", a.grid as f64);
    let k = a.trace_points.max(2);
    let s_grid: Vec<f64> = (0..k).map(|i| interval.0 + (interval.1 - interval.0) * i as f64 / (k - 1) as f64).collect();
    let trace = spectral::eigen_trace(
        |s| {
            let (p, bc) = family(s);
            spectral::DiscreteOperator::new(&p, &bc, a.grid)
        },
        &s_grid,
        a.trace_m,
        1.0,
    )?;
    let width = trace.width();
    let mut header = vec!["s".to_string()];
    header.extend((1..=width).map(|i| format!("lambda{i}")));
    let rows = trace
        .s_grid
        .iter()
        .zip(&trace.eigenvalues)
        .map(|(s, row)| {
            let mut r = vec![fmt(*s)];
            r.extend((0..width).map(|i| row.get(i).map(|v| fmt(*v)).unwrap_or_default()));
            r
        })
        .collect();
    Ok(Outcome { report, csv: Some((header, rows)) })
}

fn run_rellich(a: &RellichArgs) -> Result<Outcome, CliError> {
    let r = bessel::r_of_q(a.q)?;
    let friedrichs = bessel::friedrichs_trace_frame(r)?;
    let setup = RellichSetup::bessel(a.q, a.delta, RellichSetup::rotating(&friedrichs, a.turn))?;
    let rep = spectral::rellich_ghosts(&setup, &a.u, &a.cutoffs, a.grid)?;
    let smallest = rep
        .samples
        .iter()
        .min_by(|x, y| x.u.total_cmp(&y.u))
        .ok_or_else(|| CliError::ConfigInvalid("--u needs at least one value".into()))?;
    let ghosts = smallest.counts.iter().map(|c| c.1).max().unwrap_or(0);
    let mut report = IndexReport::new("rellich_ghosts", Verdict::Finite { value: ghosts as i64 });
    report.value("prediction", smallest.prediction as f64);
    report.value("bottom", smallest.bottom);
    report.value("monotone", if rep.monotone { 1.0 } else { 0.0 });
    if smallest.counts.iter().any(|c| c.1 as i64 != smallest.prediction) {
        report.note("ghost counts differ from the Maslov prediction at the smallest u");
    }
    let mut header = vec!["u".to_string(), "bottom".to_string(), "prediction".to_string()];
    header.extend(a.cutoffs.iter().map(|m| format!("below_-{m}")));
    let rows = rep
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![fmt(s.u), fmt(s.bottom), s.prediction.to_string()];
            r.extend(s.counts.iter().map(|c| c.1.to_string()));
            r
        })
        .collect();
    Ok(Outcome { report, csv: Some((header, rows)) })
}

fn run_bessel(a: &BesselArgs) -> Result<Outcome, CliError> {
    let param = match (a.q, a.r) {
        (Some(q), _) => bessel::BesselParam::from_q(q)?,
        (None, Some(r)) => bessel::BesselParam::from_r(r)?,
        (None, None) => return Err(CliError::ConfigInvalid("give --q or --r".into())),
    };
    let q = param.q;
    let opts = a.tol.options()?;
    let schedule = a.schedule.clone().unwrap_or_else(|| sturm::DEFAULT_SCHEDULE.to_vec());
    let problem = sturm::catalog::bessel_problem(q)?;
    let mut report = sturm::morse_index_dirichlet_with(&problem, &schedule, &opts)?;
    let class = bessel::classify(&BesselMatrixProblem::constant(DMatrix::from_element(1, 1, q), BesselEnd::ZeroEnd))?;
    report.value("q", q);
    report.value("r", param.r);
    report.note(format!("classification: {:?}", class.overall));
    let mut csv = None;
    if let Some(w) = &a.window {
        let (eps, c) = (w[0], w[1]);
        if !(0.0 < eps && eps < c && c <= 1.0) {
            return Err(CliError::ConfigInvalid(format!("window ({eps}, {c}] must satisfy 0 < eps < c <= 1")));
        }
        let window = problem.restricted((eps, c));
        let dir = SymplecticSpace::standard(1).dirichlet();
        let points = sturm::conjugate_points(&window, c, &dir, &dir, (eps, c), &opts)?;
        let exact = if q < bessel::CRITICAL_Q { bessel::zero_sequence(q, (eps, c)).ok() } else { None };
        report.value("window_conjugate_points", points.len() as f64);
        if let Some(z) = &exact {
            report.value("window_analytic_zeros", z.len() as f64);
        }
        let mut exact_sorted = exact.unwrap_or_default();
        exact_sorted.sort_by(f64::total_cmp);
        let rows = points
            .iter()
            .map(|p| {
                let nearest = exact_sorted.iter().min_by(|x, y| (*x - p.t).abs().total_cmp(&(*y - p.t).abs()));
                vec![fmt(p.t), p.multiplicity.to_string(), nearest.map(|z| fmt(*z)).unwrap_or_default()]
            })
            .collect();
        csv = Some((vec!["t".into(), "multiplicity".into(), "analytic".into()], rows));
    }
    Ok(Outcome { report, csv })
}

fn run_nbody(a: &NbodyArgs) -> Result<Outcome, CliError> {
    let motion: Motion = a.motion.parse()?;
    let (bbar, mut report) = match (&a.config, &a.bbar) {
        (_, Some(text)) => {
            let b = parse_rows(text)?;
            let rep = nbody::asymptotic_morse_from_bbar(&b, motion)?;
            (b, rep)
        }
        (Some(name), None) => {
            let cc = nbody::resolve_config(name)?;
            let rep = nbody::asymptotic_morse(&cc, motion)?;
            (nbody::bbar_matrix(&cc)?, rep)
        }
        (None, None) => return Err(CliError::ConfigInvalid("give --config or --bbar".into())),
    };
    let eigs = crate::linalg::sym_eigenvalues(&crate::linalg::symmetrize(&bbar));
    for (k, e) in eigs.iter().enumerate() {
        report.value(&format!("bbar_eig{k:02}"), *e);
    }
    let rows = eigs
        .iter()
        .enumerate()
        .map(|(k, e)| vec![k.to_string(), fmt(*e), (*e < bessel::CRITICAL_Q).to_string()])
        .collect();
    Ok(Outcome { report, csv: Some((vec!["k".into(), "eigenvalue".into(), "below_threshold".into()], rows)) })
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Hex SHA-256 of the canonical JSON of a command and its resolved tolerance environment.
pub fn config_hash(command: &Command) -> String {
    let canonical = serde_json::json!({
        "command": command,
        "env_tol": std::env::var(TOL_ENV).ok(),
    });
    Sha256::digest(canonical.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Maslov(_) => "maslov",
        Command::Triple(_) => "triple",
        Command::Hormander(_) => "hormander",
        Command::Conjugate(_) => "conjugate",
        Command::Morse(_) => "morse",
        Command::SpectralFlow(_) => "spectral-flow",
        Command::Rellich(_) => "rellich",
        Command::Bessel(_) => "bessel",
        Command::Nbody(_) => "nbody",
        Command::Catalog { .. } => "catalog",
        Command::Run(_) => "run",
    }
}

/// Runs one computing command and returns its report without writing anything.
pub fn compute(command: &Command) -> Result<Outcome, CliError> {
    let mut out = match command {
        Command::Maslov(a) => run_maslov(a)?,
        Command::Triple(a) => run_triple(a)?,
        Command::Hormander(a) => run_hormander(a)?,
        Command::Conjugate(a) => run_conjugate(a)?,
        Command::Morse(a) => run_morse(a)?,
        Command::SpectralFlow(a) => run_spectral_flow(a)?,
        Command::Rellich(a) => run_rellich(a)?,
        Command::Bessel(a) => run_bessel(a)?,
        Command::Nbody(a) => run_nbody(a)?,
        Command::Catalog { .. } | Command::Run(_) => {
            return Err(CliError::ConfigInvalid(format!("`{}` produces no report", command_name(command))))
        }
    };
    out.report.command = command_name(command).to_string();
    out.report.provenance = Some(Provenance {
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(command),
    });
    Ok(out)
}

fn output_of(command: &Command) -> Option<&Output> {
    match command {
        Command::Maslov(a) => Some(&a.output),
        Command::Triple(a) => Some(&a.output),
        Command::Hormander(a) => Some(&a.output),
        Command::Conjugate(a) => Some(&a.output),
        Command::Morse(a) => Some(&a.output),
        Command::SpectralFlow(a) => Some(&a.output),
        Command::Rellich(a) => Some(&a.output),
        Command::Bessel(a) => Some(&a.output),
        Command::Nbody(a) => Some(&a.output),
        Command::Catalog { .. } | Command::Run(_) => None,
    }
}

fn catalog(action: &CatalogAction) -> Result<String, CliError> {
    match action {
        CatalogAction::List => {
            let mut text = String::new();
            for name in sturm::catalog::catalog_names() {
                let first = sturm::describe(name)?.lines().next().unwrap_or_default().to_string();
                text.push_str(&format!("{name:<18} {first}\n"));
            }
            Ok(text)
        }
        CatalogAction::Describe { name } => Ok(sturm::describe(name)? + "\n"),
    }
}

/// Executes a parsed invocation and returns the exit status.
pub fn execute(cli: Cli) -> Result<u8, CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::ConfigInvalid("--jobs must be positive".into()));
        }
        // the global pool can only be set once per process; a second request keeps the first
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let command = match cli.command {
        Command::Catalog { action } => {
            print!("{}", catalog(&action)?);
            return Ok(0);
        }
        Command::Run(r) => {
            let config = RunConfig::from_file(&r.config)?;
            let args = config.to_args()?;
            let parsed = Cli::try_parse_from(&args).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            return execute(Cli { jobs: cli.jobs.or(parsed.jobs), command: parsed.command });
        }
        c => c,
    };
    let out = compute(&command)?;
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let dest = output_of(&command).expect("computing commands carry output paths");
    match &dest.report {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("{}: {}", out.report.command, verdict_text(&out.report.verdict));
        }
        None => print!("{json}"),
    }
    if let (Some(path), Some((header, rows))) = (&dest.csv, &out.csv) {
        write_csv(path, header, rows)?;
    }
    Ok(if out.report.verdict.is_undetermined() { 2 } else { 0 })
}

pub fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Finite { value } => value.to_string(),
        Verdict::Infinite => "infinite".into(),
        Verdict::Undetermined { reason } => format!("undetermined ({reason})"),
    }
}

/// Entry point of the `symind` binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
