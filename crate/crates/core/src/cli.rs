//! Command-line front end: phase sweeps, surface export, convergence
//! studies and the `2π⟨n⟩` oracle check.
//!
//! Exit codes: 0 success, 2 invalid input or I/O failure, 3 numerical guard
//! trip. Tables go to `--out` as CSV or JSON; stdout carries a single
//! summary line and diagnostics go to stderr.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::berry::{
    berry_phase, jc_analytic_phase, mod2pi_distance, number_expectation_phase, BandSelector, BerryError, JcLoop,
    LoopSpec, RabiLoop,
};
use crate::fock::TruncationDim;
use crate::hamiltonians::{JcParams, LambdaParams, RabiParams};
use crate::settings::NumericSettings;
use crate::surfaces::{
    default_tolerance, detect_degeneracy, jc_surfaces, lambda_surfaces, rabi_surfaces, Grid, SheetName,
    SurfaceGrid,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_GRID: &str = "-2:2:101,-2:2:101";
const DEFAULT_ORACLE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical guard tripped: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<BerryError> for CliError {
    fn from(e: BerryError) -> Self {
        match e {
            BerryError::TooFewSteps(_)
            | BerryError::BandOutOfRange(_)
            | BerryError::NoConservedExcitation
            | BerryError::DegenerateParameters => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Jc,
    Rabi,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cqed-berry", version, about = "Berry phases and Born-Oppenheimer surfaces of cavity-QED models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wilson-loop phase of one band, optionally swept over a parameter.
    #[command(allow_negative_numbers = true)]
    Phase(RunArgs),
    /// Semiclassical energy sheets on an (x, p) grid plus a degeneracy report.
    #[command(allow_negative_numbers = true)]
    Surface(RunArgs),
    /// Phase over ladders of loop resolutions K and truncations N.
    #[command(allow_negative_numbers = true)]
    Converge(RunArgs),
    /// Compare the Wilson-loop phase with 2π⟨n⟩ of the base state.
    #[command(allow_negative_numbers = true)]
    Oracle(RunArgs),
}

/// Raw flags; every value may also come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Mode frequency (default 1)
    #[arg(long)]
    pub omega: Option<f64>,
    /// Atomic transition frequency (default omega + delta)
    #[arg(long)]
    pub nu: Option<f64>,
    /// Detuning nu - omega
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    /// Λ drive amplitude
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Λ drive phase
    #[arg(long)]
    pub chi: Option<f64>,
    /// Λ detuning E3 - E1
    #[arg(long)]
    pub delta3: Option<f64>,
    /// Λ lower level energy (default 0)
    #[arg(long)]
    pub e1: Option<f64>,
    /// Λ second lower level energy (default e1)
    #[arg(long)]
    pub e2: Option<f64>,
    /// Fock levels kept (default 60)
    #[arg(long)]
    pub n_trunc: Option<usize>,
    /// Loop discretization K (default 1024)
    #[arg(long)]
    pub steps: Option<usize>,
    /// ground, an ordinal such as 3, or a JC label such as 0+ / 2-
    #[arg(long)]
    pub band: Option<String>,
    /// xmin:xmax:nx,pmin:pmax:np
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// name=start:stop:count with name one of g, nu, delta, omega
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// Comma-separated K values for `converge`
    #[arg(long)]
    pub k_ladder: Option<String>,
    /// Comma-separated N values for `converge`
    #[arg(long)]
    pub n_ladder: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Degeneracy tolerance (`surface`) or pass tolerance (`oracle`)
    #[arg(long)]
    pub tol: Option<f64>,
}

fn fill<T>(
    slot: &mut Option<T>,
    key: &str,
    map: &mut HashMap<String, String>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<(), CliError> {
    if let Some(raw) = map.remove(key) {
        if slot.is_none() {
            *slot = Some(parse(&raw).map_err(|e| invalid(format!("config key `{key}`: {e}")))?);
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("`{s}` is not a valid number"))
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped;
/// keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {} is not key=value", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(invalid(format!("config key `{key}` repeated")));
        }
    }
    Ok(map)
}

impl RunArgs {
    /// Fills unset flags from the config file, if any.
    pub fn merge_config(&mut self) -> Result<(), CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(());
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = parse_config_file(&text)?;
        fill(&mut self.model, "model", &mut map, |s| ModelKind::from_str(s, true))?;
        fill(&mut self.omega, "omega", &mut map, parse_num)?;
        fill(&mut self.nu, "nu", &mut map, parse_num)?;
        fill(&mut self.delta, "delta", &mut map, parse_num)?;
        fill(&mut self.g, "g", &mut map, parse_num)?;
        fill(&mut self.kappa, "kappa", &mut map, parse_num)?;
        fill(&mut self.chi, "chi", &mut map, parse_num)?;
        fill(&mut self.delta3, "delta3", &mut map, parse_num)?;
        fill(&mut self.e1, "e1", &mut map, parse_num)?;
        fill(&mut self.e2, "e2", &mut map, parse_num)?;
        fill(&mut self.n_trunc, "n-trunc", &mut map, parse_num)?;
        fill(&mut self.steps, "steps", &mut map, parse_num)?;
        fill(&mut self.band, "band", &mut map, |s| Ok(s.to_string()))?;
        fill(&mut self.grid, "grid", &mut map, |s| Ok(s.to_string()))?;
        fill(&mut self.sweep, "sweep", &mut map, |s| Ok(s.to_string()))?;
        fill(&mut self.k_ladder, "k-ladder", &mut map, |s| Ok(s.to_string()))?;
        fill(&mut self.n_ladder, "n-ladder", &mut map, |s| Ok(s.to_string()))?;
        fill(&mut self.out, "out", &mut map, |s| Ok(PathBuf::from(s)))?;
        fill(&mut self.format, "format", &mut map, |s| Format::from_str(s, true))?;
        fill(&mut self.tol, "tol", &mut map, parse_num)?;
        let mut unknown: Vec<_> = map.into_keys().collect();
        if !unknown.is_empty() {
            unknown.sort();
            return Err(invalid(format!("unknown config keys: {}", unknown.join(", "))));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    G,
    Nu,
    Delta,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, range) = s.split_once('=').ok_or_else(|| invalid(format!("sweep `{s}` is not name=start:stop:count")))?;
        let param = match name.trim() {
            "g" => SweepParam::G,
            "nu" => SweepParam::Nu,
            "delta" => SweepParam::Delta,
            "omega" => SweepParam::Omega,
            other => return Err(invalid(format!("cannot sweep `{other}`; use g, nu, delta or omega"))),
        };
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(format!("sweep range `{range}` is not start:stop:count")));
        }
        let start: f64 = parse_num(parts[0].trim()).map_err(invalid)?;
        let stop: f64 = parse_num(parts[1].trim()).map_err(invalid)?;
        let count: usize = parse_num(parts[2].trim()).map_err(invalid)?;
        if !start.is_finite() || !stop.is_finite() || count == 0 {
            return Err(invalid(format!("sweep `{s}` needs finite bounds and count ≥ 1")));
        }
        Ok(Self { param, start, stop, count })
    }

    /// Inclusive, evenly spaced values.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Model parameters at one point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPoint {
    pub omega: f64,
    pub nu: f64,
    pub g: f64,
}

impl PhysicalPoint {
    pub fn delta(&self) -> f64 {
        self.nu - self.omega
    }
}

/// Validated settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub point: PhysicalPoint,
    pub lambda: LambdaParams,
    pub n_trunc: TruncationDim,
    pub steps: LoopSpec,
    pub band: BandSelector,
    pub grid: Grid,
    pub sweep: Option<Sweep>,
    pub k_ladder: Vec<usize>,
    pub n_ladder: Vec<usize>,
    pub out: PathBuf,
    pub format: Format,
    pub tol: Option<f64>,
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

fn parse_ladder(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let mut v = s
        .split(',')
        .map(|t| parse_num::<usize>(t.trim()).map_err(|e| invalid(format!("{what}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return Err(invalid(format!("{what} is empty")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn from_args(args: &RunArgs, command: &str) -> Result<Self, CliError> {
        let model = args.model.ok_or_else(|| invalid("--model is required"))?;
        let omega = finite("omega", args.omega.unwrap_or(1.0))?;
        let g = finite("g", args.g.ok_or_else(|| invalid("--g is required"))?)?;
        if g < 0.0 {
            return Err(invalid(format!("g must be non-negative, got {g}")));
        }
        let nu = match (args.nu, args.delta) {
            (Some(nu), Some(delta)) => {
                let nu = finite("nu", nu)?;
                let delta = finite("delta", delta)?;
                if (nu - omega - delta).abs() > 1e-12 * (1.0 + nu.abs() + omega.abs()) {
                    return Err(invalid(format!("nu = {nu} contradicts omega + delta = {}", omega + delta)));
                }
                nu
            }
            (Some(nu), None) => finite("nu", nu)?,
            (None, delta) => omega + finite("delta", delta.unwrap_or(0.0))?,
        };
        if omega <= 0.0 && model != ModelKind::Lambda {
            return Err(invalid(format!("omega must be positive, got {omega}")));
        }

        let e1 = finite("e1", args.e1.unwrap_or(0.0))?;
        let lambda = LambdaParams {
            e1,
            e2: finite("e2", args.e2.unwrap_or(e1))?,
            e3: e1 + finite("delta3", args.delta3.unwrap_or(0.0))?,
            kappa: finite("kappa", args.kappa.unwrap_or(0.0))?,
            g,
            chi: finite("chi", args.chi.unwrap_or(0.0))?,
            omega,
        };
        if lambda.kappa < 0.0 {
            return Err(invalid(format!("kappa must be non-negative, got {}", lambda.kappa)));
        }

        let n_trunc = TruncationDim::new(args.n_trunc.unwrap_or(60)).map_err(|e| invalid(e.to_string()))?;
        let steps = LoopSpec::new(args.steps.unwrap_or(1024)).map_err(CliError::from)?;
        let band = match &args.band {
            Some(b) => b.parse::<BandSelector>().map_err(invalid)?,
            None => BandSelector::GROUND,
        };
        let grid: Grid = args
            .grid
            .as_deref()
            .unwrap_or(DEFAULT_GRID)
            .parse()
            .map_err(|e: crate::surfaces::SurfaceError| invalid(e.to_string()))?;
        let sweep = args.sweep.as_deref().map(Sweep::parse).transpose()?;
        let k_ladder = match &args.k_ladder {
            Some(s) => parse_ladder(s, "k-ladder")?,
            None => vec![steps.steps()],
        };
        if let Some(&k) = k_ladder.first() {
            LoopSpec::new(k).map_err(CliError::from)?;
        }
        let n_ladder = match &args.n_ladder {
            Some(s) => parse_ladder(s, "n-ladder")?,
            None => vec![n_trunc.levels()],
        };
        if let Some(&n) = n_ladder.first() {
            TruncationDim::new(n).map_err(|e| invalid(e.to_string()))?;
        }
        if let Some(t) = args.tol {
            if t.is_nan() || t <= 0.0 || t.is_infinite() {
                return Err(invalid(format!("tol must be positive, got {t}")));
            }
        }
        let format = args.format.unwrap_or(Format::Csv);
        let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.{}", format.extension())));

        Ok(Self {
            model,
            point: PhysicalPoint { omega, nu, g },
            lambda,
            n_trunc,
            steps,
            band,
            grid,
            sweep,
            k_ladder,
            n_ladder,
            out,
            format,
            tol: args.tol,
        })
    }

    /// The sweep points, each with the swept value used for the `param`
    /// column (`g` when nothing is swept).
    pub fn points(&self) -> Vec<(f64, PhysicalPoint)> {
        let base = self.point;
        let Some(sweep) = self.sweep else {
            return vec![(base.g, base)];
        };
        sweep
            .values()
            .into_iter()
            .map(|v| {
                let mut p = base;
                match sweep.param {
                    SweepParam::G => p.g = v,
                    SweepParam::Nu => p.nu = v,
                    SweepParam::Delta => p.nu = p.omega + v,
                    SweepParam::Omega => p.omega = v,
                }
                (v, p)
            })
            .collect()
    }
}

/// Table cell; floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v:.16e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Float(v) if v.is_finite() => {
                let raw = RawValue::from_string(format!("{v:.16e}")).map_err(serde::ser::Error::custom)?;
                raw.serialize(s)
            }
            Cell::Float(_) | Cell::Empty => s.serialize_none(),
            Cell::Int(v) => s.serialize_u64(*v as u64),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

/// Path of the degeneracy-report sidecar next to a surface table.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("degeneracy.json")
}

struct PhaseRow {
    gamma: f64,
    analytic: Option<f64>,
    oracle: f64,
    min_overlap: f64,
}

fn phase_at(config: &RunConfig, point: PhysicalPoint, lp: LoopSpec, n: TruncationDim) -> Result<PhaseRow, CliError> {
    let settings = NumericSettings::default();
    let (result, family) = match config.model {
        ModelKind::Jc => {
            if point.g == 0.0 && point.delta() == 0.0 {
                return Err(invalid("g = 0 at zero detuning leaves every JC doublet degenerate"));
            }
            let params = JcParams::new(point.omega, point.nu, point.g).map_err(|e| invalid(e.to_string()))?;
            berry_phase(&JcLoop { params, truncation: n }, lp, config.band, &settings)?
        }
        ModelKind::Rabi => {
            let params = RabiParams::new(point.omega, point.nu, point.g).map_err(|e| invalid(e.to_string()))?;
            berry_phase(&RabiLoop { params, truncation: n }, lp, config.band, &settings)?
        }
        ModelKind::Lambda => return Err(invalid("this command supports --model jc or rabi")),
    };
    let analytic = match (config.model, config.band) {
        (ModelKind::Jc, BandSelector::Excitation { n, branch }) => Some(jc_analytic_phase(point.delta(), point.g, n, branch)?),
        _ => None,
    };
    Ok(PhaseRow {
        gamma: result.gamma,
        analytic,
        oracle: number_expectation_phase(&family.states()[0]),
        min_overlap: result.min_overlap,
    })
}

fn require_loop_model(config: &RunConfig) -> Result<(), CliError> {
    if config.model == ModelKind::Lambda {
        return Err(invalid("this command supports --model jc or rabi"));
    }
    Ok(())
}

fn opt_cell(v: Option<f64>) -> Cell {
    v.map(Cell::Float).unwrap_or(Cell::Empty)
}

pub fn cmd_phase(config: &RunConfig) -> Result<String, CliError> {
    require_loop_model(config)?;
    let mut table = Table::new(vec!["param", "gamma_wilson", "gamma_analytic", "gamma_oracle_2pi_n", "min_overlap", "K", "n_trunc"]);
    let points = config.points();
    for (param, point) in &points {
        let row = phase_at(config, *point, config.steps, config.n_trunc)?;
        table.push(vec![
            Cell::Float(*param),
            Cell::Float(row.gamma),
            opt_cell(row.analytic),
            Cell::Float(row.oracle),
            Cell::Float(row.min_overlap),
            Cell::Int(config.steps.steps()),
            Cell::Int(config.n_trunc.levels()),
        ]);
    }
    write_file(&config.out, &table.render(config.format))?;
    let summary = match table.rows.as_slice() {
        [row] => format!("phase: gamma_wilson={} written to {}", row[1], config.out.display()),
        rows => format!("phase: {} rows written to {}", rows.len(), config.out.display()),
    };
    Ok(summary)
}

fn build_surface(config: &RunConfig) -> Result<SurfaceGrid, CliError> {
    let p = config.point;
    Ok(match config.model {
        ModelKind::Jc => jc_surfaces(p.delta(), p.g, config.grid),
        ModelKind::Rabi => rabi_surfaces(p.omega, p.nu, p.g, config.grid),
        ModelKind::Lambda => lambda_surfaces(&config.lambda, config.grid).map_err(|e| invalid(e.to_string()))?,
    })
}

pub fn cmd_surface(config: &RunConfig) -> Result<String, CliError> {
    let surface = build_surface(config)?;
    let names: Vec<SheetName> = surface.sheets().iter().map(|(n, _)| *n).collect();
    let mut columns = vec!["x", "p"];
    columns.extend(names.iter().map(|n| n.label()));
    let mut table = Table::new(columns);
    for (i, j, x, p) in surface.grid().nodes() {
        let mut row = vec![Cell::Float(x), Cell::Float(p)];
        row.extend(names.iter().map(|&n| Cell::Float(surface.value(n, i, j).expect("sheet present"))));
        table.push(row);
    }
    let tol = config.tol.unwrap_or_else(|| default_tolerance(&surface));
    let report = detect_degeneracy(&surface, SheetName::Minus, SheetName::Plus, tol).map_err(|e| invalid(e.to_string()))?;
    write_file(&config.out, &table.render(config.format))?;
    let sidecar = sidecar_path(&config.out);
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&sidecar, &json)?;
    Ok(format!(
        "surface: classification={} min_gap={:.16e} written to {} and {}",
        serde_json::to_value(report.classification).expect("enum serializes").as_str().unwrap_or("?"),
        report.min_gap,
        config.out.display(),
        sidecar.display()
    ))
}

pub fn cmd_converge(config: &RunConfig) -> Result<String, CliError> {
    require_loop_model(config)?;
    let point = config.point;
    let mut runs = Vec::new();
    for &n in &config.n_ladder {
        let dim = TruncationDim::new(n).map_err(|e| invalid(e.to_string()))?;
        for &k in &config.k_ladder {
            let lp = LoopSpec::new(k)?;
            let row = phase_at(config, point, lp, dim)?;
            runs.push((k, n, row.gamma, row.analytic));
        }
    }
    let finest = runs.last().expect("ladders are non-empty").2;
    let mut table = Table::new(vec!["K", "N", "gamma", "error_vs_finest", "error_vs_reference"]);
    for (k, n, gamma, analytic) in &runs {
        table.push(vec![
            Cell::Int(*k),
            Cell::Int(*n),
            Cell::Float(*gamma),
            Cell::Float(mod2pi_distance(*gamma, finest)),
            opt_cell(analytic.map(|a| mod2pi_distance(*gamma, a))),
        ]);
    }
    write_file(&config.out, &table.render(config.format))?;
    Ok(format!("converge: {} runs written to {}", runs.len(), config.out.display()))
}

pub fn cmd_oracle(config: &RunConfig) -> Result<String, CliError> {
    require_loop_model(config)?;
    let tol = config.tol.unwrap_or(DEFAULT_ORACLE_TOL);
    let row = phase_at(config, config.point, config.steps, config.n_trunc)?;
    let distance = mod2pi_distance(row.gamma, row.oracle);
    let pass = distance <= tol;
    let mut table = Table::new(vec!["gamma_wilson", "gamma_oracle_2pi_n", "distance", "tol", "K", "n_trunc", "pass"]);
    table.push(vec![
        Cell::Float(row.gamma),
        Cell::Float(row.oracle),
        Cell::Float(distance),
        Cell::Float(tol),
        Cell::Int(config.steps.steps()),
        Cell::Int(config.n_trunc.levels()),
        Cell::Text(pass.to_string()),
    ]);
    write_file(&config.out, &table.render(config.format))?;
    if pass {
        Ok(format!("oracle: PASS distance={distance:.16e} tol={tol:.16e}"))
    } else {
        Err(CliError::Numerical(format!(
            "oracle mismatch: gamma_wilson={:.16e} gamma_oracle={:.16e} distance={distance:.16e} > tol={tol:.16e}",
            row.gamma, row.oracle
        )))
    }
}

type CommandFn = fn(&RunConfig) -> Result<String, CliError>;

fn dispatch(cli: Cli) -> Result<String, CliError> {
    let (name, args, cmd): (&str, RunArgs, CommandFn) = match cli.command {
        Command::Phase(a) => ("phase", a, cmd_phase),
        Command::Surface(a) => ("surface", a, cmd_surface),
        Command::Converge(a) => ("converge", a, cmd_converge),
        Command::Oracle(a) => ("oracle", a, cmd_oracle),
    };
    let mut args = args;
    args.merge_config()?;
    let config = RunConfig::from_args(&args, name)?;
    cmd(&config)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
