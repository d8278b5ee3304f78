//! The `lbern` experiment runner.
//!
//! Every command writes one CSV table to standard output (or `--out`). The
//! effective configuration is echoed first as a `# config:` line, free-form
//! diagnostics follow the table as `# NOTE` lines, and each checked property
//! ends up on a `# SUMMARY <name> PASS|FAIL <detail>` line. The process exits
//! with 0 when every summary passes, 1 when one fails and 2 on usage errors.
//!
//! Flags may also be read from a TOML file given by `--config`; flags win.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer};

use crate::basis::{bernstein_basis, lambda_basis, Degree, ShapeParam};
use crate::bivariate::{
    bivariate_catalog, bound_bivariate, default_bivariate_resolution, grid2, interior_grid2, rho_norm_error,
    strictly_decreasing, volkov_check, BivariateFunction, BivariateSpec, Monomial2, BIVARIATE_CATALOG,
};
use crate::bounds::{
    bound_c1, bound_global, bound_lipschitz, voronovskaja_residual_with, voronovskaja_rhs, voronovskaja_target,
    BoundReport, SecondOrderCoefficient, HOLDS_SLACK, VORONOVSKAJA_CONSTANT,
};
use crate::error::Error;
use crate::function::{catalog, FunctionHandle, CATALOG};
use crate::smoothness::{
    default_resolution, dt_weight, lipschitz_check, modulus_dt_midpoint, modulus_dt_second, modulus_first,
    LipschitzSpec,
};
use crate::summability::{
    a_stat_limit, sequence, uniform_error_experiment, voronovskaja_experiment, MatrixPreset, StatLimitReport,
    WeightPreset, DEFAULT_EPSILONS, DEFAULT_LADDER, SEQUENCES,
};
use crate::univariate::{interior_grid, uniform_grid, OperatorSpec};

#[derive(Parser, Debug)]
#[command(name = "lbern", version, about = "Experiments with lambda-Bernstein operators; CSV on stdout")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Tabulate f and B f on a grid; `--check identities` runs the structural checks.
    Eval(Settings),
    /// Closed-form moments against direct sums, univariate and bivariate.
    Moments(Settings),
    /// Pointwise error bounds (`--bound global,c1,lipschitz`) or `--check moduli`.
    Converge(Settings),
    /// Scaled errors and residuals along a degree ladder at one point.
    Voronovskaja(Settings),
    /// A-statistical limits of error sequences (`--mode error|voronovskaja`).
    Statistical(Settings),
    /// Bivariate checks: `--check volkov,bound,rho` (default: all).
    Bivariate(Settings),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Moments(_) => "moments",
            Command::Converge(_) => "converge",
            Command::Voronovskaja(_) => "voronovskaja",
            Command::Statistical(_) => "statistical",
            Command::Bivariate(_) => "bivariate",
        }
    }

    fn settings(&self) -> &Settings {
        match self {
            Command::Eval(s)
            | Command::Moments(s)
            | Command::Converge(s)
            | Command::Voronovskaja(s)
            | Command::Statistical(s)
            | Command::Bivariate(s) => s,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Flags shared by all commands. Unset values fall back to the config file,
/// then to per-command defaults.
#[derive(Args, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Degree in x.
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree in y (bivariate).
    #[arg(long)]
    pub m: Option<usize>,
    /// Shape parameter(s) in [-1, 1], comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(deserialize_with = "one_or_many")]
    pub lambda: Option<Vec<f64>>,
    /// Catalog function, or `all`.
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    /// Grid point count (per axis for bivariate grids).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Degree ladder, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Degree ladder for the weighted-norm check.
    #[arg(long, value_delimiter = ',')]
    pub rho_ladder: Option<Vec<usize>>,
    /// Summability matrix: cesaro, riesz_linear, identity.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Weighted-mean composition: none, unit, linear.
    #[arg(long)]
    pub weights: Option<String>,
    /// Named sequence (statistical).
    #[arg(long)]
    pub seq: Option<String>,
    /// Limit tested for `--seq`.
    #[arg(long, allow_hyphen_values = true)]
    pub limit: Option<f64>,
    /// Statistical mode: error or voronovskaja.
    #[arg(long)]
    pub mode: Option<String>,
    /// Check selector, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub check: Option<Vec<String>>,
    /// Bounds to evaluate: global, c1, lipschitz.
    #[arg(long, value_delimiter = ',')]
    pub bound: Option<Vec<String>>,
    /// Second-order coefficient: half_alpha or alpha_plus_one_half.
    #[arg(long)]
    pub coefficient: Option<String>,
    /// Epsilons for statistical limits, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Lipschitz constant M.
    #[arg(long)]
    pub lip_m: Option<f64>,
    /// Lipschitz exponent.
    #[arg(long)]
    pub lip_eta: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! fill {
    ($hi:ident, $lo:ident; $($field:ident),*) => {
        Settings { config: $hi.config, $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl Settings {
    /// Field-wise `self` over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        let hi = self;
        let lo = lower;
        fill!(hi, lo; n, m, lambda, function, grid, ladder, rho_ladder, matrix, weights, seq, limit, mode,
            check, bound, coefficient, eps, x, y, lip_m, lip_eta, k1, k2, out)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// One command's output.
#[derive(Debug, Clone, Default)]
pub struct CsvReport {
    pub config: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
    pub summaries: Vec<Summary>,
}

impl CsvReport {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), ..Self::default() }
    }

    fn set(&mut self, key: &str, value: impl Display) {
        self.config.push((key.to_string(), value.to_string()));
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn summary(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.summaries.push(Summary { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.summaries.iter().all(|s| s.pass)
    }

    pub fn render(&self) -> CliResult<String> {
        let mut out = String::from("# config:");
        for (k, v) in &self.config {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"));
        for note in &self.notes {
            out.push_str(&format!("# NOTE {note}\n"));
        }
        for s in &self.summaries {
            out.push_str(&format!("# SUMMARY {} {} {}\n", s.name, if s.pass { "PASS" } else { "FAIL" }, s.detail));
        }
        Ok(out)
    }
}

/// 17 significant digits, round-trips through `f64::from_str`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn list<T: Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(";"))
}

fn unknown(kind: &str, name: &str, valid: &[&str]) -> CliError {
    usage(format!("unknown {kind} `{name}`; valid: {}", valid.join(", ")))
}

fn univariate_functions(sel: Option<&str>, default: &str) -> CliResult<Vec<FunctionHandle>> {
    match sel.unwrap_or(default) {
        "all" => Ok(CATALOG.iter().map(|n| catalog(n).expect("catalog entry")).collect()),
        name => catalog(name).map(|f| vec![f]).ok_or_else(|| unknown("function", name, CATALOG)),
    }
}

fn bivariate_functions(sel: Option<&str>) -> CliResult<Vec<BivariateFunction>> {
    match sel.unwrap_or("all") {
        "all" => Ok(BIVARIATE_CATALOG.iter().map(|n| bivariate_catalog(n).expect("catalog entry")).collect()),
        name => bivariate_catalog(name).map(|f| vec![f]).ok_or_else(|| unknown("bivariate function", name, BIVARIATE_CATALOG)),
    }
}

struct Ctx {
    s: Settings,
}

impl Ctx {
    fn lambdas(&self, default: &[f64]) -> CliResult<Vec<f64>> {
        let ls = self.s.lambda.clone().unwrap_or_else(|| default.to_vec());
        for &l in &ls {
            ShapeParam::new(l)?;
        }
        if ls.is_empty() {
            return Err(usage("--lambda needs at least one value"));
        }
        Ok(ls)
    }

    fn degrees(&self, default: &[usize]) -> CliResult<Vec<usize>> {
        let ds = match (&self.s.ladder, self.s.n) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        };
        if ds.is_empty() {
            return Err(usage("--ladder needs at least one degree"));
        }
        for &d in &ds {
            Degree::new(d)?;
        }
        Ok(ds)
    }

    fn ladder(&self, given: &Option<Vec<usize>>, default: &[usize]) -> CliResult<Vec<usize>> {
        let l = given.clone().unwrap_or_else(|| default.to_vec());
        if l.is_empty() || l.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage(format!("ladder {} must be nonempty and strictly increasing", list(&l))));
        }
        Ok(l)
    }

    fn grid(&self, default: usize) -> CliResult<usize> {
        match self.s.grid.unwrap_or(default) {
            0 => Err(usage("--grid must be positive")),
            g => Ok(g),
        }
    }

    fn checks(&self, valid: &[&str], default: &[&str]) -> CliResult<Vec<String>> {
        let checks = self.s.check.clone().unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect());
        for c in &checks {
            if !valid.contains(&c.as_str()) {
                return Err(unknown("check", c, valid));
            }
        }
        Ok(checks)
    }

    fn coefficient(&self) -> CliResult<SecondOrderCoefficient> {
        match self.s.coefficient.as_deref().unwrap_or("half_alpha") {
            "half_alpha" => Ok(SecondOrderCoefficient::HalfAlpha),
            "alpha_plus_one_half" => Ok(SecondOrderCoefficient::AlphaPlusOneHalf),
            other => Err(unknown("coefficient", other, &["half_alpha", "alpha_plus_one_half"])),
        }
    }
}

/// Parses flags and the optional config file into a command with merged settings.
pub fn parse(args: impl IntoIterator<Item = OsString>) -> Result<Command, clap::Error> {
    Ok(Cli::try_parse_from(args)?.command)
}

fn resolve(command: &Command) -> CliResult<Settings> {
    let flags = command.settings().clone();
    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<Settings>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Settings::default(),
    };
    Ok(flags.over(file))
}

/// Runs one command and returns its report.
pub fn execute(command: &Command) -> CliResult<CsvReport> {
    let ctx = Ctx { s: resolve(command)? };
    let mut report = match command {
        Command::Eval(_) => cmd_eval(&ctx),
        Command::Moments(_) => cmd_moments(&ctx),
        Command::Converge(_) => cmd_converge(&ctx),
        Command::Voronovskaja(_) => cmd_voronovskaja(&ctx),
        Command::Statistical(_) => cmd_statistical(&ctx),
        Command::Bivariate(_) => cmd_bivariate(&ctx),
    }?;
    report.config.insert(0, ("command".into(), command.name().into()));
    Ok(report)
}

/// Entry point for the binary; returns the process exit status.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let command = match parse(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = execute(&command).and_then(|report| {
        let text = report.render()?;
        match &resolve(&command)?.out {
            Some(path) => fs::write(path, &text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(report.passed())
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("lbern: {e}");
            e.exit_code()
        }
    }
}

fn cmd_eval(ctx: &Ctx) -> CliResult<CsvReport> {
    let checks = ctx.checks(&["identities"], &[])?;
    if !checks.is_empty() {
        return cmd_identities(ctx);
    }
    let name = ctx.s.function.as_deref().unwrap_or("id");
    if catalog(name).is_none() && bivariate_catalog(name).is_none() {
        let all: Vec<&str> = CATALOG.iter().chain(BIVARIATE_CATALOG.iter().filter(|n| !CATALOG.contains(n))).copied().collect();
        return Err(unknown("function", name, &all));
    }
    let bivariate = ctx.s.m.is_some() || ctx.s.y.is_some() || catalog(name).is_none();
    let degrees = ctx.degrees(&[10])?;
    let lambdas = ctx.lambdas(&[1.0])?;
    let count = ctx.grid(11)?;

    if !bivariate {
        let f = univariate_functions(Some(name), name)?.remove(0);
        let grid = match ctx.s.x {
            Some(x) => vec![x],
            None => uniform_grid(count),
        };
        let mut report = CsvReport::new(&["n", "lambda", "x", "f", "B_f", "error"]);
        report.set("fn", name);
        report.set("degrees", list(&degrees));
        report.set("lambda", list(&lambdas));
        report.set("grid", grid.len());
        let mut finite = true;
        for &n in &degrees {
            for &l in &lambdas {
                let op = OperatorSpec::new(n, l)?;
                for &x in &grid {
                    let b = op.apply(&f, x)?;
                    let fx = f.eval(x);
                    finite &= b.is_finite();
                    report.row(vec![n.to_string(), real(l), real(x), real(fx), real(b), real(b - fx)]);
                }
            }
        }
        report.summary("finite_values", finite, format!("rows={}", report.rows.len()));
        return Ok(report);
    }

    let f = bivariate_functions(Some(name))?.remove(0);
    let grid = match (ctx.s.x, ctx.s.y) {
        (Some(x), Some(y)) => vec![(x, y)],
        _ => grid2(count),
    };
    let mut report = CsvReport::new(&["n", "m", "lambda", "x", "y", "f", "B_f", "error"]);
    report.set("fn", name);
    report.set("degrees", list(&degrees));
    report.set("lambda", list(&lambdas));
    report.set("grid", grid.len());
    let mut finite = true;
    for &n in &degrees {
        let m = ctx.s.m.unwrap_or(n);
        for &l in &lambdas {
            let prepared = BivariateSpec::new(n, m, l)?.prepare(&f);
            for &(x, y) in &grid {
                let b = prepared.eval(x, y)?;
                let fxy = f.eval(x, y);
                finite &= b.is_finite();
                report.row(vec![n.to_string(), m.to_string(), real(l), real(x), real(y), real(fxy), real(b), real(b - fxy)]);
            }
        }
    }
    report.summary("finite_values", finite, format!("rows={}", report.rows.len()));
    Ok(report)
}

fn cmd_identities(ctx: &Ctx) -> CliResult<CsvReport> {
    let degrees = ctx.degrees(&[2, 3, 5, 10, 25, 50, 100])?;
    let lambdas = ctx.lambdas(&[-1.0, -0.5, 0.0, 0.5, 1.0])?;
    let grid = uniform_grid(ctx.grid(101)?);
    let mut report = CsvReport::new(&["identity", "n", "lambda", "max_deviation"]);
    report.set("check", "identities");
    report.set("degrees", list(&degrees));
    report.set("lambda", list(&lambdas));
    report.set("grid", grid.len());

    let functions = univariate_functions(Some("all"), "all")?;
    let (g, h) = (catalog("exp").expect("exp"), catalog("sinpi").expect("sinpi"));
    let separable = BivariateFunction::new("exp*sinpi", |s, t| s.exp() * (std::f64::consts::PI * t).sin());
    let (mut partition, mut endpoint, mut reduction, mut factor) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for &n in &degrees {
        for &l in &lambdas {
            let (d, lam) = (Degree::new(n)?, ShapeParam::new(l)?);
            let mut worst = 0.0f64;
            for &x in &grid {
                worst = worst.max((lambda_basis(d, lam, x)?.sum() - 1.0).abs());
            }
            partition = partition.max(worst);
            report.row(vec!["partition_of_unity".into(), n.to_string(), real(l), real(worst)]);

            let op = OperatorSpec::new(n, l)?;
            let mut worst = 0.0f64;
            for f in &functions {
                for x in [0.0, 1.0] {
                    worst = worst.max((op.apply(f, x)? - f.eval(x)).abs());
                }
            }
            endpoint = endpoint.max(worst);
            report.row(vec!["endpoint_interpolation".into(), n.to_string(), real(l), real(worst)]);

            let spec = BivariateSpec::new(n, n, l)?;
            let prepared = spec.prepare(&separable);
            let (pg, ph) = (op.prepare(&g), op.prepare(&h));
            let mut worst = 0.0f64;
            for &(x, y) in &grid2(11) {
                worst = worst.max((prepared.eval(x, y)? - pg.eval(x) * ph.eval(y)).abs());
            }
            factor = factor.max(worst);
            report.row(vec!["separable_factorization".into(), n.to_string(), real(l), real(worst)]);
        }
        let d = Degree::new(n)?;
        let mut worst = 0.0f64;
        for &x in &grid {
            let lam = lambda_basis(d, ShapeParam::new(0.0)?, x)?;
            let classical = bernstein_basis(n, x)?;
            for (a, b) in lam.values.iter().zip(&classical) {
                worst = worst.max((a - b).abs());
            }
        }
        reduction = reduction.max(worst);
        report.row(vec!["lambda_zero_reduction".into(), n.to_string(), real(0.0), real(worst)]);
    }
    report.summary("partition_of_unity", partition <= 1e-12, format!("max={}", real(partition)));
    report.summary("endpoint_interpolation", endpoint == 0.0, format!("max={}", real(endpoint)));
    report.summary("lambda_zero_reduction", reduction <= 1e-14, format!("max={}", real(reduction)));
    report.summary("separable_factorization", factor <= 1e-12, format!("max={}", real(factor)));
    Ok(report)
}

/// Degrees used for the bivariate half of the moment check.
const BIVARIATE_MOMENT_DEGREES: [usize; 4] = [2, 3, 5, 10];

fn cmd_moments(ctx: &Ctx) -> CliResult<CsvReport> {
    let degrees = ctx.degrees(&[2, 3, 5, 10, 25, 50])?;
    let lambdas = ctx.lambdas(&[-1.0, -0.5, 0.0, 0.5, 1.0])?;
    let grid = uniform_grid(ctx.grid(101)?);
    let mut report = CsvReport::new(&[
        "n", "lambda", "x", "m0", "m1", "m2", "m3", "m4", "beta", "alpha", "d0", "d1", "d2", "d3", "d4",
    ]);
    report.set("degrees", list(&degrees));
    report.set("lambda", list(&lambdas));
    report.set("grid", grid.len());

    let monomials: Vec<FunctionHandle> = (0..=4).map(FunctionHandle::monomial).collect();
    let mut max_delta = 0.0f64;
    for &n in &degrees {
        for &l in &lambdas {
            let op = OperatorSpec::new(n, l)?;
            let prepared: Vec<_> = monomials.iter().map(|f| op.prepare(f)).collect();
            for &x in &grid {
                let ms = op.moments(x)?;
                let mut row = vec![n.to_string(), real(l), real(x)];
                row.extend(ms.raw.iter().map(|&v| real(v)));
                row.push(real(ms.beta));
                row.push(real(ms.alpha));
                for (j, p) in prepared.iter().enumerate() {
                    let d = ms.raw[j] - p.eval(x);
                    max_delta = max_delta.max(d.abs());
                    row.push(real(d));
                }
                report.row(row);
            }
        }
    }
    report.summary("moment_oracle", max_delta <= 1e-10, format!("max_delta={}", real(max_delta)));

    let mut max2 = 0.0f64;
    let grid2d = grid2(11);
    for n in BIVARIATE_MOMENT_DEGREES {
        for m in BIVARIATE_MOMENT_DEGREES {
            for &l in &lambdas {
                let spec = BivariateSpec::new(n, m, l)?;
                for which in Monomial2::ALL {
                    let prepared = spec.prepare(&which.function());
                    for &(x, y) in &grid2d {
                        max2 = max2.max((spec.raw_moment2(which, x, y)? - prepared.eval(x, y)?).abs());
                    }
                }
            }
        }
    }
    report.summary(
        "bivariate_moment_oracle",
        max2 <= 1e-10,
        format!("degrees={} max_delta={}", list(&BIVARIATE_MOMENT_DEGREES), real(max2)),
    );
    Ok(report)
}

fn cmd_converge(ctx: &Ctx) -> CliResult<CsvReport> {
    let checks = ctx.checks(&["bounds", "moduli"], &["bounds"])?;
    if checks.iter().any(|c| c == "moduli") {
        if checks.len() > 1 {
            return Err(usage("--check moduli cannot be combined with other checks"));
        }
        return cmd_moduli();
    }
    const BOUNDS: &[&str] = &["global", "c1", "lipschitz"];
    let bounds = ctx.s.bound.clone().unwrap_or_else(|| vec!["global".into(), "c1".into()]);
    for b in &bounds {
        if !BOUNDS.contains(&b.as_str()) {
            return Err(unknown("bound", b, BOUNDS));
        }
    }
    let lambdas = ctx.lambdas(&[-1.0, 0.0, 1.0])?;
    let resolution = default_resolution();
    let mut report = CsvReport::new(&["bound", "fn", "n", "lambda", "x", "error", "bound_value", "holds"]);
    report.set("bound", list(&bounds));
    report.set("lambda", list(&lambdas));
    report.set("resolution", resolution);

    for kind in &bounds {
        let lipschitz = kind == "lipschitz";
        let functions = univariate_functions(ctx.s.function.as_deref(), if lipschitz { "id" } else { "all" })?;
        let degrees = ctx.degrees(if lipschitz { &[2, 10, 100] } else { &[10, 50, 200] })?;
        let grid: Vec<f64> = if lipschitz {
            let count = ctx.grid(99)?;
            (1..=count).map(|i| i as f64 / count as f64).collect()
        } else {
            interior_grid(ctx.grid(19)?)
        };
        report.set(&format!("{kind}.degrees"), list(&degrees));
        report.set(&format!("{kind}.grid"), grid.len());

        let lip = if lipschitz {
            let spec = LipschitzSpec::new(
                ctx.s.lip_m.unwrap_or(std::f64::consts::SQRT_2),
                ctx.s.lip_eta.unwrap_or(1.0),
                ctx.s.k1.unwrap_or(0.0),
                ctx.s.k2.unwrap_or(1.0),
            )?;
            report.set("lipschitz", format!("M={};eta={};k1={};k2={}", spec.m, spec.eta, spec.k1, spec.k2));
            for f in &functions {
                let member = lipschitz_check(|t| f.eval(t), &spec, resolution)?;
                let ratio = member.worst.map_or(0.0, |w| w.ratio());
                report.summary(&format!("lipschitz_class[{}]", f.name()), member.holds, format!("max_ratio={}", real(ratio)));
            }
            Some(spec)
        } else {
            None
        };

        let (mut total, mut failures) = (0usize, 0usize);
        for f in &functions {
            for &n in &degrees {
                for &l in &lambdas {
                    let op = OperatorSpec::new(n, l)?;
                    for &x in &grid {
                        let outcome: Result<BoundReport, Error> = match kind.as_str() {
                            "global" => bound_global(&op, f, x, dt_weight, dt_weight, resolution),
                            "c1" => bound_c1(&op, f, x, resolution),
                            _ => bound_lipschitz(&op, f, lip.as_ref().expect("lipschitz spec"), x),
                        };
                        total += 1;
                        let (error, bound, holds) = match outcome {
                            Ok(r) => (real(r.error), real(r.bound), r.holds.to_string()),
                            Err(e) => (String::new(), String::new(), format!("error: {e}")),
                        };
                        if holds != "true" {
                            failures += 1;
                        }
                        report.row(vec![kind.clone(), f.name().into(), n.to_string(), real(l), real(x), error, bound, holds]);
                    }
                }
            }
        }
        report.summary(&format!("bound_{kind}"), failures == 0, format!("points={total} failures={failures}"));

        if let Some(spec) = lip {
            if functions.iter().any(|f| f.name() == "id") && degrees.contains(&2) && lambdas.contains(&1.0) {
                let r = bound_lipschitz(&OperatorSpec::new(2, 1.0)?, &catalog("id").expect("id"), &spec, 0.25)?;
                let pass = (r.error - 0.046875).abs() <= 1e-12 && r.bound > r.error;
                report.summary(
                    "lipschitz_fixture",
                    pass,
                    format!("n=2 lambda=1 x=0.25 error={} bound={}", real(r.error), real(r.bound)),
                );
            }
        }
    }
    Ok(report)
}

/// Brute-force `sup_{0<h≤δ} sup_x g(x, h)` on an unrefined `dense × dense` grid.
fn dense_sup(delta: f64, dense: usize, g: impl Fn(f64, f64) -> Option<f64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..=dense {
        let x = i as f64 / dense as f64;
        for j in 1..=dense {
            if let Some(v) = g(x, delta * j as f64 / dense as f64) {
                best = best.max(v);
            }
        }
    }
    best
}

fn cmd_moduli() -> CliResult<CsvReport> {
    const DENSE: usize = 2_000;
    let resolution = default_resolution();
    let mut report =
        CsvReport::new(&["case", "delta", "estimate", "dense", "analytic", "gap_analytic", "gap_dense"]);
    report.set("check", "moduli");
    report.set("resolution", resolution);
    report.set("dense", DENSE);
    let inside = |t: f64| (0.0..=1.0).contains(&t);

    let mut worst = 0.0f64;
    for delta in [0.05, 0.1, 0.2, 0.5] {
        let cases = [
            (
                "first_id",
                modulus_first(|t| t, delta, resolution)?.value,
                dense_sup(delta, DENSE, |x, h| inside(x + h).then_some(h)),
                delta,
            ),
            (
                "dt_second_square",
                modulus_dt_second(|t| t * t, delta, resolution)?.value,
                dense_sup(delta, DENSE, |x, h| {
                    let s = h * dt_weight(x);
                    (inside(x - s) && inside(x + s)).then(|| ((x + s).powi(2) - 2.0 * x * x + (x - s).powi(2)).abs())
                }),
                2.0 * delta * delta * 0.25,
            ),
            (
                "dt_midpoint_id",
                modulus_dt_midpoint(|t| t, delta, resolution)?.value,
                dense_sup(delta, DENSE, |x, h| {
                    let s = 0.5 * h * dt_weight(x);
                    (inside(x - s) && inside(x + s)).then_some(2.0 * s)
                }),
                delta * 0.5,
            ),
        ];
        for (name, estimate, dense, analytic) in cases {
            let gap_a = (estimate - analytic).abs() / analytic;
            let gap_d = (estimate - dense).abs() / dense;
            worst = worst.max(gap_a).max(gap_d);
            report.row(vec![name.into(), real(delta), real(estimate), real(dense), real(analytic), real(gap_a), real(gap_d)]);
        }
    }
    report.summary("modulus_estimators", worst <= 0.05, format!("max_relative_gap={}", real(worst)));
    Ok(report)
}

fn cmd_voronovskaja(ctx: &Ctx) -> CliResult<CsvReport> {
    let name = ctx.s.function.as_deref().unwrap_or("exp");
    let f = univariate_functions(Some(name), name)?.remove(0);
    let x = ctx.s.x.unwrap_or(0.5);
    let lambdas = ctx.lambdas(&[1.0])?;
    let ladder = ctx.ladder(&ctx.s.ladder, &[128, 256, 512, 1024, 2000])?;
    for &n in &ladder {
        Degree::new(n)?;
    }
    let coefficient = ctx.coefficient()?;
    let resolution = default_resolution();
    let target = voronovskaja_target(&f, x)?;

    let mut report = CsvReport::new(&[
        "n", "lambda", "x", "B_f", "scaled_error", "target", "residual", "scaled_residual", "rhs", "holds",
    ]);
    report.set("fn", name);
    report.set("x", x);
    report.set("lambda", list(&lambdas));
    report.set("ladder", list(&ladder));
    report.set("coefficient", if coefficient == SecondOrderCoefficient::HalfAlpha { "half_alpha" } else { "alpha_plus_one_half" });
    report.set("resolution", resolution);

    for &l in &lambdas {
        let mut scaled_residuals = Vec::new();
        let mut last_scaled_error = f64::NAN;
        for &n in &ladder {
            let op = OperatorSpec::new(n, l)?;
            let b = op.apply(&f, x)?;
            let scaled = n as f64 * (b - f.eval(x));
            let residual = voronovskaja_residual_with(&op, &f, x, coefficient)?;
            let rhs = voronovskaja_rhs(&op, &f, x, resolution, VORONOVSKAJA_CONSTANT)?;
            scaled_residuals.push((n as f64 * residual).abs());
            last_scaled_error = scaled;
            report.row(vec![
                n.to_string(),
                real(l),
                real(x),
                real(b),
                real(scaled),
                real(target),
                real(residual),
                real(n as f64 * residual),
                real(rhs),
                (residual.abs() <= rhs + HOLDS_SLACK).to_string(),
            ]);
        }
        let top = *ladder.last().expect("nonempty");
        report.summary(
            &format!("limit[lambda={l}]"),
            (last_scaled_error - target).abs() <= 0.05,
            format!("n={top} scaled_error={} target={}", real(last_scaled_error), real(target)),
        );
        if ladder.len() > 1 {
            // |n R_n| must fall at least like 1/n, up to a factor of 2
            let (first, last) = (scaled_residuals[0], scaled_residuals[scaled_residuals.len() - 1]);
            let allowed = 2.0 * ladder[0] as f64 / top as f64;
            report.summary(
                &format!("residual_decay[lambda={l}]"),
                last < allowed * first || last <= 1e-12,
                format!("ratio={} allowed={}", real(last / first), real(allowed)),
            );
        }
    }

    let quadratics = [(0.0, 0.0, 1.0), (1.0, -3.0, 2.0), (-0.5, 0.25, 4.0)];
    let mut worst = 0.0f64;
    for (a, b, c) in quadratics {
        let q = FunctionHandle::quadratic(a, b, c);
        for n in [2, 5, 10, 50, 200] {
            for l in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let op = OperatorSpec::new(n, l)?;
                for &t in &uniform_grid(101) {
                    worst = worst.max(voronovskaja_residual_with(&op, &q, t, coefficient)?.abs());
                }
            }
        }
    }
    report.summary("quadratic_residual", worst <= 1e-12, format!("max={}", real(worst)));
    Ok(report)
}

fn push_trajectories(report: &mut CsvReport, series: &str, stat: &StatLimitReport) {
    for (eps, densities) in stat.epsilons.iter().zip(&stat.densities) {
        for (n, d) in stat.ladder.iter().zip(densities) {
            report.row(vec![series.into(), real(*eps), n.to_string(), real(*d)]);
        }
    }
}

fn cmd_statistical(ctx: &Ctx) -> CliResult<CsvReport> {
    const MODES: &[&str] = &["error", "voronovskaja"];
    let mode = ctx.s.mode.as_deref().unwrap_or("error");
    if !MODES.contains(&mode) {
        return Err(unknown("mode", mode, MODES));
    }
    let matrix_name = ctx.s.matrix.as_deref().unwrap_or("cesaro");
    let preset: MatrixPreset = matrix_name.parse().map_err(usage)?;
    let weights_name = ctx.s.weights.as_deref().unwrap_or("none");
    let weights: WeightPreset = weights_name.parse().map_err(usage)?;
    let matrix = weights.apply(preset.build());
    let name = ctx.s.function.as_deref().unwrap_or("exp");
    let f = univariate_functions(Some(name), name)?.remove(0);
    let lambdas = ctx.lambdas(&[1.0])?;
    let ladder = ctx.ladder(&ctx.s.ladder, &DEFAULT_LADDER)?;
    let epsilons = ctx.s.eps.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let seq_name = ctx.s.seq.as_deref().unwrap_or("spike_squares");
    let seq = sequence(seq_name).ok_or_else(|| unknown("sequence", seq_name, SEQUENCES))?;

    let mut report = CsvReport::new(&["series", "epsilon", "n", "density"]);
    report.set("mode", mode);
    report.set("matrix", matrix_name);
    report.set("weights", weights_name);
    report.set("fn", name);
    report.set("lambda", list(&lambdas));
    report.set("ladder", list(&ladder));
    report.set("eps", list(&epsilons));
    report.set("seq", seq_name);

    if mode == "error" {
        let grid = uniform_grid(ctx.grid(21)?);
        report.set("grid", grid.len());
        for &l in &lambdas {
            let exp = uniform_error_experiment(l, &f, &matrix, &grid, &epsilons, &ladder)?;
            push_trajectories(&mut report, &format!("errors[lambda={l}]"), &exp.stat);
            let top = *ladder.last().expect("nonempty");
            report.notes.push(format!("errors[lambda={l}] e_{top}={}", real(exp.errors[top])));
            report.summary(&format!("error_sequence[lambda={l}]"), exp.stat.verdict, "limit=0");
        }
        let limit = ctx.s.limit.unwrap_or(0.0);
        let stat = a_stat_limit(&matrix, |k| seq(k), limit, &epsilons, &ladder)?;
        push_trajectories(&mut report, &format!("seq:{seq_name}"), &stat);
        for &n in &ladder {
            let witness = (n..=4 * n).map(|k| (seq(k) - limit).abs()).fold(0.0, f64::max);
            report.notes.push(format!("seq:{seq_name} sup_{{N<=k<=4N}}|x_k-L| N={n} value={}", real(witness)));
        }
        for (eps, d) in stat.epsilons.iter().zip(&stat.densities) {
            report.notes.push(format!("seq:{seq_name} eps={} final_density={}", real(*eps), real(d[d.len() - 1])));
        }
        report.summary(&format!("sequence[{seq_name}]"), stat.verdict, format!("limit={}", real(limit)));
    } else {
        let x = ctx.s.x.unwrap_or(0.5);
        report.set("x", x);
        for &l in &lambdas {
            let exp = voronovskaja_experiment(l, &f, x, |k| seq(k), &matrix, &epsilons, &ladder)?;
            push_trajectories(&mut report, &format!("y[lambda={l}]"), &exp.stat);
            for (n, d) in ladder.iter().zip(&exp.exceptional_density) {
                report.row(vec![format!("exceptional[lambda={l}]"), String::new(), n.to_string(), real(*d)]);
            }
            report.notes.push(format!("y[lambda={l}] target={}", real(exp.target)));
            if let Some((k, y)) = exp.largest_exceptional {
                report.notes.push(format!("y[lambda={l}] largest_exceptional k={k} y_k={}", real(y)));
            }
            report.summary(
                &format!("statistical_voronovskaja[lambda={l}]"),
                exp.stat.verdict,
                format!("limit={}", real(exp.target)),
            );
        }
    }
    Ok(report)
}

fn cmd_bivariate(ctx: &Ctx) -> CliResult<CsvReport> {
    const CHECKS: &[&str] = &["volkov", "bound", "rho", "all"];
    let mut checks = ctx.checks(CHECKS, &["all"])?;
    if checks.iter().any(|c| c == "all") {
        checks = vec!["volkov".into(), "bound".into(), "rho".into()];
    }
    let lambdas = ctx.lambdas(&[1.0])?;
    let count = ctx.grid(11)?;
    let grid = grid2(count);
    let resolution = default_bivariate_resolution();
    let functions = bivariate_functions(ctx.s.function.as_deref())?;

    let mut report = CsvReport::new(&["check", "fn", "n", "m", "lambda", "x", "y", "error", "bound", "holds"]);
    report.set("check", list(&checks));
    report.set("lambda", list(&lambdas));
    report.set("grid", count);
    report.set("resolution", resolution);
    let blank = String::new;

    for &l in &lambdas {
        if checks.iter().any(|c| c == "volkov") {
            let ladder = ctx.ladder(&ctx.s.ladder, &[10, 20, 40, 80])?;
            report.set("volkov.ladder", list(&ladder));
            let table = volkov_check(l, &ladder, &grid)?;
            for (name, column) in crate::bivariate::VOLKOV_FUNCTIONS.iter().zip(&table.columns) {
                for (n, e) in ladder.iter().zip(column) {
                    report.row(vec!["volkov".into(), name.to_string(), n.to_string(), n.to_string(), real(l), blank(), blank(), real(*e), blank(), blank()]);
                }
            }
            report.summary(&format!("volkov_decreasing[lambda={l}]"), table.decreasing, format!("ladder={}", list(&ladder)));
            report.summary(&format!("volkov_final[lambda={l}]"), table.final_small, "last <= 5/n");
            let q = bivariate_catalog("e20_plus_e02").expect("catalog entry");
            let e100 = BivariateSpec::new(100, 100, l)?.sup_error(&q, &grid)?;
            report.summary(&format!("volkov_n100[lambda={l}]"), e100 <= 0.05, format!("e20_plus_e02 error={}", real(e100)));
        }

        if checks.iter().any(|c| c == "bound") {
            let n = ctx.s.n.unwrap_or(20);
            let m = ctx.s.m.unwrap_or(n);
            let spec = BivariateSpec::new(n, m, l)?;
            let points = interior_grid2(count.saturating_sub(2).max(1));
            report.set("bound.n", n);
            report.set("bound.m", m);
            let mut failures = 0usize;
            for f in &functions {
                for &(x, y) in &points {
                    let (error, bound, holds) = match bound_bivariate(&spec, f, x, y, resolution) {
                        Ok(r) => (real(r.error), real(r.bound), r.holds.to_string()),
                        Err(e) => (blank(), blank(), format!("error: {e}")),
                    };
                    if holds != "true" {
                        failures += 1;
                    }
                    report.row(vec!["bound".into(), f.name().into(), n.to_string(), m.to_string(), real(l), real(x), real(y), error, bound, holds]);
                }
            }
            report.summary(
                &format!("bivariate_bound[lambda={l}]"),
                failures == 0,
                format!("points={} failures={failures}", functions.len() * points.len()),
            );
        }

        if checks.iter().any(|c| c == "rho") {
            let ladder = ctx.ladder(&ctx.s.rho_ladder, &[10, 40, 160])?;
            report.set("rho.ladder", list(&ladder));
            let mut all_decreasing = true;
            for f in &functions {
                let mut values = Vec::new();
                for &n in &ladder {
                    let v = rho_norm_error(&BivariateSpec::new(n, n, l)?, f, &grid)?.value;
                    values.push(v);
                    report.row(vec!["rho".into(), f.name().into(), n.to_string(), n.to_string(), real(l), blank(), blank(), real(v), blank(), blank()]);
                }
                all_decreasing &= strictly_decreasing(&values);
            }
            report.summary(&format!("rho_decreasing[lambda={l}]"), all_decreasing, format!("ladder={}", list(&ladder)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_report(args: &[&str]) -> CsvReport {
        let argv = std::iter::once("lbern").chain(args.iter().copied()).map(OsString::from);
        execute(&parse(argv).unwrap()).unwrap()
    }

    #[test]
    fn real_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 0.296875, f64::MAX] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("lbern-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        fs::write(&path, "n = 7\nlambda = 0.25\nfn = \"square\"\ngrid = 3\n").unwrap();
        let report = run_report(&["eval", "--config", path.to_str().unwrap(), "--n", "4"]);
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.iter().all(|r| r[0] == "4" && r[1] == real(0.25)));
        assert!(report.config.contains(&("fn".into(), "square".into())));

        fs::write(&path, "bogus = 1\n").unwrap();
        let argv = ["lbern", "eval", "--config", path.to_str().unwrap()].map(OsString::from);
        assert!(matches!(execute(&parse(argv).unwrap()), Err(CliError::Config(_))));
    }

    #[test]
    fn eval_fixture_row() {
        let report = run_report(&["eval", "--fn", "id", "--n", "2", "--lambda", "1", "--grid", "5"]);
        let row = report.rows.iter().find(|r| r[2] == real(0.25)).unwrap();
        assert!((row[4].parse::<f64>().unwrap() - 0.296875).abs() < 1e-15);
        let bi = run_report(&["eval", "--fn", "prod", "--n", "3", "--m", "4", "--grid", "3"]);
        assert_eq!(bi.header.len(), 8);
        assert_eq!(bi.rows.len(), 9);
    }

    #[test]
    fn unknown_names_list_the_catalog() {
        let argv = ["lbern", "eval", "--fn", "nosuch"].map(OsString::from);
        let err = execute(&parse(argv).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("const1") && msg.contains("ripple"), "{msg}");

        let argv = ["lbern", "statistical", "--matrix", "nosuch"].map(OsString::from);
        assert!(execute(&parse(argv).unwrap()).unwrap_err().to_string().contains("riesz_linear"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let args = ["moments", "--n", "3", "--lambda", "-0.5", "--grid", "4"];
        let a = run_report(&args).render().unwrap();
        let b = run_report(&args).render().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# config: command=moments "));
        assert!(a.contains("# SUMMARY moment_oracle PASS"));
    }
}
