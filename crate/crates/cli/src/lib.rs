//! Command-line front end: argument parsing, command dispatch and output.

pub mod report;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conecalib::catalog::{entry, list_catalog, params_for, MetricParams, Shape, ShapeKind};
use conecalib::certify::{certify, sweep_row1, Verdict};
use conecalib::comass::comass_point;
use conecalib::deform::{build_endpoint_deformation, default_targets, DeformReport};
use conecalib::odecal::{
    build_phi0, glue_lambda1_with, power_seed, solve_lambda1_with, star_comass_sq, step_halving_check, find_seed_beta,
    GlueReport, HalvingCheck, GLUE_BAND, GLUE_WIDTH, LAMBDA1_END, LAMBDA1_START,
};
use conecalib::{CatalogError, CertifyError, DeformError, OdeCalError};
use serde::Serialize;
use thiserror::Error;

use report::{
    csv_bytes, json_bytes, num, numeric_csv, svg_chart, write_atomic, CertReport, ConeId, RunConfig,
    SCHEMA, VERSION,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Deform(#[from] DeformError),
    #[error(transparent)]
    OdeCal(#[from] OdeCalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("{0}")]
    Usage(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNMET: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "conecalib", version, about = "Comass certification for homogeneous hypercones")]
pub struct Cli {
    /// `key = value` file merged under the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Omit wall-clock metadata so outputs are byte-identical across runs.
    #[arg(long, global = true)]
    pub stable: bool,
    /// Directory for relative output paths.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect the classification table.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Certify the comass inequality for one cone and exponent.
    Certify(CertifyArgs),
    /// Best verdict over the exponent list for every row-1 cone up to a size.
    Sweep(SweepArgs),
    /// Trace a function of the angle.
    Plot {
        #[command(subcommand)]
        what: PlotWhat,
    },
    /// Build and verify the endpoint deformation of a row-1 potential.
    Deform(DeformArgs),
    /// Solve an exponent ODE.
    Ode {
        #[command(subcommand)]
        what: OdeWhat,
    },
    /// Build a profile that is one at the critical angle and zero near the ends.
    Phi0(Phi0Args),
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum PlotWhat {
    /// `theta, psi, eta, phi` for one cone and exponent.
    Psi(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum OdeWhat {
    /// The exponent ODE of the row-3, k = 4 cone.
    Lambda1(OdeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub row: u8,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
}

impl ShapeArgs {
    pub fn params(&self) -> Result<MetricParams, CliError> {
        let e = entry(self.row)?;
        let shape = match (e.shape_kind(), self.r, self.s, self.k) {
            (ShapeKind::RS, Some(r), Some(s), None) => Shape::Spheres { r, s },
            (ShapeKind::K, None, None, Some(k)) => Shape::K { k },
            (ShapeKind::None, None, None, None) => Shape::Fixed,
            (ShapeKind::RS, ..) => return Err(CliError::Usage(format!("row {} needs --r and --s", self.row))),
            (ShapeKind::K, ..) => return Err(CliError::Usage(format!("row {} needs --k", self.row))),
            (ShapeKind::None, ..) => {
                return Err(CliError::Usage(format!("row {} takes no shape parameters", self.row)))
            }
        };
        Ok(params_for(self.row, shape)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Expect {
    Global,
    Local,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print the JSON report instead of a summary line.
    #[arg(long)]
    pub json: bool,
    /// Write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 unless the verdict is at least this good.
    #[arg(long)]
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    pub row: u8,
    #[arg(long, default_value_t = 12)]
    pub max: u32,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print CSV instead of the verdict grid.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DeformArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long)]
    pub n_left: Option<i64>,
    #[arg(long)]
    pub n_right: Option<i64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OdeArgs {
    #[arg(long, default_value_t = LAMBDA1_START)]
    pub start: f64,
    #[arg(long, default_value_t = LAMBDA1_END)]
    pub end: f64,
    /// Trace the glued profile over the verification band instead.
    #[arg(long)]
    pub glue: bool,
    #[arg(long, default_value_t = GLUE_WIDTH)]
    pub width: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Phi0Args {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Seed exponent; by default the first global one in 1, 1.05, ..., 2.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

struct Ctx {
    config: RunConfig,
    started: Instant,
}

impl Ctx {
    fn wall_time(&self) -> Option<f64> {
        (!self.config.stable).then(|| self.started.elapsed().as_secs_f64())
    }

    /// Write to the resolved path, or to stdout when no path is given.
    fn emit(&self, path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
        match path {
            Some(p) => write_atomic(&self.config.resolve(p), bytes),
            None => {
                std::io::stdout().write_all(bytes)?;
                Ok(())
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CONECALIB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parse arguments, run the command and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.apply(&RunConfig::parse(&text)?)?;
    }
    if cli.stable {
        config.stable = true;
    }
    if let Some(dir) = cli.out_dir {
        config.out_dir = Some(dir);
    }
    if let Some(dir) = &config.out_dir {
        if !dir.is_dir() {
            return Err(CliError::Output(format!("{} is not a directory", dir.display())));
        }
    }
    let ctx = Ctx { config, started: Instant::now() };
    match cli.command {
        Command::Catalog { action: CatalogAction::List { json } } => cmd_catalog(&ctx, json),
        Command::Certify(a) => cmd_certify(&ctx, &a),
        Command::Sweep(a) => cmd_sweep(&ctx, &a),
        Command::Plot { what: PlotWhat::Psi(a) } => cmd_plot(&ctx, &a),
        Command::Deform(a) => cmd_deform(&ctx, &a),
        Command::Ode { what: OdeWhat::Lambda1(a) } => cmd_ode(&ctx, &a),
        Command::Phi0(a) => cmd_phi0(&ctx, &a),
    }
}

#[derive(Serialize)]
struct CatalogRow {
    row_id: u8,
    group: &'static str,
    link: &'static str,
    angle: String,
    family: conecalib::Family,
    exponents: conecalib::catalog::VolumeDescriptor,
    area_minimizing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_alias: Option<&'static str>,
}

fn angle_label(e: &conecalib::ConeEntry) -> String {
    let (n, d) = (*e.cone_angle.numer(), *e.cone_angle.denom());
    match n {
        1 => format!("pi/{d}"),
        _ => format!("{n}pi/{d}"),
    }
}

fn cmd_catalog(ctx: &Ctx, json: bool) -> Result<i32, CliError> {
    let rows: Vec<CatalogRow> = list_catalog()
        .iter()
        .map(|e| CatalogRow {
            row_id: e.row_id,
            group: e.group_label,
            link: e.link_label,
            angle: angle_label(e),
            family: e.family,
            exponents: e.volume,
            area_minimizing: e.area_minimizing,
            group_alias: e.group_alias,
        })
        .collect();
    if json {
        return ctx.emit(None, &json_bytes(&rows)?).map(|_| EXIT_OK);
    }
    let mut out = String::new();
    for r in &rows {
        out.push_str(&format!("{:>2}  {:<28} {:<7} {:?}\n", r.row_id, r.group, r.angle, r.family));
    }
    ctx.emit(None, out.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_certify(ctx: &Ctx, a: &CertifyArgs) -> Result<i32, CliError> {
    let params = a.shape.params()?;
    let tol = a.tol.unwrap_or(ctx.config.sup_tol);
    let v = certify(&params, a.beta, tol)?;
    let report = CertReport::new(&params, &v, ctx.wall_time());
    let bytes = json_bytes(&report)?;
    if let Some(out) = &a.out {
        ctx.emit(Some(out), &bytes)?;
    }
    if a.json {
        ctx.emit(None, &bytes)?;
    } else {
        let sup = v.sup_psi.map_or("unbounded".to_string(), |s| format!("{s:.12}"));
        let local = v.local_interval.map_or(String::new(), |(lo, hi)| format!(", local on [{lo:.6}, {hi:.6}]"));
        println!("{} beta={}: {:?} ({:?}), sup psi <= {sup}{local}", params.label(), a.beta, v.verdict, v.method);
    }
    let needed = match a.expect {
        None => Verdict::NoCertificate,
        Some(Expect::Global) => Verdict::Global,
        Some(Expect::Local) => Verdict::Local,
    };
    Ok(if v.verdict >= needed { EXIT_OK } else { EXIT_UNMET })
}

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Result<i32, CliError> {
    if a.row != 1 {
        return Err(CliError::Usage(format!("sweep supports row 1 only, got row {}", a.row)));
    }
    let betas = a.betas.clone().unwrap_or_else(|| ctx.config.betas.clone());
    let table = sweep_row1(a.max, a.max, &betas, a.tol.unwrap_or(ctx.config.sup_tol))?;
    if a.csv || a.out.is_some() {
        let opt = |x: Option<f64>| x.map_or(String::new(), num);
        let rows = table.iter().map(|row| {
            let v = &row.verdict;
            vec![
                row.r.to_string(),
                row.s.to_string(),
                format!("{:?}", v.verdict),
                num(v.beta),
                format!("{:?}", v.method),
                opt(v.sup_psi),
                opt(v.local_interval.map(|i| i.0)),
                opt(v.local_interval.map(|i| i.1)),
            ]
        });
        let bytes =
            csv_bytes(&["r", "s", "verdict", "beta", "method", "sup_psi", "local_lo", "local_hi"], rows)?;
        if let Some(out) = &a.out {
            ctx.emit(Some(out), &bytes)?;
        }
        if a.csv {
            ctx.emit(None, &bytes)?;
        }
        return Ok(EXIT_OK);
    }
    let mut out = String::from("r\\s");
    for s in 2..=a.max {
        out.push_str(&format!("{s:>3}"));
    }
    out.push('\n');
    for r in 2..=a.max {
        out.push_str(&format!("{r:>3}"));
        for row in table.iter().filter(|x| x.r == r) {
            let c = match row.verdict.verdict {
                Verdict::Global => 'G',
                Verdict::Local => 'L',
                Verdict::NoCertificate => '.',
            };
            out.push_str(&format!("{c:>3}"));
        }
        out.push('\n');
    }
    ctx.emit(None, out.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_plot(ctx: &Ctx, a: &PlotArgs) -> Result<i32, CliError> {
    let params = a.shape.params()?;
    let n = a.samples.unwrap_or(ctx.config.samples);
    if n < 2 {
        return Err(CliError::Usage("need at least 2 samples".into()));
    }
    let end = params.domain_end();
    let pts: Vec<_> =
        (1..=n).map(|i| comass_point(end * i as f64 / (n + 1) as f64, &params, a.beta)).collect();
    let bytes = numeric_csv(&["theta", "psi", "eta", "phi"], pts.iter().map(|c| vec![c.theta, c.psi, c.eta, c.phi]))?;
    if let Some(svg) = &a.svg {
        let title = format!("psi for {} with beta = {}", params.label(), a.beta);
        let curve: Vec<(f64, f64)> = pts.iter().map(|c| (c.theta, c.psi)).collect();
        ctx.emit(Some(svg), svg_chart(&curve, 1.0, &title, "theta", "psi").as_bytes())?;
    }
    if a.csv.is_some() || a.svg.is_none() {
        ctx.emit(a.csv.as_deref(), &bytes)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DeformOut<'a> {
    schema: u32,
    cone: ConeId,
    #[serde(flatten)]
    report: &'a DeformReport,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
}

fn stride(len: usize, samples: usize) -> usize {
    (len / samples.max(1)).max(1)
}

fn cmd_deform(ctx: &Ctx, a: &DeformArgs) -> Result<i32, CliError> {
    let params = a.shape.params()?;
    let (dl, dr) = default_targets(&params, a.beta);
    let d = build_endpoint_deformation(
        &params,
        a.beta,
        a.n_left.unwrap_or(dl),
        a.n_right.unwrap_or(dr),
        a.x0,
        a.eps,
    )?;
    let step = stride(d.lambda.len(), ctx.config.samples);
    let rows = (0..d.lambda.len())
        .step_by(step)
        .map(|i| vec![d.lambda.theta[i], d.lambda.value[i], d.mu.value[i], d.comass_sq[i]]);
    let csv = numeric_csv(&["theta", "lambda_s", "lambda_c", "deformed_comass_sq"], rows)?;
    let out = DeformOut {
        schema: SCHEMA,
        cone: ConeId::of(&params),
        report: &d.report,
        version: VERSION,
        wall_time: ctx.wall_time(),
    };
    emit_pair(ctx, a.csv.as_deref(), &csv, a.report.as_deref(), &json_bytes(&out)?)
}

/// CSV to its file or stdout; the JSON report to its file, or to stdout when
/// the CSV went to a file.
fn emit_pair(ctx: &Ctx, csv_path: Option<&Path>, csv: &[u8], json_path: Option<&Path>, json: &[u8]) -> Result<i32, CliError> {
    ctx.emit(csv_path, csv)?;
    match (json_path, csv_path) {
        (Some(p), _) => ctx.emit(Some(p), json)?,
        (None, Some(_)) => ctx.emit(None, json)?,
        (None, None) => {}
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OdeOut {
    schema: u32,
    theta_start: f64,
    theta_end: f64,
    theta1: Option<f64>,
    zeros: Vec<f64>,
    peak: (f64, f64),
    trough: (f64, f64),
    steps: usize,
    max_error: f64,
    tol: f64,
    min_budget: f64,
    star_deviation: f64,
    halving: HalvingCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    glue: Option<GlueReport>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
}

fn cmd_ode(ctx: &Ctx, a: &OdeArgs) -> Result<i32, CliError> {
    let sol = solve_lambda1_with(a.start, a.end, ctx.config.ode_tol)?;
    let halving = step_halving_check(&sol)?;
    let n = ctx.config.samples;
    let (csv, glue) = if a.glue {
        let g = glue_lambda1_with(&sol, a.width, a.width, ctx.config.glue_tol)?;
        let (lo, hi) = GLUE_BAND;
        let rows = (0..n).map(|i| {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let (v, _) = g.eval(t);
            vec![t, v, g.comass_sq(t)]
        });
        (numeric_csv(&["theta", "lambda", "star_comass_sq"], rows)?, Some(g.report.clone()))
    } else {
        let rows = (0..n).map(|i| {
            let t = a.start + (a.end - a.start) * i as f64 / (n - 1) as f64;
            let (v, d) = sol.eval(t);
            vec![t, v, star_comass_sq(t, v, d)]
        });
        (numeric_csv(&["theta", "lambda1", "star_comass_sq"], rows)?, None)
    };
    let out = OdeOut {
        schema: SCHEMA,
        theta_start: sol.theta_start,
        theta_end: sol.theta_end,
        theta1: sol.theta1,
        zeros: sol.zeros.clone(),
        peak: sol.peak,
        trough: sol.trough,
        steps: sol.steps,
        max_error: sol.max_error,
        tol: sol.tol,
        min_budget: sol.min_budget,
        star_deviation: sol.star_deviation(),
        halving,
        glue,
        version: VERSION,
        wall_time: ctx.wall_time(),
    };
    emit_pair(ctx, a.csv.as_deref(), &csv, a.report.as_deref(), &json_bytes(&out)?)
}

#[derive(Serialize)]
struct Phi0Out {
    schema: u32,
    cone: ConeId,
    beta: f64,
    support: (f64, f64),
    residual_max: f64,
    theta0: f64,
    value_at_theta0: f64,
    glue_points: [f64; 4],
    eps: f64,
    kappa: (f64, f64),
    envelope_excess: f64,
    grid_points: usize,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
}

fn cmd_phi0(ctx: &Ctx, a: &Phi0Args) -> Result<i32, CliError> {
    let params = a.shape.params()?;
    let beta = match a.beta {
        Some(b) => b,
        None => find_seed_beta(&params)?,
    };
    let seed = power_seed(&params, beta, 40_001);
    let f = build_phi0(&params, &seed)?;
    let res = f.residuals(&params);
    let p = &f.profile;
    let csv = numeric_csv(&["theta", "phi0", "residual"], (0..p.len()).map(|i| vec![p.theta[i], p.value[i], res[i]]))?;
    let out = Phi0Out {
        schema: SCHEMA,
        cone: ConeId::of(&params),
        beta,
        support: f.support,
        residual_max: f.residual_max,
        theta0: f.theta0,
        value_at_theta0: f.value_at_theta0,
        glue_points: f.glue_points,
        eps: f.eps,
        kappa: f.kappa,
        envelope_excess: f.envelope_excess,
        grid_points: f.grid_points,
        version: VERSION,
        wall_time: ctx.wall_time(),
    };
    emit_pair(ctx, a.csv.as_deref(), &csv, a.report.as_deref(), &json_bytes(&out)?)
}
