//! The `mcflow` command line. Lives in the library so tests can drive it
//! in-process through [`main_with_args`].
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.

pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    abs_a_fields, battery_surfaces, c1_from_c0_bound, harnack_check, interpolation_battery, interpolation_gap,
    lemma21_battery, lemma21_terms, michael_simon_battery, michael_simon_ratio, moser_constants,
    normalized_norm, parabolic_battery, parabolic_terms, random_field, SobolevExponents,
};
use crate::error::{Error, Result};
use crate::flow::{run, FlowConfig, FlowTrajectory, RemeshPolicy, Scheme};
use crate::gronwall::extension_verdict_with;
use crate::manifest::{
    default_functionals, read_run, sha256_hex, write_run, AnalysisParams, InputRecord, RescaleProvenance,
    RunManifest,
};
use crate::monitors::{divergence_fit, monitor, FunctionalSpec};
use crate::oracle::{compare, Evaluation, SphereSolution};
use crate::rescale::{invariance_report, rescale_trajectory, resolve_factor, RescaleMode};
use crate::surface::{
    bumpy_curve, bumpy_sphere, ellipse, ellipsoid, icosphere, obj_string, curve_json_string, read_scalar_csv,
    read_surface, regular_polygon, DiscreteHypersurface, Dimension, ScalarField, SphericalBump,
};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MCFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mcflow", version, about = "Mean curvature flow laboratory")]
pub struct Cli {
    /// TOML file with optional [flow] and [analysis] tables; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized batteries.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run, monitor, rescale and analyse flows.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Inequality checks.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Moser iteration constants in closed form.
    Constants(ConstantsArgs),
    /// Exact shrinking-sphere solutions.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Plots.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Subcommand)]
pub enum FlowCmd {
    /// Evolve a surface and write a trajectory directory.
    Run(RunArgs),
    /// Evaluate blow-up functionals on a stored trajectory.
    Monitor(MonitorArgs),
    /// Parabolically rescale a stored trajectory.
    Rescale(RescaleArgs),
    /// Gronwall comparison and extension verdict.
    Gronwall(GronwallArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    MichaelSimon(MeshCheckArgs),
    Lemma21(MeshCheckArgs),
    Interpolation(InterpolationArgs),
    ParabolicSobolev(ParabolicArgs),
    Harnack(HarnackArgs),
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    /// Exact radius, curvature and functionals at given times.
    Sphere(OracleSphereArgs),
    /// Compare a stored sphere or circle run with the exact solution.
    Compare(OracleCompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// SVG time series and snapshot outlines.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Shape {
    Sphere,
    Circle,
    Ellipse,
    Ellipsoid,
    BumpySphere,
    BumpyCurve,
}

#[derive(Debug, Args)]
pub struct SurfaceSource {
    /// Mesh (.obj) or curve (.json) file.
    #[arg(long, alias = "mesh", conflicts_with = "shape")]
    pub input: Option<PathBuf>,
    /// Built-in shape instead of a file.
    #[arg(long, value_enum)]
    pub shape: Option<Shape>,
    /// Icosphere subdivision level for mesh shapes.
    #[arg(long, default_value_t = 4)]
    pub level: usize,
    /// Vertex count for curve shapes.
    #[arg(long, default_value_t = 2000)]
    pub vertices: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Relative bump height for bumpy shapes.
    #[arg(long, default_value_t = 0.3)]
    pub amplitude: f64,
    /// Bump polynomial degree.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
}

#[derive(Debug, Args)]
pub struct ReportOut {
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SurfaceSource,
    #[arg(long)]
    pub out: PathBuf,
    /// Run until a singularity is detected (ignores any configured t_end).
    #[arg(long, conflicts_with = "t_end")]
    pub until_singular: bool,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Write every k-th snapshot.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub no_remesh: bool,
    #[arg(long)]
    pub c_stab: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Functionals to summarize (repeatable), e.g. `mixed:4,4`.
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
    /// Directory for one `t, instantaneous, cumulative` CSV per functional.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
#[group(id = "mode", required = true, multiple = false)]
pub struct RescaleArgs {
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, group = "mode")]
    pub factor: Option<f64>,
    /// Scale so the supercritical integral equals this value.
    #[arg(long, group = "mode")]
    pub normalize: Option<f64>,
    /// Scale so time T (default: the final time) becomes 1.
    #[arg(long, group = "mode", num_args = 0..=1, default_missing_value = "nan")]
    pub unit_time: Option<f64>,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Args)]
pub struct GronwallArgs {
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct MeshCheckArgs {
    #[command(flatten)]
    pub source: SurfaceSource,
    /// `const`, `random`, `abs-a` or a CSV file.
    #[arg(long, default_value = "const")]
    pub field: String,
    #[arg(long)]
    pub cn: Option<f64>,
    #[arg(long)]
    pub q_sob: Option<f64>,
    /// Run a randomized battery of this many trials on built-in surfaces.
    #[arg(long)]
    pub battery: Option<usize>,
    /// Battery mode: estimate c_n on --seed, then check it on seed + 1.
    #[arg(long)]
    pub holdout: bool,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct InterpolationArgs {
    #[command(flatten)]
    pub source: SurfaceSource,
    #[arg(long, default_value = "random")]
    pub field: String,
    /// Exponents t < r < s; default (2, 2m, 2Q).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma separated ε values; default 10^{-2} ... 10^{2}.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub q_sob: Option<f64>,
    #[arg(long)]
    pub battery: Option<usize>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct ParabolicArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// `abs-a` or `random`.
    #[arg(long, default_value = "abs-a")]
    pub field: String,
    #[arg(long)]
    pub cn: Option<f64>,
    #[arg(long)]
    pub battery: Option<usize>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct HarnackArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Center `x,y,z` (repeatable).
    #[arg(long = "center", value_parser = parse_point)]
    pub centers: Vec<[f64; 3]>,
    /// Additionally draw this many centers from the initial vertices.
    #[arg(long, default_value_t = 0)]
    pub random_centers: usize,
    /// Default n + 3.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Default (n + 3)/2.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub cn: Option<f64>,
    /// Rescale so the final time becomes 1 before checking.
    #[arg(long)]
    pub unit_time: bool,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub c0: f64,
    #[arg(long)]
    pub c1: f64,
    #[arg(long)]
    pub cn: f64,
    /// Also evaluate C_b and Λ at this β.
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct OracleSphereArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    /// Times (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct OracleCompareArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Initial radius; default the mean vertex distance from the centroid.
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
    /// Fail if the largest radius error exceeds this.
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: ReportOut,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Output directory for `monitors.svg` and `silhouettes.svg`.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of outlines drawn.
    #[arg(long, default_value_t = 6)]
    pub outlines: usize,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y, 0.0]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(format!("expected x,y or x,y,z, got '{s}'")),
    }
}

/// Contents of `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub flow: FlowConfig,
    pub analysis: AnalysisParams,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ConfigFile = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.flow.validate()?;
        Ok(cfg)
    }
}

enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match dispatch(&cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            2
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // fails harmlessly if a pool already exists (repeated in-process calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Flow(FlowCmd::Run(a)) => flow_run(a, &cfg),
        Command::Flow(FlowCmd::Monitor(a)) => flow_monitor(a, &cfg),
        Command::Flow(FlowCmd::Rescale(a)) => flow_rescale(a),
        Command::Flow(FlowCmd::Gronwall(a)) => flow_gronwall(a, &cfg),
        Command::Verify(VerifyCmd::MichaelSimon(a)) => verify_michael_simon(a, &cfg, cli.seed),
        Command::Verify(VerifyCmd::Lemma21(a)) => verify_lemma21(a, &cfg, cli.seed),
        Command::Verify(VerifyCmd::Interpolation(a)) => verify_interpolation(a, &cfg, cli.seed),
        Command::Verify(VerifyCmd::ParabolicSobolev(a)) => verify_parabolic(a, &cfg, cli.seed),
        Command::Verify(VerifyCmd::Harnack(a)) => verify_harnack(a, &cfg, cli.seed),
        Command::Constants(a) => constants(a),
        Command::Oracle(OracleCmd::Sphere(a)) => oracle_sphere(a),
        Command::Oracle(OracleCmd::Compare(a)) => oracle_compare(a),
        Command::Report(ReportCmd::Plot(a)) => report_plot(a),
    }
}

fn emit(value: &impl Serialize, out: &ReportOut) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(path) = &out.report {
        fs::write(path, &text).map_err(|e| Error::io(path, e))?;
    }
    println!("{text}");
    Ok(())
}

fn parse_functionals(list: &[String], n: usize) -> Result<Vec<FunctionalSpec>> {
    if list.is_empty() {
        return Ok(default_functionals(n));
    }
    list.iter().map(|s| s.parse()).collect()
}

fn load_surface(src: &SurfaceSource) -> Result<(DiscreteHypersurface, InputRecord)> {
    if let Some(path) = &src.input {
        return Ok((read_surface(path)?, InputRecord::from_file(path)?));
    }
    let shape = src
        .shape
        .ok_or_else(|| Error::InvalidInput("pass --input FILE or --shape NAME".into()))?;
    let bump_seed = 7;
    let s = match shape {
        Shape::Sphere => icosphere(src.level, src.radius)?,
        Shape::Circle => regular_polygon(src.vertices, src.radius)?,
        Shape::Ellipse => ellipse(src.vertices, 2.0 * src.radius, src.radius)?,
        Shape::Ellipsoid => ellipsoid(1.5 * src.radius, src.radius, 0.7 * src.radius, src.level)?,
        Shape::BumpySphere => bumpy_sphere(
            src.level,
            &SphericalBump::random(src.degree, src.amplitude, bump_seed),
        )?
        .map_positions(|p| p * src.radius)?,
        Shape::BumpyCurve => bumpy_curve(src.vertices, src.amplitude, src.degree, bump_seed)?
            .map_positions(|p| p * src.radius)?,
    };
    let text = match s.dimension() {
        Dimension::Curve => curve_json_string(&s)?,
        Dimension::Surface => obj_string(&s)?,
    };
    let name = format!("shape:{shape:?}").to_lowercase();
    Ok((
        s,
        InputRecord {
            path: PathBuf::from(name),
            sha256: sha256_hex(text.as_bytes()),
        },
    ))
}

fn load_field(spec: &str, s: &DiscreteHypersurface, seed: u64) -> Result<ScalarField> {
    match spec {
        "const" | "constant" | "one" => Ok(ScalarField::constant(1.0, s.vertex_count())),
        "random" => Ok(random_field(s, 3, seed)),
        "abs-a" => ScalarField::new(s.abs_a()),
        path => read_scalar_csv(path),
    }
}

fn flow_run(a: &RunArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let (surface, input) = load_surface(&a.source)?;
    let mut config = cfg.flow.clone();
    if a.until_singular {
        config.t_end = None;
    }
    if a.t_end.is_some() {
        config.t_end = a.t_end;
    }
    if let Some(s) = a.scheme {
        config.scheme = match s {
            SchemeArg::SemiImplicit => Scheme::SemiImplicit,
            SchemeArg::Explicit => Scheme::Explicit,
        };
    }
    if let Some(k) = a.stride {
        config.snapshot_stride = k;
    }
    if a.no_remesh {
        config.remesh = RemeshPolicy::disabled();
    }
    if let Some(c) = a.c_stab {
        config.c_stab = c;
    }
    if let Some(m) = a.max_steps {
        config.max_steps = m;
    }
    let functionals = parse_functionals(&a.functionals, surface.n())?;
    let traj = run(&surface, &config)?;
    let manifest = RunManifest::build(&traj, &functionals, &cfg.analysis, vec![input], config.snapshot_stride)?;
    write_run(&a.out, &traj, &manifest)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "out": a.out,
            "status": manifest.status,
            "stop_reason": manifest.stop_reason,
            "steps": traj.len(),
            "final_time": traj.duration(),
            "estimated_t": manifest.estimated_t,
            "remesh_events": manifest.remesh_events.len(),
        }))?
    );
    Ok(Outcome::Pass)
}

fn flow_monitor(a: &MonitorArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let (manifest, traj) = read_run(&a.traj)?;
    let functionals = parse_functionals(&a.functionals, traj.n())?;
    let threshold = a.threshold.unwrap_or(cfg.analysis.divergence_slope);
    let mut summaries = Vec::new();
    if let Some(dir) = &a.csv_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for f in functionals {
        let mut r = monitor(&traj, f, threshold)?;
        if r.divergence.is_none() {
            // strided snapshots may be too sparse to refit T; reuse the run's fit
            if let Some(t_est) = manifest.estimated_t {
                r.divergence = divergence_fit(&r.times, &r.cumulative, &traj.sup_a(), t_est, threshold);
            }
        }
        if let Some(dir) = &a.csv_dir {
            let name: String = f
                .to_string()
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect();
            r.write_csv(&dir.join(format!("{name}.csv")))?;
        }
        summaries.push(r.summary());
    }
    emit(&summaries, &a.out)?;
    Ok(Outcome::Pass)
}

fn flow_rescale(a: &RescaleArgs) -> Result<Outcome> {
    let (manifest, traj) = read_run(&a.traj)?;
    let mode = if let Some(q) = a.factor {
        RescaleMode::Explicit { factor: q }
    } else if let Some(c0) = a.normalize {
        RescaleMode::Normalizing { c0 }
    } else {
        let t = a.unit_time.filter(|t| !t.is_nan()).unwrap_or(traj.duration());
        RescaleMode::UnitTime { t }
    };
    let q = resolve_factor(&traj, mode)?;
    let scaled = rescale_trajectory(&traj, q)?;
    let report = invariance_report(&traj, q)?;
    let source = a.traj.join(crate::manifest::MANIFEST_FILE);
    let mut out = RunManifest::build(
        &scaled,
        &manifest.functionals,
        &manifest.analysis,
        vec![InputRecord::from_file(&source)?],
        1,
    )?;
    out.rescale = Some(RescaleProvenance {
        source: a.traj.clone(),
        factor: q,
        mode,
    });
    write_run(&a.out, &scaled, &out)?;
    emit(&report, &a.report)?;
    Ok(Outcome::from(report.pass))
}

fn flow_gronwall(a: &GronwallArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let (manifest, traj) = read_run(&a.traj)?;
    let r = extension_verdict_with(
        &traj,
        a.c.or(cfg.analysis.c),
        a.tau1.unwrap_or(cfg.analysis.tau1),
        a.threshold.unwrap_or(cfg.analysis.divergence_slope),
        manifest.estimated_t,
    )?;
    emit(&r, &a.out)?;
    Ok(Outcome::from(r.state.comparison_holds && r.state.chain_holds))
}

fn verify_michael_simon(a: &MeshCheckArgs, cfg: &ConfigFile, seed: u64) -> Result<Outcome> {
    let c_n = a.cn.unwrap_or(cfg.analysis.c_n);
    if let Some(trials) = a.battery {
        let r = michael_simon_battery(&battery_surfaces(a.source.level.min(3))?, trials, seed)?;
        let pass = r.pass && r.max_ratio <= c_n;
        emit(&json!({ "c_n": c_n, "battery": r, "pass": pass }), &a.out)?;
        return Ok(Outcome::from(pass));
    }
    let (s, input) = load_surface(&a.source)?;
    let f = load_field(&a.field, &s, seed)?;
    let ratio = michael_simon_ratio(&s, &f)?;
    let pass = ratio <= c_n;
    emit(
        &json!({ "input": input, "field": a.field, "ratio": ratio, "c_n": c_n, "pass": pass }),
        &a.out,
    )?;
    Ok(Outcome::from(pass))
}

fn verify_lemma21(a: &MeshCheckArgs, cfg: &ConfigFile, seed: u64) -> Result<Outcome> {
    let c_n = a.cn.unwrap_or(cfg.analysis.c_n);
    let q_sob = a.q_sob.unwrap_or(cfg.analysis.q_sob);
    if let Some(trials) = a.battery {
        let surfaces = battery_surfaces(a.source.level.min(3))?;
        let train = lemma21_battery(&surfaces, trials, seed, q_sob, c_n)?;
        if a.holdout {
            let held = lemma21_battery(&surfaces, trials, seed.wrapping_add(1), q_sob, train.empirical_c_n)?;
            let pass = held.all_pass;
            emit(&json!({ "train": train, "holdout": held, "pass": pass }), &a.out)?;
            return Ok(Outcome::from(pass));
        }
        let pass = train.all_pass;
        emit(&json!({ "battery": train, "pass": pass }), &a.out)?;
        return Ok(Outcome::from(pass));
    }
    let (s, input) = load_surface(&a.source)?;
    let f = load_field(&a.field, &s, seed)?;
    let t = lemma21_terms(&s, &f, q_sob)?;
    let gap = t.gap(c_n);
    emit(
        &json!({
            "input": input, "field": a.field, "q_sob": q_sob, "c_n": c_n,
            "terms": t, "gap": gap, "minimal_c_n": t.minimal_c_n(), "pass": gap >= 0.0,
        }),
        &a.out,
    )?;
    Ok(Outcome::from(gap >= 0.0))
}

fn default_eps() -> Vec<f64> {
    (-4..=4).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
}

fn verify_interpolation(a: &InterpolationArgs, cfg: &ConfigFile, seed: u64) -> Result<Outcome> {
    let e = SobolevExponents::new(2, a.q_sob.unwrap_or(cfg.analysis.q_sob))?;
    let (t, r, s) = (a.t.unwrap_or(2.0), a.r.unwrap_or(2.0 * e.m), a.s.unwrap_or(2.0 * e.q_sob));
    let eps = if a.eps.is_empty() { default_eps() } else { a.eps.clone() };
    if let Some(trials) = a.battery {
        let b = interpolation_battery(&battery_surfaces(a.source.level.min(3))?, trials, seed, (t, r, s), &eps)?;
        let pass = b.min_scaled_gap >= -1e-9;
        emit(&json!({ "battery": b, "pass": pass }), &a.out)?;
        return Ok(Outcome::from(pass));
    }
    let (surf, input) = load_surface(&a.source)?;
    let f = load_field(&a.field, &surf, seed)?;
    let scale = normalized_norm(&surf, &f, r)?;
    let gaps = eps
        .iter()
        .map(|&x| interpolation_gap(&surf, &f, x, r, s, t).map(|g| json!({ "eps": x, "gap": g })))
        .collect::<Result<Vec<_>>>()?;
    let pass = gaps.iter().all(|g| g["gap"].as_f64().unwrap_or(f64::NAN) >= -1e-9 * scale);
    emit(
        &json!({ "input": input, "field": a.field, "exponents": [t, r, s], "scale": scale, "gaps": gaps, "pass": pass }),
        &a.out,
    )?;
    Ok(Outcome::from(pass))
}

fn verify_parabolic(a: &ParabolicArgs, cfg: &ConfigFile, seed: u64) -> Result<Outcome> {
    let (_, traj) = read_run(&a.traj)?;
    let c_n = a.cn.unwrap_or(cfg.analysis.c_n);
    if let Some(trials) = a.battery {
        let b = parabolic_battery(std::slice::from_ref(&traj), trials, seed, c_n)?;
        let pass = b.all_pass;
        emit(&json!({ "battery": b, "pass": pass }), &a.out)?;
        return Ok(Outcome::from(pass));
    }
    let fields = match a.field.as_str() {
        "abs-a" => abs_a_fields(&traj),
        "random" => traj
            .snapshots()
            .iter()
            .map(|s| random_field(&s.surface, 3, seed))
            .collect(),
        other => return Err(Error::InvalidInput(format!("field '{other}': expected abs-a or random"))),
    };
    let t = parabolic_terms(&traj, &fields)?;
    let gap = t.gap(c_n);
    emit(
        &json!({ "field": a.field, "c_n": c_n, "terms": t, "gap": gap, "minimal_c_n": t.minimal_c_n(), "pass": gap >= 0.0 }),
        &a.out,
    )?;
    Ok(Outcome::from(gap >= 0.0))
}

fn verify_harnack(a: &HarnackArgs, cfg: &ConfigFile, seed: u64) -> Result<Outcome> {
    let (_, mut traj) = read_run(&a.traj)?;
    if a.unit_time {
        traj = rescale_trajectory(&traj, 1.0 / traj.duration().sqrt())?;
    }
    let nf = traj.n() as f64;
    let beta = a.beta.unwrap_or(nf + 3.0);
    let q = a.q.unwrap_or((nf + 3.0) / 2.0);
    let c_n = a.cn.unwrap_or(cfg.analysis.c_n);
    let mut centers = a.centers.clone();
    let first = traj.first().positions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..a.random_centers {
        let p = first[rng.random_range(0..first.len())];
        centers.push([p.x, p.y, p.z]);
    }
    if centers.is_empty() {
        return Err(Error::InvalidInput("give --center or --random-centers".into()));
    }
    let reports = centers
        .iter()
        .map(|c| harnack_check(&traj, *c, beta, q, c_n))
        .collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let c1 = c1_from_c0_bound(&traj);
    emit(&json!({ "c1_bound": c1, "reports": reports, "pass": pass }), &a.out)?;
    Ok(Outcome::from(pass))
}

fn constants(a: &ConstantsArgs) -> Result<Outcome> {
    let m = moser_constants(a.n, a.q, a.c0, a.c1, a.cn)?;
    let mut v = serde_json::to_value(m)?;
    v["lambda_m"] = json!(m.lambda_m());
    if let Some(beta) = a.beta {
        v["beta"] = json!(beta);
        v["ln_c_b"] = json!(m.ln_c_b(beta)?);
        v["c_b"] = json!(m.c_b(beta)?);
        v["big_lambda"] = json!(m.big_lambda(beta));
    }
    emit(&v, &a.out)?;
    Ok(Outcome::Pass)
}

fn oracle_sphere(a: &OracleSphereArgs) -> Result<Outcome> {
    let o = SphereSolution::new(a.n, a.r0)?;
    let functionals = parse_functionals(&a.functionals, a.n)?;
    let rows = a
        .t
        .iter()
        .map(|&t| {
            let mut vals = serde_json::Map::new();
            for f in &functionals {
                vals.insert(
                    f.to_string(),
                    json!({
                        "instantaneous": o.functional(t, *f, Evaluation::Instantaneous)?,
                        "cumulative": o.functional(t, *f, Evaluation::Cumulative)?,
                    }),
                );
            }
            Ok(json!({
                "t": t,
                "radius": o.radius(t)?,
                "mean_curvature": o.mean_curvature(t)?,
                "abs_a": o.abs_a(t)?,
                "measure": o.measure(t)?,
                "functionals": vals,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    emit(
        &json!({ "n": a.n, "r0": a.r0, "singular_time": o.singular_time(), "samples": rows }),
        &a.out,
    )?;
    Ok(Outcome::Pass)
}

fn mean_radius(traj: &FlowTrajectory) -> f64 {
    let s = traj.first();
    let c = s.centroid();
    s.positions().iter().map(|p| (p - c).norm()).sum::<f64>() / s.vertex_count() as f64
}

fn oracle_compare(a: &OracleCompareArgs) -> Result<Outcome> {
    let (_, traj) = read_run(&a.traj)?;
    let o = SphereSolution::new(traj.n(), a.r0.unwrap_or_else(|| mean_radius(&traj)))?;
    let functionals = parse_functionals(&a.functionals, traj.n())?;
    let r = compare(&traj, &o, &functionals)?;
    let pass = r.max.radius <= a.tolerance;
    emit(&json!({ "comparison": r, "tolerance": a.tolerance, "pass": pass }), &a.out)?;
    Ok(Outcome::from(pass))
}

fn report_plot(a: &PlotArgs) -> Result<Outcome> {
    use plot::{line_chart, silhouettes, Series};
    let (manifest, traj) = read_run(&a.traj)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let times: Vec<f64> = manifest.records.iter().map(|r| r.time).collect();
    let mut series = vec![Series {
        label: "sup|A|".into(),
        xs: times.clone(),
        ys: manifest.records.iter().map(|r| r.sup_a).collect(),
    }];
    for f in &manifest.functionals {
        let r = monitor(&traj, *f, manifest.analysis.divergence_slope)?;
        series.push(Series {
            label: format!("cumulative {f}"),
            xs: r.times,
            ys: r.cumulative,
        });
    }
    let path = a.out.join("monitors.svg");
    fs::write(&path, line_chart("Monitors", "t", "value", &series, true)).map_err(|e| Error::io(&path, e))?;

    let snaps = traj.snapshots();
    let k = a.outlines.max(1).min(snaps.len());
    let picks: Vec<(f64, &DiscreteHypersurface)> = (0..k)
        .map(|i| {
            let j = if k == 1 { 0 } else { i * (snaps.len() - 1) / (k - 1) };
            (snaps[j].time, &snaps[j].surface)
        })
        .collect();
    let path = a.out.join("silhouettes.svg");
    fs::write(&path, silhouettes("Snapshots", &picks)).map_err(|e| Error::io(&path, e))?;
    println!("{}", serde_json::to_string_pretty(&json!({ "out": a.out, "files": ["monitors.svg", "silhouettes.svg"] }))?);
    Ok(Outcome::Pass)
}
