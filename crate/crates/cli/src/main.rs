//! `stripe-quench`: solve, continue, scan and cross-check the quenched
//! stripe wavenumber selection problem from the command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 convergence failure.

mod manifest;
mod validate;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stripe_quench::asymptotics::{expansion_report, Regime};
use stripe_quench::continuation::{
    secant_continue, solve_by_continuation, solve_refined, surface_scan, ContinuationOptions,
    ContinuationParam, SurfaceGrid,
};
use stripe_quench::heteroclinic::{
    continue_glide, detect_delocalization, inner_solve, near_origin_prediction, GlideCurve,
    GlideOptions, GlidePoint, HetOptions, HetProfile, KernelSource,
};
use stripe_quench::io::{
    fmt, write_branch_csv, write_json, write_profile_csv, write_surface_csv, SolveRecord,
};
use stripe_quench::localmodel::{classify_phase_portrait, sg_speed, Classification};
use stripe_quench::{Error, ModelParams, SolverOptions};

use manifest::ManifestBuilder;

#[derive(Parser, Debug)]
#[command(
    name = "stripe-quench",
    version,
    about = "Wavenumber selection by directional quenching"
)]
struct Cli {
    /// Worker threads for independent parameter points (capped by
    /// STRIPE_QUENCH_THREADS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve at one parameter point.
    Solve(SolveArgs),
    /// Follow a branch in c_x or k_y.
    Continue(ContinueArgs),
    /// Scan a compactified (c_x, k_y) grid.
    Surface(SurfaceArgs),
    /// Compute the heteroclinic glide curve and the delocalization point.
    Heteroclinic(HetArgs),
    /// Print expansion coefficients, optionally against branch data.
    Asymptotics(AsymArgs),
    /// Run the cross-check suite and print a pass/fail table.
    Validate(ValidateArgs),
    /// Local Sine-Gordon model: speed and classification over a k_x range.
    Local(LocalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Stretching parameter κ of g(ψ) = 1 + κ sin ψ.
    #[arg(long, default_value_t = 0.3)]
    kappa: f64,
    /// Initial Fourier mode count.
    #[arg(long, default_value_t = 128)]
    n_modes: usize,
    /// Newton tolerance on the residual sup-norm.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            newton_tol: self.tol,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    /// Quenching speed c_x.
    #[arg(long)]
    cx: f64,
    /// Lateral wavenumber k_y.
    #[arg(long)]
    ky: f64,
    #[command(flatten)]
    common: Common,
    /// solve.json from an earlier run, used as the Newton guess.
    #[arg(long)]
    seed_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum ParamArg {
    Cx,
    Ky,
}

#[derive(Args, Debug, Serialize)]
struct ContinueArgs {
    /// Continuation parameter.
    #[arg(long, value_enum)]
    param: ParamArg,
    /// Start value of the continuation parameter.
    #[arg(long)]
    from: f64,
    /// End value of the continuation parameter.
    #[arg(long)]
    to: f64,
    /// Fixed c_x when continuing in k_y.
    #[arg(long, default_value_t = 0.0)]
    cx: f64,
    /// Fixed k_y when continuing in c_x.
    #[arg(long, default_value_t = 1.0)]
    ky: f64,
    /// Step in the logarithm of the parameter.
    #[arg(long)]
    log: bool,
    /// Initial step, in the logarithm when --log is set.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct SurfaceArgs {
    /// Grid size as <n_cx>x<n_ky>.
    #[arg(long, default_value = "12x12")]
    grid: String,
    /// glide.csv used for near-origin cells.
    #[arg(long)]
    inner: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum KernelArg {
    Kummer,
    Spectral,
}

#[derive(Args, Debug, Serialize)]
struct HetArgs {
    /// Stretching parameter κ of g(ψ) = 1 + κ sin ψ.
    #[arg(long, default_value_t = 0.3)]
    kappa: f64,
    /// Range <low>:<high> of k̃_y = k_y/c_x; continuation runs downward.
    #[arg(long, default_value = "0.5:24")]
    ktilde: String,
    /// Half-width L of the line grid.
    #[arg(long, default_value_t = 1e4)]
    half_width: f64,
    /// log2 of the grid size M.
    #[arg(long, default_value_t = 20)]
    grid_log2: u32,
    /// Evaluation of the kernel R = Dψ_s.
    #[arg(long, value_enum, default_value_t = KernelArg::Kummer)]
    kernel: KernelArg,
    /// Fraction of the slope plateau that marks delocalization.
    #[arg(long, default_value_t = 0.2)]
    slope_fraction: f64,
    /// Distance above min g that marks the k_x plateau.
    #[arg(long, default_value_t = 2e-3)]
    plateau_tol: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct AsymArgs {
    /// cx_zero, cx_small, cx_large, ky_small or ky_large.
    #[arg(long)]
    regime: String,
    /// Quenching speed c_x.
    #[arg(long, default_value_t = 0.0)]
    cx: f64,
    /// Lateral wavenumber k_y.
    #[arg(long, default_value_t = 1.0)]
    ky: f64,
    /// branch.csv to compare against.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    /// Cheap checks only (seconds instead of hours).
    #[arg(long)]
    quick: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LocalArgs {
    /// Stretching parameter κ of g(ψ) = 1 + κ sin ψ.
    #[arg(long, default_value_t = 0.3)]
    kappa: f64,
    /// Range <low>:<high> of k_x.
    #[arg(long, default_value = "0.75:1")]
    kx: String,
    /// Number of k_x samples.
    #[arg(long, default_value_t = 11)]
    samples: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// A requested computation that did not converge; exit code 2.
#[derive(Debug)]
struct ConvergenceFailure(String);

impl std::fmt::Display for ConvergenceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConvergenceFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConvergenceFailure>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidParams(_)
            | Error::Parse(_)
            | Error::Unsupported(_)
            | Error::BranchCut { .. }
            | Error::PositiveX(_)
            | Error::Io(_)
            | Error::Json(_),
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads(cli.jobs) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Continue(a) => cmd_continue(a),
        Command::Surface(a) => cmd_surface(a),
        Command::Heteroclinic(a) => cmd_heteroclinic(a),
        Command::Asymptotics(a) => cmd_asymptotics(a),
        Command::Validate(a) => validate::cmd_validate(a.quick, &a.out),
        Command::Local(a) => cmd_local(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads(jobs: Option<usize>) -> anyhow::Result<()> {
    let cap = match std::env::var("STRIPE_QUENCH_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| anyhow!(Error::Parse(format!("STRIPE_QUENCH_THREADS = '{v}'"))))?,
        ),
        Err(_) => None,
    };
    let n = match (jobs, cap) {
        (Some(j), Some(c)) => j.min(c),
        (Some(j), None) => j,
        (None, Some(c)) => c,
        (None, None) => return Ok(()),
    };
    if n == 0 {
        return Err(anyhow!(Error::InvalidParams(
            "thread count must be at least 1".into()
        )));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn params(cx: f64, ky: f64, kappa: f64) -> anyhow::Result<ModelParams> {
    let p = ModelParams::new(cx, ky, kappa)?;
    Ok(p)
}

fn create(dir: &Path, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(Error::Io)?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(Error::Io)?;
    Ok((path, BufWriter::new(f)))
}

fn parse_range(s: &str) -> anyhow::Result<(f64, f64)> {
    let err = || anyhow!(Error::Parse(format!("range '{s}' is not <low>:<high>")));
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    let (a, b): (f64, f64) = (
        a.trim().parse().map_err(|_| err())?,
        b.trim().parse().map_err(|_| err())?,
    );
    if !(a > 0.0 && b > a) {
        return Err(err());
    }
    Ok((a, b))
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let err = || anyhow!(Error::Parse(format!("grid '{s}' is not <n>x<m>")));
    let (a, b) = s.split_once('x').ok_or_else(err)?;
    Ok((
        a.trim().parse().map_err(|_| err())?,
        b.trim().parse().map_err(|_| err())?,
    ))
}

fn cmd_solve(a: &SolveArgs) -> anyhow::Result<()> {
    let p = params(a.cx, a.ky, a.common.kappa)?;
    let solver = a.common.solver();
    let mut m = ManifestBuilder::new("solve");
    m.params(a).solver(&solver);
    let res = match &a.seed_file {
        Some(path) => {
            let f = File::open(path).map_err(Error::Io)?;
            let rec: SolveRecord =
                serde_json::from_reader(BufReader::new(f)).map_err(Error::Json)?;
            let psi = rec.profile()?;
            m.seed(format!("file {}", path.display()));
            solve_refined((&psi, rec.k_x), &p, &solver)?
        }
        None => {
            m.seed(if p.k_y > 0.0 {
                "continuation from c_x = 0"
            } else {
                "continuation from large c_x"
            });
            solve_by_continuation(&p, a.common.n_modes, &solver)?
        }
    };
    let (path, mut w) = create(&a.common.out, "solve.json")?;
    write_json(&SolveRecord::from_result(&res), &mut w)?;
    w.flush()?;
    m.output(&path);
    let (path, mut w) = create(&a.common.out, "profile.csv")?;
    write_profile_csv(&res.psi, &mut w)?;
    w.flush()?;
    m.output(&path);
    m.finish(&a.common.out)?;
    println!("k_x = {}", fmt(res.k_x));
    println!(
        "residual = {:.3e}, modes = {}, newton = {}",
        res.residual_inf,
        res.n_modes(),
        res.newton_iters
    );
    Ok(())
}

fn cmd_continue(a: &ContinueArgs) -> anyhow::Result<()> {
    let (param, p0) = match a.param {
        ParamArg::Cx => (ContinuationParam::Cx, params(a.from, a.ky, a.common.kappa)?),
        ParamArg::Ky => (ContinuationParam::Ky, params(a.cx, a.from, a.common.kappa)?),
    };
    params(
        if matches!(a.param, ParamArg::Cx) {
            a.to
        } else {
            a.cx
        },
        if matches!(a.param, ParamArg::Ky) {
            a.to
        } else {
            a.ky
        },
        a.common.kappa,
    )?;
    let solver = a.common.solver();
    let copts = ContinuationOptions {
        initial_step: a.step,
        max_step: if a.log {
            0.5
        } else {
            (10.0 * a.step).max(a.step)
        },
        log_scale: a.log,
        ..Default::default()
    };
    let mut m = ManifestBuilder::new("continue");
    m.params(a)
        .solver(&serde_json::json!({ "solver": solver, "continuation": copts }))
        .seed("solve at the start value by continuation from an analytic limit");
    let start = solve_by_continuation(&p0, a.common.n_modes, &solver)?;
    let branch = secant_continue(&[start], param, a.to, &solver, &copts)?;
    let (path, mut w) = create(&a.common.out, "branch.csv")?;
    write_branch_csv(&branch, &mut w)?;
    w.flush()?;
    m.output(&path);
    m.finish(&a.common.out)?;
    println!(
        "{} points, final k_x = {}",
        branch.points.len(),
        fmt(branch.last().k_x)
    );
    if branch.truncated {
        return Err(ConvergenceFailure(format!(
            "branch truncated at {} = {}",
            param.name(),
            branch.points.last().map_or(f64::NAN, |q| q.param)
        ))
        .into());
    }
    Ok(())
}

/// Read a glide curve written by the heteroclinic command.
fn read_glide(path: &Path, p: &ModelParams) -> anyhow::Result<GlideCurve> {
    let f = File::open(path).map_err(Error::Io)?;
    let mut points = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Parse(format!("{}:{}: bad number", path.display(), i + 1)))?;
        if v.len() < 5 {
            return Err(
                Error::Parse(format!("{}:{}: expected 5 columns", path.display(), i + 1)).into(),
            );
        }
        points.push(GlidePoint {
            k_tilde: v[0],
            k_x: v[1],
            max_slope: v[2],
            tail_left: v[3],
            tail_right: v[4],
            conjecture: v[1] < p.flux_range().0 + 1e-12,
        });
    }
    Ok(GlideCurve::new(p, points, false))
}

fn cmd_surface(a: &SurfaceArgs) -> anyhow::Result<()> {
    let (n_cx, n_ky) = parse_grid(&a.grid)?;
    let grid = SurfaceGrid::compactified(n_cx, n_ky)?;
    let p = params(0.0, 1.0, a.common.kappa)?;
    let solver = a.common.solver();
    let mut m = ManifestBuilder::new("surface");
    m.params(a)
        .solver(&solver)
        .seed("row-wise continuation in c_x from c_x = 0");
    let curve = match &a.inner {
        Some(path) => Some(read_glide(path, &p)?),
        None => None,
    };
    let inner = curve
        .as_ref()
        .map(|c| move |cx: f64, ky: f64| near_origin_prediction(cx, ky, c).ok());
    let table = match &inner {
        Some(f) => surface_scan(&grid, &p, &solver, a.common.n_modes, Some(f))?,
        None => surface_scan(&grid, &p, &solver, a.common.n_modes, None)?,
    };
    let (path, mut w) = create(&a.common.out, "surface.csv")?;
    write_surface_csv(&table, &mut w)?;
    w.flush()?;
    m.output(&path);
    m.finish(&a.common.out)?;
    let failed = table
        .cells
        .iter()
        .filter(|c| c.flag.as_str() == "failed")
        .count();
    println!("{} cells, {} failed", table.cells.len(), failed);
    if failed > 0 {
        return Err(ConvergenceFailure(format!("{failed} surface cells failed")).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct TransitionReport {
    kappa: f64,
    min_flux: f64,
    transition: Option<stripe_quench::heteroclinic::Transition>,
    estimate: Option<f64>,
    error: Option<String>,
    truncated: bool,
    points: usize,
}

fn cmd_heteroclinic(a: &HetArgs) -> anyhow::Result<()> {
    let (lo, hi) = parse_range(&a.ktilde)?;
    let p = params(0.0, 1.0, a.kappa)?;
    let mut opts = HetOptions::default().with_grid(a.half_width, 1usize << a.grid_log2);
    opts.kernel = match a.kernel {
        KernelArg::Kummer => KernelSource::Kummer,
        KernelArg::Spectral => KernelSource::Spectral,
    };
    opts.slope_fraction = a.slope_fraction;
    opts.plateau_tol = a.plateau_tol;
    opts.validate()?;
    let gopts = GlideOptions::default();
    let mut m = ManifestBuilder::new("heteroclinic");
    m.params(a)
        .solver(&serde_json::json!({ "inner": opts, "glide": gopts }))
        .seed(format!("Peierls profile at k_tilde = {hi}"));
    let guess = HetProfile::peierls(hi, &p, &opts)?;
    let start = inner_solve(&guess, &p, &opts)?;
    let (mut curve, sols) = continue_glide(&start, lo, &p, &opts, &gopts)?;
    let det = detect_delocalization(&curve, &opts);
    curve.transition = det.as_ref().ok().copied();

    let (path, mut w) = create(&a.out, "glide.csv")?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    m.output(&path);
    let (path, mut w) = create(&a.out, "profile_top.csv")?;
    sols[0].profile.write_csv(&mut w)?;
    w.flush()?;
    m.output(&path);
    let report = TransitionReport {
        kappa: a.kappa,
        min_flux: curve.min_flux,
        transition: curve.transition,
        estimate: curve.transition.map(|t| t.estimate()),
        error: det.as_ref().err().map(|e| e.to_string()),
        truncated: curve.truncated,
        points: curve.points.len(),
    };
    let (path, mut w) = create(&a.out, "transition.json")?;
    write_json(&report, &mut w)?;
    w.flush()?;
    m.output(&path);
    m.finish(&a.out)?;

    match det {
        Ok(t) => {
            println!(
                "transition k_tilde* = {:.4} (slope {:.4}, plateau {:.4})",
                t.estimate(),
                t.slope_estimate,
                t.plateau_estimate
            );
            Ok(())
        }
        Err(e) => Err(ConvergenceFailure(format!("no transition detected: {e}")).into()),
    }
}

fn cmd_asymptotics(a: &AsymArgs) -> anyhow::Result<()> {
    let regime = Regime::parse(&a.regime)?;
    let ky = if a.ky > 0.0 { a.ky } else { 1.0 };
    let p = params(a.cx, ky, a.common.kappa)?;
    let report = expansion_report(regime, a.cx, a.ky, &p, a.common.n_modes, &a.common.solver())?;
    let stdout = std::io::stdout();
    write_json(&report, stdout.lock())?;
    println!();
    if let Some(path) = &a.data {
        let f = File::open(path).map_err(Error::Io)?;
        println!(
            "{:>14} {:>20} {:>20} {:>12}",
            "param", "solver", "expansion", "difference"
        );
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(Error::Io)?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> anyhow::Result<f64> {
                s.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| anyhow!(Error::Parse(format!("{}:{}", path.display(), i + 1))))
            };
            let param = parse(cols.next())?;
            let kx = parse(cols.next())?;
            let eps = match regime {
                Regime::CxLarge | Regime::KyLarge => 1.0 / param,
                _ => param,
            };
            let e = report.evaluate(eps);
            println!(
                "{:>14.6e} {:>20.12} {:>20.12} {:>12.3e}",
                param,
                kx,
                e,
                kx - e
            );
        }
    }
    Ok(())
}

fn cmd_local(a: &LocalArgs) -> anyhow::Result<()> {
    let (lo, hi) = parse_range(&a.kx)?;
    if a.samples < 2 {
        bail!(Error::InvalidParams("need at least 2 samples".into()));
    }
    let p = params(0.0, 1.0, a.kappa)?;
    let mut m = ManifestBuilder::new("local");
    m.params(a)
        .seed("shooting from the upper saddle with bisection in c");
    let (path, mut w) = create(&a.out, "local.csv")?;
    writeln!(w, "k_x,c,classification")?;
    for i in 0..a.samples {
        let k = lo + (hi - lo) * i as f64 / (a.samples - 1) as f64;
        let wave = sg_speed(k, &p)?;
        let class = if wave.classification == Classification::None {
            classify_phase_portrait(k, wave.c, &p).connection
        } else {
            wave.classification
        };
        writeln!(w, "{},{},{}", fmt(k), fmt(wave.c), class.as_str())?;
    }
    w.flush()?;
    m.output(&path);
    m.finish(&a.out)?;
    Ok(())
}
