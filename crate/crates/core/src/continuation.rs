//! Secant continuation of solution branches and surface scans over the
//! compactified `(c_x, k_y)` quadrant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics;
use crate::bisolver::{adapt_modes, newton_solve, solve_cx_zero, SolveResult, SolverOptions};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::profile::PeriodicProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationParam {
    Cx,
    Ky,
}

impl ContinuationParam {
    pub fn name(&self) -> &'static str {
        match self {
            ContinuationParam::Cx => "c_x",
            ContinuationParam::Ky => "k_y",
        }
    }

    pub fn get(&self, p: &ModelParams) -> f64 {
        match self {
            ContinuationParam::Cx => p.c_x,
            ContinuationParam::Ky => p.k_y,
        }
    }

    pub fn set(&self, p: &ModelParams, v: f64) -> ModelParams {
        match self {
            ContinuationParam::Cx => p.with_cx(v),
            ContinuationParam::Ky => p.with_ky(v),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// First step, in the parameter or in its logarithm when `log_scale` is set.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Step in `ln(param)`; requires a positive parameter range.
    pub log_scale: bool,
    /// Apply [`adapt_modes`] between steps.
    pub adapt_modes: bool,
    /// Allowed growth of `|Δk_x/Δparam|` relative to the previous secant.
    pub continuity_factor: f64,
    /// Newton iteration count at or below which the step grows.
    pub fast_newton: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-9,
            max_step: 0.5,
            grow: 1.3,
            shrink: 0.5,
            log_scale: false,
            adapt_modes: true,
            continuity_factor: 20.0,
            fast_newton: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub param: f64,
    pub k_x: f64,
    pub residual_inf: f64,
    pub n_modes: usize,
    pub newton_iters: usize,
    pub solution: SolveResult,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub param: ContinuationParam,
    pub points: Vec<BranchPoint>,
    /// Set when the step underflowed before reaching the target.
    pub truncated: bool,
}

impl Branch {
    pub fn last(&self) -> &SolveResult {
        &self.points.last().expect("branch is never empty").solution
    }

    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn k_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.k_x).collect()
    }

    /// Point closest to `value`.
    pub fn nearest(&self, value: f64) -> &BranchPoint {
        self.points
            .iter()
            .min_by(|a, b| (a.param - value).abs().total_cmp(&(b.param - value).abs()))
            .expect("branch is never empty")
    }

    fn push(&mut self, param: f64, res: SolveResult) {
        self.points.push(BranchPoint {
            param,
            k_x: res.k_x,
            residual_inf: res.residual_inf,
            n_modes: res.n_modes(),
            newton_iters: res.newton_iters,
            solution: res,
        });
    }
}

/// Newton solve followed by mode doubling until the tail criterion holds.
pub fn solve_refined(
    guess: (&PeriodicProfile, f64),
    p: &ModelParams,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let mut res = newton_solve(guess, p, opts)?;
    loop {
        let n = adapt_modes(&res, opts);
        if n <= res.n_modes() {
            return Ok(res);
        }
        log::debug!("refining to {n} modes at c_x = {}, k_y = {}", p.c_x, p.k_y);
        let psi = res.psi.resample(n)?;
        res = newton_solve((&psi, res.k_x), p, opts)?;
    }
}

fn to_coord(v: f64, log_scale: bool) -> f64 {
    if log_scale {
        v.ln()
    } else {
        v
    }
}

fn from_coord(t: f64, log_scale: bool) -> f64 {
    if log_scale {
        t.exp()
    } else {
        t
    }
}

/// Continue from `seed` (one or two converged solutions, ordered along the
/// path) in `param` up to `target`.
pub fn secant_continue(
    seed: &[SolveResult],
    param: ContinuationParam,
    target: f64,
    solver: &SolverOptions,
    copts: &ContinuationOptions,
) -> Result<Branch> {
    let first = seed
        .last()
        .ok_or_else(|| Error::InvalidParams("continuation needs a seed".into()))?;
    let base = first.params.clone();
    let start = param.get(&base);
    if copts.log_scale && !(start > 0.0 && target > 0.0) {
        return Err(Error::InvalidParams(
            "logarithmic continuation needs positive parameters".into(),
        ));
    }
    if let [a, _] = seed {
        let dir_seed = param.get(&first.params) - param.get(&a.params);
        if dir_seed * (target - start) < 0.0 {
            return Err(Error::InvalidParams(
                "target lies behind the seed direction".into(),
            ));
        }
    }

    let mut branch = Branch {
        param,
        points: Vec::new(),
        truncated: false,
    };
    branch.push(start, first.clone());
    if target == start {
        return Ok(branch);
    }

    let log = copts.log_scale;
    let t_end = to_coord(target, log);
    let dir = (t_end - to_coord(start, log)).signum();
    let mut step = copts.initial_step.min(copts.max_step);
    // previous point for the secant predictor: (coordinate, ψ, k_x)
    let mut prev: Option<(f64, PeriodicProfile, f64)> = if seed.len() == 2 {
        let s = &seed[0];
        Some((to_coord(param.get(&s.params), log), s.psi.clone(), s.k_x))
    } else {
        None
    };
    let mut n_modes = first.n_modes();
    let mut last_slope: Option<f64> = None;

    loop {
        let cur = branch.last().clone();
        let t_cur = to_coord(param.get(&cur.params), log);
        let remaining = (t_end - t_cur).abs();
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            break;
        }
        let h = step.min(remaining);
        let t_new = if h == remaining {
            t_end
        } else {
            t_cur + dir * h
        };
        let value = if h == remaining {
            target
        } else {
            from_coord(t_new, log)
        };
        let pn = param.set(&base, value);

        let cur_psi = cur.psi.resample(n_modes)?;
        let (guess, k_guess) = match &prev {
            Some((t_prev, psi_prev, k_prev)) if (t_cur - t_prev).abs() > 0.0 => {
                let r = (t_new - t_cur) / (t_cur - t_prev);
                let dpsi = cur_psi.add(&psi_prev.resample(n_modes)?.scale(-1.0))?;
                (
                    cur_psi.add(&dpsi.scale(r))?,
                    cur.k_x + r * (cur.k_x - k_prev),
                )
            }
            _ => (cur_psi.clone(), cur.k_x),
        };

        let attempt = solve_refined((&guess, k_guess), &pn, solver)
            .or_else(|_| solve_refined((&cur_psi, cur.k_x), &pn, solver));
        let accepted = match attempt {
            Ok(res) => {
                let dp = (value - param.get(&cur.params)).abs();
                let dk = (res.k_x - cur.k_x).abs();
                let ok = match last_slope {
                    Some(s) => dk <= copts.continuity_factor * s.max(1.0) * dp + 1e-8,
                    None => true,
                };
                if ok {
                    Some(res)
                } else {
                    log::debug!("continuity check failed at {} = {value}", param.name());
                    None
                }
            }
            Err(e) => {
                log::debug!("step to {} = {value} failed: {e}", param.name());
                None
            }
        };

        match accepted {
            Some(res) => {
                let dp = (value - param.get(&cur.params)).abs();
                if dp > 0.0 {
                    last_slope = Some((res.k_x - cur.k_x).abs() / dp);
                }
                if res.newton_iters <= copts.fast_newton {
                    step = (step * copts.grow).min(copts.max_step);
                }
                n_modes = if copts.adapt_modes {
                    adapt_modes(&res, solver)
                } else {
                    res.n_modes()
                };
                prev = Some((t_cur, cur.psi.clone(), cur.k_x));
                branch.push(value, res);
            }
            None => {
                step *= copts.shrink;
                if step < copts.min_step {
                    log::warn!(
                        "continuation in {} stopped at {} (target {target})",
                        param.name(),
                        param.get(&cur.params)
                    );
                    branch.truncated = true;
                    break;
                }
            }
        }
    }
    Ok(branch)
}

/// Solve at `p` by continuation from an analytic limit.
///
/// For `k_y > 0` the path starts at the exactly solvable `c_x = 0` problem,
/// reached from `k_y = 1` when needed; for `k_y = 0` it starts from the
/// large-`c_x` profile and continues downward.
pub fn solve_by_continuation(
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<SolveResult> {
    p.validate()?;
    if p.k_y > 0.0 {
        let seed = cx_zero_seed(p, n_modes, solver)?;
        if p.c_x == 0.0 {
            return Ok(seed);
        }
        let copts = ContinuationOptions {
            initial_step: (0.05 * p.c_x).min(0.05),
            max_step: if p.c_x > 1.0 { 0.3 } else { 0.05 },
            ..Default::default()
        };
        // linear steps up to 1, logarithmic beyond
        let mid = p.c_x.min(1.0);
        let b = secant_continue(&[seed], ContinuationParam::Cx, mid, solver, &copts)?;
        if b.truncated {
            return Err(truncated_error(&b));
        }
        if p.c_x <= 1.0 {
            return Ok(b.last().clone());
        }
        let copts = ContinuationOptions {
            initial_step: 0.2,
            max_step: 0.5,
            log_scale: true,
            ..Default::default()
        };
        let b = secant_continue(
            &[b.last().clone()],
            ContinuationParam::Cx,
            p.c_x,
            solver,
            &copts,
        )?;
        if b.truncated {
            return Err(truncated_error(&b));
        }
        Ok(b.last().clone())
    } else {
        let c_start = p.c_x.max(50.0);
        let start = large_cx_seed(&p.with_cx(c_start), n_modes, solver)?;
        if c_start == p.c_x {
            return Ok(start);
        }
        let copts = ContinuationOptions {
            initial_step: 0.2,
            max_step: 0.5,
            log_scale: true,
            ..Default::default()
        };
        let b = secant_continue(&[start], ContinuationParam::Cx, p.c_x, solver, &copts)?;
        if b.truncated {
            return Err(truncated_error(&b));
        }
        Ok(b.last().clone())
    }
}

fn truncated_error(b: &Branch) -> Error {
    let last = b.last();
    Error::Divergence {
        iterations: 0,
        residual: last.residual_inf,
        last: Box::new(crate::error::LastIterate {
            psi: Some(last.psi.clone()),
            k_x: last.k_x,
        }),
    }
}

/// Solution of the `c_x = 0` problem at `p.k_y`, continued in `k_y` from 1
/// when the direct solve from the zero profile fails.
pub fn cx_zero_seed(
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<SolveResult> {
    let p0 = p.with_cx(0.0);
    if let Ok(r) = solve_cx_zero(&p0, n_modes, solver) {
        let r = solve_refined((&r.psi, r.k_x), &p0, solver)?;
        return Ok(r);
    }
    let start = solve_cx_zero(&p0.with_ky(1.0), n_modes, solver)?;
    let copts = ContinuationOptions {
        initial_step: 0.2,
        max_step: 0.5,
        log_scale: true,
        ..Default::default()
    };
    let b = secant_continue(&[start], ContinuationParam::Ky, p.k_y, solver, &copts)?;
    if b.truncated {
        return Err(truncated_error(&b));
    }
    Ok(b.last().clone())
}

/// Solution at large `c_x` seeded with the leading-order profile.
pub fn large_cx_seed(
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<SolveResult> {
    let (psi0, k0) = asymptotics::psi0_large_cx(p, n_modes)?;
    solve_refined((&psi0, k0), p, solver)
}

/// Compactified coordinate `v/(1+v)`, with `∞ ↦ 1`.
pub fn compactify(v: f64) -> f64 {
    if v.is_infinite() {
        1.0
    } else {
        v / (1.0 + v)
    }
}

/// Inverse of [`compactify`].
pub fn decompactify(u: f64) -> f64 {
    if u >= 1.0 {
        f64::INFINITY
    } else {
        u / (1.0 - u)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub cx_values: Vec<f64>,
    pub ky_values: Vec<f64>,
}

impl SurfaceGrid {
    /// Uniform grid in the compactified coordinates, including 0 and ∞.
    pub fn compactified(n_cx: usize, n_ky: usize) -> Result<Self> {
        if n_cx < 2 || n_ky < 2 {
            return Err(Error::InvalidParams(
                "surface grid needs at least 2x2 points".into(),
            ));
        }
        let axis = |n: usize| {
            (0..n)
                .map(|i| decompactify(i as f64 / (n - 1) as f64))
                .collect::<Vec<_>>()
        };
        Ok(Self {
            cx_values: axis(n_cx),
            ky_values: axis(n_ky),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellFlag {
    /// Computed by the solver.
    Converged,
    /// Analytic limit at `c_x ∈ {0, ∞}` or `k_y = ∞`.
    Limit,
    /// Deferred to the inner (heteroclinic) prediction.
    InnerRegime,
    /// The corner `c_x = k_y = 0`, where `k_x` is undetermined.
    Excluded,
    Failed,
}

impl CellFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellFlag::Converged => "converged",
            CellFlag::Limit => "limit",
            CellFlag::InnerRegime => "inner-regime",
            CellFlag::Excluded => "excluded",
            CellFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub c_x: f64,
    pub k_y: f64,
    pub cx_compact: f64,
    pub ky_compact: f64,
    pub k_x: f64,
    pub flag: CellFlag,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceTable {
    pub kappa: f64,
    /// Row-major: one row per k_y value, columns in c_x order.
    pub cells: Vec<SurfaceCell>,
    pub n_cx: usize,
    pub n_ky: usize,
}

impl SurfaceTable {
    pub fn cell(&self, i_cx: usize, i_ky: usize) -> &SurfaceCell {
        &self.cells[i_ky * self.n_cx + i_cx]
    }

    pub fn row(&self, i_ky: usize) -> &[SurfaceCell] {
        &self.cells[i_ky * self.n_cx..(i_ky + 1) * self.n_cx]
    }
}

/// Scale below which both parameters place a cell in the inner regime.
pub const INNER_REGIME_SCALE: f64 = 1e-3;

/// Fill a surface table row by row; rows run in parallel.
///
/// `inner` maps `(c_x, k_y)` to the inner-regime prediction when available.
pub fn surface_scan(
    grid: &SurfaceGrid,
    p: &ModelParams,
    solver: &SolverOptions,
    n_modes: usize,
    inner: Option<&(dyn Fn(f64, f64) -> Option<f64> + Sync)>,
) -> Result<SurfaceTable> {
    if grid.cx_values.is_empty() || grid.ky_values.is_empty() {
        return Err(Error::InvalidParams("empty surface grid".into()));
    }
    let mut order: Vec<usize> = (0..grid.cx_values.len()).collect();
    order.sort_by(|a, b| grid.cx_values[*a].total_cmp(&grid.cx_values[*b]));

    let rows: Vec<Vec<SurfaceCell>> = grid
        .ky_values
        .par_iter()
        .map(|&k_y| scan_row(grid, &order, k_y, p, solver, n_modes, inner))
        .collect();
    Ok(SurfaceTable {
        kappa: p.kappa,
        cells: rows.into_iter().flatten().collect(),
        n_cx: grid.cx_values.len(),
        n_ky: grid.ky_values.len(),
    })
}

fn scan_row(
    grid: &SurfaceGrid,
    order: &[usize],
    k_y: f64,
    p: &ModelParams,
    solver: &SolverOptions,
    n_modes: usize,
    inner: Option<&(dyn Fn(f64, f64) -> Option<f64> + Sync)>,
) -> Vec<SurfaceCell> {
    let mean = p.mean_flux();
    let harmonic = p.harmonic_mean_flux();
    let mut cells: Vec<SurfaceCell> = grid
        .cx_values
        .iter()
        .map(|&c_x| SurfaceCell {
            c_x,
            k_y,
            cx_compact: compactify(c_x),
            ky_compact: compactify(k_y),
            k_x: f64::NAN,
            flag: CellFlag::Failed,
        })
        .collect();

    for cell in cells.iter_mut() {
        let (c, k) = (cell.c_x, cell.k_y);
        if k.is_infinite() {
            cell.k_x = mean;
            cell.flag = CellFlag::Limit;
        } else if c.is_infinite() {
            cell.k_x = harmonic;
            cell.flag = CellFlag::Limit;
        } else if c == 0.0 && k > 0.0 {
            cell.k_x = mean;
            cell.flag = CellFlag::Limit;
        } else if c == 0.0 {
            cell.flag = CellFlag::Excluded;
        } else if c < INNER_REGIME_SCALE && k < INNER_REGIME_SCALE {
            if let Some(v) = inner.and_then(|f| f(c, k)) {
                cell.k_x = v;
                cell.flag = CellFlag::InnerRegime;
            }
        }
    }

    let finite: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| {
            let c = grid.cx_values[i];
            c > 0.0 && c.is_finite() && k_y.is_finite() && cells[i].flag == CellFlag::Failed
        })
        .collect();
    if finite.is_empty() {
        return cells;
    }
    let base = match ModelParams::new(1.0, k_y, p.kappa) {
        Ok(b) => ModelParams {
            flux: p.flux.clone(),
            ..b
        },
        Err(_) => return cells,
    };

    if k_y > 0.0 {
        // upward in c_x from the c_x = 0 solution
        let Ok(mut cur) = cx_zero_seed(&base.with_cx(0.0), n_modes, solver) else {
            return cells;
        };
        for &i in &finite {
            let c = grid.cx_values[i];
            match continue_to(&cur, c, solver) {
                Ok(res) => {
                    cells[i].k_x = res.k_x;
                    cells[i].flag = CellFlag::Converged;
                    cur = res;
                }
                Err(_) => break,
            }
        }
    } else {
        // downward in c_x from the large-c_x profile
        let c_top = grid.cx_values[*finite.last().unwrap()].max(50.0);
        let Ok(mut cur) = large_cx_seed(&base.with_cx(c_top), n_modes, solver) else {
            return cells;
        };
        for &i in finite.iter().rev() {
            let c = grid.cx_values[i];
            match continue_to(&cur, c, solver) {
                Ok(res) => {
                    cells[i].k_x = res.k_x;
                    cells[i].flag = CellFlag::Converged;
                    cur = res;
                }
                Err(_) => break,
            }
        }
    }
    cells
}

/// Continue a solution in `c_x` to `target`, in logarithmic steps when both
/// ends are positive.
fn continue_to(cur: &SolveResult, target: f64, solver: &SolverOptions) -> Result<SolveResult> {
    let start = cur.params.c_x;
    let log_scale = start > 0.0 && target > 0.0;
    let copts = if log_scale {
        ContinuationOptions {
            initial_step: 0.1,
            max_step: 0.4,
            log_scale: true,
            ..Default::default()
        }
    } else {
        ContinuationOptions {
            initial_step: (0.05 * (target - start).abs()).max(1e-4),
            max_step: 0.05,
            ..Default::default()
        }
    };
    let b = secant_continue(
        std::slice::from_ref(cur),
        ContinuationParam::Cx,
        target,
        solver,
        &copts,
    )?;
    if b.truncated {
        return Err(truncated_error(&b));
    }
    Ok(b.last().clone())
}
