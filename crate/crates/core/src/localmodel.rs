//! Local comparison problem: traveling waves `u'' + c u' = g(u) − k_x` of the
//! asymmetric parabolic Sine-Gordon equation.
//!
//! The speed is found by shooting from the saddle `u_s` (rising root of
//! `g = k_x`) along its unstable eigenvector and bisecting on `c` until the
//! trajectory lands on the saddle `u_s + 2π`. A boundary-value solve for
//! `p(u) = u'` on `[u_s, u_s + 2π]` gives an independent value of `c`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const SHOOT_TOL: f64 = 1e-10;
pub const SHOOT_DISPLACEMENT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    HyperbolicHeteroclinic,
    SaddleNodeHeteroclinic,
    None,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::HyperbolicHeteroclinic => "hyperbolic-heteroclinic",
            Classification::SaddleNodeHeteroclinic => "saddle-node-heteroclinic",
            Classification::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Center,
    SaddleNode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equilibrium {
    pub u: f64,
    pub kind: EquilibriumKind,
    /// Eigenvalues `(re, im)` of the linearization.
    pub eigenvalues: [(f64, f64); 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub k_x: f64,
    pub c: f64,
    pub equilibria: Vec<Equilibrium>,
    pub connection: Classification,
}

/// Traveling wave of the local model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SGWave {
    pub k_x: f64,
    pub c: f64,
    /// `(y, u)` samples along the connecting orbit.
    pub profile: Vec<(f64, f64)>,
    pub classification: Classification,
}

/// Dormand-Prince 5(4) step with embedded error estimate.
fn dopri_step<F: Fn(&[f64; 2]) -> [f64; 2]>(f: &F, y: &[f64; 2], h: f64) -> ([f64; 2], f64) {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut k = [[0.0; 2]; 7];
    k[0] = f(y);
    for s in 0..6 {
        let mut t = *y;
        for (r, kr) in k.iter().enumerate().take(s + 1) {
            t[0] += h * A[s][r] * kr[0];
            t[1] += h * A[s][r] * kr[1];
        }
        k[s + 1] = f(&t);
    }
    let mut next = *y;
    for r in 0..6 {
        next[0] += h * A[5][r] * k[r][0];
        next[1] += h * A[5][r] * k[r][1];
    }
    let mut err = 0.0f64;
    for i in 0..2 {
        let e: f64 = (0..7).map(|r| E[r] * k[r][i]).sum::<f64>() * h;
        let sc = SHOOT_TOL * (1.0 + y[i].abs().max(next[i].abs()));
        err = err.max((e / sc).abs());
    }
    (next, err)
}

/// Integrate until `stop` fires or `y_max` is reached; returns the visited
/// `(y, state)` pairs.
fn integrate<F, S>(f: &F, start: [f64; 2], y_max: f64, stop: S) -> Vec<(f64, [f64; 2])>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
    S: Fn(&[f64; 2]) -> bool,
{
    let mut out = vec![(0.0, start)];
    let mut y = 0.0;
    let mut state = start;
    let mut h = 1e-3;
    while y < y_max && out.len() < 20_000_000 {
        let (next, err) = dopri_step(f, &state, h);
        if err <= 1.0 {
            y += h;
            state = next;
            out.push((y, state));
            if stop(&state) {
                break;
            }
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).min(y_max - y).max(1e-12);
    }
    out
}

fn check_kx(k_x: f64, p: &ModelParams) -> Result<f64> {
    let us = p
        .rising_root(k_x)
        .map_err(|_| Error::NoHyperbolicEquilibria { k_x })?;
    if p.flux_deriv(us) <= 1e-12 {
        return Err(Error::NoHyperbolicEquilibria { k_x });
    }
    Ok(us)
}

/// Outcome of one shot: positive `u'` at the target saddle (overshoot, `c`
/// too small) or the negative shortfall `u − target` where the orbit turns
/// back or settles on the node in between (`c` too large).
fn shoot(k_x: f64, c: f64, us: f64, p: &ModelParams) -> (f64, Vec<(f64, [f64; 2])>) {
    let gp = p.flux_deriv(us);
    let lam = 0.5 * (-c + (c * c + 4.0 * gp).sqrt());
    let target = us + TAU;
    let f = |s: &[f64; 2]| [s[1], p.flux(s[0]) - k_x - c * s[1]];
    let d = SHOOT_DISPLACEMENT / (1.0 + lam * lam).sqrt();
    let start = [us + d, lam * d];
    let y_max = 1e7;
    let path = integrate(&f, start, y_max, |s| {
        s[0] >= target
            || s[1] <= 0.0
            || (s[0] < target - 0.1 && s[1].abs() < 1e-12 && (p.flux(s[0]) - k_x).abs() < 1e-12)
    });
    let n = path.len();
    let (_, last) = path[n - 1];
    let miss = if last[0] >= target {
        // interpolate u' at u = target
        let (_, prev) = path[n - 2];
        let t = (target - prev[0]) / (last[0] - prev[0]);
        prev[1] + t * (last[1] - prev[1])
    } else {
        // turned back, or captured by the node between the saddles
        last[0] - target
    };
    (miss, path)
}

/// Speed of the heteroclinic connecting `u_s` to `u_s + 2π`.
pub fn sg_speed(k_x: f64, p: &ModelParams) -> Result<SGWave> {
    p.validate()?;
    let us = check_kx(k_x, p)?;
    let miss = |c: f64| shoot(k_x, c, us, p).0;
    let m0 = miss(0.0);
    let (mut lo, mut hi) = if m0 == 0.0 {
        (0.0, 0.0)
    } else if m0 > 0.0 {
        let mut hi = 1.0;
        while miss(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NotBracketed("no speed bracket up to 1e6".into()));
            }
        }
        (0.0, hi)
    } else {
        let mut lo = -1.0;
        while miss(lo) < 0.0 {
            lo *= 2.0;
            if lo < -1e6 {
                return Err(Error::NotBracketed("no speed bracket down to -1e6".into()));
            }
        }
        (lo, 0.0)
    };
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let m = miss(mid);
        if m > 0.0 {
            lo = mid;
        } else if m < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let (_, path) = shoot(k_x, c, us, p);
    let stride = (path.len() / 2000).max(1);
    let profile = path
        .iter()
        .step_by(stride)
        .map(|(y, s)| (*y, s[0]))
        .collect();
    Ok(SGWave {
        k_x,
        c,
        profile,
        classification: Classification::HyperbolicHeteroclinic,
    })
}

fn equilibrium(u: f64, c: f64, gp: f64) -> Equilibrium {
    // λ² + cλ − g' = 0
    let disc = c * c + 4.0 * gp;
    let scale = 1e-12 * (1.0 + c * c);
    let (kind, ev) = if gp.abs() <= 1e-12 {
        (EquilibriumKind::SaddleNode, [(0.0, 0.0), (-c, 0.0)])
    } else if disc >= 0.0 {
        let r = disc.sqrt();
        let (a, b) = (0.5 * (-c + r), 0.5 * (-c - r));
        let kind = if gp > 0.0 {
            EquilibriumKind::Saddle
        } else if c > 0.0 {
            EquilibriumKind::StableNode
        } else {
            EquilibriumKind::UnstableNode
        };
        (kind, [(a, 0.0), (b, 0.0)])
    } else {
        let im = 0.5 * (-disc).sqrt();
        let kind = if c.abs() <= scale {
            EquilibriumKind::Center
        } else if c > 0.0 {
            EquilibriumKind::StableFocus
        } else {
            EquilibriumKind::UnstableFocus
        };
        (kind, [(-0.5 * c, im), (-0.5 * c, -im)])
    };
    Equilibrium {
        u,
        kind,
        eigenvalues: ev,
    }
}

/// Equilibria in `[−π, π)` of the first-order system and the connection type
/// at speed `c`.
pub fn classify_phase_portrait(k_x: f64, c: f64, p: &ModelParams) -> PhasePortrait {
    let n = 4096;
    let h = TAU / n as f64;
    let mut equilibria = Vec::new();
    let fk = |u: f64| p.flux(u) - k_x;
    for j in 0..n {
        let (a, b) = (-PI + j as f64 * h, -PI + (j + 1) as f64 * h);
        let (fa, fb) = (fk(a), fk(b));
        let mut root = None;
        if fa == 0.0 {
            root = Some(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if fk(lo) * fk(m) <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            root = Some(0.5 * (lo + hi));
        } else {
            // double root: local minimum of |g − k| touching zero
            let m = 0.5 * (a + b);
            let gm = p.flux_deriv(a) * p.flux_deriv(b);
            if gm < 0.0 && fk(m).abs() < 1e-10 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if p.flux_deriv(lo) * p.flux_deriv(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                root = Some(0.5 * (lo + hi));
            }
        }
        if let Some(u) = root {
            let gp = if fk(u).abs() < 1e-10 && p.flux_deriv(u).abs() < 1e-6 {
                0.0
            } else {
                p.flux_deriv(u)
            };
            equilibria.push(equilibrium(u, c, gp));
        }
    }
    let connection = if equilibria.iter().any(|e| e.kind == EquilibriumKind::Saddle) {
        match check_kx(k_x, p) {
            Ok(us) => {
                let (m, _) = shoot(k_x, c, us, p);
                let (mp, _) = shoot(k_x, c + 1e-6, us, p);
                let (mm, _) = shoot(k_x, c - 1e-6, us, p);
                // a zero of the miss functional within the probe interval
                if m == 0.0 || mp * mm <= 0.0 {
                    Classification::HyperbolicHeteroclinic
                } else {
                    Classification::None
                }
            }
            Err(_) => Classification::None,
        }
    } else if let Some(sn) = equilibria
        .iter()
        .find(|e| e.kind == EquilibriumKind::SaddleNode)
    {
        if saddle_node_connects(k_x, c, sn.u, p) {
            Classification::SaddleNodeHeteroclinic
        } else {
            Classification::None
        }
    } else {
        Classification::None
    };
    PhasePortrait {
        k_x,
        c,
        equilibria,
        connection,
    }
}

/// Whether the orbit leaving the saddle-node `u0` along its center manifold
/// is captured by `u0 + 2π` instead of passing it.
fn saddle_node_connects(k_x: f64, c: f64, u0: f64, p: &ModelParams) -> bool {
    if c <= 0.0 {
        return false;
    }
    let s0 = 1e-2;
    let start = [u0 + s0, (p.flux(u0 + s0) - k_x) / c];
    let target = u0 + TAU;
    let f = |s: &[f64; 2]| [s[1], p.flux(s[0]) - k_x - c * s[1]];
    let path = integrate(&f, start, 1e6, |s| {
        s[0] >= target + 0.5 || (s[0] > target - 0.5 && s[1] < 1e-9)
    });
    path.last()
        .map(|(_, s)| s[0] < target + 0.5)
        .unwrap_or(false)
}

/// Chebyshev points `x_j = cos(πj/n)` and differentiation matrix.
fn chebyshev(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| {
        let e = if j == 0 || j == n { 2.0 } else { 1.0 };
        e * if j.is_multiple_of(2) { 1.0 } else { -1.0 }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Speed from the boundary-value problem `p p' + c p = g − k_x`,
/// `p(u_s) = p(u_s + 2π) = 0`, `p'(u_s) = λ_+(c)`, by Chebyshev collocation
/// and continuation in `k_x` from the explicit solution at `k_x = 1`.
pub fn bvp_speed(k_x: f64, p: &ModelParams, n: usize) -> Result<f64> {
    p.validate()?;
    check_kx(k_x, p)?;
    check_kx(1.0, p)?;
    let (x, d) = chebyshev(n);
    let dd = d.clone() / PI;
    // x_0 = 1 is u_s + 2π, x_n = −1 is u_s
    let u0 = check_kx(1.0, p)?;
    let mut pv = DVector::from_iterator(
        n + 1,
        x.iter().map(|xi| {
            let u = u0 + PI * (1.0 + xi);
            let big_f: f64 = quad_flux(p, 1.0, u0, u);
            (2.0 * big_f).max(0.0).sqrt()
        }),
    );
    let mut c = 0.0;
    let steps = ((1.0 - k_x).abs() / 0.01).ceil().max(1.0) as usize;
    for s in 1..=steps {
        let k = 1.0 + (k_x - 1.0) * s as f64 / steps as f64;
        let us = check_kx(k, p)?;
        let mut converged = false;
        for _ in 0..50 {
            let dp = &dd * &pv;
            let gp = p.flux_deriv(us);
            let root = (c * c + 4.0 * gp).sqrt();
            let lam = 0.5 * (-c + root);
            let mut res = DVector::zeros(n + 2);
            let mut jac = DMatrix::zeros(n + 2, n + 2);
            for i in 1..n {
                let u = us + PI * (1.0 + x[i]);
                res[i] = pv[i] * dp[i] + c * pv[i] - (p.flux(u) - k);
                for j in 0..=n {
                    jac[(i, j)] = pv[i] * dd[(i, j)];
                }
                jac[(i, i)] += dp[i] + c;
                jac[(i, n + 1)] = pv[i];
            }
            res[0] = pv[0];
            jac[(0, 0)] = 1.0;
            res[n] = pv[n];
            jac[(n, n)] = 1.0;
            res[n + 1] = dp[n] - lam;
            for j in 0..=n {
                jac[(n + 1, j)] = dd[(n, j)];
            }
            jac[(n + 1, n + 1)] = 0.5 * (1.0 - c / root);
            let delta = jac
                .lu()
                .solve(&(-&res))
                .ok_or_else(|| Error::IllConditioned("singular collocation Jacobian".into()))?;
            for j in 0..=n {
                pv[j] += delta[j];
            }
            c += delta[n + 1];
            if delta.amax() < 1e-13 * (1.0 + pv.amax()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Divergence {
                iterations: 50,
                residual: f64::NAN,
                last: Box::new(crate::error::LastIterate { psi: None, k_x: k }),
            });
        }
    }
    Ok(c)
}

fn quad_flux(p: &ModelParams, k: f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|j| {
            let u = a + (j as f64 + 0.5) * h;
            p.flux(u) - k
        })
        .sum::<f64>()
        * h
}

/// Spatial period of the rotating wave (`k_x < min g`) of the reduced
/// equation `c u' = g(u) − k_x`: `c ∫_0^{2π} du/(g − k_x)`.
pub fn slow_manifold_period(k_x: f64, c: f64, p: &ModelParams) -> Result<f64> {
    let (lo, _) = p.flux_range();
    if k_x >= lo {
        return Err(Error::InvalidParams(
            "rotating waves need k_x < min g".into(),
        ));
    }
    if p.is_sinusoidal() {
        return Ok(c * TAU / ((1.0 - k_x).powi(2) - p.kappa * p.kappa).sqrt());
    }
    let n = 8192;
    let h = TAU / n as f64;
    Ok(c * h
        * (0..n)
            .map(|j| 1.0 / (p.flux(j as f64 * h) - k_x))
            .sum::<f64>())
}

/// Spatial period of the attracting rotating wave of the full equation for
/// `k_x < min g`, `c > 0`.
pub fn rotating_wave_period(k_x: f64, c: f64, p: &ModelParams) -> Result<f64> {
    let (lo, _) = p.flux_range();
    if k_x >= lo || c <= 0.0 {
        return Err(Error::InvalidParams(
            "rotating waves need k_x < min g and c > 0".into(),
        ));
    }
    let f = |s: &[f64; 2]| [s[1], p.flux(s[0]) - k_x - c * s[1]];
    // relax onto the periodic orbit, then time one revolution
    let mut state = [0.0, (p.flux(0.0) - k_x) / c];
    for _ in 0..20 {
        let target = state[0] + TAU;
        let path = integrate(&f, state, 1e9, |s| s[0] >= target);
        state = path[path.len() - 1].1;
        state[0] -= TAU;
        state[0] = state[0].max(0.0);
    }
    let start = [0.0, state[1]];
    let path = integrate(&f, start, 1e9, |s| s[0] >= TAU);
    let n = path.len();
    let (y1, s1) = path[n - 1];
    let (y0, s0) = path[n - 2];
    Ok(y0 + (TAU - s0[0]) / (s1[0] - s0[0]) * (y1 - y0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.0, 1.0, 0.3).unwrap()
    }

    #[test]
    fn hamiltonian_speed_is_zero() {
        let w = sg_speed(1.0, &params()).unwrap();
        assert!(w.c.abs() < 1e-8, "c = {}", w.c);
    }

    #[test]
    fn energy_identity() {
        // c ∫ u'² dy = 2π(1 − k_x)
        let p = params();
        let k = 0.85;
        let w = sg_speed(k, &p).unwrap();
        let us = p.rising_root(k).unwrap();
        let (_, path) = shoot(k, w.c, us, &p);
        // ∫ u'² dy = ∫ u' du along the orbit
        let mut integral = 0.0;
        for win in path.windows(2) {
            let (_, a) = win[0];
            let (_, b) = win[1];
            integral += 0.5 * (a[1] + b[1]) * (b[0] - a[0]);
        }
        let want = TAU * (1.0 - k);
        assert!(
            (w.c * integral - want).abs() < 1e-3 * want,
            "{} vs {want}",
            w.c * integral
        );
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            sg_speed(0.6, &params()),
            Err(Error::NoHyperbolicEquilibria { .. })
        ));
    }

    #[test]
    fn hamiltonian_portrait() {
        let pp = classify_phase_portrait(1.0, 0.0, &params());
        let saddles = pp
            .equilibria
            .iter()
            .filter(|e| e.kind == EquilibriumKind::Saddle)
            .count();
        assert_eq!(saddles, 1);
        let s = pp
            .equilibria
            .iter()
            .find(|e| e.kind == EquilibriumKind::Saddle)
            .unwrap();
        // ±sqrt(g') = ±sqrt(κ)
        assert!((s.eigenvalues[0].0 - 0.3f64.sqrt()).abs() < 1e-12);
        assert!((s.eigenvalues[1].0 + 0.3f64.sqrt()).abs() < 1e-12);
        assert_eq!(pp.connection, Classification::HyperbolicHeteroclinic);
    }

    #[test]
    fn saddle_node_location() {
        let pp = classify_phase_portrait(0.7, 5.0, &params());
        let sn: Vec<_> = pp
            .equilibria
            .iter()
            .filter(|e| e.kind == EquilibriumKind::SaddleNode)
            .collect();
        assert_eq!(sn.len(), 1);
        assert!((sn[0].u + PI / 2.0).abs() < 1e-6, "u = {}", sn[0].u);
    }

    #[test]
    fn chebyshev_derivative_exact_on_polynomials() {
        let (x, d) = chebyshev(12);
        let v = DVector::from_iterator(13, x.iter().map(|t| t.powi(5)));
        let dv = &d * &v;
        for (i, t) in x.iter().enumerate() {
            assert!((dv[i] - 5.0 * t.powi(4)).abs() < 1e-11);
        }
    }
}
