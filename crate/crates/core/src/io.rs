//! CSV and JSON records. Floating-point fields are written with 17
//! significant digits so that values round-trip exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bisolver::SolveResult;
use crate::continuation::{Branch, SurfaceTable};
use crate::error::Result;
use crate::profile::{PeriodicProfile, ProfileRecord};

/// Full-precision formatting.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Serializable summary of a [`SolveResult`], including the profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecord {
    pub c_x: f64,
    pub k_y: f64,
    pub kappa: f64,
    pub k_x: f64,
    pub residual_inf: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
    pub n_modes: usize,
    pub monotonicity_margin: f64,
    pub c_y: Option<f64>,
    pub omega: f64,
    pub profile: ProfileRecord,
}

impl SolveRecord {
    pub fn from_result(res: &SolveResult) -> Self {
        Self {
            c_x: res.params.c_x,
            k_y: res.params.k_y,
            kappa: res.params.kappa,
            k_x: res.k_x,
            residual_inf: res.residual_inf,
            newton_iters: res.newton_iters,
            linear_iters: res.linear_iters,
            n_modes: res.n_modes(),
            monotonicity_margin: res.monotonicity_margin,
            c_y: res.c_y,
            omega: res.omega,
            profile: res.psi.to_record(),
        }
    }

    pub fn profile(&self) -> Result<PeriodicProfile> {
        PeriodicProfile::from_record(&self.profile)
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}

/// `(zeta, psi)` rows on the collocation grid.
pub fn write_profile_csv<W: Write>(psi: &PeriodicProfile, mut out: W) -> Result<()> {
    writeln!(out, "zeta,psi")?;
    for (z, v) in psi.physical_rows() {
        writeln!(out, "{},{}", fmt(z), fmt(v))?;
    }
    Ok(())
}

/// `(param, k_x, residual_inf, n_modes, newton_iters)` rows.
pub fn write_branch_csv<W: Write>(branch: &Branch, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{},k_x,residual_inf,n_modes,newton_iters",
        branch.param.name()
    )?;
    for q in &branch.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt(q.param),
            fmt(q.k_x),
            fmt(q.residual_inf),
            q.n_modes,
            q.newton_iters
        )?;
    }
    Ok(())
}

/// `(c_x, k_y, cx_compact, ky_compact, k_x, flag)` rows.
pub fn write_surface_csv<W: Write>(table: &SurfaceTable, mut out: W) -> Result<()> {
    writeln!(out, "c_x,k_y,cx_compact,ky_compact,k_x,flag")?;
    for c in &table.cells {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(c.c_x),
            fmt(c.k_y),
            fmt(c.cx_compact),
            fmt(c.ky_compact),
            fmt(c.k_x),
            c.flag.as_str()
        )?;
    }
    Ok(())
}
