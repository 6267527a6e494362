//! Restarted GMRES with right preconditioning for real matrix-free operators.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` starting from `x`, using the right preconditioner `M ≈ A^{-1}`.
///
/// On success `x` holds the solution. On stagnation an error carrying the
/// achieved relative residual is returned and `x` holds the best iterate.
pub fn gmres<A, M>(
    mut apply: A,
    mut precond: M,
    b: &[f64],
    x: &mut [f64],
    opts: &GmresOptions,
) -> Result<GmresStats>
where
    A: FnMut(&[f64], &mut [f64]),
    M: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let m = opts.restart.max(1).min(n.max(1));
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut total = 0;

    loop {
        apply(x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if !rel.is_finite() {
            return Err(Error::NonfiniteResidual);
        }
        if rel <= opts.tol {
            return Ok(GmresStats {
                iterations: total,
                rel_residual: rel,
            });
        }
        if total >= opts.max_iter {
            return Err(Error::LinearSolve {
                iterations: total,
                rel_residual: rel,
            });
        }

        v.clear();
        v.push(r.iter().map(|x| x / beta).collect());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k_used = 0;

        for j in 0..m {
            precond(&v[j], &mut z);
            apply(&z, &mut w);
            // modified Gram-Schmidt with one reorthogonalization pass
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hij * b);
            }
            for (i, vi) in v.iter().enumerate() {
                let corr = dot(&w, vi);
                h[i][j] += corr;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= corr * b);
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;

            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let d = a.hypot(bb);
            if d == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = a / d;
                sn[j] = bb / d;
            }
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            k_used = j + 1;
            total += 1;
            let rel = g[j + 1].abs() / bnorm;
            if rel <= opts.tol || hn == 0.0 || total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }

        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        w.iter_mut().for_each(|x| *x = 0.0);
        for (yi, vi) in y.iter().zip(&v) {
            w.iter_mut().zip(vi).for_each(|(a, b)| *a += yi * b);
        }
        precond(&w, &mut z);
        x.iter_mut().zip(&z).for_each(|(a, b)| *a += b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 60;
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            4.0 + i as f64
                        } else {
                            rng.gen_range(-0.5..0.5)
                        }
                    })
                    .collect()
            })
            .collect();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b: Vec<f64> = a.iter().map(|row| dot(row, &xs)).collect();
        let mut x = vec![0.0; n];
        let diag: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        let stats = gmres(
            |u, out| {
                for (o, row) in out.iter_mut().zip(&a) {
                    *o = dot(row, u);
                }
            },
            |u, out| {
                for i in 0..u.len() {
                    out[i] = u[i] / diag[i];
                }
            },
            &b,
            &mut x,
            &GmresOptions {
                tol: 1e-12,
                restart: 15,
                max_iter: 500,
            },
        )
        .unwrap();
        assert!(stats.rel_residual <= 1e-12);
        for (p, q) in x.iter().zip(&xs) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_system_reports_stagnation() {
        // A = diag(1, 1, 0), b has a component outside the range
        let b = [1.0, 1.0, 1.0];
        let mut x = [0.0; 3];
        let r = gmres(
            |u, out| {
                out[0] = u[0];
                out[1] = u[1];
                out[2] = 0.0;
            },
            |u, out| out.copy_from_slice(u),
            &b,
            &mut x,
            &GmresOptions {
                tol: 1e-10,
                restart: 3,
                max_iter: 9,
            },
        );
        assert!(matches!(r, Err(Error::LinearSolve { .. })));
    }
}
