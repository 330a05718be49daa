//! Restarted flexible GMRES with right preconditioning.

use std::time::Instant;

use super::kernels::{axpy, dot, norm2, scale};
use super::{Preconditioner, SolveConfig, SolveReport};
use crate::error::{Error, Result};
use crate::fit::SparseMatrix;

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Solves `A·x = rhs` to `‖rhs − A·x‖₂ ≤ rel_tol·‖rhs‖₂`.
///
/// Convergence is always confirmed on the recomputed true residual. When
/// `max_iters` runs out, the iterate with the smallest true residual is
/// returned and the report is flagged as not converged.
pub fn fgmres_solve(
    a: &SparseMatrix,
    rhs: &[f64],
    precond: &dyn Preconditioner,
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{}, rhs {}",
            a.nrows(),
            a.ncols(),
            rhs.len()
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Breakdown("right-hand side is not finite".into()));
    }
    let start = Instant::now();
    let mut report = SolveReport {
        level_sizes: precond.level_sizes(),
        memory_bytes: a.memory_bytes() + precond.memory_bytes() + 2 * (cfg.restart + 1) * n * 8,
        ..SolveReport::default()
    };
    let bnorm = norm2(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        report.converged = true;
        report.solve_seconds = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let m = cfg.restart;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut r = vec![0.0; n];
    a.residual_into(rhs, &x, &mut r);
    let mut true_rel = norm2(&r) / bnorm;
    let mut best = (true_rel, x.clone());
    report.restart_residuals.push(true_rel);

    while report.iterations < cfg.max_iters {
        if true_rel <= cfg.rel_tol {
            break;
        }
        let beta = true_rel * bnorm;
        v.clear();
        z.clear();
        let mut v0 = r.clone();
        scale(1.0 / beta, &mut v0);
        v.push(v0);
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && report.iterations < cfg.max_iters {
            let zk = precond.apply(&v[k]);
            let mut w = a.mul_vec(&zk);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                axpy(-hik, &v[i], &mut w);
            }
            let wnorm = norm2(&w);
            h[k + 1][k] = wnorm;
            if !wnorm.is_finite() || h[..=k].iter().any(|row| !row[k].is_finite()) {
                return Err(Error::Breakdown(format!(
                    "non-finite Arnoldi entry at iteration {}",
                    report.iterations + 1
                )));
            }
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            report.iterations += 1;
            k += 1;
            let est = g[k].abs() / bnorm;
            if cfg.trace {
                log::info!(target: "spfd::solver", "iter {} rel_resid {:e}", report.iterations, est);
            }
            let happy = wnorm <= 1e-14 * h[k - 1][k - 1].abs().max(f64::MIN_POSITIVE);
            if est <= cfg.rel_tol || happy {
                break;
            }
            let mut vk = w;
            scale(1.0 / wnorm, &mut vk);
            v.push(vk);
        }
        // back substitution for the k×k triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            if h[i][i] == 0.0 {
                return Err(Error::Breakdown("singular Hessenberg matrix".into()));
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &z[j], &mut x);
        }
        a.residual_into(rhs, &x, &mut r);
        true_rel = norm2(&r) / bnorm;
        if !true_rel.is_finite() {
            return Err(Error::Breakdown("non-finite residual".into()));
        }
        report.restart_residuals.push(true_rel);
        if true_rel < best.0 {
            best = (true_rel, x.clone());
        }
    }
    report.converged = true_rel <= cfg.rel_tol;
    if !report.converged && best.0 < true_rel {
        x = best.1;
        true_rel = best.0;
    }
    report.rel_residual = true_rel;
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}
