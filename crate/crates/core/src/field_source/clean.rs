use crate::error::{Error, Result};
use crate::fit::{apply_divergence, apply_divergence_transpose, build_divergence, StaggeredGrid};
use crate::linsolve::kernels::norm2;
use crate::linsolve::{solve, SolveConfig};

/// Default relative divergence tolerance, shared with gauging.
pub const DEFAULT_CLEAN_TOL: f64 = 1e-10;

/// Projects `fluxes` onto the discretely solenoidal subspace with the
/// default solver configuration.
pub fn divergence_clean(fluxes: &[f64], grid: &StaggeredGrid, tol: f64) -> Result<Vec<f64>> {
    divergence_clean_with(fluxes, grid, tol, &SolveConfig::default())
}

/// Solves `S·Sᵀ·φ = S·b̂̂` and returns `b̂̂ − Sᵀ·φ`, unless `b̂̂` already
/// satisfies `‖S·b̂̂‖₂ ≤ tol·‖b̂̂‖₂`. The inner solve targets a residual
/// three orders below `tol` so that downstream circulation checks at the
/// same tolerance hold.
pub fn divergence_clean_with(
    fluxes: &[f64],
    grid: &StaggeredGrid,
    tol: f64,
    cfg: &SolveConfig,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cleaning tolerance {tol} must be > 0"
        )));
    }
    let div = apply_divergence(grid, fluxes)?;
    let bnorm = norm2(fluxes);
    let dnorm = norm2(&div);
    if dnorm <= tol * bnorm {
        return Ok(fluxes.to_vec());
    }
    let s = build_divergence(grid);
    let sst = s.matmul(&s.transpose())?;
    let mut inner = cfg.clone();
    inner.rel_tol = (1e-3 * tol * bnorm / dnorm).clamp(1e-14, 1e-1);
    let (phi, report) = solve(&sst, &div, &inner)?;
    let grad = apply_divergence_transpose(grid, &phi)?;
    let cleaned: Vec<f64> = fluxes.iter().zip(&grad).map(|(b, g)| b - g).collect();
    let after = norm2(&apply_divergence(grid, &cleaned)?);
    if after > tol * bnorm {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: after / bnorm,
        });
    }
    Ok(cleaned)
}
