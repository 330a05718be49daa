//! Krylov solution of the reduced Poisson system: restarted FGMRES
//! right-preconditioned by a smoothed-aggregation AMG V-cycle.

mod amg;
mod dense;
mod fgmres;
pub mod kernels;

use std::sync::OnceLock;
use std::time::Instant;

pub use amg::{
    aggregate, amg_setup, smooth_prolongation, strength_graph, tentative_prolongation, Aggregation,
    AmgHierarchy, AmgLevel,
};
pub use dense::{CoarseSolver, DENSE_LIMIT};
pub use fgmres::fgmres_solve;

use crate::error::{Error, Result};
use crate::fit::SparseMatrix;
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Target `‖b − A·x‖₂ / ‖b‖₂`.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub jacobi_damping: f64,
    /// Strength threshold on the finest level; halved on each coarser level.
    pub strength_threshold: f64,
    pub coarse_cap: usize,
    pub max_levels: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Registered preconditioner name.
    pub preconditioner: String,
    /// Log `iter k rel_resid r` per iteration.
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iters: 1000,
            restart: 30,
            pre_sweeps: 1,
            post_sweeps: 1,
            jacobi_damping: 2.0 / 3.0,
            strength_threshold: 0.08,
            coarse_cap: 500,
            max_levels: 20,
            threads: None,
            preconditioner: "amg".into(),
            trace: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol {} must be > 0",
                self.rel_tol
            )));
        }
        if self.restart < 1 {
            return Err(Error::InvalidArgument("restart must be >= 1".into()));
        }
        if !(self.jacobi_damping > 0.0 && self.jacobi_damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "jacobi_damping {} must lie in (0, 1]",
                self.jacobi_damping
            )));
        }
        if self.max_levels < 1 {
            return Err(Error::InvalidArgument("max_levels must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Recomputed true relative residual of the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub level_sizes: Vec<usize>,
    /// Estimated bytes of matrix, hierarchy and Krylov basis.
    pub memory_bytes: usize,
    /// True relative residual at the start and after every restart cycle.
    pub restart_residuals: Vec<f64>,
}

/// Approximate inverse applied once per FGMRES iteration.
pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, r: &[f64]) -> Vec<f64>;
    fn level_sizes(&self) -> Vec<usize> {
        Vec::new()
    }
    fn memory_bytes(&self) -> usize {
        0
    }
}

impl Preconditioner for AmgHierarchy {
    fn name(&self) -> &'static str {
        "amg"
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.v_cycle(r)
    }

    fn level_sizes(&self) -> Vec<usize> {
        AmgHierarchy::level_sizes(self)
    }

    fn memory_bytes(&self) -> usize {
        AmgHierarchy::memory_bytes(self)
    }
}

/// Scaled diagonal (point-Jacobi) preconditioner.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &SparseMatrix) -> Self {
        Self {
            inv_diag: a
                .diagonal()
                .iter()
                .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect()
    }

    fn memory_bytes(&self) -> usize {
        self.inv_diag.len() * 8
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn name(&self) -> &'static str {
        "none"
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

pub type PreconditionerFactory = fn(&SparseMatrix, &SolveConfig) -> Result<Box<dyn Preconditioner>>;

pub fn preconditioner_registry() -> &'static Registry<PreconditionerFactory> {
    static REGISTRY: OnceLock<Registry<PreconditionerFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<PreconditionerFactory>::new("preconditioner")
            .with("amg", "smoothed-aggregation AMG, one V-cycle", |a, cfg| {
                Ok(Box::new(amg_setup(a, cfg)?))
            })
            .with("jacobi", "point Jacobi", |a, _| {
                Ok(Box::new(JacobiPreconditioner::new(a)))
            })
            .with("none", "no preconditioning", |_, _| {
                Ok(Box::new(IdentityPreconditioner))
            })
    })
}

/// Builds the preconditioner named in `cfg`.
pub fn build_preconditioner(
    a: &SparseMatrix,
    cfg: &SolveConfig,
) -> Result<Box<dyn Preconditioner>> {
    cfg.validate()?;
    let factory = preconditioner_registry().get(&cfg.preconditioner)?;
    factory(a, cfg)
}

/// Builds the configured preconditioner (timed as setup) and runs FGMRES,
/// on `cfg.threads` workers when set.
pub fn solve(a: &SparseMatrix, rhs: &[f64], cfg: &SolveConfig) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    kernels::with_threads(cfg.threads, || {
        let t = Instant::now();
        let precond = build_preconditioner(a, cfg)?;
        let setup_seconds = t.elapsed().as_secs_f64();
        let (x, mut report) = fgmres_solve(a, rhs, precond.as_ref(), cfg)?;
        report.setup_seconds = setup_seconds;
        Ok((x, report))
    })
}

/// Relative residual `‖b − A·x‖₂ / ‖b‖₂` (0 for a zero right-hand side and
/// zero residual).
pub fn relative_residual(a: &SparseMatrix, b: &[f64], x: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    a.residual_into(b, x, &mut r);
    let bn = kernels::norm2(b);
    let rn = kernels::norm2(&r);
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_returns_zero() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0]);
        let (x, rep) = solve(&a, &[0.0, 0.0], &SolveConfig::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = SparseMatrix::identity(50);
        let b: Vec<f64> = (0..50).map(|i| i as f64 - 20.0).collect();
        let (x, rep) = solve(&a, &b, &SolveConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-14 * q.abs().max(1.0));
        }
    }

    #[test]
    fn max_iters_flags_non_convergence() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, t).unwrap();
        let cfg = SolveConfig {
            preconditioner: "none".into(),
            max_iters: 5,
            restart: 3,
            ..SolveConfig::default()
        };
        let (_, rep) = solve(&a, &vec![1.0; n], &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 5);
        assert!(rep.rel_residual > 1e-12 && rep.rel_residual < 1.0);
    }

    #[test]
    fn non_finite_rhs_is_breakdown() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(
            solve(&a, &[f64::NAN, 1.0], &SolveConfig::default()),
            Err(Error::Breakdown(_))
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolveConfig {
            jacobi_damping: 1.5,
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolveConfig {
            preconditioner: "ilu".into(),
            ..SolveConfig::default()
        };
        assert!(solve(&SparseMatrix::identity(1), &[1.0], &cfg).is_err());
    }
}
