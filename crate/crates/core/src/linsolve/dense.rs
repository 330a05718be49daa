use nalgebra::{DMatrix, DVector};

use crate::fit::SparseMatrix;

/// Direct solver for the coarsest multigrid level.
#[derive(Debug, Clone)]
pub enum CoarseSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Fallback when the level is too large to factor densely: a fixed number
    /// of damped Jacobi sweeps.
    Jacobi {
        matrix: SparseMatrix,
        inv_diag: Vec<f64>,
        sweeps: usize,
        omega: f64,
    },
    Empty,
}

/// Largest level that is factored densely.
pub const DENSE_LIMIT: usize = 4_096;

impl CoarseSolver {
    pub fn new(a: &SparseMatrix, omega: f64) -> Self {
        let n = a.nrows();
        if n == 0 {
            return CoarseSolver::Empty;
        }
        if n > DENSE_LIMIT {
            let inv_diag = a
                .diagonal()
                .iter()
                .map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 })
                .collect();
            return CoarseSolver::Jacobi {
                matrix: a.clone(),
                inv_diag,
                sweeps: 20,
                omega,
            };
        }
        let dense = DMatrix::from_row_slice(n, n, &a.to_dense());
        if let Some(ch) = dense.clone().cholesky() {
            CoarseSolver::Cholesky(ch)
        } else {
            CoarseSolver::Lu(dense.lu())
        }
    }

    pub fn is_direct(&self) -> bool {
        !matches!(self, CoarseSolver::Jacobi { .. })
    }

    pub fn memory_bytes(&self) -> usize {
        match self {
            CoarseSolver::Cholesky(c) => c.l_dirty().len() * 8,
            CoarseSolver::Lu(l) => {
                let n = l.p().len();
                n * n * 8 + n * 8
            }
            CoarseSolver::Jacobi {
                matrix, inv_diag, ..
            } => matrix.memory_bytes() + inv_diag.len() * 8,
            CoarseSolver::Empty => 0,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            CoarseSolver::Cholesky(c) => {
                c.solve(&DVector::from_column_slice(b)).as_slice().to_vec()
            }
            CoarseSolver::Lu(l) => match l.solve(&DVector::from_column_slice(b)) {
                Some(x) => x.as_slice().to_vec(),
                None => vec![0.0; b.len()],
            },
            CoarseSolver::Jacobi {
                matrix,
                inv_diag,
                sweeps,
                omega,
            } => {
                let mut x = vec![0.0; b.len()];
                let mut r = vec![0.0; b.len()];
                for _ in 0..*sweeps {
                    matrix.residual_into(b, &x, &mut r);
                    for i in 0..x.len() {
                        x[i] += omega * inv_diag[i] * r[i];
                    }
                }
                x
            }
            CoarseSolver::Empty => Vec::new(),
        }
    }
}
