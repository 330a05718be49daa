//! Smoothed-aggregation algebraic multigrid.

use super::dense::CoarseSolver;
use super::kernels::diag_update;
use super::SolveConfig;
use crate::error::{Error, Result};
use crate::fit::SparseMatrix;

const UNAGGREGATED: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct AmgLevel {
    pub matrix: SparseMatrix,
    pub inv_diag: Vec<f64>,
    pub prolongation: SparseMatrix,
    pub restriction: SparseMatrix,
}

#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    pub levels: Vec<AmgLevel>,
    pub coarse_matrix: SparseMatrix,
    pub coarse: CoarseSolver,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub damping: f64,
}

/// Result of one aggregation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    /// Aggregate of each node, `usize::MAX` for isolated nodes.
    pub aggregate_of: Vec<usize>,
    pub count: usize,
}

/// Strong neighbors of every row: `|a_ij| ≥ θ·sqrt(|a_ii·a_jj|)`, `j ≠ i`.
pub fn strength_graph(a: &SparseMatrix, theta: f64) -> Vec<Vec<usize>> {
    let diag = a.diagonal();
    (0..a.nrows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|&(&j, &v)| j != i && v.abs() >= theta * (diag[i] * diag[j]).abs().sqrt())
                .map(|(&j, _)| j)
                .collect()
        })
        .collect()
}

/// Greedy root-node aggregation in index order.
///
/// 1. A node whose strong neighborhood is entirely unaggregated seeds a new
///    aggregate with that neighborhood.
/// 2. Leftover nodes join the aggregate of their strongest aggregated
///    neighbor from pass 1.
/// 3. Anything still left forms aggregates from its unaggregated strong
///    neighbors.
///
/// Nodes without strong neighbors stay unaggregated.
pub fn aggregate(a: &SparseMatrix, theta: f64) -> Aggregation {
    let n = a.nrows();
    let strong = strength_graph(a, theta);
    let mut agg = vec![UNAGGREGATED; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] != UNAGGREGATED || strong[i].is_empty() {
            continue;
        }
        if strong[i].iter().all(|&j| agg[j] == UNAGGREGATED) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let pass1 = agg.clone();
    for i in 0..n {
        if agg[i] != UNAGGREGATED || strong[i].is_empty() {
            continue;
        }
        let best = strong[i]
            .iter()
            .filter(|&&j| pass1[j] != UNAGGREGATED)
            .map(|&j| (a.get(i, j).abs(), j))
            .fold(None, |best: Option<(f64, usize)>, (w, j)| match best {
                Some((bw, _)) if bw >= w => best,
                _ => Some((w, j)),
            });
        if let Some((_, j)) = best {
            agg[i] = pass1[j];
        }
    }
    for i in 0..n {
        if agg[i] != UNAGGREGATED || strong[i].is_empty() {
            continue;
        }
        agg[i] = count;
        for &j in &strong[i] {
            if agg[j] == UNAGGREGATED {
                agg[j] = count;
            }
        }
        count += 1;
    }
    Aggregation {
        aggregate_of: agg,
        count,
    }
}

/// Piecewise-constant prolongation with unit-norm columns.
pub fn tentative_prolongation(agg: &Aggregation) -> SparseMatrix {
    let mut sizes = vec![0usize; agg.count];
    for &c in &agg.aggregate_of {
        if c != UNAGGREGATED {
            sizes[c] += 1;
        }
    }
    let n = agg.aggregate_of.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    row_ptr.push(0);
    for &c in &agg.aggregate_of {
        if c != UNAGGREGATED {
            col_idx.push(c);
            values.push(1.0 / (sizes[c] as f64).sqrt());
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix::from_csr(n, agg.count, row_ptr, col_idx, values).expect("tentative prolongation")
}

/// `P = (I − ω·D⁻¹·A)·P_tent`.
pub fn smooth_prolongation(
    a: &SparseMatrix,
    p_tent: &SparseMatrix,
    omega: f64,
) -> Result<SparseMatrix> {
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let ap = a.matmul(p_tent)?;
    let n = a.nrows();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(ap.nnz());
    let mut values = Vec::with_capacity(ap.nnz());
    row_ptr.push(0);
    for i in 0..n {
        let (tc, tv) = p_tent.row(i);
        let (ac, av) = ap.row(i);
        let w = -omega * inv_diag[i];
        let (mut p, mut q) = (0, 0);
        while p < tc.len() || q < ac.len() {
            let take_t = q >= ac.len() || (p < tc.len() && tc[p] <= ac[q]);
            let take_a = p >= tc.len() || (q < ac.len() && ac[q] <= tc[p]);
            let (col, v) = match (take_t, take_a) {
                (true, true) => {
                    let r = (tc[p], tv[p] + w * av[q]);
                    p += 1;
                    q += 1;
                    r
                }
                (true, false) => {
                    p += 1;
                    (tc[p - 1], tv[p - 1])
                }
                _ => {
                    q += 1;
                    (ac[q - 1], w * av[q - 1])
                }
            };
            if v != 0.0 {
                col_idx.push(col);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix::from_csr(n, p_tent.ncols(), row_ptr, col_idx, values)
}

/// Builds the multigrid hierarchy for `a`.
pub fn amg_setup(a: &SparseMatrix, cfg: &SolveConfig) -> Result<AmgHierarchy> {
    cfg.validate()?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut levels = Vec::new();
    let mut current = a.clone();
    loop {
        let n = current.nrows();
        if n <= cfg.coarse_cap || levels.len() + 1 >= cfg.max_levels {
            break;
        }
        let theta = cfg.strength_threshold * 0.5f64.powi(levels.len() as i32);
        let agg = aggregate(&current, theta);
        if agg.count == 0 || agg.count >= n {
            log::debug!(
                "aggregation stagnated at level {} ({} -> {})",
                levels.len(),
                n,
                agg.count
            );
            break;
        }
        let p_tent = tentative_prolongation(&agg);
        let p = smooth_prolongation(&current, &p_tent, cfg.jacobi_damping)?;
        let r = p.transpose();
        let coarse = r.matmul(&current.matmul(&p)?)?;
        let inv_diag = current
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        levels.push(AmgLevel {
            matrix: current,
            inv_diag,
            prolongation: p,
            restriction: r,
        });
        current = coarse;
    }
    let coarse = CoarseSolver::new(&current, cfg.jacobi_damping);
    Ok(AmgHierarchy {
        levels,
        coarse_matrix: current,
        coarse,
        pre_sweeps: cfg.pre_sweeps,
        post_sweeps: cfg.post_sweeps,
        damping: cfg.jacobi_damping,
    })
}

impl AmgHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.matrix.nrows())
            .chain(std::iter::once(self.coarse_matrix.nrows()))
            .collect()
    }

    pub fn level_nnz(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.matrix.nnz())
            .chain(std::iter::once(self.coarse_matrix.nnz()))
            .collect()
    }

    /// Σ nnz over levels divided by the fine-level nnz.
    pub fn operator_complexity(&self) -> f64 {
        let nnz = self.level_nnz();
        nnz.iter().sum::<usize>() as f64 / nnz[0].max(1) as f64
    }

    /// Estimated bytes held by all level operators, transfers and the
    /// coarse factorization.
    pub fn memory_bytes(&self) -> usize {
        let levels: usize = self
            .levels
            .iter()
            .map(|l| {
                l.matrix.memory_bytes()
                    + l.prolongation.memory_bytes()
                    + l.restriction.memory_bytes()
                    + l.inv_diag.len() * 8
            })
            .sum();
        levels + self.coarse_matrix.memory_bytes() + self.coarse.memory_bytes()
    }

    fn smooth(
        &self,
        level: &AmgLevel,
        b: &[f64],
        x: &mut [f64],
        r: &mut [f64],
        sweeps: usize,
        zero_start: bool,
    ) {
        let w: Vec<f64> = level.inv_diag.iter().map(|d| self.damping * d).collect();
        let mut first = zero_start;
        for _ in 0..sweeps {
            if first {
                // x = 0, so the residual is b
                diag_update(&w, b, x);
                first = false;
            } else {
                level.matrix.residual_into(b, x, r);
                diag_update(&w, r, x);
            }
        }
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        if l == self.levels.len() {
            return self.coarse.solve(b);
        }
        let level = &self.levels[l];
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = vec![0.0; n];
        self.smooth(level, b, &mut x, &mut r, self.pre_sweeps, true);
        level.matrix.residual_into(b, &x, &mut r);
        let rc = level.restriction.mul_vec(&r);
        let ec = self.cycle(l + 1, &rc);
        let e = level.prolongation.mul_vec(&ec);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        self.smooth(level, b, &mut x, &mut r, self.post_sweeps, false);
        x
    }

    /// One V(pre, post) cycle applied to `r` from a zero initial guess.
    pub fn v_cycle(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(0, r)
    }
}
