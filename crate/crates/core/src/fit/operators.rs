//! Incidence operators of the FIT grid and the conductance matrix.
//!
//! `G` (edges × nodes), `C` (faces × edges) and `S` (cells × faces) carry only
//! ±1 entries, so `C·G = 0` and `S·C = 0` hold exactly in floating point.
//! Matrix-free `apply_*` versions exist for the large vectors of a pipeline
//! run; they agree bit-for-bit with the assembled matrices.

use rayon::prelude::*;

use super::{SparseMatrix, StaggeredGrid};
use crate::error::{Error, Result};
use crate::voxel_model::VoxelModel;

fn csr_from_rows<const K: usize>(
    nrows: usize,
    ncols: usize,
    row: impl Fn(usize) -> [(usize, f64); K],
) -> SparseMatrix {
    let mut row_ptr = Vec::with_capacity(nrows + 1);
    let mut col_idx = Vec::with_capacity(nrows * K);
    let mut values = Vec::with_capacity(nrows * K);
    row_ptr.push(0);
    for r in 0..nrows {
        let mut entries = row(r);
        entries.sort_unstable_by_key(|e| e.0);
        for (c, v) in entries {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix::from_csr(nrows, ncols, row_ptr, col_idx, values)
        .expect("incidence rows are well formed")
}

/// Discrete gradient: one row per edge with −1 on the tail and +1 on the head.
pub fn build_gradient(grid: &StaggeredGrid) -> SparseMatrix {
    csr_from_rows(grid.num_edges(), grid.num_nodes(), |e| {
        let (t, h) = grid.edge_nodes(e);
        [(t, -1.0), (h, 1.0)]
    })
}

/// Discrete curl: one row per face, right-hand-rule orientation about the
/// +x/+y/+z face normal.
pub fn build_curl(grid: &StaggeredGrid) -> SparseMatrix {
    csr_from_rows(grid.num_faces(), grid.num_edges(), |f| grid.face_edges(f))
}

/// Discrete divergence: one row per cell, outward faces positive.
pub fn build_divergence(grid: &StaggeredGrid) -> SparseMatrix {
    csr_from_rows(grid.num_cells(), grid.num_faces(), |c| grid.cell_faces(c))
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what}: length {got}, expected {want}"
        )))
    }
}

/// `G·ψ` without assembling `G`.
pub fn apply_gradient(grid: &StaggeredGrid, psi: &[f64]) -> Result<Vec<f64>> {
    check_len("nodal vector", psi.len(), grid.num_nodes())?;
    Ok((0..grid.num_edges())
        .into_par_iter()
        .map(|e| {
            let (t, h) = grid.edge_nodes(e);
            psi[h] - psi[t]
        })
        .collect())
}

/// `C·a` without assembling `C`.
pub fn apply_curl(grid: &StaggeredGrid, a: &[f64]) -> Result<Vec<f64>> {
    check_len("edge vector", a.len(), grid.num_edges())?;
    Ok((0..grid.num_faces())
        .into_par_iter()
        .map(|f| {
            let [(e0, s0), (e1, s1), (e2, s2), (e3, s3)] = grid.face_edges(f);
            s0 * a[e0] + s1 * a[e1] + s2 * a[e2] + s3 * a[e3]
        })
        .collect())
}

/// `S·b` without assembling `S`.
pub fn apply_divergence(grid: &StaggeredGrid, b: &[f64]) -> Result<Vec<f64>> {
    check_len("face vector", b.len(), grid.num_faces())?;
    Ok((0..grid.num_cells())
        .into_par_iter()
        .map(|c| grid.cell_faces(c).iter().map(|&(f, s)| s * b[f]).sum())
        .collect())
}

/// `Sᵀ·φ` without assembling `S`.
pub fn apply_divergence_transpose(grid: &StaggeredGrid, phi: &[f64]) -> Result<Vec<f64>> {
    check_len("cell vector", phi.len(), grid.num_cells())?;
    let dims = grid.dims();
    Ok((0..grid.num_faces())
        .into_par_iter()
        .map(|f| {
            let (d, p) = grid.face_coords(f);
            let mut v = 0.0;
            // cell on the low side sees this face as its outward +d face
            if p[d] > 0 {
                let mut q = p;
                q[d] -= 1;
                v += phi[grid.cell(q[0], q[1], q[2])];
            }
            if p[d] < dims[d] {
                v -= phi[grid.cell(p[0], p[1], p[2])];
            }
            v
        })
        .collect())
}

/// Edge conductances `κ̄_e·Ã_e/L_e` in siemens, where `κ̄_e` is the sum of
/// the conductivities of the voxels sharing edge `e` divided by 4.
pub fn edge_conductances(model: &VoxelModel, grid: &StaggeredGrid, f: f64) -> Result<Vec<f64>> {
    if model.dims() != grid.dims() {
        return Err(Error::DimensionMismatch(format!(
            "model dims {:?} vs grid dims {:?}",
            model.dims(),
            grid.dims()
        )));
    }
    let kappa = model.kappa_field(f)?;
    let geom = [0, 1, 2].map(|d| grid.dual_area(d) / grid.edge_length(d));
    Ok((0..grid.num_edges())
        .into_par_iter()
        .map(|e| {
            let (d, _) = grid.edge_coords(e);
            let sum: f64 = grid.edge_cells(e).map(|c| kappa[c]).sum();
            0.25 * sum * geom[d]
        })
        .collect())
}

/// Diagonal conductance matrix `Mκ` (edges × edges).
pub fn build_mkappa(model: &VoxelModel, grid: &StaggeredGrid, f: f64) -> Result<SparseMatrix> {
    Ok(SparseMatrix::from_diagonal(&edge_conductances(
        model, grid, f,
    )?))
}
