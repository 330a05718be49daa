//! Tree-cotree gauging: recovers an edge vector potential `â` with
//! `C·â = b̂̂` by fixing `â = 0` on a spanning tree and solving face
//! circulations for the cotree edges one at a time.

mod tree;

use std::collections::VecDeque;

use rayon::prelude::*;

pub use tree::{tree_registry, BfsTree, CombTree, SpanningTree, TreeBuilder, TreeFactory};

use crate::error::{Error, Result};
use crate::fit::{apply_curl, StaggeredGrid};
use crate::linsolve::kernels::norm2;

/// Default relative compatibility tolerance, shared with divergence cleaning.
pub const DEFAULT_GAUGE_TOL: f64 = 1e-10;

/// Edge-to-face incidence in compressed form.
struct EdgeFaces {
    ptr: Vec<u32>,
    faces: Vec<u32>,
}

impl EdgeFaces {
    fn new(grid: &StaggeredGrid) -> Self {
        let ne = grid.num_edges();
        let mut count = vec![0u32; ne + 1];
        for f in 0..grid.num_faces() {
            for (e, _) in grid.face_edges(f) {
                count[e + 1] += 1;
            }
        }
        for e in 0..ne {
            count[e + 1] += count[e];
        }
        let ptr = count.clone();
        let mut next = count;
        let mut faces = vec![0u32; ptr[ne] as usize];
        for f in 0..grid.num_faces() {
            for (e, _) in grid.face_edges(f) {
                faces[next[e] as usize] = f as u32;
                next[e] += 1;
            }
        }
        Self { ptr, faces }
    }

    fn of(&self, e: usize) -> &[u32] {
        &self.faces[self.ptr[e] as usize..self.ptr[e + 1] as usize]
    }
}

/// Solves `C·â = b̂̂` by greedy face elimination over the cotree of `tree`.
///
/// Faces with exactly one undetermined edge are processed FIFO, seeded in
/// face-index order. Every face, including those never used for
/// elimination, must satisfy the circulation to `tol·‖b̂̂‖₂` overall.
pub fn gauge_vector_potential(
    fluxes: &[f64],
    grid: &StaggeredGrid,
    tree: &SpanningTree,
    tol: f64,
) -> Result<Vec<f64>> {
    if fluxes.len() != grid.num_faces() {
        return Err(Error::DimensionMismatch(format!(
            "{} fluxes for {} faces",
            fluxes.len(),
            grid.num_faces()
        )));
    }
    if tree.in_tree.len() != grid.num_edges() {
        return Err(Error::DimensionMismatch(
            "spanning tree does not match grid".into(),
        ));
    }
    let nf = grid.num_faces();
    let incidence = EdgeFaces::new(grid);
    let mut known = tree.in_tree.clone();
    let mut a = vec![0.0; grid.num_edges()];
    let mut open: Vec<u8> = (0..nf)
        .map(|f| {
            grid.face_edges(f)
                .iter()
                .filter(|(e, _)| !known[*e])
                .count() as u8
        })
        .collect();
    let mut queue: VecDeque<u32> = (0..nf)
        .filter(|&f| open[f] == 1)
        .map(|f| f as u32)
        .collect();
    let mut remaining = known.iter().filter(|&&k| !k).count();

    while let Some(f) = queue.pop_front() {
        let f = f as usize;
        if open[f] != 1 {
            continue;
        }
        let edges = grid.face_edges(f);
        let mut sum = fluxes[f];
        let mut target = None;
        for &(e, s) in &edges {
            if known[e] {
                sum -= s * a[e];
            } else {
                target = Some((e, s));
            }
        }
        let (e, s) = target.expect("face has one open edge");
        a[e] = sum / s;
        known[e] = true;
        remaining -= 1;
        for &g in incidence.of(e) {
            let g = g as usize;
            open[g] -= 1;
            if open[g] == 1 {
                queue.push_back(g as u32);
            }
        }
    }
    if remaining > 0 {
        return Err(Error::GaugingStall {
            undetermined: remaining,
        });
    }

    let ca = apply_curl(grid, &a)?;
    let resid: Vec<f64> = ca
        .par_iter()
        .zip(fluxes.par_iter())
        .map(|(p, q)| p - q)
        .collect();
    let rnorm = norm2(&resid);
    let bnorm = norm2(fluxes);
    if rnorm > tol * bnorm {
        let worst_face = resid
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(wi, wv), (i, v)| {
                if v.abs() > wv {
                    (i, v.abs())
                } else {
                    (wi, wv)
                }
            })
            .0;
        return Err(Error::IncompatibleFlux {
            worst_face,
            residual: if bnorm > 0.0 {
                rnorm / bnorm
            } else {
                f64::INFINITY
            },
            tol,
        });
    }
    Ok(a)
}
