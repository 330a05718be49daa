use std::collections::VecDeque;

use super::VoxelModel;
use crate::error::Result;

/// Label of nodes that touch no conductive edge.
pub const NO_COMPONENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabels {
    /// One label per grid node (x-fastest over `(nx+1)(ny+1)(nz+1)` nodes).
    pub labels: Vec<u32>,
    pub count: usize,
}

impl ComponentLabels {
    pub fn labeled_nodes(&self) -> usize {
        self.labels.iter().filter(|&&l| l != NO_COMPONENT).count()
    }
}

/// Connected components of the conductive node graph.
///
/// An edge is conductive when any of the (up to four) voxels sharing it has
/// nonzero conductivity at `f`. Components are numbered in order of their
/// lowest node index, so component `c` starts at its smallest node.
pub fn conductive_component_labels(model: &VoxelModel, f: f64) -> Result<ComponentLabels> {
    let kappa = model.kappa_field(f)?;
    let [nx, ny, nz] = model.dims();
    let (px, py, pz) = (nx + 1, ny + 1, nz + 1);
    let conductive = |i: isize, j: isize, k: isize| -> bool {
        if i < 0 || j < 0 || k < 0 || i >= nx as isize || j >= ny as isize || k >= nz as isize {
            return false;
        }
        kappa[i as usize + nx * (j as usize + ny * k as usize)] > 0.0
    };
    // edge along axis `d` starting at node (i,j,k)
    let edge_conductive = |d: usize, i: usize, j: usize, k: usize| -> bool {
        let (i, j, k) = (i as isize, j as isize, k as isize);
        let (a, b): ([isize; 2], [isize; 2]) = match d {
            0 => ([j - 1, j], [k - 1, k]),
            1 => ([i - 1, i], [k - 1, k]),
            _ => ([i - 1, i], [j - 1, j]),
        };
        a.iter().any(|&u| {
            b.iter().any(|&v| match d {
                0 => conductive(i, u, v),
                1 => conductive(u, j, v),
                _ => conductive(u, v, k),
            })
        })
    };
    let node = |i: usize, j: usize, k: usize| i + px * (j + py * k);

    let mut labels = vec![NO_COMPONENT; px * py * pz];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if labels[start] != NO_COMPONENT {
            continue;
        }
        let (si, sj, sk) = (start % px, (start / px) % py, start / (px * py));
        // a node is conductive iff one of its eight surrounding voxels is
        let touches = (0..8).any(|c| {
            conductive(
                si as isize - (c & 1) as isize,
                sj as isize - ((c >> 1) & 1) as isize,
                sk as isize - ((c >> 2) & 1) as isize,
            )
        });
        if !touches {
            continue;
        }
        labels[start] = count;
        queue.push_back((si, sj, sk));
        while let Some((i, j, k)) = queue.pop_front() {
            let mut visit = |ni: usize, nj: usize, nk: usize, labels: &mut Vec<u32>| {
                let n = node(ni, nj, nk);
                if labels[n] == NO_COMPONENT {
                    labels[n] = count;
                    queue.push_back((ni, nj, nk));
                }
            };
            if i + 1 < px && edge_conductive(0, i, j, k) {
                visit(i + 1, j, k, &mut labels);
            }
            if i > 0 && edge_conductive(0, i - 1, j, k) {
                visit(i - 1, j, k, &mut labels);
            }
            if j + 1 < py && edge_conductive(1, i, j, k) {
                visit(i, j + 1, k, &mut labels);
            }
            if j > 0 && edge_conductive(1, i, j - 1, k) {
                visit(i, j - 1, k, &mut labels);
            }
            if k + 1 < pz && edge_conductive(2, i, j, k) {
                visit(i, j, k + 1, &mut labels);
            }
            if k > 0 && edge_conductive(2, i, j, k - 1) {
                visit(i, j, k - 1, &mut labels);
            }
        }
        count += 1;
    }
    Ok(ComponentLabels {
        labels,
        count: count as usize,
    })
}
