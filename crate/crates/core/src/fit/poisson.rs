//! Assembly of the reduced discrete Poisson system `Gᵀ·Mκ·G·Ψ = −Gᵀ·Mκ·â`.

use std::sync::OnceLock;

use super::operators::{build_gradient, edge_conductances};
use super::{SparseMatrix, StaggeredGrid};
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::voxel_model::{conductive_component_labels, VoxelModel, NO_COMPONENT};

/// Node numbering of the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Reduced index of each grid node, `None` for excluded or pinned nodes.
    pub dof_of_node: Vec<Option<usize>>,
    /// Grid node of each reduced index.
    pub node_of_dof: Vec<usize>,
    /// One pinned node (Ψ = 0) per conductive component, the lowest index.
    pub pinned_nodes: Vec<usize>,
    pub conductive_nodes: usize,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_of_dof.is_empty()
    }

    pub fn components(&self) -> usize {
        self.pinned_nodes.len()
    }

    /// Scatters a reduced vector to all grid nodes, zero elsewhere.
    pub fn expand(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "reduced vector length {} vs {} dofs",
                reduced.len(),
                self.len()
            )));
        }
        let mut full = vec![0.0; self.dof_of_node.len()];
        for (&n, &v) in self.node_of_dof.iter().zip(reduced) {
            full[n] = v;
        }
        Ok(full)
    }

    /// Gathers the reduced entries of a full nodal vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&n| full[n]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    /// Diagonal of `Mκ`, one conductance per edge.
    pub conductances: Vec<f64>,
}

impl PoissonSystem {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Builds the reduced Poisson matrix from the grid, the edge conductances and
/// the DOF map.
pub type AssemblyFactory = fn(&StaggeredGrid, &[f64], &DofMap) -> Result<SparseMatrix>;

pub fn assembly_registry() -> &'static Registry<AssemblyFactory> {
    static REGISTRY: OnceLock<Registry<AssemblyFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<AssemblyFactory>::new("assembly method")
            .with(
                "stencil",
                "direct 7-point stencil assembly",
                assemble_stencil,
            )
            .with(
                "triple-product",
                "sparse Gᵀ·(Mκ·G) product, then restriction",
                assemble_triple_product,
            )
    })
}

/// Node-to-DOF map: conductive nodes in index order, minus the lowest node
/// of each component.
pub fn build_dof_map(model: &VoxelModel, f: f64) -> Result<DofMap> {
    let labels = conductive_component_labels(model, f)?;
    let mut dof_of_node = vec![None; labels.labels.len()];
    let mut node_of_dof = Vec::new();
    let mut pinned_nodes = Vec::with_capacity(labels.count);
    let mut conductive_nodes = 0;
    for (n, &l) in labels.labels.iter().enumerate() {
        if l == NO_COMPONENT {
            continue;
        }
        conductive_nodes += 1;
        if l as usize == pinned_nodes.len() {
            // components are numbered in order of first appearance
            pinned_nodes.push(n);
            continue;
        }
        dof_of_node[n] = Some(node_of_dof.len());
        node_of_dof.push(n);
    }
    Ok(DofMap {
        dof_of_node,
        node_of_dof,
        pinned_nodes,
        conductive_nodes,
    })
}

fn assemble_stencil(grid: &StaggeredGrid, cond: &[f64], dofs: &DofMap) -> Result<SparseMatrix> {
    let [px, py, pz] = grid.node_dims();
    let n = dofs.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(7 * n);
    let mut values = Vec::with_capacity(7 * n);
    row_ptr.push(0);
    for &node in &dofs.node_of_dof {
        let [i, j, k] = grid.node_coords(node);
        // neighbors in increasing node order: -z, -y, -x, (self), +x, +y, +z
        let mut lower: [(usize, f64); 3] = [(usize::MAX, 0.0); 3];
        let mut upper: [(usize, f64); 3] = [(usize::MAX, 0.0); 3];
        if k > 0 {
            lower[0] = (grid.node(i, j, k - 1), cond[grid.edge(2, i, j, k - 1)]);
        }
        if j > 0 {
            lower[1] = (grid.node(i, j - 1, k), cond[grid.edge(1, i, j - 1, k)]);
        }
        if i > 0 {
            lower[2] = (grid.node(i - 1, j, k), cond[grid.edge(0, i - 1, j, k)]);
        }
        if i + 1 < px {
            upper[0] = (grid.node(i + 1, j, k), cond[grid.edge(0, i, j, k)]);
        }
        if j + 1 < py {
            upper[1] = (grid.node(i, j + 1, k), cond[grid.edge(1, i, j, k)]);
        }
        if k + 1 < pz {
            upper[2] = (grid.node(i, j, k + 1), cond[grid.edge(2, i, j, k)]);
        }
        let mut diag = 0.0;
        for &(_, c) in lower.iter().chain(upper.iter()) {
            diag += c;
        }
        let self_dof = dofs.dof_of_node[node].expect("dof node");
        let neighbors = lower
            .iter()
            .map(|&e| (e, false))
            .chain(std::iter::once(((node, diag), true)))
            .chain(upper.iter().map(|&e| (e, false)));
        for ((nb, c), is_self) in neighbors {
            if is_self {
                col_idx.push(self_dof);
                values.push(c);
            } else if nb != usize::MAX && c != 0.0 {
                if let Some(col) = dofs.dof_of_node[nb] {
                    col_idx.push(col);
                    values.push(-c);
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix::from_csr(n, n, row_ptr, col_idx, values)
}

/// Full (unreduced) nodal matrix `Gᵀ·Mκ·G` via sparse products.
pub fn full_laplacian_triple_product(grid: &StaggeredGrid, cond: &[f64]) -> Result<SparseMatrix> {
    let g = build_gradient(grid);
    let mg = g.scale_rows(cond);
    g.transpose().matmul(&mg)
}

fn assemble_triple_product(
    grid: &StaggeredGrid,
    cond: &[f64],
    dofs: &DofMap,
) -> Result<SparseMatrix> {
    Ok(full_laplacian_triple_product(grid, cond)?.restrict(&dofs.dof_of_node, dofs.len()))
}

/// `−Gᵀ·Mκ·â`, full nodal length.
pub fn poisson_rhs_full(grid: &StaggeredGrid, cond: &[f64], a: &[f64]) -> Vec<f64> {
    let mut rhs = vec![0.0; grid.num_nodes()];
    for e in 0..grid.num_edges() {
        let q = cond[e] * a[e];
        if q != 0.0 {
            let (t, h) = grid.edge_nodes(e);
            rhs[h] -= q;
            rhs[t] += q;
        }
    }
    rhs
}

/// Assembles the reduced Poisson system with the default stencil path.
pub fn assemble_poisson(
    model: &VoxelModel,
    grid: &StaggeredGrid,
    a: &[f64],
    f: f64,
) -> Result<PoissonSystem> {
    assemble_poisson_with(model, grid, a, f, "stencil")
}

/// Assembles the reduced Poisson system using the registered `method`.
pub fn assemble_poisson_with(
    model: &VoxelModel,
    grid: &StaggeredGrid,
    a: &[f64],
    f: f64,
    method: &str,
) -> Result<PoissonSystem> {
    if a.len() != grid.num_edges() {
        return Err(Error::DimensionMismatch(format!(
            "vector potential has {} entries for {} edges",
            a.len(),
            grid.num_edges()
        )));
    }
    let factory = assembly_registry().get(method)?;
    let conductances = edge_conductances(model, grid, f)?;
    let dofs = build_dof_map(model, f)?;
    if dofs.conductive_nodes == 0 {
        return Err(Error::EmptySystem);
    }
    let matrix = factory(grid, &conductances, &dofs)?;
    let rhs = dofs.restrict(&poisson_rhs_full(grid, &conductances, a));
    Ok(PoissonSystem {
        matrix,
        rhs,
        dofs,
        conductances,
    })
}
