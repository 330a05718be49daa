//! Finite Integration Technique: grid index spaces, incidence operators,
//! conductance matrix and the reduced Poisson system.

mod grid;
pub mod matrix_market;
mod operators;
mod poisson;
mod sparse;

pub use grid::StaggeredGrid;
pub use operators::{
    apply_curl, apply_divergence, apply_divergence_transpose, apply_gradient, build_curl,
    build_divergence, build_gradient, build_mkappa, edge_conductances,
};
pub use poisson::{
    assemble_poisson, assemble_poisson_with, assembly_registry, build_dof_map,
    full_laplacian_triple_product, poisson_rhs_full, AssemblyFactory, DofMap, PoissonSystem,
};
pub use sparse::SparseMatrix;
