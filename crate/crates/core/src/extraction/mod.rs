//! Occupancy fields, lattice evaluation, multiresolution refinement and
//! marching cubes.

mod field;
mod grid;
mod marching_cubes;
mod mise;
mod tables;

pub use field::{query_batched, ConstantField, CountingField, FnField, OccupancyField, QUERY_BATCH};
pub use grid::{evaluate_grid, evaluate_grid_threaded, OccupancyGrid};
pub use marching_cubes::{edge_parameter, marching_cubes};
pub use mise::{mise_extract, mise_extract_threaded, MiseConfig};

use crate::error::Result;
use crate::geometry::TriangleMesh;

/// Refines `field` with [`mise_extract`] and triangulates the result.
pub fn extract_mesh<F: OccupancyField + ?Sized>(field: &F, cfg: &MiseConfig) -> Result<TriangleMesh> {
    extract_mesh_threaded(field, cfg, 1)
}

pub fn extract_mesh_threaded<F: OccupancyField + ?Sized>(
    field: &F,
    cfg: &MiseConfig,
    threads: usize,
) -> Result<TriangleMesh> {
    let grid = mise_extract_threaded(field, cfg, threads)?;
    marching_cubes(&grid, cfg.tau)
}
