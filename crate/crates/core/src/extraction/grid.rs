use super::field::{query_batched, OccupancyField};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};

/// Field samples on a regular lattice of `resolution` points per axis.
///
/// Lattice point `(i, j, k)` sits at `min + extent * (i, j, k) / (resolution - 1)`
/// and is stored at `(i * resolution + j) * resolution + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: usize,
    bounds: Aabb,
    values: Vec<f64>,
}

/// World position of lattice index `idx` on an axis split into `cells` cells.
pub(crate) fn lattice_coord(min: f64, extent: f64, cells: usize, idx: usize) -> f64 {
    min + extent * (idx as f64 / cells as f64)
}

pub(crate) fn lattice_point(bounds: &Aabb, cells: usize, i: usize, j: usize, k: usize) -> Point3 {
    let e = bounds.extent();
    Point3::new(
        lattice_coord(bounds.min.x, e.x, cells, i),
        lattice_coord(bounds.min.y, e.y, cells, j),
        lattice_coord(bounds.min.z, e.z, cells, k),
    )
}

impl OccupancyGrid {
    pub fn new(resolution: usize, bounds: Aabb, values: Vec<f64>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid("grid resolution must be at least 2"));
        }
        if values.len() != resolution.pow(3) {
            return Err(Error::invalid(format!(
                "grid of resolution {resolution} needs {} values, got {}",
                resolution.pow(3),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("grid value {v} outside [0, 1]")));
        }
        Ok(Self {
            resolution,
            bounds,
            values,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.resolution + j) * self.resolution + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Point3 {
        lattice_point(&self.bounds, self.resolution - 1, i, j, k)
    }

    /// Number of lattice values strictly above `tau`.
    pub fn occupied_count(&self, tau: f64) -> usize {
        self.values.iter().filter(|&&v| v > tau).count()
    }
}

/// Samples `field` at every lattice point of a `resolution^3` grid.
pub fn evaluate_grid<F: OccupancyField + ?Sized>(field: &F, resolution: usize) -> Result<OccupancyGrid> {
    evaluate_grid_threaded(field, resolution, 1)
}

pub fn evaluate_grid_threaded<F: OccupancyField + ?Sized>(
    field: &F,
    resolution: usize,
    threads: usize,
) -> Result<OccupancyGrid> {
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let bounds = field.bounds();
    let cells = resolution - 1;
    let mut points = Vec::with_capacity(resolution.pow(3));
    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                points.push(lattice_point(&bounds, cells, i, j, k));
            }
        }
    }
    let values = query_batched(field, &points, threads);
    OccupancyGrid::new(resolution, bounds, values)
}
