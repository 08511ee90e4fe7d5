//! Points, meshes, point clouds, nearest-neighbour search and file I/O.

mod cloud;
pub mod io;
mod kdtree;
mod mesh;
mod point;
pub mod primitives;

pub use cloud::PointCloud;
pub use kdtree::{brute_force_nearest, Neighbor, SpatialIndex};
pub use mesh::{point_triangle_distance, EdgeCensus, TriangleMesh};
pub use point::{world_bounds, Aabb, Point3, WORLD_HALF_EXTENT};
