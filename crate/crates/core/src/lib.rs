//! Implicit-occupancy 3D reconstruction from scratch.
//!
//! The crate covers the full cross-domain chain: a silhouette encoder and an
//! occupancy decoder turn a 2D image into a mesh, the mesh is resampled into a
//! fixed-size point cloud, and a point-cloud encoder with a second decoder
//! produces the final mesh. Surfaces are pulled out of occupancy fields with
//! multiresolution refinement plus marching cubes, and results are scored with
//! volumetric IoU, Chamfer-L1 and normal consistency.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod extraction;
pub mod fsutil;
pub mod geometry;
pub mod models;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod pointcloud_conv;

pub use error::{Error, Result};
