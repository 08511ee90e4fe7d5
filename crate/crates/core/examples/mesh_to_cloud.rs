//! Turns a mesh into a fixed-size, evenly spread point cloud by dense surface
//! sampling followed by farthest-point selection.
//!
//! Usage: cargo run --release --example mesh_to_cloud -- [mesh.obj|mesh.off] [n]

use std::path::Path;

use doccnet::geometry::io::{load_mesh, write_xyz};
use doccnet::geometry::primitives::icosphere;
use doccnet::geometry::Point3;
use doccnet::pointcloud_conv::{mesh_to_pointcloud, DEFAULT_CLOUD_POINTS};

fn main() -> doccnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mesh = match args.first() {
        Some(p) => load_mesh(Path::new(p))?,
        None => icosphere(Point3::ZERO, 0.4, 3),
    };
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_CLOUD_POINTS);
    let cloud = mesh_to_pointcloud(&mesh, n, 0)?;

    // spacing: distance from each point to its nearest neighbour
    let pts = cloud.points();
    let gaps: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let off = pts.iter().map(|&p| mesh.distance_to_surface(p)).fold(0.0, f64::max);
    eprintln!("{} points, nearest-neighbour gap min {min:.4} mean {mean:.4}, max distance to surface {off:.1e}", cloud.len());
    print!("{}", write_xyz(&cloud));
    Ok(())
}
