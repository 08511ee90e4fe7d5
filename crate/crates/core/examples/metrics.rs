//! Scores simple meshes against each other with volumetric IoU, Chamfer-L1
//! and normal consistency.

use doccnet::geometry::primitives::{box_mesh, icosphere};
use doccnet::geometry::Point3;
use doccnet::metrics::{chamfer_l1, normal_consistency, volumetric_iou, MeshSolid};

fn main() -> doccnet::Result<()> {
    let ball = icosphere(Point3::ZERO, 0.4, 4);
    let cases = [
        ("same sphere", icosphere(Point3::ZERO, 0.4, 4)),
        ("larger sphere", icosphere(Point3::ZERO, 0.5, 4)),
        ("shifted sphere", icosphere(Point3::new(0.15, 0.0, 0.0), 0.4, 4)),
        ("coarse sphere", icosphere(Point3::ZERO, 0.4, 1)),
        ("cube", box_mesh(Point3::ZERO, Point3::new(0.33, 0.33, 0.33))),
    ];
    println!("{:<15} {:>7} {:>9} {:>7}", "vs sphere r=0.4", "iou", "chamfer", "nc");
    let reference = MeshSolid::new(&ball)?;
    for (name, mesh) in &cases {
        let iou = volumetric_iou(&reference, &MeshSolid::new(mesh)?, 100_000, 0)?;
        let cd = chamfer_l1(mesh, &ball, 10_000, 1)?;
        let nc = normal_consistency(mesh, &ball, 10_000, 1)?;
        println!("{name:<15} {iou:>7.4} {cd:>9.5} {nc:>7.4}");
    }
    Ok(())
}
