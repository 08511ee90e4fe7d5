//! Extracts analytic shapes with multiresolution refinement and with a dense
//! grid, and compares the meshes and the number of field evaluations.
//!
//! Usage: cargo run --release --example extract_mise -- [out_dir]

use std::path::PathBuf;

use doccnet::dataset::{make_smooth_field, Primitive, ShapeSpec};
use doccnet::extraction::{evaluate_grid, marching_cubes, mise_extract, CountingField, MiseConfig};
use doccnet::geometry::io::write_obj;

fn main() -> doccnet::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let cfg = MiseConfig::default();
    let shapes = [
        ("sphere", Primitive::Sphere { radius: 0.4 }),
        ("box", Primitive::Box { half_extents: [0.3, 0.25, 0.2] }),
        ("torus", Primitive::Torus { major_radius: 0.3, minor_radius: 0.1 }),
    ];
    for (name, prim) in shapes {
        let spec = ShapeSpec::primitive(prim);
        let field = CountingField::new(make_smooth_field(&spec)?);
        let mesh = marching_cubes(&mise_extract(&field, &cfg)?, cfg.tau)?;
        let refined = field.count();

        let field = CountingField::new(make_smooth_field(&spec)?);
        let dense = marching_cubes(&evaluate_grid(&field, cfg.final_cells() + 1)?, cfg.tau)?;
        println!(
            "{name:<7} {:>6} triangles  volume {:.5}  euler {}  evaluations {} vs {} dense ({:.1}%)  identical {}",
            mesh.triangles().len(),
            mesh.volume(),
            mesh.euler_characteristic(),
            refined,
            field.count(),
            100.0 * refined as f64 / field.count() as f64,
            mesh == dense
        );
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{name}.obj")), write_obj(&mesh))?;
        }
    }
    Ok(())
}
