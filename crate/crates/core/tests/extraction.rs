mod common;

use common::checks;
use doccnet::dataset::{make_smooth_field, Primitive, ShapeSpec};
use doccnet::extraction::{edge_parameter, evaluate_grid, marching_cubes, mise_extract, MiseConfig};
use doccnet::geometry::Point3;
use proptest::prelude::*;

fn assert_mise_matches(spec: ShapeSpec) {
    let r = checks::mise_vs_dense(&spec);
    assert!(r.passed(), "{r:?}");
}

#[test]
fn mise_matches_dense_sphere() {
    assert_mise_matches(checks::sphere_spec());
}

#[test]
fn mise_matches_dense_box() {
    assert_mise_matches(checks::box_spec());
}

#[test]
fn mise_matches_dense_torus() {
    assert_mise_matches(checks::torus_spec());
}

#[test]
fn sphere_at_64_is_watertight_with_accurate_volume() {
    let r = checks::mc_sphere(64);
    assert!(r.watertight);
    assert!(r.volume > 0.0);
    assert!(r.volume_error <= 0.02, "{r:?}");
    assert!(r.interpolation_residual <= 1e-12, "{r:?}");
}

#[test]
fn box_surface_is_a_topological_sphere() {
    let field = make_smooth_field(&checks::box_spec()).unwrap();
    let mesh = marching_cubes(&evaluate_grid(&field, 65).unwrap(), 0.5).unwrap();
    assert!(mesh.is_watertight());
    assert_eq!(mesh.euler_characteristic(), 2);
}

#[test]
fn torus_surface_has_genus_one() {
    let field = make_smooth_field(&checks::torus_spec()).unwrap();
    let mesh = marching_cubes(&evaluate_grid(&field, 65).unwrap(), 0.5).unwrap();
    assert!(mesh.is_watertight());
    assert_eq!(mesh.euler_characteristic(), 0);
}

#[test]
fn occupied_grid_fraction_tracks_sphere_volume() {
    let grid = evaluate_grid(&checks::smooth_sphere_field(), 97).unwrap();
    let fraction = grid.occupied_count(0.5) as f64 / grid.values().len() as f64;
    let want = checks::SPHERE_VOLUME / grid.bounds().volume();
    assert!((fraction - want).abs() / want < 0.05, "{fraction} vs {want}");
}

#[test]
fn raising_the_threshold_shrinks_the_surface() {
    let grid = evaluate_grid(&checks::smooth_sphere_field(), 48).unwrap();
    let taus = [0.1, 0.3, 0.5, 0.7, 0.9];
    let volumes: Vec<f64> = taus.iter().map(|&t| marching_cubes(&grid, t).unwrap().volume()).collect();
    let counts: Vec<usize> = taus.iter().map(|&t| grid.occupied_count(t)).collect();
    for w in volumes.windows(2) {
        assert!(w[0] > w[1], "{volumes:?}");
    }
    for w in counts.windows(2) {
        assert!(w[0] >= w[1], "{counts:?}");
    }
}

#[test]
fn mise_reports_fewer_evaluations_at_default_settings() {
    let field = doccnet::extraction::CountingField::new(checks::smooth_sphere_field());
    let cfg = MiseConfig::default();
    mise_extract(&field, &cfg).unwrap();
    assert!(field.count() < (cfg.final_cells() + 1).pow(3) / 4, "{}", field.count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn edge_parameter_lands_on_the_crossing(va in 0.0f64..1.0, vb in 0.0f64..1.0, tau in 0.01f64..0.99) {
        prop_assume!((va > tau) != (vb > tau));
        let t = edge_parameter(va, vb, tau);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((va + t * (vb - va) - tau).abs() <= 1e-12);
    }

    #[test]
    fn random_spheres_extract_closed_outward_meshes(
        r in 0.12f64..0.4,
        cx in -0.1f64..0.1,
        cy in -0.1f64..0.1,
        cz in -0.1f64..0.1,
    ) {
        let mut spec = ShapeSpec::primitive(Primitive::Sphere { radius: r });
        spec.translation = [cx, cy, cz];
        let field = make_smooth_field(&spec).unwrap();
        let grid = evaluate_grid(&field, 40).unwrap();
        let mesh = marching_cubes(&grid, 0.5).unwrap();
        prop_assert!(mesh.is_watertight());
        let exact = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        prop_assert!(mesh.volume() > 0.0);
        prop_assert!((mesh.volume() - exact).abs() / exact < 0.1);
        let c = Point3::new(cx, cy, cz);
        for v in mesh.vertices() {
            prop_assert!((v.distance(c) - r).abs() < 0.03);
        }
    }
}
