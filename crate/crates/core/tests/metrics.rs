mod common;

use common::checks;
use doccnet::geometry::primitives::icosphere;
use doccnet::geometry::{Point3, PointCloud};
use doccnet::metrics::{chamfer_clouds, normal_consistency_clouds, volumetric_iou, MeshSolid};
use proptest::prelude::*;

#[test]
fn metric_identities_hold() {
    let r = checks::metric_identities(21);
    assert!(r.passed(), "{r:?}");
}

#[test]
fn iou_is_symmetric_and_shrinks_with_distance() {
    let a = MeshSolid::new(&icosphere(Point3::ZERO, 0.3, 3)).unwrap();
    let mut last = 1.0;
    for shift in [0.05, 0.15, 0.3] {
        let b = MeshSolid::new(&icosphere(Point3::new(shift, 0.0, 0.0), 0.3, 3)).unwrap();
        let ab = volumetric_iou(&a, &b, 20_000, 4).unwrap();
        let ba = volumetric_iou(&b, &a, 20_000, 4).unwrap();
        assert!((ab - ba).abs() < 0.02);
        assert!(ab < last);
        last = ab;
    }
}

fn cloud(coords: &[f64]) -> PointCloud {
    PointCloud::new(coords.chunks(3).map(|c| Point3::new(c[0], c[1], c[2])).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chamfer_is_symmetric_nonnegative_and_zero_on_self(
        a in prop::collection::vec(-1.0f64..1.0, 3..60),
        b in prop::collection::vec(-1.0f64..1.0, 3..60),
    ) {
        let (p, q) = (cloud(&a[..a.len() / 3 * 3]), cloud(&b[..b.len() / 3 * 3]));
        let pq = chamfer_clouds(&p, &q).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - chamfer_clouds(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert_eq!(chamfer_clouds(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn translation_adds_at_most_its_length(
        a in prop::collection::vec(-1.0f64..1.0, 30),
        d in prop::array::uniform3(-0.2f64..0.2),
    ) {
        let p = cloud(&a);
        let shift = Point3::from_array(d);
        let q = PointCloud::new(p.points().iter().map(|&x| x + shift).collect()).unwrap();
        prop_assert!(chamfer_clouds(&p, &q).unwrap() <= shift.norm() + 1e-12);
    }

    #[test]
    fn normal_consistency_is_bounded(
        n in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let normals: Vec<Point3> = n
            .chunks(3)
            .map(|c| Point3::new(c[0], c[1], c[2]).normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0)))
            .collect();
        let p = PointCloud::with_normals(pts.clone(), normals).unwrap();
        let q = PointCloud::with_normals(pts, vec![Point3::new(0.0, 0.0, 1.0); 10]).unwrap();
        let nc = normal_consistency_clouds(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&nc));
    }
}
