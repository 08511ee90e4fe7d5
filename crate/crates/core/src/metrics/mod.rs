//! Volumetric IoU, Chamfer-L1 and normal consistency.

mod inside;

pub use inside::{FieldSolid, MeshSolid, Solid};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, SpatialIndex, TriangleMesh};

pub const DEFAULT_IOU_SAMPLES: usize = 100_000;
pub const MIN_IOU_SAMPLES: usize = 10_000;
pub const DEFAULT_SURFACE_POINTS: usize = 10_000;

/// Monte-Carlo intersection over union of two solids, sampled uniformly in
/// the union of their bounding boxes. Two empty solids score 1.
pub fn volumetric_iou(a: &dyn Solid, b: &dyn Solid, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < MIN_IOU_SAMPLES {
        return Err(Error::invalid(format!("IoU needs at least {MIN_IOU_SAMPLES} samples")));
    }
    let bounds = match (a.bounds(), b.bounds()) {
        (Some(x), Some(y)) => x.union(&y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => return Ok(1.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = bounds.extent();
    let points: Vec<Point3> = (0..n_samples)
        .map(|_| {
            bounds.min + Point3::new(rng.gen::<f64>() * e.x, rng.gen::<f64>() * e.y, rng.gen::<f64>() * e.z)
        })
        .collect();
    let (ia, ib) = (a.contains(&points), b.contains(&points));
    let inter = ia.iter().zip(&ib).filter(|(x, y)| **x && **y).count();
    let union = ia.iter().zip(&ib).filter(|(x, y)| **x || **y).count();
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

fn nearest_all(from: &[Point3], to: &SpatialIndex) -> Vec<(usize, f64)> {
    from.iter()
        .map(|&p| {
            let n = to.nearest(p);
            (n.index, n.distance)
        })
        .collect()
}

/// Symmetric mean nearest-neighbour distance between two clouds.
pub fn chamfer_clouds(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    let ip = SpatialIndex::new(p.points().to_vec())?;
    let iq = SpatialIndex::new(q.points().to_vec())?;
    let mean = |v: Vec<(usize, f64)>| v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
    Ok(0.5 * mean(nearest_all(p.points(), &iq)) + 0.5 * mean(nearest_all(q.points(), &ip)))
}

/// Symmetric mean absolute cosine between normals at nearest-neighbour
/// correspondences. Both clouds need normals.
pub fn normal_consistency_clouds(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    let (np, nq) = match (p.normals(), q.normals()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("normal consistency needs clouds with normals")),
    };
    let ip = SpatialIndex::new(p.points().to_vec())?;
    let iq = SpatialIndex::new(q.points().to_vec())?;
    let side = |from: &[Point3], from_n: &[Point3], to: &SpatialIndex, to_n: &[Point3]| {
        let hits = nearest_all(from, to);
        hits.iter().zip(from_n).map(|((j, _), n)| n.dot(to_n[*j]).abs().min(1.0)).sum::<f64>() / hits.len() as f64
    };
    Ok(0.5 * side(p.points(), np, &iq, nq) + 0.5 * side(q.points(), nq, &ip, np))
}

fn sample(mesh: &TriangleMesh, n: usize, seed: u64, what: &str) -> Result<PointCloud> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh(format!("{what} mesh has no triangles")));
    }
    mesh.sample_surface(n, seed)
}

/// Chamfer-L1 with both surfaces sampled from the same seed.
pub fn chamfer_l1(pred: &TriangleMesh, gt: &TriangleMesh, n_points: usize, seed: u64) -> Result<f64> {
    chamfer_l1_seeded(pred, gt, n_points, seed, seed)
}

pub fn chamfer_l1_seeded(
    pred: &TriangleMesh,
    gt: &TriangleMesh,
    n_points: usize,
    seed_pred: u64,
    seed_gt: u64,
) -> Result<f64> {
    chamfer_clouds(
        &sample(pred, n_points, seed_pred, "predicted")?,
        &sample(gt, n_points, seed_gt, "ground-truth")?,
    )
}

/// Normal consistency with both surfaces sampled from the same seed.
pub fn normal_consistency(pred: &TriangleMesh, gt: &TriangleMesh, n_points: usize, seed: u64) -> Result<f64> {
    normal_consistency_seeded(pred, gt, n_points, seed, seed)
}

pub fn normal_consistency_seeded(
    pred: &TriangleMesh,
    gt: &TriangleMesh,
    n_points: usize,
    seed_pred: u64,
    seed_gt: u64,
) -> Result<f64> {
    normal_consistency_clouds(
        &sample(pred, n_points, seed_pred, "predicted")?,
        &sample(gt, n_points, seed_gt, "ground-truth")?,
    )
}

/// The three scores plus what was needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou: f64,
    pub chamfer_l1: f64,
    pub normal_consistency: f64,
    pub n_samples: usize,
    pub n_points: usize,
    pub seed: u64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{box_mesh, icosphere};

    fn origin() -> Point3 {
        Point3::new(0.0, 0.0, 0.0)
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = MeshSolid::new(&icosphere(Point3::new(-0.3, 0.0, 0.0), 0.2, 2)).unwrap();
        let b = MeshSolid::new(&icosphere(Point3::new(0.3, 0.0, 0.0), 0.2, 2)).unwrap();
        assert_eq!(volumetric_iou(&a, &a, 20_000, 1).unwrap(), 1.0);
        assert_eq!(volumetric_iou(&a, &b, 20_000, 1).unwrap(), 0.0);
        assert!(volumetric_iou(&a, &b, 100, 1).is_err());
    }

    #[test]
    fn iou_offset_cubes() {
        let half = Point3::new(0.5, 0.5, 0.5);
        let a = MeshSolid::new(&box_mesh(half, half)).unwrap();
        let b = MeshSolid::new(&box_mesh(half + Point3::new(0.5, 0.0, 0.0), half)).unwrap();
        let iou = volumetric_iou(&a, &b, 100_000, 7).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.01, "{iou}");
    }

    #[test]
    fn chamfer_single_points_and_identity() {
        let p = PointCloud::new(vec![origin()]).unwrap();
        let q = PointCloud::new(vec![Point3::new(0.3, 0.4, 0.0)]).unwrap();
        assert!((chamfer_clouds(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        let m = icosphere(origin(), 0.4, 2);
        assert_eq!(chamfer_l1(&m, &m, 2000, 3).unwrap(), 0.0);
    }

    #[test]
    fn concentric_spheres() {
        let a = icosphere(origin(), 0.4, 4);
        let b = icosphere(origin(), 0.5, 4);
        let cd = chamfer_l1(&a, &b, 10_000, 2).unwrap();
        assert!((cd - 0.1).abs() < 0.005, "{cd}");
    }

    #[test]
    fn normal_consistency_identity_and_planes() {
        let m = icosphere(origin(), 0.4, 2);
        assert!(normal_consistency(&m, &m, 2000, 5).unwrap() >= 1.0 - 1e-9);
        let plane = crate::geometry::primitives::unit_square();
        let lifted = plane.transformed(1.0, Point3::new(0.0, 0.0, 1e-3));
        assert!((normal_consistency(&plane, &lifted, 2000, 5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let empty = TriangleMesh::new(vec![], vec![]).unwrap();
        let m = icosphere(origin(), 0.4, 1);
        assert!(matches!(chamfer_l1(&empty, &m, 10, 0), Err(Error::EmptyMesh(_))));
        assert!(normal_consistency(&m, &empty, 10, 0).is_err());
    }

    #[test]
    fn report_json() {
        let r = MetricsReport {
            iou: 0.5,
            chamfer_l1: 0.01,
            normal_consistency: 0.9,
            n_samples: 100_000,
            n_points: 10_000,
            seed: 4,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["iou", "chamfer_l1", "normal_consistency", "n_samples", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
