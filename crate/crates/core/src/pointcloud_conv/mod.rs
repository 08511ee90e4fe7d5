//! Mesh to fixed-size point cloud conversion.

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, TriangleMesh};

pub const DEFAULT_CLOUD_POINTS: usize = 300;

/// Surface samples drawn per output point before subsampling.
pub const OVERSAMPLE: usize = 10;

/// Indices chosen by greedy farthest-point sampling.
///
/// Starts from the point nearest the centroid, then repeatedly takes the
/// point whose distance to the chosen set is largest. Ties go to the lowest
/// index.
pub fn farthest_point_indices(cloud: &PointCloud, k: usize) -> Result<Vec<usize>> {
    let pts = cloud.points();
    if k == 0 || k > pts.len() {
        return Err(Error::invalid(format!(
            "cannot pick {k} points from a cloud of {}",
            pts.len()
        )));
    }
    let c = cloud.centroid();
    let mut first = 0;
    let mut best = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let d = p.distance_squared(c);
        if d < best {
            best = d;
            first = i;
        }
    }
    let mut chosen = Vec::with_capacity(k);
    let mut gap: Vec<f64> = pts.iter().map(|p| p.distance_squared(pts[first])).collect();
    let mut taken = vec![false; pts.len()];
    chosen.push(first);
    taken[first] = true;
    while chosen.len() < k {
        let mut next = usize::MAX;
        let mut far = -1.0;
        for (i, &g) in gap.iter().enumerate() {
            if !taken[i] && g > far {
                far = g;
                next = i;
            }
        }
        chosen.push(next);
        taken[next] = true;
        let q = pts[next];
        for (g, p) in gap.iter_mut().zip(pts) {
            *g = g.min(p.distance_squared(q));
        }
    }
    Ok(chosen)
}

/// Farthest-point subset of `cloud` with exactly `k` points, in selection order.
pub fn farthest_point_sample(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    cloud.select(&farthest_point_indices(cloud, k)?)
}

/// Samples `OVERSAMPLE * n` points on the surface and keeps `n` of them by
/// farthest-point sampling. Connectivity is discarded.
pub fn mesh_to_pointcloud(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("point count must be at least 1"));
    }
    let dense = mesh.sample_surface(n * OVERSAMPLE, seed)?;
    farthest_point_sample(&dense, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{primitives::icosphere, Point3};
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn min_pairwise(points: &[Point3]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min(points[i].distance(points[j]));
            }
        }
        best
    }

    #[test]
    fn full_selection_is_a_permutation() {
        let pts: Vec<Point3> = (0..20).map(|i| Point3::new(i as f64, (i * i % 7) as f64, 0.0)).collect();
        let cloud = PointCloud::new(pts).unwrap();
        let mut idx = farthest_point_indices(&cloud, 20).unwrap();
        idx.sort();
        assert_eq!(idx, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn square_picks_a_diagonal() {
        let square = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ])
        .unwrap();
        let out = farthest_point_sample(&square, 2).unwrap();
        // Brute force: the best pair maximises the distance, i.e. a diagonal.
        let pts = square.points();
        let mut best = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                best = best.max(pts[i].distance(pts[j]));
            }
        }
        assert_eq!(out.points()[0].distance(out.points()[1]), best);
    }

    #[test]
    fn rejects_oversized_request() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0)]).unwrap();
        assert!(farthest_point_sample(&cloud, 2).is_err());
        assert!(farthest_point_sample(&cloud, 0).is_err());
    }

    #[test]
    fn beats_random_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point3> = (0..1000)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let fps = min_pairwise(farthest_point_sample(&cloud, 100).unwrap().points());
        for _ in 0..50 {
            let subset: Vec<Point3> = pts.choose_multiple(&mut rng, 100).copied().collect();
            assert!(fps >= min_pairwise(&subset));
        }
    }

    #[test]
    fn sphere_cloud_on_surface() {
        let mesh = icosphere(Point3::new(0.0, 0.0, 0.0), 0.4, 3);
        let cloud = mesh_to_pointcloud(&mesh, 300, 7).unwrap();
        assert_eq!(cloud.len(), 300);
        for p in cloud.points() {
            assert!(mesh.distance_to_surface(*p) < 1e-9);
            // Facet sag of a level-3 icosphere is well under 1% of the radius.
            assert!((p.norm() - 0.4).abs() < 0.004);
        }
        assert_eq!(cloud, mesh_to_pointcloud(&mesh, 300, 7).unwrap());
    }
}
