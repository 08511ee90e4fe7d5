use crate::error::{Error, Result};
use crate::extraction::OccupancyField;
use crate::geometry::{Aabb, Point3, TriangleMesh};

/// Something that can answer inside/outside queries.
pub trait Solid: Sync {
    /// Box containing every inside point, or `None` for an empty solid.
    fn bounds(&self) -> Option<Aabb>;

    fn contains(&self, points: &[Point3]) -> Vec<bool>;
}

/// Occupancy field thresholded at `tau`: inside means strictly above.
pub struct FieldSolid<F> {
    pub field: F,
    pub tau: f64,
}

impl<F: OccupancyField> Solid for FieldSolid<F> {
    fn bounds(&self) -> Option<Aabb> {
        Some(self.field.bounds())
    }

    fn contains(&self, points: &[Point3]) -> Vec<bool> {
        self.field.query(points).into_iter().map(|v| v > self.tau).collect()
    }
}

/// Small fixed offsets applied to the ray origins so rays avoid passing
/// exactly through mesh edges and vertices.
const JITTERS: [(f64, f64); 3] = [
    (1.234_567e-7, 2.718_281e-7),
    (-3.141_592e-7, 1.414_213e-7),
    (1.732_050e-7, -2.236_067e-7),
];

const BINS: usize = 64;

/// Closed mesh answering containment by ray parity along +x.
///
/// Each query casts three slightly jittered rays and takes the majority.
/// Triangles are bucketed on a yz grid so a ray only tests triangles whose
/// projection overlaps its bucket.
pub struct MeshSolid {
    tris: Vec<[Point3; 3]>,
    bounds: Option<Aabb>,
    lo: (f64, f64),
    cell: (f64, f64),
    bins: Vec<Vec<u32>>,
}

impl MeshSolid {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        let census = mesh.edge_census();
        if census.open_edges() > 0 {
            return Err(Error::NotWatertight {
                open_edges: census.open_edges(),
            });
        }
        let tris: Vec<[Point3; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| t.map(|i| mesh.vertices()[i as usize]))
            .collect();
        let bounds = Aabb::from_points(tris.iter().flatten());
        let (lo, cell) = match bounds {
            Some(b) => {
                let pad = 1e-6;
                let lo = (b.min.y - pad, b.min.z - pad);
                let cell = (
                    (b.max.y - b.min.y + 2.0 * pad) / BINS as f64,
                    (b.max.z - b.min.z + 2.0 * pad) / BINS as f64,
                );
                (lo, cell)
            }
            None => ((0.0, 0.0), (1.0, 1.0)),
        };
        let mut solid = Self {
            tris,
            bounds,
            lo,
            cell,
            bins: vec![Vec::new(); BINS * BINS],
        };
        for (t, tri) in solid.tris.iter().enumerate() {
            let (y0, y1) = min_max(tri.iter().map(|p| p.y));
            let (z0, z1) = min_max(tri.iter().map(|p| p.z));
            let (a0, b0) = solid.bin_of(y0, z0);
            let (a1, b1) = solid.bin_of(y1, z1);
            for a in a0..=a1 {
                for b in b0..=b1 {
                    solid.bins[a * BINS + b].push(t as u32);
                }
            }
        }
        Ok(solid)
    }

    fn bin_of(&self, y: f64, z: f64) -> (usize, usize) {
        let clampi = |v: f64| (v.floor().max(0.0) as usize).min(BINS - 1);
        (clampi((y - self.lo.0) / self.cell.0), clampi((z - self.lo.1) / self.cell.1))
    }

    fn crossings(&self, o: Point3) -> usize {
        let Some(b) = self.bounds else { return 0 };
        if o.y < b.min.y || o.y > b.max.y || o.z < b.min.z || o.z > b.max.z || o.x > b.max.x {
            return 0;
        }
        let (a, c) = self.bin_of(o.y, o.z);
        self.bins[a * BINS + c]
            .iter()
            .filter(|&&t| ray_hits(&self.tris[t as usize], o))
            .count()
    }

    pub fn contains_point(&self, p: Point3) -> bool {
        let votes = JITTERS
            .iter()
            .filter(|(dy, dz)| self.crossings(Point3::new(p.x, p.y + dy, p.z + dz)) % 2 == 1)
            .count();
        votes >= 2
    }
}

impl Solid for MeshSolid {
    fn bounds(&self) -> Option<Aabb> {
        self.bounds
    }

    fn contains(&self, points: &[Point3]) -> Vec<bool> {
        points.iter().map(|&p| self.contains_point(p)).collect()
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Whether the ray from `o` along +x crosses triangle `t`.
fn ray_hits(t: &[Point3; 3], o: Point3) -> bool {
    let [a, b, c] = *t;
    // Signed areas of the yz projection of the sub-triangles around o.
    let edge = |p: Point3, q: Point3| (q.y - p.y) * (o.z - p.z) - (q.z - p.z) * (o.y - p.y);
    let (w0, w1, w2) = (edge(b, c), edge(c, a), edge(a, b));
    let inside = (w0 > 0.0 && w1 > 0.0 && w2 > 0.0) || (w0 < 0.0 && w1 < 0.0 && w2 < 0.0);
    if !inside {
        return false;
    }
    let sum = w0 + w1 + w2;
    let x = (w0 * a.x + w1 * b.x + w2 * c.x) / sum;
    x > o.x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{box_mesh, icosphere};

    #[test]
    fn box_membership() {
        let m = MeshSolid::new(&box_mesh(Point3::new(0.0, 0.0, 0.0), Point3::new(0.5, 0.5, 0.5))).unwrap();
        assert!(m.contains_point(Point3::new(0.0, 0.0, 0.0)));
        assert!(m.contains_point(Point3::new(0.49, -0.49, 0.2)));
        // Points level with the face diagonal and with box edges.
        assert!(m.contains_point(Point3::new(0.1, 0.25, 0.25)));
        assert!(!m.contains_point(Point3::new(-0.6, 0.0, 0.0)));
        assert!(!m.contains_point(Point3::new(0.6, 0.0, 0.0)));
        assert!(!m.contains_point(Point3::new(0.0, 0.5 + 1e-3, 0.0)));
    }

    #[test]
    fn sphere_membership_matches_radius() {
        let m = MeshSolid::new(&icosphere(Point3::new(0.0, 0.0, 0.0), 0.4, 3)).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.61803;
            let dir = Point3::new(t.cos() * (1.3 * t).sin(), t.sin() * (1.3 * t).sin(), (1.3 * t).cos());
            assert!(m.contains_point(dir * 0.37));
            assert!(!m.contains_point(dir * 0.41));
        }
    }

    #[test]
    fn open_mesh_rejected() {
        let open = crate::geometry::primitives::unit_square();
        match MeshSolid::new(&open) {
            Err(Error::NotWatertight { open_edges }) => assert_eq!(open_edges, 4),
            other => panic!("expected NotWatertight, got {:?}", other.err()),
        }
    }
}
