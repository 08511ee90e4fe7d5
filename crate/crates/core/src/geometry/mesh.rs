use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aabb, Point3, PointCloud};
use crate::error::{Error, Result};

/// Indexed triangle mesh.
///
/// Construction validates indices and drops triangles whose area is exactly
/// zero, so every stored triangle has a well-defined normal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    normals: Option<Vec<Point3>>,
}

/// Result of counting how many triangles use each undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCensus {
    pub edges: usize,
    /// Edges used by exactly one triangle.
    pub boundary: usize,
    /// Edges used by three or more triangles.
    pub non_manifold: usize,
}

impl EdgeCensus {
    pub fn open_edges(&self) -> usize {
        self.boundary + self.non_manifold
    }

    pub fn is_watertight(&self) -> bool {
        self.open_edges() == 0
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(p) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {p} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad} but mesh has {n} vertices"
                )));
            }
        }
        let triangles = triangles
            .into_iter()
            .filter(|tri| {
                let [a, b, c] = tri.map(|i| vertices[i as usize]);
                (b - a).cross(c - a).norm_squared() > 0.0
            })
            .collect();
        Ok(Self {
            vertices,
            triangles,
            normals: None,
        })
    }

    /// Attaches per-vertex normals; each must be unit length within 1e-6.
    pub fn with_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidMesh(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_points(&self, t: usize) -> [Point3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Non-normalized face normal (length = twice the area).
    pub fn face_cross(&self, t: usize) -> Point3 {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(c - a)
    }

    pub fn face_normal(&self, t: usize) -> Point3 {
        self.face_cross(t)
            .normalized()
            .expect("constructed triangles have positive area")
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Per-vertex normals as the area-weighted mean of incident face normals.
    ///
    /// Returns the mesh with normals and the number of isolated vertices, which
    /// receive `+z`.
    pub fn compute_vertex_normals(&self) -> (TriangleMesh, usize) {
        let mut acc = vec![Point3::ZERO; self.vertices.len()];
        for t in 0..self.triangles.len() {
            // cross product length is 2*area, so this is area weighting
            let n = self.face_cross(t);
            for &i in &self.triangles[t] {
                acc[i as usize] += n;
            }
        }
        let mut isolated = 0;
        let normals = acc
            .into_iter()
            .map(|n| {
                n.normalized().unwrap_or_else(|| {
                    isolated += 1;
                    Point3::new(0.0, 0.0, 1.0)
                })
            })
            .collect();
        if isolated > 0 {
            log::warn!("{isolated} vertices have no incident triangle; normal set to +z");
        }
        let mesh = TriangleMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            normals: Some(normals),
        };
        (mesh, isolated)
    }

    /// Signed volume from the divergence theorem; positive for outward-facing
    /// triangles.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i as usize]);
                a.dot(b.cross(c))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Same geometry with every triangle's winding reversed.
    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|&n| -n).collect()),
        }
    }

    /// Applies `p -> p * scale + offset` to every vertex.
    pub fn transformed(&self, scale: f64, offset: Point3) -> TriangleMesh {
        assert!(scale > 0.0, "scale must be positive");
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| v * scale + offset).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
        }
    }

    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Result<TriangleMesh> {
        TriangleMesh::new(
            self.vertices.iter().map(|&v| f(v)).collect(),
            self.triangles.clone(),
        )
    }

    pub fn edge_census(&self) -> EdgeCensus {
        let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *counts.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        let mut census = EdgeCensus {
            edges: counts.len(),
            boundary: 0,
            non_manifold: 0,
        };
        for &c in counts.values() {
            match c {
                1 => census.boundary += 1,
                2 => {}
                _ => census.non_manifold += 1,
            }
        }
        census
    }

    pub fn is_watertight(&self) -> bool {
        self.edge_census().is_watertight()
    }

    /// V - E + F over the vertices referenced by at least one triangle.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &i in tri {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_census().edges as i64 + self.triangles.len() as i64
    }

    /// `n` points drawn area-weighted over the triangles, uniform within each.
    /// Each point carries the normal of the triangle it was drawn from.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Result<PointCloud> {
        let (points, _, normals) = self.sample_surface_with_faces(n, seed)?;
        PointCloud::with_normals(points, normals)
    }

    /// Like [`sample_surface`](Self::sample_surface) but also reports the
    /// owning triangle of each sample.
    pub fn sample_surface_with_faces(
        &self,
        n: usize,
        seed: u64,
    ) -> Result<(Vec<Point3>, Vec<usize>, Vec<Point3>)> {
        if n == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh("cannot sample a mesh without triangles".into()));
        }
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::InvalidMesh("mesh has zero total area".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let mut faces = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen::<f64>() * total;
            let t = cumulative
                .partition_point(|&c| c <= u)
                .min(self.triangles.len() - 1);
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let s = r1.sqrt();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            let [a, b, c] = self.triangle_points(t);
            points.push(a * wa + b * wb + c * wc);
            faces.push(t);
            normals.push(self.face_normal(t));
        }
        Ok((points, faces, normals))
    }

    /// Distance from `p` to the closest point on any triangle (brute force).
    pub fn distance_to_surface(&self, p: Point3) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                point_triangle_distance(p, a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Euclidean distance from `p` to triangle `abc` (Ericson, closest point on
/// triangle by Voronoi region).
pub fn point_triangle_distance(p: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return p.distance(a);
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return p.distance(b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return p.distance(a + ab * v);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return p.distance(c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return p.distance(a + ac * w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return p.distance(b + (c - b) * w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    p.distance(a + ab * v + ac * w)
}
