use std::collections::HashMap;

use super::grid::OccupancyGrid;
use super::tables::{CORNERS, EDGES, TRI_TABLE};
use crate::error::{Error, Result};
use crate::geometry::{Point3, TriangleMesh};

/// Parameter `t` along the edge from `va` to `vb` at which the linear
/// interpolant equals `tau`.
pub fn edge_parameter(va: f64, vb: f64, tau: f64) -> f64 {
    (tau - va) / (vb - va)
}

/// Triangulates the `tau` level set of `grid`.
///
/// A lattice value counts as occupied when it is strictly above `tau`.
/// Vertices are shared between cells through their lattice edge, and each
/// vertex is placed on its edge by linear interpolation measured from the
/// endpoint with the lower lattice index. Triangles wind so that normals
/// point toward lower occupancy.
pub fn marching_cubes(grid: &OccupancyGrid, tau: f64) -> Result<TriangleMesh> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau must be in (0,1)"));
    }
    let r = grid.resolution();
    let values = grid.values();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut welded: HashMap<usize, u32> = HashMap::new();

    for i in 0..r - 1 {
        for j in 0..r - 1 {
            for k in 0..r - 1 {
                let corner_ix = CORNERS.map(|[di, dj, dk]| grid.index(i + di, j + dj, k + dk));
                let mut case = 0usize;
                for (c, &ix) in corner_ix.iter().enumerate() {
                    if values[ix] > tau {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let mut edge_vertex = |e: usize| -> u32 {
                    let [c0, c1] = EDGES[e];
                    let (lo, hi) = if corner_ix[c0] < corner_ix[c1] { (c0, c1) } else { (c1, c0) };
                    let axis = (0..3).find(|&a| CORNERS[lo][a] != CORNERS[hi][a]).expect("edge spans one axis");
                    let key = corner_ix[lo] * 3 + axis;
                    *welded.entry(key).or_insert_with(|| {
                        let corner_point = |c: usize| {
                            let [di, dj, dk] = CORNERS[c];
                            grid.point(i + di, j + dj, k + dk)
                        };
                        let t = edge_parameter(values[corner_ix[lo]], values[corner_ix[hi]], tau);
                        let (pa, pb) = (corner_point(lo), corner_point(hi));
                        let mut p: Point3 = pa;
                        p[axis] = pa[axis] + (pb[axis] - pa[axis]) * t;
                        vertices.push(p);
                        (vertices.len() - 1) as u32
                    })
                };
                for tri in TRI_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                    let a = edge_vertex(tri[0] as usize);
                    let b = edge_vertex(tri[1] as usize);
                    let c = edge_vertex(tri[2] as usize);
                    triangles.push([a, c, b]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{evaluate_grid, FnField};
    use crate::geometry::{world_bounds, Aabb};

    fn smooth_sphere(r0: f64) -> impl Fn(Point3) -> f64 + Sync {
        move |p: Point3| 1.0 / (1.0 + (-200.0 * (r0 - p.norm())).exp())
    }

    #[test]
    fn empty_when_below_tau() {
        let grid = OccupancyGrid::new(4, Aabb::cube(0.5), vec![0.2; 64]).unwrap();
        let mesh = marching_cubes(&grid, 0.5).unwrap();
        assert!(mesh.triangles().is_empty());
    }

    #[test]
    fn single_corner_gives_outward_triangle() {
        let mut values = vec![0.0; 8];
        values[0] = 1.0;
        let grid = OccupancyGrid::new(2, Aabb::cube(0.5), values).unwrap();
        let mesh = marching_cubes(&grid, 0.5).unwrap();
        assert_eq!(mesh.triangles().len(), 1);
        let [a, b, c] = mesh.triangles()[0].map(|i| mesh.vertices()[i as usize]);
        let n = (b - a).cross(c - a);
        // The occupied corner is at the box minimum; normals face away from it.
        assert!(n.x > 0.0 && n.y > 0.0 && n.z > 0.0);
    }

    #[test]
    fn sphere_volume_positive_and_close() {
        let field = FnField {
            f: smooth_sphere(0.4),
            bounds: world_bounds(),
        };
        let grid = evaluate_grid(&field, 64).unwrap();
        let mesh = marching_cubes(&grid, 0.5).unwrap();
        assert!(mesh.is_watertight());
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.4f64.powi(3);
        assert!((mesh.volume() - exact).abs() / exact < 0.02, "{}", mesh.volume());
    }

    #[test]
    fn table_is_crack_free() {
        // Two face-adjacent cells must produce the same crossing edges on the
        // shared face with opposite winding.
        for axis in 0..3 {
            for a in 0..256usize {
                for b in 0..256usize {
                    let face_a: Vec<usize> = (0..8).filter(|&c| CORNERS[c][axis] == 1).collect();
                    let face_b: Vec<usize> = (0..8).filter(|&c| CORNERS[c][axis] == 0).collect();
                    let agree = face_a.iter().all(|&ca| {
                        let mut pos = CORNERS[ca];
                        pos[axis] = 0;
                        let cb = *face_b.iter().find(|&&cb| CORNERS[cb] == pos).unwrap();
                        (a >> ca & 1) == (b >> cb & 1)
                    });
                    if !agree {
                        continue;
                    }
                    let boundary = |case: usize, side: usize| {
                        let mut half_edges = Vec::new();
                        for tri in TRI_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                            for s in 0..3 {
                                let (e0, e1) = (tri[s] as usize, tri[(s + 1) % 3] as usize);
                                let on_face = |e: usize| EDGES[e].iter().all(|&c| CORNERS[c][axis] == side);
                                if on_face(e0) && on_face(e1) {
                                    let mid = |e: usize| {
                                        let [c0, c1] = EDGES[e];
                                        let mut m = [0usize; 3];
                                        for d in 0..3 {
                                            m[d] = CORNERS[c0][d] + CORNERS[c1][d];
                                        }
                                        m[axis] = 0;
                                        m
                                    };
                                    half_edges.push((mid(e0), mid(e1)));
                                }
                            }
                        }
                        half_edges.sort();
                        half_edges
                    };
                    let mut from_a = boundary(a, 1);
                    for h in &mut from_a {
                        *h = (h.1, h.0);
                    }
                    from_a.sort();
                    assert_eq!(from_a, boundary(b, 0), "axis {axis} cases {a} {b}");
                }
            }
        }
    }
}
