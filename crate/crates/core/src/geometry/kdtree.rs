use super::Point3;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Balanced k-d tree over a fixed point set.
///
/// Nearest-neighbour queries return exactly what a linear scan would,
/// including tie-breaking toward the lowest insertion index.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    /// Permutation of insertion indices; leaves own contiguous ranges.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub point: Point3,
    pub distance: f64,
}

impl SpatialIndex {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("spatial index needs at least one point"));
        }
        let mut index = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        let n = index.points.len();
        index.build(0, n);
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let points = &self.points;
        let slice = &mut self.order[start..end];
        let (lo, hi) = slice.iter().fold(
            (Point3::new(f64::MAX, f64::MAX, f64::MAX), Point3::new(f64::MIN, f64::MIN, f64::MIN)),
            |(lo, hi), &i| (lo.min(points[i]), hi.max(points[i])),
        );
        let e = hi - lo;
        let axis = if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        };
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis]
                .total_cmp(&points[b][axis])
                .then(a.cmp(&b))
        });
        let value = points[slice[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, start + mid);
        let right = self.build(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Euclidean-nearest indexed point; ties go to the lowest insertion index.
    pub fn nearest(&self, q: Point3) -> Neighbor {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, q, &mut best);
        let (d2, index) = best;
        Neighbor {
            index,
            point: self.points[index],
            distance: d2.sqrt(),
        }
    }

    fn search(&self, node: usize, q: Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = self.points[i].distance_squared(q);
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                // left holds coordinates <= value, right holds >= value
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Linear-scan nearest neighbour with the same tie rule as [`SpatialIndex`].
pub fn brute_force_nearest(points: &[Point3], q: Point3) -> Neighbor {
    let (index, d2) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.distance_squared(q)))
        .fold((usize::MAX, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
    Neighbor {
        index,
        point: points[index],
        distance: d2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_case() {
        let idx = SpatialIndex::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let nn = idx.nearest(Point3::new(0.4, 0.0, 0.0));
        assert_eq!(nn.index, 0);
        assert!((nn.distance - 0.4).abs() < 1e-15);
    }

    #[test]
    fn query_on_indexed_point() {
        let pts: Vec<_> = (0..50).map(|i| Point3::new(i as f64, (i * 7 % 13) as f64, 0.0)).collect();
        let idx = SpatialIndex::new(pts.clone()).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let nn = idx.nearest(*p);
            assert_eq!(nn.index, i);
            assert_eq!(nn.distance, 0.0);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut pts = vec![Point3::new(1.0, 0.0, 0.0); 20];
        pts.push(Point3::new(-1.0, 0.0, 0.0));
        pts[3] = Point3::new(5.0, 5.0, 5.0);
        let idx = SpatialIndex::new(pts).unwrap();
        assert_eq!(idx.nearest(Point3::new(0.9, 0.0, 0.0)).index, 0);
        // equidistant from (1,0,0) and (-1,0,0)
        assert_eq!(idx.nearest(Point3::ZERO).index, 0);
    }

    #[test]
    fn empty_index_is_rejected() {
        assert!(SpatialIndex::new(Vec::new()).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..1000)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let idx = SpatialIndex::new(pts.clone()).unwrap();
        for _ in 0..100 {
            let q = Point3::new(rng.gen(), rng.gen(), rng.gen());
            assert_eq!(idx.nearest(q), brute_force_nearest(&pts, q));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn kd_tree_equals_linear_scan(seed in any::<u64>(), grid in prop::bool::ANY) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // snapped coordinates provoke exact ties
            let coord = |rng: &mut ChaCha8Rng| {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if grid { (v * 4.0).round() / 4.0 } else { v }
            };
            let pts: Vec<_> = (0..1000)
                .map(|_| Point3::new(coord(&mut rng), coord(&mut rng), coord(&mut rng)))
                .collect();
            let idx = SpatialIndex::new(pts.clone()).unwrap();
            for _ in 0..20 {
                let q = Point3::new(coord(&mut rng), coord(&mut rng), coord(&mut rng));
                prop_assert_eq!(idx.nearest(q), brute_force_nearest(&pts, q));
            }
        }
    }
}
