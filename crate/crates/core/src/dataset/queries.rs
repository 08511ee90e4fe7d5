use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::shapes::{make_field, ShapeSpec};
use crate::error::{Error, Result};
use crate::geometry::{world_bounds, Point3};

pub const DEFAULT_QUERIES: usize = 1024;

const OCQD_MAGIC: &[u8; 4] = b"OCQD";

/// Query points with binary occupancy labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub points: Vec<Point3>,
    pub labels: Vec<f64>,
}

impl QuerySet {
    pub fn new(points: Vec<Point3>, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::invalid(format!("{} points but {} labels", points.len(), labels.len())));
        }
        if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("query point is not finite"));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.labels.iter().sum::<f64>() / self.len().max(1) as f64
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(OCQD_MAGIC)?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            for v in [p.x, p.y, p.z, *l] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 32 * self.len());
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::parse("ocqd", "missing header"))?;
        if &magic != OCQD_MAGIC {
            return Err(Error::parse("ocqd", "bad magic"));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(|_| Error::parse("ocqd", "missing count"))?;
        let count = u64::from_le_bytes(word) as usize;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != count * 32 {
            return Err(Error::parse(
                "ocqd",
                format!("expected {} payload bytes for {count} records, found {}", count * 32, body.len()),
            ));
        }
        let vals: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut points = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for rec in vals.chunks_exact(4) {
            points.push(Point3::new(rec[0], rec[1], rec[2]));
            labels.push(rec[3]);
        }
        Self::new(points, labels).map_err(|e| Error::parse("ocqd", e.to_string()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

/// Draws `q` points uniformly in the world cube and labels them with the
/// exact occupancy of `spec`.
pub fn sample_queries(spec: &ShapeSpec, q: usize, seed: u64) -> Result<QuerySet> {
    if q < 2 {
        return Err(Error::invalid("at least 2 query points are required"));
    }
    let field = make_field(spec)?;
    let b = world_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point3> = (0..q)
        .map(|_| {
            Point3::new(
                rng.gen_range(b.min.x..b.max.x),
                rng.gen_range(b.min.y..b.max.y),
                rng.gen_range(b.min.z..b.max.z),
            )
        })
        .collect();
    let labels = points.iter().map(|&p| field.value(p)).collect();
    QuerySet::new(points, labels)
}

/// `q` points drawn around the surface: a random entry of `surface` plus
/// isotropic Gaussian noise of standard deviation `sigma`, clamped to the
/// world cube. Labels are exact.
pub fn sample_near_surface_queries(
    spec: &ShapeSpec,
    surface: &[Point3],
    q: usize,
    sigma: f64,
    seed: u64,
) -> Result<QuerySet> {
    if surface.is_empty() {
        return Err(Error::invalid("near-surface sampling needs surface points"));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(format!("bad sigma {sigma}: {e}")))?;
    let field = make_field(spec)?;
    let b = world_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point3> = (0..q)
        .map(|_| {
            let s = surface[rng.gen_range(0..surface.len())];
            let d = Point3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            (s + d).max(b.min).min(b.max)
        })
        .collect();
    let labels = points.iter().map(|&p| field.value(p)).collect();
    QuerySet::new(points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Primitive;

    fn sphere(r: f64) -> ShapeSpec {
        ShapeSpec::primitive(Primitive::Sphere { radius: r })
    }

    #[test]
    fn sphere_positive_fraction() {
        let q = sample_queries(&sphere(0.4), 4096, 11).unwrap();
        let expected = 4.0 / 3.0 * std::f64::consts::PI * 0.064 / 1.1f64.powi(3);
        assert!((q.positive_fraction() - expected).abs() < 0.03, "{}", q.positive_fraction());
    }

    #[test]
    fn zero_radius_has_no_positives() {
        let q = sample_queries(&sphere(0.0), 1024, 1).unwrap();
        assert!(q.labels.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn deterministic_and_relabelable() {
        let spec = sphere(0.3);
        let a = sample_queries(&spec, 500, 9).unwrap();
        assert_eq!(a, sample_queries(&spec, 500, 9).unwrap());
        assert_ne!(a, sample_queries(&spec, 500, 10).unwrap());
        let field = make_field(&spec).unwrap();
        for (p, l) in a.points.iter().zip(&a.labels) {
            assert_eq!(field.value(*p), *l);
        }
    }

    #[test]
    fn near_surface_queries_hug_the_boundary() {
        let spec = sphere(0.3);
        let surface: Vec<Point3> = (0..64)
            .map(|i| {
                let a = i as f64 * 0.1;
                Point3::new(0.3 * a.cos(), 0.3 * a.sin(), 0.0)
            })
            .collect();
        let q = sample_near_surface_queries(&spec, &surface, 2000, 0.02, 4).unwrap();
        let field = make_field(&spec).unwrap();
        for (p, l) in q.points.iter().zip(&q.labels) {
            assert_eq!(field.value(*p), *l);
            assert!((p.norm() - 0.3).abs() < 0.02 * 6.0);
        }
        // roughly half land inside
        assert!((q.positive_fraction() - 0.5).abs() < 0.1, "{}", q.positive_fraction());
        assert_eq!(q, sample_near_surface_queries(&spec, &surface, 2000, 0.02, 4).unwrap());
        assert!(sample_near_surface_queries(&spec, &[], 10, 0.02, 4).is_err());
    }

    #[test]
    fn rejects_single_query() {
        assert!(sample_queries(&sphere(0.3), 1, 0).is_err());
    }

    #[test]
    fn ocqd_roundtrip_and_corruption() {
        let q = sample_queries(&sphere(0.3), 64, 2).unwrap();
        let bytes = q.to_bytes();
        assert_eq!(&bytes[..4], b"OCQD");
        assert_eq!(QuerySet::from_bytes(&bytes).unwrap(), q);
        assert!(QuerySet::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(QuerySet::from_bytes(&bad).is_err());
    }
}
