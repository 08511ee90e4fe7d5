use super::Point3;
use crate::error::{Error, Result};

/// Unordered set of 3D points with optional per-point normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Point3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point cloud must not be empty"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("point cloud contains non-finite coordinates"));
        }
        Ok(Self {
            points,
            normals: None,
        })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.normals = Some(normals);
        Ok(cloud)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self
            .points
            .iter()
            .fold(Point3::ZERO, |acc, &p| acc + p);
        sum / self.points.len() as f64
    }

    /// Subset by index, keeping normals aligned.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        match &self.normals {
            Some(ns) => PointCloud::with_normals(points, indices.iter().map(|&i| ns[i]).collect()),
            None => PointCloud::new(points),
        }
    }

    /// Points as a flat row-major `[x0, y0, z0, x1, ...]` buffer.
    pub fn to_flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.to_array()).collect()
    }
}
