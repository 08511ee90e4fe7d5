use std::sync::atomic::{AtomicUsize, Ordering};

use crate::geometry::{Aabb, Point3};

/// Largest number of points handed to a field in one query.
pub const QUERY_BATCH: usize = 65536;

/// A deterministic occupancy probability field over a bounded box.
pub trait OccupancyField: Sync {
    fn bounds(&self) -> Aabb;

    /// Probabilities in `[0, 1]`, one per point, in order.
    fn query(&self, points: &[Point3]) -> Vec<f64>;
}

impl<F: OccupancyField + ?Sized> OccupancyField for &F {
    fn bounds(&self) -> Aabb {
        (**self).bounds()
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        (**self).query(points)
    }
}

/// Evaluates `points` in batches of at most [`QUERY_BATCH`], spreading
/// batches over `threads` scoped workers when `threads > 1`.
pub fn query_batched<F: OccupancyField + ?Sized>(field: &F, points: &[Point3], threads: usize) -> Vec<f64> {
    let batches: Vec<&[Point3]> = points.chunks(QUERY_BATCH).collect();
    if threads <= 1 || batches.len() <= 1 {
        return batches.into_iter().flat_map(|b| field.query(b)).collect();
    }
    let per_worker = batches.len().div_ceil(threads);
    let results: Vec<Vec<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = batches
            .chunks(per_worker)
            .map(|group| s.spawn(move || group.iter().flat_map(|b| field.query(b)).collect::<Vec<f64>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("field worker panicked")).collect()
    });
    results.into_iter().flatten().collect()
}

/// Field with the same value everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub value: f64,
    pub bounds: Aabb,
}

impl OccupancyField for ConstantField {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        vec![self.value; points.len()]
    }
}

/// Field backed by a point-wise closure.
pub struct FnField<F> {
    pub f: F,
    pub bounds: Aabb,
}

impl<F: Fn(Point3) -> f64 + Sync> OccupancyField for FnField<F> {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        points.iter().map(|&p| (self.f)(p)).collect()
    }
}

/// Wraps a field and counts how many points were queried.
pub struct CountingField<F> {
    inner: F,
    count: AtomicUsize,
}

impl<F> CountingField<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

impl<F: OccupancyField> OccupancyField for CountingField<F> {
    fn bounds(&self) -> Aabb {
        self.inner.bounds()
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        self.count.fetch_add(points.len(), Ordering::Relaxed);
        self.inner.query(points)
    }
}
