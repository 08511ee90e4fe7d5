use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shapes::{ShapeSpec, MAX_SCALE, MIN_SCALE, SHAPE_HALF_EXTENT};
use crate::error::Result;

/// Largest translation jitter per axis, in world units.
pub const MAX_JITTER: f64 = 0.05;

/// Clearance kept between an augmented shape and the shape cube.
const MARGIN: f64 = 1e-3;

/// Result of [`augment`]: the new spec and whether any quantity had to be
/// clamped to stay valid.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub spec: ShapeSpec,
    pub clamped: bool,
}

/// Scales the shape by a factor drawn uniformly from `[0.75, 1]` and jitters
/// its translation by up to [`MAX_JITTER`] per axis. Scale is clamped to the
/// valid range and translation to the shape cube.
pub fn augment(spec: &ShapeSpec, seed: u64) -> Result<Augmented> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = rng.gen_range(MIN_SCALE..=MAX_SCALE);
    let jitter: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-MAX_JITTER..=MAX_JITTER));

    let mut out = spec.clone();
    let mut clamped = false;
    let scale = spec.scale * factor;
    out.scale = scale.clamp(MIN_SCALE, MAX_SCALE);
    clamped |= out.scale != scale;
    // Shrinking about the shape origin also shrinks its offset from the translation.
    let b = out.world_aabb();
    for axis in 0..3 {
        let want = out.translation[axis] + jitter[axis];
        let lo = out.translation[axis] - (b.min[axis] + SHAPE_HALF_EXTENT - MARGIN);
        let hi = out.translation[axis] + (SHAPE_HALF_EXTENT - MARGIN - b.max[axis]);
        let t = want.clamp(lo.min(hi), hi.max(lo));
        clamped |= t != want;
        out.translation[axis] = t;
    }
    out.validate()?;
    Ok(Augmented { spec: out, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{overfit_shapes, random_spec, Primitive, ShapeKind};

    #[test]
    fn deterministic() {
        let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.3 });
        assert_eq!(augment(&spec, 4).unwrap(), augment(&spec, 4).unwrap());
    }

    #[test]
    fn scale_mean_and_range() {
        let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.2 });
        let n = 10_000;
        let mut sum = 0.0;
        for seed in 0..n {
            let a = augment(&spec, seed).unwrap();
            assert!((MIN_SCALE..=MAX_SCALE).contains(&a.spec.scale));
            assert!(!a.clamped);
            sum += a.spec.scale;
        }
        assert!((sum / n as f64 - 0.875).abs() < 0.01);
    }

    #[test]
    fn stays_in_bounds() {
        let mut specs = overfit_shapes();
        for kind in ShapeKind::ALL {
            specs.extend((0..20).map(|s| random_spec(kind, s)));
        }
        for (i, spec) in specs.iter().enumerate() {
            for seed in 0..20 {
                let a = augment(spec, seed * 1000 + i as u64).unwrap();
                a.spec.validate().unwrap();
            }
        }
    }

    #[test]
    fn clamps_when_already_small() {
        let spec = ShapeSpec {
            scale: MIN_SCALE,
            ..ShapeSpec::primitive(Primitive::Sphere { radius: 0.2 })
        };
        let a = augment(&spec, 1).unwrap();
        assert_eq!(a.spec.scale, MIN_SCALE);
        assert!(a.clamped);
    }
}
