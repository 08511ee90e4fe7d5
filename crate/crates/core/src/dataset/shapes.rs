use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::OccupancyField;
use crate::geometry::{world_bounds, Aabb, Point3};
use crate::nn::layers::sigmoid_scalar;

/// Every shape must fit strictly inside the cube of this half extent.
pub const SHAPE_HALF_EXTENT: f64 = 0.5;

/// Steepness of the smoothed field used for extraction.
pub const SMOOTH_SHARPNESS: f64 = 200.0;

pub const MIN_SCALE: f64 = 0.75;
pub const MAX_SCALE: f64 = 1.0;

/// Analytic primitive in its local frame, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    /// Ring in the xy plane.
    Torus { major_radius: f64, minor_radius: f64 },
    /// Capped cylinder along z.
    Cylinder { radius: f64, half_height: f64 },
}

impl Primitive {
    pub fn sdf(&self, p: Point3) -> f64 {
        match *self {
            Primitive::Sphere { radius } => p.norm() - radius,
            Primitive::Box { half_extents: h } => {
                let q = Point3::new(p.x.abs() - h[0], p.y.abs() - h[1], p.z.abs() - h[2]);
                let outside = q.max(Point3::new(0.0, 0.0, 0.0)).norm();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
            Primitive::Torus {
                major_radius,
                minor_radius,
            } => {
                let ring = p.x.hypot(p.y) - major_radius;
                ring.hypot(p.z) - minor_radius
            }
            Primitive::Cylinder { radius, half_height } => {
                let dr = p.x.hypot(p.y) - radius;
                let dz = p.z.abs() - half_height;
                dr.max(0.0).hypot(dz.max(0.0)) + dr.max(dz).min(0.0)
            }
        }
    }

    fn local_bounds(&self) -> Aabb {
        let h = match *self {
            Primitive::Sphere { radius } => [radius; 3],
            Primitive::Box { half_extents } => half_extents,
            Primitive::Torus {
                major_radius,
                minor_radius,
            } => [major_radius + minor_radius, major_radius + minor_radius, minor_radius],
            Primitive::Cylinder { radius, half_height } => [radius, radius, half_height],
        };
        let h = Point3::from_array(h);
        Aabb::new(-h, h)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Primitive::Sphere { radius } => radius >= 0.0 && radius.is_finite(),
            Primitive::Box { half_extents } => half_extents.iter().all(|h| *h >= 0.0 && h.is_finite()),
            Primitive::Torus {
                major_radius,
                minor_radius,
            } => minor_radius >= 0.0 && major_radius >= minor_radius && major_radius.is_finite(),
            Primitive::Cylinder { radius, half_height } => {
                radius >= 0.0 && half_height >= 0.0 && radius.is_finite() && half_height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid primitive parameters {self:?}")))
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Primitive::Sphere { .. } => "sphere",
            Primitive::Box { .. } => "box",
            Primitive::Torus { .. } => "torus",
            Primitive::Cylinder { .. } => "cylinder",
        }
    }
}

/// A primitive displaced from the shape origin, used as a union member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Part {
    pub primitive: Primitive,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Single(Primitive),
    Union([Part; 2]),
}

/// Shape kinds available to the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Box,
    Torus,
    Cylinder,
    Union,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Sphere,
        ShapeKind::Box,
        ShapeKind::Torus,
        ShapeKind::Cylinder,
        ShapeKind::Union,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Box => "box",
            ShapeKind::Torus => "torus",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Union => "union",
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape kind '{s}'")))
    }
}

/// A posed analytic shape. World position `x` maps to local position
/// `rotate_z((x - translation) / scale, -rotation_z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub rotation_z: f64,
    pub translation: [f64; 3],
    pub scale: f64,
}

impl ShapeSpec {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            rotation_z: 0.0,
            translation: [0.0; 3],
            scale: 1.0,
        }
    }

    pub fn primitive(p: Primitive) -> Self {
        Self::new(Shape::Single(p))
    }

    pub fn kind(&self) -> ShapeKind {
        match &self.shape {
            Shape::Union(_) => ShapeKind::Union,
            Shape::Single(p) => p.name().parse().expect("primitive names are kinds"),
        }
    }

    fn to_local(&self, p: Point3) -> Point3 {
        ((p - Point3::from_array(self.translation)) / self.scale).rotate_z(-self.rotation_z)
    }

    /// Signed distance in world units, negative inside.
    pub fn sdf(&self, p: Point3) -> f64 {
        let q = self.to_local(p);
        let local = match &self.shape {
            Shape::Single(prim) => prim.sdf(q),
            Shape::Union(parts) => parts
                .iter()
                .map(|part| part.primitive.sdf(q - Point3::from_array(part.offset)))
                .fold(f64::INFINITY, f64::min),
        };
        local * self.scale
    }

    /// Exact membership: strictly negative signed distance.
    pub fn contains(&self, p: Point3) -> bool {
        self.sdf(p) < 0.0
    }

    /// Conservative world-space bounding box.
    pub fn world_aabb(&self) -> Aabb {
        let local = match &self.shape {
            Shape::Single(p) => p.local_bounds(),
            Shape::Union(parts) => {
                let b: Vec<Aabb> = parts
                    .iter()
                    .map(|part| {
                        let b = part.primitive.local_bounds();
                        let o = Point3::from_array(part.offset);
                        Aabb::new(b.min + o, b.max + o)
                    })
                    .collect();
                b[0].union(&b[1])
            }
        };
        let t = Point3::from_array(self.translation);
        let corners: Vec<Point3> = (0..8)
            .map(|c| {
                let p = Point3::new(
                    if c & 1 == 0 { local.min.x } else { local.max.x },
                    if c & 2 == 0 { local.min.y } else { local.max.y },
                    if c & 4 == 0 { local.min.z } else { local.max.z },
                );
                p.rotate_z(self.rotation_z) * self.scale + t
            })
            .collect();
        Aabb::from_points(&corners).expect("eight corners")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Single(p) => p.validate()?,
            Shape::Union(parts) => {
                for part in parts {
                    part.primitive.validate()?;
                    if !part.offset.iter().all(|o| o.is_finite()) {
                        return Err(Error::invalid("union offset is not finite"));
                    }
                }
            }
        }
        if !(MIN_SCALE..=MAX_SCALE).contains(&self.scale) {
            return Err(Error::invalid(format!(
                "scale {} outside [{MIN_SCALE}, {MAX_SCALE}]",
                self.scale
            )));
        }
        if !self.rotation_z.is_finite() || !self.translation.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("pose is not finite"));
        }
        let b = self.world_aabb();
        let fits = (0..3).all(|a| b.min[a] > -SHAPE_HALF_EXTENT && b.max[a] < SHAPE_HALF_EXTENT);
        if !fits {
            return Err(Error::invalid(format!(
                "shape bounds {:?}..{:?} leave the cube [-{SHAPE_HALF_EXTENT}, {SHAPE_HALF_EXTENT}]^3",
                b.min.to_array(),
                b.max.to_array()
            )));
        }
        Ok(())
    }
}

/// How a [`ShapeField`] turns signed distance into occupancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldMode {
    /// 1 inside, 0 outside.
    Indicator,
    /// `sigmoid(-k * sdf)`.
    Smooth { sharpness: f64 },
}

/// Ground-truth occupancy field of a shape over the world cube.
#[derive(Debug, Clone)]
pub struct ShapeField {
    spec: ShapeSpec,
    mode: FieldMode,
}

impl ShapeField {
    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn value(&self, p: Point3) -> f64 {
        match self.mode {
            FieldMode::Indicator => {
                if self.spec.contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
            FieldMode::Smooth { sharpness } => sigmoid_scalar(-sharpness * self.spec.sdf(p)),
        }
    }
}

impl OccupancyField for ShapeField {
    fn bounds(&self) -> Aabb {
        world_bounds()
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        points.iter().map(|&p| self.value(p)).collect()
    }
}

/// Exact indicator field of a validated spec.
pub fn make_field(spec: &ShapeSpec) -> Result<ShapeField> {
    make_field_with(spec, FieldMode::Indicator)
}

/// Smoothed field with the default sharpness, for mesh extraction.
pub fn make_smooth_field(spec: &ShapeSpec) -> Result<ShapeField> {
    make_field_with(
        spec,
        FieldMode::Smooth {
            sharpness: SMOOTH_SHARPNESS,
        },
    )
}

pub fn make_field_with(spec: &ShapeSpec, mode: FieldMode) -> Result<ShapeField> {
    spec.validate()?;
    Ok(ShapeField {
        spec: spec.clone(),
        mode,
    })
}

/// Draws a random shape of `kind`, upright and centred, with unit scale.
pub fn random_spec(kind: ShapeKind, seed: u64) -> ShapeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_primitive = |rng: &mut ChaCha8Rng, kind: ShapeKind| match kind {
        ShapeKind::Sphere => Primitive::Sphere {
            radius: rng.gen_range(0.25..0.4),
        },
        ShapeKind::Box => Primitive::Box {
            half_extents: [rng.gen_range(0.12..0.3), rng.gen_range(0.12..0.3), rng.gen_range(0.12..0.3)],
        },
        ShapeKind::Torus => Primitive::Torus {
            major_radius: rng.gen_range(0.2..0.28),
            minor_radius: rng.gen_range(0.08..0.13),
        },
        ShapeKind::Cylinder => Primitive::Cylinder {
            radius: rng.gen_range(0.15..0.28),
            half_height: rng.gen_range(0.18..0.35),
        },
        ShapeKind::Union => unreachable!("unions are built from two primitives"),
    };
    let shape = match kind {
        ShapeKind::Union => {
            let kinds = [ShapeKind::Sphere, ShapeKind::Box];
            let part = |rng: &mut ChaCha8Rng, sign: f64| {
                let k = kinds[rng.gen_range(0..2)];
                let prim = shrink(draw_primitive(rng, k), 0.6);
                let offset = [sign * rng.gen_range(0.12..0.2), rng.gen_range(-0.05..0.05), rng.gen_range(-0.1..0.1)];
                Part { primitive: prim, offset }
            };
            let a = part(&mut rng, -1.0);
            let b = part(&mut rng, 1.0);
            Shape::Union([a, b])
        }
        k => Shape::Single(draw_primitive(&mut rng, k)),
    };
    let mut spec = ShapeSpec::new(shape);
    spec.rotation_z = rng.gen_range(0.0..std::f64::consts::TAU);
    while spec.validate().is_err() {
        spec.shape = match spec.shape {
            Shape::Single(p) => Shape::Single(shrink(p, 0.95)),
            Shape::Union(parts) => Shape::Union(parts.map(|part| Part {
                primitive: shrink(part.primitive, 0.95),
                offset: part.offset.map(|o| o * 0.95),
            })),
        };
    }
    spec
}

fn shrink(p: Primitive, f: f64) -> Primitive {
    match p {
        Primitive::Sphere { radius } => Primitive::Sphere { radius: radius * f },
        Primitive::Box { half_extents } => Primitive::Box {
            half_extents: half_extents.map(|h| h * f),
        },
        Primitive::Torus {
            major_radius,
            minor_radius,
        } => Primitive::Torus {
            major_radius: major_radius * f,
            minor_radius: minor_radius * f,
        },
        Primitive::Cylinder { radius, half_height } => Primitive::Cylinder {
            radius: radius * f,
            half_height: half_height * f,
        },
    }
}

/// Five fixed, visually distinct shapes used for overfitting runs.
pub fn overfit_shapes() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::primitive(Primitive::Sphere { radius: 0.35 }),
        ShapeSpec::primitive(Primitive::Box {
            half_extents: [0.32, 0.22, 0.16],
        }),
        ShapeSpec::primitive(Primitive::Torus {
            major_radius: 0.28,
            minor_radius: 0.12,
        }),
        ShapeSpec::primitive(Primitive::Cylinder {
            radius: 0.18,
            half_height: 0.38,
        }),
        ShapeSpec::new(Shape::Union([
            Part {
                primitive: Primitive::Sphere { radius: 0.2 },
                offset: [-0.2, 0.0, 0.12],
            },
            Part {
                primitive: Primitive::Box {
                    half_extents: [0.16, 0.16, 0.16],
                },
                offset: [0.2, 0.0, -0.12],
            },
        ])),
    ]
}
