use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::shapes::ShapeSpec;
use crate::error::{Error, Result};
use crate::geometry::{Point3, WORLD_HALF_EXTENT};

pub const DEFAULT_RESOLUTION: usize = 32;

/// Samples taken along each viewing ray.
pub const DEPTH_SAMPLES: usize = 64;

/// Axis the orthographic camera looks along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewAxis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for ViewAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(ViewAxis::X),
            "y" => Ok(ViewAxis::Y),
            "z" => Ok(ViewAxis::Z),
            _ => Err(Error::invalid(format!("unknown view axis '{s}'"))),
        }
    }
}

impl ViewAxis {
    /// World axes mapped to image columns, image rows (upward), and depth.
    fn axes(self) -> (usize, usize, usize) {
        match self {
            ViewAxis::X => (1, 2, 0),
            ViewAxis::Y => (0, 2, 1),
            ViewAxis::Z => (0, 1, 2),
        }
    }
}

/// Square binary image, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Silhouette {
    resolution: usize,
    pixels: Vec<u8>,
}

impl Silhouette {
    pub fn new(resolution: usize, pixels: Vec<u8>) -> Result<Self> {
        if resolution == 0 || pixels.len() != resolution * resolution {
            return Err(Error::invalid(format!(
                "{} pixels for a {resolution}x{resolution} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::invalid("silhouette pixels must be 0 or 1"));
        }
        Ok(Self { resolution, pixels })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.resolution + col]
    }

    pub fn lit_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Binary PGM (P5) with lit pixels at 255.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P5\n{0} {0}\n255\n", self.resolution)?;
        let bytes: Vec<u8> = self.pixels.iter().map(|&p| p * 255).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_pgm(&mut out).expect("writing to memory");
        out
    }

    /// Reads a square P5 image; pixels above half the maximum are lit.
    pub fn read_pgm(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut pos = 0;
        let token = |pos: &mut usize| -> Result<String> {
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if start == *pos {
                return Err(Error::parse("pgm header", "unexpected end of header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };
        if token(&mut pos)? != "P5" {
            return Err(Error::parse("pgm header", "expected P5 magic"));
        }
        let number = |pos: &mut usize, what: &str| -> Result<usize> {
            let t = token(pos)?;
            t.parse().map_err(|_| Error::parse("pgm header", format!("bad {what} '{t}'")))
        };
        let width = number(&mut pos, "width")?;
        let height = number(&mut pos, "height")?;
        let maxval = number(&mut pos, "maxval")?;
        if width != height {
            return Err(Error::parse("pgm header", format!("image is {width}x{height}, expected square")));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::parse("pgm header", format!("unsupported maxval {maxval}")));
        }
        pos += 1;
        let data = bytes.get(pos..).unwrap_or_default();
        if data.len() != width * height {
            return Err(Error::parse(
                "pgm data",
                format!("expected {} pixel bytes, found {}", width * height, data.len()),
            ));
        }
        let pixels = data.iter().map(|&v| u8::from(usize::from(v) * 2 > maxval)).collect();
        Self::new(width, pixels)
    }
}

/// Orthographic silhouette of `spec` over the world cube: a pixel is lit
/// when any of [`DEPTH_SAMPLES`] evenly spaced samples along its ray lies
/// inside the shape.
pub fn render_silhouette(spec: &ShapeSpec, view: ViewAxis, resolution: usize) -> Result<Silhouette> {
    if resolution < 8 {
        return Err(Error::invalid("silhouette resolution must be at least 8"));
    }
    spec.validate()?;
    let (col_axis, row_axis, depth_axis) = view.axes();
    let extent = 2.0 * WORLD_HALF_EXTENT;
    let centre = |i: usize, n: usize| -WORLD_HALF_EXTENT + (i as f64 + 0.5) * extent / n as f64;
    let mut pixels = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        for col in 0..resolution {
            let mut p = Point3::new(0.0, 0.0, 0.0);
            p[col_axis] = centre(col, resolution);
            p[row_axis] = -centre(row, resolution);
            let lit = (0..DEPTH_SAMPLES).any(|d| {
                p[depth_axis] = centre(d, DEPTH_SAMPLES);
                spec.contains(p)
            });
            pixels.push(u8::from(lit));
        }
    }
    Silhouette::new(resolution, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Primitive;

    #[test]
    fn sphere_disc_area() {
        let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.4 });
        let img = render_silhouette(&spec, ViewAxis::Z, 32).unwrap();
        let r_px = 0.4 / 1.1 * 32.0;
        let expected = std::f64::consts::PI * r_px * r_px;
        assert!((img.lit_count() as f64 - expected).abs() <= 25.0, "{}", img.lit_count());
    }

    #[test]
    fn empty_shape_renders_black() {
        let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.0 });
        assert_eq!(render_silhouette(&spec, ViewAxis::X, 16).unwrap().lit_count(), 0);
    }

    #[test]
    fn box_renders_filled_rectangle() {
        let spec = ShapeSpec::primitive(Primitive::Box {
            half_extents: [0.3, 0.1, 0.2],
        });
        let img = render_silhouette(&spec, ViewAxis::Y, 32).unwrap();
        let lit: Vec<(usize, usize)> = (0..32)
            .flat_map(|r| (0..32).map(move |c| (r, c)))
            .filter(|&(r, c)| img.get(r, c) == 1)
            .collect();
        let rows = (lit.iter().map(|p| p.0).min().unwrap(), lit.iter().map(|p| p.0).max().unwrap());
        let cols = (lit.iter().map(|p| p.1).min().unwrap(), lit.iter().map(|p| p.1).max().unwrap());
        assert_eq!(lit.len(), (rows.1 - rows.0 + 1) * (cols.1 - cols.0 + 1));
        // Width along x exceeds height along z.
        assert!(cols.1 - cols.0 > rows.1 - rows.0);
    }

    #[test]
    fn torus_is_partially_lit_from_every_axis() {
        let spec = ShapeSpec::primitive(Primitive::Torus {
            major_radius: 0.25,
            minor_radius: 0.1,
        });
        for view in [ViewAxis::X, ViewAxis::Y, ViewAxis::Z] {
            let img = render_silhouette(&spec, view, 32).unwrap();
            assert!(img.lit_count() > 0);
            assert!(img.lit_count() < 32 * 32);
        }
    }

    #[test]
    fn pgm_roundtrip() {
        let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.3 });
        let img = render_silhouette(&spec, ViewAxis::Z, 32).unwrap();
        let bytes = img.to_pgm();
        assert!(bytes.starts_with(b"P5\n32 32\n255\n"));
        assert_eq!(Silhouette::read_pgm(&bytes[..]).unwrap(), img);
        let commented = [b"P5\n# made by hand\n32 32\n255\n".as_slice(), &bytes[13..]].concat();
        assert_eq!(Silhouette::read_pgm(&commented[..]).unwrap(), img);
        assert!(Silhouette::read_pgm(&bytes[..bytes.len() - 3]).is_err());
    }
}
