//! ASCII mesh (OBJ, OFF) and point-cloud (XYZ, PLY) readers and writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a written file reproduces every coordinate exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{Point3, PointCloud, TriangleMesh};
use crate::error::{Error, Result};

fn parse_f64(tok: Option<&str>, loc: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(loc, "missing number"))?;
    tok.parse::<f64>()
        .map_err(|_| Error::parse(loc, format!("malformed number {tok:?}")))
}

fn parse_usize(tok: Option<&str>, loc: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(loc, "missing integer"))?;
    tok.parse::<usize>()
        .map_err(|_| Error::parse(loc, format!("malformed integer {tok:?}")))
}

fn parse_point<'a>(toks: &mut impl Iterator<Item = &'a str>, loc: &str) -> Result<Point3> {
    Ok(Point3::new(
        parse_f64(toks.next(), loc)?,
        parse_f64(toks.next(), loc)?,
        parse_f64(toks.next(), loc)?,
    ))
}

/// Writes `v`, optional `vn`, and `f` records. Faces reference normals with
/// `a//a` syntax when normals are present.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        writeln!(s, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    if let Some(ns) = mesh.normals() {
        for n in ns {
            writeln!(s, "vn {} {} {}", n.x, n.y, n.z).unwrap();
        }
    }
    for &[a, b, c] in mesh.triangles() {
        let (a, b, c) = (a + 1, b + 1, c + 1);
        if mesh.normals().is_some() {
            writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}").unwrap();
        } else {
            writeln!(s, "f {a} {b} {c}").unwrap();
        }
    }
    s
}

pub fn read_obj(text: &str) -> Result<TriangleMesh> {
    let mut verts = Vec::new();
    let mut normals = Vec::new();
    let mut tris = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let loc = format!("obj line {}", ln + 1);
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => verts.push(parse_point(&mut toks, &loc)?),
            Some("vn") => normals.push(parse_point(&mut toks, &loc)?),
            Some("f") => {
                let idx: Vec<u32> = toks
                    .map(|t| {
                        let v = t.split('/').next().unwrap_or("");
                        let i = parse_usize(Some(v), &loc)?;
                        if i == 0 {
                            return Err(Error::parse(&loc, "obj indices are 1-based"));
                        }
                        u32::try_from(i - 1).map_err(|_| Error::parse(&loc, "index too large"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::parse(
                        &loc,
                        format!("only triangles are supported, got {} vertices", idx.len()),
                    ));
                }
                tris.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    let mesh = TriangleMesh::new(verts, tris)?;
    if !normals.is_empty() && normals.len() == mesh.vertices().len() {
        return mesh.with_normals(normals);
    }
    Ok(mesh)
}

pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut s = String::from("OFF\n");
    writeln!(s, "{} {} 0", mesh.vertices().len(), mesh.triangles().len()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} {}", v.x, v.y, v.z).unwrap();
    }
    for &[a, b, c] in mesh.triangles() {
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    s
}

pub fn read_off(text: &str) -> Result<TriangleMesh> {
    // comments start with '#'; tokens may be spread across lines
    let mut toks = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    match toks.next() {
        Some("OFF") => {}
        other => return Err(Error::parse("off header", format!("expected OFF, got {other:?}"))),
    }
    let nv = parse_usize(toks.next(), "off counts")?;
    let nf = parse_usize(toks.next(), "off counts")?;
    let _ne = parse_usize(toks.next(), "off counts")?;
    let mut verts = Vec::with_capacity(nv);
    for i in 0..nv {
        verts.push(parse_point(&mut toks, &format!("off vertex {i}"))?);
    }
    let mut tris = Vec::with_capacity(nf);
    for i in 0..nf {
        let loc = format!("off face {i}");
        let k = parse_usize(toks.next(), &loc)?;
        if k != 3 {
            return Err(Error::parse(&loc, format!("only triangles are supported, got {k}")));
        }
        let mut t = [0u32; 3];
        for slot in &mut t {
            *slot = u32::try_from(parse_usize(toks.next(), &loc)?)
                .map_err(|_| Error::parse(&loc, "index too large"))?;
        }
        tris.push(t);
    }
    TriangleMesh::new(verts, tris)
}

/// One point per line, followed by its normal when the cloud has normals.
pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut s = String::new();
    for (i, p) in cloud.points().iter().enumerate() {
        write!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
        if let Some(ns) = cloud.normals() {
            let n = ns[i];
            write!(s, " {} {} {}", n.x, n.y, n.z).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn read_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let loc = format!("xyz line {}", ln + 1);
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_f64(Some(t), &loc))
            .collect::<Result<_>>()?;
        match vals.len() {
            0 => continue,
            3 => points.push(Point3::new(vals[0], vals[1], vals[2])),
            6 => {
                points.push(Point3::new(vals[0], vals[1], vals[2]));
                normals.push(Point3::new(vals[3], vals[4], vals[5]));
            }
            k => return Err(Error::parse(&loc, format!("expected 3 or 6 values, got {k}"))),
        }
    }
    if normals.is_empty() {
        PointCloud::new(points)
    } else if normals.len() == points.len() {
        PointCloud::with_normals(points, normals)
    } else {
        Err(Error::parse("xyz", "normals given for only some points"))
    }
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let mut s = String::from("ply\nformat ascii 1.0\n");
    writeln!(s, "element vertex {}", cloud.len()).unwrap();
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.normals().is_some() {
        s.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    s.push_str("end_header\n");
    s.push_str(&write_xyz(cloud));
    s
}

pub fn read_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse("ply header", "missing 'ply' magic")),
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse("ply header", "missing end_header"))?;
        let loc = format!("ply line {}", ln + 1);
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::parse(&loc, format!("unsupported ply format {fmt}")))
            }
            ["element", "vertex", n] => {
                count = Some(parse_usize(Some(n), &loc)?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let count = count.ok_or_else(|| Error::parse("ply header", "no vertex element"))?;
    let pos = |name: &str| props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (pos("x"), pos("y"), pos("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::parse("ply header", "vertex element lacks x/y/z")),
    };
    let normal_idx = match (pos("nx"), pos("ny"), pos("nz")) {
        (Some(x), Some(y), Some(z)) => Some((x, y, z)),
        _ => None,
    };
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::new();
    for _ in 0..count {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse("ply body", "fewer vertices than declared"))?;
        let loc = format!("ply line {}", ln + 1);
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_f64(Some(t), &loc))
            .collect::<Result<_>>()?;
        if vals.len() < props.len() {
            return Err(Error::parse(&loc, "too few properties"));
        }
        points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
        if let Some((x, y, z)) = normal_idx {
            normals.push(Point3::new(vals[x], vals[y], vals[z]));
        }
    }
    if normal_idx.is_some() {
        PointCloud::with_normals(points, normals)
    } else {
        PointCloud::new(points)
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads an OBJ or OFF mesh, chosen by file extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    match extension(path).as_str() {
        "off" => read_off(&text),
        _ => read_obj(&text),
    }
}

/// Serializes a mesh in the format implied by the extension (OBJ by default).
pub fn mesh_to_string(mesh: &TriangleMesh, path: &Path) -> String {
    match extension(path).as_str() {
        "off" => write_off(mesh),
        _ => write_obj(mesh),
    }
}

/// Reads an XYZ or PLY point cloud, chosen by file extension.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path)?;
    match extension(path).as_str() {
        "ply" => read_ply(&text),
        _ => read_xyz(&text),
    }
}

pub fn cloud_to_string(cloud: &PointCloud, path: &Path) -> String {
    match extension(path).as_str() {
        "ply" => write_ply(cloud),
        _ => write_xyz(cloud),
    }
}
