//! Property checks shared by the integration tests and the acceptance run.

use doccnet::dataset::{make_field, make_smooth_field, Primitive, ShapeSpec};
use doccnet::extraction::{
    evaluate_grid, marching_cubes, mise_extract, CountingField, FnField, MiseConfig, OccupancyField,
    OccupancyGrid,
};
use doccnet::geometry::primitives::{box_mesh, icosphere};
use doccnet::geometry::{world_bounds, Point3, PointCloud, TriangleMesh};
use doccnet::metrics::{chamfer_l1, normal_consistency, volumetric_iou, FieldSolid, MeshSolid};
use doccnet::models::{Architecture, EncoderInput, OccupancyNetwork};
use doccnet::nn::{cbn_forward, CbnParams, NormMode, Tensor2, CBN_EPS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SPHERE_RADIUS: f64 = 0.4;
pub const SPHERE_VOLUME: f64 = 0.26808;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

#[derive(Debug, Clone)]
pub struct CbnFidelity {
    /// Largest `|out * sqrt(1 + eps) - x|` with identity affine maps and unit
    /// running statistics.
    pub identity_error: f64,
    /// Largest `|mean|` of a normalized feature in train mode.
    pub mean_error: f64,
    /// Largest `|var - 1|` of a normalized feature in train mode.
    pub var_error: f64,
    /// Largest deviation of the normalized variance from `σ² / (σ² + ε)`.
    pub shrink_error: f64,
}

fn identity_maps(l: usize, f: usize) -> [Tensor2; 6] {
    [
        Tensor2::zeros(l, f),
        Tensor2::filled(1, f, 1.0),
        Tensor2::zeros(l, f),
        Tensor2::zeros(1, f),
        Tensor2::zeros(1, f),
        Tensor2::filled(1, f, 1.0),
    ]
}

fn params(t: &[Tensor2; 6]) -> CbnParams<'_> {
    CbnParams {
        gamma_w: &t[0],
        gamma_b: &t[1],
        beta_w: &t[2],
        beta_b: &t[3],
        running_mean: &t[4],
        running_var: &t[5],
        eps: CBN_EPS,
    }
}

fn moments(x: &Tensor2, j: usize) -> (f64, f64) {
    let n = x.rows() as f64;
    let mean = (0..x.rows()).map(|r| x.get(r, j)).sum::<f64>() / n;
    let var = (0..x.rows()).map(|r| (x.get(r, j) - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub fn cbn_fidelity(seed: u64) -> CbnFidelity {
    let (n, f, l) = (64, 12, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = identity_maps(l, f);
    let c = random(&mut rng, 4, l, -1.0, 1.0);

    let x = random(&mut rng, n, f, -3.0, 3.0);
    let (out, _) = cbn_forward(&x, &c, &params(&maps), NormMode::Eval).unwrap();
    let scale = (1.0 + CBN_EPS).sqrt();
    let identity_error = out
        .data()
        .iter()
        .zip(x.data())
        .map(|(o, v)| (o * scale - v).abs())
        .fold(0.0, f64::max);

    // Feature scales large enough that ε/σ² stays below the variance tolerance.
    let mut wide = random(&mut rng, n, f, -1.0, 1.0);
    for r in 0..n {
        for j in 0..f {
            let v = wide.get(r, j) * (50.0 + 10.0 * j as f64) + 7.0 * j as f64 - 20.0;
            wide.set(r, j, v);
        }
    }
    let (_, cache) = cbn_forward(&wide, &c, &params(&maps), NormMode::Train).unwrap();
    let (mut mean_error, mut var_error, mut shrink_error) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..f {
        let (m, v) = moments(&cache.xhat, j);
        mean_error = mean_error.max(m.abs());
        var_error = var_error.max((v - 1.0).abs());
    }
    // Any scale: the normalized variance is exactly σ² / (σ² + ε).
    let narrow = random(&mut rng, n, f, -0.01, 0.01);
    let (_, cache) = cbn_forward(&narrow, &c, &params(&maps), NormMode::Train).unwrap();
    for j in 0..f {
        let (_, sigma2) = moments(&narrow, j);
        let (_, v) = moments(&cache.xhat, j);
        shrink_error = shrink_error.max((v - sigma2 / (sigma2 + CBN_EPS)).abs());
    }
    CbnFidelity {
        identity_error,
        mean_error,
        var_error,
        shrink_error,
    }
}

/// Number of permutations whose latent differed bitwise from the original.
pub fn permutation_mismatches(permutations: usize, seed: u64) -> usize {
    let net = OccupancyNetwork::new(Architecture::stage2(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Point3> = (0..300)
        .map(|_| Point3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    let bits = |pts: &[Point3]| -> Vec<u64> {
        let input = EncoderInput::Cloud(PointCloud::new(pts.to_vec()).unwrap());
        net.latent(&input).unwrap().as_tensor().data().iter().map(|v| v.to_bits()).collect()
    };
    let reference = bits(&pts);
    (0..permutations)
        .filter(|_| {
            pts.shuffle(&mut rng);
            bits(&pts) != reference
        })
        .count()
}

pub fn sphere_spec() -> ShapeSpec {
    ShapeSpec::primitive(Primitive::Sphere { radius: SPHERE_RADIUS })
}

pub fn box_spec() -> ShapeSpec {
    ShapeSpec::primitive(Primitive::Box {
        half_extents: [0.3, 0.25, 0.2],
    })
}

pub fn torus_spec() -> ShapeSpec {
    ShapeSpec::primitive(Primitive::Torus {
        major_radius: 0.3,
        minor_radius: 0.1,
    })
}

#[derive(Debug, Clone)]
pub struct MiseComparison {
    pub max_vertex_distance: f64,
    pub same_vertex_count: bool,
    pub same_triangles: bool,
    pub triangles: usize,
    pub mise_evaluations: usize,
    pub dense_evaluations: usize,
}

impl MiseComparison {
    pub fn passed(&self) -> bool {
        self.same_vertex_count
            && self.same_triangles
            && self.triangles > 0
            && self.max_vertex_distance <= 1e-9
            && self.mise_evaluations < self.dense_evaluations
    }
}

pub fn mise_vs_dense(spec: &ShapeSpec) -> MiseComparison {
    let cfg = MiseConfig {
        r0: 32,
        steps: 2,
        tau: 0.5,
    };
    let field = CountingField::new(make_smooth_field(spec).unwrap());
    let mise = marching_cubes(&mise_extract(&field, &cfg).unwrap(), cfg.tau).unwrap();
    let mise_evaluations = field.count();
    let field = CountingField::new(make_smooth_field(spec).unwrap());
    let dense = marching_cubes(&evaluate_grid(&field, cfg.final_cells() + 1).unwrap(), cfg.tau).unwrap();
    let dense_evaluations = field.count();
    let same_vertex_count = mise.vertices().len() == dense.vertices().len();
    let max_vertex_distance = if same_vertex_count {
        mise.vertices()
            .iter()
            .zip(dense.vertices())
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    MiseComparison {
        max_vertex_distance,
        same_vertex_count,
        same_triangles: mise.triangles() == dense.triangles(),
        triangles: dense.triangles().len(),
        mise_evaluations,
        dense_evaluations,
    }
}

pub fn smooth_sphere_field() -> impl OccupancyField {
    make_smooth_field(&sphere_spec()).unwrap()
}

/// Largest `|v_a + t (v_b - v_a) - τ|` over the mesh vertices, where each
/// vertex is mapped back to the lattice edge it lies on.
pub fn interpolation_residual(grid: &OccupancyGrid, mesh: &TriangleMesh, tau: f64) -> f64 {
    let b = grid.bounds();
    let e = b.extent();
    let cells = (grid.resolution() - 1) as f64;
    let mut worst = 0.0f64;
    for v in mesh.vertices() {
        let u = [
            (v.x - b.min.x) / e.x * cells,
            (v.y - b.min.y) / e.y * cells,
            (v.z - b.min.z) / e.z * cells,
        ];
        let off = |a: usize| (u[a] - u[a].round()).abs();
        let axis = (0..3).max_by(|&a, &c| off(a).total_cmp(&off(c))).unwrap();
        let mut lo = [0usize; 3];
        for a in 0..3 {
            lo[a] = if a == axis { u[a].floor() as usize } else { u[a].round() as usize };
        }
        lo[axis] = lo[axis].min(grid.resolution() - 2);
        let mut hi = lo;
        hi[axis] += 1;
        let va = grid.get(lo[0], lo[1], lo[2]);
        let vb = grid.get(hi[0], hi[1], hi[2]);
        let t = u[axis] - lo[axis] as f64;
        // recompute t exactly from the values, as the extractor does, and
        // check the position agrees with it
        let t_exact = doccnet::extraction::edge_parameter(va, vb, tau);
        let pos_err = (t - t_exact).abs() / cells;
        worst = worst.max((va + t_exact * (vb - va) - tau).abs()).max(pos_err);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct SphereFidelity {
    pub watertight: bool,
    pub volume: f64,
    pub volume_error: f64,
    pub interpolation_residual: f64,
}

pub fn mc_sphere(resolution: usize) -> SphereFidelity {
    let grid = evaluate_grid(&smooth_sphere_field(), resolution).unwrap();
    let mesh = marching_cubes(&grid, 0.5).unwrap();
    let volume = mesh.volume();
    SphereFidelity {
        watertight: mesh.is_watertight(),
        volume,
        volume_error: (volume - SPHERE_VOLUME).abs() / SPHERE_VOLUME,
        interpolation_residual: interpolation_residual(&grid, &mesh, 0.5),
    }
}

#[derive(Debug, Clone)]
pub struct MetricIdentities {
    pub iou_self: f64,
    pub iou_self_mesh: f64,
    pub chamfer_self: f64,
    pub nc_self: f64,
    pub offset_cube_iou: f64,
    pub concentric_chamfer: f64,
}

impl MetricIdentities {
    pub fn passed(&self) -> bool {
        self.iou_self == 1.0
            && self.iou_self_mesh == 1.0
            && self.chamfer_self == 0.0
            && self.nc_self >= 1.0 - 1e-9
            && (self.offset_cube_iou - 1.0 / 3.0).abs() <= 0.01
            && (self.concentric_chamfer - 0.1).abs() <= 0.005
    }
}

pub fn metric_identities(seed: u64) -> MetricIdentities {
    let indicator = FieldSolid {
        field: make_field(&torus_spec()).unwrap(),
        tau: 0.5,
    };
    let iou_self = volumetric_iou(&indicator, &indicator, 100_000, seed).unwrap();
    let ball = icosphere(Point3::ZERO, 0.4, 3);
    let solid = MeshSolid::new(&ball).unwrap();
    let iou_self_mesh = volumetric_iou(&solid, &solid, 100_000, seed).unwrap();
    let chamfer_self = chamfer_l1(&ball, &ball, 10_000, seed).unwrap();
    let nc_self = normal_consistency(&ball, &ball, 10_000, seed).unwrap();

    let half = Point3::new(0.5, 0.5, 0.5);
    let a = MeshSolid::new(&box_mesh(half, half)).unwrap();
    let b = MeshSolid::new(&box_mesh(half + Point3::new(0.5, 0.0, 0.0), half)).unwrap();
    let offset_cube_iou = volumetric_iou(&a, &b, 100_000, seed).unwrap();

    let inner = icosphere(Point3::ZERO, 0.4, 4);
    let outer = icosphere(Point3::ZERO, 0.5, 4);
    let concentric_chamfer = chamfer_l1(&inner, &outer, 10_000, seed).unwrap();
    MetricIdentities {
        iou_self,
        iou_self_mesh,
        chamfer_self,
        nc_self,
        offset_cube_iou,
        concentric_chamfer,
    }
}

/// Analytic sphere field closure for tests that need a plain function.
pub fn sphere_fn(radius: f64) -> FnField<impl Fn(Point3) -> f64 + Sync> {
    FnField {
        f: move |p: Point3| if p.norm() < radius { 1.0 } else { 0.0 },
        bounds: world_bounds(),
    }
}
