use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{ground_truth_mesh, make_field, ShapeSpec, Silhouette};
use crate::error::{Error, Result};
use crate::extraction::{extract_mesh_threaded, MiseConfig};
use crate::geometry::{PointCloud, TriangleMesh};
use crate::metrics::{
    chamfer_l1_seeded, normal_consistency_seeded, volumetric_iou, FieldSolid, MeshSolid, MetricsReport,
    DEFAULT_IOU_SAMPLES, DEFAULT_SURFACE_POINTS,
};
use crate::models::{EncoderInput, EncoderSpec, OccupancyNetwork};
use crate::nn::Checkpoint;
use crate::pointcloud_conv::{mesh_to_pointcloud, DEFAULT_CLOUD_POINTS};

/// Extracted mesh plus whether the field ever crossed the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub mesh: TriangleMesh,
    /// Set when the mesh is empty.
    pub empty: bool,
}

pub fn load_network(path: &Path) -> Result<OccupancyNetwork> {
    let mut f = std::fs::File::open(path)?;
    OccupancyNetwork::from_checkpoint(&Checkpoint::read_from(&mut f)?)
}

/// Runs `net` on `input` and extracts the resulting surface.
pub fn reconstruct(net: &OccupancyNetwork, input: &EncoderInput, mise: &MiseConfig, threads: usize) -> Result<Reconstruction> {
    let field = net.field(net.latent(input)?)?;
    let mesh = extract_mesh_threaded(&field, mise, threads)?;
    let empty = mesh.is_empty();
    if empty {
        log::warn!("occupancy field never crossed tau = {}; mesh is empty", mise.tau);
    }
    Ok(Reconstruction { mesh, empty })
}

/// Single-network reconstruction from a silhouette.
pub fn reconstruct_occnet(silhouette: &Silhouette, stage1: &OccupancyNetwork, mise: &MiseConfig) -> Result<Reconstruction> {
    check_stage(stage1, 1)?;
    reconstruct(stage1, &EncoderInput::Silhouette(silhouette.clone()), mise, 1)
}

/// Settings of a two-network reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub stage1: PathBuf,
    pub stage2: PathBuf,
    pub mise: MiseConfig,
    pub cloud_points: usize,
    pub seed: u64,
    pub threads: usize,
}

impl PipelineConfig {
    pub fn new(stage1: PathBuf, stage2: PathBuf) -> Self {
        Self {
            stage1,
            stage2,
            mise: MiseConfig::default(),
            cloud_points: DEFAULT_CLOUD_POINTS,
            seed: 0,
            threads: 1,
        }
    }
}

/// Both networks loaded and checked.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub stage1: OccupancyNetwork,
    pub stage2: OccupancyNetwork,
    pub mise: MiseConfig,
    pub cloud_points: usize,
    pub seed: u64,
    pub threads: usize,
}

fn check_stage(net: &OccupancyNetwork, stage: u8) -> Result<()> {
    let arch = net.architecture();
    let (dim, ok_encoder) = match stage {
        1 => (256, matches!(arch.encoder, EncoderSpec::Image { .. })),
        _ => (512, matches!(arch.encoder, EncoderSpec::Pointnet { .. })),
    };
    if arch.latent_dim != dim || !ok_encoder {
        return Err(Error::Pipeline(format!(
            "stage-{stage} network must use the {} encoder with a {dim}-dim latent, found {:?} with {}",
            if stage == 1 { "image" } else { "point-cloud" },
            arch.encoder,
            arch.latent_dim
        )));
    }
    Ok(())
}

impl Pipeline {
    pub fn new(stage1: OccupancyNetwork, stage2: OccupancyNetwork, mise: MiseConfig, cloud_points: usize, seed: u64) -> Result<Self> {
        check_stage(&stage1, 1)?;
        check_stage(&stage2, 2)?;
        mise.validate()?;
        if let EncoderSpec::Pointnet { points } = stage2.architecture().encoder {
            if points != cloud_points {
                return Err(Error::Pipeline(format!(
                    "stage-2 encoder expects {points} points, conversion produces {cloud_points}"
                )));
            }
        }
        Ok(Self {
            stage1,
            stage2,
            mise,
            cloud_points,
            seed,
            threads: 1,
        })
    }

    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut p = Self::new(
            load_network(&cfg.stage1)?,
            load_network(&cfg.stage2)?,
            cfg.mise,
            cfg.cloud_points,
            cfg.seed,
        )?;
        p.threads = cfg.threads.max(1);
        Ok(p)
    }
}

/// Final mesh of the two-network chain plus the intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct DOccNetOutput {
    pub stage1_mesh: TriangleMesh,
    pub cloud: PointCloud,
    pub mesh: TriangleMesh,
}

/// Image to mesh, mesh to point cloud, point cloud to mesh.
pub fn reconstruct_doccnet(silhouette: &Silhouette, pipeline: &Pipeline) -> Result<DOccNetOutput> {
    let first = reconstruct(
        &pipeline.stage1,
        &EncoderInput::Silhouette(silhouette.clone()),
        &pipeline.mise,
        pipeline.threads,
    )?;
    if first.empty {
        return Err(Error::Pipeline("stage-1 produced no surface".into()));
    }
    doccnet_from_mesh(first.mesh, pipeline)
}

/// Second half of the chain, starting from a stage-1 mesh.
pub fn doccnet_from_mesh(stage1_mesh: TriangleMesh, pipeline: &Pipeline) -> Result<DOccNetOutput> {
    let cloud = mesh_to_pointcloud(&stage1_mesh, pipeline.cloud_points, pipeline.seed)?;
    let second = reconstruct(&pipeline.stage2, &EncoderInput::Cloud(cloud.clone()), &pipeline.mise, pipeline.threads)?;
    Ok(DOccNetOutput {
        stage1_mesh,
        cloud,
        mesh: second.mesh,
    })
}

/// Seeds and sample sizes for [`evaluate_run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    pub n_samples: usize,
    pub n_points: usize,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_IOU_SAMPLES,
            n_points: DEFAULT_SURFACE_POINTS,
            seed: 0,
        }
    }
}

/// Scores `pred` against the analytic shape: IoU against the exact
/// indicator, Chamfer and normal consistency against a high-resolution
/// extraction of the smoothed field. The two surfaces are sampled with
/// different seeds.
pub fn evaluate_run(pred: &TriangleMesh, gt: &ShapeSpec, settings: &EvalSettings) -> Result<MetricsReport> {
    let pred_solid = MeshSolid::new(pred)?;
    let gt_solid = FieldSolid {
        field: make_field(gt)?,
        tau: 0.5,
    };
    let iou = volumetric_iou(&pred_solid, &gt_solid, settings.n_samples, settings.seed)?;
    let gt_mesh = ground_truth_mesh(gt)?;
    let (sp, sg) = (settings.seed.wrapping_add(1), settings.seed.wrapping_add(2));
    Ok(MetricsReport {
        iou,
        chamfer_l1: chamfer_l1_seeded(pred, &gt_mesh, settings.n_points, sp, sg)?,
        normal_consistency: normal_consistency_seeded(pred, &gt_mesh, settings.n_points, sp, sg)?,
        n_samples: settings.n_samples,
        n_points: settings.n_points,
        seed: settings.seed,
    })
}
