use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment;
use super::queries::{sample_queries, QuerySet, DEFAULT_QUERIES};
use super::shapes::{make_smooth_field, random_spec, ShapeKind, ShapeSpec};
use super::silhouette::{render_silhouette, Silhouette, ViewAxis, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::extraction::{extract_mesh, MiseConfig};
use crate::fsutil::write_atomic;
use crate::geometry::{io, PointCloud, TriangleMesh};
use crate::pointcloud_conv::{mesh_to_pointcloud, DEFAULT_CLOUD_POINTS};

/// Fraction of each kind's samples assigned to training.
pub const TRAIN_FRACTION: f64 = 0.8;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

/// Settings for synthetic dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub kinds: Vec<ShapeKind>,
    /// Samples per kind.
    pub count: usize,
    pub seed: u64,
    pub queries: usize,
    pub view: ViewAxis,
    pub resolution: usize,
    pub cloud_points: usize,
    pub augment: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            kinds: ShapeKind::ALL.to_vec(),
            count: 10,
            seed: 0,
            queries: DEFAULT_QUERIES,
            view: ViewAxis::Y,
            resolution: DEFAULT_RESOLUTION,
            cloud_points: DEFAULT_CLOUD_POINTS,
            augment: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub name: String,
    pub kind: ShapeKind,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: GenConfig,
    pub samples: Vec<SampleRecord>,
}

/// Everything stored for one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub name: String,
    pub spec: ShapeSpec,
    pub silhouette: Silhouette,
    pub cloud: PointCloud,
    pub queries: QuerySet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub samples: Vec<Sample>,
}

/// Ground-truth surface of a shape, extracted from its smoothed field.
pub fn ground_truth_mesh(spec: &ShapeSpec) -> Result<TriangleMesh> {
    extract_mesh(&make_smooth_field(spec)?, &MiseConfig::default())
}

/// Builds all stored artefacts for one spec.
pub fn build_sample(name: &str, spec: &ShapeSpec, cfg: &GenConfig, seed: u64) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let silhouette = render_silhouette(spec, cfg.view, cfg.resolution)?;
    let mesh = ground_truth_mesh(spec)?;
    let cloud = mesh_to_pointcloud(&mesh, cfg.cloud_points, rng.next_u64())?;
    let queries = sample_queries(spec, cfg.queries, rng.next_u64())?;
    Ok(Sample {
        name: name.to_string(),
        spec: spec.clone(),
        silhouette,
        cloud,
        queries,
    })
}

/// Draws `count` random shapes per kind and splits each kind 80/20.
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset> {
    if cfg.kinds.is_empty() || cfg.count == 0 {
        return Err(Error::invalid("generation needs at least one kind and a positive count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::new();
    let mut records = Vec::new();
    for &kind in &cfg.kinds {
        let mut order: Vec<usize> = (0..cfg.count).collect();
        order.shuffle(&mut rng);
        let n_train = ((cfg.count as f64 * TRAIN_FRACTION).round() as usize).clamp(1, cfg.count);
        let mut split = vec![Split::Val; cfg.count];
        for &i in &order[..n_train] {
            split[i] = Split::Train;
        }
        for (i, split) in split.into_iter().enumerate() {
            let name = format!("{}_{i:04}", kind.name());
            let base = random_spec(kind, rng.next_u64());
            let aug_seed = rng.next_u64();
            let spec = if cfg.augment {
                let a = augment(&base, aug_seed)?;
                if a.clamped {
                    log::warn!("{name}: augmentation was clamped to stay in bounds");
                }
                a.spec
            } else {
                base
            };
            samples.push(build_sample(&name, &spec, cfg, rng.next_u64())?);
            records.push(SampleRecord { name, kind, split });
        }
    }
    Ok(Dataset {
        manifest: Manifest {
            config: cfg.clone(),
            samples: records,
        },
        samples,
    })
}

impl Dataset {
    /// In-memory dataset from explicit specs, all in the training split.
    pub fn from_specs(specs: &[ShapeSpec], cfg: &GenConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut samples = Vec::new();
        let mut records = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let name = format!("{}_{i:04}", spec.kind().name());
            samples.push(build_sample(&name, spec, cfg, rng.next_u64())?);
            records.push(SampleRecord {
                name,
                kind: spec.kind(),
                split: Split::Train,
            });
        }
        Ok(Self {
            manifest: Manifest {
                config: cfg.clone(),
                samples: records,
            },
            samples,
        })
    }

    pub fn split(&self, which: Split) -> Vec<&Sample> {
        self.samples
            .iter()
            .zip(&self.manifest.samples)
            .filter(|(_, r)| r.split == which)
            .map(|(s, _)| s)
            .collect()
    }

    /// Writes one file per artefact plus the manifest into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for s in &self.samples {
            let base = dir.join(&s.name);
            write_atomic(&base.with_extension("json"), serde_json::to_string_pretty(&s.spec)?.as_bytes())?;
            write_atomic(&base.with_extension("pgm"), &s.silhouette.to_pgm())?;
            write_atomic(&base.with_extension("xyz"), io::write_xyz(&s.cloud).as_bytes())?;
            write_atomic(&base.with_extension("ocqd"), &s.queries.to_bytes())?;
        }
        write_atomic(
            &dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&self.manifest)?.as_bytes(),
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut samples = Vec::with_capacity(manifest.samples.len());
        for r in &manifest.samples {
            let base = dir.join(&r.name);
            let spec: ShapeSpec = serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
            spec.validate()?;
            samples.push(Sample {
                name: r.name.clone(),
                spec,
                silhouette: Silhouette::read_pgm(fs::File::open(base.with_extension("pgm"))?)?,
                cloud: io::load_cloud(&base.with_extension("xyz"))?,
                queries: QuerySet::from_bytes(&fs::read(base.with_extension("ocqd"))?)?,
            });
        }
        Ok(Self { manifest, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GenConfig {
        GenConfig {
            kinds: vec![ShapeKind::Sphere, ShapeKind::Box],
            count: 5,
            seed: 3,
            queries: 64,
            ..Default::default()
        }
    }

    #[test]
    fn split_is_eighty_twenty_per_kind() {
        let d = generate_dataset(&tiny()).unwrap();
        assert_eq!(d.samples.len(), 10);
        assert_eq!(d.split(Split::Train).len(), 8);
        assert_eq!(d.split(Split::Val).len(), 2);
        for kind in [ShapeKind::Sphere, ShapeKind::Box] {
            let train = d
                .manifest
                .samples
                .iter()
                .filter(|r| r.kind == kind && r.split == Split::Train)
                .count();
            assert_eq!(train, 4);
        }
    }

    #[test]
    fn directory_roundtrip() {
        let d = generate_dataset(&tiny()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.write_to_dir(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(back.manifest, d.manifest);
        for (a, b) in back.samples.iter().zip(&d.samples) {
            assert_eq!(a.spec, b.spec);
            assert_eq!(a.silhouette, b.silhouette);
            assert_eq!(a.queries, b.queries);
            assert_eq!(a.cloud.points(), b.cloud.points());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_dataset(&tiny()).unwrap(), generate_dataset(&tiny()).unwrap());
    }
}
