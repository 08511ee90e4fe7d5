use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    ground_truth_mesh, sample_near_surface_queries, sample_queries, Dataset, QuerySet, Sample, ShapeSpec, Split,
};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::models::{Architecture, EncoderInput, OccupancyNetwork};
use crate::nn::{bce_loss, AdamConfig, AdamState, Buffers, Checkpoint, NormMode, ParamSet, Tensor2};
use crate::pointcloud_conv::mesh_to_pointcloud;

/// Optimisation settings shared by both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub max_steps: usize,
    /// Evaluations without validation improvement before stopping.
    pub patience: usize,
    /// Steps between validation passes.
    pub eval_every: usize,
    /// Fresh query points drawn per shape per step.
    pub queries_per_shape: usize,
    /// Share of those drawn around the ground-truth surface instead of
    /// uniformly in the world cube.
    pub near_surface: f64,
    /// Standard deviation of the offset of near-surface queries.
    pub surface_sigma: f64,
    /// Point-cloud variants precomputed per shape for stage 2.
    pub cloud_variants: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            adam: AdamConfig::default(),
            max_steps: 2000,
            patience: 10,
            eval_every: 50,
            queries_per_shape: 1024,
            near_surface: 0.5,
            surface_sigma: 0.03,
            cloud_variants: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.eval_every == 0 || self.patience == 0 {
            return Err(Error::invalid("eval_every and patience must be positive"));
        }
        if self.queries_per_shape < 2 {
            return Err(Error::invalid("at least 2 queries per shape are required"));
        }
        if !(0.0..=1.0).contains(&self.near_surface) {
            return Err(Error::invalid("near_surface must be in [0, 1]"));
        }
        if !(self.surface_sigma > 0.0 && self.surface_sigma.is_finite()) {
            return Err(Error::invalid("surface_sigma must be positive"));
        }
        if self.cloud_variants == 0 {
            return Err(Error::invalid("cloud_variants must be positive"));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// A shape prepared for training: its encoder inputs and fixed queries.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub spec: ShapeSpec,
    /// One or more interchangeable encoder inputs; a random one is used per step.
    pub inputs: Vec<EncoderInput>,
    pub queries: QuerySet,
    /// Ground-truth surface samples for near-surface queries; empty when
    /// training draws uniform queries only.
    pub surface: Vec<Point3>,
}

/// Surface samples kept per shape for near-surface queries.
const SURFACE_POOL: usize = 4096;

/// Which network a training run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn architecture(self) -> Architecture {
        match self {
            Stage::One => Architecture::stage1(),
            Stage::Two => Architecture::stage2(),
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            _ => Err(Error::invalid(format!("stage must be 1 or 2, got {n}"))),
        }
    }
}

/// Encoder inputs of `sample` for `stage`. Stage 2 uses clouds resampled
/// from the ground-truth surface; the stored cloud is variant zero.
pub fn prepare_item(sample: &Sample, stage: Stage, cfg: &TrainConfig, seed: u64) -> Result<TrainItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let needs_mesh = cfg.near_surface > 0.0 || (stage == Stage::Two && cfg.cloud_variants > 1);
    let mesh = if needs_mesh { Some(ground_truth_mesh(&sample.spec)?) } else { None };
    let inputs = match stage {
        Stage::One => vec![EncoderInput::Silhouette(sample.silhouette.clone())],
        Stage::Two => {
            let mut inputs = vec![EncoderInput::Cloud(sample.cloud.clone())];
            if let Some(mesh) = mesh.as_ref().filter(|_| cfg.cloud_variants > 1) {
                for _ in 1..cfg.cloud_variants {
                    inputs.push(EncoderInput::Cloud(mesh_to_pointcloud(
                        mesh,
                        sample.cloud.len(),
                        rng.next_u64(),
                    )?));
                }
            }
            inputs
        }
    };
    let surface = match mesh.as_ref().filter(|_| cfg.near_surface > 0.0) {
        Some(mesh) => mesh.sample_surface(SURFACE_POOL, rng.next_u64())?.points().to_vec(),
        None => Vec::new(),
    };
    Ok(TrainItem {
        spec: sample.spec.clone(),
        inputs,
        queries: sample.queries.clone(),
        surface,
    })
}

/// Training and validation items from a dataset. When the dataset has no
/// validation split the training items double as validation.
pub fn prepare_items(data: &Dataset, stage: Stage, cfg: &TrainConfig) -> Result<(Vec<TrainItem>, Vec<TrainItem>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_c10d);
    let mut build = |which: Split| -> Result<Vec<TrainItem>> {
        data.split(which)
            .into_iter()
            .map(|s| prepare_item(s, stage, cfg, rng.next_u64()))
            .collect()
    };
    let train = build(Split::Train)?;
    let mut val = build(Split::Val)?;
    if train.is_empty() {
        return Err(Error::invalid("dataset has no training samples"));
    }
    if val.is_empty() {
        val = train.clone();
    }
    Ok((train, val))
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss seen.
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRecord>,
    pub best_step: usize,
    pub steps_run: usize,
}

/// Mean BCE and accuracy at 0.5 of `net` on the fixed queries of `items`,
/// in eval mode.
pub fn evaluate_items(net: &OccupancyNetwork, items: &[TrainItem]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut total = 0usize;
    for item in items {
        let latent = net.latent(&item.inputs[0])?;
        let points = points_tensor(&item.queries.points);
        let probs = net.decode_occupancy(&points, &latent, NormMode::Eval)?;
        let labels = Tensor2::from_vec(item.queries.len(), 1, item.queries.labels.clone())?;
        let (l, _) = bce_loss(&probs, &labels)?;
        loss += l * item.queries.len() as f64;
        correct += probs
            .data()
            .iter()
            .zip(&item.queries.labels)
            .filter(|(p, y)| (**p > 0.5) == (**y > 0.5))
            .count();
        total += item.queries.len();
    }
    Ok((loss / total as f64, correct as f64 / total as f64))
}

pub(crate) fn points_tensor(points: &[crate::geometry::Point3]) -> Tensor2 {
    let flat = points.iter().flat_map(|p| p.to_array()).collect();
    Tensor2::from_vec(points.len(), 3, flat).expect("sized")
}

/// One minibatch: encoder inputs and stacked queries with labels.
pub struct Minibatch<'a> {
    pub inputs: Vec<&'a EncoderInput>,
    pub points: Tensor2,
    pub labels: Tensor2,
}

/// Draws a minibatch of `min(batch_size, items)` shapes with fresh queries.
pub fn draw_minibatch<'a>(items: &'a [TrainItem], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Minibatch<'a>> {
    let b = cfg.batch_size.min(items.len());
    let mut chosen: Vec<usize> = if b == items.len() {
        (0..b).collect()
    } else {
        sample_indices(rng, items.len(), b).into_vec()
    };
    chosen.sort_unstable();
    let mut inputs = Vec::with_capacity(b);
    let mut pts = Vec::with_capacity(b * cfg.queries_per_shape);
    let mut labels = Vec::with_capacity(b * cfg.queries_per_shape);
    for &i in &chosen {
        let item = &items[i];
        inputs.push(&item.inputs[rng.gen_range(0..item.inputs.len())]);
        let near = if item.surface.is_empty() {
            0
        } else {
            (cfg.queries_per_shape as f64 * cfg.near_surface).round() as usize
        };
        let uniform = cfg.queries_per_shape - near;
        let seed = rng.next_u64();
        if uniform > 0 {
            let q = sample_queries(&item.spec, uniform.max(2), seed)?;
            pts.extend(&q.points[..uniform]);
            labels.extend(&q.labels[..uniform]);
        }
        if near > 0 {
            let q = sample_near_surface_queries(&item.spec, &item.surface, near, cfg.surface_sigma, seed ^ 1)?;
            pts.extend(q.points);
            labels.extend(q.labels);
        }
    }
    Ok(Minibatch {
        inputs,
        points: points_tensor(&pts),
        labels: Tensor2::from_vec(labels.len(), 1, labels)?,
    })
}

/// Forward and backward pass of one minibatch in train mode. Gradients are
/// accumulated into `net.params`; running statistics are updated.
pub fn train_step(net: &mut OccupancyNetwork, batch: &Minibatch<'_>) -> Result<f64> {
    let (latents, enc_cache) = net.encode(&batch.inputs)?;
    let (probs, dec_cache) = net.decode(&batch.points, &latents, NormMode::Train)?;
    let (loss, d_probs) = bce_loss(&probs, &batch.labels)?;
    let (dec_grads, d_latent) = net.decode_backward(&dec_cache, &d_probs)?;
    let enc_grads = net.encode_backward(&enc_cache, &d_latent)?;
    dec_grads.accumulate_into(&mut net.params)?;
    enc_grads.accumulate_into(&mut net.params)?;
    let decoder = net.decoder().clone();
    decoder.update_running_stats(&mut net.buffers, &dec_cache);
    Ok(loss)
}

/// Trains a network of the given stage on prepared items.
///
/// Every `eval_every` steps (and after the last step) the validation loss is
/// measured in eval mode; the lowest one selects the returned checkpoint and
/// `patience` evaluations without improvement end the run.
pub fn train(stage: Stage, train_items: &[TrainItem], val_items: &[TrainItem], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(OccupancyNetwork::new(stage.architecture(), cfg.seed)?, train_items, val_items, cfg)
}

/// Like [`train`] but starting from an existing network.
pub fn train_with(
    mut net: OccupancyNetwork,
    train_items: &[TrainItem],
    val_items: &[TrainItem],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_items.is_empty() || val_items.is_empty() {
        return Err(Error::invalid("training needs nonempty training and validation sets"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = AdamState::new(cfg.adam);
    let mut log = Vec::new();
    let mut best: (f64, usize, ParamSet, Buffers) = (f64::INFINITY, 0, net.params.clone(), net.buffers.clone());
    let mut since_best = 0;
    let mut window_loss = 0.0;
    let mut window_steps = 0usize;
    let mut steps_run = 0;

    for step in 1..=cfg.max_steps {
        let batch = draw_minibatch(train_items, cfg, &mut rng)?;
        let loss = train_step(&mut net, &batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                step,
                message: format!("training loss became {loss}"),
            });
        }
        adam.step(&mut net.params);
        steps_run = step;
        window_loss += loss;
        window_steps += 1;

        if step % cfg.eval_every == 0 || step == cfg.max_steps {
            let (val_loss, val_acc) = evaluate_items(&net, val_items)?;
            if !val_loss.is_finite() {
                return Err(Error::Divergence {
                    step,
                    message: format!("validation loss became {val_loss}"),
                });
            }
            let record = LogRecord {
                step,
                train_loss: window_loss / window_steps as f64,
                val_loss,
                val_acc,
            };
            log::info!("{}", serde_json::to_string(&record)?);
            log.push(record);
            window_loss = 0.0;
            window_steps = 0;
            if val_loss < best.0 {
                best = (val_loss, step, net.params.clone(), net.buffers.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }

    let (_, best_step, params, buffers) = best;
    net.params = params;
    net.buffers = buffers;
    let meta = serde_json::json!({ "config": cfg, "best_step": best_step, "steps_run": steps_run });
    Ok(TrainOutcome {
        checkpoint: net.to_checkpoint(None, Some(meta.to_string())),
        log,
        best_step,
        steps_run,
    })
}

/// Stage-1 training on a dataset: silhouette encoder, 256-dim latent.
pub fn train_stage1(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let (train_items, val_items) = prepare_items(data, Stage::One, cfg)?;
    train(Stage::One, &train_items, &val_items, cfg)
}

/// Stage-2 training on a dataset: point-cloud encoder, 512-dim latent.
pub fn train_stage2(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let (train_items, val_items) = prepare_items(data, Stage::Two, cfg)?;
    train(Stage::Two, &train_items, &val_items, cfg)
}
