//! The networks: occupancy decoder, point-cloud encoder, silhouette encoder,
//! and their pairing into a trainable occupancy network.

mod decoder;
mod image_encoder;
mod pointnet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use decoder::{Decoder, DecoderCache, DecoderConfig};
pub use image_encoder::{ImageEncoder, ImageEncoderCache, ImageEncoderConfig};
pub use pointnet::{PointNetCache, PointNetConfig, PointNetEncoder};

use crate::dataset::Silhouette;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, PointCloud};
use crate::nn::{AdamState, Buffers, Checkpoint, NormMode, ParamSet, Tensor2};

/// Named parameter gradients produced by a backward pass.
#[derive(Debug, Clone, Default)]
pub struct Gradients(pub Vec<(String, Tensor2)>);

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: String, g: Tensor2) {
        self.0.push((name, g));
    }

    pub fn extend(&mut self, other: Gradients) {
        self.0.extend(other.0);
    }

    /// Adds every gradient into the matching slot of `params`.
    pub fn accumulate_into(&self, params: &mut ParamSet) -> Result<()> {
        for (name, g) in &self.0 {
            params.accumulate(name, g)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }
}

pub(crate) fn expect_shape(params: &ParamSet, name: &str, shape: (usize, usize)) -> Result<()> {
    let got = params.get(name)?.value.shape();
    if got != shape {
        return Err(Error::Checkpoint(format!("{name}: expected {shape:?}, found {got:?}")));
    }
    Ok(())
}

/// Encoded shape code consumed by the decoder, `1 x L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Tensor2);

impl LatentVector {
    pub fn new(values: Tensor2) -> Result<Self> {
        if values.rows() != 1 || values.cols() == 0 {
            return Err(Error::invalid(format!("latent must be 1 x L, got {:?}", values.shape())));
        }
        if !values.is_finite() {
            return Err(Error::invalid("latent has non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn as_tensor(&self) -> &Tensor2 {
        &self.0
    }
}

/// Which encoder a network uses, with its input-specific settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderSpec {
    Image { resolution: usize },
    Pointnet { points: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    pub decoder: usize,
    pub encoder: Vec<usize>,
}

/// Architecture descriptor stored with every checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub stage: u8,
    pub latent_dim: usize,
    pub blocks: usize,
    pub widths: Widths,
    pub encoder: EncoderSpec,
}

impl Architecture {
    /// Silhouette encoder with a 256-dimensional latent.
    pub fn stage1() -> Self {
        let enc = ImageEncoderConfig::default();
        Self {
            stage: 1,
            latent_dim: enc.latent_dim,
            blocks: DecoderConfig::BLOCKS,
            widths: Widths {
                decoder: DecoderConfig::HIDDEN,
                encoder: enc.channels,
            },
            encoder: EncoderSpec::Image {
                resolution: enc.resolution,
            },
        }
    }

    /// Point-cloud encoder with a 512-dimensional latent over 300 points.
    pub fn stage2() -> Self {
        let enc = PointNetConfig::default();
        Self {
            stage: 2,
            latent_dim: enc.latent_dim,
            blocks: DecoderConfig::BLOCKS,
            widths: Widths {
                decoder: DecoderConfig::HIDDEN,
                encoder: enc.widths,
            },
            encoder: EncoderSpec::Pointnet { points: enc.points },
        }
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            hidden: self.widths.decoder,
            blocks: self.blocks,
            latent_dim: self.latent_dim,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("architecture serializes")
    }
}

#[derive(Debug, Clone)]
enum EncoderModel {
    Image(ImageEncoder),
    Cloud(PointNetEncoder),
}

/// Input to a network's encoder.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderInput {
    Silhouette(Silhouette),
    Cloud(PointCloud),
}

/// Cached encoder intermediates for back-propagation.
#[derive(Debug, Clone)]
pub enum EncoderCache {
    Image(ImageEncoderCache),
    Cloud(PointNetCache),
}

/// Encoder plus occupancy decoder sharing one parameter set.
///
/// Encoder parameters live under `enc.` and decoder parameters under `dec.`.
#[derive(Debug, Clone)]
pub struct OccupancyNetwork {
    arch: Architecture,
    encoder: EncoderModel,
    decoder: Decoder,
    pub params: ParamSet,
    pub buffers: Buffers,
}

impl OccupancyNetwork {
    fn skeleton(arch: Architecture) -> Result<Self> {
        let encoder = match &arch.encoder {
            EncoderSpec::Image { resolution } => EncoderModel::Image(ImageEncoder::new(
                ImageEncoderConfig {
                    resolution: *resolution,
                    channels: arch.widths.encoder.clone(),
                    latent_dim: arch.latent_dim,
                },
                "enc.",
            )?),
            EncoderSpec::Pointnet { points } => EncoderModel::Cloud(PointNetEncoder::new(
                PointNetConfig {
                    widths: arch.widths.encoder.clone(),
                    latent_dim: arch.latent_dim,
                    points: *points,
                },
                "enc.",
            )),
        };
        let decoder = Decoder::new(arch.decoder_config(), "dec.");
        Ok(Self {
            arch,
            encoder,
            decoder,
            params: ParamSet::new(),
            buffers: Buffers::new(),
        })
    }

    /// Freshly initialized network; identical seeds give identical weights.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::skeleton(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &net.encoder {
            EncoderModel::Image(e) => e.init(&mut rng, &mut net.params)?,
            EncoderModel::Cloud(e) => e.init(&mut rng, &mut net.params)?,
        }
        net.decoder.init(&mut rng, &mut net.params, &mut net.buffers)?;
        Ok(net)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let arch_text = ck
            .meta
            .get("arch")
            .ok_or_else(|| Error::Checkpoint("missing architecture descriptor".into()))?;
        let arch: Architecture = serde_json::from_str(arch_text)
            .map_err(|e| Error::Checkpoint(format!("bad architecture descriptor: {e}")))?;
        let mut net = Self::skeleton(arch)?;
        net.params = ck.params.clone();
        net.buffers = ck.buffers.clone();
        match &net.encoder {
            EncoderModel::Image(e) => e.check(&net.params)?,
            EncoderModel::Cloud(e) => e.check(&net.params)?,
        }
        net.decoder.check(&net.params, &net.buffers)?;
        Ok(net)
    }

    pub fn to_checkpoint(&self, adam: Option<&AdamState>, training: Option<String>) -> Checkpoint {
        let mut ck = Checkpoint {
            params: self.params.clone(),
            buffers: self.buffers.clone(),
            adam: adam.cloned(),
            ..Default::default()
        };
        ck.meta.insert("arch".into(), self.arch.to_json());
        if let Some(t) = training {
            ck.meta.insert("training".into(), t);
        }
        ck
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    pub fn image_encoder(&self) -> Option<&ImageEncoder> {
        match &self.encoder {
            EncoderModel::Image(e) => Some(e),
            EncoderModel::Cloud(_) => None,
        }
    }

    pub fn point_encoder(&self) -> Option<&PointNetEncoder> {
        match &self.encoder {
            EncoderModel::Cloud(e) => Some(e),
            EncoderModel::Image(_) => None,
        }
    }

    /// Encodes a batch of inputs into `S x L` latents.
    pub fn encode(&self, inputs: &[&EncoderInput]) -> Result<(Tensor2, EncoderCache)> {
        match &self.encoder {
            EncoderModel::Image(e) => {
                let images = inputs
                    .iter()
                    .map(|i| match i {
                        EncoderInput::Silhouette(s) => Ok(s),
                        EncoderInput::Cloud(_) => Err(Error::invalid("image encoder given a point cloud")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let stacked = e.stack(&images)?;
                let (lat, cache) = e.forward(&self.params, &stacked, images.len())?;
                Ok((lat, EncoderCache::Image(cache)))
            }
            EncoderModel::Cloud(e) => {
                let clouds = inputs
                    .iter()
                    .map(|i| match i {
                        EncoderInput::Cloud(c) => Ok(c),
                        EncoderInput::Silhouette(_) => Err(Error::invalid("point encoder given an image")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let stacked = e.stack(&clouds)?;
                let (lat, cache) = e.forward(&self.params, &stacked)?;
                Ok((lat, EncoderCache::Cloud(cache)))
            }
        }
    }

    pub fn encode_backward(&self, cache: &EncoderCache, d_latent: &Tensor2) -> Result<Gradients> {
        Ok(match (&self.encoder, cache) {
            (EncoderModel::Image(e), EncoderCache::Image(c)) => e.backward(&self.params, c, d_latent)?.0,
            (EncoderModel::Cloud(e), EncoderCache::Cloud(c)) => e.backward(&self.params, c, d_latent)?.0,
            _ => return Err(Error::invalid("encoder cache does not match the network")),
        })
    }

    /// Latent code of one input.
    pub fn latent(&self, input: &EncoderInput) -> Result<LatentVector> {
        let (lat, _) = self.encode(&[input])?;
        LatentVector::new(lat)
    }

    /// Occupancy probabilities of `points` (`N x 3`) under `latents`.
    pub fn decode(&self, points: &Tensor2, latents: &Tensor2, mode: NormMode) -> Result<(Tensor2, DecoderCache)> {
        self.decoder.forward(&self.params, &self.buffers, points, latents, mode)
    }

    /// Occupancy probabilities for one latent code.
    pub fn decode_occupancy(&self, points: &Tensor2, latent: &LatentVector, mode: NormMode) -> Result<Tensor2> {
        if latent.dim() != self.arch.latent_dim {
            return Err(Error::invalid(format!(
                "latent has {} dims, decoder expects {}",
                latent.dim(),
                self.arch.latent_dim
            )));
        }
        Ok(self.decode(points, latent.as_tensor(), mode)?.0)
    }

    pub fn decode_backward(&self, cache: &DecoderCache, d_probs: &Tensor2) -> Result<(Gradients, Tensor2)> {
        self.decoder.backward(&self.params, &self.buffers, cache, d_probs)
    }

    /// Eval-mode occupancy field of one latent code over the world cube.
    pub fn field(&self, latent: LatentVector) -> Result<NetworkField<'_>> {
        if latent.dim() != self.arch.latent_dim {
            return Err(Error::invalid(format!(
                "latent has {} dims, decoder expects {}",
                latent.dim(),
                self.arch.latent_dim
            )));
        }
        Ok(NetworkField {
            net: self,
            latent,
            bounds: crate::geometry::world_bounds(),
        })
    }
}

/// Rows per decoder pass when a field is queried; bounds activation memory.
const FIELD_CHUNK: usize = 2048;

/// A trained decoder conditioned on a fixed latent, queried in eval mode.
#[derive(Debug, Clone)]
pub struct NetworkField<'a> {
    net: &'a OccupancyNetwork,
    latent: LatentVector,
    bounds: Aabb,
}

impl crate::extraction::OccupancyField for NetworkField<'_> {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn query(&self, points: &[Point3]) -> Vec<f64> {
        if points.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(FIELD_CHUNK) {
            let flat: Vec<f64> = chunk.iter().flat_map(|p| p.to_array()).collect();
            let t = Tensor2::from_vec(chunk.len(), 3, flat).expect("sized");
            let probs = self
                .net
                .decode(&t, self.latent.as_tensor(), NormMode::Eval)
                .expect("shapes validated at construction")
                .0;
            out.extend_from_slice(probs.data());
        }
        out
    }
}
