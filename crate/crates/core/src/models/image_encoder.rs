//! Small convolutional encoder for binary silhouettes: stride-2 3x3
//! convolutions with ReLU, then a fully connected layer to the latent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Silhouette;
use crate::error::{Error, Result};
use crate::nn::conv::{conv2d_backward, conv2d_forward, ConvGeometry};
use crate::nn::layers::glorot_uniform;
use crate::nn::{dense_backward, dense_forward, relu, relu_backward, ParamSet, Tensor2};

use super::Gradients;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEncoderConfig {
    pub resolution: usize,
    pub channels: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for ImageEncoderConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            channels: vec![8, 16, 32, 64],
            latent_dim: 256,
        }
    }
}

impl ImageEncoderConfig {
    fn geometries(&self) -> Result<Vec<ConvGeometry>> {
        let mut side = self.resolution;
        let mut c_in = 1;
        let mut out = Vec::new();
        for &c in &self.channels {
            if side < 2 || side % 2 != 0 {
                return Err(Error::invalid(format!(
                    "resolution {} cannot be halved {} times",
                    self.resolution,
                    self.channels.len()
                )));
            }
            let g = ConvGeometry::halving(side, side, c_in, c);
            side = g.out_h();
            c_in = c;
            out.push(g);
        }
        Ok(out)
    }

    /// Length of the flattened final feature map.
    pub fn flat_dim(&self) -> Result<usize> {
        let gs = self.geometries()?;
        Ok(match gs.last() {
            Some(g) => g.out_h() * g.out_w() * g.out_c,
            None => self.resolution * self.resolution,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ImageEncoder {
    cfg: ImageEncoderConfig,
    geoms: Vec<ConvGeometry>,
    prefix: String,
}

#[derive(Debug, Clone)]
pub struct ImageEncoderCache {
    batch: usize,
    cols: Vec<Tensor2>,
    pre: Vec<Tensor2>,
    flat: Tensor2,
}

impl ImageEncoder {
    pub fn new(cfg: ImageEncoderConfig, prefix: impl Into<String>) -> Result<Self> {
        let geoms = cfg.geometries()?;
        Ok(Self {
            cfg,
            geoms,
            prefix: prefix.into(),
        })
    }

    pub fn config(&self) -> &ImageEncoderConfig {
        &self.cfg
    }

    fn name(&self, rest: &str) -> String {
        format!("{}{}", self.prefix, rest)
    }

    pub fn init(&self, rng: &mut impl Rng, params: &mut ParamSet) -> Result<()> {
        for (i, g) in self.geoms.iter().enumerate() {
            params.insert(
                self.name(&format!("conv{i}.w")),
                glorot_uniform(g.patch_len(), g.out_c, rng),
            )?;
            params.insert(self.name(&format!("conv{i}.b")), Tensor2::zeros(1, g.out_c))?;
        }
        let flat = self.cfg.flat_dim()?;
        params.insert(self.name("fc.w"), glorot_uniform(flat, self.cfg.latent_dim, rng))?;
        params.insert(self.name("fc.b"), Tensor2::zeros(1, self.cfg.latent_dim))?;
        Ok(())
    }

    pub fn check(&self, params: &ParamSet) -> Result<()> {
        for (i, g) in self.geoms.iter().enumerate() {
            super::expect_shape(params, &self.name(&format!("conv{i}.w")), (g.patch_len(), g.out_c))?;
            super::expect_shape(params, &self.name(&format!("conv{i}.b")), (1, g.out_c))?;
        }
        super::expect_shape(params, &self.name("fc.w"), (self.cfg.flat_dim()?, self.cfg.latent_dim))?;
        super::expect_shape(params, &self.name("fc.b"), (1, self.cfg.latent_dim))
    }

    /// Stacks silhouettes as a `(B * R * R) x 1` pixel matrix.
    pub fn stack(&self, images: &[&Silhouette]) -> Result<Tensor2> {
        let r = self.cfg.resolution;
        let mut data = Vec::with_capacity(images.len() * r * r);
        for img in images {
            if img.resolution() != r {
                return Err(Error::invalid(format!(
                    "image encoder expects {r}x{r} input, got {0}x{0}",
                    img.resolution()
                )));
            }
            data.extend(img.pixels().iter().map(|&p| f64::from(p)));
        }
        Tensor2::from_vec(images.len() * r * r, 1, data)
    }

    /// Encodes a stacked batch of `batch` images into `batch x L` latents.
    pub fn forward(&self, params: &ParamSet, stacked: &Tensor2, batch: usize) -> Result<(Tensor2, ImageEncoderCache)> {
        let mut h = stacked.clone();
        let mut cols = Vec::new();
        let mut pre = Vec::new();
        for (i, g) in self.geoms.iter().enumerate() {
            let (z, c) = conv2d_forward(
                &h,
                batch,
                g,
                params.value(&self.name(&format!("conv{i}.w"))),
                params.value(&self.name(&format!("conv{i}.b"))),
            )?;
            h = relu(&z);
            cols.push(c);
            pre.push(z);
        }
        // per-image pixel rows are contiguous, so flattening is a reshape
        let flat_dim = self.cfg.flat_dim()?;
        let flat = Tensor2::from_vec(batch, flat_dim, h.into_vec())?;
        let latents = dense_forward(&flat, params.value(&self.name("fc.w")), params.value(&self.name("fc.b")))?;
        Ok((
            latents,
            ImageEncoderCache {
                batch,
                cols,
                pre,
                flat,
            },
        ))
    }

    pub fn backward(
        &self,
        params: &ParamSet,
        cache: &ImageEncoderCache,
        d_latent: &Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        let mut grads = Gradients::new();
        let g = dense_backward(&cache.flat, params.value(&self.name("fc.w")), d_latent)?;
        grads.push(self.name("fc.w"), g.dw);
        grads.push(self.name("fc.b"), g.db);
        let mut dh = g.dx;
        for i in (0..self.geoms.len()).rev() {
            let geom = &self.geoms[i];
            let dh_map = Tensor2::from_vec(cache.pre[i].rows(), cache.pre[i].cols(), dh.into_vec())?;
            let dz = relu_backward(&cache.pre[i], &dh_map);
            let g = conv2d_backward(
                &cache.cols[i],
                cache.batch,
                geom,
                params.value(&self.name(&format!("conv{i}.w"))),
                &dz,
            )?;
            grads.push(self.name(&format!("conv{i}.w")), g.dw);
            grads.push(self.name(&format!("conv{i}.b")), g.db);
            dh = g.dx;
        }
        Ok((grads, dh))
    }
}
