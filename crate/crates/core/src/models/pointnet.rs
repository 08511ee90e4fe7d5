//! PointNet-style encoder: a shared per-point MLP, a feature-wise max over
//! the points of each cloud, and a fully connected head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::nn::layers::glorot_uniform;
use crate::nn::{dense_backward, dense_forward, relu, relu_backward, ParamSet, Tensor2};

use super::Gradients;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointNetConfig {
    /// Widths of the shared per-point layers; the last one is pooled.
    pub widths: Vec<usize>,
    pub latent_dim: usize,
    /// Points every input cloud must have.
    pub points: usize,
}

impl Default for PointNetConfig {
    fn default() -> Self {
        Self {
            widths: vec![64, 128, 512],
            latent_dim: 512,
            points: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointNetEncoder {
    cfg: PointNetConfig,
    prefix: String,
}

#[derive(Debug, Clone)]
pub struct PointNetCache {
    clouds: usize,
    /// Input of each shared layer, then the last pre-activation.
    inputs: Vec<Tensor2>,
    pre: Vec<Tensor2>,
    /// Row (within the whole batch) that won the max for each (cloud, feature).
    argmax: Vec<usize>,
    pooled: Tensor2,
}

impl PointNetEncoder {
    pub fn new(cfg: PointNetConfig, prefix: impl Into<String>) -> Self {
        Self {
            cfg,
            prefix: prefix.into(),
        }
    }

    pub fn config(&self) -> &PointNetConfig {
        &self.cfg
    }

    fn name(&self, rest: &str) -> String {
        format!("{}{}", self.prefix, rest)
    }

    pub fn init(&self, rng: &mut impl Rng, params: &mut ParamSet) -> Result<()> {
        if self.cfg.widths.is_empty() || self.cfg.points == 0 {
            return Err(Error::invalid("pointnet needs at least one layer and one point"));
        }
        let mut d_in = 3;
        for (i, &w) in self.cfg.widths.iter().enumerate() {
            params.insert(self.name(&format!("mlp{i}.w")), glorot_uniform(d_in, w, rng))?;
            params.insert(self.name(&format!("mlp{i}.b")), Tensor2::zeros(1, w))?;
            d_in = w;
        }
        params.insert(self.name("head.w"), glorot_uniform(d_in, self.cfg.latent_dim, rng))?;
        params.insert(self.name("head.b"), Tensor2::zeros(1, self.cfg.latent_dim))?;
        Ok(())
    }

    pub fn check(&self, params: &ParamSet) -> Result<()> {
        let mut d_in = 3;
        for (i, &w) in self.cfg.widths.iter().enumerate() {
            super::expect_shape(params, &self.name(&format!("mlp{i}.w")), (d_in, w))?;
            super::expect_shape(params, &self.name(&format!("mlp{i}.b")), (1, w))?;
            d_in = w;
        }
        super::expect_shape(params, &self.name("head.w"), (d_in, self.cfg.latent_dim))?;
        super::expect_shape(params, &self.name("head.b"), (1, self.cfg.latent_dim))
    }

    /// Stacks clouds into one `(S * P) x 3` matrix, checking the point count.
    pub fn stack(&self, clouds: &[&PointCloud]) -> Result<Tensor2> {
        let mut data = Vec::with_capacity(clouds.len() * self.cfg.points * 3);
        for c in clouds {
            if c.len() != self.cfg.points {
                return Err(Error::invalid(format!(
                    "point encoder expects {} points, got {}",
                    self.cfg.points,
                    c.len()
                )));
            }
            data.extend(c.to_flat());
        }
        Tensor2::from_vec(clouds.len() * self.cfg.points, 3, data)
    }

    /// Encodes `S` clouds stacked as `(S * P) x 3`; returns `S x L` latents.
    pub fn forward(&self, params: &ParamSet, stacked: &Tensor2) -> Result<(Tensor2, PointNetCache)> {
        let p = self.cfg.points;
        if stacked.cols() != 3 || stacked.rows() == 0 || stacked.rows() % p != 0 {
            return Err(Error::invalid(format!(
                "stacked clouds must be (k*{p}) x 3, got {:?}",
                stacked.shape()
            )));
        }
        let clouds = stacked.rows() / p;
        let mut inputs = Vec::new();
        let mut pre = Vec::new();
        let mut h = stacked.clone();
        for i in 0..self.cfg.widths.len() {
            let z = dense_forward(
                &h,
                params.value(&self.name(&format!("mlp{i}.w"))),
                params.value(&self.name(&format!("mlp{i}.b"))),
            )?;
            let next = relu(&z);
            inputs.push(std::mem::replace(&mut h, next));
            pre.push(z);
        }
        let width = h.cols();
        let mut pooled = Tensor2::zeros(clouds, width);
        let mut argmax = vec![0usize; clouds * width];
        // row-major sweep; strict `>` keeps the lowest row on ties
        for s in 0..clouds {
            pooled.row_mut(s).copy_from_slice(h.row(s * p));
            let best = &mut argmax[s * width..(s + 1) * width];
            best.fill(s * p);
            for r in s * p + 1..(s + 1) * p {
                for ((v, pv), b) in h.row(r).iter().zip(pooled.row_mut(s)).zip(best.iter_mut()) {
                    if *v > *pv {
                        *pv = *v;
                        *b = r;
                    }
                }
            }
        }
        let latents = dense_forward(
            &pooled,
            params.value(&self.name("head.w")),
            params.value(&self.name("head.b")),
        )?;
        Ok((
            latents,
            PointNetCache {
                clouds,
                inputs,
                pre,
                argmax,
                pooled,
            },
        ))
    }

    pub fn backward(
        &self,
        params: &ParamSet,
        cache: &PointNetCache,
        d_latent: &Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        let mut grads = Gradients::new();
        let g = dense_backward(&cache.pooled, params.value(&self.name("head.w")), d_latent)?;
        grads.push(self.name("head.w"), g.dw);
        grads.push(self.name("head.b"), g.db);
        let last = cache.pre.last().expect("at least one layer");
        let width = last.cols();
        let mut dh = Tensor2::zeros(last.rows(), width);
        for s in 0..cache.clouds {
            for j in 0..width {
                let r = cache.argmax[s * width + j];
                dh.set(r, j, dh.get(r, j) + g.dx.get(s, j));
            }
        }
        for i in (0..self.cfg.widths.len()).rev() {
            let dz = relu_backward(&cache.pre[i], &dh);
            let g = dense_backward(&cache.inputs[i], params.value(&self.name(&format!("mlp{i}.w"))), &dz)?;
            grads.push(self.name(&format!("mlp{i}.w")), g.dw);
            grads.push(self.name(&format!("mlp{i}.b")), g.db);
            dh = g.dx;
        }
        Ok((grads, dh))
    }

    /// Rows of `stacked` that attain the pooled maximum for at least one
    /// feature of cloud `s` (debugging and tests).
    pub fn max_achievers(cache: &PointNetCache, s: usize) -> Vec<usize> {
        let width = cache.pooled.cols();
        let mut rows: Vec<usize> = cache.argmax[s * width..(s + 1) * width].to_vec();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}
