//! Occupancy decoder: a fully connected lift to the hidden width, a stack of
//! residual blocks whose normalizations are conditioned on the latent code,
//! and a final conditioned normalization, ReLU, projection to one logit and a
//! sigmoid.
//!
//! Each residual block computes
//! `h + fc2(relu(cbn2(fc1(relu(cbn1(h))))))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::cbn::{update_running_stats, CbnCache};
use crate::nn::layers::{glorot_uniform, sigmoid_backward};
use crate::nn::{
    cbn_backward, cbn_forward, dense_backward, dense_forward, relu, relu_backward, sigmoid,
    Buffers, CbnParams, NormMode, ParamSet, Tensor2, CBN_EPS,
};

use super::Gradients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub hidden: usize,
    pub blocks: usize,
    pub latent_dim: usize,
}

impl DecoderConfig {
    pub const HIDDEN: usize = 256;
    pub const BLOCKS: usize = 5;

    /// Default width and depth for the given latent size.
    pub fn new(latent_dim: usize) -> Self {
        Self {
            hidden: Self::HIDDEN,
            blocks: Self::BLOCKS,
            latent_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.blocks == 0 || self.latent_dim == 0 {
            return Err(Error::invalid(format!("degenerate decoder config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Decoder {
    cfg: DecoderConfig,
    prefix: String,
}

#[derive(Debug, Clone)]
struct BlockCache {
    n1: CbnCache,
    a1: Tensor2,
    r1: Tensor2,
    n2: CbnCache,
    a2: Tensor2,
    r2: Tensor2,
}

/// Intermediates of a decoder forward pass.
#[derive(Debug, Clone)]
pub struct DecoderCache {
    points: Tensor2,
    blocks: Vec<BlockCache>,
    n_out: CbnCache,
    a_out: Tensor2,
    r_out: Tensor2,
    pub probs: Tensor2,
}

impl Decoder {
    pub fn new(cfg: DecoderConfig, prefix: impl Into<String>) -> Self {
        Self {
            cfg,
            prefix: prefix.into(),
        }
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    fn name(&self, rest: &str) -> String {
        format!("{}{}", self.prefix, rest)
    }

    fn cbn_names(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.cfg.blocks)
            .flat_map(|i| [format!("block{i}.cbn0"), format!("block{i}.cbn1")])
            .collect();
        v.push("cbn_out".into());
        v
    }

    /// Registers freshly initialized weights and running statistics.
    ///
    /// Fully connected weights are Glorot-uniform with zero bias, except the
    /// output projection which starts at zero so the initial field is 0.5
    /// everywhere. Conditioning maps start as `γ(c) = 1`, `β(c) = 0`.
    pub fn init(&self, rng: &mut impl Rng, params: &mut ParamSet, buffers: &mut Buffers) -> Result<()> {
        self.cfg.validate()?;
        let (f, l) = (self.cfg.hidden, self.cfg.latent_dim);
        params.insert(self.name("fc_in.w"), glorot_uniform(3, f, rng))?;
        params.insert(self.name("fc_in.b"), Tensor2::zeros(1, f))?;
        for i in 0..self.cfg.blocks {
            for j in 0..2 {
                params.insert(self.name(&format!("block{i}.fc{j}.w")), glorot_uniform(f, f, rng))?;
                params.insert(self.name(&format!("block{i}.fc{j}.b")), Tensor2::zeros(1, f))?;
            }
        }
        for cbn in self.cbn_names() {
            params.insert(self.name(&format!("{cbn}.gamma_w")), Tensor2::zeros(l, f))?;
            params.insert(self.name(&format!("{cbn}.gamma_b")), Tensor2::filled(1, f, 1.0))?;
            params.insert(self.name(&format!("{cbn}.beta_w")), Tensor2::zeros(l, f))?;
            params.insert(self.name(&format!("{cbn}.beta_b")), Tensor2::zeros(1, f))?;
            buffers.insert(self.name(&format!("{cbn}.running_mean")), Tensor2::zeros(1, f));
            buffers.insert(self.name(&format!("{cbn}.running_var")), Tensor2::filled(1, f, 1.0));
        }
        params.insert(self.name("fc_out.w"), Tensor2::zeros(f, 1))?;
        params.insert(self.name("fc_out.b"), Tensor2::zeros(1, 1))?;
        Ok(())
    }

    /// Checks that every expected tensor is present with the right shape.
    pub fn check(&self, params: &ParamSet, buffers: &Buffers) -> Result<()> {
        let (f, l) = (self.cfg.hidden, self.cfg.latent_dim);
        let mut want: Vec<(String, (usize, usize))> = vec![
            (self.name("fc_in.w"), (3, f)),
            (self.name("fc_in.b"), (1, f)),
            (self.name("fc_out.w"), (f, 1)),
            (self.name("fc_out.b"), (1, 1)),
        ];
        for i in 0..self.cfg.blocks {
            for j in 0..2 {
                want.push((self.name(&format!("block{i}.fc{j}.w")), (f, f)));
                want.push((self.name(&format!("block{i}.fc{j}.b")), (1, f)));
            }
        }
        for cbn in self.cbn_names() {
            want.push((self.name(&format!("{cbn}.gamma_w")), (l, f)));
            want.push((self.name(&format!("{cbn}.gamma_b")), (1, f)));
            want.push((self.name(&format!("{cbn}.beta_w")), (l, f)));
            want.push((self.name(&format!("{cbn}.beta_b")), (1, f)));
        }
        for (name, shape) in want {
            let got = params.get(&name)?.value.shape();
            if got != shape {
                return Err(Error::Checkpoint(format!("{name}: expected {shape:?}, found {got:?}")));
            }
        }
        for cbn in self.cbn_names() {
            for stat in ["running_mean", "running_var"] {
                let name = self.name(&format!("{cbn}.{stat}"));
                match buffers.get(&name) {
                    Some(t) if t.shape() == (1, f) => {}
                    _ => return Err(Error::Checkpoint(format!("missing or misshapen buffer {name}"))),
                }
            }
        }
        Ok(())
    }

    fn cbn<'a>(&self, params: &'a ParamSet, buffers: &'a Buffers, cbn: &str) -> CbnParams<'a> {
        let buf = |stat: &str| {
            let name = self.name(&format!("{cbn}.{stat}"));
            buffers
                .get(&name)
                .unwrap_or_else(|| panic!("buffer {name:?} is not registered"))
        };
        CbnParams {
            gamma_w: params.value(&self.name(&format!("{cbn}.gamma_w"))),
            gamma_b: params.value(&self.name(&format!("{cbn}.gamma_b"))),
            beta_w: params.value(&self.name(&format!("{cbn}.beta_w"))),
            beta_b: params.value(&self.name(&format!("{cbn}.beta_b"))),
            running_mean: buf("running_mean"),
            running_var: buf("running_var"),
            eps: CBN_EPS,
        }
    }

    fn dense(&self, params: &ParamSet, layer: &str, x: &Tensor2) -> Result<Tensor2> {
        dense_forward(
            x,
            params.value(&self.name(&format!("{layer}.w"))),
            params.value(&self.name(&format!("{layer}.b"))),
        )
    }

    /// Occupancy probabilities for `points` (`N x 3`) conditioned on
    /// `latents` (`S x L`, each owning `N / S` consecutive points).
    pub fn forward(
        &self,
        params: &ParamSet,
        buffers: &Buffers,
        points: &Tensor2,
        latents: &Tensor2,
        mode: NormMode,
    ) -> Result<(Tensor2, DecoderCache)> {
        if points.cols() != 3 {
            return Err(Error::Shape {
                op: "decoder points",
                left: (points.rows(), 3),
                right: points.shape(),
            });
        }
        if latents.cols() != self.cfg.latent_dim {
            return Err(Error::Shape {
                op: "decoder latent",
                left: (latents.rows(), self.cfg.latent_dim),
                right: latents.shape(),
            });
        }
        let mut h = self.dense(params, "fc_in", points)?;
        let mut blocks = Vec::with_capacity(self.cfg.blocks);
        for i in 0..self.cfg.blocks {
            let (a1, n1) = cbn_forward(&h, latents, &self.cbn(params, buffers, &format!("block{i}.cbn0")), mode)?;
            let r1 = relu(&a1);
            let z1 = self.dense(params, &format!("block{i}.fc0"), &r1)?;
            let (a2, n2) = cbn_forward(&z1, latents, &self.cbn(params, buffers, &format!("block{i}.cbn1")), mode)?;
            let r2 = relu(&a2);
            let z2 = self.dense(params, &format!("block{i}.fc1"), &r2)?;
            let mut next = z2;
            next.add_assign(&h);
            blocks.push(BlockCache {
                n1,
                a1,
                r1,
                n2,
                a2,
                r2,
            });
            h = next;
        }
        let (a_out, n_out) = cbn_forward(&h, latents, &self.cbn(params, buffers, "cbn_out"), mode)?;
        let r_out = relu(&a_out);
        let logits = self.dense(params, "fc_out", &r_out)?;
        let probs = sigmoid(&logits);
        let cache = DecoderCache {
            points: points.clone(),
            blocks,
            n_out,
            a_out,
            r_out,
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Back-propagates `d_probs`; returns parameter gradients and the
    /// gradient with respect to the latents.
    pub fn backward(
        &self,
        params: &ParamSet,
        buffers: &Buffers,
        cache: &DecoderCache,
        d_probs: &Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        let mut grads = Gradients::new();
        let d_logits = sigmoid_backward(&cache.probs, d_probs);
        let g = dense_backward(&cache.r_out, params.value(&self.name("fc_out.w")), &d_logits)?;
        grads.push(self.name("fc_out.w"), g.dw);
        grads.push(self.name("fc_out.b"), g.db);
        let da = relu_backward(&cache.a_out, &g.dx);
        let cg = cbn_backward(&cache.n_out, &self.cbn(params, buffers, "cbn_out"), &da)?;
        let (mut d_latent, mut dh) = self.push_cbn(&mut grads, "cbn_out", cg);

        for i in (0..self.cfg.blocks).rev() {
            let b = &cache.blocks[i];
            // residual branch
            let g2 = dense_backward(&b.r2, params.value(&self.name(&format!("block{i}.fc1.w"))), &dh)?;
            grads.push(self.name(&format!("block{i}.fc1.w")), g2.dw);
            grads.push(self.name(&format!("block{i}.fc1.b")), g2.db);
            let da2 = relu_backward(&b.a2, &g2.dx);
            let c2 = cbn_backward(&b.n2, &self.cbn(params, buffers, &format!("block{i}.cbn1")), &da2)?;
            let (dl2, d_in2) = self.push_cbn(&mut grads, &format!("block{i}.cbn1"), c2);
            d_latent.add_assign(&dl2);
            let g1 = dense_backward(&b.r1, params.value(&self.name(&format!("block{i}.fc0.w"))), &d_in2)?;
            grads.push(self.name(&format!("block{i}.fc0.w")), g1.dw);
            grads.push(self.name(&format!("block{i}.fc0.b")), g1.db);
            let da1 = relu_backward(&b.a1, &g1.dx);
            let c1 = cbn_backward(&b.n1, &self.cbn(params, buffers, &format!("block{i}.cbn0")), &da1)?;
            let (dl1, d_in1) = self.push_cbn(&mut grads, &format!("block{i}.cbn0"), c1);
            d_latent.add_assign(&dl1);
            // skip connection
            dh.add_assign(&d_in1);
        }
        let g = dense_backward(&cache.points, params.value(&self.name("fc_in.w")), &dh)?;
        grads.push(self.name("fc_in.w"), g.dw);
        grads.push(self.name("fc_in.b"), g.db);
        Ok((grads, d_latent))
    }

    /// Moves the parameter gradients into `grads`; returns the latent and
    /// input gradients.
    fn push_cbn(&self, grads: &mut Gradients, cbn: &str, g: crate::nn::CbnGrads) -> (Tensor2, Tensor2) {
        grads.push(self.name(&format!("{cbn}.gamma_w")), g.d_gamma_w);
        grads.push(self.name(&format!("{cbn}.gamma_b")), g.d_gamma_b);
        grads.push(self.name(&format!("{cbn}.beta_w")), g.d_beta_w);
        grads.push(self.name(&format!("{cbn}.beta_b")), g.d_beta_b);
        (g.d_latent, g.d_in)
    }

    /// Folds the batch moments of a train-mode pass into the running stats.
    pub fn update_running_stats(&self, buffers: &mut Buffers, cache: &DecoderCache) {
        let mut apply = |cbn: &str, c: &CbnCache| {
            let mean_name = self.name(&format!("{cbn}.running_mean"));
            let var_name = self.name(&format!("{cbn}.running_var"));
            let mut mean = buffers[&mean_name].clone();
            let mut var = buffers[&var_name].clone();
            update_running_stats(c, &mut mean, &mut var);
            buffers[&mean_name] = mean;
            buffers[&var_name] = var;
        };
        for (i, b) in cache.blocks.iter().enumerate() {
            apply(&format!("block{i}.cbn0"), &b.n1);
            apply(&format!("block{i}.cbn1"), &b.n2);
        }
        apply("cbn_out", &cache.n_out);
    }
}
