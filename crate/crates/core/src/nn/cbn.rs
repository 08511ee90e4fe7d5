//! Conditional batch normalization.
//!
//! `f_out = γ(c) · (f_in − μ) / sqrt(σ² + ε) + β(c)` where `γ(c) = c W_γ + b_γ`
//! and `β(c) = c W_β + b_β` are affine maps of the latent code.
//!
//! A batch may hold several samples: with `S` latent rows and `N` feature
//! rows, sample `s` owns the contiguous rows `s*N/S .. (s+1)*N/S`. Moments are
//! taken per feature over all `N` rows; the affine part uses each row's own
//! latent.

use super::Tensor2;
use crate::error::{Error, Result};

pub const CBN_EPS: f64 = 1e-5;
/// Weight kept by the running statistics on every update.
pub const RUNNING_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Normalize with the moments of the current batch.
    Train,
    /// Normalize with the running statistics.
    Eval,
}

/// Borrowed view of one CBN layer's parameters and running statistics.
#[derive(Debug, Clone, Copy)]
pub struct CbnParams<'a> {
    /// `L x F`
    pub gamma_w: &'a Tensor2,
    /// `1 x F`
    pub gamma_b: &'a Tensor2,
    pub beta_w: &'a Tensor2,
    pub beta_b: &'a Tensor2,
    /// `1 x F`
    pub running_mean: &'a Tensor2,
    pub running_var: &'a Tensor2,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct CbnCache {
    mode: NormMode,
    /// Normalized input, `N x F`.
    pub xhat: Tensor2,
    /// Per-feature `1/sqrt(σ² + ε)`.
    pub inv_std: Vec<f64>,
    /// Per-feature mean and biased variance actually used.
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// `γ(c)`, `S x F`.
    pub gamma: Tensor2,
    latents: Tensor2,
    group: usize,
}

impl CbnCache {
    pub fn mode(&self) -> NormMode {
        self.mode
    }
}

#[derive(Debug, Clone)]
pub struct CbnGrads {
    pub d_in: Tensor2,
    pub d_gamma_w: Tensor2,
    pub d_gamma_b: Tensor2,
    pub d_beta_w: Tensor2,
    pub d_beta_b: Tensor2,
    pub d_latent: Tensor2,
}

fn check_shapes(f_in: &Tensor2, c: &Tensor2, p: &CbnParams<'_>) -> Result<usize> {
    let f = f_in.cols();
    let l = c.cols();
    let expect = |t: &Tensor2, shape: (usize, usize), op: &'static str| {
        if t.shape() != shape {
            Err(Error::Shape {
                op,
                left: shape,
                right: t.shape(),
            })
        } else {
            Ok(())
        }
    };
    expect(p.gamma_w, (l, f), "cbn gamma weight")?;
    expect(p.beta_w, (l, f), "cbn beta weight")?;
    expect(p.gamma_b, (1, f), "cbn gamma bias")?;
    expect(p.beta_b, (1, f), "cbn beta bias")?;
    expect(p.running_mean, (1, f), "cbn running mean")?;
    expect(p.running_var, (1, f), "cbn running variance")?;
    let s = c.rows();
    if s == 0 || f_in.rows() % s != 0 {
        return Err(Error::Shape {
            op: "cbn rows per latent",
            left: f_in.shape(),
            right: c.shape(),
        });
    }
    Ok(f_in.rows() / s)
}

pub fn cbn_forward(
    f_in: &Tensor2,
    c: &Tensor2,
    p: &CbnParams<'_>,
    mode: NormMode,
) -> Result<(Tensor2, CbnCache)> {
    let group = check_shapes(f_in, c, p)?;
    let (n, f) = f_in.shape();
    let (mean, var) = match mode {
        NormMode::Train => {
            if n < 2 {
                return Err(Error::invalid(
                    "train-mode normalization needs at least 2 rows",
                ));
            }
            batch_moments(f_in)
        }
        NormMode::Eval => (
            p.running_mean.data().to_vec(),
            p.running_var.data().to_vec(),
        ),
    };
    if var.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("negative running variance"));
    }
    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + p.eps).sqrt()).collect();

    let mut gamma = c.matmul(p.gamma_w)?;
    gamma.add_row(p.gamma_b)?;
    let mut beta = c.matmul(p.beta_w)?;
    beta.add_row(p.beta_b)?;

    let mut xhat = Tensor2::zeros(n, f);
    let mut out = Tensor2::zeros(n, f);
    for r in 0..n {
        let s = r / group;
        let (g, b) = (gamma.row(s), beta.row(s));
        let rows = f_in.row(r).iter().zip(xhat.row_mut(r)).zip(out.row_mut(r));
        for ((((x, xh), o), (m, is)), (g, b)) in rows.zip(mean.iter().zip(&inv_std)).zip(g.iter().zip(b)) {
            *xh = (x - m) * is;
            *o = g * *xh + b;
        }
    }
    Ok((
        out,
        CbnCache {
            mode,
            xhat,
            inv_std,
            mean,
            var,
            gamma,
            latents: c.clone(),
            group,
        },
    ))
}

/// Per-feature mean and biased (1/N) variance over rows, two-pass.
pub fn batch_moments(x: &Tensor2) -> (Vec<f64>, Vec<f64>) {
    let (n, f) = x.shape();
    let mut mean = vec![0.0; f];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; f];
    for r in 0..n {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in &mut var {
        *s /= n as f64;
    }
    (mean, var)
}

/// Backward pass, including the dependence of the batch moments on `f_in` in
/// train mode.
pub fn cbn_backward(cache: &CbnCache, p: &CbnParams<'_>, d_out: &Tensor2) -> Result<CbnGrads> {
    d_out.same_shape(&cache.xhat, "cbn_backward")?;
    let (n, f) = d_out.shape();
    let s_count = cache.latents.rows();
    let group = cache.group;

    let mut d_gamma = Tensor2::zeros(s_count, f);
    let mut d_beta = Tensor2::zeros(s_count, f);
    // dxhat = dy * gamma
    let mut g = Tensor2::zeros(n, f);
    for r in 0..n {
        let s = r / group;
        let dy = d_out.row(r);
        let xh = cache.xhat.row(r);
        let gam = cache.gamma.row(s);
        for ((gr, dy), gam) in g.row_mut(r).iter_mut().zip(dy).zip(gam) {
            *gr = dy * gam;
        }
        for ((dg, dy), xh) in d_gamma.row_mut(s).iter_mut().zip(dy).zip(xh) {
            *dg += dy * xh;
        }
        for (db, dy) in d_beta.row_mut(s).iter_mut().zip(dy) {
            *db += dy;
        }
    }

    let mut d_in = Tensor2::zeros(n, f);
    match cache.mode {
        NormMode::Train => {
            let mut sum_g = vec![0.0; f];
            let mut sum_gx = vec![0.0; f];
            for r in 0..n {
                let gr = g.row(r);
                let xh = cache.xhat.row(r);
                for (((sg, sgx), gr), xh) in sum_g.iter_mut().zip(&mut sum_gx).zip(gr).zip(xh) {
                    *sg += gr;
                    *sgx += gr * xh;
                }
            }
            let nf = n as f64;
            for r in 0..n {
                let gr = g.row(r);
                let xh = cache.xhat.row(r);
                let cols = d_in.row_mut(r).iter_mut().zip(gr).zip(xh);
                for ((((d, gr), xh), is), (sg, sgx)) in cols.zip(&cache.inv_std).zip(sum_g.iter().zip(&sum_gx)) {
                    *d = is / nf * (nf * gr - sg - xh * sgx);
                }
            }
        }
        NormMode::Eval => {
            for r in 0..n {
                let gr = g.row(r);
                for ((d, gr), is) in d_in.row_mut(r).iter_mut().zip(gr).zip(&cache.inv_std) {
                    *d = gr * is;
                }
            }
        }
    }

    let mut d_latent = d_gamma.matmul_t(p.gamma_w)?;
    d_latent.add_assign(&d_beta.matmul_t(p.beta_w)?);
    Ok(CbnGrads {
        d_in,
        d_gamma_w: cache.latents.t_matmul(&d_gamma)?,
        d_gamma_b: d_gamma.column_sums(),
        d_beta_w: cache.latents.t_matmul(&d_beta)?,
        d_beta_b: d_beta.column_sums(),
        d_latent,
    })
}

/// Folds a train-mode batch's moments into the running statistics:
/// `run = 0.9 run + 0.1 batch`.
pub fn update_running_stats(cache: &CbnCache, running_mean: &mut Tensor2, running_var: &mut Tensor2) {
    debug_assert_eq!(cache.mode, NormMode::Train);
    let k = RUNNING_MOMENTUM;
    for (r, m) in running_mean.data_mut().iter_mut().zip(&cache.mean) {
        *r = k * *r + (1.0 - k) * m;
    }
    for (r, v) in running_var.data_mut().iter_mut().zip(&cache.var) {
        *r = k * *r + (1.0 - k) * v;
    }
}
