//! Stateless layer kernels with explicit forward and backward passes.

use rand::Rng;

use super::Tensor2;
use crate::error::{Error, Result};

/// Gradients of a fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dx: Tensor2,
    pub dw: Tensor2,
    pub db: Tensor2,
}

/// `y = x W + b`, with `b` broadcast over rows.
pub fn dense_forward(x: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(Error::Shape {
            op: "dense bias",
            left: w.shape(),
            right: b.shape(),
        });
    }
    let mut y = x.matmul(w)?;
    y.add_row(b)?;
    Ok(y)
}

pub fn dense_backward(x: &Tensor2, w: &Tensor2, dy: &Tensor2) -> Result<DenseGrads> {
    if dy.rows() != x.rows() || dy.cols() != w.cols() {
        return Err(Error::Shape {
            op: "dense_backward",
            left: (x.rows(), w.cols()),
            right: dy.shape(),
        });
    }
    Ok(DenseGrads {
        dx: dy.matmul_t(w)?,
        dw: x.t_matmul(dy)?,
        db: dy.column_sums(),
    })
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor2 {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..=limit))
        .collect();
    Tensor2::from_vec(fan_in, fan_out, data).expect("sized buffer")
}

pub fn relu(x: &Tensor2) -> Tensor2 {
    x.map(|v| v.max(0.0))
}

/// Passes `dy` where the forward input was positive.
pub fn relu_backward(x: &Tensor2, dy: &Tensor2) -> Tensor2 {
    x.zip_map(dy, |v, g| if v > 0.0 { g } else { 0.0 })
}

/// Largest and smallest probabilities `sigmoid` will return.
const SIGMOID_HI: f64 = 1.0 - f64::EPSILON / 2.0;
const SIGMOID_LO: f64 = f64::MIN_POSITIVE;

/// Logistic function, evaluated without overflow and kept strictly inside
/// (0, 1) for every finite input.
pub fn sigmoid_scalar(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(SIGMOID_LO, SIGMOID_HI)
}

pub fn sigmoid(x: &Tensor2) -> Tensor2 {
    x.map(sigmoid_scalar)
}

/// Given `p = sigmoid(x)` and `dp`, returns `dx`.
pub fn sigmoid_backward(p: &Tensor2, dp: &Tensor2) -> Tensor2 {
    p.zip_map(dp, |s, g| g * s * (1.0 - s))
}

/// Probability clamp applied before taking logarithms.
pub const BCE_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy and its gradient with respect to `p`.
pub fn bce_loss(p: &Tensor2, y: &Tensor2) -> Result<(f64, Tensor2)> {
    p.same_shape(y, "bce_loss")?;
    let n = p.len().max(1) as f64;
    let mut loss = 0.0;
    let mut dp = Tensor2::zeros(p.rows(), p.cols());
    for ((&pi, &yi), d) in p.data().iter().zip(y.data()).zip(dp.data_mut()) {
        let q = pi.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        loss -= yi * q.ln() + (1.0 - yi) * (1.0 - q).ln();
        *d = (-yi / q + (1.0 - yi) / (1.0 - q)) / n;
    }
    Ok((loss / n, dp))
}
