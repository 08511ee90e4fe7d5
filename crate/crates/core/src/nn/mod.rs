//! Dense neural-network substrate: matrices, layers with hand-written
//! backward passes, conditional batch normalization, losses, Adam, and the
//! checkpoint container.

mod adam;
pub mod cbn;
pub mod checkpoint;
pub mod conv;
pub mod layers;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cbn::{cbn_backward, cbn_forward, CbnCache, CbnGrads, CbnParams, NormMode, CBN_EPS};
pub use checkpoint::Checkpoint;
pub use layers::{
    bce_loss, dense_backward, dense_forward, relu, relu_backward, sigmoid, sigmoid_backward,
    DenseGrads,
};
pub use params::{Buffers, Param, ParamSet};
pub use tensor::Tensor2;
