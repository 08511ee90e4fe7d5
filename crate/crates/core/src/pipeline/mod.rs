//! Training of both networks, the single- and two-network reconstruction
//! chains, and scoring against analytic ground truth.

mod reconstruct;
mod train;

pub use reconstruct::{
    doccnet_from_mesh, evaluate_run, load_network, reconstruct, reconstruct_doccnet, reconstruct_occnet, DOccNetOutput,
    EvalSettings, Pipeline, PipelineConfig, Reconstruction,
};
pub use train::{
    draw_minibatch, evaluate_items, prepare_item, prepare_items, train, train_stage1, train_stage2, train_step,
    train_with, LogRecord, Minibatch, Stage, TrainConfig, TrainItem, TrainOutcome,
};
