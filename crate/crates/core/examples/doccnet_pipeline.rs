//! Trains both networks on the five fixed shapes, then compares the
//! single-network and two-network reconstructions of every shape.
//!
//! Usage: cargo run --release --example doccnet_pipeline -- [steps] [queries]

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::time::Instant;

use doccnet::dataset::{overfit_shapes, Dataset, GenConfig};
use doccnet::extraction::MiseConfig;
use doccnet::models::OccupancyNetwork;
use doccnet::pipeline::{
    evaluate_run, prepare_items, reconstruct_doccnet, reconstruct_occnet, train, EvalSettings, Pipeline, Stage,
    TrainConfig,
};

fn main() -> doccnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let steps = args.first().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let queries = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let data = Dataset::from_specs(&overfit_shapes(), &GenConfig::default())?;
    let cfg = TrainConfig {
        max_steps: steps,
        queries_per_shape: queries,
        eval_every: 100,
        ..Default::default()
    };

    let mut nets = Vec::new();
    for stage in [Stage::One, Stage::Two] {
        let start = Instant::now();
        let (train_items, val_items) = prepare_items(&data, stage, &cfg)?;
        let outcome = train(stage, &train_items, &val_items, &cfg)?;
        let last = outcome.log.last().expect("at least one evaluation");
        println!(
            "{stage:?}: {} steps in {:.0}s, best step {}, final accuracy {:.4}",
            outcome.steps_run,
            start.elapsed().as_secs_f64(),
            outcome.best_step,
            last.val_acc
        );
        nets.push(OccupancyNetwork::from_checkpoint(&outcome.checkpoint)?);
    }
    let stage2 = nets.pop().expect("two networks");
    let stage1 = nets.pop().expect("two networks");
    let pipeline = Pipeline::new(stage1, stage2, MiseConfig::default(), 300, 0)?;

    println!("{:<10} {:>22} {:>22}", "shape", "occnet iou/cd/nc", "d-occnet iou/cd/nc");
    for sample in &data.samples {
        let single = reconstruct_occnet(&sample.silhouette, &pipeline.stage1, &pipeline.mise)?;
        let chained = reconstruct_doccnet(&sample.silhouette, &pipeline)?;
        let settings = EvalSettings::default();
        let a = evaluate_run(&single.mesh, &sample.spec, &settings)?;
        let b = evaluate_run(&chained.mesh, &sample.spec, &settings)?;
        println!(
            "{:<10} {:>6.3} {:>7.4} {:>6.3} {:>6.3} {:>7.4} {:>6.3}",
            sample.spec.kind().name(),
            a.iou,
            a.chamfer_l1,
            a.normal_consistency,
            b.iou,
            b.chamfer_l1,
            b.normal_consistency
        );
    }
    Ok(())
}
