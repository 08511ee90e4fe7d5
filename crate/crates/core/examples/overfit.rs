//! Overfits one stage on the five fixed shapes and reports accuracy.
//!
//! Usage: cargo run --release --example overfit -- [stage] [steps] [queries]

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::time::Instant;

use doccnet::dataset::{overfit_shapes, Dataset, GenConfig};
use doccnet::pipeline::{evaluate_items, prepare_items, train, Stage, TrainConfig};

fn main() -> doccnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stage = Stage::from_number(args.first().map_or(Ok(1), |s| s.parse()).unwrap_or(1))?;
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let queries = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(256);

    let data = Dataset::from_specs(&overfit_shapes(), &GenConfig::default())?;
    let cfg = TrainConfig {
        max_steps: steps,
        queries_per_shape: queries,
        eval_every: 100,
        patience: 1000,
        ..Default::default()
    };
    let (train_items, val_items) = prepare_items(&data, stage, &cfg)?;
    let start = Instant::now();
    let outcome = train(stage, &train_items, &val_items, &cfg)?;
    for r in &outcome.log {
        println!(
            "step {:5}  train {:.4}  val {:.4}  acc {:.4}  t={:.0}s",
            r.step,
            r.train_loss,
            r.val_loss,
            r.val_acc,
            start.elapsed().as_secs_f64()
        );
    }
    let net = doccnet::models::OccupancyNetwork::from_checkpoint(&outcome.checkpoint)?;
    let (loss, acc) = evaluate_items(&net, &train_items)?;
    println!("best step {}  loss {loss:.4}  accuracy {acc:.4}", outcome.best_step);
    Ok(())
}
