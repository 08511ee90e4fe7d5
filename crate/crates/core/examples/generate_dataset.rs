//! Generates a small procedural dataset and writes it to disk: one spec,
//! silhouette, point cloud and labelled query set per shape.
//!
//! Usage: cargo run --release --example generate_dataset -- <out_dir> [count]

use doccnet::dataset::{generate_dataset, Dataset, GenConfig, Split};

fn main() -> doccnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "dataset".into());
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = GenConfig {
        count,
        ..Default::default()
    };
    let data = generate_dataset(&cfg)?;
    data.write_to_dir(out.as_ref())?;
    let loaded = Dataset::load(out.as_ref())?;
    println!(
        "{} samples ({} train, {} val) written to {out}",
        loaded.samples.len(),
        loaded.split(Split::Train).len(),
        loaded.split(Split::Val).len()
    );
    for s in loaded.samples.iter().take(5) {
        let inside = s.queries.labels.iter().filter(|&&l| l > 0.5).count();
        println!(
            "{:<14} silhouette {:>4} lit pixels, cloud {} points, {} of {} queries inside",
            s.name,
            s.silhouette.lit_count(),
            s.cloud.len(),
            inside,
            s.queries.labels.len()
        );
    }
    Ok(())
}
