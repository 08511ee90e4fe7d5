//! Builds a point-cloud occupancy network, fits it to a single sphere with a
//! hand-written training loop, round-trips it through a checkpoint and
//! extracts its surface.

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use doccnet::dataset::{ground_truth_mesh, sample_queries, Primitive, ShapeSpec};
use doccnet::extraction::{extract_mesh, MiseConfig};
use doccnet::models::{Architecture, EncoderInput, OccupancyNetwork};
use doccnet::nn::{bce_loss, AdamConfig, AdamState, Checkpoint, NormMode, Tensor2};
use doccnet::pointcloud_conv::mesh_to_pointcloud;

fn main() -> doccnet::Result<()> {
    let spec = ShapeSpec::primitive(Primitive::Sphere { radius: 0.3 });
    let cloud = mesh_to_pointcloud(&ground_truth_mesh(&spec)?, 300, 0)?;
    let input = EncoderInput::Cloud(cloud);

    let mut net = OccupancyNetwork::new(Architecture::stage2(), 0)?;
    let mut adam = AdamState::new(AdamConfig {
        lr: 1e-3,
        ..Default::default()
    });
    println!("{} trainable scalars", net.params.scalar_count());

    for step in 0..=150 {
        let q = sample_queries(&spec, 256, step)?;
        let flat: Vec<f64> = q.points.iter().flat_map(|p| p.to_array()).collect();
        let points = Tensor2::from_vec(q.points.len(), 3, flat)?;
        let labels = Tensor2::from_vec(q.labels.len(), 1, q.labels.clone())?;

        let (latent, enc_cache) = net.encode(&[&input])?;
        let (probs, dec_cache) = net.decode(&points, &latent, NormMode::Train)?;
        let (loss, d_probs) = bce_loss(&probs, &labels)?;
        let (dec_grads, d_latent) = net.decode_backward(&dec_cache, &d_probs)?;
        dec_grads.accumulate_into(&mut net.params)?;
        net.encode_backward(&enc_cache, &d_latent)?.accumulate_into(&mut net.params)?;
        let decoder = net.decoder().clone();
        decoder.update_running_stats(&mut net.buffers, &dec_cache);
        adam.step(&mut net.params);
        if step % 25 == 0 {
            println!("step {step:>3} loss {loss:.4}");
        }
    }

    let bytes = net.to_checkpoint(Some(&adam), None).to_bytes();
    let restored = OccupancyNetwork::from_checkpoint(&Checkpoint::from_bytes(&bytes)?)?;
    println!("checkpoint: {} bytes, parameters identical {}", bytes.len(), restored.params == net.params);

    let field = restored.field(restored.latent(&input)?)?;
    let mesh = extract_mesh(&field, &MiseConfig { r0: 16, steps: 1, tau: 0.5 })?;
    println!(
        "extracted {} triangles, watertight {}, volume {:.4} (sphere {:.4})",
        mesh.triangles().len(),
        mesh.is_watertight(),
        mesh.volume(),
        4.0 / 3.0 * std::f64::consts::PI * 0.3f64.powi(3)
    );
    Ok(())
}
