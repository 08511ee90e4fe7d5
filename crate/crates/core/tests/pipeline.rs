use doccnet::dataset::{ground_truth_mesh, overfit_shapes, Dataset, GenConfig};
use doccnet::extraction::MiseConfig;
use doccnet::models::{Architecture, EncoderInput, OccupancyNetwork};
use doccnet::nn::{AdamState, Checkpoint};
use doccnet::pipeline::{
    draw_minibatch, evaluate_run, load_network, prepare_items, reconstruct, reconstruct_doccnet, train,
    train_step, EvalSettings, Pipeline, Stage, TrainConfig,
};
use doccnet::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset() -> Dataset {
    Dataset::from_specs(&overfit_shapes(), &GenConfig::default()).unwrap()
}

fn short_config(steps: usize) -> TrainConfig {
    TrainConfig {
        max_steps: steps,
        queries_per_shape: 32,
        eval_every: 5,
        cloud_variants: 2,
        seed: 17,
        ..Default::default()
    }
}

#[test]
fn zero_steps_returns_the_initial_network() {
    let data = dataset();
    let cfg = short_config(0);
    let (tr, va) = prepare_items(&data, Stage::One, &cfg).unwrap();
    let out = train(Stage::One, &tr, &va, &cfg).unwrap();
    let init = OccupancyNetwork::new(Architecture::stage1(), cfg.seed).unwrap();
    assert_eq!(out.steps_run, 0);
    assert_eq!(out.checkpoint.params, init.params);
    assert_eq!(out.checkpoint.buffers, init.buffers);
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let data = dataset();
    let cfg = short_config(6);
    for stage in [Stage::One, Stage::Two] {
        let (tr, va) = prepare_items(&data, stage, &cfg).unwrap();
        let a = train(stage, &tr, &va, &cfg).unwrap();
        let b = train(stage, &tr, &va, &cfg).unwrap();
        assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
        assert_eq!(a.log.len(), 2);
        let mut other = cfg.clone();
        other.seed += 1;
        let c = train(stage, &tr, &va, &other).unwrap();
        assert_ne!(a.checkpoint.to_bytes(), c.checkpoint.to_bytes());
    }
}

#[test]
fn loss_decreases_on_a_frozen_minibatch() {
    let data = dataset();
    let cfg = short_config(10);
    let (tr, _) = prepare_items(&data, Stage::One, &cfg).unwrap();
    let batch = draw_minibatch(&tr, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut net = OccupancyNetwork::new(Architecture::stage1(), 5).unwrap();
    let mut adam = AdamState::new(cfg.adam);
    let mut losses = Vec::new();
    for _ in 0..10 {
        losses.push(train_step(&mut net, &batch).unwrap());
        adam.step(&mut net.params);
    }
    for w in losses.windows(2) {
        assert!(w[1] < w[0], "{losses:?}");
    }
}

#[test]
fn checkpoints_survive_a_file_roundtrip() {
    let data = dataset();
    let cfg = short_config(3);
    let (tr, va) = prepare_items(&data, Stage::One, &cfg).unwrap();
    let out = train(Stage::One, &tr, &va, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stage1.ocfk");
    std::fs::write(&path, out.checkpoint.to_bytes()).unwrap();
    let net = load_network(&path).unwrap();
    assert_eq!(net.params, out.checkpoint.params);
    assert!(out.checkpoint.meta["training"].contains("best_step"));
    let again = Checkpoint::from_bytes(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(again.to_bytes(), out.checkpoint.to_bytes());
}

#[test]
fn untrained_networks_produce_no_surface() {
    let data = dataset();
    let stage1 = OccupancyNetwork::new(Architecture::stage1(), 0).unwrap();
    let stage2 = OccupancyNetwork::new(Architecture::stage2(), 0).unwrap();
    let mise = MiseConfig {
        r0: 8,
        steps: 1,
        tau: 0.5,
    };
    let input = EncoderInput::Silhouette(data.samples[0].silhouette.clone());
    let rec = reconstruct(&stage1, &input, &mise, 1).unwrap();
    assert!(rec.empty);
    assert!(rec.mesh.triangles().is_empty());
    let pipeline = Pipeline::new(stage1, stage2, mise, 300, 0).unwrap();
    let err = reconstruct_doccnet(&data.samples[0].silhouette, &pipeline).unwrap_err();
    assert!(matches!(err, Error::Pipeline(_)), "{err}");
}

#[test]
fn pipeline_rejects_swapped_stages() {
    let stage1 = OccupancyNetwork::new(Architecture::stage1(), 0).unwrap();
    let stage2 = OccupancyNetwork::new(Architecture::stage2(), 0).unwrap();
    assert!(Pipeline::new(stage2, stage1, MiseConfig::default(), 300, 0).is_err());
}

#[test]
fn ground_truth_scores_itself_near_perfectly() {
    // independent samplings of one surface sit about 0.6/sqrt(n) apart, so
    // the Chamfer bound needs a dense sampling
    let dense = EvalSettings {
        n_samples: 100_000,
        n_points: 1_000_000,
        seed: 8,
    };
    // a far-off copy makes every nearest-neighbour query expensive
    let sparse = EvalSettings {
        n_points: 20_000,
        ..dense
    };
    for spec in overfit_shapes() {
        let mesh = ground_truth_mesh(&spec).unwrap();
        let r = evaluate_run(&mesh, &spec, &dense).unwrap();
        assert!(r.iou >= 0.99, "{:?}: {r:?}", spec.kind());
        assert!(r.chamfer_l1 <= 1e-3, "{:?}: {r:?}", spec.kind());
        assert!(r.normal_consistency >= 0.99, "{:?}: {r:?}", spec.kind());

        let near = evaluate_run(&mesh, &spec, &sparse).unwrap();
        let moved = mesh.transformed(1.0, doccnet::geometry::Point3::new(0.1, 0.0, 0.0));
        let shifted = evaluate_run(&moved, &spec, &sparse).unwrap();
        assert!(shifted.iou < near.iou, "{:?}: {shifted:?}", spec.kind());
        assert!(shifted.chamfer_l1 > near.chamfer_l1, "{:?}: {shifted:?}", spec.kind());
        assert!(shifted.normal_consistency < near.normal_consistency, "{:?}: {shifted:?}", spec.kind());
    }
}
