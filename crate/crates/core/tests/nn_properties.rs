mod common;

use common::checks;
use doccnet::geometry::{Point3, PointCloud};
use doccnet::models::{Architecture, EncoderInput, OccupancyNetwork};
use proptest::prelude::*;

#[test]
fn cbn_identity_parameters_scale_by_eps_factor() {
    let r = checks::cbn_fidelity(11);
    assert!(r.identity_error <= 1e-12, "{r:?}");
}

#[test]
fn cbn_train_mode_normalizes_features() {
    let r = checks::cbn_fidelity(12);
    assert!(r.mean_error <= 1e-9, "{r:?}");
    assert!(r.var_error <= 1e-6, "{r:?}");
    assert!(r.shrink_error <= 1e-12, "{r:?}");
}

#[test]
fn pointnet_latent_is_permutation_invariant() {
    assert_eq!(checks::permutation_mismatches(50, 3), 0);
}

fn stage2() -> &'static OccupancyNetwork {
    static NET: std::sync::OnceLock<OccupancyNetwork> = std::sync::OnceLock::new();
    NET.get_or_init(|| OccupancyNetwork::new(Architecture::stage2(), 9).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reversed_and_rotated_clouds_share_a_latent(
        coords in prop::collection::vec(-0.5f64..0.5, 900),
        shift in 1usize..299,
    ) {
        let pts: Vec<Point3> = coords.chunks(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let mut moved = pts.clone();
        moved.rotate_left(shift);
        moved.reverse();
        let latent = |p: Vec<Point3>| {
            stage2().latent(&EncoderInput::Cloud(PointCloud::new(p).unwrap())).unwrap()
        };
        let (a, b) = (latent(pts), latent(moved));
        prop_assert_eq!(a.as_tensor().data(), b.as_tensor().data());
    }

    #[test]
    fn identical_seeds_give_identical_weights(seed in any::<u64>()) {
        let a = OccupancyNetwork::new(Architecture::stage1(), seed).unwrap();
        let b = OccupancyNetwork::new(Architecture::stage1(), seed).unwrap();
        prop_assert!(a.params == b.params);
    }
}
