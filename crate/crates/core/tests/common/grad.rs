//! Central finite-difference checks of every hand-written backward pass.

use doccnet::models::{Architecture, EncoderInput, EncoderSpec, OccupancyNetwork, Widths};
use doccnet::nn::{
    bce_loss, cbn_backward, cbn_forward, dense_backward, dense_forward, relu, relu_backward,
    sigmoid, sigmoid_backward, CbnParams, NormMode, ParamSet, Tensor2, CBN_EPS,
};
use doccnet::dataset::Silhouette;
use doccnet::geometry::{PointCloud, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely.
const FLOOR: f64 = 1e-6;

/// Worst relative error over every scalar of one check.
#[derive(Debug, Clone)]
pub struct GradReport {
    pub name: String,
    pub worst: f64,
    pub worst_at: String,
    pub scalars: usize,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.worst <= TOLERANCE
    }
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Compares `analytic` against central differences of `loss` for every entry
/// of every tensor in `vars`.
pub fn check(
    name: &str,
    vars: &mut ParamSet,
    loss: impl Fn(&ParamSet) -> f64,
    analytic: &[(String, Tensor2)],
) -> GradReport {
    let mut report = GradReport {
        name: name.to_string(),
        worst: 0.0,
        worst_at: String::new(),
        scalars: 0,
    };
    let names: Vec<String> = vars.names().map(str::to_string).collect();
    for var in names {
        let g = &analytic
            .iter()
            .find(|(n, _)| *n == var)
            .unwrap_or_else(|| panic!("{name}: no analytic gradient for {var}"))
            .1;
        assert_eq!(g.shape(), vars.value(&var).shape(), "{name}: {var} gradient shape");
        for i in 0..g.len() {
            let orig = vars.value(&var).data()[i];
            vars.value_mut(&var).data_mut()[i] = orig + STEP;
            let up = loss(vars);
            vars.value_mut(&var).data_mut()[i] = orig - STEP;
            let down = loss(vars);
            vars.value_mut(&var).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let err = relative_error(g.data()[i], numeric);
            report.scalars += 1;
            if err > report.worst || report.worst_at.is_empty() {
                report.worst = err.max(report.worst);
                report.worst_at = format!("{var}[{i}] analytic {:e} numeric {numeric:e}", g.data()[i]);
            }
        }
    }
    report
}

fn vars(entries: Vec<(&str, Tensor2)>) -> ParamSet {
    let mut ps = ParamSet::new();
    for (n, t) in entries {
        ps.insert(n, t).unwrap();
    }
    ps
}

/// Weighted sum `Σ y ⊙ r`, a loss whose gradient with respect to `y` is `r`.
fn probe(y: &Tensor2, r: &Tensor2) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

pub fn dense(seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random(&mut rng, 5, 3, 1.0);
    let mut v = vars(vec![
        ("x", random(&mut rng, 5, 4, 1.0)),
        ("w", random(&mut rng, 4, 3, 1.0)),
        ("b", random(&mut rng, 1, 3, 1.0)),
    ]);
    let g = dense_backward(v.value("x"), v.value("w"), &r).unwrap();
    let analytic = vec![("x".into(), g.dx), ("w".into(), g.dw), ("b".into(), g.db)];
    check(
        "dense",
        &mut v,
        |p| probe(&dense_forward(p.value("x"), p.value("w"), p.value("b")).unwrap(), &r),
        &analytic,
    )
}

pub fn relu_layer(seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random(&mut rng, 6, 4, 1.0);
    // keep inputs away from the kink so the difference quotient is exact
    let x = random(&mut rng, 6, 4, 1.0).map(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
    let mut v = vars(vec![("x", x)]);
    let analytic = vec![("x".into(), relu_backward(v.value("x"), &r))];
    check("relu", &mut v, |p| probe(&relu(p.value("x")), &r), &analytic)
}

pub fn sigmoid_layer(seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random(&mut rng, 6, 4, 1.0);
    let mut v = vars(vec![("x", random(&mut rng, 6, 4, 4.0))]);
    let p = sigmoid(v.value("x"));
    let analytic = vec![("x".into(), sigmoid_backward(&p, &r))];
    check("sigmoid", &mut v, |p| probe(&sigmoid(p.value("x")), &r), &analytic)
}

pub fn bce(seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random(&mut rng, 7, 1, 0.45).map(|v| v + 0.5);
    let y = Tensor2::from_vec(7, 1, (0..7).map(|i| (i % 2) as f64).collect()).unwrap();
    let mut v = vars(vec![("p", p)]);
    let (_, dp) = bce_loss(v.value("p"), &y).unwrap();
    check("bce", &mut v, |p| bce_loss(p.value("p"), &y).unwrap().0, &[("p".into(), dp)])
}

/// CBN with two latents over eight rows, gradients for the input, the latent
/// codes and all four affine maps.
pub fn cbn(seed: u64, mode: NormMode) -> GradReport {
    let (n, f, l, s) = (8, 5, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random(&mut rng, n, f, 1.0);
    let running_mean = random(&mut rng, 1, f, 0.5);
    let running_var = random(&mut rng, 1, f, 0.5).map(|v| v + 1.0);
    let mut v = vars(vec![
        ("x", random(&mut rng, n, f, 1.0)),
        ("c", random(&mut rng, s, l, 1.0)),
        ("gamma_w", random(&mut rng, l, f, 0.5)),
        ("gamma_b", random(&mut rng, 1, f, 0.5).map(|v| v + 1.0)),
        ("beta_w", random(&mut rng, l, f, 0.5)),
        ("beta_b", random(&mut rng, 1, f, 0.5)),
    ]);
    let params = |p: &ParamSet| -> (Tensor2, Tensor2, Tensor2, Tensor2) {
        (
            p.value("gamma_w").clone(),
            p.value("gamma_b").clone(),
            p.value("beta_w").clone(),
            p.value("beta_b").clone(),
        )
    };
    let forward = |p: &ParamSet| {
        let (gw, gb, bw, bb) = params(p);
        let cp = CbnParams {
            gamma_w: &gw,
            gamma_b: &gb,
            beta_w: &bw,
            beta_b: &bb,
            running_mean: &running_mean,
            running_var: &running_var,
            eps: CBN_EPS,
        };
        let (out, cache) = cbn_forward(p.value("x"), p.value("c"), &cp, mode).unwrap();
        let grads = cbn_backward(&cache, &cp, &r).unwrap();
        (out, grads)
    };
    let (_, g) = forward(&v);
    let analytic = vec![
        ("x".into(), g.d_in),
        ("c".into(), g.d_latent),
        ("gamma_w".into(), g.d_gamma_w),
        ("gamma_b".into(), g.d_gamma_b),
        ("beta_w".into(), g.d_beta_w),
        ("beta_b".into(), g.d_beta_b),
    ];
    let name = match mode {
        NormMode::Train => "cbn (batch moments)",
        NormMode::Eval => "cbn (running moments)",
    };
    check(name, &mut v, |p| probe(&forward(p).0, &r), &analytic)
}

/// Adds uniform noise to every parameter so that zero-initialized maps do not
/// hide gradient paths.
fn perturb(net: &mut OccupancyNetwork, rng: &mut ChaCha8Rng, scale: f64) {
    for (_, p) in net.params.iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
}

fn model_check(name: &str, mut net: OccupancyNetwork, inputs: Vec<EncoderInput>, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb(&mut net, &mut rng, 0.3);
    let n = 8;
    let points = random(&mut rng, n, 3, 0.5);
    let labels = Tensor2::from_vec(n, 1, (0..n).map(|_| f64::from(rng.gen::<bool>() as u8)).collect()).unwrap();
    let refs: Vec<&EncoderInput> = inputs.iter().collect();

    let (lat, enc_cache) = net.encode(&refs).unwrap();
    let (probs, dec_cache) = net.decode(&points, &lat, NormMode::Train).unwrap();
    let (_, dp) = bce_loss(&probs, &labels).unwrap();
    let (mut grads, d_lat) = net.decode_backward(&dec_cache, &dp).unwrap();
    grads.extend(net.encode_backward(&enc_cache, &d_lat).unwrap());

    let template = net.clone();
    let loss = |p: &ParamSet| {
        let mut probe_net = template.clone();
        probe_net.params = p.clone();
        let (lat, _) = probe_net.encode(&refs).unwrap();
        let (probs, _) = probe_net.decode(&points, &lat, NormMode::Train).unwrap();
        bce_loss(&probs, &labels).unwrap().0
    };
    let mut params = net.params.clone();
    check(name, &mut params, loss, &grads.0)
}

fn small_arch(stage: u8, encoder: Vec<usize>, spec: EncoderSpec) -> Architecture {
    Architecture {
        stage,
        latent_dim: 16,
        blocks: 2,
        widths: Widths { decoder: 16, encoder },
        encoder: spec,
    }
}

/// Silhouette encoder plus decoder on two 8x8 images.
pub fn image_model(seed: u64) -> GradReport {
    let arch = small_arch(1, vec![2, 4], EncoderSpec::Image { resolution: 8 });
    let net = OccupancyNetwork::new(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5);
    let inputs = (0..2)
        .map(|_| {
            let px = (0..64).map(|_| rng.gen_range(0..2u8)).collect();
            EncoderInput::Silhouette(Silhouette::new(8, px).unwrap())
        })
        .collect();
    model_check("image encoder + decoder", net, inputs, seed)
}

/// Point-cloud encoder plus decoder on two 10-point clouds.
pub fn pointnet_model(seed: u64) -> GradReport {
    let arch = small_arch(2, vec![4, 8, 16], EncoderSpec::Pointnet { points: 10 });
    let net = OccupancyNetwork::new(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a);
    let inputs = (0..2)
        .map(|_| {
            let pts = (0..10)
                .map(|_| Point3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                .collect();
            EncoderInput::Cloud(PointCloud::new(pts).unwrap())
        })
        .collect();
    model_check("point encoder + decoder", net, inputs, seed)
}

/// Every check of the suite.
pub fn suite(seed: u64) -> Vec<GradReport> {
    vec![
        dense(seed),
        relu_layer(seed),
        sigmoid_layer(seed),
        bce(seed),
        cbn(seed, NormMode::Train),
        cbn(seed, NormMode::Eval),
        image_model(seed),
        pointnet_model(seed),
    ]
}
