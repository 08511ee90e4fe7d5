mod common;

use common::grad;

fn assert_report(r: grad::GradReport) {
    assert!(r.scalars > 0, "{}: nothing checked", r.name);
    assert!(r.passed(), "{}: worst relative error {:e} at {}", r.name, r.worst, r.worst_at);
}

#[test]
fn dense_gradients() {
    for seed in 0..3 {
        assert_report(grad::dense(seed));
    }
}

#[test]
fn relu_gradients() {
    assert_report(grad::relu_layer(1));
}

#[test]
fn sigmoid_gradients() {
    assert_report(grad::sigmoid_layer(2));
}

#[test]
fn bce_gradients() {
    assert_report(grad::bce(3));
}

#[test]
fn cbn_gradients_train_mode() {
    for seed in 0..3 {
        assert_report(grad::cbn(seed, doccnet::nn::NormMode::Train));
    }
}

#[test]
fn cbn_gradients_eval_mode() {
    assert_report(grad::cbn(4, doccnet::nn::NormMode::Eval));
}

#[test]
fn image_model_gradients() {
    assert_report(grad::image_model(5));
}

#[test]
fn pointnet_model_gradients() {
    assert_report(grad::pointnet_model(6));
}

#[test]
fn suite_reports_every_layer() {
    let names: Vec<String> = grad::suite(7).into_iter().map(|r| r.name).collect();
    for want in ["dense", "relu", "sigmoid", "bce", "cbn (batch moments)", "image encoder + decoder"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
}

#[test]
fn checker_catches_a_wrong_gradient() {
    let mut ps = doccnet::nn::ParamSet::new();
    ps.insert("x", doccnet::nn::Tensor2::from_rows(&[&[0.7, -1.2]])).unwrap();
    let wrong = vec![("x".to_string(), doccnet::nn::Tensor2::from_rows(&[&[1.4, -2.0]]))];
    let r = grad::check("square", &mut ps, |p| p.value("x").data().iter().map(|v| v * v).sum(), &wrong);
    assert!(!r.passed());
}
