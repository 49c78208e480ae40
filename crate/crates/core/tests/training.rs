use nalgebra::{DMatrix, DVector};
use orthonn::data::{normalize_rows, split, toy_pca4, two_class, Dataset};
use orthonn::linalg::row_defect;
use orthonn::pyramid::{extract_matrix, forward, PyramidLayer};
use orthonn::shots::ShotPlan;
use orthonn::training::{
    evaluate_network, forward_network, network_gradient, pyramid_backprop, pyramid_forward, sample_loss, train,
    train_with_observer, Activation, DenseLayer, Exec, Layer, LayerGrad, LayerSpec, Loss, Network, Regime,
    TimestepTrace, TrainConfig,
};
use orthonn::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const H: f64 = 1e-6;
/// Gradients smaller than this are compared absolutely: central differences
/// at h = 1e-6 carry ~1e-10 absolute roundoff.
const FD_FLOOR: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_layer(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize) -> PyramidLayer<f64> {
    let count = orthonn::pyramid::param_count(n_in, n_out);
    let thetas = (0..count).map(|_| rng.random_range(-3.2..3.2)).collect();
    PyramidLayer::new(n_in, n_out, thetas, rng.random_bool(0.5)).unwrap()
}

/// C = δ·(W(θ) x): its angle gradients via central differences.
fn fd_layer_gradient(layer: &PyramidLayer<f64>, x: &[f64], delta: &[f64]) -> Vec<f64> {
    let cost = |l: &PyramidLayer<f64>| -> f64 { l.apply_linear(x).unwrap().iter().zip(delta).map(|(y, d)| y * d).sum() };
    (0..layer.thetas.len())
        .map(|k| {
            let mut p = layer.clone();
            p.thetas[k] += H;
            let mut m = layer.clone();
            m.thetas[k] -= H;
            (cost(&p) - cost(&m)) / (2.0 * H)
        })
        .collect()
}

#[test]
fn single_gate_closed_form() {
    for &theta in &[0.0, 0.4, -1.3, 2.9] {
        let layer = PyramidLayer::new(2, 2, vec![theta], false).unwrap();
        let x = [0.7, -0.2];
        let (_, trace) = pyramid_forward(&layer, &x).unwrap();
        let (g, _) = pyramid_backprop(&layer, &trace, &[1.0, 0.0]).unwrap();
        let expect = -f64::sin(theta) * x[0] + f64::cos(theta) * x[1];
        assert!((g[0] - expect).abs() < 1e-15);
    }
}

#[test]
fn zero_deltas_give_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layer = random_layer(&mut rng, 7, 7);
    let (_, trace) = pyramid_forward(&layer, &gaussian(&mut rng, 7)).unwrap();
    let (g, d) = pyramid_backprop(&layer, &trace, &[0.0; 7]).unwrap();
    assert!(g.iter().chain(&d).all(|&v| v == 0.0));
}

#[test]
fn trace_must_match_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_layer(&mut rng, 6, 6);
    let b = random_layer(&mut rng, 5, 5);
    let (_, trace) = pyramid_forward(&b, &gaussian(&mut rng, 5)).unwrap();
    assert!(matches!(pyramid_backprop(&a, &trace, &[1.0; 6]), Err(Error::TraceMismatch(_))));
    assert!(matches!(pyramid_backprop(&a, &TimestepTrace::default(), &[1.0; 6]), Err(Error::TraceMismatch(_))));
}

#[test]
fn trace_inner_layers_chain_by_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let layer = random_layer(&mut rng, 6, 6);
    let x = gaussian(&mut rng, 6);
    let (y, trace) = pyramid_forward(&layer, &x).unwrap();
    assert_eq!(trace.len(), layer.layout().steps().len() + 1);
    assert_eq!(trace.inner_layer(0), &x[..]);
    let mut k = 0;
    for (lambda, step) in layer.layout().steps().iter().enumerate() {
        let mut v = trace.inner_layer(lambda).to_vec();
        for &i in step {
            orthonn::unary::RbsGate::new(i, i + 1, layer.thetas[k]).apply(&mut v);
            k += 1;
        }
        assert_eq!(v, trace.inner_layer(lambda + 1));
    }
    assert!(orthonn::scalar::max_abs_diff(&y, &forward(&layer, &x).unwrap()) < 1e-12);
}

#[test]
fn square_layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layer = random_layer(&mut rng, 8, 8);
    let x = gaussian(&mut rng, 8);
    let delta = gaussian(&mut rng, 8);
    let (_, trace) = pyramid_forward(&layer, &x).unwrap();
    let (g, d0) = pyramid_backprop(&layer, &trace, &delta).unwrap();
    for (a, b) in g.iter().zip(fd_layer_gradient(&layer, &x, &delta)) {
        assert!(rel_err(*a, b) < 1e-5, "{a} vs {b}");
    }
    // δ⁰ = Wᵀ δ
    let w = extract_matrix(&layer).into_inner();
    let expect = w.transpose() * DVector::from_vec(delta);
    assert!(orthonn::scalar::max_abs_diff(&d0, expect.as_slice()) < 1e-12);
}

#[test]
fn rectangular_layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n_in, n_out) in [(8, 4), (5, 1), (9, 2), (3, 2)] {
        let layer = random_layer(&mut rng, n_in, n_out);
        let x = gaussian(&mut rng, n_in);
        let delta = gaussian(&mut rng, n_out);
        let (_, trace) = pyramid_forward(&layer, &x).unwrap();
        let (g, d0) = pyramid_backprop(&layer, &trace, &delta).unwrap();
        for (a, b) in g.iter().zip(fd_layer_gradient(&layer, &x, &delta)) {
            assert!(rel_err(*a, b) < 1e-5, "{n_in}x{n_out}: {a} vs {b}");
        }
        let w = extract_matrix(&layer).into_inner();
        let expect = w.transpose() * DVector::from_vec(delta);
        assert!(orthonn::scalar::max_abs_diff(&d0, expect.as_slice()) < 1e-12);
    }
}

fn fd_network_check(net: &Network<f64>, x: &[f64], label: u8) {
    let (_, grads) = network_gradient(net, x, label, 0).unwrap();
    let loss_at = |n: &Network<f64>| sample_loss(n, x, label, 0).unwrap();
    for (k, g) in grads.layers.iter().enumerate() {
        match g {
            LayerGrad::Pyramid(g) => {
                for (j, &a) in g.iter().enumerate() {
                    let mut p = net.clone();
                    let mut m = net.clone();
                    if let (Layer::Pyramid(lp), Layer::Pyramid(lm)) = (p.layer_mut(k), m.layer_mut(k)) {
                        lp.thetas[j] += H;
                        lm.thetas[j] -= H;
                    }
                    let fd = (loss_at(&p) - loss_at(&m)) / (2.0 * H);
                    assert!(rel_err(a, fd) < 1e-5, "layer {k} angle {j}: {a} vs {fd}");
                }
            }
            LayerGrad::Dense { weights, bias } => {
                for idx in 0..weights.len() + bias.len() {
                    let bump = |n: &mut Network<f64>, h: f64| {
                        if let Layer::Dense(d) = n.layer_mut(k) {
                            if idx < d.weights.len() {
                                d.weights[idx] += h;
                            } else {
                                d.bias[idx - d.weights.len()] += h;
                            }
                        }
                    };
                    let mut p = net.clone();
                    bump(&mut p, H);
                    let mut m = net.clone();
                    bump(&mut m, -H);
                    let fd = (loss_at(&p) - loss_at(&m)) / (2.0 * H);
                    let a = if idx < weights.len() { weights[idx] } else { bias[idx - weights.len()] };
                    assert!(rel_err(a, fd) < 1e-5, "layer {k} param {idx}: {a} vs {fd}");
                }
            }
        }
    }
}

#[test]
fn network_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let archs: [&[usize]; 4] = [&[8, 8, 2], &[16, 6, 2], &[5, 1], &[10, 7, 4, 2]];
    for widths in archs {
        for act in [Activation::Sigmoid, Activation::None, Activation::Relu] {
            for loss in [Loss::Bce, Loss::Mse] {
                let x = gaussian(&mut rng, widths[0]);
                let label = rng.random_range(0..2u8);
                let mut p = Network::pyramid(widths, act, &mut rng).unwrap();
                p.loss = loss;
                fd_network_check(&p, &x, label);
                let mut d = Network::dense(widths, act, &mut rng).unwrap();
                d.loss = loss;
                fd_network_check(&d, &x, label);
            }
        }
    }
}

#[test]
fn trivial_forward_cases() {
    let x = [0.3, -1.2, 2.0];
    let id = DenseLayer::new(DMatrix::identity(3, 3), DVector::zeros(3), Exec::Exact).unwrap();
    let head = DenseLayer::new(DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.0]), DVector::zeros(1), Exec::Exact).unwrap();
    let net = Network::new(
        vec![
            LayerSpec { layer: Layer::Dense(id), activation: Activation::None },
            LayerSpec { layer: Layer::Dense(head), activation: Activation::None },
        ],
        Loss::Bce,
    )
    .unwrap();
    let f = forward_network(&net, &x, 0).unwrap();
    assert_eq!(f.trace.layers[0].post, x.to_vec());

    let pyr = PyramidLayer::identity(3, 3).unwrap();
    let net = Network::new(
        vec![
            LayerSpec { layer: Layer::Pyramid(pyr), activation: Activation::Sigmoid },
            LayerSpec { layer: Layer::Pyramid(PyramidLayer::identity(3, 2).unwrap()), activation: Activation::None },
        ],
        Loss::Bce,
    )
    .unwrap();
    let f = forward_network(&net, &x, 0).unwrap();
    let sig: Vec<f64> = x.iter().map(|v: &f64| 1.0 / (1.0 + (-v).exp())).collect();
    assert!(orthonn::scalar::max_abs_diff(&f.trace.layers[0].post, &sig) < 1e-15);
}

#[test]
fn dense_shots_forward_tracks_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let exact = Network::<f64>::dense(&[4, 6, 2], Activation::Sigmoid, &mut rng).unwrap();
    let mut shots = exact.clone();
    shots.set_exec(Exec::Shots(ShotPlan::new(10_000, 3).unwrap()));
    let (mut close, mut total) = (0, 0);
    for s in 0..100 {
        let x = gaussian(&mut rng, 4);
        let a = forward_network(&exact, &x, s).unwrap();
        let b = forward_network(&shots, &x, s).unwrap();
        for (la, lb) in a.trace.layers.iter().zip(&b.trace.layers) {
            for (u, v) in la.post.iter().zip(&lb.post) {
                total += 1;
                close += usize::from((u - v).abs() < 0.05);
            }
        }
    }
    assert!(close as f64 >= 0.95 * total as f64, "{close}/{total}");
}

fn toy_split() -> (Dataset<f64>, Dataset<f64>) {
    let (ds, _) = normalize_rows(&toy_pca4::<f64>()).unwrap();
    split(&ds, 0.3, 11).unwrap()
}

#[test]
fn separable_toy_set_is_learned() {
    // two arcs on opposite sides of a line through the origin
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let a = 0.3 + i as f64 / 40.0;
            if i % 2 == 0 { vec![a.cos(), a.sin()] } else { vec![-a.cos(), -a.sin()] }
        })
        .collect();
    let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
    let ds = Dataset::new(rows, labels).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut net = Network::<f64>::pyramid(&[2, 2], Activation::Sigmoid, &mut rng).unwrap();
    let cfg = TrainConfig { epochs: 200, ..TrainConfig::default() };
    let h = train(&mut net, &ds, &cfg, Regime::Pyramid).unwrap();
    assert_eq!(evaluate_network(&net, &ds, 0).unwrap().acc, 1.0);
    assert!(h.records.last().unwrap().loss < h.records[0].loss);
}

#[test]
fn pyramid_training_keeps_orthogonality_and_is_deterministic() {
    let (train_set, _) = toy_split();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net0 = Network::<f64>::pyramid(&[4, 4, 2], Activation::Sigmoid, &mut rng).unwrap();
    let cfg = TrainConfig { epochs: 5, seed: 3, ..TrainConfig::default() };
    let mut a = net0.clone();
    let mut worst = 0.0f64;
    let ha = train_with_observer(&mut a, &train_set, &cfg, Regime::Pyramid, |_, n| {
        for spec in n.layers() {
            if let Layer::Pyramid(p) = &spec.layer {
                worst = worst.max(row_defect(extract_matrix(p).entries()));
            }
        }
    })
    .unwrap();
    assert!(worst < 1e-10);
    let mut b = net0.clone();
    let hb = train(&mut b, &train_set, &cfg, Regime::Pyramid).unwrap();
    assert_eq!(a, b);
    for (x, y) in ha.records.iter().zip(&hb.records) {
        assert_eq!((x.loss, x.acc, x.auc), (y.loss, y.acc, y.auc));
    }
}

#[test]
fn pyramid_and_matching_dense_share_first_step_loss() {
    let (train_set, _) = toy_split();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pyr = Network::<f64>::pyramid(&[4, 2], Activation::Sigmoid, &mut rng).unwrap();
    let Layer::Pyramid(p) = &pyr.layers()[0].layer else { unreachable!() };
    let w = extract_matrix(p).into_inner();
    let dense = Network::new(
        vec![LayerSpec { layer: Layer::Dense(DenseLayer::new(w, DVector::zeros(2), Exec::Exact).unwrap()), activation: Activation::None }],
        Loss::Bce,
    )
    .unwrap();
    let cfg = TrainConfig { epochs: 1, batch_size: 8, ..TrainConfig::default() };
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    train_with_observer(&mut pyr.clone(), &train_set, &cfg, Regime::Pyramid, |s, _| la.push(s.batch_loss)).unwrap();
    train_with_observer(&mut dense.clone(), &train_set, &cfg, Regime::DenseExact, |s, _| lb.push(s.batch_loss)).unwrap();
    assert!((la[0] - lb[0]).abs() < 1e-12);
}

#[test]
fn regimes_validate_layer_kinds() {
    let (train_set, _) = toy_split();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let mut p = Network::<f64>::pyramid(&[4, 2], Activation::Sigmoid, &mut rng).unwrap();
    assert!(train(&mut p, &train_set, &cfg, Regime::Stiefel).is_err());
    let mut d = Network::<f64>::dense(&[4, 2], Activation::Sigmoid, &mut rng).unwrap();
    assert!(train(&mut d, &train_set, &cfg, Regime::Pyramid).is_err());
    assert!(train(&mut d, &train_set, &cfg, Regime::DenseShots).is_err());
    let bad = TrainConfig { learning_rate: 0.0, ..cfg };
    assert!(train(&mut d, &train_set, &bad, Regime::DenseExact).is_err());
    let wide = two_class::<f64>(10, 3, 1.0, 0).unwrap();
    assert!(matches!(train(&mut d, &wide, &cfg, Regime::DenseExact), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn non_finite_loss_aborts() {
    let (train_set, _) = toy_split();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut d = Network::<f64>::dense(&[4, 2], Activation::None, &mut rng).unwrap();
    if let Layer::Dense(l) = d.layer_mut(0) {
        l.bias[0] = f64::NAN;
    }
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    assert!(matches!(train(&mut d, &train_set, &cfg, Regime::DenseExact), Err(Error::NonFiniteLoss { epoch: 0, step: 0 })));
}

#[test]
fn baselines_track_their_orthogonality_bounds() {
    let (train_set, _) = toy_split();
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let net0 = Network::<f64>::orthogonal_dense(&[4, 4, 2], Activation::Sigmoid, &mut rng).unwrap();
    for (regime, bound) in [(Regime::Stiefel, 1e-10), (Regime::Svb, 2.0 * cfg.svb_epsilon + 1e-4 + 1e-8)] {
        let mut net = net0.clone();
        let mut worst = 0.0f64;
        train_with_observer(&mut net, &train_set, &cfg, regime, |_, n| {
            for spec in n.layers() {
                if let Layer::Dense(d) = &spec.layer {
                    worst = worst.max(row_defect(&d.weights));
                }
            }
        })
        .unwrap();
        assert!(worst <= bound, "{regime}: {worst}");
    }
}

#[test]
fn f32_networks_train() {
    let (ds, _) = normalize_rows(&toy_pca4::<f32>()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut net = Network::<f32>::pyramid(&[4, 4, 2], Activation::Sigmoid, &mut rng).unwrap();
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let h = train(&mut net, &ds, &cfg, Regime::Pyramid).unwrap();
    assert!(h.records.iter().all(|r| r.loss.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backprop_inner_error_is_transpose_action(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_out = rng.random_range(1..=n);
        let layer = random_layer(&mut rng, n, n_out);
        let x = gaussian(&mut rng, n);
        let delta = gaussian(&mut rng, n_out);
        let (y, trace) = pyramid_forward(&layer, &x).unwrap();
        let (_, d0) = pyramid_backprop(&layer, &trace, &delta).unwrap();
        // ⟨δ, W x⟩ = ⟨Wᵀ δ, x⟩
        let lhs: f64 = y.iter().zip(&delta).map(|(a, b)| a * b).sum();
        let rhs: f64 = d0.iter().zip(&x).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn pyramid_step_preserves_orthogonality(n in 2usize..10, seed in any::<u64>(), lr in 0.001f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::<f64>::pyramid(&[n, 2], Activation::Sigmoid, &mut rng).unwrap();
        let x = gaussian(&mut rng, n);
        let (_, g) = network_gradient(&net, &x, 1, 0).unwrap();
        if let (Layer::Pyramid(p), LayerGrad::Pyramid(g)) = (net.layer_mut(0), &g.layers[0]) {
            for (t, d) in p.thetas.iter_mut().zip(g) {
                *t -= lr * d;
            }
            prop_assert!(row_defect(extract_matrix(p).entries()) < 1e-12);
        }
    }
}
