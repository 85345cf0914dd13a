use compo_approx::networks::{init_network, Architecture, Network};
use compo_approx::training::{backprop_grad, batch_loss, sgd_train, Trainable, TrainConfig};
use compo_approx::Samples;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn central_difference(net: &Network, batch: &Samples) -> Vec<f64> {
    let theta = net.params();
    let mut probe = net.clone();
    (0..theta.len())
        .map(|i| {
            let mut p = theta.clone();
            p[i] = theta[i] + H;
            probe.set_params(&p);
            let up = batch_loss(&probe, batch).unwrap();
            p[i] = theta[i] - H;
            probe.set_params(&p);
            let down = batch_loss(&probe, batch).unwrap();
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn random_batch(dim: usize, rows: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..dim * rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ys = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Samples::new(dim, xs, ys).unwrap()
}

fn architectures() -> Vec<(Architecture, usize)> {
    let wide = |a: Architecture| match a {
        Architecture::Shallow { input_dim, units, .. } => Architecture::Shallow {
            input_dim,
            units,
            delta: 0.5,
        },
        other => other,
    };
    vec![
        (Architecture::shallow(1, 6), 1),
        (Architecture::shallow(3, 5), 3),
        (wide(Architecture::shallow(4, 8)), 4),
        (Architecture::deep_tree(2, 3), 2),
        (Architecture::deep_tree(4, 4), 4),
        (Architecture::deep_tree(8, 3), 8),
        (Architecture::mlp(&[1, 6, 1], false), 1),
        (Architecture::mlp(&[3, 5, 4, 1], false), 3),
        (Architecture::mlp(&[2, 6, 5, 1], true), 2),
        (Architecture::mlp(&[1, 4, 4, 3, 1], true), 1),
    ]
}

/// Relative error with a floor on the scale so that vanishing components
/// are compared in absolute terms.
fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn analytic_gradients_match_central_differences() {
    for (k, (arch, dim)) in architectures().into_iter().enumerate() {
        let net = init_network(&arch, 100 + k as u64).unwrap();
        let batch = random_batch(dim, 16, 7 + k as u64);
        let analytic = backprop_grad(&net, &batch).unwrap();
        let numeric = central_difference(&net, &batch);
        assert_eq!(analytic.len(), numeric.len());
        let worst = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| relative_error(*a, *n))
            .fold(0.0, f64::max);
        eprintln!("{}: max relative error {worst:e}", arch.label());
        assert!(worst < 1e-5, "{}: {worst:e}", arch.label());
    }
}

#[test]
fn full_batch_without_momentum_is_gradient_descent() {
    let arch = Architecture::mlp(&[2, 5, 1], false);
    let net = init_network(&arch, 3).unwrap();
    let train = random_batch(2, 40, 11);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        momentum: 0.0,
        batch_size: 40,
        epochs: 25,
        restarts: 1,
        seed: 9,
        test_every: None,
    };
    let report = sgd_train(&net, &train, &cfg, None).unwrap();
    let mut manual = net.clone();
    let mut theta = manual.params();
    for _ in 0..cfg.epochs {
        let g = backprop_grad(&manual, &train).unwrap();
        for (t, g) in theta.iter_mut().zip(&g) {
            *t -= cfg.learning_rate * g;
        }
        manual.set_params(&theta);
    }
    let trained = report.network.params();
    assert!(trained.iter().zip(&theta).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn training_is_deterministic() {
    let arch = Architecture::mlp(&[1, 4, 4, 1], true);
    let net = init_network(&arch, 5).unwrap();
    let train = random_batch(1, 60, 2);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 16,
        epochs: 10,
        restarts: 1,
        seed: 4,
        ..TrainConfig::default()
    };
    let a = sgd_train(&net, &train, &cfg, Some(&train)).unwrap();
    let b = sgd_train(&net, &train, &cfg, Some(&train)).unwrap();
    assert_eq!(a.loss_trace, b.loss_trace);
    assert_eq!(a.network, b.network);
    assert_eq!(a.to_jsonl(), b.to_jsonl());
}
