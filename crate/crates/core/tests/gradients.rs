mod common;

use common::{
    finite_difference, forward_loss, grad_close, kink_safe_richardson, relu_pattern,
    richardson_difference,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swipt_core::autoencoder::{awgn_noise, batch_gradients, Workspace};
use swipt_core::nn::{cross_entropy_gradient, cross_entropy_index};
use swipt_core::{Activation, Mlp, RectennaParams, TrainConfig};

/// Random biases keep pre-activations off the relu kink.
fn randomize_biases(net: &mut Mlp, rng: &mut ChaCha8Rng) {
    let mut params = net.params();
    let mut offset = 0;
    for layer in net.layers() {
        offset += layer.in_dim() * layer.out_dim();
        for p in &mut params[offset..offset + layer.out_dim()] {
            *p = rng.random_range(-0.1..0.1);
        }
        offset += layer.out_dim();
    }
    net.set_params(&params).unwrap();
}

#[test]
fn mlp_cross_entropy_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let widths = [2, 8, 16, 32];
    for trial in 0..20 {
        let dims = [
            widths[rng.random_range(0..4)],
            widths[rng.random_range(0..4)],
            widths[rng.random_range(0..4)],
            widths[rng.random_range(1..4)],
        ];
        let mut net = Mlp::glorot(
            &dims,
            &[Activation::Relu, Activation::Relu, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        randomize_biases(&mut net, &mut rng);
        let input: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = rng.random_range(0..dims[3]);

        let (probs, cache) = net.forward(&input).unwrap();
        let (grads, _) = net
            .backward(&cache, &cross_entropy_gradient(target, &probs))
            .unwrap();
        let numeric = richardson_difference(&net, 1e-3, |n| {
            cross_entropy_index(target, &n.forward(&input).unwrap().0).unwrap()
        });
        for (i, (a, f)) in grads.flatten().iter().zip(&numeric).enumerate() {
            assert!(
                grad_close(*a, *f, 1e-5, 1e-8),
                "trial {trial} dims {dims:?} param {i}: analytic {a} numeric {f}"
            );
        }
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Mlp::glorot(
        &[2, 16, 8],
        &[Activation::Relu, Activation::Softmax],
        &mut rng,
    )
    .unwrap();
    let x = [0.3, -0.7];
    let (p, cache) = net.forward(&x).unwrap();
    let (_, gx) = net
        .backward(&cache, &cross_entropy_gradient(5, &p))
        .unwrap();
    for k in 0..2 {
        let h = 1e-6;
        let mut up = x;
        up[k] += h;
        let mut down = x;
        down[k] -= h;
        let f = |v: &[f64]| cross_entropy_index(5, &net.forward(v).unwrap().0).unwrap();
        let fd = (f(&up) - f(&down)) / (2.0 * h);
        assert!(grad_close(gx[k], fd, 1e-5, 1e-8), "{} vs {fd}", gx[k]);
    }
}

#[test]
fn normalization_gradient_matches_finite_differences() {
    // λ = 0 isolates the normalization path from the power term.
    let rect = RectennaParams::default();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let cfg = TrainConfig {
            m_messages: 8,
            ..Default::default()
        };
        let enc = cfg.build_encoder(&mut rng).unwrap();
        let dec = cfg.build_decoder(&mut rng).unwrap();
        let labels: Vec<usize> = (0..32).map(|_| rng.random_range(0..8)).collect();
        let noise = awgn_noise(32, 10.0, 1.0, &mut rng);
        let out = batch_gradients(
            &enc,
            &dec,
            &labels,
            &noise,
            1.0,
            0.0,
            &rect,
            &mut Workspace::default(),
        )
        .unwrap();
        let numeric = finite_difference(&enc, 1e-5, |e| {
            forward_loss(e, &dec, &labels, &noise, 0.0, &rect).unwrap()
        });
        for (a, f) in out.encoder.flatten().iter().zip(&numeric) {
            assert!(grad_close(*a, *f, 1e-5, 1e-8), "seed {seed}: {a} vs {f}");
        }
    }
}

#[test]
fn frozen_noise_batches_are_reproducible() {
    let rect = RectennaParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = TrainConfig {
        m_messages: 8,
        ..Default::default()
    };
    let enc = cfg.build_encoder(&mut rng).unwrap();
    let dec = cfg.build_decoder(&mut rng).unwrap();
    let labels = vec![0, 1, 2, 3, 4, 5, 6, 7];
    let noise = vec![Complex64::new(0.01, -0.02); 8];
    let mut ws = Workspace::default();
    let a = batch_gradients(&enc, &dec, &labels, &noise, 1.0, 1.0, &rect, &mut ws).unwrap();
    let b = batch_gradients(&enc, &dec, &labels, &noise, 1.0, 1.0, &rect, &mut ws).unwrap();
    assert_eq!(a.encoder, b.encoder);
    assert_eq!(a.decoder, b.decoder);
    let direct = forward_loss(&enc, &dec, &labels, &noise, 1.0, &rect).unwrap();
    assert!((a.loss - direct).abs() < 1e-14);
}

#[test]
fn power_term_gradients_match_finite_differences() {
    let rect = RectennaParams::default();
    let cfg = TrainConfig {
        m_messages: 8,
        ..Default::default()
    };
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let mut enc = cfg.build_encoder(&mut rng).unwrap();
        let dec = cfg.build_decoder(&mut rng).unwrap();
        randomize_biases(&mut enc, &mut rng);
        let labels: Vec<usize> = (0..16).map(|_| rng.random_range(0..8)).collect();
        let noise = awgn_noise(16, 20.0, 1.0, &mut rng);
        let lambda = 5.0;
        let out = batch_gradients(
            &enc,
            &dec,
            &labels,
            &noise,
            1.0,
            lambda,
            &rect,
            &mut Workspace::default(),
        )
        .unwrap();
        let numeric = kink_safe_richardson(
            &enc,
            1e-3,
            |e| forward_loss(e, &dec, &labels, &noise, lambda, &rect).unwrap(),
            |e| relu_pattern(e, &dec, &labels, &noise),
        );
        for (a, f) in out.encoder.flatten().iter().zip(&numeric) {
            assert!(grad_close(*a, *f, 1e-5, 1e-8), "seed {seed}: {a} vs {f}");
        }
    }
}
