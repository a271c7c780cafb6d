#![allow(dead_code)]

use num_complex::Complex64;
use swipt_core::autoencoder::{encode_all, TrainError};
use swipt_core::{composite_loss, Activation, Mlp, RectennaParams};

/// `|a − b| ≤ rel·max(|a|, |b|)`, or both below `floor` and within `floor`.
pub fn grad_close(analytic: f64, numeric: f64, rel: f64, floor: f64) -> bool {
    let diff = (analytic - numeric).abs();
    if analytic.abs() < floor && numeric.abs() < floor {
        return diff <= floor;
    }
    diff <= rel * analytic.abs().max(numeric.abs())
}

/// Composite loss evaluated by plain forward passes only.
pub fn forward_loss(
    encoder: &Mlp,
    decoder: &Mlp,
    labels: &[usize],
    noise: &[Complex64],
    lambda: f64,
    rectenna: &RectennaParams,
) -> Result<f64, TrainError> {
    let cons = encode_all(encoder, encoder.in_dim(), 1.0)?;
    let probs: Vec<Vec<f64>> = labels
        .iter()
        .zip(noise)
        .map(|(&s, n)| {
            let y = cons.points[s] + n;
            decoder.forward(&[y.re, y.im]).map(|(p, _)| p)
        })
        .collect::<Result<_, _>>()?;
    Ok(composite_loss(labels, &probs, &cons, lambda, rectenna)?.0)
}

/// Central differences of `f` over every parameter of `net`.
pub fn finite_difference<F>(net: &Mlp, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&Mlp) -> f64,
{
    let base = net.params();
    let mut probe = net.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_params(&p).unwrap();
            let up = f(&probe);
            p[i] = base[i] - h;
            probe.set_params(&p).unwrap();
            let down = f(&probe);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Richardson-extrapolated central differences, `(4·D(h/2) − D(h)) / 3`.
/// Lets `h` be large enough that roundoff stays far below the tolerance.
pub fn richardson_difference<F>(net: &Mlp, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&Mlp) -> f64,
{
    let coarse = finite_difference(net, h, &mut f);
    let fine = finite_difference(net, h / 2.0, &mut f);
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}

/// Signs of every relu pre-activation seen while evaluating
/// [`forward_loss`]. The loss is smooth wherever this pattern is constant.
pub fn relu_pattern(
    encoder: &Mlp,
    decoder: &Mlp,
    labels: &[usize],
    noise: &[Complex64],
) -> Vec<bool> {
    fn signs(net: &Mlp, input: &[f64], out: &mut Vec<bool>) {
        let (_, cache) = net.forward(input).unwrap();
        for (layer, pre) in net.layers().iter().zip(cache.pre_activations()) {
            if layer.activation() == Activation::Relu {
                out.extend(pre.iter().map(|&v| v > 0.0));
            }
        }
    }
    let m = encoder.in_dim();
    let mut out = Vec::new();
    for i in 0..m {
        let mut hot = vec![0.0; m];
        hot[i] = 1.0;
        signs(encoder, &hot, &mut out);
    }
    let cons = encode_all(encoder, m, 1.0).unwrap();
    for (&s, n) in labels.iter().zip(noise) {
        let y = cons.points[s] + n;
        signs(decoder, &[y.re, y.im], &mut out);
    }
    out
}

/// Richardson differences that shrink the step, by factors of ten from
/// `h`, until no probe point crosses a relu kink.
pub fn kink_safe_richardson<F, P>(net: &Mlp, h: f64, mut f: F, mut pattern: P) -> Vec<f64>
where
    F: FnMut(&Mlp) -> f64,
    P: FnMut(&Mlp) -> Vec<bool>,
{
    let base = net.params();
    let reference = pattern(net);
    let mut probe = net.clone();
    let at = |p: &[f64], i: usize, delta: f64, probe: &mut Mlp| {
        let mut q = p.to_vec();
        q[i] += delta;
        probe.set_params(&q).unwrap();
    };
    (0..base.len())
        .map(|i| {
            let mut step = h;
            while step > 1e-8 {
                let smooth = [step, step / 2.0, -step / 2.0, -step].iter().all(|&d| {
                    at(&base, i, d, &mut probe);
                    pattern(&probe) == reference
                });
                if smooth {
                    break;
                }
                step /= 10.0;
            }
            let mut central = |s: f64| {
                at(&base, i, s, &mut probe);
                let up = f(&probe);
                at(&base, i, -s, &mut probe);
                let down = f(&probe);
                (up - down) / (2.0 * s)
            };
            let coarse = central(step);
            let fine = central(step / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}
