//! Small dense networks with exact backpropagation and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor applied to probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("layer {layer} takes {in_dim} inputs but the previous layer emits {prev_out}")]
    BrokenChain {
        layer: usize,
        in_dim: usize,
        prev_out: usize,
    },
    #[error("softmax is only allowed on the final layer (found on layer {0})")]
    MisplacedSoftmax(usize),
    #[error("network has no layers")]
    Empty,
    #[error("forward cache does not match this network")]
    StaleCache,
    #[error("non-finite parameter in layer {0}")]
    NonFinite(usize),
    #[error("non-finite gradient at optimizer step {0}")]
    NonFiniteGradient(u64),
    #[error("malformed one-hot vector")]
    MalformedOneHot,
    #[error("probabilities do not sum to one (sum = {0})")]
    NotNormalized(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Softmax,
}

impl Activation {
    fn apply(self, pre: &[f64], out: &mut [f64]) {
        match self {
            Activation::Identity => out.copy_from_slice(pre),
            Activation::Relu => {
                for (o, &z) in out.iter_mut().zip(pre) {
                    *o = z.max(0.0);
                }
            }
            Activation::Softmax => softmax_into(pre, out),
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Affine map followed by an activation. Weights are stored row-major,
/// `out_dim` rows of `in_dim` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerRepr", into = "LayerRepr")]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, NnError> {
        let out_dim = weights.len();
        if out_dim == 0 {
            return Err(NnError::Empty);
        }
        let in_dim = weights[0].len();
        if let Some(row) = weights.iter().find(|r| r.len() != in_dim) {
            return Err(NnError::Dimension {
                expected: in_dim,
                got: row.len(),
            });
        }
        if biases.len() != out_dim {
            return Err(NnError::Dimension {
                expected: out_dim,
                got: biases.len(),
            });
        }
        let layer = Self {
            in_dim,
            out_dim,
            weights: weights.into_iter().flatten().collect(),
            biases,
            activation,
        };
        if layer.is_finite() {
            Ok(layer)
        } else {
            Err(NnError::NonFinite(0))
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.is_finite())
    }

    fn affine(&self, input: &[f64], pre: &mut [f64]) {
        for (r, p) in pre.iter_mut().enumerate() {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            *p = self.biases[r] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl From<DenseLayer> for LayerRepr {
    fn from(layer: DenseLayer) -> Self {
        Self {
            in_dim: layer.in_dim,
            out_dim: layer.out_dim,
            activation: layer.activation,
            weights: layer
                .weights
                .chunks(layer.in_dim)
                .map(<[f64]>::to_vec)
                .collect(),
            biases: layer.biases,
        }
    }
}

impl TryFrom<LayerRepr> for DenseLayer {
    type Error = NnError;

    fn try_from(repr: LayerRepr) -> Result<Self, Self::Error> {
        let layer = DenseLayer::new(repr.weights, repr.biases, repr.activation)?;
        if layer.in_dim != repr.in_dim || layer.out_dim != repr.out_dim {
            return Err(NnError::Dimension {
                expected: repr.in_dim * repr.out_dim,
                got: layer.in_dim * layer.out_dim,
            });
        }
        Ok(layer)
    }
}

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr")]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

#[derive(Deserialize)]
struct MlpRepr {
    layers: Vec<DenseLayer>,
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = NnError;

    fn try_from(repr: MlpRepr) -> Result<Self, Self::Error> {
        Mlp::new(repr.layers)
    }
}

/// Activations recorded by [`Mlp::forward`] for use in [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `inputs[l]` is the input of layer `l`.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    /// Final network output.
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-activation vector of every layer.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Parameter gradients of an [`Mlp`], laid out like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    /// Flattened in the same order as [`Mlp::params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(&mut l.biases)
                .for_each(|g| *g *= factor);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|g| *g == 0.0))
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Empty);
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim != pair[0].out_dim {
                return Err(NnError::BrokenChain {
                    layer: i + 1,
                    in_dim: pair[1].in_dim,
                    prev_out: pair[0].out_dim,
                });
            }
        }
        let last = layers.len() - 1;
        if let Some(i) = layers[..last]
            .iter()
            .position(|l| l.activation == Activation::Softmax)
        {
            return Err(NnError::MisplacedSoftmax(i));
        }
        if let Some(i) = layers.iter().position(|l| !l.is_finite()) {
            return Err(NnError::NonFinite(i));
        }
        Ok(Self { layers })
    }

    /// Glorot-initialised network; `dims` has one more entry than `activations`.
    pub fn glorot<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if dims.len() != activations.len() + 1 {
            return Err(NnError::Dimension {
                expected: activations.len() + 1,
                got: dims.len(),
            });
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| DenseLayer::glorot(d[0], d[1], act, rng))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// All parameters, layer by layer: weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::Dimension {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(&mut l.biases) {
                *p = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, &mut cache)?;
        Ok((cache.output.clone(), cache))
    }

    /// Forward pass that reuses the buffers of an existing cache.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) -> Result<(), NnError> {
        if input.len() != self.in_dim() {
            return Err(NnError::Dimension {
                expected: self.in_dim(),
                got: input.len(),
            });
        }
        let n = self.layers.len();
        cache.inputs.resize_with(n, Vec::new);
        cache.pre.resize_with(n, Vec::new);
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(input);
        for (l, layer) in self.layers.iter().enumerate() {
            cache.pre[l].resize(layer.out_dim, 0.0);
            layer.affine(&cache.inputs[l], &mut cache.pre[l]);
            let out = if l + 1 < n {
                &mut cache.inputs[l + 1]
            } else {
                &mut cache.output
            };
            out.resize(layer.out_dim, 0.0);
            layer.activation.apply(&cache.pre[l], out);
        }
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<(), NnError> {
        let consistent = cache.inputs.len() == self.layers.len()
            && cache.pre.len() == self.layers.len()
            && cache.output.len() == self.out_dim()
            && self
                .layers
                .iter()
                .zip(cache.inputs.iter().zip(&cache.pre))
                .all(|(l, (i, p))| i.len() == l.in_dim && p.len() == l.out_dim);
        if consistent {
            Ok(())
        } else {
            Err(NnError::StaleCache)
        }
    }

    /// Exact reverse-mode gradients for `output_gradient = ∂L/∂output`.
    /// Returns the parameter gradients and `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
    ) -> Result<(Gradients, Vec<f64>), NnError> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_accumulate(cache, output_gradient, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Mlp::backward`] but adds into `acc`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        acc: &mut Gradients,
    ) -> Result<Vec<f64>, NnError> {
        self.check_cache(cache)?;
        if output_gradient.len() != self.out_dim() {
            return Err(NnError::Dimension {
                expected: self.out_dim(),
                got: output_gradient.len(),
            });
        }
        if acc.layers.len() != self.layers.len() {
            return Err(NnError::StaleCache);
        }
        let n = self.layers.len();
        let mut delta = output_gradient.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let out = if l + 1 < n {
                &cache.inputs[l + 1]
            } else {
                &cache.output
            };
            // delta: ∂L/∂post -> ∂L/∂pre
            match layer.activation {
                Activation::Identity => {}
                Activation::Relu => {
                    for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Softmax => {
                    let dot: f64 = delta.iter().zip(out).map(|(d, p)| d * p).sum();
                    for (d, &p) in delta.iter_mut().zip(out) {
                        *d = p * (*d - dot);
                    }
                }
            }
            let input = &cache.inputs[l];
            let g = &mut acc.layers[l];
            let mut next = vec![0.0; layer.in_dim];
            for (r, &d) in delta.iter().enumerate() {
                g.biases[r] += d;
                if d == 0.0 {
                    continue;
                }
                let row = r * layer.in_dim..(r + 1) * layer.in_dim;
                for ((gw, &x), (nx, &w)) in g.weights[row.clone()]
                    .iter_mut()
                    .zip(input)
                    .zip(next.iter_mut().zip(&layer.weights[row]))
                {
                    *gw += d * x;
                    *nx += d * w;
                }
            }
            delta = next;
        }
        Ok(delta)
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(NnError::Dimension {
            expected: state.first_moment.len(),
            got: grads.len(),
        });
    }
    let step = state.step_count + 1;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(NnError::NonFiniteGradient(step));
    }
    state.step_count = step;
    let bc1 = 1.0 - state.beta1.powi(step as i32);
    let bc2 = 1.0 - state.beta2.powi(step as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Negative log-likelihood of the hot class.
pub fn cross_entropy(one_hot: &[f64], probs: &[f64]) -> Result<f64, NnError> {
    if one_hot.len() != probs.len() {
        return Err(NnError::Dimension {
            expected: one_hot.len(),
            got: probs.len(),
        });
    }
    let ones = one_hot.iter().filter(|&&v| v == 1.0).count();
    let zeros = one_hot.iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || zeros + 1 != one_hot.len() {
        return Err(NnError::MalformedOneHot);
    }
    let hot = one_hot.iter().position(|&v| v == 1.0).unwrap_or(0);
    cross_entropy_index(hot, probs)
}

/// Negative log-likelihood of class `hot`.
pub fn cross_entropy_index(hot: usize, probs: &[f64]) -> Result<f64, NnError> {
    if hot >= probs.len() {
        return Err(NnError::MalformedOneHot);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(NnError::NotNormalized(sum));
    }
    Ok(-probs[hot].max(PROB_FLOOR).ln())
}

/// `∂/∂probs` of [`cross_entropy_index`].
pub fn cross_entropy_gradient(hot: usize, probs: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; probs.len()];
    g[hot] = -1.0 / probs[hot].max(PROB_FLOOR);
    g
}

pub fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_layer(n: usize) -> DenseLayer {
        let w = (0..n)
            .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        DenseLayer::new(w, vec![0.0; n], Activation::Identity).unwrap()
    }

    #[test]
    fn identity_forward() {
        let net = Mlp::new(vec![identity_layer(3)]).unwrap();
        let (out, _) = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn relu_forward() {
        let layer = DenseLayer {
            activation: Activation::Relu,
            ..identity_layer(2)
        };
        let net = Mlp::new(vec![layer]).unwrap();
        assert_eq!(net.forward(&[-1.0, 2.0]).unwrap().0, vec![0.0, 2.0]);
    }

    #[test]
    fn softmax_uniform() {
        let p = softmax(&[0.3; 16]);
        for v in p {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_rejects_wrong_input() {
        let net = Mlp::new(vec![identity_layer(3)]).unwrap();
        assert_eq!(
            net.forward(&[1.0]).unwrap_err(),
            NnError::Dimension {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn structure_validation() {
        let sm = DenseLayer {
            activation: Activation::Softmax,
            ..identity_layer(2)
        };
        assert_eq!(
            Mlp::new(vec![sm, identity_layer(2)]).unwrap_err(),
            NnError::MisplacedSoftmax(0)
        );
        assert!(matches!(
            Mlp::new(vec![identity_layer(2), identity_layer(3)]),
            Err(NnError::BrokenChain { layer: 1, .. })
        ));
        assert_eq!(Mlp::new(vec![]).unwrap_err(), NnError::Empty);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::glorot(
            &[4, 8, 3],
            &[Activation::Relu, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        let (_, cache) = net.forward(&[0.1, -0.4, 0.9, 0.2]).unwrap();
        let (g, gi) = net.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g.is_zero());
        assert!(gi.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_layer_weight_gradient_is_outer_product() {
        let net = Mlp::new(vec![identity_layer(2)]).unwrap();
        let x = [0.5, -1.5];
        let dy = [2.0, 3.0];
        let (_, cache) = net.forward(&x).unwrap();
        let (g, gi) = net.backward(&cache, &dy).unwrap();
        assert_eq!(g.layers[0].weights, vec![1.0, -3.0, 1.5, -4.5]);
        assert_eq!(g.layers[0].biases, dy.to_vec());
        assert_eq!(gi, dy.to_vec());
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Mlp::glorot(&[2, 4], &[Activation::Relu], &mut rng).unwrap();
        let b = Mlp::glorot(&[2, 5], &[Activation::Relu], &mut rng).unwrap();
        let (_, cache) = a.forward(&[1.0, 1.0]).unwrap();
        assert_eq!(
            b.backward(&cache, &[0.0; 5]).unwrap_err(),
            NnError::StaleCache
        );
        assert_eq!(
            a.backward(&ForwardCache::default(), &[0.0; 4]).unwrap_err(),
            NnError::StaleCache
        );
    }

    #[test]
    fn adam_first_step() {
        let mut p = [0.0];
        let mut st = AdamState::new(1, 1e-3);
        adam_step(&mut p, &[1.0], &mut st).unwrap();
        assert!((p[0] - (-1e-3 / (1.0 + 1e-8))).abs() < 1e-18);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut p = [0.3, -2.0, 7.0];
        let mut st = AdamState::new(3, 1e-2);
        for _ in 0..10 {
            adam_step(&mut p, &[0.0; 3], &mut st).unwrap();
        }
        assert_eq!(p, [0.3, -2.0, 7.0]);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut p = [0.0, 0.0];
        let mut st = AdamState::new(2, 1e-3);
        adam_step(&mut p, &[1.0, 1.0], &mut st).unwrap();
        assert_eq!(
            adam_step(&mut p, &[f64::NAN, 1.0], &mut st),
            Err(NnError::NonFiniteGradient(2))
        );
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        let u = [1.0 / 16.0; 16];
        assert!((cross_entropy(&one_hot(3, 16), &u).unwrap() - 16f64.ln()).abs() < 1e-12);
        let q = [0.25, 0.25, 0.5];
        assert!((cross_entropy(&[1.0, 0.0, 0.0], &q).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(
            cross_entropy(&[1.0, 1.0, 0.0], &q),
            Err(NnError::MalformedOneHot)
        );
        assert_eq!(
            cross_entropy(&[0.5, 0.0, 0.0], &q),
            Err(NnError::MalformedOneHot)
        );
        assert!(matches!(
            cross_entropy(&[1.0, 0.0], &[0.2, 0.2]),
            Err(NnError::NotNormalized(_))
        ));
        // floor keeps the loss finite
        assert!((cross_entropy(&[1.0, 0.0], &[0.0, 1.0]).unwrap() + PROB_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::glorot(
            &[3, 4, 2],
            &[Activation::Relu, Activation::Identity],
            &mut rng,
        )
        .unwrap();
        let text = serde_json::to_string(&net).unwrap();
        assert!(text.contains("\"relu\""));
        let back: Mlp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);

        let broken = text.replacen("\"in_dim\":4", "\"in_dim\":5", 1);
        assert!(serde_json::from_str::<Mlp>(&broken).is_err());
    }
}
