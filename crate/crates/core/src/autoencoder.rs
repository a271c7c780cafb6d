//! The end-to-end system: one-hot message → encoder → power normalization →
//! AWGN → decoder, trained on cross-entropy plus `λ / P_del`.

use crate::eh_model::{
    delivered_power_metric, delivered_power_metric_gradient, ConstellationMetricInput, EhError,
    RectennaParams,
};
use crate::nn::{
    adam_step, cross_entropy_gradient, cross_entropy_index, one_hot, Activation, AdamState,
    ForwardCache, Gradients, Mlp, NnError,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all raw encoder outputs are zero; power normalization is undefined")]
    DegenerateConstellation,
    #[error("non-finite loss at step {0}")]
    NonFiniteLoss(u64),
    #[error("network error at step {step}: {source}")]
    Network { step: u64, source: NnError },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eh(#[from] EhError),
    #[error("SER estimation needs at least one sample")]
    NoSamples,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub m_messages: usize,
    pub n_channel_uses: usize,
    pub snr_db: f64,
    pub lambda: f64,
    pub avg_power: f64,
    pub batch_size: usize,
    pub train_set_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Hidden width of the encoder; `None` means `M`.
    pub encoder_hidden: Option<usize>,
    /// Hidden width of the decoder; `None` means `M`.
    pub decoder_hidden: Option<usize>,
    pub rectenna: RectennaParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            m_messages: 16,
            n_channel_uses: 1,
            snr_db: 20.0,
            lambda: 0.0,
            avg_power: 1.0,
            batch_size: 1000,
            train_set_size: 100_000,
            epochs: 50,
            seed: 0,
            learning_rate: 1e-3,
            encoder_hidden: None,
            decoder_hidden: None,
            rectenna: RectennaParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::Config(msg));
        if self.m_messages < 2 {
            return fail(format!("m_messages must be >= 2, got {}", self.m_messages));
        }
        if self.n_channel_uses != 1 {
            return fail(format!(
                "only n_channel_uses = 1 is supported, got {}",
                self.n_channel_uses
            ));
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.avg_power.is_finite() && self.avg_power > 0.0) {
            return fail(format!("avg_power must be > 0, got {}", self.avg_power));
        }
        if self.batch_size == 0 || self.train_set_size == 0 || self.epochs == 0 {
            return fail("batch_size, train_set_size and epochs must be positive".into());
        }
        if !self.train_set_size.is_multiple_of(self.batch_size) {
            return fail(format!(
                "batch_size {} does not divide train_set_size {}",
                self.batch_size, self.train_set_size
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if self.encoder_hidden == Some(0) || self.decoder_hidden == Some(0) {
            return fail("hidden widths must be positive".into());
        }
        self.rectenna.validate()?;
        Ok(())
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.train_set_size / self.batch_size
    }

    /// Encoder `M → hidden (relu) → 2n (identity)`.
    pub fn build_encoder<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Mlp, NnError> {
        let m = self.m_messages;
        let h = self.encoder_hidden.unwrap_or(m);
        Mlp::glorot(
            &[m, h, 2 * self.n_channel_uses],
            &[Activation::Relu, Activation::Identity],
            rng,
        )
    }

    /// Decoder `2n → hidden (relu) → M (softmax)`.
    pub fn build_decoder<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Mlp, NnError> {
        let m = self.m_messages;
        let h = self.decoder_hidden.unwrap_or(m);
        Mlp::glorot(
            &[2 * self.n_channel_uses, h, m],
            &[Activation::Relu, Activation::Softmax],
            rng,
        )
    }
}

/// The encoder's normalized image of all `M` messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub points: Vec<Complex64>,
    pub avg_power: f64,
}

impl Constellation {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.points.len() as f64
    }

    /// `P_del` under uniform messages.
    pub fn p_del(&self, rectenna: &RectennaParams) -> Result<f64, EhError> {
        delivered_power_metric(
            &ConstellationMetricInput::uniform(self.points.clone())?,
            rectenna,
        )
    }
}

/// Output of the power-normalization layer, kept for its backward pass.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub raw: Vec<Complex64>,
    pub scale: f64,
    pub energy: f64,
    pub constellation: Constellation,
}

/// Scales raw points so that `(1/M) Σ |x|² = avg_power`.
pub fn normalize(raw: Vec<Complex64>, avg_power: f64) -> Result<Normalized, TrainError> {
    let energy: f64 = raw.iter().map(Complex64::norm_sqr).sum();
    if !(energy.is_finite() && energy > 0.0) {
        return Err(TrainError::DegenerateConstellation);
    }
    let scale = (avg_power * raw.len() as f64 / energy).sqrt();
    let points = raw.iter().map(|z| z * scale).collect();
    Ok(Normalized {
        raw,
        scale,
        energy,
        constellation: Constellation { points, avg_power },
    })
}

impl Normalized {
    /// Maps `∂L/∂x_i` to `∂L/∂z_i`, including the dependence of the scale on
    /// every raw point.
    pub fn backward(&self, grad_points: &[Complex64]) -> Vec<Complex64> {
        let coupling: f64 = grad_points
            .iter()
            .zip(&self.raw)
            .map(|(g, z)| g.re * z.re + g.im * z.im)
            .sum();
        let k = self.scale * coupling / self.energy;
        grad_points
            .iter()
            .zip(&self.raw)
            .map(|(g, z)| g * self.scale - z * k)
            .collect()
    }
}

fn raw_points(
    encoder: &Mlp,
    m: usize,
    caches: &mut [ForwardCache],
) -> Result<Vec<Complex64>, NnError> {
    let mut raw = Vec::with_capacity(m);
    for (i, cache) in caches.iter_mut().enumerate().take(m) {
        encoder.forward_into(&one_hot(i, m), cache)?;
        let out = cache.output();
        raw.push(Complex64::new(out[0], out[1]));
    }
    Ok(raw)
}

/// Encoder outputs for every one-hot message, normalized to `avg_power`.
pub fn encode_all(encoder: &Mlp, m: usize, avg_power: f64) -> Result<Constellation, TrainError> {
    if encoder.in_dim() != m || encoder.out_dim() != 2 {
        return Err(NnError::Dimension {
            expected: m,
            got: encoder.in_dim(),
        }
        .into());
    }
    let mut caches = vec![ForwardCache::default(); m];
    let raw = raw_points(encoder, m, &mut caches)?;
    Ok(normalize(raw, avg_power)?.constellation)
}

/// Noise standard deviation per real component.
pub fn noise_component_std(snr_db: f64, avg_power: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    (0.5 * avg_power * 10f64.powf(-snr_db / 10.0)).sqrt()
}

/// Circularly-symmetric complex Gaussian samples with total variance
/// `avg_power · 10^(−snr_db/10)`.
pub fn awgn_noise<R: Rng + ?Sized>(
    count: usize,
    snr_db: f64,
    avg_power: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let sigma = noise_component_std(snr_db, avg_power);
    if sigma == 0.0 {
        return vec![Complex64::new(0.0, 0.0); count];
    }
    (0..count)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// AWGN channel; `snr_db = +∞` disables noise.
pub fn awgn_channel<R: Rng + ?Sized>(
    symbols: &[Complex64],
    snr_db: f64,
    avg_power: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let noise = awgn_noise(symbols.len(), snr_db, avg_power, rng);
    symbols.iter().zip(noise).map(|(x, n)| x + n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce_term: f64,
    pub power_term: f64,
    pub p_del: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.ce_term + self.power_term
    }
}

/// Mean cross-entropy of the batch plus `λ / P_del` of the constellation.
pub fn composite_loss(
    labels: &[usize],
    decoder_probs: &[Vec<f64>],
    constellation: &Constellation,
    lambda: f64,
    rectenna: &RectennaParams,
) -> Result<(f64, LossBreakdown), TrainError> {
    if labels.len() != decoder_probs.len() || labels.is_empty() {
        return Err(NnError::Dimension {
            expected: labels.len(),
            got: decoder_probs.len(),
        }
        .into());
    }
    let ce = labels
        .iter()
        .zip(decoder_probs)
        .map(|(&s, p)| cross_entropy_index(s, p))
        .sum::<Result<f64, _>>()?
        / labels.len() as f64;
    let p_del = constellation.p_del(rectenna)?;
    let breakdown = LossBreakdown {
        ce_term: ce,
        power_term: lambda / p_del,
        p_del,
    };
    Ok((breakdown.total(), breakdown))
}

/// Loss and exact gradients for one mini-batch with given channel noise.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub breakdown: LossBreakdown,
    pub encoder: Gradients,
    pub decoder: Gradients,
}

/// Reusable buffers for [`batch_gradients`].
#[derive(Debug, Default)]
pub struct Workspace {
    encoder_caches: Vec<ForwardCache>,
    decoder_cache: ForwardCache,
    probs: Vec<Vec<f64>>,
}

/// Full forward/backward pass through encoder, normalization, channel and
/// decoder. `noise[k]` is added to the symbol of `labels[k]`.
#[allow(clippy::too_many_arguments)]
pub fn batch_gradients(
    encoder: &Mlp,
    decoder: &Mlp,
    labels: &[usize],
    noise: &[Complex64],
    avg_power: f64,
    lambda: f64,
    rectenna: &RectennaParams,
    ws: &mut Workspace,
) -> Result<BatchGradients, TrainError> {
    let m = encoder.in_dim();
    if noise.len() != labels.len() {
        return Err(NnError::Dimension {
            expected: labels.len(),
            got: noise.len(),
        }
        .into());
    }
    ws.encoder_caches.resize_with(m, ForwardCache::default);
    let raw = raw_points(encoder, m, &mut ws.encoder_caches)?;
    let norm = normalize(raw, avg_power)?;
    let points = &norm.constellation.points;

    let batch = labels.len() as f64;
    let mut dec_grads = Gradients::zeros_like(decoder);
    let mut grad_points = vec![Complex64::new(0.0, 0.0); m];
    ws.probs.resize_with(labels.len(), Vec::new);
    for (k, (&s, n)) in labels.iter().zip(noise).enumerate() {
        let y = points[s] + n;
        decoder.forward_into(&[y.re, y.im], &mut ws.decoder_cache)?;
        let probs = ws.decoder_cache.output();
        let mut g = cross_entropy_gradient(s, probs);
        g.iter_mut().for_each(|v| *v /= batch);
        let gy = decoder.backward_accumulate(&ws.decoder_cache, &g, &mut dec_grads)?;
        grad_points[s] += Complex64::new(gy[0], gy[1]);
        ws.probs[k].clear();
        ws.probs[k].extend_from_slice(probs);
    }

    let (loss, breakdown) =
        composite_loss(labels, &ws.probs, &norm.constellation, lambda, rectenna)?;

    if lambda > 0.0 {
        let metric_grad = delivered_power_metric_gradient(
            &ConstellationMetricInput::uniform(points.clone())?,
            rectenna,
        )?;
        let factor = -lambda / (breakdown.p_del * breakdown.p_del);
        for (gp, mg) in grad_points.iter_mut().zip(metric_grad) {
            *gp += mg * factor;
        }
    }

    let grad_raw = norm.backward(&grad_points);
    let mut enc_grads = Gradients::zeros_like(encoder);
    for (cache, g) in ws.encoder_caches.iter().zip(grad_raw) {
        encoder.backward_accumulate(cache, &[g.re, g.im], &mut enc_grads)?;
    }
    Ok(BatchGradients {
        loss,
        breakdown,
        encoder: enc_grads,
        decoder: dec_grads,
    })
}

/// A trained encoder/decoder pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSystem {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub config: TrainConfig,
    pub final_loss: f64,
    pub constellation: Constellation,
}

impl TrainedSystem {
    /// Detected message for a received sample.
    pub fn decode(&self, y: Complex64) -> Result<usize, NnError> {
        let (probs, _) = self.decoder.forward(&[y.re, y.im])?;
        Ok(argmax(&probs))
    }

    pub fn p_del(&self) -> Result<f64, EhError> {
        self.constellation.p_del(&self.config.rectenna)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Trains a system with Adam for `epochs × train_set_size / batch_size`
/// steps. Deterministic given `config.seed`.
pub fn train(config: &TrainConfig) -> Result<TrainedSystem, TrainError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = config.build_encoder(&mut rng)?;
    let mut decoder = config.build_decoder(&mut rng)?;
    let mut enc_params = encoder.params();
    let mut dec_params = decoder.params();
    let mut enc_adam = AdamState::new(enc_params.len(), config.learning_rate);
    let mut dec_adam = AdamState::new(dec_params.len(), config.learning_rate);
    let mut ws = Workspace::default();

    let m = config.m_messages;
    let total_steps = (config.epochs * config.steps_per_epoch()) as u64;
    let mut labels = vec![0usize; config.batch_size];
    let mut final_loss = f64::NAN;
    for step in 1..=total_steps {
        labels.iter_mut().for_each(|s| *s = rng.random_range(0..m));
        let noise = awgn_noise(config.batch_size, config.snr_db, config.avg_power, &mut rng);
        let out = batch_gradients(
            &encoder,
            &decoder,
            &labels,
            &noise,
            config.avg_power,
            config.lambda,
            &config.rectenna,
            &mut ws,
        )?;
        if !out.loss.is_finite() {
            return Err(TrainError::NonFiniteLoss(step));
        }
        final_loss = out.loss;
        let wrap = |source| TrainError::Network { step, source };
        adam_step(&mut enc_params, &out.encoder.flatten(), &mut enc_adam).map_err(wrap)?;
        adam_step(&mut dec_params, &out.decoder.flatten(), &mut dec_adam).map_err(wrap)?;
        encoder.set_params(&enc_params).map_err(wrap)?;
        decoder.set_params(&dec_params).map_err(wrap)?;
    }
    log::debug!(
        "trained M={} lambda={} seed={} loss={final_loss}",
        m,
        config.lambda,
        config.seed
    );

    let constellation = encode_all(&encoder, m, config.avg_power)?;
    Ok(TrainedSystem {
        encoder,
        decoder,
        config: config.clone(),
        final_loss,
        constellation,
    })
}

/// Monte-Carlo symbol error rate with a 95% normal-approximation halfwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub ser: f64,
    pub halfwidth: f64,
    pub errors: u64,
    pub samples: u64,
}

impl SerEstimate {
    pub fn from_counts(errors: u64, samples: u64) -> Self {
        let p = errors as f64 / samples as f64;
        Self {
            ser: p,
            halfwidth: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
            errors,
            samples,
        }
    }

    /// Standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        self.halfwidth / 1.96
    }
}

/// SER of an arbitrary detector over uniformly drawn messages sent through
/// the AWGN channel.
pub fn estimate_ser_with<R, D>(
    points: &[Complex64],
    snr_db: f64,
    avg_power: f64,
    num_samples: u64,
    mut detect: D,
    rng: &mut R,
) -> Result<SerEstimate, TrainError>
where
    R: Rng + ?Sized,
    D: FnMut(Complex64, &mut R) -> Result<usize, TrainError>,
{
    if num_samples == 0 {
        return Err(TrainError::NoSamples);
    }
    let sigma = noise_component_std(snr_db, avg_power);
    let mut errors = 0u64;
    for _ in 0..num_samples {
        let s = rng.random_range(0..points.len());
        let mut y = points[s];
        if sigma > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            y += Complex64::new(sigma * re, sigma * im);
        }
        if detect(y, rng)? != s {
            errors += 1;
        }
    }
    Ok(SerEstimate::from_counts(errors, num_samples))
}

/// SER of a trained system at its training SNR.
pub fn estimate_ser<R: Rng + ?Sized>(
    system: &TrainedSystem,
    num_samples: u64,
    rng: &mut R,
) -> Result<SerEstimate, TrainError> {
    estimate_ser_at(system, system.config.snr_db, num_samples, rng)
}

/// SER of a trained system at an arbitrary SNR.
pub fn estimate_ser_at<R: Rng + ?Sized>(
    system: &TrainedSystem,
    snr_db: f64,
    num_samples: u64,
    rng: &mut R,
) -> Result<SerEstimate, TrainError> {
    let mut cache = ForwardCache::default();
    estimate_ser_with(
        &system.constellation.points,
        snr_db,
        system.config.avg_power,
        num_samples,
        |y, _| {
            system.decoder.forward_into(&[y.re, y.im], &mut cache)?;
            Ok(argmax(cache.output()))
        },
        rng,
    )
}
