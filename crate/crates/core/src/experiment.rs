//! λ sweeps with multi-seed restarts, best-run selection, rate-power
//! curves and constellation shape descriptors.

use crate::autoencoder::{awgn_noise, estimate_ser, train, Constellation, TrainConfig, TrainError};
use crate::eh_model::RectennaParams;
use crate::special_fn::bessel_i0;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use thiserror::Error;

/// Reported amplitude ratio when every symbol but the largest is zero.
pub const RATIO_CAP: f64 = 1e9;

/// Bin width on `1 − SER` when comparing curves of different sizes.
pub const MATCHED_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("no training run succeeded at lambda = {lambda}: {diagnostic}")]
    NoSuccessfulRuns { lambda: f64, diagnostic: String },
    #[error("shape analysis needs at least two symbols, got {0}")]
    TooFewSymbols(usize),
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Template run; its `lambda` is replaced by each grid value.
    pub base: TrainConfig,
    pub lambda_grid: Vec<f64>,
    pub ser_max: f64,
    pub num_seeds: usize,
    pub ser_samples: u64,
    /// Upper limit on grid values.
    pub max_lambda: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: TrainConfig::default(),
            lambda_grid: vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            ser_max: 0.95,
            num_seeds: 10,
            ser_samples: 100_000,
            max_lambda: 100.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let fail = |m: String| Err(SweepError::Config(m));
        match self.lambda_grid.first() {
            Some(0.0) => {}
            _ => return fail("lambda_grid must start at 0".into()),
        }
        if self
            .lambda_grid
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return fail("lambda_grid must be strictly increasing".into());
        }
        let last = self.lambda_grid[self.lambda_grid.len() - 1];
        if !(last.is_finite() && last <= self.max_lambda) {
            return fail(format!(
                "lambda {last} exceeds max_lambda {}",
                self.max_lambda
            ));
        }
        if !(self.ser_max >= 0.0 && self.ser_max <= 1.0) {
            return fail(format!("ser_max must lie in [0, 1], got {}", self.ser_max));
        }
        if self.num_seeds == 0 || self.ser_samples == 0 {
            return fail("num_seeds and ser_samples must be positive".into());
        }
        self.base.validate()?;
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.num_seeds as u64).map(|k| self.base.seed.wrapping_add(k))
    }
}

/// Outcome of one `(λ, seed)` training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    pub seed: u64,
    pub constellation: Constellation,
    pub ser: f64,
    pub ser_ci: f64,
    pub p_del: f64,
    pub final_loss: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub lambda: f64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Canonical order: λ, then seed.
    pub records: Vec<SweepRecord>,
    pub failures: Vec<RunFailure>,
    /// Index into `records` of the best accepted run for each λ visited
    /// before the gate closed.
    pub selected: Vec<usize>,
    /// λ at which no run met the SER gate, if any.
    pub stopped_at: Option<f64>,
}

impl SweepOutcome {
    pub fn selected_records(&self) -> impl Iterator<Item = &SweepRecord> {
        self.selected.iter().map(|&i| &self.records[i])
    }
}

fn evaluate_run(
    config: &SweepConfig,
    lambda_index: usize,
    lambda: f64,
    seed: u64,
) -> Result<SweepRecord, TrainError> {
    let run_config = TrainConfig {
        lambda,
        seed,
        ..config.base.clone()
    };
    let system = train(&run_config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e4_5e4_5e4);
    rng.set_stream(lambda_index as u64);
    let ser = estimate_ser(&system, config.ser_samples, &mut rng)?;
    let p_del = system.p_del()?;
    Ok(SweepRecord {
        lambda,
        seed,
        constellation: system.constellation,
        ser: ser.ser,
        ser_ci: ser.halfwidth,
        p_del,
        final_loss: system.final_loss,
        accepted: ser.ser <= config.ser_max,
    })
}

/// Best accepted record: largest `p_del`, lower seed on ties.
fn best_accepted(records: &[SweepRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate().filter(|(_, r)| r.accepted) {
        match best {
            Some(b) if records[b].p_del > r.p_del => {}
            Some(b) if records[b].p_del == r.p_del && records[b].seed <= r.seed => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Runs the λ ladder in order, training `num_seeds` systems per value on
/// `workers` threads. Stops after the first λ where no run meets the SER
/// gate. Output is independent of `workers`.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepOutcome, SweepError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let seeds: Vec<u64> = config.seeds().collect();

    let mut outcome = SweepOutcome {
        records: Vec::new(),
        failures: Vec::new(),
        selected: Vec::new(),
        stopped_at: None,
    };
    for (li, &lambda) in config.lambda_grid.iter().enumerate() {
        let results: Vec<_> = pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| (seed, evaluate_run(config, li, lambda, seed)))
                .collect()
        });
        let start = outcome.records.len();
        for (seed, result) in results {
            match result {
                Ok(record) => outcome.records.push(record),
                Err(e) => {
                    log::warn!("lambda={lambda} seed={seed} failed: {e}");
                    outcome.failures.push(RunFailure {
                        lambda,
                        seed,
                        message: e.to_string(),
                    });
                }
            }
        }
        if outcome.records.len() == start {
            let diagnostic = outcome
                .failures
                .iter()
                .rev()
                .find(|f| f.lambda == lambda)
                .map(|f| f.message.clone())
                .unwrap_or_default();
            return Err(SweepError::NoSuccessfulRuns { lambda, diagnostic });
        }
        match best_accepted(&outcome.records[start..]) {
            Some(i) => {
                let r = &outcome.records[start + i];
                log::info!(
                    "lambda={lambda}: best seed={} ser={:.4} p_del={:.4}",
                    r.seed,
                    r.ser,
                    r.p_del
                );
                outcome.selected.push(start + i);
            }
            None => {
                log::info!("lambda={lambda}: no run meets SER <= {}", config.ser_max);
                outcome.stopped_at = Some(lambda);
                break;
            }
        }
    }
    debug_assert!(outcome
        .records
        .iter()
        .all(|r| !r.accepted || r.ser <= config.ser_max));
    Ok(outcome)
}

/// Geometric descriptors of a constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// Index of the largest-amplitude symbol.
    pub power_symbol_index: usize,
    /// Largest amplitude over the second largest, capped at [`RATIO_CAP`].
    pub amplitude_ratio: f64,
    /// Angular distance of the power symbol to the nearest axis, degrees.
    pub axis_deviation_deg: f64,
    /// Symbols with amplitude below a tenth of the largest.
    pub near_zero_count: usize,
}

pub fn classify_shape(constellation: &Constellation) -> Result<ShapeReport, SweepError> {
    let points = &constellation.points;
    if points.len() < 2 {
        return Err(SweepError::TooFewSymbols(points.len()));
    }
    let amps: Vec<f64> = points.iter().map(|p| p.norm()).collect();
    let mut power = 0;
    for (i, &a) in amps.iter().enumerate() {
        if a > amps[power] {
            power = i;
        }
    }
    let max = amps[power];
    let second = amps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != power)
        .map(|(_, &a)| a)
        .fold(0.0, f64::max);
    let amplitude_ratio = if second > 0.0 {
        (max / second).min(RATIO_CAP)
    } else {
        RATIO_CAP
    };
    let axis_deviation_deg = if max > 0.0 {
        let deg = points[power].arg().to_degrees().rem_euclid(90.0);
        deg.min(90.0 - deg).clamp(0.0, 45.0)
    } else {
        0.0
    };
    let near_zero_count = amps.iter().filter(|&&a| a < 0.1 * max).count();
    Ok(ShapeReport {
        power_symbol_index: power,
        amplitude_ratio,
        axis_deviation_deg,
        near_zero_count,
    })
}

/// Anything that can be placed in the rate-power plane.
pub trait RatePowerSample {
    fn one_minus_ser(&self) -> f64;
    fn p_del(&self) -> f64;
    fn accepted(&self) -> bool;
}

impl RatePowerSample for SweepRecord {
    fn one_minus_ser(&self) -> f64 {
        1.0 - self.ser
    }
    fn p_del(&self) -> f64 {
        self.p_del
    }
    fn accepted(&self) -> bool {
        self.accepted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub one_minus_ser: f64,
    pub p_del: f64,
}

/// Pareto frontier of accepted records, sorted by `1 − SER` descending.
pub fn rate_power_curve<R: RatePowerSample>(records: &[R]) -> Vec<RatePoint> {
    let mut pts: Vec<RatePoint> = records
        .iter()
        .filter(|r| r.accepted())
        .map(|r| RatePoint {
            one_minus_ser: r.one_minus_ser(),
            p_del: r.p_del(),
        })
        .collect();
    if pts.is_empty() {
        log::warn!("no accepted runs; rate-power curve is empty");
        return pts;
    }
    pts.sort_by(|a, b| {
        b.one_minus_ser
            .total_cmp(&a.one_minus_ser)
            .then(b.p_del.total_cmp(&a.p_del))
    });
    let mut best = f64::NEG_INFINITY;
    pts.retain(|p| {
        if p.p_del > best {
            best = p.p_del;
            true
        } else {
            false
        }
    });
    pts
}

fn bin_index(one_minus_ser: f64, width: f64) -> i64 {
    let last = (1.0 / width).round() as i64 - 1;
    ((one_minus_ser / width).floor() as i64).min(last)
}

/// Largest `p_del` of a curve in each `1 − SER` bin.
pub fn bin_maxima(curve: &[RatePoint], width: f64) -> BTreeMap<i64, f64> {
    let mut bins = BTreeMap::new();
    for p in curve {
        let e = bins
            .entry(bin_index(p.one_minus_ser, width))
            .or_insert(f64::NEG_INFINITY);
        *e = f64::max(*e, p.p_del);
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeOrdering {
    /// Bins populated by at least two sizes.
    pub shared_bins: Vec<i64>,
    /// Shared bins where `p_del` decreases with a larger size.
    pub violations: Vec<i64>,
}

/// Checks that `p_del` does not drop with constellation size inside each
/// shared `1 − SER` bin. `curves` pairs each size with its curve.
pub fn size_ordering(curves: &[(usize, Vec<RatePoint>)], width: f64) -> SizeOrdering {
    let mut sorted: Vec<_> = curves.iter().collect();
    sorted.sort_by_key(|(m, _)| *m);
    let maxima: Vec<BTreeMap<i64, f64>> =
        sorted.iter().map(|(_, c)| bin_maxima(c, width)).collect();
    let mut all_bins: Vec<i64> = maxima.iter().flat_map(|b| b.keys().copied()).collect();
    all_bins.sort_unstable();
    all_bins.dedup();

    let mut shared_bins = Vec::new();
    let mut violations = Vec::new();
    for bin in all_bins {
        let values: Vec<f64> = maxima.iter().filter_map(|b| b.get(&bin).copied()).collect();
        if values.len() < 2 {
            continue;
        }
        shared_bins.push(bin);
        if values.windows(2).any(|w| w[1] < w[0]) {
            violations.push(bin);
        }
    }
    SizeOrdering {
        shared_bins,
        violations,
    }
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Monte-Carlo `E[I0(√2·B·|X + N|)]` over uniform messages and channel
/// noise. Diagnostic only; training uses the noiseless metric.
pub fn noisy_received_metric<R: Rng + ?Sized>(
    constellation: &Constellation,
    snr_db: f64,
    rectenna: &RectennaParams,
    samples: usize,
    rng: &mut R,
) -> Result<f64, SweepError> {
    if samples == 0 || constellation.is_empty() {
        return Err(TrainError::NoSamples.into());
    }
    let scale = SQRT_2 * rectenna.b();
    let noise = awgn_noise(samples, snr_db, constellation.avg_power, rng);
    let mut sum = 0.0;
    for n in noise {
        let x: Complex64 = constellation.points[rng.random_range(0..constellation.len())];
        sum += bessel_i0(scale * (x + n).norm()).map_err(|_| TrainError::NoSamples)?;
    }
    Ok(sum / samples as f64)
}
