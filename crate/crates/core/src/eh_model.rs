//! Nonlinear rectenna model.
//!
//! The harvester is characterised by the metric `E[I0(√2·B·|X|)]` over the
//! channel input. The physical load power enters only through
//! [`power_threshold`], the metric level that corresponds to a DC power
//! demand at the load, and its inverse.

use crate::special_fn::{bessel_i0, bessel_i1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EhError {
    #[error("invalid rectenna parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("symbols and probabilities differ in length ({symbols} vs {probabilities})")]
    LengthMismatch {
        symbols: usize,
        probabilities: usize,
    },
    #[error("probabilities must be nonnegative and sum to 1 (sum = {0})")]
    BadProbabilities(f64),
    #[error("constellation is empty")]
    Empty,
    #[error("non-finite symbol at index {0}")]
    NonFiniteSymbol(usize),
    #[error("power threshold overflows for p_d = {0} W")]
    Overflow(f64),
    #[error("metric level {0} is unreachable (requires a finite value >= 1)")]
    Unreachable(f64),
    #[error("demanded power {0} W must be finite and nonnegative")]
    NegativePower(f64),
}

/// Diode and antenna constants of the rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RectennaParams {
    /// Reverse-bias saturation current (A).
    pub i_s: f64,
    /// Diode ideality factor.
    pub eta: f64,
    /// Thermal voltage (V).
    pub v_t: f64,
    /// Antenna resistance (Ω).
    pub r_a: f64,
    /// Load resistance (Ω).
    pub r_l: f64,
    /// Overrides the physical exponent scale `√r_a / (η·v_t)` when set.
    pub b_scale: Option<f64>,
}

impl Default for RectennaParams {
    fn default() -> Self {
        Self {
            i_s: 5e-6,
            eta: 1.05,
            v_t: 0.02585,
            r_a: 50.0,
            r_l: 1000.0,
            // Normalized symbols with the physical B (~260) would sit far
            // outside the small-signal regime.
            b_scale: Some(1.0),
        }
    }
}

impl RectennaParams {
    /// The physical constants with no `B` override.
    pub fn physical() -> Self {
        Self {
            b_scale: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EhError> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(EhError::InvalidParam {
                    name,
                    value,
                    reason: "must be finite and positive",
                })
            }
        };
        positive("i_s", self.i_s)?;
        positive("v_t", self.v_t)?;
        positive("r_a", self.r_a)?;
        positive("r_l", self.r_l)?;
        if !(1.0..=2.0).contains(&self.eta) {
            return Err(EhError::InvalidParam {
                name: "eta",
                value: self.eta,
                reason: "ideality factor must lie in [1, 2]",
            });
        }
        if let Some(b) = self.b_scale {
            positive("b_scale", b)?;
        }
        Ok(())
    }

    /// Exponent scale `B` applied to baseband amplitudes.
    pub fn b(&self) -> f64 {
        self.b_scale
            .unwrap_or_else(|| self.r_a.sqrt() / (self.eta * self.v_t))
    }
}

/// Symbols of a channel input distribution with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationMetricInput {
    symbols: Vec<Complex64>,
    probabilities: Vec<f64>,
}

impl ConstellationMetricInput {
    pub fn new(symbols: Vec<Complex64>, probabilities: Vec<f64>) -> Result<Self, EhError> {
        if symbols.is_empty() {
            return Err(EhError::Empty);
        }
        if symbols.len() != probabilities.len() {
            return Err(EhError::LengthMismatch {
                symbols: symbols.len(),
                probabilities: probabilities.len(),
            });
        }
        if let Some(i) = symbols
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(EhError::NonFiniteSymbol(i));
        }
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-12
        {
            return Err(EhError::BadProbabilities(sum));
        }
        Ok(Self {
            symbols,
            probabilities,
        })
    }

    /// Equiprobable messages.
    pub fn uniform(symbols: Vec<Complex64>) -> Result<Self, EhError> {
        let m = symbols.len();
        if m == 0 {
            return Err(EhError::Empty);
        }
        Self::new(symbols, vec![1.0 / m as f64; m])
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// `Σ p_i · I0(√2·B·|x_i|)`, the delivered-power metric `P_del`.
pub fn delivered_power_metric(
    input: &ConstellationMetricInput,
    params: &RectennaParams,
) -> Result<f64, EhError> {
    params.validate()?;
    let scale = SQRT_2 * params.b();
    input
        .symbols
        .iter()
        .zip(&input.probabilities)
        .enumerate()
        .map(|(i, (x, p))| {
            bessel_i0(scale * x.norm())
                .map(|v| p * v)
                .map_err(|_| EhError::NonFiniteSymbol(i))
        })
        .sum()
}

/// Gradient of [`delivered_power_metric`] with respect to each symbol,
/// packed as `∂/∂Re + j·∂/∂Im`.
pub fn delivered_power_metric_gradient(
    input: &ConstellationMetricInput,
    params: &RectennaParams,
) -> Result<Vec<Complex64>, EhError> {
    params.validate()?;
    let scale = SQRT_2 * params.b();
    input
        .symbols
        .iter()
        .zip(&input.probabilities)
        .enumerate()
        .map(|(i, (x, p))| {
            let r = x.norm();
            if r == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let i1 = bessel_i1(scale * r).map_err(|_| EhError::NonFiniteSymbol(i))?;
            Ok(x * (p * scale * i1 / r))
        })
        .collect()
}

/// Metric level equivalent to demanding at least `p_d` watts at the load:
/// `(1 + √p_d / (i_s·√R_L)) · exp(√(R_L·p_d) / (η·v_t))`.
pub fn power_threshold(p_d: f64, params: &RectennaParams) -> Result<f64, EhError> {
    params.validate()?;
    if !(p_d.is_finite() && p_d >= 0.0) {
        return Err(EhError::NegativePower(p_d));
    }
    let v_o = (params.r_l * p_d).sqrt();
    let linear = 1.0 + p_d.sqrt() / (params.i_s * params.r_l.sqrt());
    let value = linear * (v_o / (params.eta * params.v_t)).exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EhError::Overflow(p_d))
    }
}

/// Load DC power whose threshold equals `p_del`, found by bisection.
pub fn invert_power_threshold(p_del: f64, params: &RectennaParams) -> Result<f64, EhError> {
    params.validate()?;
    if !(p_del.is_finite() && p_del >= 1.0) {
        return Err(EhError::Unreachable(p_del));
    }
    if p_del == 1.0 {
        return Ok(0.0);
    }
    let below = |p: f64| match power_threshold(p, params) {
        Ok(v) => v < p_del,
        Err(_) => false,
    };

    let mut lo = 0.0;
    let mut hi = 1e-15;
    while below(hi) {
        lo = hi;
        hi *= 4.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
