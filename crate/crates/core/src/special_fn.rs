//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Both functions use a convergent power series up to `x = 30` and the
//! Hankel asymptotic expansion beyond. The expansion is evaluated as
//! `exp(x - ln(2πx)/2) · Σ`, so arguments up to roughly 700 stay finite.
//!
//! [`time_average_exponential`] is a quadrature oracle for the identity
//! `⟨exp(a·cos(θ - φ))⟩_θ = I0(a)`, used to validate the closed form the
//! harvester model relies on.

use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

/// Argument above which the asymptotic expansion replaces the power series.
pub const SERIES_CUTOFF: f64 = 30.0;

const MAX_SERIES_TERMS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFnError {
    #[error("argument {0} outside the domain (requires finite x >= 0)")]
    Domain(f64),
    #[error("quadrature needs at least 64 points per period, got {0}")]
    TooFewPoints(usize),
    #[error("quadrature needs at least one carrier cycle")]
    NoCycles,
    #[error("invalid quadrature input: {0}")]
    InvalidInput(&'static str),
}

fn check_domain(x: f64) -> Result<(), SpecialFnError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(SpecialFnError::Domain(x))
    }
}

/// `I0(x)` for finite `x >= 0`.
pub fn bessel_i0(x: f64) -> Result<f64, SpecialFnError> {
    check_domain(x)?;
    Ok(if x <= SERIES_CUTOFF {
        i0_series(x)
    } else {
        i0_asymptotic(x)
    })
}

/// `I1(x)` for finite `x >= 0`. This is also `dI0/dx`.
pub fn bessel_i1(x: f64) -> Result<f64, SpecialFnError> {
    check_domain(x)?;
    Ok(if x <= SERIES_CUTOFF {
        i1_series(x)
    } else {
        i1_asymptotic(x)
    })
}

/// Σ (x²/4)^k / (k!)²
pub fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    sum
}

/// (x/2) Σ (x²/4)^k / (k! (k+1)!)
pub fn i1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term < f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    0.5 * x * sum
}

/// Hankel expansion for `I_ν`, ν ∈ {0, 1}. Terms are summed while they keep
/// shrinking; the series is divergent so it stops at the smallest term.
fn hankel_sum(x: f64, four_nu_sq: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 1..MAX_SERIES_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = term * (odd * odd - four_nu_sq) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    sum
}

fn hankel_prefactor(x: f64) -> f64 {
    (x - 0.5 * (2.0 * PI * x).ln()).exp()
}

pub fn i0_asymptotic(x: f64) -> f64 {
    hankel_prefactor(x) * hankel_sum(x, 0.0)
}

pub fn i1_asymptotic(x: f64) -> f64 {
    hankel_prefactor(x) * hankel_sum(x, 4.0)
}

/// Trapezoidal rule settings for [`time_average_exponential`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    num_points: usize,
    carrier_cycles: usize,
}

impl QuadratureSpec {
    pub const MIN_POINTS: usize = 64;
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(num_points: usize, carrier_cycles: usize) -> Result<Self, SpecialFnError> {
        if num_points < Self::MIN_POINTS {
            return Err(SpecialFnError::TooFewPoints(num_points));
        }
        if carrier_cycles == 0 {
            return Err(SpecialFnError::NoCycles);
        }
        Ok(Self {
            num_points,
            carrier_cycles,
        })
    }

    pub fn with_points(num_points: usize) -> Result<Self, SpecialFnError> {
        Self::new(num_points, 1)
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn carrier_cycles(&self) -> usize {
        self.carrier_cycles
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            num_points: Self::DEFAULT_POINTS,
            carrier_cycles: 1,
        }
    }
}

/// Time average of `exp(√2·B·(Re{x}·cos ωt − Im{x}·sin ωt))` over whole
/// carrier periods for a unit rectangular pulse.
///
/// `T` and `f_c` drop out since the integrand is periodic, so the average
/// is taken over `t ∈ [0, cycles)` in units of the carrier period. For a
/// periodic integrand the composite trapezoid rule is the plain sample mean.
pub fn time_average_exponential(
    symbol: Complex64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, SpecialFnError> {
    if !(symbol.re.is_finite() && symbol.im.is_finite()) {
        return Err(SpecialFnError::InvalidInput("symbol must be finite"));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(SpecialFnError::InvalidInput("B must be positive"));
    }
    let total = spec.num_points * spec.carrier_cycles;
    let scale = SQRT_2 * b;
    let step = 2.0 * PI / spec.num_points as f64;
    let sum: f64 = (0..total)
        .map(|k| {
            let phase = step * (k % spec.num_points) as f64;
            (scale * (symbol.re * phase.cos() - symbol.im * phase.sin())).exp()
        })
        .sum();
    Ok(sum / total as f64)
}
