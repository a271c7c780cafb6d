//! Learned constellations for simultaneous wireless information and power
//! transfer over an AWGN channel with a nonlinear rectenna.
//!
//! The crate is organised bottom-up:
//!
//! - [`special_fn`]: modified Bessel functions `I0`, `I1` and a quadrature
//!   check of the time-averaged exponential.
//! - [`eh_model`]: the rectenna delivered-power metric and threshold map.
//! - [`nn`]: dense networks, backpropagation and Adam.
//! - [`autoencoder`]: encoder/normalization/channel/decoder training.
//! - [`experiment`]: λ sweeps, best-run selection and rate-power curves.
//! - [`io`]: CSV and JSON file formats.

pub mod autoencoder;
pub mod eh_model;
pub mod experiment;
pub mod io;
pub mod nn;
pub mod special_fn;

pub use autoencoder::{
    composite_loss, encode_all, estimate_ser, estimate_ser_at, train, Constellation, LossBreakdown,
    SerEstimate, TrainConfig, TrainError, TrainedSystem,
};
pub use eh_model::{
    delivered_power_metric, delivered_power_metric_gradient, invert_power_threshold,
    power_threshold, ConstellationMetricInput, EhError, RectennaParams,
};
pub use experiment::{
    classify_shape, rate_power_curve, run_sweep, ShapeReport, SweepConfig, SweepOutcome,
    SweepRecord,
};
pub use nn::{Activation, AdamState, Mlp, NnError};
pub use num_complex::Complex64;
pub use special_fn::{bessel_i0, bessel_i1, time_average_exponential, QuadratureSpec};
