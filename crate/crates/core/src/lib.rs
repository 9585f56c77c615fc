//! Gaussian trusted-noise calculus for continuous-variable QKD.
//!
//! A homodyne or heterodyne detector with efficiency `η_d` and thermal
//! electronic noise `n̄` is statistically identical to a noiseless detector
//! with efficiency `η_e = η_d / r²` whose outcomes are multiplied by `r`.
//! Dividing the real detector's outcomes by `r` lets any security analysis
//! written for noiseless detectors absorb the trusted noise as a small
//! extra loss.
//!
//! * [`gaussian`]: covariance-matrix states and channels.
//! * [`detector`]: outcome densities of ideal, noisy and rescaled detectors.
//! * [`trusted`]: rescale plans, the `η_d → 1` limit, vacuum calibration and
//!   multi-detector harmonization.
//! * [`channel`]: the phase-invariant Gaussian channel and the ideal /
//!   trusted / untrusted effective parameters.
//! * [`lab`]: analytic, Monte-Carlo and quadrature verification campaigns.
//! * [`keyrate`]: scenario scans through a pluggable key-rate function.

pub mod channel;
pub mod detector;
pub mod error;
pub mod gaussian;
pub mod keyrate;
pub mod lab;
pub mod quad;
pub mod trusted;

pub use channel::{scenario_params, transmit, ChannelSpec, Scenario, ScenarioParams};
pub use detector::{
    ideal_heterodyne_density, ideal_homodyne_density, noisy_measurement_density,
    rescaled_lossy_density, sample_outcomes, DetectorKind, DetectorSpec, OutcomeDensity, Samples,
};
pub use error::{Error, Result};
pub use gaussian::{beam_splitter, GaussianState, SymplecticOp};
pub use trusted::{
    harmonize, noise_figure_from_vacuum_variance, rescale_plan, rescale_plan_limit,
    Harmonization, HarmonizeStrategy, NoiseFigure, RescalePlan,
};
