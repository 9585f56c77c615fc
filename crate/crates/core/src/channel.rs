//! Phase-invariant Gaussian channel and the effective channel parameters seen
//! by a key-rate evaluator under the ideal, trusted and untrusted detector
//! scenarios.
//!
//! Excess noise is output-referred and expressed in vacuum units: an excess
//! noise `ξ` raises each quadrature variance from `1/4` to `(1 + ξ)/4`. The
//! untrusted detector noise figure `2n̄(1 − η_d)` is added to it directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorSpec;
use crate::error::{check_range, Error, Result};
use crate::gaussian::GaussianState;
use crate::trusted::rescale_plan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Transmittance η.
    pub eta: f64,
    /// Input-referred excess noise ξ₀; the output excess noise is `η·ξ₀`.
    pub xi0: f64,
}

impl ChannelSpec {
    pub fn new(eta: f64, xi0: f64) -> Result<Self> {
        check_range("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
        check_range("xi0", xi0, xi0 >= 0.0, "xi0 >= 0")?;
        Ok(Self { eta, xi0 })
    }

    /// Channel with transmittance `10^(−loss_db/10)`.
    pub fn from_loss_db(loss_db: f64, xi0: f64) -> Result<Self> {
        check_range("loss_db", loss_db, loss_db >= 0.0, "loss_db >= 0")?;
        Self::new(10f64.powf(-loss_db / 10.0), xi0)
    }

    pub fn excess_noise(&self) -> f64 {
        self.eta * self.xi0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Ideal,
    Trusted,
    Untrusted,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Ideal, Scenario::Trusted, Scenario::Untrusted];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Ideal => "ideal",
            Scenario::Trusted => "trusted",
            Scenario::Untrusted => "untrusted",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(Scenario::Ideal),
            "trusted" => Ok(Scenario::Trusted),
            "untrusted" => Ok(Scenario::Untrusted),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Effective transmittance and output-referred excess noise handed to a
/// key-rate evaluator that assumes an ideal detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    pub t_eff: f64,
    pub xi_eff: f64,
}

/// Loss `η` followed by a Gaussian random displacement of variance
/// parameter `η·ξ₀`.
pub fn transmit(state: &GaussianState, spec: &ChannelSpec) -> Result<GaussianState> {
    if state.n_modes() != 1 {
        return Err(Error::NotSingleMode(state.n_modes()));
    }
    state
        .loss_channel(0, spec.eta)?
        .random_displacement(0, spec.excess_noise())
}

/// Ideal: `(η, ηξ₀)`. Trusted: `(η·η_e, η·η_e·ξ₀)`. Untrusted:
/// `(η·η_d, η·η_d·ξ₀ + 2n̄(1 − η_d))`.
pub fn scenario_params(
    channel: &ChannelSpec,
    detector: Option<&DetectorSpec>,
    scenario: Scenario,
) -> Result<ScenarioParams> {
    let (t_eff, xi_eff) = match (scenario, detector) {
        (Scenario::Ideal, _) => (channel.eta, channel.eta * channel.xi0),
        (Scenario::Trusted, Some(d)) => {
            let eta_e = rescale_plan(d).eta_e;
            trusted_params(channel, eta_e)
        }
        (Scenario::Untrusted, Some(d)) => untrusted_params(channel, d.eta_d(), 2.0 * d.nu()),
        (s, None) => {
            return Err(Error::Config(format!(
                "the {s} scenario needs a detector specification"
            )))
        }
    };
    Ok(ScenarioParams {
        scenario,
        t_eff,
        xi_eff,
    })
}

/// Trusted-scenario parameters for a given (possibly harmonized) `η_e`.
pub fn trusted_params(channel: &ChannelSpec, eta_e: f64) -> (f64, f64) {
    let t = channel.eta * eta_e;
    (t, t * channel.xi0)
}

pub(crate) fn untrusted_params(channel: &ChannelSpec, eta_d: f64, two_nu: f64) -> (f64, f64) {
    let t = channel.eta * eta_d;
    (t, t * channel.xi0 + two_nu)
}
