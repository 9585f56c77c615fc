//! The noise–loss equivalence for trusted detector noise.
//!
//! A detector with efficiency `η_d` and thermal noise `n̄` produces the same
//! outcome statistics as a noiseless detector of efficiency
//! `η_e = η_d / r²` whose outcomes are multiplied by `r`, where
//! `r² = 1 + 2n̄(1 − η_d)` for homodyne and `r² = 1 + n̄(1 − η_d)` for
//! heterodyne detection. Dividing the noisy outcomes by `r` therefore turns a
//! trusted-noise detector into a slightly lossier ideal one.

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorKind, DetectorSpec};
use crate::error::{check_range, Error, Result};
use crate::gaussian::VACUUM_VARIANCE;

/// Outcome rescaling factor and reduced efficiency for one detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalePlan {
    pub kind: DetectorKind,
    pub eta_d: f64,
    /// `None` for plans built in the `η_d → 1` limit, where `n̄` diverges.
    pub nbar: Option<f64>,
    /// `n̄(1 − η_d)`.
    pub nu: f64,
    pub r: f64,
    pub r_squared: f64,
    /// `r² − 1`, kept separately because `r_squared - 1.0` loses digits when
    /// the noise is small.
    pub excess: f64,
    pub eta_e: f64,
}

impl RescalePlan {
    fn from_parts(kind: DetectorKind, eta_d: f64, nbar: Option<f64>, nu: f64) -> Self {
        let excess = kind.noise_multiplier() * nu;
        let r_squared = 1.0 + excess;
        RescalePlan {
            kind,
            eta_d,
            nbar,
            nu,
            r: r_squared.sqrt(),
            r_squared,
            excess,
            eta_e: eta_d / r_squared,
        }
    }

    /// Maps a noisy-detector outcome to the equivalent lossy-detector outcome.
    pub fn rescale(&self, outcome: f64) -> f64 {
        outcome / self.r
    }
}

/// The detector noise figure `ν = n̄(1 − η_d)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NoiseFigure {
    pub nu: f64,
}

impl NoiseFigure {
    pub fn new(nu: f64) -> Result<Self> {
        check_range("nu", nu, nu >= 0.0, "nu >= 0")?;
        Ok(Self { nu })
    }

    /// From the headline figure `2n̄(1 − η_d)`.
    pub fn from_two_nu(two_nu: f64) -> Result<Self> {
        Self::new(two_nu / 2.0)
    }
}

pub fn rescale_plan(spec: &DetectorSpec) -> RescalePlan {
    RescalePlan::from_parts(spec.kind, spec.eta_d(), Some(spec.nbar()), spec.nu())
}

/// Plan for a unit-efficiency detector that still carries noise `ν`, taken
/// as the limit `η_d → 1` at fixed `n̄(1 − η_d)`.
pub fn rescale_plan_limit(nu: NoiseFigure, kind: DetectorKind) -> RescalePlan {
    RescalePlan::from_parts(kind, 1.0, None, nu.nu)
}

/// Inverts a vacuum-probe measurement into a noise figure, assuming unit
/// efficiency. For heterodyne, `var_x` is the per-component variance.
pub fn noise_figure_from_vacuum_variance(var_x: f64, kind: DetectorKind) -> Result<NoiseFigure> {
    let floor = vacuum_floor(kind);
    if !(var_x.is_finite() && var_x >= floor) {
        return Err(Error::Domain {
            name: "vacuum variance",
            value: var_x,
            expected: match kind {
                DetectorKind::Homodyne => "variance >= 1/4 (homodyne vacuum floor)",
                DetectorKind::Heterodyne => "variance >= 1/2 (heterodyne vacuum floor)",
            },
        });
    }
    let nu = (var_x / floor - 1.0) / kind.noise_multiplier();
    NoiseFigure::new(nu)
}

/// Outcome variance of a vacuum input on a noiseless unit-efficiency detector.
pub fn vacuum_floor(kind: DetectorKind) -> f64 {
    match kind {
        DetectorKind::Homodyne => VACUUM_VARIANCE,
        DetectorKind::Heterodyne => 2.0 * VACUUM_VARIANCE,
    }
}

/// How a detector with a better reduced efficiency is brought down to the
/// common minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonizeStrategy {
    /// Insert a pure loss `η_add` in front of the detector.
    AddedLoss,
    /// Add synthetic Gaussian noise to the outcomes.
    AddedNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub spec: DetectorSpec,
    pub plan: RescalePlan,
    /// Transmittance of the inserted loss; 1 when nothing is inserted.
    pub added_loss: f64,
    /// Increase of the noise figure `ν`; 0 when no noise is added.
    pub added_nu: f64,
    /// Variance of the Gaussian noise to add to each outcome component
    /// (before rescaling) to realize `added_nu`.
    pub outcome_noise_variance: f64,
    /// Plan of the adjusted detector; its `eta_e` is the common minimum.
    pub adjusted: RescalePlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonization {
    pub strategy: HarmonizeStrategy,
    pub eta_e_min: f64,
    pub adjustments: Vec<Adjustment>,
}

/// Brings every detector to the worst reduced efficiency among them.
///
/// An inserted loss leaves `ν` unchanged (the loss and the detector's own
/// beam splitter compose to efficiency `η_d·η_add` with the same noise
/// figure), so the required loss is `η_e^(min) / η_e`. Added outcome noise
/// of variance `δ` raises `ν` by `2δ` for either detector kind.
pub fn harmonize(specs: &[DetectorSpec], strategy: HarmonizeStrategy) -> Result<Harmonization> {
    if specs.is_empty() {
        return Err(Error::Config("harmonize needs at least one detector".into()));
    }
    let plans: Vec<RescalePlan> = specs.iter().map(rescale_plan).collect();
    let eta_e_min = plans.iter().map(|p| p.eta_e).fold(f64::INFINITY, f64::min);

    let adjustments = specs
        .iter()
        .zip(&plans)
        .map(|(spec, plan)| {
            if plan.eta_e == eta_e_min {
                return Adjustment {
                    spec: *spec,
                    plan: *plan,
                    added_loss: 1.0,
                    added_nu: 0.0,
                    outcome_noise_variance: 0.0,
                    adjusted: *plan,
                };
            }
            match strategy {
                HarmonizeStrategy::AddedLoss => {
                    let added_loss = eta_e_min / plan.eta_e;
                    let eta_d = plan.eta_d * added_loss;
                    let nbar = plan.nu / (1.0 - eta_d);
                    Adjustment {
                        spec: *spec,
                        plan: *plan,
                        added_loss,
                        added_nu: 0.0,
                        outcome_noise_variance: 0.0,
                        adjusted: RescalePlan::from_parts(spec.kind, eta_d, Some(nbar), plan.nu),
                    }
                }
                HarmonizeStrategy::AddedNoise => {
                    let c = spec.kind.noise_multiplier();
                    let target_excess = plan.eta_d / eta_e_min - 1.0;
                    let added_nu = (target_excess / c - plan.nu).max(0.0);
                    let nu = plan.nu + added_nu;
                    let nbar = (spec.loss() > 0.0).then(|| nu / spec.loss());
                    Adjustment {
                        spec: *spec,
                        plan: *plan,
                        added_loss: 1.0,
                        added_nu,
                        outcome_noise_variance: added_nu / 2.0,
                        adjusted: RescalePlan::from_parts(spec.kind, plan.eta_d, nbar, nu),
                    }
                }
            }
        })
        .collect();

    Ok(Harmonization {
        strategy,
        eta_e_min,
        adjustments,
    })
}
