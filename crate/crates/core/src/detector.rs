//! Outcome densities of ideal, noisy and rescaled-lossy homodyne/heterodyne
//! detectors acting on single-mode Gaussian states.
//!
//! Densities are returned as closed-form Gaussian parameters so two detector
//! models can be compared exactly rather than curve against curve.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::gaussian::{GaussianState, VACUUM_VARIANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Homodyne,
    Heterodyne,
}

impl DetectorKind {
    /// Coefficient `c` in `r² = 1 + c·n̄(1 − η_d)`.
    pub fn noise_multiplier(self) -> f64 {
        match self {
            DetectorKind::Homodyne => 2.0,
            DetectorKind::Heterodyne => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Homodyne => "homodyne",
            DetectorKind::Heterodyne => "heterodyne",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homodyne" | "hom" => Ok(DetectorKind::Homodyne),
            "heterodyne" | "het" => Ok(DetectorKind::Heterodyne),
            other => Err(Error::Config(format!("unknown detector kind '{other}'"))),
        }
    }
}

/// A trusted-noise detector: a beam splitter of transmittance `eta_d` mixing
/// the signal with a thermal ancilla of mean photon number `nbar`, followed
/// by an ideal homodyne or heterodyne measurement.
///
/// The loss `1 − eta_d` is stored alongside `eta_d` so that detectors with
/// efficiency a few ulps below one keep an accurate noise figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetectorSpec")]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    eta_d: f64,
    loss: f64,
    nbar: f64,
}

#[derive(Deserialize)]
struct RawDetectorSpec {
    kind: DetectorKind,
    eta_d: f64,
    loss: Option<f64>,
    nbar: f64,
}

impl TryFrom<RawDetectorSpec> for DetectorSpec {
    type Error = Error;

    fn try_from(raw: RawDetectorSpec) -> Result<Self> {
        check_range("eta_d", raw.eta_d, raw.eta_d > 0.0 && raw.eta_d <= 1.0, "0 < eta_d <= 1")?;
        let Some(loss) = raw.loss else {
            return Self::new(raw.kind, raw.eta_d, raw.nbar);
        };
        check_range("loss", loss, (0.0..1.0).contains(&loss), "0 <= loss < 1")?;
        if (raw.eta_d + loss - 1.0).abs() > 4.0 * f64::EPSILON {
            return Err(Error::Config(format!(
                "eta_d = {} and loss = {loss} do not sum to 1",
                raw.eta_d
            )));
        }
        Self::build(raw.kind, raw.eta_d, loss, raw.nbar)
    }
}

impl DetectorSpec {
    pub fn new(kind: DetectorKind, eta_d: f64, nbar: f64) -> Result<Self> {
        check_range("eta_d", eta_d, eta_d > 0.0 && eta_d <= 1.0, "0 < eta_d <= 1")?;
        Self::build(kind, eta_d, 1.0 - eta_d, nbar)
    }

    /// Parameterizes the detector by its loss `1 − η_d` instead of `η_d`.
    pub fn from_loss(kind: DetectorKind, loss: f64, nbar: f64) -> Result<Self> {
        check_range("loss", loss, (0.0..1.0).contains(&loss), "0 <= loss < 1")?;
        Self::build(kind, 1.0 - loss, loss, nbar)
    }

    /// Builds the detector whose noise figure `n̄(1 − η_d)` equals `nu`.
    /// A nonzero `nu` needs `eta_d < 1`.
    pub fn from_noise_figure(kind: DetectorKind, eta_d: f64, nu: f64) -> Result<Self> {
        check_range("eta_d", eta_d, eta_d > 0.0 && eta_d <= 1.0, "0 < eta_d <= 1")?;
        check_range("nu", nu, nu >= 0.0, "nu >= 0")?;
        let loss = 1.0 - eta_d;
        if nu == 0.0 {
            return Self::build(kind, eta_d, loss, 0.0);
        }
        if loss == 0.0 {
            return Err(Error::Domain {
                name: "eta_d",
                value: eta_d,
                expected: "eta_d < 1 when the noise figure is nonzero",
            });
        }
        Self::build(kind, eta_d, loss, nu / loss)
    }

    fn build(kind: DetectorKind, eta_d: f64, loss: f64, nbar: f64) -> Result<Self> {
        check_range("nbar", nbar, nbar >= 0.0, "nbar >= 0")?;
        check_range("nbar*(1-eta_d)", nbar * loss, true, "finite")?;
        Ok(Self {
            kind,
            eta_d,
            loss,
            nbar,
        })
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }

    /// `1 − η_d`.
    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// The noise figure `ν = n̄(1 − η_d)`.
    pub fn nu(&self) -> f64 {
        self.nbar * self.loss
    }

    pub fn with_kind(self, kind: DetectorKind) -> Self {
        Self { kind, ..self }
    }
}

/// Closed-form Gaussian density of a measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeDensity {
    /// Homodyne outcome `x ∈ ℝ`.
    RealLine { mean: f64, variance: f64 },
    /// Heterodyne outcome `ω = ω_R + iω_I`, stored as `(ω_R, ω_I)`.
    ComplexPlane { mean: [f64; 2], cov: [[f64; 2]; 2] },
}

impl OutcomeDensity {
    pub fn dim(&self) -> usize {
        match self {
            OutcomeDensity::RealLine { .. } => 1,
            OutcomeDensity::ComplexPlane { .. } => 2,
        }
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            OutcomeDensity::RealLine { .. } => DetectorKind::Homodyne,
            OutcomeDensity::ComplexPlane { .. } => DetectorKind::Heterodyne,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match *self {
            OutcomeDensity::RealLine { mean, .. } => vec![mean],
            OutcomeDensity::ComplexPlane { mean, .. } => mean.to_vec(),
        }
    }

    /// Per-component variances (the diagonal of the covariance).
    pub fn variances(&self) -> Vec<f64> {
        match *self {
            OutcomeDensity::RealLine { variance, .. } => vec![variance],
            OutcomeDensity::ComplexPlane { cov, .. } => vec![cov[0][0], cov[1][1]],
        }
    }

    /// Off-diagonal covariance; zero for homodyne densities.
    pub fn covariance(&self) -> f64 {
        match *self {
            OutcomeDensity::RealLine { .. } => 0.0,
            OutcomeDensity::ComplexPlane { cov, .. } => cov[0][1],
        }
    }

    /// Density of `λ = r·λ'` when `λ'` follows `self`.
    pub fn scaled(&self, r: f64) -> OutcomeDensity {
        let r2 = r * r;
        match *self {
            OutcomeDensity::RealLine { mean, variance } => OutcomeDensity::RealLine {
                mean: r * mean,
                variance: r2 * variance,
            },
            OutcomeDensity::ComplexPlane { mean, cov } => OutcomeDensity::ComplexPlane {
                mean: [r * mean[0], r * mean[1]],
                cov: [
                    [r2 * cov[0][0], r2 * cov[0][1]],
                    [r2 * cov[1][0], r2 * cov[1][1]],
                ],
            },
        }
    }

    /// Adds independent Gaussian noise of variance `extra` to every component.
    pub fn with_added_noise(&self, extra: f64) -> OutcomeDensity {
        match *self {
            OutcomeDensity::RealLine { mean, variance } => OutcomeDensity::RealLine {
                mean,
                variance: variance + extra,
            },
            OutcomeDensity::ComplexPlane { mean, cov } => OutcomeDensity::ComplexPlane {
                mean,
                cov: [[cov[0][0] + extra, cov[0][1]], [cov[1][0], cov[1][1] + extra]],
            },
        }
    }

    /// Marginal of one component as a real-line density.
    pub fn marginal(&self, component: usize) -> Result<OutcomeDensity> {
        match *self {
            OutcomeDensity::RealLine { .. } if component == 0 => Ok(*self),
            OutcomeDensity::ComplexPlane { mean, cov } if component < 2 => {
                Ok(OutcomeDensity::RealLine {
                    mean: mean[component],
                    variance: cov[component][component],
                })
            }
            _ => Err(Error::Dimension {
                expected: self.dim(),
                got: component + 1,
            }),
        }
    }

    /// Probability density at `point` (length must equal [`dim`](Self::dim)).
    pub fn pdf(&self, point: &[f64]) -> f64 {
        match *self {
            OutcomeDensity::RealLine { mean, variance } => {
                let d = point[0] - mean;
                (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
            }
            OutcomeDensity::ComplexPlane { mean, cov } => {
                let (dx, dy) = (point[0] - mean[0], point[1] - mean[1]);
                let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
                let q = (cov[1][1] * dx * dx - 2.0 * cov[0][1] * dx * dy + cov[0][0] * dy * dy)
                    / det;
                (-q / 2.0).exp() / (2.0 * PI * det.sqrt())
            }
        }
    }
}

fn single_mode(state: &GaussianState) -> Result<()> {
    if state.n_modes() == 1 {
        Ok(())
    } else {
        Err(Error::NotSingleMode(state.n_modes()))
    }
}

/// Ideal homodyne (x-quadrature) outcome density `⟨x|ρ|x⟩`.
pub fn ideal_homodyne_density(state: &GaussianState) -> Result<OutcomeDensity> {
    single_mode(state)?;
    let [mx, _] = state.mode_mean(0)?;
    let c = state.mode_cov(0)?;
    Ok(OutcomeDensity::RealLine {
        mean: mx,
        variance: c[0][0],
    })
}

/// Ideal heterodyne outcome density `⟨ω|ρ|ω⟩/π`, i.e. the Husimi Q-function:
/// mean equal to the state's mean and covariance `cov + I/4`.
pub fn ideal_heterodyne_density(state: &GaussianState) -> Result<OutcomeDensity> {
    single_mode(state)?;
    let mean = state.mode_mean(0)?;
    let c = state.mode_cov(0)?;
    Ok(OutcomeDensity::ComplexPlane {
        mean,
        cov: [
            [c[0][0] + VACUUM_VARIANCE, c[0][1]],
            [c[1][0], c[1][1] + VACUUM_VARIANCE],
        ],
    })
}

pub fn ideal_density(state: &GaussianState, kind: DetectorKind) -> Result<OutcomeDensity> {
    match kind {
        DetectorKind::Homodyne => ideal_homodyne_density(state),
        DetectorKind::Heterodyne => ideal_heterodyne_density(state),
    }
}

/// The noisy detector: thermal mixing at `η_d`, then ideal detection.
pub fn noisy_measurement_density(
    input: &GaussianState,
    spec: &DetectorSpec,
) -> Result<OutcomeDensity> {
    single_mode(input)?;
    let noisy = input.thermal_mix_split(0, spec.eta_d(), spec.loss(), spec.nbar())?;
    ideal_density(&noisy, spec.kind)
}

/// The equivalent model: pure loss `eta_e`, ideal detection, then the
/// outcome is multiplied by `r ≥ 1`.
pub fn rescaled_lossy_density(
    input: &GaussianState,
    kind: DetectorKind,
    eta_e: f64,
    r: f64,
) -> Result<OutcomeDensity> {
    single_mode(input)?;
    check_range("r", r, r >= 1.0, "r >= 1")?;
    let lossy = input.loss_channel(0, eta_e)?;
    Ok(ideal_density(&lossy, kind)?.scaled(r))
}

/// Row-major block of i.i.d. outcomes; `dim` values per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(i)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    /// Multiplies every outcome by `factor` in place.
    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Seeded generator for stream `stream` of `seed`. Distinct streams of the
/// same seed are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` outcomes from `density`. Deterministic in `(seed, stream)`.
pub fn sample_outcomes(
    density: &OutcomeDensity,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Samples> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, stream);
    let values = match *density {
        OutcomeDensity::RealLine { mean, variance } => {
            let sd = variance.sqrt();
            (0..n)
                .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        OutcomeDensity::ComplexPlane { mean, cov } => {
            let l11 = cov[0][0].sqrt();
            let l21 = cov[1][0] / l11;
            let l22 = (cov[1][1] - l21 * l21).sqrt();
            let mut out = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                out.push(mean[0] + l11 * z1);
                out.push(mean[1] + l21 * z1 + l22 * z2);
            }
            out
        }
    };
    Ok(Samples {
        dim: density.dim(),
        values,
    })
}
