//! Key-rate scans over channel loss for the ideal, trusted and untrusted
//! detector scenarios.
//!
//! Every scenario is reduced to an effective `(t_eff, xi_eff)` pair seen by
//! an ideal detector, and that pair is handed to a [`RateFunction`]. The
//! shipped [`ReferenceRate`] is the asymptotic Gaussian-modulation,
//! reverse-reconciliation bound against collective attacks.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{scenario_params, trusted_params, untrusted_params, ChannelSpec, Scenario};
use crate::detector::{DetectorKind, DetectorSpec};
use crate::error::{check_range, Error, Result};
use crate::lab::fmt_f64;
use crate::trusted::{harmonize, HarmonizeStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolVariant {
    /// Every round is measured by heterodyne detection.
    AllHeterodyne,
    /// Key rounds use homodyne detection and test rounds heterodyne.
    Hybrid,
}

impl ProtocolVariant {
    /// Detector kinds the protocol uses.
    pub fn detector_kinds(self) -> &'static [DetectorKind] {
        match self {
            ProtocolVariant::AllHeterodyne => &[DetectorKind::Heterodyne],
            ProtocolVariant::Hybrid => &[DetectorKind::Homodyne, DetectorKind::Heterodyne],
        }
    }

    /// Measurement from which the key is distilled.
    pub fn key_detector(self) -> DetectorKind {
        match self {
            ProtocolVariant::AllHeterodyne => DetectorKind::Heterodyne,
            ProtocolVariant::Hybrid => DetectorKind::Homodyne,
        }
    }
}

/// A key-rate evaluator for an ideal detector behind a channel of
/// transmittance `t_eff` and output excess noise `xi_eff` (vacuum units).
pub trait RateFunction: Sync {
    fn name(&self) -> &str;

    /// Rate in bits per pulse, clamped at zero.
    fn rate(&self, t_eff: f64, xi_eff: f64, protocol: ProtocolVariant) -> Result<f64>;
}

/// Asymptotic reverse-reconciliation rate `β·I_AB − χ_BE` for Gaussian
/// modulation of variance `modulation_variance` (shot-noise units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRate {
    pub modulation_variance: f64,
    pub reconciliation_efficiency: f64,
}

impl Default for ReferenceRate {
    fn default() -> Self {
        Self {
            modulation_variance: 4.0,
            reconciliation_efficiency: 0.95,
        }
    }
}

// Von Neumann entropy of a thermal mode with symplectic eigenvalue `nu`
// (shot-noise units, vacuum = 1).
fn g(nu: f64) -> f64 {
    let plus = (nu + 1.0) / 2.0;
    let minus = (nu - 1.0) / 2.0;
    if minus <= 0.0 {
        return 0.0;
    }
    plus * plus.log2() - minus * minus.log2()
}

impl ReferenceRate {
    pub const NAME: &'static str = "reference";

    /// `(I_AB, χ_BE)` for the given effective channel.
    pub fn components(&self, t_eff: f64, xi_eff: f64, detector: DetectorKind) -> (f64, f64) {
        let v_a = self.modulation_variance;
        let v = v_a + 1.0;
        let v_b = t_eff * v_a + 1.0 + xi_eff;
        let c2 = t_eff * (v * v - 1.0);

        let a_sum = v * v + v_b * v_b - 2.0 * c2;
        let det = (v * v_b - c2).powi(2);
        let disc = (a_sum * a_sum - 4.0 * det).max(0.0).sqrt();
        let nu1 = (0.5 * (a_sum + disc)).sqrt();
        let nu2 = (0.5 * (a_sum - disc)).max(1.0).sqrt();

        let (mutual, nu3) = match detector {
            DetectorKind::Homodyne => (
                0.5 * (v_b / (1.0 + xi_eff)).log2(),
                (v * (v - c2 / v_b)).sqrt(),
            ),
            DetectorKind::Heterodyne => (
                ((v_b + 1.0) / (2.0 + xi_eff)).log2(),
                v - c2 / (v_b + 1.0),
            ),
        };
        (mutual, g(nu1) + g(nu2) - g(nu3))
    }
}

impl RateFunction for ReferenceRate {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn rate(&self, t_eff: f64, xi_eff: f64, protocol: ProtocolVariant) -> Result<f64> {
        check_range("t_eff", t_eff, t_eff > 0.0 && t_eff <= 1.0, "0 < t_eff <= 1")?;
        check_range("xi_eff", xi_eff, xi_eff >= 0.0, "xi_eff >= 0")?;
        let (mutual, holevo) = self.components(t_eff, xi_eff, protocol.key_detector());
        let k = self.reconciliation_efficiency * mutual - holevo;
        if !k.is_finite() {
            return Err(Error::Rate(format!(
                "non-finite rate at t_eff = {t_eff}, xi_eff = {xi_eff}"
            )));
        }
        Ok(k.max(0.0))
    }
}

/// Looks up a shipped rate function by name.
pub fn rate_function_by_name(name: &str) -> Result<Box<dyn RateFunction>> {
    match name {
        ReferenceRate::NAME => Ok(Box::new(ReferenceRate::default())),
        other => Err(Error::Config(format!("unknown rate function '{other}'"))),
    }
}

fn default_rate_function() -> String {
    ReferenceRate::NAME.to_string()
}

fn default_eps_sec_log2() -> i32 {
    -50
}

fn default_pulses() -> f64 {
    1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Channel loss points in dB, strictly increasing.
    pub loss_db: Vec<f64>,
    pub xi0: f64,
    pub protocol: ProtocolVariant,
    /// One detector per kind the protocol uses.
    pub detectors: Vec<DetectorSpec>,
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_rate_function")]
    pub rate_function: String,
    /// `log₂ ε_sec`; carried for finite-size evaluators, unused by the
    /// reference rate.
    #[serde(default = "default_eps_sec_log2")]
    pub eps_sec_log2: i32,
    /// Number of transmitted pulses; carried like `eps_sec_log2`.
    #[serde(default = "default_pulses")]
    pub pulses: f64,
}

/// `start, start + step, …` up to and including `stop` (within 1e−9·step).
pub fn loss_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    check_range("step", step, step > 0.0, "step > 0")?;
    check_range("start", start, start >= 0.0, "start >= 0")?;
    check_range("stop", stop, stop >= start, "stop >= start")?;
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

impl ScanConfig {
    /// Both detectors of the protocol share `η_d` and noise figure `nu`.
    pub fn for_protocol(
        protocol: ProtocolVariant,
        eta_d: f64,
        nu: f64,
        xi0: f64,
        loss_db: Vec<f64>,
    ) -> Result<Self> {
        let detectors = protocol
            .detector_kinds()
            .iter()
            .map(|&k| DetectorSpec::from_noise_figure(k, eta_d, nu))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            loss_db,
            xi0,
            protocol,
            detectors,
            scenarios: Scenario::ALL.to_vec(),
            rate_function: default_rate_function(),
            eps_sec_log2: default_eps_sec_log2(),
            pulses: default_pulses(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.loss_db.is_empty() {
            return Err(Error::Config("loss grid is empty".into()));
        }
        if self.loss_db.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Config("loss grid must be strictly increasing".into()));
        }
        if self.loss_db.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("loss values must be finite and >= 0 dB".into()));
        }
        check_range("xi0", self.xi0, self.xi0 >= 0.0, "xi0 >= 0")?;
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios selected".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors given".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub loss_db: f64,
    pub scenario: Scenario,
    pub t_eff: f64,
    pub xi_eff: f64,
    pub rate: f64,
    /// `"ok"`, or the evaluator's error message (rate is then 0).
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub rate_function: String,
    /// Common reduced efficiency after harmonizing the protocol's detectors.
    pub eta_e_min: f64,
    /// Worst `η_d` and noise figure `2n̄(1 − η_d)` used for the untrusted
    /// scenario.
    pub untrusted_eta_d: f64,
    pub untrusted_two_nu: f64,
    pub eps_sec: f64,
    pub pulses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub config: ScanConfig,
    pub metadata: ScanMetadata,
    pub rows: Vec<ScanRow>,
}

/// Runs the scan with the rate function named in the config.
pub fn run_scan(config: &ScanConfig) -> Result<ScanTable> {
    let rate = rate_function_by_name(&config.rate_function)?;
    run_scan_with(config, rate.as_ref())
}

pub fn run_scan_with(config: &ScanConfig, rate_fn: &dyn RateFunction) -> Result<ScanTable> {
    config.validate()?;
    let eta_e_min = harmonize(&config.detectors, HarmonizeStrategy::AddedLoss)?.eta_e_min;
    let untrusted_eta_d = config
        .detectors
        .iter()
        .map(|d| d.eta_d())
        .fold(f64::INFINITY, f64::min);
    let untrusted_two_nu = config
        .detectors
        .iter()
        .map(|d| 2.0 * d.nu())
        .fold(0.0, f64::max);

    let mut points: Vec<(Scenario, f64)> = config
        .scenarios
        .iter()
        .flat_map(|&s| config.loss_db.iter().map(move |&l| (s, l)))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();

    let rows = points
        .par_iter()
        .map(|&(scenario, loss_db)| {
            let channel = ChannelSpec::from_loss_db(loss_db, config.xi0)?;
            let (t_eff, xi_eff) = match scenario {
                Scenario::Ideal => {
                    let p = scenario_params(&channel, None, Scenario::Ideal)?;
                    (p.t_eff, p.xi_eff)
                }
                Scenario::Trusted => trusted_params(&channel, eta_e_min),
                Scenario::Untrusted => untrusted_params(&channel, untrusted_eta_d, untrusted_two_nu),
            };
            let (rate, status) = match rate_fn.rate(t_eff, xi_eff, config.protocol) {
                Ok(r) => (r, "ok".to_string()),
                Err(e) => (0.0, e.to_string()),
            };
            Ok(ScanRow {
                loss_db,
                scenario,
                t_eff,
                xi_eff,
                rate,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScanTable {
        config: config.clone(),
        metadata: ScanMetadata {
            rate_function: rate_fn.name().to_string(),
            eta_e_min,
            untrusted_eta_d,
            untrusted_two_nu,
            eps_sec: 2f64.powi(config.eps_sec_log2),
            pulses: config.pulses,
        },
        rows,
    })
}

impl ScanTable {
    pub const CSV_HEADER: &'static str = "loss_dB,scenario,t_eff,xi_eff,rate,status";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let status = if r.status.contains([',', '"', '\n']) {
                format!("\"{}\"", r.status.replace('"', "\"\""))
            } else {
                r.status.clone()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(r.loss_db),
                r.scenario,
                fmt_f64(r.t_eff),
                fmt_f64(r.xi_eff),
                fmt_f64(r.rate),
                status
            );
        }
        out
    }

    pub fn rows_for(&self, scenario: Scenario) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(move |r| r.scenario == scenario)
    }
}
