//! Verification campaigns for the noise–loss equivalence.
//!
//! Two POVMs coincide when their outcome distributions agree on every
//! coherent state, so each sweep walks a grid of coherent amplitudes and
//! detector specifications:
//!
//! * [`analytic_sweep`] compares the Gaussian parameters of the noisy
//!   detector with those of the rescaled lossy detector;
//! * [`monte_carlo_sweep`] samples the rescaled noisy outcomes and the lossy
//!   ideal outcomes and runs a two-sample KS test per cell, Holm-corrected
//!   across the grid;
//! * [`oracle`] recomputes the noisy density by direct numeric integration.

pub mod ks;
pub mod oracle;

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{
    ideal_density, noisy_measurement_density, rescaled_lossy_density, sample_outcomes,
    DetectorKind, DetectorSpec, OutcomeDensity,
};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::trusted::rescale_plan;

pub use ks::{holm_reject, two_sample_ks, KsResult};
pub use oracle::{mixture_oracle, DensityTable, OutcomeGrid};

/// Smallest per-cell sample count accepted for Monte-Carlo sweeps.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Deliberate faults used as sensitivity controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "factor")]
pub enum Sabotage {
    #[default]
    None,
    /// Use `r = 1`, i.e. keep the noisy outcomes as they are.
    SkipRescale,
    /// Multiply the correct `r` by the given factor (at least 1).
    WrongR(f64),
}

impl Sabotage {
    fn apply(self, r: f64) -> f64 {
        match self {
            Sabotage::None => r,
            Sabotage::SkipRescale => 1.0,
            Sabotage::WrongR(factor) => r * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest accepted scaled gap between means and between variances.
    pub param_tol: f64,
    /// Largest accepted total-variation bound.
    pub tv_tol: f64,
    /// Family-wise significance level of the KS tests.
    pub ks_alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            param_tol: 1e-12,
            tv_tol: 1e-6,
            ks_alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Coherent amplitudes as `[re, im]`.
    pub alphas: Vec<[f64; 2]>,
    pub specs: Vec<DetectorSpec>,
    pub mc_samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sabotage: Sabotage,
}

/// `|α| ∈ magnitudes` at `phases` equally spaced phases.
pub fn alpha_grid(magnitudes: &[f64], phases: usize) -> Vec<[f64; 2]> {
    magnitudes
        .iter()
        .flat_map(|&m| {
            (0..phases).map(move |k| {
                let z = Complex64::from_polar(m, 2.0 * PI * k as f64 / phases as f64);
                [z.re, z.im]
            })
        })
        .collect()
}

/// Every `(kind, η_d, ν)` combination, with `n̄ = ν/(1 − η_d)`.
pub fn spec_grid(kinds: &[DetectorKind], eta_ds: &[f64], nus: &[f64]) -> Result<Vec<DetectorSpec>> {
    let mut out = Vec::with_capacity(kinds.len() * eta_ds.len() * nus.len());
    for &kind in kinds {
        for &eta_d in eta_ds {
            for &nu in nus {
                out.push(DetectorSpec::from_noise_figure(kind, eta_d, nu)?);
            }
        }
    }
    Ok(out)
}

pub const DEFAULT_MAGNITUDES: [f64; 4] = [0.0, 1.0, 3.0, 5.0];
pub const DEFAULT_ETA_DS: [f64; 4] = [0.5, 0.7, 0.9, 1.0 - 1e-6];
pub const DEFAULT_NUS: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];
const BOTH_KINDS: [DetectorKind; 2] = [DetectorKind::Homodyne, DetectorKind::Heterodyne];

impl SweepConfig {
    /// 4 magnitudes × 8 phases × 4 efficiencies × 4 noise figures × 2 kinds.
    pub fn default_grid() -> Self {
        Self {
            alphas: alpha_grid(&DEFAULT_MAGNITUDES, 8),
            specs: spec_grid(&BOTH_KINDS, &DEFAULT_ETA_DS, &DEFAULT_NUS).expect("valid grid"),
            mc_samples: 0,
            seed: 0,
            tolerances: Tolerances::default(),
            sabotage: Sabotage::None,
        }
    }

    /// 8 amplitudes × `η_d = 0.7` × `ν ∈ {1e-3, 1e-2}` × 2 kinds = 32 cells.
    pub fn monte_carlo_grid(mc_samples: usize, seed: u64) -> Self {
        Self {
            alphas: alpha_grid(&DEFAULT_MAGNITUDES, 2),
            specs: spec_grid(&BOTH_KINDS, &[0.7], &[1e-3, 1e-2]).expect("valid grid"),
            mc_samples,
            seed,
            tolerances: Tolerances::default(),
            sabotage: Sabotage::None,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.alphas.len() * self.specs.len()
    }

    fn cell(&self, index: usize) -> ([f64; 2], DetectorSpec) {
        let n_alpha = self.alphas.len();
        (self.alphas[index % n_alpha], self.specs[index / n_alpha])
    }

    pub fn validate(&self, monte_carlo: bool) -> Result<()> {
        if self.alphas.is_empty() || self.specs.is_empty() {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        if monte_carlo && self.mc_samples < MIN_MC_SAMPLES {
            return Err(Error::Config(format!(
                "mc_samples = {} is below the minimum of {MIN_MC_SAMPLES}",
                self.mc_samples
            )));
        }
        let t = &self.tolerances;
        if !(t.param_tol >= 0.0 && t.tv_tol >= 0.0 && t.ks_alpha > 0.0 && t.ks_alpha < 1.0) {
            return Err(Error::Config("tolerances out of range".into()));
        }
        if let Sabotage::WrongR(f) = self.sabotage {
            if !(f.is_finite() && f >= 1.0) {
                return Err(Error::Config("wrong-r factor must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: usize,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub kind: DetectorKind,
    pub eta_d: f64,
    pub nbar: f64,
    pub nu: f64,
    pub mean_gap: f64,
    pub var_gap: f64,
    /// Upper bound on the total-variation distance, from the Hellinger
    /// distance between the two Gaussians.
    pub tv_estimate: f64,
    pub ks_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub cells: usize,
    pub failures: usize,
    pub worst_mean_gap: f64,
    pub worst_var_gap: f64,
    pub worst_tv_estimate: f64,
    pub max_ks_statistic: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub mode: SweepMode,
    pub config: SweepConfig,
    pub cells: Vec<CellRecord>,
    pub summary: ReportSummary,
}

/// `|a − b| / max(|a|, |b|, 1)`: relative for large values, absolute near 0.
fn scaled_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn mean_gap(a: &OutcomeDensity, b: &OutcomeDensity) -> f64 {
    a.mean()
        .iter()
        .zip(b.mean())
        .map(|(x, y)| scaled_gap(*x, y))
        .fold(0.0, f64::max)
}

fn var_gap(a: &OutcomeDensity, b: &OutcomeDensity) -> f64 {
    let va = a.variances();
    let vb = b.variances();
    let diag = va
        .iter()
        .zip(&vb)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max);
    let scale = va.iter().chain(&vb).fold(0.0f64, |m, v| m.max(*v));
    diag.max((a.covariance() - b.covariance()).abs() / scale)
}

/// Hellinger-based bound `TV ≤ H·√(2 − H²)` with `H² = 1 − BC`.
pub fn tv_bound(a: &OutcomeDensity, b: &OutcomeDensity) -> f64 {
    let d_b = match (*a, *b) {
        (
            OutcomeDensity::RealLine { mean: m1, variance: v1 },
            OutcomeDensity::RealLine { mean: m2, variance: v2 },
        ) => {
            let v = 0.5 * (v1 + v2);
            (m1 - m2).powi(2) / (8.0 * v) + 0.5 * (v / (v1 * v2).sqrt()).ln()
        }
        (
            OutcomeDensity::ComplexPlane { mean: m1, cov: c1 },
            OutcomeDensity::ComplexPlane { mean: m2, cov: c2 },
        ) => {
            let s = [
                [0.5 * (c1[0][0] + c2[0][0]), 0.5 * (c1[0][1] + c2[0][1])],
                [0.5 * (c1[1][0] + c2[1][0]), 0.5 * (c1[1][1] + c2[1][1])],
            ];
            let det = |c: [[f64; 2]; 2]| c[0][0] * c[1][1] - c[0][1] * c[1][0];
            let (dx, dy) = (m1[0] - m2[0], m1[1] - m2[1]);
            let q = (s[1][1] * dx * dx - 2.0 * s[0][1] * dx * dy + s[0][0] * dy * dy) / det(s);
            q / 8.0 + 0.5 * (det(s) / (det(c1) * det(c2)).sqrt()).ln()
        }
        _ => return 1.0,
    };
    let h2 = (-(-d_b.max(0.0)).exp_m1()).clamp(0.0, 1.0);
    (h2 * (2.0 - h2)).sqrt()
}

/// The two sides compared in every cell: the noisy detector (optionally
/// rescaled) and the equivalent model.
struct CellModels {
    noisy: OutcomeDensity,
    r_used: f64,
    eta_e: f64,
}

fn cell_models(alpha: [f64; 2], spec: &DetectorSpec, sabotage: Sabotage) -> Result<(GaussianState, CellModels)> {
    let input = GaussianState::coherent(Complex64::new(alpha[0], alpha[1]));
    let plan = rescale_plan(spec);
    let noisy = noisy_measurement_density(&input, spec)?;
    Ok((
        input,
        CellModels {
            noisy,
            r_used: sabotage.apply(plan.r),
            eta_e: plan.eta_e,
        },
    ))
}

fn summarize(cells: &[CellRecord]) -> ReportSummary {
    let failures = cells.iter().filter(|c| !c.pass).count();
    ReportSummary {
        cells: cells.len(),
        failures,
        worst_mean_gap: cells.iter().map(|c| c.mean_gap).fold(0.0, f64::max),
        worst_var_gap: cells.iter().map(|c| c.var_gap).fold(0.0, f64::max),
        worst_tv_estimate: cells.iter().map(|c| c.tv_estimate).fold(0.0, f64::max),
        max_ks_statistic: cells
            .iter()
            .filter_map(|c| c.ks_statistic)
            .reduce(f64::max),
        pass: failures == 0,
    }
}

/// Compares the noisy density with the rescaled lossy density, parameter by
/// parameter, in every grid cell.
pub fn analytic_sweep(config: &SweepConfig) -> Result<EquivalenceReport> {
    config.validate(false)?;
    let tol = config.tolerances;
    let cells = (0..config.n_cells())
        .into_par_iter()
        .map(|index| {
            let (alpha, spec) = config.cell(index);
            let (input, m) = cell_models(alpha, &spec, config.sabotage)?;
            let equivalent = rescaled_lossy_density(&input, spec.kind, m.eta_e, m.r_used)?;
            let mean_gap = mean_gap(&m.noisy, &equivalent);
            let var_gap = var_gap(&m.noisy, &equivalent);
            let tv_estimate = tv_bound(&m.noisy, &equivalent);
            Ok(CellRecord {
                index,
                alpha_re: alpha[0],
                alpha_im: alpha[1],
                kind: spec.kind,
                eta_d: spec.eta_d(),
                nbar: spec.nbar(),
                nu: spec.nu(),
                mean_gap,
                var_gap,
                tv_estimate,
                ks_statistic: None,
                p_value: None,
                pass: mean_gap <= tol.param_tol
                    && var_gap <= tol.param_tol
                    && tv_estimate <= tol.tv_tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&cells);
    Ok(EquivalenceReport {
        mode: SweepMode::Analytic,
        config: config.clone(),
        cells,
        summary,
    })
}

/// Samples both sides of every cell and tests them against each other.
///
/// The actual side draws from the noisy detector and divides by `r`; the
/// equivalent side draws from an ideal detector behind a loss `η_e`. Cell
/// `i` uses RNG streams `2i` and `2i + 1` of the configured seed.
/// Heterodyne cells test both quadratures and Bonferroni-combine the two
/// p-values; cells are then Holm-corrected at `ks_alpha`.
pub fn monte_carlo_sweep(config: &SweepConfig) -> Result<EquivalenceReport> {
    config.validate(true)?;
    let n = config.mc_samples;
    let partial = (0..config.n_cells())
        .into_par_iter()
        .map(|index| {
            let (alpha, spec) = config.cell(index);
            let (input, m) = cell_models(alpha, &spec, config.sabotage)?;
            let actual_density = m.noisy.scaled(1.0 / m.r_used);
            let equivalent_density = ideal_density(&input.loss_channel(0, m.eta_e)?, spec.kind)?;

            let stream = 2 * index as u64;
            let mut actual = sample_outcomes(&m.noisy, n, config.seed, stream)?;
            actual.scale(1.0 / m.r_used);
            let equivalent = sample_outcomes(&equivalent_density, n, config.seed, stream + 1)?;

            let mut statistic: f64 = 0.0;
            let mut p_min: f64 = 1.0;
            for c in 0..actual.dim {
                let r = two_sample_ks(&mut actual.component(c), &mut equivalent.component(c));
                statistic = statistic.max(r.statistic);
                p_min = p_min.min(r.p_value);
            }
            let p_value = (p_min * actual.dim as f64).min(1.0);
            Ok(CellRecord {
                index,
                alpha_re: alpha[0],
                alpha_im: alpha[1],
                kind: spec.kind,
                eta_d: spec.eta_d(),
                nbar: spec.nbar(),
                nu: spec.nu(),
                mean_gap: mean_gap(&actual_density, &equivalent_density),
                var_gap: var_gap(&actual_density, &equivalent_density),
                tv_estimate: tv_bound(&actual_density, &equivalent_density),
                ks_statistic: Some(statistic),
                p_value: Some(p_value),
                pass: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let p_values: Vec<f64> = partial.iter().map(|c| c.p_value.unwrap_or(1.0)).collect();
    let rejected = holm_reject(&p_values, config.tolerances.ks_alpha);
    let cells: Vec<CellRecord> = partial
        .into_iter()
        .zip(rejected)
        .map(|(c, reject)| CellRecord { pass: !reject, ..c })
        .collect();
    let summary = summarize(&cells);
    Ok(EquivalenceReport {
        mode: SweepMode::MonteCarlo,
        config: config.clone(),
        cells,
        summary,
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl EquivalenceReport {
    pub const CSV_HEADER: &'static str =
        "alpha_re,alpha_im,kind,eta_d,nbar,mean_gap,var_gap,ks_stat,pass";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(c.alpha_re),
                fmt_f64(c.alpha_im),
                c.kind,
                fmt_f64(c.eta_d),
                fmt_f64(c.nbar),
                fmt_f64(c.mean_gap),
                fmt_f64(c.var_gap),
                c.ks_statistic.map(fmt_f64).unwrap_or_default(),
                c.pass
            );
        }
        out
    }
}
