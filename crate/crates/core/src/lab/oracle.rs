//! Numeric-integration oracle for the noisy detector.
//!
//! The thermal ancilla is written as a Gaussian mixture of coherent states
//! `|β⟩` with weight `exp(−|β|²/n̄)/(πn̄)`. Mixing on the beam splitter maps
//! the signal `|α⟩` to `|√η_d α + √(1−η_d) β⟩`, whose ideal outcome densities
//! are known in closed form:
//!
//! * homodyne: `|⟨x|γ⟩|² = √(2/π) · exp(−2(x − Re γ)²)`
//! * heterodyne: `|⟨ω|γ⟩|²/π = exp(−|ω − γ|²)/π`
//!
//! The noisy density is the β-average of these, computed by 2-D adaptive
//! quadrature. Nothing here touches covariance matrices.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::{DetectorKind, DetectorSpec};
use crate::error::{Error, Result};
use crate::quad::integrate_2d;

/// Truncation radius of the β-integral in units of `√n̄`.
pub const TRUNCATION_RADIUS: f64 = 6.0;

/// Absolute error target for each tabulated density value.
pub const TARGET_ERROR: f64 = 1e-9;

/// Outcome points at which to tabulate the density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeGrid {
    Line(Vec<f64>),
    Plane(Vec<[f64; 2]>),
}

impl OutcomeGrid {
    /// `n` evenly spaced points on `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, n: usize) -> Self {
        OutcomeGrid::Line(linspace(lo, hi, n))
    }

    /// Tensor grid of `n × n` points on `[lo.0, hi.0] × [lo.1, hi.1]`.
    pub fn plane(lo: (f64, f64), hi: (f64, f64), n: usize) -> Self {
        let xs = linspace(lo.0, hi.0, n);
        let ys = linspace(lo.1, hi.1, n);
        OutcomeGrid::Plane(
            xs.iter()
                .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        match self {
            OutcomeGrid::Line(v) => v.len(),
            OutcomeGrid::Plane(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match self {
            OutcomeGrid::Line(v) => vec![v[i]],
            OutcomeGrid::Plane(v) => v[i].to_vec(),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub grid: OutcomeGrid,
    pub values: Vec<f64>,
    /// Largest quadrature error estimate over the table.
    pub max_error: f64,
}

impl DensityTable {
    /// Sup-norm distance to a reference density evaluated on the same grid.
    pub fn sup_gap<F: Fn(&[f64]) -> f64>(&self, reference: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - reference(&self.grid.point(i))).abs())
            .fold(0.0, f64::max)
    }
}

/// Tabulates the noisy-detector outcome density for input `|α⟩`.
pub fn mixture_oracle(alpha: Complex64, spec: &DetectorSpec, grid: &OutcomeGrid) -> Result<DensityTable> {
    let nbar = spec.nbar();
    if nbar.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Domain {
            name: "nbar",
            value: nbar,
            expected: "nbar > 0 for the mixture oracle",
        });
    }
    if spec.loss() <= 0.0 {
        return Err(Error::Domain {
            name: "eta_d",
            value: spec.eta_d(),
            expected: "eta_d < 1 for the mixture oracle",
        });
    }
    match (spec.kind, grid) {
        (DetectorKind::Homodyne, OutcomeGrid::Line(_))
        | (DetectorKind::Heterodyne, OutcomeGrid::Plane(_)) => {}
        _ => {
            return Err(Error::Config(format!(
                "{} oracle needs a {} outcome grid",
                spec.kind,
                match spec.kind {
                    DetectorKind::Homodyne => "line",
                    DetectorKind::Heterodyne => "plane",
                }
            )))
        }
    }

    let center = alpha * spec.eta_d().sqrt();
    // β = √n̄ (u + iv); the weight becomes exp(−u² − v²)/π.
    let spread = (spec.loss() * nbar).sqrt();
    let bound = (-TRUNCATION_RADIUS, TRUNCATION_RADIUS);

    let mut values = Vec::with_capacity(grid.len());
    let mut max_error: f64 = 0.0;
    for i in 0..grid.len() {
        let point = grid.point(i);
        let integrand = |u: f64, v: f64| {
            let weight = (-(u * u + v * v)).exp() / PI;
            let gamma = center + Complex64::new(u, v) * spread;
            weight * coherent_density(spec.kind, gamma, &point)
        };
        let r = integrate_2d(integrand, bound, bound, TARGET_ERROR)?;
        max_error = max_error.max(r.error);
        values.push(r.value);
    }
    Ok(DensityTable {
        grid: grid.clone(),
        values,
        max_error,
    })
}

/// Ideal outcome density of the coherent state `|γ⟩`.
pub fn coherent_density(kind: DetectorKind, gamma: Complex64, point: &[f64]) -> f64 {
    match kind {
        DetectorKind::Homodyne => {
            let d = point[0] - gamma.re;
            (2.0 / PI).sqrt() * (-2.0 * d * d).exp()
        }
        DetectorKind::Heterodyne => {
            let (dx, dy) = (point[0] - gamma.re, point[1] - gamma.im);
            (-(dx * dx + dy * dy)).exp() / PI
        }
    }
}
