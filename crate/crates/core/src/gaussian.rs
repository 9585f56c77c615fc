//! Multi-mode Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are `x = (a + a†)/2` and `p = i(a − a†)/2`, so the vacuum has
//! variance 1/4 in each quadrature. Vectors and matrices are ordered
//! `(x₁, p₁, …, x_n, p_n)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_range, Error, Result};

/// Variance of a vacuum quadrature in the `x = (a + a†)/2` convention.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Tolerance used when deciding whether a covariance matrix is physical.
pub const PHYSICALITY_TOL: f64 = 1e-12;

/// Mean quadrature vector and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// A real symplectic matrix acting on the quadrature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    pub matrix: DMatrix<f64>,
    pub label: String,
}

/// The standard symplectic form `⊕ [[0, 1], [−1, 0]]` on `n` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

// Forces bit-exact symmetry after a congruence transform.
fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)]) / 2.0;
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

impl GaussianState {
    /// Builds a state from raw parts. The covariance must be square, match the
    /// mean length, and be symmetric to within 1e−12 (it is then symmetrized).
    pub fn from_parts(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "mean vector length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: cov.nrows().max(cov.ncols()),
            });
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 || !cov.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!(
                "covariance matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        symmetrize(&mut cov);
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov,
        })
    }

    /// The `n`-mode vacuum: zero mean, `cov = I/4`.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Config("a state needs at least one mode".into()));
        }
        Ok(Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
        })
    }

    /// Single-mode coherent state `|α⟩`: mean `(Re α, Im α)`, vacuum covariance.
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            n_modes: 1,
            mean: DVector::from_vec(vec![alpha.re, alpha.im]),
            cov: DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        }
    }

    /// Single-mode thermal state with mean photon number `nbar`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        check_range("nbar", nbar, nbar >= 0.0, "nbar >= 0")?;
        Ok(Self {
            n_modes: 1,
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * ((2.0 * nbar + 1.0) / 4.0),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes {
            Ok(())
        } else {
            Err(Error::ModeIndex {
                index: mode,
                n_modes: self.n_modes,
            })
        }
    }

    /// `(x, p)` mean of one mode.
    pub fn mode_mean(&self, mode: usize) -> Result<[f64; 2]> {
        self.check_mode(mode)?;
        Ok([self.mean[2 * mode], self.mean[2 * mode + 1]])
    }

    /// 2×2 covariance block of one mode.
    pub fn mode_cov(&self, mode: usize) -> Result<[[f64; 2]; 2]> {
        self.check_mode(mode)?;
        let (i, j) = (2 * mode, 2 * mode + 1);
        Ok([
            [self.cov[(i, i)], self.cov[(i, j)]],
            [self.cov[(j, i)], self.cov[(j, j)]],
        ])
    }

    /// Tensor product `self ⊗ other`; the modes of `other` come last.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (d1, d2) = (2 * self.n_modes, 2 * other.n_modes);
        let mut mean = DVector::zeros(d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        GaussianState {
            n_modes: self.n_modes + other.n_modes,
            mean,
            cov,
        }
    }

    /// `mean → S·mean`, `cov → S·cov·Sᵀ`.
    pub fn apply(&self, op: &SymplecticOp) -> Result<GaussianState> {
        let dim = 2 * self.n_modes;
        if op.matrix.nrows() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: op.matrix.nrows(),
            });
        }
        let mean = &op.matrix * &self.mean;
        let mut cov = &op.matrix * &self.cov * op.matrix.transpose();
        symmetrize(&mut cov);
        Ok(GaussianState {
            n_modes: self.n_modes,
            mean,
            cov,
        })
    }

    /// Reduced state on `keep` (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        if keep.is_empty() {
            return Err(Error::Config("partial trace must keep at least one mode".into()));
        }
        for (k, &m) in keep.iter().enumerate() {
            self.check_mode(m)?;
            if keep[..k].contains(&m) {
                return Err(Error::Config(format!("mode {m} listed twice in partial trace")));
            }
        }
        let rows: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.cov[(rows[i], rows[j])]);
        Ok(GaussianState {
            n_modes: keep.len(),
            mean,
            cov,
        })
    }

    /// Pure-loss channel of transmittance `eta` on one mode:
    /// `mean → √η·mean`, `cov → η·cov + (1 − η)/4·I` on that mode's block.
    pub fn loss_channel(&self, mode: usize, eta: f64) -> Result<GaussianState> {
        check_range("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
        self.check_mode(mode)?;
        let mut out = self.clone();
        let t = eta.sqrt();
        let block = [2 * mode, 2 * mode + 1];
        for &i in &block {
            out.mean[i] *= t;
        }
        let dim = 2 * self.n_modes;
        for &i in &block {
            for j in 0..dim {
                if block.contains(&j) {
                    continue;
                }
                out.cov[(i, j)] *= t;
                out.cov[(j, i)] *= t;
            }
        }
        for &i in &block {
            for &j in &block {
                out.cov[(i, j)] *= eta;
            }
            out.cov[(i, i)] += (1.0 - eta) * VACUUM_VARIANCE;
        }
        Ok(out)
    }

    /// Mixes `mode` with a thermal ancilla of mean photon number `nbar` on a
    /// beam splitter of transmittance `eta`, then discards the ancilla.
    ///
    /// Built from [`tensor`](Self::tensor), [`beam_splitter`] and
    /// [`partial_trace`](Self::partial_trace) rather than a closed form.
    pub fn thermal_mix(&self, mode: usize, eta: f64, nbar: f64) -> Result<GaussianState> {
        self.thermal_mix_split(mode, eta, 1.0 - eta, nbar)
    }

    // `loss` is passed separately so that `1 − eta` need not be recomputed
    // when eta is within a few ulps of one.
    pub(crate) fn thermal_mix_split(
        &self,
        mode: usize,
        eta: f64,
        loss: f64,
        nbar: f64,
    ) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let ancilla = GaussianState::thermal(nbar)?;
        let joint = self.tensor(&ancilla);
        let bs = beam_splitter_split(eta, loss)?.embed(joint.n_modes, [mode, self.n_modes])?;
        let mixed = joint.apply(&bs)?;
        let keep: Vec<usize> = (0..self.n_modes).collect();
        mixed.partial_trace(&keep)
    }

    /// Gaussian random displacement on one mode. The displacement `γ` has
    /// density `∝ exp(−2|γ|²/v)`, adding `v/4` to each quadrature variance.
    pub fn random_displacement(&self, mode: usize, v: f64) -> Result<GaussianState> {
        check_range("v", v, v >= 0.0, "v >= 0")?;
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.cov[(2 * mode, 2 * mode)] += v / 4.0;
        out.cov[(2 * mode + 1, 2 * mode + 1)] += v / 4.0;
        Ok(out)
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + (i/4)·Ω`.
    pub fn uncertainty_margin(&self) -> f64 {
        let dim = 2 * self.n_modes;
        let omega = symplectic_form(self.n_modes);
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(self.cov[(i, j)], VACUUM_VARIANCE * omega[(i, j)])
        });
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `cov + (i/4)Ω ⪰ 0` within [`PHYSICALITY_TOL`].
    pub fn is_physical(&self) -> bool {
        self.uncertainty_margin() >= -PHYSICALITY_TOL
    }

    /// `1/√det(4·cov)`; equals 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        (&self.cov * 4.0).determinant().sqrt().recip()
    }
}

impl SymplecticOp {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            label: "identity".into(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `other` after `self`.
    pub fn then(&self, other: &SymplecticOp) -> Result<SymplecticOp> {
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(Error::Dimension {
                expected: self.matrix.nrows(),
                got: other.matrix.nrows(),
            });
        }
        Ok(SymplecticOp {
            matrix: &other.matrix * &self.matrix,
            label: format!("{} ∘ {}", other.label, self.label),
        })
    }

    /// Lifts a two-mode operation onto modes `targets` of an `n_modes` system.
    pub fn embed(&self, n_modes: usize, targets: [usize; 2]) -> Result<SymplecticOp> {
        if self.n_modes() != 2 {
            return Err(Error::Dimension {
                expected: 4,
                got: self.matrix.nrows(),
            });
        }
        for &t in &targets {
            if t >= n_modes {
                return Err(Error::ModeIndex {
                    index: t,
                    n_modes,
                });
            }
        }
        if targets[0] == targets[1] {
            return Err(Error::Config("beam splitter needs two distinct modes".into()));
        }
        let idx = [
            2 * targets[0],
            2 * targets[0] + 1,
            2 * targets[1],
            2 * targets[1] + 1,
        ];
        let mut matrix = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                matrix[(i, j)] = self.matrix[(a, b)];
            }
        }
        Ok(SymplecticOp {
            matrix,
            label: format!("{}[{},{}]", self.label, targets[0], targets[1]),
        })
    }

    /// Largest elementwise deviation of `S·Ω·Sᵀ` from `Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }
}

/// Two-mode beam splitter with transmittance `eta`, acting on `(A, B)` as
/// `x_A' = √η x_A + √(1−η) x_B`, `x_B' = −√(1−η) x_A + √η x_B` (same for `p`).
pub fn beam_splitter(eta: f64) -> Result<SymplecticOp> {
    beam_splitter_split(eta, 1.0 - eta)
}

pub(crate) fn beam_splitter_split(eta: f64, loss: f64) -> Result<SymplecticOp> {
    check_range("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
    check_range("loss", loss, (0.0..1.0).contains(&loss), "0 <= loss < 1")?;
    let t = eta.sqrt();
    let s = loss.sqrt();
    #[rustfmt::skip]
    let matrix = DMatrix::from_row_slice(4, 4, &[
         t, 0.0,   s, 0.0,
       0.0,   t, 0.0,   s,
        -s, 0.0,   t, 0.0,
       0.0,  -s, 0.0,   t,
    ]);
    Ok(SymplecticOp {
        matrix,
        label: format!("BS({eta})"),
    })
}
