//! Empirical moments, Galerkin solve and the thresholded projection estimator.
//!
//! For a dimension `m` the estimator solves
//!
//! ```text
//! [Γ̂]_m b = [ĝ]_m,   [ĝ]_l = (1/n) Σ_i Y_i [X_i]_l,   [Γ̂]_{l,j} = (1/n) Σ_i [X_i]_l [X_i]_j
//! ```
//!
//! and keeps `b` only on the event `Ω = {[Γ̂]_m nonsingular and ‖[Γ̂]_m⁻¹‖ <= γ}`;
//! off `Ω` the estimate is zero. `‖[Γ̂]_m⁻¹‖` is evaluated as `1/σ_min`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::{derivative_transform, CoefficientVector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::Sample;

/// Rows per accumulation chunk. Fixed so that the summation order, and hence
/// every bit of the result, does not depend on the thread count.
pub const MOMENT_CHUNK: usize = 256;

/// Relative cutoff below which `[Γ̂]_m` is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// `[ĝ]_m` and the symmetrised `[Γ̂]_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrices {
    pub g_hat: DVector<f64>,
    pub gamma_hat: DMatrix<f64>,
    pub n: usize,
}

/// Extreme singular values of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Spectrum {
    pub fn is_singular(&self) -> bool {
        self.sigma_max == 0.0 || self.sigma_min <= SINGULAR_RTOL * self.sigma_max
    }
}

impl MomentMatrices {
    /// Builds moments from given matrices; `gamma_hat` is symmetrised.
    pub fn new(g_hat: DVector<f64>, gamma_hat: DMatrix<f64>, n: usize) -> Result<Self> {
        let m = g_hat.len();
        if m == 0 || gamma_hat.nrows() != m || gamma_hat.ncols() != m {
            return Err(Error::Dimension(format!(
                "moment shapes disagree: g has {m} entries, Γ is {}×{}",
                gamma_hat.nrows(),
                gamma_hat.ncols()
            )));
        }
        let sym = (&gamma_hat + gamma_hat.transpose()) * 0.5;
        Ok(MomentMatrices { g_hat, gamma_hat: sym, n })
    }

    pub fn dim(&self) -> usize {
        self.g_hat.len()
    }

    pub fn spectrum(&self) -> Spectrum {
        let eig = SymmetricEigen::new(self.gamma_hat.clone());
        let abs = eig.eigenvalues.iter().map(|v| v.abs());
        let (lo, hi) = abs.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Spectrum { sigma_min: lo, sigma_max: hi }
    }

    /// Smallest eigenvalue (signed); used for the positive semidefiniteness check.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.gamma_hat.clone()).eigenvalues.min()
    }
}

/// Empirical moments of the first `m` coordinates, accumulated in parallel.
pub fn empirical_moments(sample: &Sample, m: usize) -> Result<MomentMatrices> {
    empirical_moments_with(sample, m, Execution::Parallel)
}

pub fn empirical_moments_with(sample: &Sample, m: usize, exec: Execution) -> Result<MomentMatrices> {
    if m == 0 || m > sample.truncation() {
        return Err(Error::Dimension(format!("dimension m = {m} must lie in 1..={}", sample.truncation())));
    }
    let n = sample.n();
    let chunks = n.div_ceil(MOMENT_CHUNK);
    let partials = exec.map_indexed(chunks, |c| {
        let start = c * MOMENT_CHUNK;
        let end = (start + MOMENT_CHUNK).min(n);
        let mut g = vec![0.0; m];
        let mut gam = vec![0.0; m * m];
        for i in start..end {
            let row = &sample.x_row(i)[..m];
            let yi = sample.y()[i];
            for l in 0..m {
                let xl = row[l];
                g[l] += yi * xl;
                for j in l..m {
                    gam[l * m + j] += xl * row[j];
                }
            }
        }
        (g, gam)
    });
    let mut g = vec![0.0; m];
    let mut gam = vec![0.0; m * m];
    for (pg, pgam) in &partials {
        for (acc, v) in g.iter_mut().zip(pg) {
            *acc += v;
        }
        for (acc, v) in gam.iter_mut().zip(pgam) {
            *acc += v;
        }
    }
    let inv_n = 1.0 / n as f64;
    let g_hat = DVector::from_iterator(m, g.into_iter().map(|v| v * inv_n));
    let gamma_hat = DMatrix::from_fn(m, m, |r, c| {
        let (l, j) = if r <= c { (r, c) } else { (c, r) };
        gam[l * m + j] * inv_n
    });
    MomentMatrices::new(g_hat, gamma_hat, n)
}

/// Outcome of solving `[Γ̂]_m b = [ĝ]_m`.
#[derive(Debug, Clone, PartialEq)]
pub enum GalerkinSolution {
    Regular { coeffs: Vec<f64>, spectrum: Spectrum },
    Singular { spectrum: Spectrum },
}

impl GalerkinSolution {
    pub fn coeffs(&self) -> Option<&[f64]> {
        match self {
            GalerkinSolution::Regular { coeffs, .. } => Some(coeffs),
            GalerkinSolution::Singular { .. } => None,
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        match self {
            GalerkinSolution::Regular { spectrum, .. } | GalerkinSolution::Singular { spectrum } => *spectrum,
        }
    }
}

/// Solves the empirical normal equations by Cholesky, falling back to the
/// eigendecomposition when the factorisation breaks down numerically.
pub fn galerkin_solve(mom: &MomentMatrices) -> GalerkinSolution {
    let eig = SymmetricEigen::new(mom.gamma_hat.clone());
    let (lo, hi) =
        eig.eigenvalues.iter().map(|v| v.abs()).fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let spectrum = Spectrum { sigma_min: lo, sigma_max: hi };
    if spectrum.is_singular() {
        return GalerkinSolution::Singular { spectrum };
    }
    let coeffs = match mom.gamma_hat.clone().cholesky() {
        Some(chol) => chol.solve(&mom.g_hat),
        None => {
            let rotated = eig.eigenvectors.transpose() * &mom.g_hat;
            let scaled =
                DVector::from_iterator(rotated.len(), rotated.iter().zip(eig.eigenvalues.iter()).map(|(r, l)| r / l));
            &eig.eigenvectors * scaled
        }
    };
    GalerkinSolution::Regular { coeffs: coeffs.iter().copied().collect(), spectrum }
}

/// Which power of `‖[Γ̂]_m⁻¹‖` is compared against `γ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPower {
    /// `‖[Γ̂]_m⁻¹‖ <= γ`.
    #[default]
    Unsquared,
    /// `‖[Γ̂]_m⁻¹‖² <= γ`.
    Squared,
}

impl ThresholdPower {
    pub fn from_exponent(power: u32) -> Result<Self> {
        match power {
            1 => Ok(ThresholdPower::Unsquared),
            2 => Ok(ThresholdPower::Squared),
            other => Err(Error::Validation(format!("threshold_power must be 1 or 2, got {other}"))),
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            ThresholdPower::Unsquared => 1,
            ThresholdPower::Squared => 2,
        }
    }
}

/// Thresholded (derivative) estimate embedded in the full truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    #[serde(rename = "coefficients")]
    pub beta_hat: CoefficientVector,
    pub m: usize,
    pub sigma_min: f64,
    pub omega_held: bool,
    pub s: u32,
}

/// Applies the threshold rule to precomputed moments and embeds the result
/// into a vector of length `truncation`.
pub fn estimate_from_moments(
    mom: &MomentMatrices,
    truncation: usize,
    gamma: f64,
    power: ThresholdPower,
) -> Result<EstimateResult> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("threshold γ must be > 0, got {gamma}")));
    }
    let m = mom.dim();
    if m > truncation {
        return Err(Error::Dimension(format!("dimension m = {m} exceeds truncation {truncation}")));
    }
    let solution = galerkin_solve(mom);
    let spectrum = solution.spectrum();
    let mut beta = vec![0.0; truncation];
    let omega_held = match &solution {
        GalerkinSolution::Singular { .. } => false,
        GalerkinSolution::Regular { coeffs, spectrum } => {
            let inv_norm = 1.0 / spectrum.sigma_min;
            let measured = match power {
                ThresholdPower::Unsquared => inv_norm,
                ThresholdPower::Squared => inv_norm * inv_norm,
            };
            let held = measured <= gamma && coeffs.iter().all(|c| c.is_finite());
            if held {
                beta[..m].copy_from_slice(coeffs);
            }
            held
        }
    };
    Ok(EstimateResult { beta_hat: CoefficientVector::new(beta)?, m, sigma_min: spectrum.sigma_min, omega_held, s: 0 })
}

/// The thresholded projection estimator with dimension `m` and threshold `γ`.
pub fn threshold_estimate(sample: &Sample, m: usize, gamma: f64) -> Result<EstimateResult> {
    threshold_estimate_with(sample, m, gamma, ThresholdPower::Unsquared)
}

pub fn threshold_estimate_with(sample: &Sample, m: usize, gamma: f64, power: ThresholdPower) -> Result<EstimateResult> {
    let mom = empirical_moments(sample, m)?;
    estimate_from_moments(&mom, sample.truncation(), gamma, power)
}

/// Estimator of the `s`-th weak derivative: the thresholded estimate,
/// differentiated term by term.
pub fn derivative_estimate(sample: &Sample, m: usize, s: u32, gamma: f64) -> Result<EstimateResult> {
    derivative_estimate_with(sample, m, s, gamma, ThresholdPower::Unsquared)
}

pub fn derivative_estimate_with(
    sample: &Sample,
    m: usize,
    s: u32,
    gamma: f64,
    power: ThresholdPower,
) -> Result<EstimateResult> {
    let base = threshold_estimate_with(sample, m, gamma, power)?;
    Ok(differentiate(base, s))
}

/// Differentiates an estimate `s` times.
pub fn differentiate(est: EstimateResult, s: u32) -> EstimateResult {
    if s == 0 {
        return est;
    }
    EstimateResult { beta_hat: derivative_transform(&est.beta_hat, s), s: est.s + s, ..est }
}

/// Population Galerkin solution `[Γ]_m⁻¹ [g]_m` for a diagonal operator with
/// eigenvalues `true_lambda` (`g_j = λ_j β_j`), embedded in the truncation of `true_beta`.
pub fn oracle_galerkin(true_lambda: &[f64], true_beta: &CoefficientVector, m: usize) -> Result<CoefficientVector> {
    let big_j = true_beta.truncation();
    if m > big_j || m > true_lambda.len() {
        return Err(Error::Dimension(format!("oracle dimension {m} exceeds available eigenvalues/coefficients")));
    }
    let mut out = vec![0.0; big_j];
    for j in 0..m {
        let lambda = true_lambda[j];
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("eigenvalue λ_{} = {lambda} must be > 0", j + 1)));
        }
        let g = lambda * true_beta[j];
        out[j] = g / lambda;
    }
    CoefficientVector::new(out)
}
