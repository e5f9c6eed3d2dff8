//! Data-generating process: Gaussian regressors with prescribed eigenvalue
//! decay, slopes in Sobolev ellipsoids, error laws, and the Assouad family
//! of worst-case slopes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::basis::{weighted_norm_sq, CoefficientVector, WeightSequence};
use crate::error::{Error, Result};

/// Smallest admissible Student-t degrees of freedom (finite 16th moment).
pub const MIN_STUDENT_DF: f64 = 17.0;

/// Law of the standardised error `ε` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorLaw {
    Gaussian,
    /// Student-t with `df` degrees of freedom, rescaled to unit variance.
    StudentT {
        df: f64,
    },
}

impl ErrorLaw {
    fn validate(&self) -> Result<()> {
        match self {
            ErrorLaw::Gaussian => Ok(()),
            ErrorLaw::StudentT { df } if df.is_finite() && *df >= MIN_STUDENT_DF => Ok(()),
            ErrorLaw::StudentT { df } => {
                Err(Error::Validation(format!("Student-t error law needs df >= {MIN_STUDENT_DF}, got {df}")))
            }
        }
    }
}

/// Ratio `c_j = λ(j) / υ_j` of the regressor eigenvalues to the decay sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenScaling {
    /// `c_j = 1`.
    #[default]
    Unit,
    /// `c_j = d` for odd `j`, `1/d` for even `j`.
    Alternating,
}

/// Gaussian regressor design whose covariance operator has the trig basis
/// as eigenbasis, eigenvalues `λ(j) = c_j υ_j` with `c_j ∈ [1/d, d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub decay: WeightSequence,
    pub d: f64,
    #[serde(default)]
    pub scaling: EigenScaling,
    pub sigma: f64,
    pub error_law: ErrorLaw,
    pub truncation: usize,
}

impl ProcessSpec {
    pub fn new(
        decay: WeightSequence,
        d: f64,
        scaling: EigenScaling,
        sigma: f64,
        error_law: ErrorLaw,
        truncation: usize,
    ) -> Result<Self> {
        let spec = ProcessSpec { decay, d, scaling, sigma, error_law, truncation };
        spec.validate()?;
        Ok(spec)
    }

    /// Gaussian errors, unit eigenvalue scaling.
    pub fn gaussian(decay: WeightSequence, d: f64, sigma: f64, truncation: usize) -> Result<Self> {
        Self::new(decay, d, EigenScaling::Unit, sigma, ErrorLaw::Gaussian, truncation)
    }

    pub fn validate(&self) -> Result<()> {
        match self.decay {
            WeightSequence::PolyDecay { .. } | WeightSequence::ExpDecay { .. } => self.decay.validate()?,
            _ => {
                return Err(Error::Validation(format!(
                    "regressor decay must be poly_decay or exp_decay, got {}",
                    self.decay.label()
                )))
            }
        }
        if !(self.d.is_finite() && self.d >= 1.0) {
            return Err(Error::Validation(format!("link constant d = {} must be >= 1", self.d)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Validation(format!("noise level sigma = {} must be >= 0", self.sigma)));
        }
        if self.truncation < 1 {
            return Err(Error::Validation("truncation J must be >= 1".into()));
        }
        self.error_law.validate()?;
        self.link_certificate()
    }

    /// `c_j`.
    pub fn eigen_factor(&self, j: usize) -> f64 {
        match self.scaling {
            EigenScaling::Unit => 1.0,
            EigenScaling::Alternating => {
                if j % 2 == 1 {
                    self.d
                } else {
                    1.0 / self.d
                }
            }
        }
    }

    /// Eigenvalue `λ(j)` of the covariance operator.
    pub fn lambda(&self, j: usize) -> f64 {
        self.eigen_factor(j) * self.decay.at(j)
    }

    /// `λ(1), ..., λ(J)`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.truncation).map(|j| self.lambda(j)).collect()
    }

    /// Verifies `1/d <= λ(j)/υ_j <= d` for every `j <= J`.
    pub fn link_certificate(&self) -> Result<()> {
        for j in 1..=self.truncation {
            let ratio = self.lambda(j) / self.decay.at(j);
            let slack = 1.0 + 1e-12;
            if !(ratio * slack >= 1.0 / self.d && ratio <= self.d * slack) {
                return Err(Error::Validation(format!(
                    "link condition violated at j = {j}: λ/υ = {ratio}, d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// Shape of the true slope function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeProfile {
    /// `[β]_1 = c`, `[β]_{2k} = c k^{-(p+1)}`, `[β]_{2k+1} = 0`, scaled to `0.9 ρ`.
    SmoothDefault,
    Explicit {
        coefficients: CoefficientVector,
    },
}

/// A slope inside the Sobolev ellipsoid `Σ_j b_j^p [β]_j² <= ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSpec {
    pub p: f64,
    pub rho: f64,
    pub profile: SlopeProfile,
}

/// Fraction of the ellipsoid radius used by the default profile.
pub const DEFAULT_PROFILE_FILL: f64 = 0.9;

/// Builds the slope coefficients at truncation `J` and checks ellipsoid membership.
pub fn make_slope(spec: &SlopeSpec, truncation: usize) -> Result<CoefficientVector> {
    if truncation < 3 {
        return Err(Error::Domain(format!("slope truncation must be >= 3, got {truncation}")));
    }
    let sobolev = WeightSequence::sobolev(spec.p)?;
    if !(spec.rho.is_finite() && spec.rho > 0.0) {
        return Err(Error::Validation(format!("ellipsoid radius rho = {} must be > 0", spec.rho)));
    }
    match &spec.profile {
        SlopeProfile::SmoothDefault => {
            let mut raw = vec![0.0; truncation];
            raw[0] = 1.0;
            let mut k = 1;
            while 2 * k <= truncation {
                raw[2 * k - 1] = (k as f64).powf(-(spec.p + 1.0));
                k += 1;
            }
            let raw = CoefficientVector::new(raw)?;
            let scale = (DEFAULT_PROFILE_FILL * spec.rho / weighted_norm_sq(&raw, &sobolev)).sqrt();
            Ok(raw.scaled(scale))
        }
        SlopeProfile::Explicit { coefficients } => {
            if coefficients.truncation() > truncation {
                return Err(Error::Dimension(format!(
                    "explicit slope has {} coefficients, truncation is {truncation}",
                    coefficients.truncation()
                )));
            }
            let mut v = coefficients.as_slice().to_vec();
            v.resize(truncation, 0.0);
            let beta = CoefficientVector::new(v)?;
            let norm = weighted_norm_sq(&beta, &sobolev);
            if norm > spec.rho * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "slope lies outside the ellipsoid: ||β||²_b = {norm} > rho = {}",
                    spec.rho
                )));
            }
            Ok(beta)
        }
    }
}

/// `n` observations of `(Y, [X]_1..[X]_J)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    y: Vec<f64>,
    /// Row-major `n × J`.
    x: Vec<f64>,
    truncation: usize,
    /// Seed the sample was simulated from, if any.
    pub seed: Option<u64>,
    /// Design the sample was simulated from, if any.
    pub process: Option<ProcessSpec>,
}

impl Sample {
    /// Wraps observed data. `x` is row-major with `truncation` columns.
    pub fn new(y: Vec<f64>, x: Vec<f64>, truncation: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Dimension("a sample needs n >= 1 observations".into()));
        }
        if truncation == 0 || x.len() != y.len() * truncation {
            return Err(Error::Dimension(format!(
                "regressor matrix has {} entries, expected {} × {truncation}",
                x.len(),
                y.len()
            )));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::Validation("sample contains non-finite values".into()));
        }
        Ok(Sample { y, x, truncation, seed: None, process: None })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Regressor coefficients `[X_i]_1..[X_i]_J` of observation `i` (0-based).
    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.truncation..(i + 1) * self.truncation]
    }

    pub fn x_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.x.chunks_exact(self.truncation)
    }

    /// The sample obtained by negating every response.
    ///
    /// For a symmetric error law this is a draw from the model with slope
    /// `-β` sharing the regressors of `self`.
    pub fn mirrored(&self) -> Sample {
        Sample { y: self.y.iter().map(|v| -v).collect(), ..self.clone() }
    }

    /// Reorders the regressor columns: new column `k` is old column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Sample> {
        if perm.len() != self.truncation {
            return Err(Error::Dimension("permutation length differs from truncation".into()));
        }
        let mut x = Vec::with_capacity(self.x.len());
        for row in self.x_rows() {
            x.extend(perm.iter().map(|&k| row[k]));
        }
        Ok(Sample { x, ..self.clone() })
    }
}

/// Per-replication seed: SplitMix64 finaliser applied to `(master_seed, index)`.
///
/// Stable across runs and platforms; distinct indices give distinct streams.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const REGRESSOR_STREAM: u64 = 0;
const ERROR_STREAM: u64 = 1;

/// Draws `n` observations: `[X_i]_j = √λ(j) ξ_ij`, `Y_i = Σ_j [β]_j [X_i]_j + σ ε_i`.
///
/// Regressors and errors come from separate ChaCha streams of the same seed,
/// so the regressors do not depend on `σ` or the error law.
pub fn simulate_sample(proc: &ProcessSpec, beta: &CoefficientVector, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Domain("sample size n must be >= 1".into()));
    }
    let big_j = proc.truncation;
    if beta.truncation() != big_j {
        return Err(Error::Dimension(format!(
            "slope truncation {} differs from process truncation {big_j}",
            beta.truncation()
        )));
    }
    let scales: Vec<f64> = (1..=big_j).map(|j| proc.lambda(j).sqrt()).collect();

    let mut xi_rng = ChaCha8Rng::seed_from_u64(seed);
    xi_rng.set_stream(REGRESSOR_STREAM);
    let mut eps_rng = ChaCha8Rng::seed_from_u64(seed);
    eps_rng.set_stream(ERROR_STREAM);

    let mut x = Vec::with_capacity(n * big_j);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut signal = 0.0;
        for (scale, b) in scales.iter().zip(beta.iter()) {
            let z: f64 = xi_rng.sample(StandardNormal);
            let value = scale * z;
            signal += b * value;
            x.push(value);
        }
        y.push(signal);
    }
    if proc.sigma > 0.0 {
        match proc.error_law {
            ErrorLaw::Gaussian => {
                for yi in y.iter_mut() {
                    let e: f64 = eps_rng.sample(StandardNormal);
                    *yi += proc.sigma * e;
                }
            }
            ErrorLaw::StudentT { df } => {
                let t = StudentT::new(df).map_err(|e| Error::Validation(e.to_string()))?;
                let unit = ((df - 2.0) / df).sqrt();
                for yi in y.iter_mut() {
                    *yi += proc.sigma * unit * t.sample(&mut eps_rng);
                }
            }
        }
    }
    Ok(Sample { y, x, truncation: big_j, seed: Some(seed), process: Some(proc.clone()) })
}

/// `ζ = min{σ²/(2d), ρ/Δ}`.
pub fn assouad_zeta(sigma: f64, d: f64, rho: f64, delta: f64) -> f64 {
    (sigma * sigma / (2.0 * d)).min(rho / delta)
}

/// The Assouad slope `β^θ = Σ_{j<=m*} θ_j u_j ψ_j` with `u_j² = ζ/(n υ_j)`.
///
/// `theta` has length `m*` with entries `±1`; `delta` is the balancing
/// constant achieved at `m*` (see [`crate::rates::m_star`]).
#[allow(clippy::too_many_arguments)]
pub fn assouad_slope(
    theta: &[i8],
    n: usize,
    decay: &WeightSequence,
    sigma: f64,
    d: f64,
    rho: f64,
    delta: f64,
    truncation: usize,
) -> Result<CoefficientVector> {
    if let Some(bad) = theta.iter().find(|t| **t != 1 && **t != -1) {
        return Err(Error::Domain(format!("sign vector entries must be ±1, got {bad}")));
    }
    if theta.len() > truncation {
        return Err(Error::Dimension(format!("sign vector of length {} exceeds truncation {truncation}", theta.len())));
    }
    if n == 0 || !(delta >= 1.0) {
        return Err(Error::Domain("assouad slope needs n >= 1 and delta >= 1".into()));
    }
    let zeta = assouad_zeta(sigma, d, rho, delta);
    let mut v = vec![0.0; truncation];
    for (j, t) in theta.iter().enumerate() {
        let u = (zeta / (n as f64 * decay.at(j + 1))).sqrt();
        v[j] = f64::from(*t) * u;
    }
    CoefficientVector::new(v)
}

/// The quantities bounded for an Assouad slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssouadCheck {
    /// `max_j (2 n d / σ²) u_j² υ_j`, must be `<= 1`.
    pub likelihood_ratio_max: f64,
    /// `Σ_j u_j² b_j`, must be `<= ρ`.
    pub ellipsoid_norm: f64,
    pub rho: f64,
    /// `Σ_j u_j² ω_j` (separation in the risk norm).
    pub separation: f64,
    /// `ζ δ* / Δ`, the lower bound for `separation`.
    pub separation_floor: f64,
}

impl AssouadCheck {
    /// Both defining inequalities hold up to relative tolerance `rel_tol`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.likelihood_ratio_max <= 1.0 + rel_tol && self.ellipsoid_norm <= self.rho * (1.0 + rel_tol)
    }

    pub fn separation_holds(&self, rel_tol: f64) -> bool {
        self.separation >= self.separation_floor * (1.0 - rel_tol)
    }
}

/// Evaluates the Assouad inequalities for a slope `β^θ` whose `|[β]_j| = u_j`.
#[allow(clippy::too_many_arguments)]
pub fn assouad_check(
    beta: &CoefficientVector,
    m_star: usize,
    n: usize,
    decay: &WeightSequence,
    smoothness: &WeightSequence,
    risk_weights: &WeightSequence,
    sigma: f64,
    d: f64,
    rho: f64,
    delta: f64,
) -> AssouadCheck {
    let mut ratio_max: f64 = 0.0;
    let mut ellipsoid = 0.0;
    let mut separation = 0.0;
    for j in 1..=m_star {
        let u2 = beta.coeff(j).powi(2);
        if sigma > 0.0 {
            ratio_max = ratio_max.max(2.0 * n as f64 * d / (sigma * sigma) * u2 * decay.at(j));
        }
        ellipsoid += u2 * smoothness.at(j);
        separation += u2 * risk_weights.at(j);
    }
    let delta_star = risk_weights.at(m_star) / smoothness.at(m_star);
    AssouadCheck {
        likelihood_ratio_max: ratio_max,
        ellipsoid_norm: ellipsoid,
        rho,
        separation,
        separation_floor: assouad_zeta(sigma, d, rho, delta) * delta_star / delta,
    }
}
