//! Theoretical rates: the bias/variance balancing dimension `m*`, the
//! minimax rate `δ*`, closed-form exponents for the trigonometric cases,
//! the upper-bound side condition, and log-log fitting of empirical risks.

use serde::{Deserialize, Serialize};

use crate::basis::WeightSequence;
use crate::error::{Error, Result};

/// Upper limit of the `m*` search.
pub const M_STAR_CAP: usize = 1_000_000;

/// Decay of the regressor eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayKind {
    /// `υ_j = j^{-2a}`, `a > 1/2` (finitely smoothing).
    Poly { a: f64 },
    /// `υ_j = exp(-j^{2a})`, `a > 0` (infinitely smoothing).
    Exp { a: f64 },
}

impl DecayKind {
    pub fn a(&self) -> f64 {
        match self {
            DecayKind::Poly { a } | DecayKind::Exp { a } => *a,
        }
    }

    pub fn weights(&self) -> WeightSequence {
        match *self {
            DecayKind::Poly { a } => WeightSequence::PolyDecay { a },
            DecayKind::Exp { a } => WeightSequence::ExpDecay { a },
        }
    }

    pub fn from_weights(seq: &WeightSequence) -> Option<Self> {
        match *seq {
            WeightSequence::PolyDecay { a } => Some(DecayKind::Poly { a }),
            WeightSequence::ExpDecay { a } => Some(DecayKind::Exp { a }),
            _ => None,
        }
    }
}

/// What the risk measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateTarget {
    Prediction,
    /// `L²` risk of the `s`-th derivative.
    Derivative {
        s: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCase {
    pub decay: DecayKind,
    pub p: f64,
    pub target: RateTarget,
}

impl RateCase {
    pub fn validate(&self) -> Result<()> {
        self.decay.weights().validate()?;
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::Domain(format!("smoothness p = {} must be >= 0", self.p)));
        }
        if let RateTarget::Derivative { s } = self.target {
            if f64::from(s) > self.p {
                return Err(Error::Domain(format!("derivative order s = {s} exceeds smoothness p = {}", self.p)));
            }
        }
        Ok(())
    }

    /// Smoothness weights `b = b^p`.
    pub fn smoothness(&self) -> WeightSequence {
        WeightSequence::Sobolev { p: self.p }
    }

    /// Risk weights `ω`: `υ` for prediction, `b^s` for the `s`-th derivative.
    pub fn risk_weights(&self) -> WeightSequence {
        match self.target {
            RateTarget::Prediction => self.decay.weights(),
            RateTarget::Derivative { s } => WeightSequence::Sobolev { p: f64::from(s) },
        }
    }
}

/// A rate `n^{n_power} (log n)^{log_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub n_power: f64,
    pub log_power: f64,
}

/// Closed-form minimax exponents for the trigonometric cases.
pub fn theoretical_exponent(case: &RateCase) -> Result<Exponent> {
    case.validate()?;
    let p = case.p;
    let a = case.decay.a();
    let e = match (case.decay, case.target) {
        (DecayKind::Poly { .. }, RateTarget::Prediction) => {
            Exponent { n_power: -(2.0 * p + 2.0 * a) / (2.0 * p + 2.0 * a + 1.0), log_power: 0.0 }
        }
        (DecayKind::Exp { .. }, RateTarget::Prediction) => Exponent { n_power: -1.0, log_power: 1.0 / (2.0 * a) },
        (DecayKind::Poly { .. }, RateTarget::Derivative { s }) => {
            Exponent { n_power: -(2.0 * p - 2.0 * f64::from(s)) / (2.0 * p + 2.0 * a + 1.0), log_power: 0.0 }
        }
        (DecayKind::Exp { .. }, RateTarget::Derivative { s }) => {
            Exponent { n_power: 0.0, log_power: -(p - f64::from(s)) / a }
        }
    };
    Ok(e)
}

/// Result of the balancing rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MStar {
    pub m: usize,
    /// `δ* = ω_{m*} / b_{m*}`.
    pub delta_star: f64,
    /// Value of `(b_m/(n ω_m)) Σ_{j<=m} ω_j/υ_j` at `m*`; at least 1.
    pub achieved_delta: f64,
}

/// Smallest `m >= 1` with `(b_m/(n ω_m)) Σ_{j<=m} ω_j/υ_j >= 1`.
pub fn m_star(n: usize, b: &WeightSequence, omega: &WeightSequence, upsilon: &WeightSequence) -> Result<MStar> {
    if n < 2 {
        return Err(Error::Domain(format!("balancing needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let mut sum = 0.0;
    for m in 1..=M_STAR_CAP {
        let (bm, wm, um) = (b.weight(m)?, omega.weight(m)?, upsilon.weight(m)?);
        sum += wm / um;
        let value = bm / (nf * wm) * sum;
        if value >= 1.0 {
            return Ok(MStar { m, delta_star: wm / bm, achieved_delta: value });
        }
    }
    Err(Error::SearchCap(format!("no m <= {M_STAR_CAP} balances n = {n}")))
}

/// `m*` and `δ*` for one of the trigonometric cases.
pub fn m_star_for_case(n: usize, case: &RateCase) -> Result<MStar> {
    m_star(n, &case.smoothness(), &case.risk_weights(), &case.decay.weights())
}

/// Ratios of the upper-bound side condition at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideConditionRow {
    pub n: usize,
    pub m_star: usize,
    pub delta_star: f64,
    /// `m*^{2k} / (δ* n^k)`.
    pub moment_ratio: f64,
    /// `m*/(δ* n) · max_{j<=m*} ω_j/υ_j`.
    pub variance_ratio: f64,
    /// `m*^{2+k} / n^{k/2-1}`.
    pub dimension_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideConditionReport {
    pub case: RateCase,
    pub k: u32,
    pub rows: Vec<SideConditionRow>,
    /// Maxima over the grid of the three ratios.
    pub max_ratios: [f64; 3],
    /// Whether each ratio shows a growing trend over the grid.
    pub growing: [bool; 3],
    /// `2 + 8/(2p+2a-1)` in the polynomial case.
    pub k_threshold: Option<f64>,
    pub verdict: Verdict,
}

/// Growth factor between the first and last thirds of the grid that counts as a trend.
pub const TREND_FACTOR: f64 = 2.0;

/// Evaluates the side condition over `n_grid` using `m*(n)` and `δ*(n)`.
///
/// A ratio is flagged as growing when the geometric mean over the last third
/// of the grid exceeds that over the first third by more than [`TREND_FACTOR`].
/// In the polynomial case the verdict also warns when `k < 2 + 8/(2p+2a-1)`.
pub fn check_side_condition(case: &RateCase, n_grid: &[usize], k: u32) -> Result<SideConditionReport> {
    if k < 4 {
        return Err(Error::Domain(format!("moment index k = {k} must be >= 4")));
    }
    if n_grid.len() < 3 {
        return Err(Error::Domain("side condition needs at least 3 grid points".into()));
    }
    case.validate()?;
    let omega = case.risk_weights();
    let upsilon = case.decay.weights();
    let kf = f64::from(k);
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let ms = m_star_for_case(n, case)?;
        let (m, nf) = (ms.m as f64, n as f64);
        let ratio_max = (1..=ms.m).map(|j| omega.at(j) / upsilon.at(j)).fold(0.0_f64, f64::max);
        // logs keep n^k finite for large grids
        let moment_ratio = (2.0 * kf * m.ln() - ms.delta_star.ln() - kf * nf.ln()).exp();
        rows.push(SideConditionRow {
            n,
            m_star: ms.m,
            delta_star: ms.delta_star,
            moment_ratio,
            variance_ratio: m / (ms.delta_star * nf) * ratio_max,
            dimension_ratio: ((2.0 + kf) * m.ln() - (kf / 2.0 - 1.0) * nf.ln()).exp(),
        });
    }
    let pick = |row: &SideConditionRow, i: usize| match i {
        0 => row.moment_ratio,
        1 => row.variance_ratio,
        _ => row.dimension_ratio,
    };
    let third = rows.len().div_ceil(3);
    let geo_mean = |slice: &[SideConditionRow], i: usize| {
        (slice.iter().map(|r| pick(r, i).ln()).sum::<f64>() / slice.len() as f64).exp()
    };
    let mut max_ratios = [0.0; 3];
    let mut growing = [false; 3];
    for i in 0..3 {
        max_ratios[i] = rows.iter().map(|r| pick(r, i)).fold(f64::NEG_INFINITY, f64::max);
        let first = geo_mean(&rows[..third], i);
        let last = geo_mean(&rows[rows.len() - third..], i);
        growing[i] = last > TREND_FACTOR * first;
    }
    let k_threshold = match case.decay {
        DecayKind::Poly { a } => Some(2.0 + 8.0 / (2.0 * case.p + 2.0 * a - 1.0)),
        DecayKind::Exp { .. } => None,
    };
    let k_ok = k_threshold.is_none_or(|t| kf >= t);
    let verdict = if growing.iter().any(|g| *g) || !k_ok { Verdict::Warn } else { Verdict::Pass };
    Ok(SideConditionReport { case: *case, k, rows, max_ratios, growing, k_threshold, verdict })
}

/// Ordinary least squares fit `log y = intercept + slope · log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `log(risk)` against `log(n)`; the slope is the empirical rate exponent.
pub fn fit_rate(n_grid: &[usize], mean_risks: &[f64]) -> Result<RateFit> {
    let xs: Vec<f64> = n_grid.iter().map(|n| *n as f64).collect();
    fit_power_law(&xs, mean_risks)
}

/// Fits `log(y)` against `log(x)`; requires at least 3 points and positive values.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} abscissae for {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Domain(format!("rate fit needs >= 3 points, got {}", xs.len())));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("rate fit needs positive finite values, got {bad}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit { slope, intercept, r_squared })
}
