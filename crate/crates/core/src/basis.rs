//! Real trigonometric basis on `[0, 1]`, weight sequences and weighted norms.
//!
//! Index convention (1-based, as in the literature):
//!
//! ```text
//! ψ_1(t)    = 1
//! ψ_{2k}(t)   = √2 cos(2πkt)
//! ψ_{2k+1}(t) = √2 sin(2πkt),   k = 1, 2, ...
//! ```
//!
//! A function is carried around as its first `J` coordinates in this basis,
//! see [`CoefficientVector`].

use std::f64::consts::{PI, SQRT_2};
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency `k` of the basis function `ψ_j` (0 for the constant).
#[inline]
pub fn frequency(j: usize) -> usize {
    j / 2
}

/// Evaluates `ψ_j(t)`.
pub fn eval_basis(j: usize, t: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("basis index must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} lies outside [0, 1]")));
    }
    Ok(basis_unchecked(j, t))
}

#[inline]
fn basis_unchecked(j: usize, t: f64) -> f64 {
    if j == 1 {
        return 1.0;
    }
    let arg = 2.0 * PI * frequency(j) as f64 * t;
    if j.is_multiple_of(2) {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}

/// Evaluates the series `Σ_j c_j ψ_j(t)`.
pub fn evaluate_series(coeffs: &CoefficientVector, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} lies outside [0, 1]")));
    }
    Ok(coeffs.iter().enumerate().map(|(i, c)| c * basis_unchecked(i + 1, t)).sum())
}

/// A positive weight sequence `w_1, w_2, ...` evaluated lazily from its formula.
///
/// The normalised kinds satisfy `w(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSequence {
    /// `w(j) = 1`.
    Constant,
    /// Sobolev weights: `w(1) = 1`, `w(2k) = w(2k+1) = k^{2p}`.
    Sobolev { p: f64 },
    /// Polynomial decay: `w(1) = 1`, `w(j) = j^{-2a}` for `j >= 2`, `a > 1/2`.
    PolyDecay { a: f64 },
    /// Exponential decay: `w(1) = 1`, `w(j) = exp(-j^{2a})` for `j >= 2`, `a > 0`.
    ExpDecay { a: f64 },
    /// Explicit positive values `w(1), ..., w(len)`.
    Explicit { values: Vec<f64> },
}

impl WeightSequence {
    pub fn sobolev(p: f64) -> Result<Self> {
        let seq = WeightSequence::Sobolev { p };
        seq.validate()?;
        Ok(seq)
    }

    pub fn poly_decay(a: f64) -> Result<Self> {
        let seq = WeightSequence::PolyDecay { a };
        seq.validate()?;
        Ok(seq)
    }

    pub fn exp_decay(a: f64) -> Result<Self> {
        let seq = WeightSequence::ExpDecay { a };
        seq.validate()?;
        Ok(seq)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let seq = WeightSequence::Explicit { values };
        seq.validate()?;
        Ok(seq)
    }

    /// Checks the parameter constraints of the kind.
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSequence::Constant => Ok(()),
            WeightSequence::Sobolev { p } if p.is_finite() && *p >= 0.0 => Ok(()),
            WeightSequence::Sobolev { p } => {
                Err(Error::Validation(format!("Sobolev order p = {p} must be finite and >= 0")))
            }
            WeightSequence::PolyDecay { a } if a.is_finite() && *a > 0.5 => Ok(()),
            WeightSequence::PolyDecay { a } => {
                Err(Error::Validation(format!("polynomial decay requires a > 1/2, got a = {a}")))
            }
            WeightSequence::ExpDecay { a } if a.is_finite() && *a > 0.0 => Ok(()),
            WeightSequence::ExpDecay { a } => {
                Err(Error::Validation(format!("exponential decay requires a > 0, got a = {a}")))
            }
            WeightSequence::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::Validation("explicit weights must not be empty".into()));
                }
                match values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                    Some(i) => Err(Error::Validation(format!(
                        "explicit weight {} = {} is not a positive finite number",
                        i + 1,
                        values[i]
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// Checked evaluation of `w(j)`.
    pub fn weight(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Domain("weight index must be >= 1".into()));
        }
        if let WeightSequence::Explicit { values } = self {
            if j > values.len() {
                return Err(Error::Domain(format!(
                    "explicit weight sequence has {} entries, index {j} requested",
                    values.len()
                )));
            }
        }
        Ok(self.at(j))
    }

    /// `w(j)` for an index known to be valid.
    ///
    /// Panics when `j == 0` or `j` exceeds an explicit sequence.
    pub fn at(&self, j: usize) -> f64 {
        assert!(j >= 1, "weight index must be >= 1");
        match self {
            WeightSequence::Constant => 1.0,
            WeightSequence::Sobolev { p } => {
                if j == 1 {
                    1.0
                } else {
                    (frequency(j) as f64).powf(2.0 * p)
                }
            }
            WeightSequence::PolyDecay { a } => {
                if j == 1 {
                    1.0
                } else {
                    (j as f64).powf(-2.0 * a)
                }
            }
            WeightSequence::ExpDecay { a } => {
                if j == 1 {
                    1.0
                } else {
                    (-(j as f64).powf(2.0 * a)).exp()
                }
            }
            WeightSequence::Explicit { values } => values[j - 1],
        }
    }

    /// Short human-readable label, used in reports.
    pub fn label(&self) -> String {
        match self {
            WeightSequence::Constant => "constant".to_string(),
            WeightSequence::Sobolev { p } => format!("sobolev(p={p})"),
            WeightSequence::PolyDecay { a } => format!("poly_decay(a={a})"),
            WeightSequence::ExpDecay { a } => format!("exp_decay(a={a})"),
            WeightSequence::Explicit { values } => format!("explicit(len={})", values.len()),
        }
    }
}

/// Coordinates `[f]_j = <f, ψ_j>`, `j = 1..=J`, of a function in the trig basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Dimension("coefficient vector needs J >= 1".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Validation(format!("coefficient {} is not finite", i + 1)));
        }
        Ok(CoefficientVector(coeffs))
    }

    pub fn zeros(truncation: usize) -> Self {
        assert!(truncation >= 1, "truncation must be >= 1");
        CoefficientVector(vec![0.0; truncation])
    }

    /// The unit vector `e_j` (1-based).
    pub fn unit(truncation: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= truncation, "unit index {j} outside 1..={truncation}");
        let mut v = vec![0.0; truncation];
        v[j - 1] = 1.0;
        CoefficientVector(v)
    }

    /// Truncation level `J`.
    pub fn truncation(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `[f]_j`, 1-based.
    pub fn coeff(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CoefficientVector(self.0.iter().map(|c| c * factor).collect())
    }

    /// `self - other`; truncations must agree.
    pub fn sub(&self, other: &CoefficientVector) -> Result<Self> {
        check_same_truncation(self, other)?;
        Ok(CoefficientVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// Orthogonal projection onto the span of `ψ_1..ψ_m` (coordinates beyond `m` zeroed).
    pub fn project(&self, m: usize) -> Self {
        let mut v = self.0.clone();
        for c in v.iter_mut().skip(m) {
            *c = 0.0;
        }
        CoefficientVector(v)
    }
}

impl Index<usize> for CoefficientVector {
    type Output = f64;

    /// 0-based access to the underlying storage.
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for CoefficientVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        CoefficientVector::new(v)
    }
}

impl From<CoefficientVector> for Vec<f64> {
    fn from(v: CoefficientVector) -> Vec<f64> {
        v.0
    }
}

pub(crate) fn check_same_truncation(a: &CoefficientVector, b: &CoefficientVector) -> Result<()> {
    if a.truncation() != b.truncation() {
        return Err(Error::Dimension(format!("truncation mismatch: {} vs {}", a.truncation(), b.truncation())));
    }
    Ok(())
}

/// `Σ_{j<=J} w(j) [f]_j²`.
///
/// Explicit weight sequences must cover the truncation of `f`.
pub fn weighted_norm_sq(f: &CoefficientVector, seq: &WeightSequence) -> f64 {
    f.iter().enumerate().map(|(i, c)| seq.at(i + 1) * c * c).sum()
}

/// Coefficients of the `s`-th weak derivative of `f` in the same basis.
///
/// Each frequency pair `(c, d) = ([f]_{2k}, [f]_{2k+1})` is mapped by
/// `(c, d) -> (2πk d, -2πk c)`, applied `s` times. The constant term is
/// annihilated for `s >= 1`. When `J` is even the trailing cosine has its
/// sine partner outside the truncation; that component is dropped at each
/// step, so order `s` equals `s` first-order steps.
pub fn derivative_transform(f: &CoefficientVector, s: u32) -> CoefficientVector {
    if s == 0 {
        return f.clone();
    }
    let len = f.truncation();
    let mut out = vec![0.0; len];
    let mut k = 1;
    while 2 * k <= len {
        let cos_idx = 2 * k - 1;
        let sin_idx = 2 * k;
        let omega = 2.0 * PI * k as f64;
        let mut c = f[cos_idx];
        let mut d = if sin_idx < len { f[sin_idx] } else { 0.0 };
        for _ in 0..s {
            let next = (omega * d, -omega * c);
            c = next.0;
            // a sine outside the truncation is dropped after every step
            d = if sin_idx < len { next.1 } else { 0.0 };
        }
        out[cos_idx] = c;
        if sin_idx < len {
            out[sin_idx] = d;
        }
        k += 1;
    }
    CoefficientVector(out)
}
