//! Experiment manifests: parsing, overrides, validation and resolution into
//! the library types.

use std::path::{Path, PathBuf};

use galerkin_flm::{
    m_star, make_slope, CoefficientVector, DecayKind, EigenScaling, ErrorLaw, ProcessSpec, RateCase, RateTarget,
    RiskKind, SlopeProfile, SlopeSpec, ThresholdPower, WeightSequence,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Bumped whenever a CSV or JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FLM_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "flm-out";

/// Slack subtracted before rounding rule-based dimensions up, so that exact
/// powers like `32^{1/5} = 2` are not bumped by rounding noise.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessSection,
    pub slope: SlopeSection,
    pub estimator: EstimatorSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    /// Eigenvalue decay `υ`, a `poly_decay` or `exp_decay` sequence.
    pub decay: WeightSequence,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub scaling: EigenScaling,
    pub sigma: f64,
    #[serde(default = "default_error_law")]
    pub error_law: ErrorLaw,
    /// Basis truncation `J`; derived from the largest dimension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeSection {
    pub p: f64,
    pub rho: f64,
    #[serde(default = "default_profile")]
    pub profile: SlopeProfile,
}

/// Dimension rule: a fixed integer or one of the named rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimensionSetting {
    Fixed(usize),
    Rule(String),
}

/// Threshold rule: a fixed value or one of the named rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSetting {
    Value(f64),
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub m: DimensionSetting,
    pub gamma: ThresholdSetting,
    #[serde(default)]
    pub s: u32,
    #[serde(default = "default_power")]
    pub threshold_power: u32,
    #[serde(default)]
    pub allow_s_above_p: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskName {
    Prediction,
    Derivative,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub risk: RiskName,
    /// Weights for `risk = "weighted"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_weights: Option<WeightSequence>,
    /// Sample size for `simulate`, `estimate` and `lowerbound`; the first grid point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Number of random sign vectors the estimator is run against in `lowerbound`.
    #[serde(default = "default_draws")]
    pub lowerbound_draws: usize,
    #[serde(default = "default_k")]
    pub side_condition_k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_condition_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Optional artifacts to write next to the JSON: any of `csv`, `dat`, `gp`.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, formats: default_formats() }
    }
}

fn default_d() -> f64 {
    1.0
}
fn default_error_law() -> ErrorLaw {
    ErrorLaw::Gaussian
}
fn default_profile() -> SlopeProfile {
    SlopeProfile::SmoothDefault
}
fn default_power() -> u32 {
    1
}
fn default_tolerance() -> f64 {
    0.2
}
fn default_draws() -> usize {
    8
}
fn default_k() -> u32 {
    4
}
fn default_formats() -> Vec<String> {
    ["csv", "dat", "gp"].map(String::from).to_vec()
}

const FORMATS: [&str; 3] = ["csv", "dat", "gp"];

/// Values given on the command line; each replaces its file counterpart.
///
/// The output directory is not among them: it is a location, not part of the
/// experiment, and is passed to [`crate::run`] directly.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<u32>,
    pub allow_s_above_p: bool,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.master_seed = seed;
        }
        if let Some(r) = o.replications {
            self.experiment.replications = r;
        }
        if let Some(n) = o.n {
            self.experiment.n = Some(n);
        }
        if let Some(k) = o.k {
            self.experiment.side_condition_k = k;
        }
        if o.allow_s_above_p {
            self.estimator.allow_s_above_p = true;
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    /// Output directory: the flag, the file value, the environment, then the default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag {
            return dir.to_path_buf();
        }
        if let Some(dir) = &self.output.dir {
            return dir.clone();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

/// Reads a TOML manifest, or a JSON sidecar written by a previous run.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// `(n, m, γ)` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
}

/// A validated configuration translated into library objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub process: ProcessSpec,
    pub beta: CoefficientVector,
    pub risk: RiskKind,
    /// `ω` of the configured risk, used by the balancing rule.
    pub risk_weights: WeightSequence,
    pub case: Option<RateCase>,
    pub power: ThresholdPower,
    pub grid: Vec<GridPoint>,
    /// The point used by single-sample commands.
    pub single: GridPoint,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn seed(&self) -> u64 {
        self.config.experiment.master_seed
    }

    pub fn s(&self) -> u32 {
        self.config.estimator.s
    }

    pub fn decay(&self) -> &WeightSequence {
        &self.process.decay
    }

    pub fn smoothness(&self) -> WeightSequence {
        WeightSequence::Sobolev { p: self.config.slope.p }
    }

    /// `(n, m, γ)` for a sample size outside the grid, e.g. a stored sample.
    pub fn point_at(&self, n: usize) -> CliResult<GridPoint> {
        let m = dimension_at(&self.config, &self.risk_weights, n)?;
        Ok(GridPoint { n, m, gamma: threshold_at(&self.config, m, n)? })
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Checks every precondition and computes the per-`n` dimensions and thresholds.
pub fn resolve(config: &ExperimentConfig) -> CliResult<Resolved> {
    let mut warnings = Vec::new();
    let est = &config.estimator;
    let exp = &config.experiment;
    let proc_cfg = &config.process;

    let decay = DecayKind::from_weights(&proc_cfg.decay)
        .ok_or_else(|| invalid("process.decay must be a poly_decay or exp_decay sequence"))?;
    proc_cfg.decay.validate().map_err(|e| invalid(format!("process.decay: {e}")))?;
    if !(config.slope.p.is_finite() && config.slope.p >= 0.0) {
        return Err(invalid(format!("slope.p = {} must be >= 0", config.slope.p)));
    }
    let p = config.slope.p;
    if f64::from(est.s) > p {
        if est.allow_s_above_p {
            warnings.push(format!("derivative order s = {} exceeds smoothness p = {p}", est.s));
        } else {
            return Err(invalid(format!(
                "derivative order s = {} exceeds smoothness p = {p} (set allow_s_above_p to override)",
                est.s
            )));
        }
    }
    let power = ThresholdPower::from_exponent(est.threshold_power).map_err(|e| invalid(e.to_string()))?;

    let (risk, risk_weights, target) = match exp.risk {
        RiskName::Prediction => {
            if est.s != 0 {
                return Err(invalid("prediction risk requires estimator.s = 0"));
            }
            (RiskKind::Prediction, proc_cfg.decay.clone(), Some(RateTarget::Prediction))
        }
        RiskName::Derivative => (
            RiskKind::Derivative,
            WeightSequence::Sobolev { p: f64::from(est.s) },
            Some(RateTarget::Derivative { s: est.s }),
        ),
        RiskName::Weighted => {
            let weights = exp
                .risk_weights
                .clone()
                .ok_or_else(|| invalid("risk = \"weighted\" requires experiment.risk_weights"))?;
            weights.validate().map_err(|e| invalid(format!("experiment.risk_weights: {e}")))?;
            (RiskKind::Weighted { weights: weights.clone() }, weights, None)
        }
    };
    if exp.risk != RiskName::Weighted && exp.risk_weights.is_some() {
        return Err(invalid("experiment.risk_weights is only used with risk = \"weighted\""));
    }
    let case = target.filter(|_| f64::from(est.s) <= p).map(|target| RateCase { decay, p, target });

    if exp.n_grid.is_empty() {
        return Err(invalid("experiment.n_grid must not be empty"));
    }
    if exp.n_grid.iter().any(|n| *n < 2) {
        return Err(invalid("every n in experiment.n_grid must be >= 2"));
    }
    if exp.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("experiment.n_grid must be strictly increasing"));
    }
    if exp.replications < 2 {
        return Err(invalid(format!("experiment.replications = {} must be >= 2", exp.replications)));
    }
    if !(exp.tolerance.is_finite() && exp.tolerance > 0.0) {
        return Err(invalid(format!("experiment.tolerance = {} must be > 0", exp.tolerance)));
    }
    if exp.lowerbound_draws == 0 {
        return Err(invalid("experiment.lowerbound_draws must be >= 1"));
    }
    if exp.side_condition_k < 4 {
        return Err(invalid(format!("experiment.side_condition_k = {} must be >= 4", exp.side_condition_k)));
    }
    if let Some(bad) = config.output.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
        return Err(invalid(format!("unknown output format {bad:?}; expected one of {FORMATS:?}")));
    }
    let single_n = exp.n.unwrap_or(exp.n_grid[0]);
    if single_n < 2 {
        return Err(invalid(format!("experiment.n = {single_n} must be >= 2")));
    }

    let dimension = |n| dimension_at(config, &risk_weights, n);
    let threshold = |m, n| threshold_at(config, m, n);
    let grid_dims = exp.n_grid.iter().map(|&n| dimension(n)).collect::<CliResult<Vec<_>>>()?;
    let single_m = dimension(single_n)?;
    let m_max = grid_dims.iter().copied().chain([single_m]).max().unwrap_or(1);
    let truncation = match proc_cfg.truncation {
        Some(j) => {
            if j < 3 {
                return Err(invalid(format!("process.truncation = {j} must be >= 3")));
            }
            if m_max > j {
                return Err(invalid(format!("dimension m = {m_max} exceeds process.truncation J = {j}")));
            }
            j
        }
        None => default_truncation(m_max),
    };

    let process = ProcessSpec::new(
        proc_cfg.decay.clone(),
        proc_cfg.d,
        proc_cfg.scaling,
        proc_cfg.sigma,
        proc_cfg.error_law,
        truncation,
    )
    .map_err(|e| invalid(format!("process: {e}")))?;
    let slope = SlopeSpec { p, rho: config.slope.rho, profile: config.slope.profile.clone() };
    let beta = make_slope(&slope, truncation).map_err(|e| invalid(format!("slope: {e}")))?;
    if let WeightSequence::Explicit { values } = &risk_weights {
        if values.len() < truncation {
            return Err(invalid(format!(
                "experiment.risk_weights has {} values, truncation is {truncation}",
                values.len()
            )));
        }
    }

    let grid = exp
        .n_grid
        .iter()
        .zip(&grid_dims)
        .map(|(&n, &m)| Ok(GridPoint { n, m, gamma: threshold(m, n)? }))
        .collect::<CliResult<Vec<_>>>()?;
    let single = GridPoint { n: single_n, m: single_m, gamma: threshold(single_m, single_n)? };

    // general consistency asks for γ² m³ / n^{3/2} = O(1); rate runs with γ = n violate it by design
    if grid.len() >= 3 {
        let growth: Vec<f64> =
            grid.iter().map(|g| g.gamma.powi(2) * (g.m as f64).powi(3) / (g.n as f64).powf(1.5)).collect();
        if growth[growth.len() - 1] > 2.0 * growth[0] {
            warnings.push(format!(
                "γ² m³ / n^(3/2) grows over the grid ({:.3e} to {:.3e}); the general consistency condition on (m, γ) is not met (informational)",
                growth[0],
                growth[growth.len() - 1]
            ));
        }
    }
    if grid.iter().any(|g| g.m > g.n) {
        warnings.push("some grid points use m > n; the empirical moment matrix is then singular".into());
    }

    Ok(Resolved { config: config.clone(), process, beta, risk, risk_weights, case, power, grid, single, warnings })
}

/// Dimension `m` prescribed by the configured rule at sample size `n`.
fn dimension_at(config: &ExperimentConfig, risk_weights: &WeightSequence, n: usize) -> CliResult<usize> {
    let decay_seq = &config.process.decay;
    let decay = DecayKind::from_weights(decay_seq)
        .ok_or_else(|| invalid("process.decay must be a poly_decay or exp_decay sequence"))?;
    let p = config.slope.p;
    let m = match &config.estimator.m {
        DimensionSetting::Fixed(m) => *m,
        DimensionSetting::Rule(rule) => match rule.as_str() {
            "m_star" => {
                let smoothness = WeightSequence::Sobolev { p };
                m_star(n, &smoothness, risk_weights, decay_seq).map_err(|e| invalid(e.to_string()))?.m
            }
            "n^{1/(2p+2a+1)}" => match decay {
                DecayKind::Poly { a } => ceil_rule((n as f64).powf(1.0 / (2.0 * p + 2.0 * a + 1.0))),
                DecayKind::Exp { .. } => return Err(invalid("m rule n^{1/(2p+2a+1)} needs poly_decay")),
            },
            "(log n)^{1/(2a)}" => match decay {
                DecayKind::Exp { a } => ceil_rule((n as f64).ln().powf(1.0 / (2.0 * a))),
                DecayKind::Poly { .. } => return Err(invalid("m rule (log n)^{1/(2a)} needs exp_decay")),
            },
            other => {
                return Err(invalid(format!(
                    "unknown m rule {other:?}; expected an integer, \"m_star\", \"n^{{1/(2p+2a+1)}}\" or \"(log n)^{{1/(2a)}}\""
                )))
            }
        },
    };
    if m == 0 {
        return Err(invalid("estimator.m must be >= 1"));
    }
    Ok(m)
}

/// Threshold `γ` prescribed by the configured rule at `(m, n)`.
fn threshold_at(config: &ExperimentConfig, m: usize, n: usize) -> CliResult<f64> {
    let gamma = match &config.estimator.gamma {
        ThresholdSetting::Value(g) => *g,
        ThresholdSetting::Rule(rule) => match rule.as_str() {
            "n" => n as f64,
            "8d3_over_upsilon_m" => 8.0 * config.process.d.powi(3) / config.process.decay.at(m),
            other => {
                return Err(invalid(format!(
                    "unknown gamma rule {other:?}; expected a number, \"n\" or \"8d3_over_upsilon_m\""
                )))
            }
        },
    };
    if !(gamma > 0.0) {
        return Err(invalid(format!("estimator.gamma = {gamma} must be > 0")));
    }
    Ok(gamma)
}

fn ceil_rule(x: f64) -> usize {
    ((x - CEIL_SLACK).ceil() as usize).max(1)
}

/// Smallest odd integer `>= max(128, 4 m_max)`; odd so that every cosine keeps its sine partner.
pub fn default_truncation(m_max: usize) -> usize {
    let j = 128usize.max(4 * m_max);
    if j.is_multiple_of(2) {
        j + 1
    } else {
        j
    }
}
