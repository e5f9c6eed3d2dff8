//! Risk functionals and the Monte Carlo replication engine.

use serde::{Deserialize, Serialize};

use crate::basis::{check_same_truncation, derivative_transform, weighted_norm_sq, CoefficientVector, WeightSequence};
use crate::error::{Error, Result};
use crate::estimator::{derivative_estimate_with, EstimateResult, ThresholdPower};
use crate::exec::Execution;
use crate::model::{derive_seed, simulate_sample, ProcessSpec};

/// `‖β̂ − β‖²_w`.
pub fn w_risk(est: &EstimateResult, beta_true: &CoefficientVector, seq: &WeightSequence) -> Result<f64> {
    let diff = est.beta_hat.sub(beta_true)?;
    Ok(weighted_norm_sq(&diff, seq))
}

/// Exact prediction risk `<Γ(β̂ − β), β̂ − β> = Σ_j λ(j) ([β̂]_j − [β]_j)²`
/// for a design whose eigenbasis is the trig basis.
pub fn prediction_risk(est: &EstimateResult, beta_true: &CoefficientVector, proc: &ProcessSpec) -> Result<f64> {
    check_same_truncation(&est.beta_hat, beta_true)?;
    if beta_true.truncation() != proc.truncation {
        return Err(Error::Dimension(format!(
            "estimate truncation {} differs from process truncation {}",
            beta_true.truncation(),
            proc.truncation
        )));
    }
    Ok(est
        .beta_hat
        .iter()
        .zip(beta_true.iter())
        .enumerate()
        .map(|(i, (a, b))| proc.lambda(i + 1) * (a - b) * (a - b))
        .sum())
}

/// The loss evaluated in each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskKind {
    /// Mean prediction error `<Γ(β̂ − β), β̂ − β>`; requires `s = 0`.
    Prediction,
    /// `L²` risk of the `s`-th derivative (plain `L²` risk when `s = 0`).
    Derivative,
    /// `‖β̂^{(s)} − β^{(s)}‖²_w` for an arbitrary weight sequence.
    Weighted { weights: WeightSequence },
}

impl RiskKind {
    pub fn label(&self) -> String {
        match self {
            RiskKind::Prediction => "prediction".into(),
            RiskKind::Derivative => "derivative_l2".into(),
            RiskKind::Weighted { weights } => format!("weighted:{}", weights.label()),
        }
    }

    /// Loss of `est` against the true slope `beta`; `target` is `β^{(s)}`.
    pub fn evaluate(
        &self,
        est: &EstimateResult,
        beta: &CoefficientVector,
        target: &CoefficientVector,
        proc: &ProcessSpec,
    ) -> Result<f64> {
        match self {
            RiskKind::Prediction => prediction_risk(est, beta, proc),
            RiskKind::Derivative => w_risk(est, target, &WeightSequence::Constant),
            RiskKind::Weighted { weights } => w_risk(est, target, weights),
        }
    }
}

/// Everything `run_experiment` needs besides the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub s: u32,
    pub threshold_power: ThresholdPower,
    pub risk: RiskKind,
    pub replications: usize,
    pub master_seed: u64,
    /// Keep the per-replication risks in the report.
    pub retain_risks: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl ExperimentPlan {
    pub fn new(n: usize, m: usize, gamma: f64, risk: RiskKind, replications: usize, master_seed: u64) -> Self {
        ExperimentPlan {
            n,
            m,
            gamma,
            s: 0,
            threshold_power: ThresholdPower::Unsquared,
            risk,
            replications,
            master_seed,
            retain_risks: false,
            execution: Execution::Parallel,
        }
    }

    pub fn with_derivative(mut self, s: u32) -> Self {
        self.s = s;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn retaining_risks(mut self) -> Self {
        self.retain_risks = true;
        self
    }

    fn validate(&self, truncation: usize) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Validation(format!("at least 2 replications are required, got {}", self.replications)));
        }
        if self.n == 0 {
            return Err(Error::Validation("sample size n must be >= 1".into()));
        }
        if self.m == 0 || self.m > truncation {
            return Err(Error::Validation(format!("dimension m = {} must lie in 1..={truncation}", self.m)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Validation(format!("threshold γ = {} must be > 0", self.gamma)));
        }
        if self.risk == RiskKind::Prediction && self.s != 0 {
            return Err(Error::Validation("prediction risk is defined for s = 0 only".into()));
        }
        if let RiskKind::Weighted { weights } = &self.risk {
            weights.validate()?;
            if let WeightSequence::Explicit { values } = weights {
                if values.len() < truncation {
                    return Err(Error::Validation("explicit risk weights must cover the truncation".into()));
                }
            }
        }
        Ok(())
    }
}

/// Summary of `R` replications at one `(n, m, γ, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub s: u32,
    pub weight_kind: String,
    pub replications: usize,
    pub mean_risk: f64,
    pub std_error: f64,
    pub omega_frequency: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub risks: Option<Vec<f64>>,
}

/// Runs `R` independent replications of simulate → estimate → risk.
///
/// Replication `r` is simulated from `derive_seed(master_seed, r)`, and the
/// reduction runs in replication order, so the report does not depend on
/// the execution strategy or the thread count.
pub fn run_experiment(proc: &ProcessSpec, beta: &CoefficientVector, plan: &ExperimentPlan) -> Result<RiskReport> {
    proc.validate()?;
    plan.validate(proc.truncation)?;
    if beta.truncation() != proc.truncation {
        return Err(Error::Dimension(format!(
            "slope truncation {} differs from process truncation {}",
            beta.truncation(),
            proc.truncation
        )));
    }
    let target = derivative_transform(beta, plan.s);

    let outcomes = plan.execution.map_indexed(plan.replications, |r| -> Result<(f64, bool)> {
        let sample = simulate_sample(proc, beta, plan.n, derive_seed(plan.master_seed, r as u64))?;
        let est = derivative_estimate_with(&sample, plan.m, plan.s, plan.gamma, plan.threshold_power)?;
        let risk = plan.risk.evaluate(&est, beta, &target, proc)?;
        Ok((risk, est.omega_held))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let r = outcomes.len() as f64;
    let risks: Vec<f64> = outcomes.iter().map(|(risk, _)| *risk).collect();
    let held = outcomes.iter().filter(|(_, held)| *held).count();
    let mean = risks.iter().sum::<f64>() / r;
    let var = risks.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);

    Ok(RiskReport {
        n: plan.n,
        m: plan.m,
        gamma: plan.gamma,
        s: plan.s,
        weight_kind: plan.risk.label(),
        replications: plan.replications,
        mean_risk: mean,
        std_error: (var / r).sqrt(),
        omega_frequency: held as f64 / r,
        risks: plan.retain_risks.then_some(risks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_slope, SlopeProfile, SlopeSpec};

    fn est(v: Vec<f64>) -> EstimateResult {
        EstimateResult { beta_hat: CoefficientVector::new(v).unwrap(), m: 2, sigma_min: 1.0, omega_held: true, s: 0 }
    }

    #[test]
    fn w_risk_examples() {
        let beta = CoefficientVector::new(vec![0.5, 0.2, -0.1, 0.3, 0.0]).unwrap();
        let exact = est(beta.as_slice().to_vec());
        assert_eq!(w_risk(&exact, &beta, &WeightSequence::Sobolev { p: 1.0 }).unwrap(), 0.0);

        let zero = est(vec![0.0; 5]);
        let l2: f64 = beta.iter().map(|b| b * b).sum();
        assert_eq!(w_risk(&zero, &beta, &WeightSequence::Constant).unwrap(), l2);

        let off = est(vec![0.5, 1.2, -0.1, 1.3, 0.0]);
        assert_eq!(w_risk(&off, &beta, &WeightSequence::Sobolev { p: 1.0 }).unwrap(), 5.0);
    }

    #[test]
    fn constant_weight_risk_is_sum_of_squares() {
        let beta = CoefficientVector::new(vec![0.1, -0.4, 2.0]).unwrap();
        let e = est(vec![0.3, 0.1, 1.0]);
        let direct: f64 = [0.2f64, 0.5, -1.0].iter().map(|d| d * d).sum();
        assert!((w_risk(&e, &beta, &WeightSequence::Constant).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn prediction_risk_examples() {
        let proc = ProcessSpec::gaussian(WeightSequence::PolyDecay { a: 1.0 }, 1.0, 1.0, 4).unwrap();
        let beta = CoefficientVector::new(vec![0.3, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!(prediction_risk(&est(beta.as_slice().to_vec()), &beta, &proc).unwrap(), 0.0);
        let shifted = est(vec![1.3, 0.2, 0.1, 0.0]);
        assert_eq!(prediction_risk(&shifted, &beta, &proc).unwrap(), 1.0);
    }

    fn poly_setup(sigma: f64) -> (ProcessSpec, CoefficientVector) {
        let proc = ProcessSpec::gaussian(WeightSequence::PolyDecay { a: 1.0 }, 1.0, sigma, 129).unwrap();
        let beta = make_slope(&SlopeSpec { p: 1.0, rho: 1.0, profile: SlopeProfile::SmoothDefault }, 129).unwrap();
        (proc, beta)
    }

    #[test]
    fn degenerate_model_has_zero_risk() {
        let (proc, _) = poly_setup(0.0);
        let plan = ExperimentPlan::new(50, 4, 50.0, RiskKind::Prediction, 4, 1);
        let report = run_experiment(&proc, &CoefficientVector::zeros(129), &plan).unwrap();
        assert_eq!(report.mean_risk, 0.0);
        assert_eq!(report.std_error, 0.0);
        assert_eq!(report.omega_frequency, 1.0);
    }

    #[test]
    fn reports_are_deterministic_across_execution() {
        let (proc, beta) = poly_setup(0.5);
        let plan = ExperimentPlan::new(300, 4, 300.0, RiskKind::Prediction, 12, 99).retaining_risks();
        let a = run_experiment(&proc, &beta, &plan).unwrap();
        let b = run_experiment(&proc, &beta, &plan).unwrap();
        let c = run_experiment(&proc, &beta, &plan.clone().with_execution(Execution::Sequential)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.risks.as_ref().unwrap().len(), 12);
    }

    #[test]
    fn plan_validation() {
        let (proc, beta) = poly_setup(0.5);
        let bad_r = ExperimentPlan::new(100, 4, 100.0, RiskKind::Prediction, 1, 0);
        assert!(matches!(run_experiment(&proc, &beta, &bad_r), Err(Error::Validation(_))));
        let bad_m = ExperimentPlan::new(100, 200, 100.0, RiskKind::Prediction, 4, 0);
        assert!(matches!(run_experiment(&proc, &beta, &bad_m), Err(Error::Validation(_))));
        let bad_s = ExperimentPlan::new(100, 4, 100.0, RiskKind::Prediction, 4, 0).with_derivative(1);
        assert!(matches!(run_experiment(&proc, &beta, &bad_s), Err(Error::Validation(_))));
    }

    #[test]
    fn estimator_beats_zero_estimator() {
        let (proc, beta) = poly_setup(0.5);
        let n = 2000;
        let m = (n as f64).powf(0.2).ceil() as usize;
        let plan = ExperimentPlan::new(n, m, n as f64, RiskKind::Prediction, 200, 2024);
        let report = run_experiment(&proc, &beta, &plan).unwrap();
        let zero_risk = prediction_risk(&est(vec![0.0; 129]), &beta, &proc).unwrap();
        assert!(report.mean_risk > 0.0);
        assert!(report.mean_risk < zero_risk, "{} vs {zero_risk}", report.mean_risk);
    }
}
