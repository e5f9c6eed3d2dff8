//! Thresholded projection (Galerkin) estimation for the functional linear model
//!
//! ```text
//! Y = ∫ β(t) X(t) dt + σ ε
//! ```
//!
//! The slope `β` is estimated by projecting the data onto the first `m`
//! functions of the real trigonometric basis, solving the empirical normal
//! equations `[Γ̂]_m b = [ĝ]_m`, and discarding the solution whenever the
//! spectral norm of `[Γ̂]_m⁻¹` exceeds a threshold `γ`. Weak derivatives of
//! `β` are estimated by differentiating the resulting series.
//!
//! Besides the estimator the crate ships the pieces needed to check its
//! convergence rates by simulation: a Gaussian regressor simulator with
//! prescribed eigenvalue decay, slopes inside Sobolev ellipsoids, the
//! Assouad worst-case family, risk functionals, a replication engine, and
//! the balancing rule that predicts the optimal dimension and rate.
//!
//! Replications run on rayon when the `parallel` feature is enabled (the
//! default). Results are bit-identical with and without it.

pub mod basis;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod model;
pub mod rates;
pub mod risk;

pub use basis::{
    derivative_transform, eval_basis, evaluate_series, frequency, weighted_norm_sq, CoefficientVector, WeightSequence,
};
pub use error::{Error, Result};
pub use estimator::{
    derivative_estimate, derivative_estimate_with, differentiate, empirical_moments, empirical_moments_with,
    estimate_from_moments, galerkin_solve, oracle_galerkin, threshold_estimate, threshold_estimate_with,
    EstimateResult, GalerkinSolution, MomentMatrices, Spectrum, ThresholdPower,
};
pub use exec::Execution;
pub use model::{
    assouad_check, assouad_slope, assouad_zeta, derive_seed, make_slope, simulate_sample, AssouadCheck, EigenScaling,
    ErrorLaw, ProcessSpec, Sample, SlopeProfile, SlopeSpec,
};
pub use rates::{
    check_side_condition, fit_power_law, fit_rate, m_star, m_star_for_case, theoretical_exponent, DecayKind, Exponent,
    MStar, RateCase, RateFit, RateTarget, SideConditionReport, SideConditionRow, Verdict,
};
pub use risk::{prediction_risk, run_experiment, w_risk, ExperimentPlan, RiskKind, RiskReport};
