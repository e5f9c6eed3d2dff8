//! The five subcommands. Each takes a resolved configuration and an output
//! directory, writes its artifacts, and returns the numbers it reported.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use galerkin_flm::{
    assouad_check, assouad_slope, assouad_zeta, check_side_condition, derivative_estimate_with, derivative_transform,
    derive_seed, evaluate_series, fit_power_law, fit_rate, m_star, run_experiment, simulate_sample,
    theoretical_exponent, AssouadCheck, DecayKind, EstimateResult, Execution, ExperimentPlan, RateTarget, RiskReport,
    Sample, SideConditionReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Resolved;
use crate::error::{CliError, CliResult};
use crate::output::{config_comment, fmt_num, Envelope, OutputDir};

/// Points of the plotted curve on `[0, 1]`.
pub const CURVE_POINTS: usize = 512;

/// Verdicts from fewer replications are flagged as low-power.
pub const LOW_POWER_REPLICATIONS: usize = 20;

/// Sign vectors are enumerated exhaustively up to this length.
pub const MAX_EXHAUSTIVE_SIGNS: usize = 8;
pub const RANDOM_SIGN_VECTORS: usize = 64;

/// Relative tolerance of the Assouad inequality checks.
pub const ASSOUAD_RTOL: f64 = 1e-12;

// Seed indices reserved for the single-sample commands; grid points use `n` itself.
const SAMPLE_INDEX: u64 = 0;
const SIGN_INDEX: u64 = u64::MAX;
const DRAW_INDEX: u64 = u64::MAX - 1;
const MIRROR_INDEX: u64 = u64::MAX - 2;

/// Seed of the sample used by `simulate` and `estimate`.
pub fn sample_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, SAMPLE_INDEX)
}

// ---------------------------------------------------------------- simulate

pub struct SimulateOutcome {
    pub files: Vec<PathBuf>,
    pub sample: Sample,
}

#[derive(Serialize)]
struct SampleBody<'a> {
    n: usize,
    truncation: usize,
    seed: u64,
    sample_file: &'a str,
    process: &'a galerkin_flm::ProcessSpec,
    slope: &'a galerkin_flm::CoefficientVector,
}

pub fn simulate(res: &Resolved, out: &Path) -> CliResult<SimulateOutcome> {
    let seed = sample_seed(res.seed());
    let sample = simulate_sample(&res.process, &res.beta, res.single.n, seed)?;
    let mut dir = OutputDir::create(out)?;
    write_sample_csv(&mut dir, "sample.csv", &sample)?;
    let body = SampleBody {
        n: sample.n(),
        truncation: sample.truncation(),
        seed,
        sample_file: "sample.csv",
        process: &res.process,
        slope: &res.beta,
    };
    dir.write_json("sample.json", &Envelope::new("simulate", &res.config, &res.warnings, body))?;
    Ok(SimulateOutcome { files: dir.into_written(), sample })
}

fn write_sample_csv(dir: &mut OutputDir, name: &str, sample: &Sample) -> CliResult<PathBuf> {
    let mut header = vec!["y".to_string()];
    header.extend((1..=sample.truncation()).map(|j| format!("x_{j}")));
    let rows: Vec<Vec<String>> = sample
        .y()
        .iter()
        .zip(sample.x_rows())
        .map(|(y, x)| std::iter::once(y).chain(x).map(|v| fmt_num(*v)).collect())
        .collect();
    dir.write_csv(name, &header, &rows)
}

/// Reads a sample written by `simulate` (or any CSV with header `y,x_1,...,x_J`).
pub fn read_sample_csv(path: &Path) -> CliResult<Sample> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::Runtime(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').collect();
    let big_j = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("y".to_string()).chain((1..=big_j).map(|j| format!("x_{j}"))).collect();
    if big_j == 0 || header.iter().map(|h| h.trim()).ne(expected.iter().map(String::as_str)) {
        return Err(bad("header must be y,x_1,...,x_J".into()));
    }
    let (mut y, mut x) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != big_j + 1 {
            return Err(bad(format!("row {} has {} fields, expected {}", i + 1, fields.len(), big_j + 1)));
        }
        let mut values = fields.iter().map(|f| f.trim().parse::<f64>());
        y.push(values.next().unwrap().map_err(|e| bad(format!("row {}: {e}", i + 1)))?);
        for v in values {
            x.push(v.map_err(|e| bad(format!("row {}: {e}", i + 1)))?);
        }
    }
    Sample::new(y, x, big_j).map_err(|e| bad(e.to_string()))
}

// ---------------------------------------------------------------- estimate

pub struct EstimateOutcome {
    pub files: Vec<PathBuf>,
    pub estimate: EstimateResult,
    pub curve: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct SampleSource<'a> {
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    n: usize,
    truncation: usize,
}

#[derive(Serialize)]
struct EstimateBody<'a> {
    sample: SampleSource<'a>,
    gamma: f64,
    threshold_power: u32,
    estimate: &'a EstimateResult,
    /// Loss against the true slope; only for simulated samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    risk: Option<f64>,
    curve_file: &'a str,
}

pub fn estimate(res: &Resolved, sample_file: Option<&Path>, out: &Path) -> CliResult<EstimateOutcome> {
    let (sample, source) = match sample_file {
        Some(path) => {
            let sample = read_sample_csv(path)?;
            let src = SampleSource {
                kind: "file",
                path: Some(path.display().to_string()),
                seed: None,
                n: sample.n(),
                truncation: sample.truncation(),
            };
            (sample, src)
        }
        None => {
            let seed = sample_seed(res.seed());
            let sample = simulate_sample(&res.process, &res.beta, res.single.n, seed)?;
            let src = SampleSource {
                kind: "simulated",
                path: None,
                seed: Some(seed),
                n: sample.n(),
                truncation: sample.truncation(),
            };
            (sample, src)
        }
    };
    // a stored sample sets its own n, and with it m and γ
    let point = if sample_file.is_some() { res.point_at(sample.n())? } else { res.single };
    if point.m > sample.truncation() {
        return Err(CliError::Config(format!(
            "dimension m = {} exceeds the sample truncation J = {}",
            point.m,
            sample.truncation()
        )));
    }
    let est = derivative_estimate_with(&sample, point.m, res.s(), point.gamma, res.power)?;
    let risk = if sample_file.is_none() {
        let target = derivative_transform(&res.beta, res.s());
        Some(res.risk.evaluate(&est, &res.beta, &target, &res.process)?)
    } else {
        None
    };

    let curve = (0..CURVE_POINTS)
        .map(|i| {
            let t = i as f64 / (CURVE_POINTS - 1) as f64;
            Ok((t, evaluate_series(&est.beta_hat, t)?))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut dir = OutputDir::create(out)?;
    let rows: Vec<Vec<String>> = curve.iter().map(|(t, v)| vec![fmt_num(*t), fmt_num(*v)]).collect();
    dir.write_csv("curve.csv", &["t".into(), "value".into()], &rows)?;
    let body = EstimateBody {
        sample: source,
        gamma: point.gamma,
        threshold_power: res.power.exponent(),
        estimate: &est,
        risk,
        curve_file: "curve.csv",
    };
    dir.write_json("estimate.json", &Envelope::new("estimate", &res.config, &res.warnings, body))?;
    Ok(EstimateOutcome { files: dir.into_written(), estimate: est, curve })
}

// ---------------------------------------------------------------- rates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxis {
    LogN,
    LogLogN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    LowPower,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateVerdict {
    pub fitted_slope: f64,
    pub theory_slope: f64,
    /// Power of `log n` in the theoretical rate; folded into the tolerance.
    pub theory_log_power: f64,
    /// Where the theoretical slope comes from: the closed form or a fit of `δ*(n)`.
    pub theory_source: &'static str,
    pub tolerance: f64,
    pub pass: bool,
    pub low_power: bool,
    pub status: VerdictStatus,
    pub fit_axis: FitAxis,
    pub intercept: f64,
    pub r_squared: f64,
}

pub struct RatesOutcome {
    pub files: Vec<PathBuf>,
    pub reports: Vec<RiskReport>,
    pub verdict: RateVerdict,
}

#[derive(Serialize)]
struct RatesBody<'a> {
    #[serde(flatten)]
    verdict: &'a RateVerdict,
    reports: &'a [RiskReport],
}

pub fn rates(res: &Resolved, out: &Path) -> CliResult<RatesOutcome> {
    if res.grid.len() < 3 {
        return Err(CliError::Config(format!(
            "rates needs at least 3 grid points, experiment.n_grid has {}",
            res.grid.len()
        )));
    }
    let exp = &res.config.experiment;
    let reports = res
        .grid
        .iter()
        .map(|g| {
            let mut plan = ExperimentPlan::new(
                g.n,
                g.m,
                g.gamma,
                res.risk.clone(),
                exp.replications,
                derive_seed(res.seed(), g.n as u64),
            )
            .with_derivative(res.s());
            plan.threshold_power = res.power;
            Ok(run_experiment(&res.process, &res.beta, &plan)?)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let ns: Vec<usize> = res.grid.iter().map(|g| g.n).collect();
    let risks: Vec<f64> = reports.iter().map(|r| r.mean_risk).collect();
    let (theory_slope, theory_log_power, theory_source, fit_axis) = match &res.case {
        Some(case) => {
            let e = theoretical_exponent(case)?;
            match (case.decay, case.target) {
                (DecayKind::Exp { .. }, RateTarget::Derivative { .. }) => {
                    (e.log_power, 0.0, "closed_form", FitAxis::LogLogN)
                }
                _ => (e.n_power, e.log_power, "closed_form", FitAxis::LogN),
            }
        }
        None => {
            let deltas = ns
                .iter()
                .map(|&n| Ok(m_star(n, &res.smoothness(), &res.risk_weights, res.decay())?.delta_star))
                .collect::<CliResult<Vec<_>>>()?;
            (fit_rate(&ns, &deltas)?.slope, 0.0, "delta_star_fit", FitAxis::LogN)
        }
    };
    let fit = match fit_axis {
        FitAxis::LogN => fit_rate(&ns, &risks),
        FitAxis::LogLogN => {
            let logs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
            fit_power_law(&logs, &risks)
        }
    }
    .map_err(|e| CliError::Runtime(format!("rate fit: {e}")))?;

    let pass = (fit.slope - theory_slope).abs() <= exp.tolerance;
    let low_power = exp.replications < LOW_POWER_REPLICATIONS;
    let status = match (low_power, pass) {
        (true, _) => VerdictStatus::LowPower,
        (false, true) => VerdictStatus::Pass,
        (false, false) => VerdictStatus::Fail,
    };
    let verdict = RateVerdict {
        fitted_slope: fit.slope,
        theory_slope,
        theory_log_power,
        theory_source,
        tolerance: exp.tolerance,
        pass,
        low_power,
        status,
        fit_axis,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    };

    let mut dir = OutputDir::create(out)?;
    if res.config.wants("csv") {
        let header = ["n", "m_star", "mean_risk", "std_error", "omega_freq", "theory_exponent", "fitted_slope"]
            .map(String::from);
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.m.to_string(),
                    fmt_num(r.mean_risk),
                    fmt_num(r.std_error),
                    fmt_num(r.omega_frequency),
                    fmt_num(theory_slope),
                    fmt_num(fit.slope),
                ]
            })
            .collect();
        dir.write_csv("rates.csv", &header, &rows)?;
    }
    if res.config.wants("dat") {
        let mut text = config_comment(&res.config);
        let _ = writeln!(text, "# fit axis: {}", axis_label(fit_axis));
        let _ = writeln!(text, "# fitted slope {} theory slope {}", fmt_num(fit.slope), fmt_num(theory_slope));
        text.push_str("# log_n log_mean_risk\n");
        for r in &reports {
            let _ = writeln!(text, "{} {}", fmt_num((r.n as f64).ln()), fmt_num(r.mean_risk.ln()));
        }
        dir.write_text("rates.dat", &text)?;
    }
    if res.config.wants("gp") {
        dir.write_text("rates.gp", &gnuplot_script(&verdict, &ns, &risks))?;
    }
    let body = RatesBody { verdict: &verdict, reports: &reports };
    dir.write_json("verdict.json", &Envelope::new("rates", &res.config, &res.warnings, body))?;
    Ok(RatesOutcome { files: dir.into_written(), reports, verdict })
}

fn axis_label(axis: FitAxis) -> &'static str {
    match axis {
        FitAxis::LogN => "log n",
        FitAxis::LogLogN => "log log n",
    }
}

fn gnuplot_script(v: &RateVerdict, ns: &[usize], risks: &[f64]) -> String {
    let xs: Vec<f64> = match v.fit_axis {
        FitAxis::LogN => ns.iter().map(|n| (*n as f64).ln()).collect(),
        FitAxis::LogLogN => ns.iter().map(|n| (*n as f64).ln().ln()).collect(),
    };
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = risks.iter().map(|r| r.ln()).sum::<f64>() / risks.len() as f64;
    // theory line drawn through the centroid of the data
    let theory_intercept = my - v.theory_slope * mx;
    let using = match v.fit_axis {
        FitAxis::LogN => "1:2",
        FitAxis::LogLogN => "(log($1)):2",
    };
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot template for rates.dat");
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let _ = writeln!(s, "set output 'rates.png'");
    let _ = writeln!(s, "set xlabel '{}'", axis_label(v.fit_axis));
    let _ = writeln!(s, "set ylabel 'log mean risk'");
    let _ = writeln!(s, "set key bottom left");
    let _ = writeln!(s, "fitted(x) = {} + {} * x", fmt_num(v.intercept), fmt_num(v.fitted_slope));
    let _ = writeln!(s, "theory(x) = {} + {} * x", fmt_num(theory_intercept), fmt_num(v.theory_slope));
    let _ = writeln!(
        s,
        "plot 'rates.dat' using {using} with points pt 7 title 'mean risk', \\\n     fitted(x) title 'fitted slope {:.3}', \\\n     theory(x) dashtype 2 title 'theory slope {:.3}'",
        v.fitted_slope,
        v.theory_slope
    );
    s
}

// ---------------------------------------------------------------- lowerbound

#[derive(Debug, Clone, Serialize)]
pub struct SignCheck {
    pub theta: String,
    #[serde(flatten)]
    pub check: AssouadCheck,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DrawReport {
    pub theta: String,
    pub mean_risk: f64,
    pub std_error: f64,
    pub omega_frequency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MirrorCheck {
    pub plus_risk: f64,
    pub minus_risk: f64,
    pub abs_diff: f64,
    pub equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub m_star: usize,
    pub delta_star: f64,
    pub achieved_delta: f64,
    pub zeta: f64,
    pub exhaustive: bool,
    pub all_hold: bool,
    pub max_likelihood_ratio: f64,
    pub max_ellipsoid_norm: f64,
    pub draws: Vec<DrawReport>,
    pub worst_case_risk: f64,
    pub worst_over_delta_star: f64,
    pub mirror: MirrorCheck,
    pub checks: Vec<SignCheck>,
}

pub struct LowerBoundOutcome {
    pub files: Vec<PathBuf>,
    pub report: LowerBoundReport,
}

fn sign_string(theta: &[i8]) -> String {
    theta.iter().map(|t| if *t > 0 { '+' } else { '-' }).collect()
}

fn random_signs(rng: &mut ChaCha8Rng, len: usize) -> Vec<i8> {
    (0..len).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}

pub fn lowerbound(res: &Resolved, out: &Path) -> CliResult<LowerBoundOutcome> {
    let n = res.single.n;
    let proc = &res.process;
    let rho = res.config.slope.rho;
    let smooth = res.smoothness();
    let ms = m_star(n, &smooth, &res.risk_weights, res.decay())?;
    if ms.m > proc.truncation {
        return Err(CliError::Config(format!(
            "m* = {} at n = {n} exceeds the truncation J = {}; raise process.truncation",
            ms.m, proc.truncation
        )));
    }
    let delta = ms.achieved_delta;
    let family = |theta: &[i8]| assouad_slope(theta, n, res.decay(), proc.sigma, proc.d, rho, delta, proc.truncation);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(res.seed(), SIGN_INDEX));
    let exhaustive = ms.m <= MAX_EXHAUSTIVE_SIGNS;
    let thetas: Vec<Vec<i8>> = if exhaustive {
        (0..1usize << ms.m).map(|code| (0..ms.m).map(|j| if code >> j & 1 == 0 { 1 } else { -1 }).collect()).collect()
    } else {
        (0..RANDOM_SIGN_VECTORS).map(|_| random_signs(&mut rng, ms.m)).collect()
    };
    let checks = thetas
        .iter()
        .map(|theta| {
            let beta = family(theta)?;
            let check =
                assouad_check(&beta, ms.m, n, res.decay(), &smooth, &res.risk_weights, proc.sigma, proc.d, rho, delta);
            Ok(SignCheck { theta: sign_string(theta), check, holds: check.holds(ASSOUAD_RTOL) })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let exp = &res.config.experiment;
    let point = res.single;
    let plan_for = |seed: u64| {
        let mut plan = ExperimentPlan::new(n, point.m, point.gamma, res.risk.clone(), exp.replications, seed)
            .with_derivative(res.s());
        plan.threshold_power = res.power;
        plan
    };
    let draw_seed = derive_seed(res.seed(), DRAW_INDEX);
    let draws = (0..exp.lowerbound_draws)
        .map(|k| {
            let theta = random_signs(&mut rng, ms.m);
            let report = run_experiment(proc, &family(&theta)?, &plan_for(derive_seed(draw_seed, k as u64)))?;
            Ok(DrawReport {
                theta: sign_string(&theta),
                mean_risk: report.mean_risk,
                std_error: report.std_error,
                omega_frequency: report.omega_frequency,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let worst = draws.iter().map(|d| d.mean_risk).fold(0.0_f64, f64::max);

    let mirror = mirror_check(res, &family(&vec![1; ms.m])?, &family(&vec![-1; ms.m])?)?;

    let report = LowerBoundReport {
        n,
        m_star: ms.m,
        delta_star: ms.delta_star,
        achieved_delta: delta,
        zeta: assouad_zeta(proc.sigma, proc.d, rho, delta),
        exhaustive,
        all_hold: checks.iter().all(|c| c.holds),
        max_likelihood_ratio: checks.iter().map(|c| c.check.likelihood_ratio_max).fold(0.0, f64::max),
        max_ellipsoid_norm: checks.iter().map(|c| c.check.ellipsoid_norm).fold(0.0, f64::max),
        draws,
        worst_case_risk: worst,
        worst_over_delta_star: worst / ms.delta_star,
        mirror,
        checks,
    };

    let mut dir = OutputDir::create(out)?;
    if res.config.wants("csv") {
        let header =
            ["theta", "likelihood_ratio_max", "ellipsoid_norm", "rho", "separation", "separation_floor", "holds"]
                .map(String::from);
        let rows: Vec<Vec<String>> = report
            .checks
            .iter()
            .map(|c| {
                vec![
                    c.theta.clone(),
                    fmt_num(c.check.likelihood_ratio_max),
                    fmt_num(c.check.ellipsoid_norm),
                    fmt_num(c.check.rho),
                    fmt_num(c.check.separation),
                    fmt_num(c.check.separation_floor),
                    c.holds.to_string(),
                ]
            })
            .collect();
        dir.write_csv("lowerbound.csv", &header, &rows)?;
    }
    dir.write_json("lowerbound.json", &Envelope::new("lowerbound", &res.config, &res.warnings, &report))?;
    Ok(LowerBoundOutcome { files: dir.into_written(), report })
}

/// Runs the estimator on `β⁺` and on the mirrored samples (responses negated),
/// which are draws from the model with slope `β⁻ = −β⁺` sharing the regressors.
fn mirror_check(
    res: &Resolved,
    plus: &galerkin_flm::CoefficientVector,
    minus: &galerkin_flm::CoefficientVector,
) -> CliResult<MirrorCheck> {
    let exp = &res.config.experiment;
    let point = res.single;
    let s = res.s();
    let (t_plus, t_minus) = (derivative_transform(plus, s), derivative_transform(minus, s));
    let seed = derive_seed(res.seed(), MIRROR_INDEX);
    let pairs = Execution::default().map_indexed(exp.replications, |r| -> CliResult<(f64, f64)> {
        let sample = simulate_sample(&res.process, plus, point.n, derive_seed(seed, r as u64))?;
        let a = derivative_estimate_with(&sample, point.m, s, point.gamma, res.power)?;
        let b = derivative_estimate_with(&sample.mirrored(), point.m, s, point.gamma, res.power)?;
        Ok((res.risk.evaluate(&a, plus, &t_plus, &res.process)?, res.risk.evaluate(&b, minus, &t_minus, &res.process)?))
    });
    let pairs = pairs.into_iter().collect::<CliResult<Vec<_>>>()?;
    let r = pairs.len() as f64;
    let plus_risk = pairs.iter().map(|p| p.0).sum::<f64>() / r;
    let minus_risk = pairs.iter().map(|p| p.1).sum::<f64>() / r;
    let abs_diff = (plus_risk - minus_risk).abs();
    Ok(MirrorCheck { plus_risk, minus_risk, abs_diff, equal: abs_diff <= 1e-12 * plus_risk.max(1e-300) })
}

// ---------------------------------------------------------------- side condition

pub struct SideConditionOutcome {
    pub files: Vec<PathBuf>,
    pub report: SideConditionReport,
}

pub fn side_condition(res: &Resolved, out: &Path) -> CliResult<SideConditionOutcome> {
    let case = res
        .case
        .ok_or_else(|| CliError::Config("the side condition needs prediction or derivative risk with s <= p".into()))?;
    let exp = &res.config.experiment;
    let grid = exp.side_condition_grid.as_deref().unwrap_or(&exp.n_grid);
    if grid.len() < 3 || grid.iter().any(|n| *n < 2) {
        return Err(CliError::Config("the side-condition grid needs at least 3 points, each >= 2".into()));
    }
    let report = check_side_condition(&case, grid, exp.side_condition_k)?;

    let mut dir = OutputDir::create(out)?;
    if res.config.wants("csv") {
        let header =
            ["n", "m_star", "delta_star", "moment_ratio", "variance_ratio", "dimension_ratio"].map(String::from);
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.m_star.to_string(),
                    fmt_num(r.delta_star),
                    fmt_num(r.moment_ratio),
                    fmt_num(r.variance_ratio),
                    fmt_num(r.dimension_ratio),
                ]
            })
            .collect();
        dir.write_csv("side_condition.csv", &header, &rows)?;
    }
    dir.write_json("side_condition.json", &Envelope::new("check-side-condition", &res.config, &res.warnings, &report))?;
    Ok(SideConditionOutcome { files: dir.into_written(), report })
}
