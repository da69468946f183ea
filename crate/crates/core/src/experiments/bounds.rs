//! Theoretical bounds on the curing process and their empirical checks.
//!
//! Each check compares a pooled Monte Carlo estimate against a closed-form
//! bound at 99% confidence. Upper bounds pass when `mean − half_width ≤
//! bound`; lower bounds pass when `mean + half_width ≥ bound`. All checks
//! are one-sided: the theory promises inequalities, not equalities.

use serde::Serialize;
use thiserror::Error;

use super::{run_experiment, ExperimentConfig, ExperimentError, PolicySpec, Study, Summary};
use crate::cure::excursion_bound;
use crate::experiments::InitSpec;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("degenerate barrier: start {start} must lie in 0..={upper} with upper >= 1")]
    DegenerateBoundary { start: u32, upper: u32 },
    #[error("walk rates must be positive")]
    NonPositiveRate,
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("every replication was censored; no extinction times to compare")]
    NoExtinctions,
}

/// Probability that a single excursion ends long, i.e. that the stray set
/// reaches K = ceil(budget / 8Δ) before emptying: 3 / (2^K − 1). The stray
/// set starts at two nodes, so for K < 2 the probability is 1.
pub fn failure_probability(budget: f64, max_degree: usize) -> f64 {
    let k = excursion_bound(budget, max_degree);
    if k < 2 {
        return 1.0;
    }
    3.0 / ((k as f64).exp2() - 1.0)
}

/// Probability that a birth–death walk absorbed at 0 and `upper` hits
/// `upper` first, starting from `start`, with constant up/down rates.
pub fn gambler_ruin_oracle(
    upper: u32,
    start: u32,
    up_rate: f64,
    down_rate: f64,
) -> Result<f64, BoundsError> {
    if !(up_rate > 0.0) || !(down_rate > 0.0) {
        return Err(BoundsError::NonPositiveRate);
    }
    if upper == 0 || start > upper {
        return Err(BoundsError::DegenerateBoundary { start, upper });
    }
    if start == 0 {
        return Ok(0.0);
    }
    if start == upper {
        return Ok(1.0);
    }
    let ratio = down_rate / up_rate;
    if (ratio - 1.0).abs() < 1e-12 {
        return Ok(start as f64 / upper as f64);
    }
    Ok((ratio.powi(start as i32) - 1.0) / (ratio.powi(upper as i32) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// The constants the theoretical value was computed from, kept so the
/// verdict can be re-derived from the report alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct BoundInputs {
    pub n: usize,
    pub budget: f64,
    pub max_degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutwidth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excursion_bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub kind: BoundKind,
    pub theoretical: f64,
    pub inputs: BoundInputs,
    pub empirical: Summary,
    pub verdict: Verdict,
}

impl BoundReport {
    /// Builds a report, deciding the verdict. Too few samples (below
    /// `min_count`, or too few to form a half-width) give `Inconclusive`.
    pub fn evaluate(
        name: &str,
        kind: BoundKind,
        theoretical: f64,
        inputs: BoundInputs,
        empirical: Summary,
        min_count: u64,
    ) -> BoundReport {
        let verdict = if empirical.count < min_count
            || !empirical.mean.is_finite()
            || !empirical.half_width_99.is_finite()
        {
            Verdict::Inconclusive
        } else {
            let pass = match kind {
                BoundKind::Upper => empirical.mean - empirical.half_width_99 <= theoretical,
                BoundKind::Lower => empirical.mean + empirical.half_width_99 >= theoretical,
            };
            if pass {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        };
        BoundReport {
            name: name.to_string(),
            kind,
            theoretical,
            inputs,
            empirical,
            verdict,
        }
    }
}

fn base_inputs(study: &Study) -> BoundInputs {
    BoundInputs {
        n: study.graph.node_count(),
        budget: study.config.budget,
        max_degree: study.graph.max_degree(),
        cutwidth: study.cutwidth,
        order_width: study.order_width,
        ..BoundInputs::default()
    }
}

fn require_cure_policy(study: &Study, what: &str) -> Result<(), BoundsError> {
    if study.config.policy != PolicySpec::Cure {
        return Err(BoundsError::Hypothesis(format!(
            "{what} applies to the cure policy, not {}",
            study.config.policy
        )));
    }
    Ok(())
}

fn warn_if_budget_below_4w(study: &Study) {
    let width = study.cutwidth.or(study.order_width);
    if let Some(w) = width {
        if study.config.budget < 4.0 * w as f64 {
            log::warn!(
                "budget {} is below 4x path width {w}; the bounds being \
                 checked are not guaranteed to hold",
                study.config.budget
            );
        }
    }
}

/// Fewer pooled excursions than this gives an inconclusive excursion check.
pub const MIN_EXCURSIONS: u64 = 100;

/// Two checks on pooled excursions: the long-excursion frequency is at most
/// `failure_probability`, and the mean excursion duration is at most
/// 4/budget.
pub fn verify_lemma2(study: &Study) -> Result<Vec<BoundReport>, BoundsError> {
    require_cure_policy(study, "the excursion bound")?;
    warn_if_budget_below_4w(study);
    let mut inputs = base_inputs(study);
    inputs.excursion_bound = Some(excursion_bound(
        study.config.budget,
        study.graph.max_degree(),
    ));
    inputs.failure_probability = Some(failure_probability(
        study.config.budget,
        study.graph.max_degree(),
    ));
    let frequency = BoundReport::evaluate(
        "lemma2a_long_excursion_probability",
        BoundKind::Upper,
        inputs.failure_probability.unwrap(),
        inputs,
        Summary::from_bernoulli(study.long_excursions, study.excursions),
        MIN_EXCURSIONS,
    );
    let duration = BoundReport::evaluate(
        "lemma2b_mean_excursion_duration",
        BoundKind::Upper,
        4.0 / study.config.budget,
        inputs,
        Summary::from_samples(&study.excursion_durations),
        MIN_EXCURSIONS,
    );
    Ok(vec![frequency, duration])
}

/// The mean waiting-period duration, pooled over attempts, is at most
/// 8n/budget. Zero-length waits count as samples of 0.
pub fn verify_lemma3(study: &Study) -> Result<BoundReport, BoundsError> {
    require_cure_policy(study, "the waiting-time bound")?;
    warn_if_budget_below_4w(study);
    let bound = 8.0 * study.graph.node_count() as f64 / study.config.budget;
    Ok(BoundReport::evaluate(
        "lemma3_mean_waiting_time",
        BoundKind::Upper,
        bound,
        base_inputs(study),
        Summary::from_samples(&study.waiting_durations),
        2,
    ))
}

/// The mean extinction time is at most (1/(1−np))·13n/budget, provided the
/// budget is at least 4x the path width and np < 1. Violated hypotheses
/// refuse with an explanation rather than reporting a verdict.
pub fn verify_theorem1(study: &Study) -> Result<BoundReport, BoundsError> {
    require_cure_policy(study, "the extinction-time bound")?;
    let n = study.graph.node_count();
    let budget = study.config.budget;
    let width = study.cutwidth.or(study.order_width).ok_or_else(|| {
        BoundsError::Hypothesis("no path width is available for this configuration".into())
    })?;
    if budget < 4.0 * width as f64 {
        return Err(BoundsError::Hypothesis(format!(
            "budget {budget} is below 4x the path width {width}"
        )));
    }
    let p = failure_probability(budget, study.graph.max_degree());
    let np = n as f64 * p;
    if np >= 1.0 {
        return Err(BoundsError::Hypothesis(format!(
            "n*p = {np:.4} >= 1; the per-attempt failure probability is too \
             large for the bound to converge"
        )));
    }
    if study.extinction_time.count == 0 {
        return Err(BoundsError::NoExtinctions);
    }
    let bound = (1.0 / (1.0 - np)) * 13.0 * n as f64 / budget;
    let mut inputs = base_inputs(study);
    inputs.excursion_bound = Some(excursion_bound(budget, study.graph.max_degree()));
    inputs.failure_probability = Some(p);
    Ok(BoundReport::evaluate(
        "theorem1_mean_extinction_time",
        BoundKind::Upper,
        bound,
        inputs,
        study.extinction_time,
        2,
    ))
}

/// When every node starts infected, no policy can finish faster than
/// n/budget in expectation: n cures must happen at a total rate of at most
/// budget. Applies to every policy.
pub fn verify_corollary_lower_bound(study: &Study) -> Result<BoundReport, BoundsError> {
    if study.config.init != InitSpec::All {
        return Err(BoundsError::Hypothesis(
            "the lower bound assumes every node starts infected (--init all)".into(),
        ));
    }
    if study.extinction_time.count == 0 {
        return Err(BoundsError::NoExtinctions);
    }
    let bound = study.graph.node_count() as f64 / study.config.budget;
    Ok(BoundReport::evaluate(
        "corollary1a_extinction_time_lower_bound",
        BoundKind::Lower,
        bound,
        base_inputs(study),
        study.extinction_time,
        2,
    ))
}

/// Doubling-comparison between two sweep points: with twice the budget the
/// mean extinction time should not exceed the smaller-budget mean by more
/// than the combined confidence half-widths. A plausibility check on the
/// experiment harness, not a theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCheck {
    pub budget: f64,
    pub doubled_budget: f64,
    pub mean_at_budget: f64,
    pub mean_at_doubled: f64,
    pub combined_half_width: f64,
    /// Marks this as a sanity heuristic rather than a verified bound.
    pub heuristic: bool,
    pub verdict: Verdict,
}

pub struct SweepResult {
    pub studies: Vec<Study>,
    pub checks: Vec<SweepCheck>,
}

/// Repeats the experiment across budgets and applies the doubling check to
/// every (r, 2r) pair present.
pub fn run_sweep(cfg: &ExperimentConfig, budgets: &[f64]) -> Result<SweepResult, ExperimentError> {
    if budgets.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    let mut studies = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut point_cfg = cfg.clone();
        point_cfg.budget = budget;
        studies.push(run_experiment(&point_cfg)?);
    }
    let mut checks = Vec::new();
    for (i, low) in studies.iter().enumerate() {
        for high in &studies[i..] {
            if high.config.budget != 2.0 * low.config.budget {
                continue;
            }
            let (lo, hi) = (low.extinction_time, high.extinction_time);
            let combined = lo.half_width_99 + hi.half_width_99;
            let verdict = if !lo.mean.is_finite() || !hi.mean.is_finite() || !combined.is_finite()
            {
                Verdict::Inconclusive
            } else if hi.mean <= lo.mean + combined {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            checks.push(SweepCheck {
                budget: low.config.budget,
                doubled_budget: high.config.budget,
                mean_at_budget: lo.mean,
                mean_at_doubled: hi.mean,
                combined_half_width: combined,
                heuristic: true,
                verdict,
            });
        }
    }
    Ok(SweepResult { studies, checks })
}
