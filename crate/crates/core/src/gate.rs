//! Model acceptance thresholds, the four published regression rounds, and
//! prediction-interval verification of candidate equations.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Column, Dataset};
use crate::regress::{fit, FitError, FittedModel, ModelSpec, INTERCEPT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("invalid gate criteria: {0}")]
    Criteria(String),
    #[error("model has no predictor terms to gate")]
    NoPredictors,
    #[error("round {round}: {source}")]
    Round { round: u8, source: FitError },
    #[error("no verification cases")]
    NoCases,
    #[error("case \"{label}\": {reason}")]
    MalformedCase { label: String, reason: String },
    #[error("no candidates to rank")]
    NoCandidates,
}

/// Acceptance thresholds: every predictor p-value below `p_max`, and R² and
/// adjusted R² strictly above their minimums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateCriteria {
    p_max: f64,
    r2_min: f64,
    adj_r2_min: f64,
    gate_intercept: bool,
}

impl Default for GateCriteria {
    fn default() -> Self {
        Self {
            p_max: 0.05,
            r2_min: 0.85,
            adj_r2_min: 0.85,
            gate_intercept: false,
        }
    }
}

impl GateCriteria {
    pub fn new(
        p_max: f64,
        r2_min: f64,
        adj_r2_min: f64,
        gate_intercept: bool,
    ) -> Result<Self, GateError> {
        if !(p_max > 0.0 && p_max < 1.0) {
            return Err(GateError::Criteria(format!(
                "p_max must lie in (0, 1), got {p_max}"
            )));
        }
        for (name, v) in [("r2_min", r2_min), ("adj_r2_min", adj_r2_min)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(GateError::Criteria(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(Self {
            p_max,
            r2_min,
            adj_r2_min,
            gate_intercept,
        })
    }

    /// Thresholds without range validation, for exploratory reports (for
    /// example an `r2_min` of zero). Values must still be finite.
    pub fn relaxed(p_max: f64, r2_min: f64, adj_r2_min: f64) -> Result<Self, GateError> {
        if ![p_max, r2_min, adj_r2_min].iter().all(|v| v.is_finite()) {
            return Err(GateError::Criteria("thresholds must be finite".into()));
        }
        Ok(Self {
            p_max,
            r2_min,
            adj_r2_min,
            gate_intercept: false,
        })
    }

    pub fn with_intercept_gate(mut self, on: bool) -> Self {
        self.gate_intercept = on;
        self
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn r2_min(&self) -> f64 {
        self.r2_min
    }

    pub fn adj_r2_min(&self) -> f64 {
        self.adj_r2_min
    }

    pub fn gate_intercept(&self) -> bool {
        self.gate_intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    PValue,
    RSquared,
    AdjRSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub kind: CriterionKind,
    /// Term name for p-value checks, `r_squared` / `adj_r_squared` otherwise.
    pub item: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    /// False for the intercept p-value unless intercept gating is on.
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub verdicts: Vec<CriterionVerdict>,
    pub pass: bool,
    pub failing: Vec<String>,
    /// The model fit its data exactly; p-values passed by convention.
    pub degenerate_perfect_fit: bool,
}

pub fn evaluate_gate(m: &FittedModel, c: &GateCriteria) -> Result<GateReport, GateError> {
    if m.spec.predictors().is_empty() {
        return Err(GateError::NoPredictors);
    }
    let mut verdicts = Vec::with_capacity(m.p + 2);
    for (term, &p) in m.term_names().into_iter().zip(&m.p_values) {
        let gated = term != INTERCEPT || c.gate_intercept;
        verdicts.push(CriterionVerdict {
            kind: CriterionKind::PValue,
            item: term,
            value: p,
            threshold: c.p_max,
            passed: p < c.p_max,
            gated,
        });
    }
    verdicts.push(CriterionVerdict {
        kind: CriterionKind::RSquared,
        item: "r_squared".into(),
        value: m.r_squared,
        threshold: c.r2_min,
        passed: m.r_squared > c.r2_min,
        gated: true,
    });
    verdicts.push(CriterionVerdict {
        kind: CriterionKind::AdjRSquared,
        item: "adj_r_squared".into(),
        value: m.adj_r_squared,
        threshold: c.adj_r2_min,
        passed: m.adj_r_squared > c.adj_r2_min,
        gated: true,
    });
    let failing: Vec<String> = verdicts
        .iter()
        .filter(|v| v.gated && !v.passed)
        .map(|v| v.item.clone())
        .collect();
    Ok(GateReport {
        pass: failing.is_empty(),
        verdicts,
        failing,
        degenerate_perfect_fit: m.perfect_fit,
    })
}

/// Predictors present in every round; only the effort measure varies.
pub const FIXED_PREDICTORS: [Column; 6] = [
    Column::ReqError,
    Column::CodingError,
    Column::Kloc,
    Column::ReqPages,
    Column::DesignPages,
    Column::TotalTestCases,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundConfig {
    pub id: u8,
    pub target: Column,
    pub effort: Column,
}

impl RoundConfig {
    pub fn spec(&self) -> ModelSpec {
        let mut predictors = FIXED_PREDICTORS.to_vec();
        predictors.push(self.effort);
        ModelSpec::new(self.target, predictors, true).expect("round predictors are distinct")
    }
}

impl fmt::Display for RoundConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round {} ({} ~ ... + {})",
            self.id, self.target, self.effort
        )
    }
}

pub const ROUNDS: [RoundConfig; 4] = [
    RoundConfig {
        id: 1,
        target: Column::FunctionalDefects,
        effort: Column::TotalEffortDays,
    },
    RoundConfig {
        id: 2,
        target: Column::AllDefects,
        effort: Column::TotalEffortDays,
    },
    RoundConfig {
        id: 3,
        target: Column::FunctionalDefects,
        effort: Column::TestDesignEffortDays,
    },
    RoundConfig {
        id: 4,
        target: Column::AllDefects,
        effort: Column::TestDesignEffortDays,
    },
];

pub fn enumerate_rounds() -> Vec<ModelSpec> {
    ROUNDS.iter().map(RoundConfig::spec).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub round: RoundConfig,
    pub model: FittedModel,
    pub report: GateReport,
}

/// Fits and gates rounds 1 through 4 in order on the same data.
pub fn run_rounds(d: &Dataset, c: &GateCriteria) -> Result<Vec<RoundResult>, GateError> {
    ROUNDS
        .iter()
        .map(|round| {
            let model = fit(d, &round.spec()).map_err(|source| GateError::Round {
                round: round.id,
                source,
            })?;
            let report = evaluate_gate(&model, c)?;
            Ok(RoundResult {
                round: *round,
                model,
                report,
            })
        })
        .collect()
}

/// A prediction checked against its reported interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationCase {
    pub label: String,
    pub predicted: f64,
    pub actual: f64,
    pub pi_low: f64,
    pub pi_high: f64,
}

impl VerificationCase {
    pub fn validate(&self) -> Result<(), GateError> {
        let bad = |reason: &str| {
            Err(GateError::MalformedCase {
                label: self.label.clone(),
                reason: reason.into(),
            })
        };
        let values = [self.predicted, self.actual, self.pi_low, self.pi_high];
        if values.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        if values.iter().any(|&v| v < 0.0) {
            return bad("values must be non-negative");
        }
        if self.pi_low > self.pi_high {
            return bad("pi_low exceeds pi_high");
        }
        Ok(())
    }

    /// Candidate group: the label text before the first `:`.
    pub fn candidate(&self) -> &str {
        self.label
            .split_once(':')
            .map_or(self.label.as_str(), |(c, _)| c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub label: String,
    pub predicted_in_pi: bool,
    pub actual_in_pi: bool,
    /// `(pi_high - pi_low) / max(1, predicted)`.
    pub relative_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationOutcome {
    pub cases: Vec<CaseOutcome>,
    pub all_predicted_in_pi: bool,
    pub all_actual_in_pi: bool,
    pub mean_relative_width: f64,
}

impl VerificationOutcome {
    pub fn predicted_in_count(&self) -> usize {
        self.cases.iter().filter(|c| c.predicted_in_pi).count()
    }

    pub fn actual_in_count(&self) -> usize {
        self.cases.iter().filter(|c| c.actual_in_pi).count()
    }
}

pub fn verify_cases(cases: &[VerificationCase]) -> Result<VerificationOutcome, GateError> {
    if cases.is_empty() {
        return Err(GateError::NoCases);
    }
    let mut outcomes = Vec::with_capacity(cases.len());
    for c in cases {
        c.validate()?;
        let inside = |v: f64| c.pi_low <= v && v <= c.pi_high;
        outcomes.push(CaseOutcome {
            label: c.label.clone(),
            predicted_in_pi: inside(c.predicted),
            actual_in_pi: inside(c.actual),
            relative_width: (c.pi_high - c.pi_low) / c.predicted.max(1.0),
        });
    }
    let mean_relative_width =
        outcomes.iter().map(|o| o.relative_width).sum::<f64>() / outcomes.len() as f64;
    Ok(VerificationOutcome {
        all_predicted_in_pi: outcomes.iter().all(|o| o.predicted_in_pi),
        all_actual_in_pi: outcomes.iter().all(|o| o.actual_in_pi),
        mean_relative_width,
        cases: outcomes,
    })
}

/// Splits cases into candidates by [`VerificationCase::candidate`], keeping
/// first-appearance order.
pub fn group_by_candidate(cases: &[VerificationCase]) -> Vec<(String, Vec<VerificationCase>)> {
    let mut groups: Vec<(String, Vec<VerificationCase>)> = Vec::new();
    for c in cases {
        match groups.iter_mut().find(|(name, _)| name == c.candidate()) {
            Some((_, members)) => members.push(c.clone()),
            None => groups.push((c.candidate().to_string(), vec![c.clone()])),
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub name: String,
    pub outcome: VerificationOutcome,
}

/// Orders candidates: those whose every prediction lies inside its interval
/// first, then by ascending mean relative width, then declaration order.
pub fn rank_candidates(candidates: &[Candidate]) -> Result<Vec<&Candidate>, GateError> {
    if candidates.is_empty() {
        return Err(GateError::NoCandidates);
    }
    let mut ranked: Vec<&Candidate> = candidates.iter().collect();
    // stable sort keeps declaration order on ties
    ranked.sort_by(|a, b| {
        b.outcome
            .all_predicted_in_pi
            .cmp(&a.outcome.all_predicted_in_pi)
            .then(
                a.outcome
                    .mean_relative_width
                    .total_cmp(&b.outcome.mean_relative_width),
            )
    });
    Ok(ranked)
}
