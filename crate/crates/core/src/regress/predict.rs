use serde::Serialize;
use thiserror::Error;

use super::FittedModel;
use crate::dataset::{Column, MetricRecord};
use crate::numerics::{t_quantile, NumericsError};

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictError {
    #[error("missing value for predictor \"{0}\"")]
    MissingPredictor(Column),
    #[error("expected {expected} predictor values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("value for predictor \"{column}\" is not finite: {value}")]
    NonFinite { column: Column, value: f64 },
    #[error("interval level must lie strictly between 0 and 1, got {0}")]
    Level(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Point prediction for one new observation with its intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionResult {
    pub point: f64,
    /// `point` rounded to the nearest whole defect, floored at zero.
    pub point_rounded: u64,
    /// Prediction interval bounds, unclamped.
    pub pi_low: f64,
    pub pi_high: f64,
    /// Confidence interval for the mean response.
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    /// `x0ᵀ (XᵀX)⁻¹ x0`.
    pub leverage: f64,
}

impl PredictionResult {
    /// Lower prediction bound as reported: defect counts cannot go below zero.
    pub fn display_pi_low(&self) -> f64 {
        self.pi_low.max(0.0)
    }

    pub fn display_ci_low(&self) -> f64 {
        self.ci_low.max(0.0)
    }

    pub fn pi_width(&self) -> f64 {
        self.pi_high - self.pi_low
    }
}

impl FittedModel {
    /// Predicts from predictor values given in spec order (no intercept entry).
    pub fn predict(&self, x0: &[f64], level: f64) -> Result<PredictionResult, PredictError> {
        let predictors = self.spec.predictors();
        if x0.len() != predictors.len() {
            return Err(PredictError::WrongLength {
                expected: predictors.len(),
                got: x0.len(),
            });
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(PredictError::Level(level));
        }
        for (&column, &value) in predictors.iter().zip(x0) {
            if !value.is_finite() {
                return Err(PredictError::NonFinite { column, value });
            }
        }

        let mut terms = Vec::with_capacity(self.p);
        if self.spec.include_intercept() {
            terms.push(1.0);
        }
        terms.extend_from_slice(x0);

        let point: f64 = terms
            .iter()
            .zip(&self.coefficients)
            .map(|(x, b)| x * b)
            .sum();
        let leverage = self.xtx_inv.quadratic_form(&terms)?.max(0.0);
        let t = t_quantile((1.0 + level) / 2.0, self.df_resid() as f64)?;
        let pi_half = t * self.s * (1.0 + leverage).sqrt();
        let ci_half = t * self.s * leverage.sqrt();

        Ok(PredictionResult {
            point,
            point_rounded: point.round().max(0.0) as u64,
            pi_low: point - pi_half,
            pi_high: point + pi_half,
            ci_low: point - ci_half,
            ci_high: point + ci_half,
            level,
            leverage,
        })
    }

    /// Predicts with predictor values looked up by column.
    pub fn predict_with<F>(&self, lookup: F, level: f64) -> Result<PredictionResult, PredictError>
    where
        F: Fn(Column) -> Option<f64>,
    {
        let x0 = self
            .spec
            .predictors()
            .iter()
            .map(|&c| lookup(c).ok_or(PredictError::MissingPredictor(c)))
            .collect::<Result<Vec<_>, _>>()?;
        self.predict(&x0, level)
    }

    pub fn predict_record(
        &self,
        record: &MetricRecord,
        level: f64,
    ) -> Result<PredictionResult, PredictError> {
        self.predict_with(|c| Some(record.get(c)), level)
    }
}
