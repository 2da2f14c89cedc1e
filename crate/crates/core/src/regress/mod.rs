//! Ordinary least squares fitting with coefficient inference.

mod document;
mod predict;

pub use document::{load_model, serialize_model, ModelDocError, SCHEMA_VERSION};
pub use predict::{PredictError, PredictionResult, DEFAULT_LEVEL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{design_matrix, Column, Dataset, DatasetError, UnknownColumn};
use crate::numerics::{f_sf, qr_least_squares, t_sf, xtx_inverse, Matrix, NumericsError};

/// Name of the constant term in term lists and model documents.
pub const INTERCEPT: &str = "intercept";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error(transparent)]
    UnknownColumn(#[from] UnknownColumn),
    #[error("predictor \"{0}\" listed twice")]
    DuplicatePredictor(Column),
    #[error("target among predictors: \"{0}\"")]
    TargetAmongPredictors(Column),
    #[error("model has no terms: give at least one predictor or keep the intercept")]
    NoTerms,
}

/// Target column, ordered predictors and whether to fit a constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ModelSpec {
    target: Column,
    predictors: Vec<Column>,
    include_intercept: bool,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    target: Column,
    predictors: Vec<Column>,
    include_intercept: bool,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = SpecError;

    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        ModelSpec::new(raw.target, raw.predictors, raw.include_intercept)
    }
}

impl From<ModelSpec> for RawSpec {
    fn from(spec: ModelSpec) -> Self {
        RawSpec {
            target: spec.target,
            predictors: spec.predictors,
            include_intercept: spec.include_intercept,
        }
    }
}

impl ModelSpec {
    pub fn new(
        target: Column,
        predictors: Vec<Column>,
        include_intercept: bool,
    ) -> Result<Self, SpecError> {
        if predictors.is_empty() && !include_intercept {
            return Err(SpecError::NoTerms);
        }
        for (i, c) in predictors.iter().enumerate() {
            if *c == target {
                return Err(SpecError::TargetAmongPredictors(*c));
            }
            if predictors[..i].contains(c) {
                return Err(SpecError::DuplicatePredictor(*c));
            }
        }
        Ok(Self {
            target,
            predictors,
            include_intercept,
        })
    }

    /// Builds a spec from column names.
    pub fn parse<S: AsRef<str>>(
        target: &str,
        predictors: &[S],
        include_intercept: bool,
    ) -> Result<Self, SpecError> {
        let target = target.parse()?;
        let predictors = predictors
            .iter()
            .map(|p| p.as_ref().trim().parse())
            .collect::<Result<Vec<Column>, _>>()?;
        Self::new(target, predictors, include_intercept)
    }

    pub fn intercept_only(target: Column) -> Self {
        Self {
            target,
            predictors: Vec::new(),
            include_intercept: true,
        }
    }

    pub fn target(&self) -> Column {
        self.target
    }

    pub fn predictors(&self) -> &[Column] {
        &self.predictors
    }

    pub fn include_intercept(&self) -> bool {
        self.include_intercept
    }

    /// Number of fitted parameters.
    pub fn term_count(&self) -> usize {
        self.predictors.len() + usize::from(self.include_intercept)
    }

    pub fn term_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.term_count());
        if self.include_intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.predictors.iter().map(|c| c.name().to_string()));
        names
    }

    /// Index of the first predictor among the terms.
    pub(crate) fn predictor_offset(&self) -> usize {
        usize::from(self.include_intercept)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("insufficient degrees of freedom: {n} observations for {p} parameters")]
    InsufficientDegreesOfFreedom { n: usize, p: usize },
    #[error("design matrix is rank deficient: term \"{term}\" (column {column}) is collinear with earlier terms")]
    RankDeficient { column: usize, term: String },
    #[error("undefined R²: the target is constant")]
    UndefinedRSquared,
    #[error(transparent)]
    Numerics(NumericsError),
}

/// A fitted OLS model with everything needed for inference and intervals.
///
/// Per-term vectors follow [`ModelSpec::term_names`]. When the fit is exact
/// (`perfect_fit`), `sse` and `s` are reported as zero, standard errors are
/// zero, t statistics are undefined and p-values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub n: usize,
    pub p: usize,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<Option<f64>>,
    pub p_values: Vec<f64>,
    /// Residual standard error.
    pub s: f64,
    pub sse: f64,
    /// Total sum of squares, about the mean when an intercept is fitted and
    /// about zero otherwise.
    pub sst: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_stat: Option<f64>,
    pub f_p_value: Option<f64>,
    pub xtx_inv: Matrix,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub perfect_fit: bool,
}

impl FittedModel {
    pub fn df_resid(&self) -> usize {
        self.n - self.p
    }

    pub fn term_names(&self) -> Vec<String> {
        self.spec.term_names()
    }

    /// Coefficient for a named term (`"intercept"` or a column name).
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.term_names()
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    /// Evaluates the fitted equation on `d`, returning a copy whose
    /// `fitted` and `residuals` refer to those observations.
    pub fn rescored(&self, d: &Dataset) -> Result<FittedModel, FitError> {
        let (x, y) = design_matrix(d, &self.spec)?;
        let fitted = x.mul_vec(&self.coefficients).map_err(FitError::Numerics)?;
        let residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        Ok(FittedModel {
            fitted,
            residuals,
            ..self.clone()
        })
    }
}

/// Fits `spec` to the records of `d`.
pub fn fit(d: &Dataset, spec: &ModelSpec) -> Result<FittedModel, FitError> {
    let (x, y) = design_matrix(d, spec)?;
    fit_design(spec.clone(), &x, &y)
}

/// Fits a prepared design matrix; its columns must line up with `spec`'s terms.
pub fn fit_design(spec: ModelSpec, x: &Matrix, y: &[f64]) -> Result<FittedModel, FitError> {
    let n = x.rows();
    let p = x.cols();
    if p != spec.term_count() {
        return Err(FitError::Numerics(NumericsError::Dimension(format!(
            "design has {p} columns, spec has {} terms",
            spec.term_count()
        ))));
    }
    if n <= p {
        return Err(FitError::InsufficientDegreesOfFreedom { n, p });
    }
    let ls = qr_least_squares(x, y).map_err(|e| match e {
        NumericsError::RankDeficient { column } => FitError::RankDeficient {
            column,
            term: spec.term_names()[column].clone(),
        },
        NumericsError::InsufficientDegreesOfFreedom { rows, cols } => {
            FitError::InsufficientDegreesOfFreedom { n: rows, p: cols }
        }
        other => FitError::Numerics(other),
    })?;
    let xtx_inv = xtx_inverse(&ls.qr).map_err(FitError::Numerics)?;

    let fitted = x.mul_vec(&ls.beta).map_err(FitError::Numerics)?;
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    let sst = if spec.include_intercept() {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    if sst == 0.0 {
        return Err(FitError::UndefinedRSquared);
    }

    let y_norm2: f64 = y.iter().map(|v| v * v).sum();
    let perfect_fit = ls.sse <= 1e-20 * y_norm2;
    let sse = if perfect_fit { 0.0 } else { ls.sse };

    let df = (n - p) as f64;
    let s2 = sse / df;
    let s = s2.sqrt();

    let std_errors: Vec<f64> = (0..p).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect();
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for (b, se) in ls.beta.iter().zip(&std_errors) {
        if perfect_fit {
            t_stats.push(None);
            p_values.push(0.0);
        } else {
            let t = b / se;
            t_stats.push(Some(t));
            p_values.push((2.0 * t_sf(t.abs(), df).map_err(FitError::Numerics)?).min(1.0));
        }
    }

    let r_squared = 1.0 - sse / sst;
    let df_total = if spec.include_intercept() { n - 1 } else { n } as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * df_total / df;

    let df_model = p - spec.predictor_offset();
    let (f_stat, f_p_value) = if df_model == 0 {
        (None, None)
    } else if perfect_fit {
        (None, Some(0.0))
    } else {
        let f = ((sst - sse) / df_model as f64) / s2;
        let pf = f_sf(f.max(0.0), df_model as f64, df).map_err(FitError::Numerics)?;
        (Some(f), Some(pf))
    };

    Ok(FittedModel {
        spec,
        n,
        p,
        coefficients: ls.beta,
        std_errors,
        t_stats,
        p_values,
        s,
        sse,
        sst,
        r_squared,
        adj_r_squared,
        f_stat,
        f_p_value,
        xtx_inv,
        fitted,
        residuals,
        perfect_fit,
    })
}

impl From<NumericsError> for FitError {
    fn from(e: NumericsError) -> Self {
        FitError::Numerics(e)
    }
}
