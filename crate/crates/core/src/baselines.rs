//! Historical size-only defect predictors, kept for comparison reports.
//!
//! The constants are used exactly as published. Their size unit (raw lines
//! versus thousands of lines) was never stated, so callers pass the unit
//! they mean and nothing here rescales it.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("lines of code must be finite and non-negative, got {0}")]
pub struct BaselineError(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineModel {
    /// `4.86 + 0.018 · LOC`
    LinearLoc,
    /// `4.2 + 0.0015 · LOC^(4/3)`
    PowerLoc,
}

impl BaselineModel {
    pub const ALL: [BaselineModel; 2] = [BaselineModel::LinearLoc, BaselineModel::PowerLoc];

    pub fn id(self) -> &'static str {
        match self {
            BaselineModel::LinearLoc => "linear_loc",
            BaselineModel::PowerLoc => "power_loc",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            BaselineModel::LinearLoc => "4.86 + 0.018 * LOC",
            BaselineModel::PowerLoc => "4.2 + 0.0015 * LOC^(4/3)",
        }
    }
}

impl fmt::Display for BaselineModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub fn baseline_predict(model: BaselineModel, loc: f64) -> Result<f64, BaselineError> {
    if !loc.is_finite() || loc < 0.0 {
        return Err(BaselineError(loc));
    }
    Ok(match model {
        BaselineModel::LinearLoc => 4.86 + 0.018 * loc,
        BaselineModel::PowerLoc => 4.2 + 0.0015 * loc.powf(4.0 / 3.0),
    })
}
