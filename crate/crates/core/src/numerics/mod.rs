//! Dense linear algebra and special functions used by the regression code.
//!
//! Everything here works in `f64` and is free of global state.

mod distributions;
mod matrix;
mod qr;
mod special;

pub use distributions::{f_cdf, f_sf, t_cdf, t_pdf, t_quantile, t_sf};
pub use matrix::Matrix;
pub use qr::{qr_least_squares, xtx_inverse, LeastSquares, QrFactors, RANK_TOLERANCE};
pub use special::{ln_gamma, reg_inc_beta};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("{function}: argument {name} = {value} is outside the domain")]
    Domain {
        function: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("design matrix is rank deficient: column {column} is collinear with earlier columns")]
    RankDeficient { column: usize },
    #[error("insufficient degrees of freedom: {rows} observations for {cols} parameters")]
    InsufficientDegreesOfFreedom { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub(crate) fn check_domain(
    ok: bool,
    function: &'static str,
    name: &'static str,
    value: f64,
) -> Result<(), NumericsError> {
    if ok {
        Ok(())
    } else {
        Err(NumericsError::Domain {
            function,
            name,
            value,
        })
    }
}
