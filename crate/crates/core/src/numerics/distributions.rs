//! Student t and Fisher F distribution functions.

use super::special::{inc_beta_split, ln_gamma_unchecked};
use super::{check_domain, NumericsError};

fn check_df(function: &'static str, name: &'static str, df: f64) -> Result<(), NumericsError> {
    check_domain(df > 0.0 && !df.is_nan(), function, name, df)
}

/// Density of the t distribution.
pub fn t_pdf(x: f64, df: f64) -> Result<f64, NumericsError> {
    check_df("t_pdf", "df", df)?;
    check_domain(!x.is_nan(), "t_pdf", "x", x)?;
    Ok(t_pdf_unchecked(x, df))
}

fn t_pdf_unchecked(x: f64, df: f64) -> f64 {
    let ln = ln_gamma_unchecked((df + 1.0) / 2.0)
        - ln_gamma_unchecked(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - (df + 1.0) / 2.0 * (x * x / df).ln_1p();
    ln.exp()
}

/// Lower tail `P(T <= x)`.
pub fn t_cdf(x: f64, df: f64) -> Result<f64, NumericsError> {
    check_df("t_cdf", "df", df)?;
    check_domain(!x.is_nan(), "t_cdf", "x", x)?;
    let tail = t_tail(x.abs(), df)?;
    Ok(if x >= 0.0 { 1.0 - tail } else { tail })
}

/// Upper tail `P(T > x)`, accurate far into the tail.
pub fn t_sf(x: f64, df: f64) -> Result<f64, NumericsError> {
    check_df("t_sf", "df", df)?;
    check_domain(!x.is_nan(), "t_sf", "x", x)?;
    let tail = t_tail(x.abs(), df)?;
    Ok(if x >= 0.0 { tail } else { 1.0 - tail })
}

/// `P(T > t)` for `t >= 0`.
fn t_tail(t: f64, df: f64) -> Result<f64, NumericsError> {
    if t.is_infinite() {
        return Ok(0.0);
    }
    let t2 = t * t;
    let denom = df + t2;
    Ok(0.5 * inc_beta_split(df / 2.0, 0.5, df / denom, t2 / denom)?)
}

/// Inverse of [`t_cdf`]: bracket the root, then Newton steps that fall back
/// to bisection whenever they leave the bracket.
pub fn t_quantile(p: f64, df: f64) -> Result<f64, NumericsError> {
    check_df("t_quantile", "df", df)?;
    check_domain(p > 0.0 && p < 1.0, "t_quantile", "p", p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    // Solve P(T > t) = q for t > 0; 1 - p is exact for p >= 0.5.
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };

    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_tail(hi, df)? > q {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(NumericsError::NoConvergence("t_quantile bracketing"));
        }
    }

    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_tail(t, df)? - q;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if f == 0.0 {
            break;
        }
        let density = t_pdf_unchecked(t, df);
        let newton = t + f / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - t).abs();
        t = next;
        if step <= 1e-15 * t.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(sign * t)
}

/// Lower tail of the F distribution with `(df1, df2)` degrees of freedom.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<f64, NumericsError> {
    check_df("f_cdf", "df1", df1)?;
    check_df("f_cdf", "df2", df2)?;
    check_domain(x >= 0.0, "f_cdf", "x", x)?;
    if x.is_infinite() {
        return Ok(1.0);
    }
    let denom = df1 * x + df2;
    inc_beta_split(df1 / 2.0, df2 / 2.0, df1 * x / denom, df2 / denom)
}

/// Upper tail of the F distribution.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> Result<f64, NumericsError> {
    check_df("f_sf", "df1", df1)?;
    check_df("f_sf", "df2", df2)?;
    check_domain(x >= 0.0, "f_sf", "x", x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    let denom = df1 * x + df2;
    inc_beta_split(df2 / 2.0, df1 / 2.0, df2 / denom, df1 * x / denom)
}
