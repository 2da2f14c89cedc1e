//! Householder QR factorization and the least-squares solve built on it.

use super::{Matrix, NumericsError};

/// Column `j` counts as collinear when `|R[j][j]| <= RANK_TOLERANCE * max |R[i][i]|`.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Compact Householder factorization `X = QR` of an `n x p` matrix, `n >= p`.
///
/// `Q` is kept implicitly as the sequence of reflectors `I - tau v vᵀ`.
#[derive(Debug, Clone)]
pub struct QrFactors {
    rows: usize,
    reflectors: Vec<Vec<f64>>,
    taus: Vec<f64>,
    r: Matrix,
}

impl QrFactors {
    /// Factors `x` without judging its rank; see [`QrFactors::check_rank`].
    pub fn factor(x: &Matrix) -> Result<Self, NumericsError> {
        let (n, p) = (x.rows(), x.cols());
        if p == 0 {
            return Err(NumericsError::Dimension(
                "design matrix has no columns".into(),
            ));
        }
        if n < p {
            return Err(NumericsError::InsufficientDegreesOfFreedom { rows: n, cols: p });
        }
        let mut a = x.clone();
        let mut reflectors = Vec::with_capacity(p);
        let mut taus = Vec::with_capacity(p);

        for k in 0..p {
            let mut v: Vec<f64> = (k..n).map(|i| a[(i, k)]).collect();
            let norm = scaled_norm(&v);
            if norm == 0.0 {
                reflectors.push(v);
                taus.push(0.0);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            let tau = 2.0 / vtv;

            a[(k, k)] = alpha;
            for i in k + 1..n {
                a[(i, k)] = 0.0;
            }
            for j in k + 1..p {
                let s: f64 = (k..n).map(|i| v[i - k] * a[(i, j)]).sum();
                let f = tau * s;
                for i in k..n {
                    a[(i, j)] -= f * v[i - k];
                }
            }
            reflectors.push(v);
            taus.push(tau);
        }

        let mut r = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                r[(i, j)] = a[(i, j)];
            }
        }
        Ok(Self {
            rows: n,
            reflectors,
            taus,
            r,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.r.rows()
    }

    /// Upper-triangular `p x p` factor.
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `|R[j][j]|` for each column, the rank diagnostic.
    pub fn diagonal_magnitudes(&self) -> Vec<f64> {
        (0..self.cols()).map(|j| self.r[(j, j)].abs()).collect()
    }

    /// Fails with the first collinear column index.
    pub fn check_rank(&self) -> Result<(), NumericsError> {
        let diag = self.diagonal_magnitudes();
        let max = diag.iter().copied().fold(0.0, f64::max);
        match diag.iter().position(|&d| d <= RANK_TOLERANCE * max) {
            Some(column) => Err(NumericsError::RankDeficient { column }),
            None => Ok(()),
        }
    }

    /// Overwrites `y` with `Qᵀ y`.
    pub fn apply_qt(&self, y: &mut [f64]) -> Result<(), NumericsError> {
        self.check_len(y.len())?;
        for (k, (v, &tau)) in self.reflectors.iter().zip(&self.taus).enumerate() {
            reflect(&mut y[k..], v, tau);
        }
        Ok(())
    }

    /// Overwrites `z` with `Q z`.
    pub fn apply_q(&self, z: &mut [f64]) -> Result<(), NumericsError> {
        self.check_len(z.len())?;
        for (k, (v, &tau)) in self.reflectors.iter().zip(&self.taus).enumerate().rev() {
            reflect(&mut z[k..], v, tau);
        }
        Ok(())
    }

    /// Rebuilds `QR` as an `n x p` matrix.
    pub fn reconstruct(&self) -> Matrix {
        let (n, p) = (self.rows, self.cols());
        let mut out = Matrix::zeros(n, p);
        for j in 0..p {
            let mut col = vec![0.0; n];
            for (i, c) in col.iter_mut().enumerate().take(j + 1) {
                *c = self.r[(i, j)];
            }
            // lengths always match here
            let _ = self.apply_q(&mut col);
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Solves `R b = rhs` by back substitution.
    pub fn solve_r(&self, rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let p = self.cols();
        if rhs.len() != p {
            return Err(NumericsError::Dimension(format!(
                "right-hand side has length {}, expected {p}",
                rhs.len()
            )));
        }
        self.check_rank()?;
        let mut b = rhs.to_vec();
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| self.r[(i, j)] * b[j]).sum();
            b[i] = (b[i] - s) / self.r[(i, i)];
        }
        Ok(b)
    }

    fn check_len(&self, len: usize) -> Result<(), NumericsError> {
        if len == self.rows {
            Ok(())
        } else {
            Err(NumericsError::Dimension(format!(
                "vector has length {len}, factorization has {} rows",
                self.rows
            )))
        }
    }
}

fn reflect(y: &mut [f64], v: &[f64], tau: f64) {
    if tau == 0.0 {
        return;
    }
    let s: f64 = v.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    let f = tau * s;
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= f * vi;
    }
}

fn scaled_norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Output of [`qr_least_squares`].
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: Vec<f64>,
    pub sse: f64,
    pub qr: QrFactors,
}

/// Minimizes `‖y − Xβ‖²` through a Householder QR factorization of `X`.
pub fn qr_least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares, NumericsError> {
    if y.len() != x.rows() {
        return Err(NumericsError::Dimension(format!(
            "response has length {}, design has {} rows",
            y.len(),
            x.rows()
        )));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(NumericsError::Domain {
            function: "qr_least_squares",
            name: "y",
            value: y[i],
        });
    }
    let qr = QrFactors::factor(x)?;
    qr.check_rank()?;
    let mut qty = y.to_vec();
    qr.apply_qt(&mut qty)?;
    let beta = qr.solve_r(&qty[..x.cols()])?;
    let fitted = x.mul_vec(&beta)?;
    let sse = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(LeastSquares { beta, sse, qr })
}

/// `(XᵀX)⁻¹ = R⁻¹R⁻ᵀ`, returned exactly symmetric.
pub fn xtx_inverse(qr: &QrFactors) -> Result<Matrix, NumericsError> {
    qr.check_rank()?;
    let p = qr.cols();
    let r = qr.r();
    // upper-triangular inverse of R, column by column
    let mut rinv = Matrix::zeros(p, p);
    for j in 0..p {
        rinv[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[(i, k)] * rinv[(k, j)]).sum();
            rinv[(i, j)] = -s / r[(i, i)];
        }
    }
    let mut out = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: f64 = (j..p).map(|k| rinv[(i, k)] * rinv[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}
