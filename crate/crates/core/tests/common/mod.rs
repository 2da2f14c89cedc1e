//! Independent reference implementations for integration tests: exact
//! rational normal equations and a quadrature-based Student t.
#![allow(dead_code)]

use defect_model::dataset::Column;
use defect_model::numerics::Matrix;
use defect_model::regress::ModelSpec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("representable")
}

/// Exact OLS solution of a design with dyadic entries.
pub struct ExactFit {
    pub n: usize,
    pub p: usize,
    pub beta: Vec<BigRational>,
    pub xtx_inv: Vec<Vec<BigRational>>,
    pub sse: BigRational,
    pub sst: BigRational,
}

impl ExactFit {
    pub fn solve(x: &Matrix, y: &[f64], intercept: bool) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let xr: Vec<Vec<BigRational>> = (0..n)
            .map(|i| x.row(i).iter().map(|&v| rat(v)).collect())
            .collect();
        let yr: Vec<BigRational> = y.iter().map(|&v| rat(v)).collect();

        let mut xtx = vec![vec![BigRational::zero(); p]; p];
        let mut xty = vec![BigRational::zero(); p];
        for i in 0..n {
            for a in 0..p {
                xty[a] += &xr[i][a] * &yr[i];
                for b in 0..p {
                    xtx[a][b] += &xr[i][a] * &xr[i][b];
                }
            }
        }
        let xtx_inv = invert(xtx);
        let beta: Vec<BigRational> = (0..p)
            .map(|a| (0..p).fold(BigRational::zero(), |acc, b| acc + &xtx_inv[a][b] * &xty[b]))
            .collect();

        let mut sse = BigRational::zero();
        for i in 0..n {
            let fit = (0..p).fold(BigRational::zero(), |acc, j| acc + &xr[i][j] * &beta[j]);
            let r = &yr[i] - fit;
            sse += &r * &r;
        }
        let centre = if intercept {
            yr.iter().fold(BigRational::zero(), |a, v| a + v)
                / BigRational::from_integer(BigInt::from(n))
        } else {
            BigRational::zero()
        };
        let sst = yr.iter().fold(BigRational::zero(), |a, v| {
            let d = v - &centre;
            a + &d * &d
        });
        Self {
            n,
            p,
            beta,
            xtx_inv,
            sse,
            sst,
        }
    }

    pub fn df(&self) -> usize {
        self.n - self.p
    }

    pub fn s2(&self) -> BigRational {
        &self.sse / BigRational::from_integer(BigInt::from(self.df()))
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(to_f64).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let s2 = self.s2();
        (0..self.p)
            .map(|j| to_f64(&(&s2 * &self.xtx_inv[j][j])).sqrt())
            .collect()
    }

    pub fn r_squared(&self) -> f64 {
        to_f64(&(BigRational::one() - &self.sse / &self.sst))
    }

    pub fn point(&self, x0: &[f64]) -> BigRational {
        x0.iter()
            .zip(&self.beta)
            .fold(BigRational::zero(), |a, (x, b)| a + rat(*x) * b)
    }

    pub fn leverage(&self, x0: &[f64]) -> BigRational {
        let xr: Vec<BigRational> = x0.iter().map(|&v| rat(v)).collect();
        let mut h = BigRational::zero();
        for a in 0..self.p {
            for b in 0..self.p {
                h += &xr[a] * &self.xtx_inv[a][b] * &xr[b];
            }
        }
        h
    }

    /// Prediction interval `(low, high)` at `x0` (full term vector).
    pub fn prediction_interval(&self, x0: &[f64], level: f64) -> (f64, f64) {
        let point = to_f64(&self.point(x0));
        let var = self.s2() * (BigRational::one() + self.leverage(x0));
        let half = t_quantile_quad((1.0 + level) / 2.0, self.df() as u32) * to_f64(&var).sqrt();
        (point - half, point + half)
    }
}

/// Gauss-Jordan inverse over the rationals.
pub fn invert(mut a: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let p = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .find(|&r| !a[r][col].is_zero())
            .expect("nonsingular");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col].clone();
        for j in 0..p {
            a[col][j] = &a[col][j] / &d;
            inv[col][j] = &inv[col][j] / &d;
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..p {
                    let (ac, ic) = (a[col][j].clone(), inv[col][j].clone());
                    a[r][j] -= &f * ac;
                    inv[r][j] -= &f * ic;
                }
            }
        }
    }
    inv
}

/// A value in [-lim, lim] on a 1/1024 grid, so it is exact in binary.
pub fn dyadic<R: Rng>(rng: &mut R, lim: i32) -> f64 {
    f64::from(rng.gen_range(-lim * 1024..=lim * 1024)) / 1024.0
}

/// Random well-conditioned regression problem with an intercept column.
pub struct Problem {
    pub spec: ModelSpec,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub x0: Vec<f64>,
}

/// Predictor columns used for synthetic specs; the target is `AllDefects`.
pub const SYNTH_PREDICTORS: [Column; 11] = [
    Column::ReqError,
    Column::DesignError,
    Column::CodingError,
    Column::Kloc,
    Column::ReqPages,
    Column::DesignPages,
    Column::TotalTestCases,
    Column::TestCaseError,
    Column::TotalEffortDays,
    Column::TestDesignEffortDays,
    Column::FunctionalDefects,
];

pub fn synth_spec(k: usize) -> ModelSpec {
    ModelSpec::new(Column::AllDefects, SYNTH_PREDICTORS[..k].to_vec(), true).unwrap()
}

pub fn random_problem<R: Rng>(rng: &mut R, n: usize, k: usize) -> Problem {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                std::iter::once(1.0)
                    .chain((0..k).map(|_| dyadic(rng, 4)))
                    .collect()
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        if condition_estimate(&x) > 1e4 {
            continue;
        }
        let beta: Vec<f64> = (0..=k).map(|_| dyadic(rng, 3)).collect();
        let y = rows
            .iter()
            .map(|r| {
                let mean: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
                ((mean + dyadic(rng, 2)) * 1024.0).round() / 1024.0
            })
            .collect();
        let x0 = std::iter::once(1.0)
            .chain((0..k).map(|_| dyadic(rng, 4)))
            .collect();
        return Problem {
            spec: synth_spec(k),
            x,
            y,
            x0,
        };
    }
}

/// Frobenius-norm condition estimate of `x`, via the square root of
/// cond(XᵀX).
fn condition_estimate(x: &Matrix) -> f64 {
    let p = x.cols();
    let mut g = vec![vec![BigRational::zero(); p]; p];
    for i in 0..x.rows() {
        let r = x.row(i);
        for a in 0..p {
            for b in 0..p {
                g[a][b] += rat(r[a] * r[b]);
            }
        }
    }
    let fro = |m: &Vec<Vec<BigRational>>| -> f64 {
        m.iter()
            .flatten()
            .map(|v| to_f64(v).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    // invert panics on a singular Gram matrix
    if !full_rank(&g) {
        return f64::INFINITY;
    }
    (fro(&g) * fro(&invert(g))).sqrt()
}

fn full_rank(g: &[Vec<BigRational>]) -> bool {
    let mut a = g.to_vec();
    let p = a.len();
    for col in 0..p {
        let Some(pivot) = (col..p).find(|&r| !a[r][col].is_zero()) else {
            return false;
        };
        a.swap(col, pivot);
        for r in col + 1..p {
            let f = &a[r][col] / &a[col][col];
            let pivot_row = a[col].clone();
            for (x, v) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                *x -= &f * v;
            }
        }
    }
    true
}

/// `Γ((ν+1)/2) / (Γ(ν/2) √(νπ))` for integer ν by the two-step recursion.
pub fn t_norm_const(df: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let mut ratio = if df % 2 == 1 {
        1.0 / pi.sqrt()
    } else {
        pi.sqrt() / 2.0
    };
    let mut v = if df % 2 == 1 { 1 } else { 2 };
    while v < df {
        ratio *= f64::from(v + 1) / f64::from(v);
        v += 2;
    }
    ratio / (f64::from(df) * pi).sqrt()
}

pub fn t_pdf_ref(x: f64, df: u32) -> f64 {
    let v = f64::from(df);
    t_norm_const(df) * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0)
}

/// Composite Simpson integral of the t density over `[0, x]`, plus 1/2.
pub fn t_cdf_quad(x: f64, df: u32) -> f64 {
    if x < 0.0 {
        return 1.0 - t_cdf_quad(-x, df);
    }
    let n = 4000;
    let h = x / f64::from(n);
    let mut acc = t_pdf_ref(0.0, df) + t_pdf_ref(x, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * t_pdf_ref(f64::from(i) * h, df);
    }
    0.5 + acc * h / 3.0
}

/// Bisection on [`t_cdf_quad`].
pub fn t_quantile_quad(p: f64, df: u32) -> f64 {
    assert!(p > 0.5 && p < 1.0);
    let mut hi = 1.0;
    while t_cdf_quad(hi, df) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if t_cdf_quad(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `‖a − b‖ / ‖b‖` with a floor on the denominator.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn table2() -> defect_model::dataset::Dataset {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table2.csv");
    let text = std::fs::read_to_string(path).unwrap();
    defect_model::dataset::parse_csv(&text, path).unwrap()
}

pub fn table3_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table3.csv").to_string()
}

pub fn table2_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table2.csv").to_string()
}
