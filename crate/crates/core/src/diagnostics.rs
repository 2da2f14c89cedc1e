//! Residual views: residuals against fitted values, normal probability plot,
//! histogram and residuals in observation order.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::regress::FittedModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("residual diagnostics need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("fitted values and residuals differ in length ({fitted} vs {residuals})")]
    LengthMismatch { fitted: usize, residuals: usize },
    #[error("residuals must be finite")]
    NonFinite,
    #[error("unsupported plot format \"{0}\" (expected csv or svg)")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    /// (fitted, residual) in observation order.
    pub points_vs_fitted: Vec<(f64, f64)>,
    /// (theoretical normal quantile, residual) with residuals ascending.
    pub normal_plot: Vec<(f64, f64)>,
    pub histogram: Histogram,
    /// (1-based observation index, residual).
    pub vs_order: Vec<(usize, f64)>,
}

pub fn compute_diagnostics(m: &FittedModel) -> Result<ResidualDiagnostics, DiagnosticsError> {
    diagnostics_from(&m.fitted, &m.residuals)
}

pub fn diagnostics_from(
    fitted: &[f64],
    residuals: &[f64],
) -> Result<ResidualDiagnostics, DiagnosticsError> {
    let n = residuals.len();
    if fitted.len() != n {
        return Err(DiagnosticsError::LengthMismatch {
            fitted: fitted.len(),
            residuals: n,
        });
    }
    if n < 2 {
        return Err(DiagnosticsError::TooFewObservations(n));
    }
    if residuals.iter().chain(fitted).any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }

    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal_plot = sorted
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            // reflect the lower half so the quantiles are exactly symmetric
            let rank = (i + 1).min(n - i);
            let q = normal_quantile(blom_position(rank, n));
            (if rank == i + 1 { q } else { -q }, r)
        })
        .collect();

    Ok(ResidualDiagnostics {
        points_vs_fitted: fitted
            .iter()
            .copied()
            .zip(residuals.iter().copied())
            .collect(),
        normal_plot,
        histogram: sturges_histogram(residuals),
        vs_order: residuals
            .iter()
            .enumerate()
            .map(|(i, &r)| (i + 1, r))
            .collect(),
    })
}

/// Plotting position `(i - 3/8) / (n + 1/4)` for rank `i` in `1..=n`.
pub fn blom_position(i: usize, n: usize) -> f64 {
    (i as f64 - 0.375) / (n as f64 + 0.25)
}

/// Sturges' rule: `ceil(log2 n) + 1` bins over `[min, max]`. A zero-width
/// range gets one bin.
pub fn sturges_histogram(values: &[f64]) -> Histogram {
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 {
        return Histogram {
            edges: vec![],
            counts: vec![],
        };
    }
    if min == max {
        return Histogram {
            edges: vec![min, max],
            counts: vec![n],
        };
    }
    let bins = sturges_bins(n);
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| min + k as f64 * width).collect();
    edges.push(max);
    let mut counts = vec![0; bins];
    for &v in values {
        // right-open bins, last one closed
        let k = edges[1..bins].partition_point(|&e| e <= v);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

pub fn sturges_bins(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    // ceil(log2 n) for n >= 2
    (usize::BITS - (n - 1).leading_zeros()) as usize + 1
}

/// Standard normal quantile (Acklam's rational approximation, relative
/// error below 1.2e-9), made exactly odd around 0.5.
pub fn normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -normal_quantile_lower(1.0 - p);
    }
    normal_quantile_lower(p)
}

#[allow(clippy::excessive_precision)]
fn normal_quantile_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Svg,
}

impl FromStr for PlotFormat {
    type Err = DiagnosticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(PlotFormat::Csv),
            "svg" => Ok(PlotFormat::Svg),
            _ => Err(DiagnosticsError::UnsupportedFormat(s.to_string())),
        }
    }
}

/// A rendered output file: name relative to the output directory, contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub name: &'static str,
    pub contents: String,
}

pub fn render_plots(diag: &ResidualDiagnostics, format: PlotFormat) -> Vec<RenderedFile> {
    match format {
        PlotFormat::Csv => render_csv(diag),
        PlotFormat::Svg => vec![RenderedFile {
            name: "residuals.svg",
            contents: render_svg(diag),
        }],
    }
}

fn render_csv(diag: &ResidualDiagnostics) -> Vec<RenderedFile> {
    let mut vs_fitted = String::from("fitted,residual\n");
    for (f, r) in &diag.points_vs_fitted {
        let _ = writeln!(vs_fitted, "{f},{r}");
    }
    let mut normal = String::from("theoretical_quantile,residual\n");
    for (q, r) in &diag.normal_plot {
        let _ = writeln!(normal, "{q},{r}");
    }
    let mut hist = String::from("bin_low,bin_high,count\n");
    let h = &diag.histogram;
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(hist, "{},{},{c}", h.edges[k], h.edges[k + 1]);
    }
    let mut order = String::from("observation,residual\n");
    for (i, r) in &diag.vs_order {
        let _ = writeln!(order, "{i},{r}");
    }
    vec![
        RenderedFile {
            name: "residuals_vs_fitted.csv",
            contents: vs_fitted,
        },
        RenderedFile {
            name: "normal_plot.csv",
            contents: normal,
        },
        RenderedFile {
            name: "histogram.csv",
            contents: hist,
        },
        RenderedFile {
            name: "residuals_vs_order.csv",
            contents: order,
        },
    ]
}

const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 45.0;

struct Panel {
    x0: f64,
    y0: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn new(col: usize, row: usize, xr: (f64, f64), yr: (f64, f64)) -> Self {
        Self {
            x0: col as f64 * PANEL_W,
            y0: row as f64 * PANEL_H,
            xr: pad(xr),
            yr: pad(yr),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + MARGIN + (x - self.xr.0) / (self.xr.1 - self.xr.0) * (PANEL_W - 1.5 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + PANEL_H
            - MARGIN
            - (y - self.yr.0) / (self.yr.1 - self.yr.0) * (PANEL_H - 1.8 * MARGIN)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.px(self.xr.0), self.px(self.xr.1));
        let (b, t) = (self.py(self.yr.0), self.py(self.yr.1));
        let _ = writeln!(
            out,
            r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{title}</text>"#,
            (l + r) / 2.0,
            self.y0 + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{xlabel}</text>"#,
            (l + r) / 2.0,
            b + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">{ylabel}</text>"#,
            self.x0 + 14.0,
            (t + b) / 2.0,
            self.x0 + 14.0,
            (t + b) / 2.0
        );
        for (v, anchor_x, anchor_y) in [(self.xr.0, l, b + 14.0), (self.xr.1, r, b + 14.0)] {
            let _ = writeln!(
                out,
                r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" text-anchor="middle" font-size="9">{v:.3}</text>"#
            );
        }
        for v in [self.yr.0, self.yr.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="9">{v:.3}</text>"#,
                l - 3.0,
                self.py(v) + 3.0
            );
        }
    }

    fn hline(&self, out: &mut String, y: f64) {
        if y >= self.yr.0 && y <= self.yr.1 {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                self.px(self.xr.0),
                self.py(y),
                self.px(self.xr.1),
                self.py(y)
            );
        }
    }

    fn points(&self, out: &mut String, pts: impl Iterator<Item = (f64, f64)>) {
        for (x, y) in pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn render_svg(diag: &ResidualDiagnostics) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        2.0 * PANEL_W,
        2.0 * PANEL_H,
        2.0 * PANEL_W,
        2.0 * PANEL_H
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // top-left: normal probability plot
    let p = Panel::new(
        0,
        0,
        range(diag.normal_plot.iter().map(|v| v.1)),
        range(diag.normal_plot.iter().map(|v| v.0)),
    );
    p.frame(
        &mut out,
        "Normal Probability Plot",
        "Residual",
        "Normal score",
    );
    p.points(&mut out, diag.normal_plot.iter().map(|&(q, r)| (r, q)));

    // top-right: residuals versus fitted values
    let p = Panel::new(
        1,
        0,
        range(diag.points_vs_fitted.iter().map(|v| v.0)),
        range(diag.points_vs_fitted.iter().map(|v| v.1)),
    );
    p.frame(&mut out, "Versus Fits", "Fitted value", "Residual");
    p.hline(&mut out, 0.0);
    p.points(&mut out, diag.points_vs_fitted.iter().copied());

    // bottom-left: histogram
    let h = &diag.histogram;
    let max_count = h.counts.iter().copied().max().unwrap_or(0) as f64;
    let p = Panel::new(
        0,
        1,
        (h.edges[0], h.edges[h.edges.len() - 1]),
        (0.0, max_count.max(1.0)),
    );
    p.frame(&mut out, "Histogram", "Residual", "Frequency");
    for (k, &c) in h.counts.iter().enumerate() {
        let (mut l, mut r) = (p.px(h.edges[k]), p.px(h.edges[k + 1]));
        if r - l < 4.0 {
            let mid = (l + r) / 2.0;
            l = mid - 10.0;
            r = mid + 10.0;
        }
        let (top, base) = (p.py(c as f64), p.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            r - l,
            base - top
        );
    }

    // bottom-right: residuals versus observation order
    let p = Panel::new(
        1,
        1,
        (1.0, diag.vs_order.len() as f64),
        range(diag.vs_order.iter().map(|v| v.1)),
    );
    p.frame(&mut out, "Versus Order", "Observation order", "Residual");
    p.hline(&mut out, 0.0);
    let path: Vec<String> = diag
        .vs_order
        .iter()
        .map(|&(i, r)| format!("{:.2},{:.2}", p.px(i as f64), p.py(r)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#,
        path.join(" ")
    );
    p.points(&mut out, diag.vs_order.iter().map(|&(i, r)| (i as f64, r)));

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_normal_plot() {
        let d = diagnostics_from(&[0.0, 1.0, 2.0], &[1.0, -1.0, 0.0]).unwrap();
        let (q, r): (Vec<f64>, Vec<f64>) = d.normal_plot.iter().copied().unzip();
        assert_eq!(r, vec![-1.0, 0.0, 1.0]);
        assert!(q[0] < 0.0);
        assert_eq!(q[1], 0.0);
        assert_eq!(q[2], -q[0]);
        // Blom position for i=1, n=3 is 0.625/3.25
        assert!((q[0] - normal_quantile(0.625 / 3.25)).abs() < 1e-15);
    }

    #[test]
    fn normal_quantile_reference_points() {
        // Φ⁻¹(0.975) and Φ⁻¹(0.8413447460685429) = 1
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((normal_quantile(0.841_344_746_068_542_9) - 1.0).abs() < 1e-8);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-8);
    }

    #[test]
    fn perfect_fit_single_bin() {
        let d = diagnostics_from(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert_eq!(d.histogram.counts, vec![4]);
    }

    #[test]
    fn sturges_counts() {
        assert_eq!(sturges_bins(2), 2);
        assert_eq!(sturges_bins(8), 4);
        assert_eq!(sturges_bins(9), 5);
        assert_eq!(sturges_bins(14), 5);
        assert_eq!(sturges_bins(16), 5);
        assert_eq!(sturges_bins(17), 6);
        let h = sturges_histogram(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0]);
        // 5 bins of width 2: [0,2) [2,4) [4,6) [6,8) [8,10]
        assert_eq!(h.counts, vec![2, 2, 2, 2, 2]);
        assert_eq!(h.edges, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            diagnostics_from(&[1.0], &[0.5]),
            Err(DiagnosticsError::TooFewObservations(1))
        );
        assert!(diagnostics_from(&[1.0, 2.0], &[0.5]).is_err());
        assert!("png".parse::<PlotFormat>().is_err());
        assert_eq!("SVG".parse::<PlotFormat>(), Ok(PlotFormat::Svg));
    }

    #[test]
    fn render_is_deterministic() {
        let d = diagnostics_from(&[1.0, 2.5, 3.0, 4.2], &[0.3, -0.2, 0.1, -0.2]).unwrap();
        for f in [PlotFormat::Csv, PlotFormat::Svg] {
            assert_eq!(render_plots(&d, f), render_plots(&d, f));
        }
        let csv = render_plots(&d, PlotFormat::Csv);
        let names: Vec<_> = csv.iter().map(|f| f.name).collect();
        assert_eq!(
            names,
            vec![
                "residuals_vs_fitted.csv",
                "normal_plot.csv",
                "histogram.csv",
                "residuals_vs_order.csv"
            ]
        );
        assert!(csv[0].contents.starts_with("fitted,residual\n1,0.3\n"));
        let svg = &render_plots(&d, PlotFormat::Svg)[0].contents;
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 12);
    }
}
