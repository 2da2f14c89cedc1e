//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 numerical or fit error,
//! 4 strict gate failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{baseline_predict, BaselineModel};
use crate::dataset::{parse_csv, Column, Dataset};
use crate::diagnostics::{compute_diagnostics, render_plots, PlotFormat};
use crate::format::{p_value, percent, sig};
use crate::gate::{
    group_by_candidate, rank_candidates, run_rounds, verify_cases, Candidate, GateCriteria,
    GateError, VerificationCase,
};
use crate::regress::{
    fit, load_model, serialize_model, FitError, FittedModel, ModelSpec, PredictError,
    PredictionResult, DEFAULT_LEVEL,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_FIT: u8 = 3;
pub const EXIT_GATE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "defect-model",
    version,
    about = "Fit, gate and apply regression models that predict system-testing defects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model and print its coefficient table
    Fit(FitArgs),
    /// Fit and gate the four standard regression rounds
    Rounds(RoundsArgs),
    /// Predict defects with prediction and confidence intervals
    Predict(PredictArgs),
    /// Check predictions against reported intervals and rank candidates
    Verify(VerifyArgs),
    /// Write residual diagnostic views for a model on a dataset
    Diagnose(DiagnoseArgs),
    /// Evaluate the size-only baseline equations
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Metric CSV file
    #[arg(long)]
    data: PathBuf,
    /// Target column
    #[arg(long)]
    target: String,
    /// Comma-separated predictor columns
    #[arg(long, value_delimiter = ',')]
    predictors: Vec<String>,
    /// Fit without a constant term
    #[arg(long)]
    no_intercept: bool,
    /// Where to write the model JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RoundsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Gate thresholds, e.g. p=0.05,r2=0.85,adj=0.85 (omitted keys keep defaults)
    #[arg(long)]
    gate: Option<String>,
    /// Also require the intercept p-value to pass
    #[arg(long)]
    gate_intercept: bool,
    /// Directory for round1.json .. round4.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 when no round passes the gate
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with a header naming every predictor column; project_id is optional
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// CSV with header label,predicted,actual,pi_low,pi_high; the label
    /// text before ':' names the candidate equation
    #[arg(long)]
    cases: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Output formats: csv, svg or both
    #[arg(long, value_delimiter = ',', default_value = "csv,svg")]
    format: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SizeUnit {
    Loc,
    Kloc,
}

#[derive(Debug, Args)]
#[command(
    after_help = "The published baseline constants do not state whether size is in raw \
lines or thousands of lines. Values are applied as raw LOC; --unit kloc multiplies the input by 1000."
)]
struct BaselineArgs {
    /// Code size
    #[arg(long, allow_negative_numbers = true)]
    loc: f64,
    #[arg(long, value_enum, default_value_t = SizeUnit::Loc)]
    unit: SizeUnit,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn fit(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FIT,
            message: message.into(),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Data(_) => CliError::input(e.to_string()),
            _ => CliError::fit(e.to_string()),
        }
    }
}

type CmdResult = Result<u8, CliError>;

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Rounds(a) => cmd_rounds(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Diagnose(a) => cmd_diagnose(&a, out),
        Command::Baseline(a) => cmd_baseline(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::input(format!("cannot create directory {}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = read_file(path)?;
    parse_csv(&text, &path.display().to_string())
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_model_file(path: &Path) -> Result<FittedModel, CliError> {
    let text = read_file(path)?;
    load_model(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::input(format!("cannot write output: {e}")))
}

/// Coefficient table in the layout of a classic regression printout.
pub fn fit_summary(m: &FittedModel) -> String {
    let mut s = String::new();
    let predictors: Vec<&str> = m.spec.predictors().iter().map(|c| c.name()).collect();
    let _ = writeln!(
        s,
        "Regression of {} on {} (n = {})",
        m.spec.target(),
        if predictors.is_empty() {
            "a constant".to_string()
        } else {
            predictors.join(", ")
        },
        m.n
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "The regression equation is");
    let mut eq = format!("{} =", m.spec.target());
    for (i, (term, &b)) in m.term_names().iter().zip(&m.coefficients).enumerate() {
        let mag = sig(b.abs(), 3);
        let sign = if b < 0.0 { "-" } else { "+" };
        let piece = if term == crate::regress::INTERCEPT {
            mag
        } else {
            format!("{mag} {term}")
        };
        if i == 0 {
            let lead = if b < 0.0 { "-" } else { "" };
            let _ = write!(eq, " {lead}{piece}");
        } else {
            let _ = write!(eq, " {sign} {piece}");
        }
    }
    let _ = writeln!(s, "{eq}");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<24} {:>12} {:>12} {:>10} {:>8}",
        "Predictor", "Coef", "SE Coef", "T", "P"
    );
    for (j, term) in m.term_names().iter().enumerate() {
        let label = if term == crate::regress::INTERCEPT {
            "Constant"
        } else {
            term.as_str()
        };
        let t = m.t_stats[j].map_or_else(|| "*".to_string(), |t| sig(t, 4));
        let _ = writeln!(
            s,
            "{:<24} {:>12} {:>12} {:>10} {:>8}",
            label,
            sig(m.coefficients[j], 6),
            sig(m.std_errors[j], 6),
            t,
            p_value(m.p_values[j])
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "S = {}   R-Sq = {}   R-Sq(adj) = {}",
        sig(m.s, 6),
        percent(m.r_squared),
        percent(m.adj_r_squared)
    );
    let _ = writeln!(
        s,
        "F = {}   P(F) = {}   DF = {}, {}",
        m.f_stat.map_or_else(|| "*".to_string(), |f| sig(f, 6)),
        m.f_p_value.map_or_else(|| "*".to_string(), p_value),
        m.p - usize::from(m.spec.include_intercept()),
        m.df_resid()
    );
    if m.perfect_fit {
        let _ = writeln!(
            s,
            "note: degenerate-perfect-fit (residuals are zero; t statistics undefined)"
        );
    }
    s
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> CmdResult {
    let d = load_dataset(&a.data)?;
    let predictors: Vec<&str> = a
        .predictors
        .iter()
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .collect();
    let spec = ModelSpec::parse(a.target.trim(), &predictors, !a.no_intercept)
        .map_err(|e| CliError::input(e.to_string()))?;
    let m = fit(&d, &spec)?;
    if let Some(path) = &a.out {
        write_file(path, &serialize_model(&m))?;
    }
    emit(out, &fit_summary(&m))?;
    Ok(EXIT_OK)
}

fn parse_gate(text: Option<&str>, gate_intercept: bool) -> Result<GateCriteria, CliError> {
    let d = GateCriteria::default();
    let (mut p, mut r2, mut adj) = (d.p_max(), d.r2_min(), d.adj_r2_min());
    if let Some(text) = text {
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                CliError::input(format!("gate setting \"{part}\" is not key=value"))
            })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("gate value \"{value}\" is not a number")))?;
            match key.trim() {
                "p" => p = value,
                "r2" => r2 = value,
                "adj" => adj = value,
                other => {
                    return Err(CliError::input(format!(
                        "unknown gate key \"{other}\" (use p, r2, adj)"
                    )))
                }
            }
        }
    }
    GateCriteria::new(p, r2, adj, gate_intercept).map_err(|e| CliError::input(e.to_string()))
}

fn cmd_rounds(a: &RoundsArgs, out: &mut dyn Write) -> CmdResult {
    let criteria = parse_gate(a.gate.as_deref(), a.gate_intercept)?;
    let d = load_dataset(&a.data)?;
    let results = run_rounds(&d, &criteria).map_err(|e| match e {
        GateError::Round {
            source: FitError::Data(_),
            ..
        } => CliError::input(e.to_string()),
        _ => CliError::fit(e.to_string()),
    })?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        for r in &results {
            write_file(
                &dir.join(format!("round{}.json", r.round.id)),
                &serialize_model(&r.model),
            )?;
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        "Gate: predictor P < {}, R-Sq > {}, R-Sq(adj) > {}{}",
        criteria.p_max(),
        percent(criteria.r2_min()),
        percent(criteria.adj_r2_min()),
        if criteria.gate_intercept() {
            ", intercept gated"
        } else {
            ""
        }
    );
    let _ = writeln!(
        s,
        "{:<6} {:<19} {:<24} {:>7} {:>10} {:>8} {:<8} Failing",
        "Round", "Target", "Effort", "R-Sq", "R-Sq(adj)", "max P", "Verdict"
    );
    for r in &results {
        let offset = usize::from(r.model.spec.include_intercept());
        let max_p = r.model.p_values[offset..]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "{:<6} {:<19} {:<24} {:>7} {:>10} {:>8} {:<8} {}",
            r.round.id,
            r.round.target.name(),
            r.round.effort.name(),
            percent(r.model.r_squared),
            percent(r.model.adj_r_squared),
            p_value(max_p),
            if r.report.pass { "PASS" } else { "FAIL" },
            r.report.failing.join(",")
        );
    }
    emit(out, &s)?;
    if a.strict && !results.iter().any(|r| r.report.pass) {
        return Ok(EXIT_GATE);
    }
    Ok(EXIT_OK)
}

struct InputRow {
    label: String,
    values: Vec<(String, f64)>,
}

fn read_predict_input(path: &Path) -> Result<Vec<InputRow>, CliError> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let id_col = header.iter().position(|h| h == "project_id");
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec =
            rec.map_err(|e| CliError::input(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        let label = id_col
            .and_then(|k| rec.get(k))
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| format!("row {}", i + 1));
        let mut values = Vec::new();
        for (k, name) in header.iter().enumerate() {
            if Some(k) == id_col || name.parse::<Column>().is_err() {
                continue;
            }
            let cell = rec.get(k).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                CliError::input(format!(
                    "{}: row {}, column {name}: \"{cell}\" is not a number",
                    path.display(),
                    i + 1
                ))
            })?;
            values.push((name.clone(), v));
        }
        rows.push(InputRow { label, values });
    }
    if rows.is_empty() {
        return Err(CliError::input(format!(
            "{}: no input rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> CmdResult {
    let m = load_model_file(&a.model)?;
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(CliError::input(format!(
            "--level must lie strictly between 0 and 1, got {}",
            a.level
        )));
    }
    let rows = read_predict_input(&a.input)?;
    let mut results: Vec<(String, PredictionResult)> = Vec::with_capacity(rows.len());
    for row in &rows {
        let r = m
            .predict_with(
                |c| {
                    row.values
                        .iter()
                        .find(|(n, _)| n == c.name())
                        .map(|(_, v)| *v)
                },
                a.level,
            )
            .map_err(|e| match e {
                PredictError::Numerics(_) => CliError::fit(format!("{}: {e}", row.label)),
                _ => CliError::input(format!("{}: {e}", row.label)),
            })?;
        results.push((row.label.clone(), r));
    }

    let mut s = String::new();
    match a.format {
        TableFormat::Csv => {
            let _ = writeln!(
                s,
                "project_id,point,point_rounded,pi_min,pi_max,ci_min,ci_max"
            );
            for (label, r) in &results {
                let _ = writeln!(
                    s,
                    "{label},{},{},{},{},{},{}",
                    r.point,
                    r.point_rounded,
                    r.display_pi_low(),
                    r.pi_high,
                    r.ci_low,
                    r.ci_high
                );
            }
        }
        TableFormat::Table => {
            let pct = format!("{}%", sig(100.0 * a.level, 4));
            let _ = writeln!(
                s,
                "{:<16} {:>10} {:>8} {:>22} {:>22}",
                "Project",
                "Predicted",
                "Rounded",
                format!("{pct} PI (min, max)"),
                format!("{pct} CI (min, max)")
            );
            for (label, r) in &results {
                let _ = writeln!(
                    s,
                    "{:<16} {:>10.2} {:>8} {:>22} {:>22}",
                    label,
                    r.point,
                    r.point_rounded,
                    format!("({:.2}, {:.2})", r.display_pi_low(), r.pi_high),
                    format!("({:.2}, {:.2})", r.display_ci_low(), r.ci_high)
                );
            }
        }
    }
    emit(out, &s)?;
    Ok(EXIT_OK)
}

fn read_cases(path: &Path) -> Result<Vec<VerificationCase>, CliError> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["label", "predicted", "actual", "pi_low", "pi_high"] {
        return Err(CliError::input(format!(
            "{}: expected header label,predicted,actual,pi_low,pi_high",
            path.display()
        )));
    }
    let mut cases = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec =
            rec.map_err(|e| CliError::input(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        let num = |k: usize| -> Result<f64, CliError> {
            let cell = rec.get(k).unwrap_or("");
            cell.parse().map_err(|_| {
                CliError::input(format!(
                    "{}: row {}, column {}: \"{cell}\" is not a number",
                    path.display(),
                    i + 1,
                    header[k]
                ))
            })
        };
        cases.push(VerificationCase {
            label: rec.get(0).unwrap_or("").to_string(),
            predicted: num(1)?,
            actual: num(2)?,
            pi_low: num(3)?,
            pi_high: num(4)?,
        });
    }
    if cases.is_empty() {
        return Err(CliError::input(format!(
            "{}: no verification cases",
            path.display()
        )));
    }
    Ok(cases)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "NO"
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let cases = read_cases(&a.cases)?;
    let overall = verify_cases(&cases).map_err(|e| CliError::input(e.to_string()))?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<40} {:>9} {:>7} {:>16} {:>9} {:>9} {:>9}",
        "Case", "Predicted", "Actual", "PI (min, max)", "Pred in", "Act in", "Rel width"
    );
    for (c, o) in cases.iter().zip(&overall.cases) {
        let _ = writeln!(
            s,
            "{:<40} {:>9} {:>7} {:>16} {:>9} {:>9} {:>9.3}",
            c.label,
            c.predicted,
            c.actual,
            format!("({}, {})", c.pi_low, c.pi_high),
            yes_no(o.predicted_in_pi),
            yes_no(o.actual_in_pi),
            o.relative_width
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "predicted in PI: {}/{}   actual in PI: {}/{}   mean relative width: {:.4}",
        overall.predicted_in_count(),
        overall.cases.len(),
        overall.actual_in_count(),
        overall.cases.len(),
        overall.mean_relative_width
    );

    let candidates = group_by_candidate(&cases)
        .into_iter()
        .map(|(name, members)| {
            verify_cases(&members)
                .map(|outcome| Candidate { name, outcome })
                .map_err(|e| CliError::input(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ranked = rank_candidates(&candidates).map_err(|e| CliError::input(e.to_string()))?;
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Ranking (all predictions inside PI first, then narrower mean relative width)"
    );
    for (i, c) in ranked.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>2}. {:<36} predicted in PI {}/{}  actual in PI {}/{}  mean relative width {:.4}",
            i + 1,
            c.name,
            c.outcome.predicted_in_count(),
            c.outcome.cases.len(),
            c.outcome.actual_in_count(),
            c.outcome.cases.len(),
            c.outcome.mean_relative_width
        );
    }
    emit(out, &s)?;
    Ok(EXIT_OK)
}

fn cmd_diagnose(a: &DiagnoseArgs, out: &mut dyn Write) -> CmdResult {
    let formats = a
        .format
        .iter()
        .map(|f| f.parse::<PlotFormat>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(e.to_string()))?;
    let m = load_model_file(&a.model)?;
    let d = load_dataset(&a.data)?;
    let scored = m.rescored(&d)?;
    let diag = compute_diagnostics(&scored).map_err(|e| CliError::input(e.to_string()))?;
    create_dir(&a.out)?;
    let mut s = String::new();
    let mut done = Vec::new();
    for f in formats {
        if done.contains(&f) {
            continue;
        }
        done.push(f);
        for file in render_plots(&diag, f) {
            let path = a.out.join(file.name);
            write_file(&path, &file.contents)?;
            let _ = writeln!(s, "wrote {}", path.display());
        }
    }
    let _ = writeln!(
        s,
        "{} residuals; histogram counts {:?}",
        diag.vs_order.len(),
        diag.histogram.counts
    );
    emit(out, &s)?;
    Ok(EXIT_OK)
}

fn cmd_baseline(a: &BaselineArgs, out: &mut dyn Write) -> CmdResult {
    if !a.loc.is_finite() || a.loc < 0.0 {
        return Err(CliError::input(format!(
            "--loc must be a non-negative number, got {}",
            a.loc
        )));
    }
    let loc = match a.unit {
        SizeUnit::Loc => a.loc,
        SizeUnit::Kloc => a.loc * 1000.0,
    };
    let mut s = String::new();
    let _ = writeln!(s, "size: {loc} LOC");
    for b in BaselineModel::ALL {
        let v = baseline_predict(b, loc).map_err(|e| CliError::input(e.to_string()))?;
        let _ = writeln!(s, "{:<11} {:<26} {}", b.id(), b.formula(), sig(v, 6));
    }
    emit(out, &s)?;
    Ok(EXIT_OK)
}
