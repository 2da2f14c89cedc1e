//! Project metric records, CSV ingestion and design-matrix assembly.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Matrix;
use crate::regress::ModelSpec;

/// Numeric columns of a metric table, in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    ReqError,
    DesignError,
    CodingError,
    Kloc,
    ReqPages,
    DesignPages,
    TotalTestCases,
    TestCaseError,
    TotalEffortDays,
    TestDesignEffortDays,
    FunctionalDefects,
    AllDefects,
}

impl Column {
    pub const ALL: [Column; 12] = [
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
        Column::AllDefects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::ReqError => "req_error",
            Column::DesignError => "design_error",
            Column::CodingError => "coding_error",
            Column::Kloc => "kloc",
            Column::ReqPages => "req_pages",
            Column::DesignPages => "design_pages",
            Column::TotalTestCases => "total_test_cases",
            Column::TestCaseError => "test_case_error",
            Column::TotalEffortDays => "total_effort_days",
            Column::TestDesignEffortDays => "test_design_effort_days",
            Column::FunctionalDefects => "functional_defects",
            Column::AllDefects => "all_defects",
        }
    }

    /// Heading used for this column in the original data table.
    pub fn display_name(self) -> &'static str {
        match self {
            Column::ReqError => "Req. Error",
            Column::DesignError => "Design Error",
            Column::CodingError => "Coding Error",
            Column::Kloc => "KLOC",
            Column::ReqPages => "Req. Page",
            Column::DesignPages => "Design Page",
            Column::TotalTestCases => "Total Test Cases",
            Column::TestCaseError => "Test Cases Error",
            Column::TotalEffortDays => "Total Effort",
            Column::TestDesignEffortDays => "Test Design Effort",
            Column::FunctionalDefects => "Functional Defects",
            Column::AllDefects => "All Defects",
        }
    }

    /// Whether the column holds a non-negative integer count.
    pub fn is_count(self) -> bool {
        !matches!(
            self,
            Column::Kloc | Column::TotalEffortDays | Column::TestDesignEffortDays
        )
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown column \"{0}\"")]
pub struct UnknownColumn(pub String);

impl FromStr for Column {
    type Err = UnknownColumn;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownColumn(s.to_string()))
    }
}

/// Header line of a metric CSV file.
pub const CSV_HEADER: &str = "project_id,req_error,design_error,coding_error,kloc,req_pages,design_pages,total_test_cases,test_case_error,total_effort_days,test_design_effort_days,functional_defects,all_defects";

/// One project's upstream metrics and defect counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub project_id: String,
    pub req_error: u32,
    pub design_error: u32,
    pub coding_error: u32,
    /// Thousands of lines of code.
    pub kloc: f64,
    pub req_pages: u32,
    pub design_pages: u32,
    pub total_test_cases: u32,
    pub test_case_error: u32,
    /// Person-days spent by testers in all phases before system testing.
    pub total_effort_days: f64,
    /// Person-days spent by testers on test design.
    pub test_design_effort_days: f64,
    pub functional_defects: u32,
    pub all_defects: u32,
}

impl MetricRecord {
    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::ReqError => self.req_error.into(),
            Column::DesignError => self.design_error.into(),
            Column::CodingError => self.coding_error.into(),
            Column::Kloc => self.kloc,
            Column::ReqPages => self.req_pages.into(),
            Column::DesignPages => self.design_pages.into(),
            Column::TotalTestCases => self.total_test_cases.into(),
            Column::TestCaseError => self.test_case_error.into(),
            Column::TotalEffortDays => self.total_effort_days,
            Column::TestDesignEffortDays => self.test_design_effort_days,
            Column::FunctionalDefects => self.functional_defects.into(),
            Column::AllDefects => self.all_defects.into(),
        }
    }

    /// Checks the cross-field invariants; the message names the violated rule.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("kloc", self.kloc),
            ("total_effort_days", self.total_effort_days),
            ("test_design_effort_days", self.test_design_effort_days),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.functional_defects > self.all_defects {
            return Err("functional_defects exceeds all_defects".into());
        }
        if self.test_design_effort_days > self.total_effort_days {
            return Err("test_design_effort_days exceeds total_effort_days".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("empty dataset")]
    Empty,
    #[error("missing column \"{0}\" in header")]
    MissingColumn(String),
    #[error("unexpected column \"{found}\" at header position {position}")]
    UnexpectedColumn { position: usize, found: String },
    #[error("row {row}, column {column}: \"{value}\" is not a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: {reason}")]
    InvalidValue {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("row {row}: duplicate project_id \"{id}\"")]
    DuplicateProject { row: usize, id: String },
    #[error("row {row}: {message}")]
    Invariant { row: usize, message: String },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error(transparent)]
    UnknownColumn(#[from] UnknownColumn),
}

/// Ordered collection of project records with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<MetricRecord>,
    source: String,
}

impl Dataset {
    pub fn new(
        records: Vec<MetricRecord>,
        source: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.project_id.as_str()) {
                return Err(DatasetError::DuplicateProject {
                    row: i + 1,
                    id: r.project_id.clone(),
                });
            }
            r.validate().map_err(|message| DatasetError::Invariant {
                row: i + 1,
                message,
            })?;
        }
        Ok(Self {
            records,
            source: source.into(),
        })
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.records.iter().map(|r| r.get(column)).collect()
    }

    /// Keeps the first `n` records.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            records: self.records.iter().take(n).cloned().collect(),
            source: self.source.clone(),
        }
    }

    /// Writes the dataset in the same CSV layout [`parse_csv`] reads.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, fields: Vec<String>| {
            w.write_record(&fields).expect("writing to memory");
        };
        write(&mut w, CSV_HEADER.split(',').map(str::to_string).collect());
        for r in &self.records {
            let mut fields = vec![r.project_id.clone()];
            for c in Column::ALL {
                fields.push(if c.is_count() {
                    format!("{}", r.get(c) as u64)
                } else {
                    format!("{}", r.get(c))
                });
            }
            write(&mut w, fields);
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
    }
}

/// Parses a metric table. Rows are numbered from 1 starting after the header.
pub fn parse_csv(text: &str, source: &str) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| DatasetError::Malformed {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    for (position, want) in expected.iter().enumerate() {
        match header.get(position).map(str::trim) {
            Some(found) if found == *want => {}
            Some(found) => {
                if header.iter().any(|h| h.trim() == *want) {
                    return Err(DatasetError::UnexpectedColumn {
                        position: position + 1,
                        found: found.to_string(),
                    });
                }
                return Err(DatasetError::MissingColumn(want.to_string()));
            }
            None => return Err(DatasetError::MissingColumn(want.to_string())),
        }
    }
    if let Some(extra) = header.get(expected.len()) {
        return Err(DatasetError::UnexpectedColumn {
            position: expected.len() + 1,
            found: extra.to_string(),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| DatasetError::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.len() != expected.len() {
            return Err(DatasetError::Malformed {
                row: row_no,
                message: format!("expected {} fields, found {}", expected.len(), row.len()),
            });
        }
        let project_id = row[0].trim().to_string();
        if project_id.is_empty() {
            return Err(DatasetError::InvalidValue {
                row: row_no,
                column: "project_id".into(),
                reason: "empty project_id".into(),
            });
        }
        let mut values = [0.0f64; 12];
        for (k, column) in Column::ALL.into_iter().enumerate() {
            values[k] = parse_cell(&row[k + 1], row_no, column)?;
        }
        let count = |c: Column| values[c as usize] as u32;
        let record = MetricRecord {
            project_id,
            req_error: count(Column::ReqError),
            design_error: count(Column::DesignError),
            coding_error: count(Column::CodingError),
            kloc: values[Column::Kloc as usize],
            req_pages: count(Column::ReqPages),
            design_pages: count(Column::DesignPages),
            total_test_cases: count(Column::TotalTestCases),
            test_case_error: count(Column::TestCaseError),
            total_effort_days: values[Column::TotalEffortDays as usize],
            test_design_effort_days: values[Column::TestDesignEffortDays as usize],
            functional_defects: count(Column::FunctionalDefects),
            all_defects: count(Column::AllDefects),
        };
        if !seen.insert(record.project_id.clone()) {
            return Err(DatasetError::DuplicateProject {
                row: row_no,
                id: record.project_id,
            });
        }
        record
            .validate()
            .map_err(|message| DatasetError::Invariant {
                row: row_no,
                message,
            })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(Dataset {
        records,
        source: source.to_string(),
    })
}

fn parse_cell(raw: &str, row: usize, column: Column) -> Result<f64, DatasetError> {
    let cell = raw.trim();
    let invalid = |reason: String| DatasetError::InvalidValue {
        row,
        column: column.name().into(),
        reason,
    };
    if cell.is_empty() {
        return Err(invalid("missing value".into()));
    }
    let value: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
        row,
        column: column.name().into(),
        value: cell.to_string(),
    })?;
    if !value.is_finite() {
        return Err(invalid(format!("value {cell} is not finite")));
    }
    if value < 0.0 {
        return Err(invalid(format!("value {cell} is negative")));
    }
    if column.is_count() && (value.fract() != 0.0 || value > f64::from(u32::MAX)) {
        return Err(invalid(format!("value {cell} is not a whole count")));
    }
    Ok(value)
}

/// Builds `(X, y)` for a model: optional leading ones column, then the
/// predictors in spec order.
pub fn design_matrix(d: &Dataset, spec: &ModelSpec) -> Result<(Matrix, Vec<f64>), DatasetError> {
    if d.is_empty() {
        return Err(DatasetError::Empty);
    }
    let p = spec.term_count();
    let mut data = Vec::with_capacity(d.len() * p);
    for r in d.records() {
        if spec.include_intercept() {
            data.push(1.0);
        }
        data.extend(spec.predictors().iter().map(|&c| r.get(c)));
    }
    // every value was validated as finite on ingestion
    let x = Matrix::new(d.len(), p, data).expect("finite design entries");
    Ok((x, d.column(spec.target())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub column: Column,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation; `None` for a single record.
    pub sd: Option<f64>,
}

pub fn summary_stats(d: &Dataset) -> Result<Vec<ColumnSummary>, DatasetError> {
    if d.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = d.len() as f64;
    Ok(Column::ALL
        .into_iter()
        .map(|column| {
            let values = d.column(column);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                return ColumnSummary {
                    column,
                    min,
                    max,
                    mean: min,
                    sd: (values.len() > 1).then_some(0.0),
                };
            }
            let mean = values.iter().sum::<f64>() / n;
            let sd = (values.len() > 1).then(|| {
                let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            });
            ColumnSummary {
                column,
                min,
                max,
                mean,
                sd,
            }
        })
        .collect())
}

/// Grouping of candidate defect factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorArea {
    SoftwareComplexity,
    Knowledge,
    TestProcess,
    Errors,
    Fault,
    Defect,
    TypeOfSoftware,
}

/// One candidate factor and the record columns that measure it, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub area: FactorArea,
    pub name: &'static str,
    pub columns: &'static [Column],
}

impl Factor {
    pub fn measured(&self) -> bool {
        !self.columns.is_empty()
    }
}

const fn factor(area: FactorArea, name: &'static str, columns: &'static [Column]) -> Factor {
    Factor {
        area,
        name,
        columns,
    }
}

/// Candidate factors considered for defect prediction. "Error" is a defect
/// found in the phase that introduced it; "fault" is error plus defect.
pub static FACTOR_CATALOG: &[Factor] = {
    use Column::*;
    use FactorArea::*;
    &[
        factor(
            SoftwareComplexity,
            "Number of requirement pages",
            &[ReqPages],
        ),
        factor(SoftwareComplexity, "Number of design pages", &[DesignPages]),
        factor(SoftwareComplexity, "Type of programming language", &[]),
        factor(SoftwareComplexity, "Code size", &[Kloc]),
        factor(Knowledge, "Developer knowledge", &[]),
        factor(Knowledge, "Tester knowledge", &[]),
        factor(TestProcess, "Test case coverage", &[]),
        factor(TestProcess, "Total test cases", &[TotalTestCases]),
        factor(TestProcess, "Test automation rate", &[]),
        factor(TestProcess, "Test case execution productivity", &[]),
        factor(
            TestProcess,
            "Total effort in test case design",
            &[TestDesignEffortDays],
        ),
        factor(
            TestProcess,
            "Total effort in phases prior to system testing",
            &[TotalEffortDays],
        ),
        factor(Errors, "Requirement error", &[ReqError]),
        factor(Errors, "Design error", &[DesignError]),
        factor(Errors, "Code error", &[CodingError]),
        factor(Errors, "Test plan error", &[]),
        factor(Errors, "Test cases error", &[TestCaseError]),
        factor(Fault, "Requirement fault", &[]),
        factor(Fault, "Design fault", &[]),
        factor(Fault, "Code fault", &[]),
        factor(Fault, "Integration fault", &[]),
        factor(Fault, "Test cases fault", &[]),
        factor(Defect, "Severity of defect", &[]),
        factor(Defect, "Type/category of defect", &[]),
        factor(Defect, "Validity of defect", &[]),
        factor(
            Defect,
            "Total defects logged",
            &[FunctionalDefects, AllDefects],
        ),
        factor(TypeOfSoftware, "Component-based", &[]),
        factor(TypeOfSoftware, "Web-based", &[]),
    ]
};

/// Catalog entry measured by `column`.
pub fn factor_for(column: Column) -> Option<&'static Factor> {
    FACTOR_CATALOG.iter().find(|f| f.columns.contains(&column))
}
