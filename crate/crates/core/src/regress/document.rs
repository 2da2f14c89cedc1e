//! JSON model documents.
//!
//! Numbers are written with 17 significant digits so a loaded model
//! reproduces the original bit for bit. Undefined statistics are `null`.

use std::collections::HashMap;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;
use thiserror::Error;

use super::{FittedModel, ModelSpec};
use crate::numerics::Matrix;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelDocError {
    #[error("model document is not valid JSON: {0}")]
    Syntax(String),
    #[error("unsupported schema_version {found:?}, expected {SCHEMA_VERSION}")]
    SchemaVersion { found: Option<i64> },
    #[error("model cannot produce intervals: xtx_inv is missing")]
    MissingIntervals,
    #[error("corrupted model document: {0}")]
    Corrupted(String),
    #[error("inconsistent model document: {0}")]
    Inconsistent(String),
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

struct Nums<'a>(&'a [f64]);

impl Serialize for Nums<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for &v in self.0 {
            seq.serialize_element(&Num(v))?;
        }
        seq.end()
    }
}

struct OptNums<'a>(&'a [Option<f64>]);

impl Serialize for OptNums<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for v in self.0 {
            seq.serialize_element(&v.map(Num))?;
        }
        seq.end()
    }
}

struct Coefficients<'a>(&'a [String], &'a [f64]);

impl Serialize for Coefficients<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, &v) in self.0.iter().zip(self.1) {
            map.serialize_entry(name, &Num(v))?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    schema_version: u32,
    spec: &'a ModelSpec,
    n: usize,
    p: usize,
    term_order: &'a [String],
    coefficients: Coefficients<'a>,
    s: Num,
    sse: Num,
    sst: Num,
    r_squared: Num,
    adj_r_squared: Num,
    f_stat: Option<Num>,
    f_p_value: Option<Num>,
    std_errors: Nums<'a>,
    t_stats: OptNums<'a>,
    p_values: Nums<'a>,
    xtx_inv: Nums<'a>,
    perfect_fit: bool,
    fitted: Nums<'a>,
    residuals: Nums<'a>,
}

#[derive(Deserialize)]
struct DocumentIn {
    spec: ModelSpec,
    n: usize,
    p: usize,
    term_order: Vec<String>,
    coefficients: HashMap<String, f64>,
    s: f64,
    sse: f64,
    sst: f64,
    r_squared: f64,
    adj_r_squared: f64,
    f_stat: Option<f64>,
    f_p_value: Option<f64>,
    std_errors: Vec<f64>,
    t_stats: Vec<Option<f64>>,
    p_values: Vec<f64>,
    xtx_inv: Vec<f64>,
    #[serde(default)]
    perfect_fit: bool,
    #[serde(default)]
    fitted: Vec<f64>,
    #[serde(default)]
    residuals: Vec<f64>,
}

/// Renders `m` as a pretty-printed JSON model document.
pub fn serialize_model(m: &FittedModel) -> String {
    let terms = m.term_names();
    let doc = DocumentOut {
        schema_version: SCHEMA_VERSION,
        spec: &m.spec,
        n: m.n,
        p: m.p,
        term_order: &terms,
        coefficients: Coefficients(&terms, &m.coefficients),
        s: Num(m.s),
        sse: Num(m.sse),
        sst: Num(m.sst),
        r_squared: Num(m.r_squared),
        adj_r_squared: Num(m.adj_r_squared),
        f_stat: m.f_stat.map(Num),
        f_p_value: m.f_p_value.map(Num),
        std_errors: Nums(&m.std_errors),
        t_stats: OptNums(&m.t_stats),
        p_values: Nums(&m.p_values),
        xtx_inv: Nums(m.xtx_inv.as_slice()),
        perfect_fit: m.perfect_fit,
        fitted: Nums(&m.fitted),
        residuals: Nums(&m.residuals),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("model document serializes");
    out.push('\n');
    out
}

/// Parses and cross-checks a model document.
pub fn load_model(text: &str) -> Result<FittedModel, ModelDocError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ModelDocError::Syntax(e.to_string()))?;
    let version = value.get("schema_version").and_then(Value::as_i64);
    if version != Some(i64::from(SCHEMA_VERSION)) {
        return Err(ModelDocError::SchemaVersion { found: version });
    }
    match value.get("xtx_inv") {
        None | Some(Value::Null) => return Err(ModelDocError::MissingIntervals),
        Some(_) => {}
    }
    let doc: DocumentIn =
        serde_json::from_value(value).map_err(|e| ModelDocError::Corrupted(e.to_string()))?;

    let inconsistent = |msg: String| Err(ModelDocError::Inconsistent(msg));
    let p = doc.p;
    if doc.spec.term_count() != p {
        return inconsistent(format!(
            "p = {p} but the spec has {} terms",
            doc.spec.term_count()
        ));
    }
    if doc.n <= p {
        return inconsistent(format!("n = {} must exceed p = {p}", doc.n));
    }
    if doc.coefficients.len() != p {
        return inconsistent(format!(
            "p = {p} but {} coefficients",
            doc.coefficients.len()
        ));
    }
    let terms = doc.spec.term_names();
    if doc.term_order != terms {
        return inconsistent(format!(
            "term_order {:?} does not match the spec terms {:?}",
            doc.term_order, terms
        ));
    }
    let coefficients = terms
        .iter()
        .map(|t| {
            doc.coefficients.get(t).copied().ok_or_else(|| {
                ModelDocError::Inconsistent(format!("no coefficient for term \"{t}\""))
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    for (name, len) in [
        ("std_errors", doc.std_errors.len()),
        ("t_stats", doc.t_stats.len()),
        ("p_values", doc.p_values.len()),
    ] {
        if len != p {
            return inconsistent(format!("{name} has {len} entries, expected {p}"));
        }
    }
    if doc.xtx_inv.len() != p * p {
        return inconsistent(format!(
            "xtx_inv has {} entries, expected {}",
            doc.xtx_inv.len(),
            p * p
        ));
    }
    for (name, v) in [("fitted", &doc.fitted), ("residuals", &doc.residuals)] {
        if !v.is_empty() && v.len() != doc.n {
            return inconsistent(format!(
                "{name} has {} entries, expected n = {}",
                v.len(),
                doc.n
            ));
        }
    }
    let finite = coefficients
        .iter()
        .chain(&doc.std_errors)
        .chain(&doc.p_values)
        .chain(&[doc.s, doc.sse, doc.sst, doc.r_squared, doc.adj_r_squared])
        .all(|v| v.is_finite());
    if !finite || doc.s < 0.0 || doc.p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(ModelDocError::Corrupted(
            "numeric field out of range".into(),
        ));
    }
    let xtx_inv =
        Matrix::new(p, p, doc.xtx_inv).map_err(|e| ModelDocError::Corrupted(e.to_string()))?;

    Ok(FittedModel {
        spec: doc.spec,
        n: doc.n,
        p,
        coefficients,
        std_errors: doc.std_errors,
        t_stats: doc.t_stats,
        p_values: doc.p_values,
        s: doc.s,
        sse: doc.sse,
        sst: doc.sst,
        r_squared: doc.r_squared,
        adj_r_squared: doc.adj_r_squared,
        f_stat: doc.f_stat,
        f_p_value: doc.f_p_value,
        xtx_inv,
        fitted: doc.fitted,
        residuals: doc.residuals,
        perfect_fit: doc.perfect_fit,
    })
}
