//! Result rows and their CSV / JSON-lines encodings.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ordsum::estimators::{relative_error, EstimatorKind};
use ordsum::EstimationResult;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 9] = [
    "gamma_th",
    "estimator",
    "estimate",
    "relative_error_percent",
    "variance",
    "samples",
    "seed",
    "wall_ms",
    "aux",
];

/// One `(threshold, estimator)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub gamma_th: f64,
    pub estimator: String,
    #[serde(with = "nan_as_null")]
    pub estimate: f64,
    /// `100 * sqrt(variance / samples) / estimate`.
    #[serde(with = "nan_as_null")]
    pub relative_error_percent: f64,
    #[serde(with = "nan_as_null")]
    pub variance: f64,
    pub samples: u64,
    pub seed: u64,
    pub wall_ms: Option<f64>,
    pub aux: BTreeMap<String, f64>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl ResultRow {
    pub fn new(gamma_th: f64, kind: EstimatorKind, result: &EstimationResult, timing: bool) -> Self {
        Self {
            gamma_th,
            estimator: kind.name().to_string(),
            estimate: result.estimate,
            relative_error_percent: 100.0 * result.relative_error,
            variance: result.variance,
            samples: result.samples,
            seed: result.seed,
            wall_ms: timing.then_some(result.wall_ms),
            aux: result.aux.clone(),
        }
    }

    /// Relative error (as a fraction) recomputed from `estimate`, `variance` and `samples`.
    pub fn recomputed_relative_error(&self) -> f64 {
        relative_error(self.estimate, self.variance, self.samples)
    }

    /// Checks that the stored relative error matches the other fields.
    pub fn check_consistency(&self) -> Result<()> {
        let expected = 100.0 * self.recomputed_relative_error();
        let stored = self.relative_error_percent;
        let ok = (expected.is_nan() && stored.is_nan()) || (expected - stored).abs() <= 1e-12 * expected.abs();
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Format(format!(
                "row ({}, {}): relative_error_percent {stored} disagrees with {expected} from estimate/variance/samples",
                self.gamma_th, self.estimator
            )))
        }
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn encode_aux(aux: &BTreeMap<String, f64>) -> String {
    aux.iter()
        .map(|(k, v)| format!("{k}={}", float(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_aux(text: &str) -> Result<BTreeMap<String, f64>> {
    if text.is_empty() {
        return Ok(BTreeMap::new());
    }
    text.split(';')
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| HarnessError::Format(format!("bad aux entry `{pair}`")))?;
            Ok((k.to_string(), parse_float(v)?))
        })
        .collect()
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| HarnessError::Format(format!("not a number: `{s}`")))
}

fn parse_int(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| HarnessError::Format(format!("not an integer: `{s}`")))
}

fn csv_error(e: csv::Error) -> HarnessError {
    HarnessError::Format(format!("csv: {e}"))
}

/// Serializes `rows`; byte-stable for fixed input.
pub fn emit_results<W: Write>(rows: &[ResultRow], format: Format, out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::Format("no rows to emit".into()));
    }
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_error)?;
            for r in rows {
                w.write_record([
                    float(r.gamma_th),
                    r.estimator.clone(),
                    float(r.estimate),
                    float(r.relative_error_percent),
                    float(r.variance),
                    r.samples.to_string(),
                    r.seed.to_string(),
                    r.wall_ms.map(float).unwrap_or_default(),
                    encode_aux(&r.aux),
                ])
                .map_err(csv_error)?;
            }
            w.flush().map_err(|e| HarnessError::Format(format!("write: {e}")))?;
        }
        Format::Jsonl => {
            let mut out = out;
            for r in rows {
                let line = serde_json::to_string(r).map_err(|e| HarnessError::Format(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| HarnessError::Format(format!("write: {e}")))?;
            }
        }
    }
    Ok(())
}

/// Inverse of [`emit_results`]. Every row is checked with [`ResultRow::check_consistency`].
pub fn parse_results<R: BufRead>(input: R, format: Format) -> Result<Vec<ResultRow>> {
    let rows = match format {
        Format::Csv => {
            let mut rdr = csv::Reader::from_reader(input);
            let header = rdr.headers().map_err(csv_error)?.clone();
            if header.iter().ne(CSV_HEADER) {
                return Err(HarnessError::Format(format!("unexpected CSV header {header:?}")));
            }
            rdr.records()
                .map(|rec| {
                    let rec = rec.map_err(csv_error)?;
                    Ok(ResultRow {
                        gamma_th: parse_float(&rec[0])?,
                        estimator: rec[1].to_string(),
                        estimate: parse_float(&rec[2])?,
                        relative_error_percent: parse_float(&rec[3])?,
                        variance: parse_float(&rec[4])?,
                        samples: parse_int(&rec[5])?,
                        seed: parse_int(&rec[6])?,
                        wall_ms: if rec[7].is_empty() {
                            None
                        } else {
                            Some(parse_float(&rec[7])?)
                        },
                        aux: decode_aux(&rec[8])?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Format::Jsonl => input
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|line| {
                let line = line.map_err(|e| HarnessError::Format(format!("read: {e}")))?;
                serde_json::from_str(&line).map_err(|e| HarnessError::Format(format!("jsonl: {e}")))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    for r in &rows {
        r.check_consistency()?;
    }
    Ok(rows)
}
