//! Comparison of results against published reference values.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::ResultRow;

/// Multiple of the reference relative error allowed between estimate and reference.
pub const TOLERANCE_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub gamma_th: f64,
    pub estimator: String,
    pub estimate: f64,
    pub relative_error_percent: f64,
}

pub fn parse_references<R: Read>(input: R) -> Result<Vec<ReferenceRow>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<ReferenceRow>, _>>()
        .map_err(|e| HarnessError::Format(format!("reference csv: {e}")))
}

pub fn read_references(path: &Path) -> Result<Vec<ReferenceRow>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_references(file).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCheck {
    pub gamma_th: f64,
    pub estimator: String,
    pub reference: f64,
    /// `NaN` when no result row matches the reference.
    pub estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CellCheck {
    /// `|estimate - reference| / tolerance`; at most 1 for a passing cell.
    pub fn score(&self) -> f64 {
        (self.estimate - self.reference).abs() / self.tolerance
    }
}

fn same_threshold(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Passes a cell iff `|estimate - reference| <= 5 * RE_reference * reference`.
pub fn verify(rows: &[ResultRow], references: &[ReferenceRow]) -> Vec<CellCheck> {
    references
        .iter()
        .map(|r| {
            let tolerance = TOLERANCE_FACTOR * r.relative_error_percent / 100.0 * r.estimate;
            let estimate = rows
                .iter()
                .find(|row| row.estimator == r.estimator && same_threshold(row.gamma_th, r.gamma_th))
                .map_or(f64::NAN, |row| row.estimate);
            CellCheck {
                gamma_th: r.gamma_th,
                estimator: r.estimator.clone(),
                reference: r.estimate,
                estimate,
                tolerance,
                pass: (estimate - r.estimate).abs() <= tolerance,
            }
        })
        .collect()
}

/// Fails with [`HarnessError::Verification`] when any cell fails.
pub fn summarize(checks: &[CellCheck]) -> Result<()> {
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(HarnessError::Verification {
            failed,
            total: checks.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn row(g: f64, est: &str, value: f64) -> ResultRow {
        ResultRow {
            gamma_th: g,
            estimator: est.into(),
            estimate: value,
            relative_error_percent: 1.0,
            variance: 0.0,
            samples: 1,
            seed: 0,
            wall_ms: None,
            aux: BTreeMap::new(),
        }
    }

    #[test]
    fn tolerance_is_five_reference_errors() {
        let refs = parse_references(
            "gamma_th,estimator,estimate,relative_error_percent\n1.5,pareto-is,2.21e-4,0.0606\n".as_bytes(),
        )
        .unwrap();
        let tol = 5.0 * 0.000606 * 2.21e-4;
        let inside = verify(&[row(1.5, "pareto-is", 2.21e-4 + 0.99 * tol)], &refs);
        assert!(inside[0].pass);
        let outside = verify(&[row(1.5, "pareto-is", 2.21e-4 - 1.01 * tol)], &refs);
        assert!(!outside[0].pass);
        assert!(matches!(
            summarize(&outside),
            Err(HarnessError::Verification { failed: 1, total: 1 })
        ));
    }

    #[test]
    fn missing_cell_fails() {
        let refs =
            parse_references("gamma_th,estimator,estimate,relative_error_percent\n1,cmc-gg,0.0029,0.12\n".as_bytes())
                .unwrap();
        let checks = verify(&[row(1.0, "weibull-is", 0.0029)], &refs);
        assert!(!checks[0].pass);
    }

    #[test]
    fn shipped_references_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("references");
        for i in 1..=8 {
            let refs = read_references(&dir.join(format!("table{i}.csv"))).unwrap();
            assert!(refs.len() >= 6);
            assert!(refs.iter().all(|r| r.estimate > 0.0 && r.estimate < 1.0));
        }
    }
}
