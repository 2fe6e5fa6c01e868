//! JSON and CSV renderings of a [`QberReport`].

use kkkp_core::analysis::QberReport;
use serde::Serialize;

pub const CSV_COLUMNS: [&str; 8] = [
    "variant",
    "strategy",
    "rounds",
    "errors",
    "qber",
    "exact_qber",
    "eve_key_accuracy",
    "detected",
];

/// Flat row shared by both formats. `exact_qber` is a reduced fraction such
/// as `1/4`; `eve_key_accuracy` is empty/null when there is no eavesdropper.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub variant: String,
    pub strategy: String,
    pub rounds: u64,
    pub errors: u64,
    pub qber: f64,
    pub exact_qber: Option<String>,
    pub eve_key_accuracy: Option<f64>,
    pub detected: bool,
}

impl From<&QberReport> for ReportRow {
    fn from(r: &QberReport) -> Self {
        Self {
            variant: r.variant.as_str().to_owned(),
            strategy: r.attack.map_or_else(|| "unknown".to_owned(), |a| a.to_string()),
            rounds: r.rounds,
            errors: r.errors,
            qber: r.qber,
            exact_qber: r.exact_qber.map(|q| q.to_string()),
            eve_key_accuracy: r.eve_key_accuracy,
            detected: r.detected,
        }
    }
}

pub fn to_json(row: &ReportRow) -> String {
    serde_json::to_string(row).expect("report rows always serialize")
}

/// Header plus one line per row.
pub fn to_csv(rows: &[ReportRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
