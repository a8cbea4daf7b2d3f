//! Defect-prediction outcomes: per-module records, confusion tallies, the
//! false omission rate and the data-checkable model preconditions.
//!
//! Two input shapes are accepted. A records file is comma-separated with an
//! optional `module_id,predicted,actual` header; the `actual` column is either
//! present on every row (labeled test set) or absent on every row (new
//! project, where only the predicted-clean count is meaningful). A confusion
//! file is a single JSON object with integer fields `fn`, `tn` and optional
//! `fp`, `tp`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Clean,
    Defective,
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clean" => Ok(Label::Clean),
            "defective" => Ok(Label::Defective),
            other => Err(format!(
                "unknown label `{other}` (expected `clean` or `defective`)"
            )),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Clean => f.write_str("clean"),
            Label::Defective => f.write_str("defective"),
        }
    }
}

/// One module's prediction outcome. Ids are carried for reporting only and
/// may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub module_id: String,
    pub predicted: Label,
    pub actual: Option<Label>,
}

impl PredictionRecord {
    pub fn new(module_id: impl Into<String>, predicted: Label, actual: Option<Label>) -> Self {
        Self {
            module_id: module_id.into(),
            predicted,
            actual,
        }
    }
}

/// Confusion-matrix tallies. Only the predicted-clean cells (`fn`, `tn`)
/// enter the false omission rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionCounts {
    #[serde(rename = "fn")]
    pub fn_count: u64,
    #[serde(rename = "tn")]
    pub tn_count: u64,
    #[serde(rename = "fp", default, skip_serializing_if = "Option::is_none")]
    pub fp_count: Option<u64>,
    #[serde(rename = "tp", default, skip_serializing_if = "Option::is_none")]
    pub tp_count: Option<u64>,
}

impl ConfusionCounts {
    pub fn new(fn_count: u64, tn_count: u64) -> Self {
        Self {
            fn_count,
            tn_count,
            fp_count: None,
            tp_count: None,
        }
    }

    /// Number of predicted-clean modules, `fn + tn`.
    pub fn predicted_clean(&self) -> u64 {
        self.fn_count + self.tn_count
    }

    /// `fn / (fn + tn)`.
    pub fn false_omission_rate(&self) -> Result<f64> {
        let denom = self.predicted_clean();
        if denom == 0 {
            return Err(Error::NoPredictedClean);
        }
        Ok(self.fn_count as f64 / denom as f64)
    }

    pub fn validate(&self) -> AssumptionVerdict {
        validate_assumptions(self)
    }
}

/// Counts derived from a records file without actual labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub n_total: u64,
    pub l_clean: u64,
}

/// Model preconditions that no data can confirm; echoed with every verdict.
pub const MODEL_CAVEATS: [&str; 6] = [
    "each defective module predicted clean is counted as exactly one failure",
    "integration, system and acceptance testing are assumed not to expose defects in modules predicted clean",
    "the predictor is assumed trained on data from the same distribution as the project, so p is shared by every predicted-clean module",
    "predictions are assumed independent across modules",
    "the hazard of the remaining (non predicted-clean) part of the software is assumed Weibull",
    "the manually tested and the prediction-assisted software are assumed identical",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdict {
    pub ok: bool,
    /// The false omission rate when it is defined.
    pub p: Option<f64>,
    pub violations: Vec<String>,
    pub caveats: Vec<String>,
}

/// Parse a records file. Row numbers in errors are 1-based physical lines.
pub fn parse_records(source: &str) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source.as_bytes());

    let mut records = Vec::new();
    let mut arity: Option<usize> = None;
    let mut first = true;

    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if row
                .get(0)
                .is_some_and(|f| f.eq_ignore_ascii_case("module_id"))
            {
                continue;
            }
        }

        let width = row.len();
        if !(2..=3).contains(&width) {
            return Err(Error::Parse {
                row: line,
                message: format!("expected 2 or 3 columns, found {width}"),
            });
        }
        match arity {
            None => arity = Some(width),
            Some(w) if w != width => {
                return Err(Error::Parse {
                    row: line,
                    message: format!(
                        "found {width} columns but earlier rows have {w}; the actual column must be present on all rows or none"
                    ),
                })
            }
            Some(_) => {}
        }

        let label = |idx: usize| -> Result<Label> {
            row[idx]
                .parse()
                .map_err(|message| Error::Parse { row: line, message })
        };
        let predicted = label(1)?;
        let actual = if width == 3 { Some(label(2)?) } else { None };
        records.push(PredictionRecord::new(&row[0], predicted, actual));
    }

    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(records)
}

/// Parse a confusion file (`{"fn": 5, "tn": 45}`).
pub fn parse_confusion(source: &str) -> Result<ConfusionCounts> {
    Ok(serde_json::from_str(source)?)
}

/// Tally the confusion matrix of a labeled test set.
pub fn tally_confusion(records: &[PredictionRecord]) -> Result<ConfusionCounts> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut fn_, mut tn, mut fp, mut tp) = (0, 0, 0, 0);
    for (i, rec) in records.iter().enumerate() {
        let actual = rec.actual.ok_or_else(|| Error::MissingActual {
            row: i + 1,
            module_id: rec.module_id.clone(),
        })?;
        match (rec.predicted, actual) {
            (Label::Clean, Label::Defective) => fn_ += 1,
            (Label::Clean, Label::Clean) => tn += 1,
            (Label::Defective, Label::Clean) => fp += 1,
            (Label::Defective, Label::Defective) => tp += 1,
        }
    }
    Ok(ConfusionCounts {
        fn_count: fn_,
        tn_count: tn,
        fp_count: Some(fp),
        tp_count: Some(tp),
    })
}

pub fn false_omission_rate(counts: &ConfusionCounts) -> Result<f64> {
    counts.false_omission_rate()
}

/// Check the one precondition observable in data: at least one false
/// negative and one true negative, so that `0 < p < 1`.
pub fn validate_assumptions(counts: &ConfusionCounts) -> AssumptionVerdict {
    let mut violations = Vec::new();
    let p = counts.false_omission_rate().ok();
    match (counts.fn_count, counts.tn_count) {
        (0, 0) => violations.push("no predicted-clean modules, p undefined".to_string()),
        (0, _) => violations.push("p = 0, bounds undefined (no false negatives)".to_string()),
        (_, 0) => violations.push("p = 1, bounds undefined (no true negatives)".to_string()),
        _ => {}
    }
    AssumptionVerdict {
        ok: violations.is_empty(),
        p,
        violations,
        caveats: MODEL_CAVEATS.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn summarize_project(records: &[PredictionRecord]) -> ProjectSummary {
    ProjectSummary {
        n_total: records.len() as u64,
        l_clean: records
            .iter()
            .filter(|r| r.predicted == Label::Clean)
            .count() as u64,
    }
}
