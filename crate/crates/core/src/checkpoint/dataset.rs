//! Evaluation dataset loading.
//!
//! Datasets are line-delimited JSON: one record per line with fields `id`,
//! `lang`, `question`, `answer` and an optional `chain` holding a worked
//! solution for few-shot prompting. Answers must be plain integers or
//! decimals (comma group separators allowed). The full mGSM benchmark ships
//! in exactly this shape once converted: 11 languages, 2,750 samples.

use std::fs;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::CheckpointError;

/// Language tags the harness understands. The first seven are the
/// high-resource group, the last four the low-resource group.
pub const SUPPORTED_LANGS: [&str; 11] = [
    "en", "de", "fr", "es", "ru", "zh", "ja", "th", "te", "bn", "sw",
];

static ANSWER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^[+-]?\d+(\.\d+)?$").expect("static regex"));

/// One benchmark sample or few-shot exemplar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub lang: String,
    pub question: String,
    /// Exact numeric answer string; kept as text so accuracy checks never
    /// go through floating point.
    pub answer: String,
    /// Worked solution; records carrying one act as few-shot exemplars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<String>,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), CheckpointError> {
        if !SUPPORTED_LANGS.contains(&self.lang.as_str()) {
            return Err(CheckpointError::Dataset(format!(
                "record {}: unknown lang tag {:?} (supported: {})",
                self.id,
                self.lang,
                SUPPORTED_LANGS.join(", ")
            )));
        }
        let stripped = self.answer.replace(',', "");
        if !ANSWER_RE.is_match(&stripped) {
            return Err(CheckpointError::Dataset(format!(
                "record {}: answer {:?} does not parse as an integer or decimal",
                self.id, self.answer
            )));
        }
        Ok(())
    }
}

/// Loads and validates a line-delimited dataset, preserving record order.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, CheckpointError> {
    let raw = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CheckpointError::MissingFile(path.display().to_string())
        } else {
            CheckpointError::Io {
                path: path.display().to_string(),
                source: e,
            }
        }
    })?;

    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(line).map_err(|e| {
            CheckpointError::Dataset(format!(
                "{}:{}: malformed record: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}
