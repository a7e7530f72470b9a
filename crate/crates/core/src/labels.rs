//! JSON-lines label files: one `{"id": ..., "label": [...]}` record per line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SoftLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub label: SoftLabel,
}

/// Parses every nonblank line. Labels are validated as they are read.
pub fn parse_label_lines(text: &str) -> Result<Vec<LabelRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            serde_json::from_str(line).map_err(|e| Error::InvalidConfig {
                key: format!("labels line {}", n + 1),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn to_label_line(record: &LabelRecord) -> String {
    let mut s = serde_json::to_string(record).expect("label records always serialize");
    s.push('\n');
    s
}

pub fn find_label<'a>(records: &'a [LabelRecord], id: &str) -> Option<&'a LabelRecord> {
    records.iter().find(|r| r.id == id)
}
