//! Conversion from the public WMT MQM export layout
//! (`system doc doc_id seg_id rater source target category severity`)
//! to the canonical `mqm.tsv` layout.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::tsv::{non_empty, parse_seg_id, TsvReader};
use crate::error::{Error, Result};

const REQUIRED: [&str; 5] = ["system", "seg_id", "rater", "category", "severity"];
const DROPPED: [&str; 4] = ["doc", "doc_id", "source", "target"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertSummary {
    pub rows: usize,
    pub systems: usize,
    pub segments: usize,
    pub no_error_rows: usize,
    pub dropped_columns: Vec<String>,
}

/// Normalizes one `(severity, category)` pair of the export.
///
/// `Non-translation!` (used as a severity in some releases) becomes a Major
/// non-translation, and zero-weight `Neutral` rows become no-error sentinels.
fn normalize(severity: &str, category: &str, line: u64) -> Result<(&'static str, String)> {
    let sev = severity.trim().to_ascii_lowercase();
    let cat = category.trim();
    let cat = if cat.eq_ignore_ascii_case("non-translation!") {
        "Non-translation"
    } else {
        cat
    };
    match sev.as_str() {
        "major" => Ok(("Major", cat.to_string())),
        "minor" => Ok(("Minor", cat.to_string())),
        "no-error" | "neutral" => Ok(("no-error", "-".to_string())),
        "non-translation!" | "non-translation" => Ok(("Major", "Non-translation".to_string())),
        _ => Err(Error::parse(line, format!("unknown severity: {severity:?}"))),
    }
}

pub fn convert_wmt<R: Read, W: Write>(
    input: R,
    mut out: W,
    lang_pair: Option<&str>,
) -> Result<ConvertSummary> {
    let reader = TsvReader::new(input)?;
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = reader.required(name).map_err(|_| {
            Error::Invalid(format!(
                "unrecognized WMT MQM layout: missing column {name:?} (header: {})",
                reader.header().join(", ")
            ))
        })?;
    }
    let [system, seg_id, rater, category, severity] = idx;
    let dropped_columns: Vec<String> = reader
        .header()
        .iter()
        .filter(|h| DROPPED.contains(&h.as_str()))
        .cloned()
        .collect();

    match lang_pair {
        Some(_) => writeln!(out, "lp\tsystem\tseg_id\trater\tseverity\tcategory")?,
        None => writeln!(out, "system\tseg_id\trater\tseverity\tcategory")?,
    }
    let mut rows = 0;
    let mut no_error_rows = 0;
    let mut systems = BTreeSet::new();
    let mut segments = BTreeSet::new();
    for row in reader.rows() {
        let row = row?;
        let line = row.line;
        let sys = non_empty(row.get(system), "system", line)?;
        let seg = parse_seg_id(row.get(seg_id), line)?;
        let who = non_empty(row.get(rater), "rater", line)?;
        let (sev, cat) = normalize(row.get(severity), row.get(category), line)?;
        if sev == "no-error" {
            no_error_rows += 1;
        } else if cat.is_empty() {
            return Err(Error::parse(line, "empty category"));
        }
        if let Some(lp) = lang_pair {
            write!(out, "{lp}\t")?;
        }
        writeln!(out, "{sys}\t{seg}\t{who}\t{sev}\t{cat}")?;
        systems.insert(sys);
        segments.insert(seg);
        rows += 1;
    }
    Ok(ConvertSummary {
        rows,
        systems: systems.len(),
        segments: segments.len(),
        no_error_rows,
        dropped_columns,
    })
}
