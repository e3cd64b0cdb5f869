//! Minimal header-addressed TSV reading on top of `csv`.

use std::collections::HashMap;
use std::io::Read;

use csv::{ReaderBuilder, StringRecord};

use crate::error::{Error, Result};

pub(crate) struct TsvReader<R: Read> {
    inner: csv::Reader<R>,
    columns: HashMap<String, usize>,
    header: Vec<String>,
}

pub(crate) struct Row {
    pub line: u64,
    record: StringRecord,
}

impl Row {
    pub fn get(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("")
    }

    pub fn opt(&self, idx: Option<usize>) -> Option<&str> {
        idx.and_then(|i| self.record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }
}

impl<R: Read> TsvReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut inner = ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .flexible(true)
            .has_headers(true)
            .from_reader(input);
        let header = inner.headers().map_err(csv_err)?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
            return Err(Error::NoHeader);
        }
        let header: Vec<String> = header
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
            .collect();
        let columns = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        Ok(TsvReader {
            inner,
            columns,
            header,
        })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn required(&self, name: &str) -> Result<usize> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                line: 1,
            })
    }

    pub fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    /// Yields data rows, skipping blank lines. Rows shorter than the header
    /// are rejected with their line number.
    pub fn rows(self) -> impl Iterator<Item = Result<Row>> {
        let width = self.header.len();
        self.inner.into_records().filter_map(move |rec| match rec {
            Err(e) => Some(Err(csv_err(e))),
            Ok(record) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                if record.len() == 1 && record[0].trim().is_empty() {
                    return None;
                }
                if record.len() < width {
                    return Some(Err(Error::parse(
                        line,
                        format!("expected {width} fields, found {}", record.len()),
                    )));
                }
                Some(Ok(Row { line, record }))
            }
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => Error::parse(line, format!("invalid UTF-8: {err}")),
        other => Error::parse(line, format!("{other:?}")),
    }
}

pub(crate) fn parse_seg_id(raw: &str, line: u64) -> Result<u64> {
    raw.trim()
        .parse::<u64>()
        .map_err(|_| Error::parse(line, format!("seg_id is not a non-negative integer: {raw:?}")))
}

pub(crate) fn parse_score(raw: &str, line: u64) -> Result<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("score is not a number: {raw:?}")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("score is not finite: {raw:?}")));
    }
    Ok(value)
}

pub(crate) fn non_empty(raw: &str, column: &str, line: u64) -> Result<String> {
    let v = raw.trim();
    if v.is_empty() {
        return Err(Error::parse(line, format!("empty {column}")));
    }
    Ok(v.to_string())
}
