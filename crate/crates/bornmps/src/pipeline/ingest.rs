//! Comma-separated event tables in and out.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::pipeline::PipelineError;

/// A parsed table: optional header plus rows of raw string values, in file
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn num_columns(&self) -> usize {
        self.header
            .as_ref()
            .map(|h| h.len())
            .or_else(|| self.rows.first().map(|r| r.len()))
            .unwrap_or(0)
    }
}

/// Reads a table from a file. When `label_column` names a header column it is
/// removed from the features and parsed as a benign/attack flag.
pub fn ingest(
    path: &Path,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<(RawTable, Option<Vec<bool>>), PipelineError> {
    let file = File::open(path)?;
    ingest_reader(file, has_header, label_column)
}

/// [`ingest`] over any reader.
pub fn ingest_reader<R: Read>(
    reader: R,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<(RawTable, Option<Vec<bool>>), PipelineError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut records: Vec<Vec<String>> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(csv_error)?;
        records.push(record.iter().map(|s| s.to_string()).collect());
    }
    let header = if has_header {
        if records.is_empty() {
            return Err(PipelineError::Parse {
                line: 1,
                message: "file is empty but a header was expected".into(),
            });
        }
        Some(records.remove(0))
    } else {
        None
    };

    let label_index = match label_column {
        None => None,
        Some(name) => {
            let header = header
                .as_ref()
                .ok_or(PipelineError::LabelWithoutHeader)?;
            Some(
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| PipelineError::MissingLabelColumn {
                        name: name.to_string(),
                    })?,
            )
        }
    };

    let (header, rows, labels) = match label_index {
        None => (header, records, None),
        Some(idx) => {
            let mut labels = Vec::with_capacity(records.len());
            let mut rows = Vec::with_capacity(records.len());
            for (r, mut record) in records.into_iter().enumerate() {
                let raw = record.remove(idx);
                let line = r + 2; // 1-based, after the header
                labels.push(parse_label(&raw).ok_or(PipelineError::BadLabel {
                    value: raw,
                    line,
                })?);
                rows.push(record);
            }
            let header = header.map(|mut h| {
                h.remove(idx);
                h
            });
            (header, rows, Some(labels))
        }
    };
    Ok((RawTable { header, rows }, labels))
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "0" | "false" | "benign" | "no" => Some(false),
        "1" | "true" | "attack" | "incident" | "yes" => Some(true),
        _ => None,
    }
}

fn csv_error(err: csv::Error) -> PipelineError {
    let line = err
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or_default();
    match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => PipelineError::Parse {
            line,
            message: format!("row has {len} fields, expected {expected_len}"),
        },
        _ => PipelineError::Parse {
            line,
            message: err.to_string(),
        },
    }
}

/// Renders a table back to CSV text. Quoting round-trips arbitrary values.
pub fn emit(table: &RawTable) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    if let Some(header) = &table.header {
        writer.write_record(header).expect("in-memory write");
    }
    for row in &table.rows {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Writes a table to disk, optionally appending a label column.
pub fn write_table(
    path: &Path,
    table: &RawTable,
    labels: Option<(&str, &[bool])>,
) -> Result<(), PipelineError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    match (&table.header, labels) {
        (Some(header), Some((label_name, _))) => {
            let mut record = header.clone();
            record.push(label_name.to_string());
            writer.write_record(&record).expect("in-memory write");
        }
        (Some(header), None) => writer.write_record(header).expect("in-memory write"),
        (None, _) => {}
    }
    for (i, row) in table.rows.iter().enumerate() {
        match labels {
            Some((_, flags)) => {
                let mut record = row.clone();
                record.push(if flags[i] { "1" } else { "0" }.to_string());
                writer.write_record(&record).expect("in-memory write");
            }
            None => writer.write_record(row).expect("in-memory write"),
        }
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    let mut file = File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ingest_plain_rows() {
        let text = "a,b\nc,d\ne,f\n";
        let (table, labels) = ingest_reader(text.as_bytes(), false, None).unwrap();
        assert!(labels.is_none());
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[1], vec!["c", "d"]);
    }

    #[test]
    fn ingest_extracts_label_column() {
        let text = "user,incident,host\nalice,0,web1\nmallory,1,web2\n";
        let (table, labels) = ingest_reader(text.as_bytes(), true, Some("incident")).unwrap();
        assert_eq!(table.header.as_deref(), Some(&["user".to_string(), "host".to_string()][..]));
        assert_eq!(table.rows[0], vec!["alice", "web1"]);
        assert_eq!(labels, Some(vec![false, true]));
    }

    #[test]
    fn ingest_reports_ragged_rows_with_line() {
        let text = "a,b\nc\n";
        match ingest_reader(text.as_bytes(), false, None) {
            Err(PipelineError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_missing_label_column() {
        let text = "a,b\n1,2\n";
        assert!(matches!(
            ingest_reader(text.as_bytes(), true, Some("nope")),
            Err(PipelineError::MissingLabelColumn { .. })
        ));
        assert!(matches!(
            ingest_reader(text.as_bytes(), false, Some("a")),
            Err(PipelineError::LabelWithoutHeader)
        ));
    }

    #[test]
    fn ingest_rejects_bad_label_value() {
        let text = "x,flag\nv,maybe\n";
        assert!(matches!(
            ingest_reader(text.as_bytes(), true, Some("flag")),
            Err(PipelineError::BadLabel { .. })
        ));
    }

    proptest! {
        #[test]
        fn emit_ingest_round_trip(
            rows in proptest::collection::vec(
                proptest::collection::vec("[a-z0-9 ,\"';:]{0,8}", 2..5),
                1..20,
            )
        ) {
            let width = rows[0].len();
            let rows: Vec<Vec<String>> = rows
                .into_iter()
                .map(|mut r| {
                    r.resize(width, String::new());
                    r
                })
                .collect();
            let table = RawTable { header: None, rows };
            let text = emit(&table);
            let (back, _) = ingest_reader(text.as_bytes(), false, None).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
