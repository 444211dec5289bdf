//! File formats: JSONL build and work-item records in, feature CSV in and out.

use std::collections::BTreeSet;
use std::io::{BufRead, Read, Write};

use serde::de::DeserializeOwned;

use crate::commgraph::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::records::{BuildRecord, Outcome, WorkItemRecord};
use crate::stream::Instance;

const BUILD_FIELDS: &[&str] = &["build_id", "started_at", "kind", "outcome", "work_item_ids"];
const ITEM_FIELDS: &[&str] = &[
    "work_item_id",
    "creator",
    "comments",
    "subscribers",
    "committers",
    "change_set_count",
];

/// Parsed records plus human-readable warnings about ignored input.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

fn schema_at(line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        line: Some(line),
        message: message.into(),
    }
}

fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R, known: &[&str]) -> Result<Parsed<T>> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| schema_at(line_no, e.to_string()))?;
        let Some(object) = value.as_object() else {
            return Err(schema_at(line_no, "expected a JSON object"));
        };
        for key in object.keys() {
            if !known.contains(&key.as_str()) {
                let msg = format!("line {line_no}: ignoring unknown field {key:?}");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        let record = serde_json::from_value(value).map_err(|e| schema_at(line_no, e.to_string()))?;
        records.push(record);
    }
    Ok(Parsed { records, warnings })
}

/// Reads one [`BuildRecord`] per line. Timestamps are truncated to seconds.
pub fn read_builds<R: BufRead>(input: R) -> Result<Parsed<BuildRecord>> {
    let mut parsed: Parsed<BuildRecord> = read_jsonl(input, BUILD_FIELDS)?;
    let mut ids = BTreeSet::new();
    for (i, b) in parsed.records.iter_mut().enumerate() {
        if b.build_id.is_empty() {
            return Err(schema_at(i + 1, "build_id must be non-empty"));
        }
        if !ids.insert(b.build_id.clone()) {
            return Err(schema_at(i + 1, format!("duplicate build_id {:?}", b.build_id)));
        }
        b.started_at = chrono::DurationRound::duration_trunc(b.started_at, chrono::TimeDelta::seconds(1))
            .map_err(|e| schema_at(i + 1, e.to_string()))?;
    }
    Ok(parsed)
}

/// Reads one [`WorkItemRecord`] per line, validating each.
pub fn read_work_items<R: BufRead>(input: R) -> Result<Parsed<WorkItemRecord>> {
    let parsed: Parsed<WorkItemRecord> = read_jsonl(input, ITEM_FIELDS)?;
    let mut ids = BTreeSet::new();
    for (i, w) in parsed.records.iter().enumerate() {
        w.validate().map_err(|e| match e {
            Error::Schema { message, .. } => schema_at(i + 1, message),
            other => other,
        })?;
        if !ids.insert(w.work_item_id.as_str()) {
            return Err(schema_at(i + 1, format!("duplicate work_item_id {:?}", w.work_item_id)));
        }
    }
    Ok(parsed)
}

/// The 17 header columns of a feature file.
pub fn feature_header() -> Vec<&'static str> {
    let mut h = vec!["build_id", "outcome"];
    h.extend(FEATURE_NAMES);
    h
}

pub fn write_features<W: Write>(out: W, rows: &[Instance]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(feature_header())?;
    for row in rows {
        let mut fields = vec![row.id.clone(), row.label.to_string()];
        let f = &row.features;
        fields.extend(f.to_array()[..11].iter().map(f64::to_string));
        fields.extend(
            [f.vertex_count, f.edge_count, f.work_item_count, f.change_set_count]
                .iter()
                .map(u64::to_string),
        );
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature file; row order is preserved. Line numbers in errors
/// count the header as line 1.
pub fn read_features<R: Read>(input: R) -> Result<Vec<Instance>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| schema_at(1, e.to_string()))?.clone();
    let expected = feature_header();
    if header.iter().ne(expected.iter().copied()) {
        return Err(schema_at(1, format!("expected header {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| match e.is_io_error() {
            true => Error::Csv(e),
            false => schema_at(line, e.to_string()),
        })?;
        let outcome: Outcome = rec[1].parse().map_err(|_| schema_at(line, format!("bad outcome {:?}", &rec[1])))?;
        let mut values = [0.0; FEATURE_COUNT];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = &rec[k + 2];
            *v = raw
                .trim()
                .parse()
                .map_err(|_| schema_at(line, format!("{}: not a number {raw:?}", FEATURE_NAMES[k])))?;
        }
        let features = FeatureVector::from_array(values).map_err(|e| match e {
            Error::Schema { message, .. } => schema_at(line, message),
            other => other,
        })?;
        rows.push(Instance {
            id: rec[0].to_string(),
            features,
            label: outcome,
        });
    }
    Ok(rows)
}
