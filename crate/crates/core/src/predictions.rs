//! Prediction files.
//!
//! Joint predictions: `instance_id<TAB>intent<TAB>space-joined-tags`.
//! Dialect predictions: `instance_id<TAB>dialect`.

use std::collections::HashSet;
use std::fmt::Write;

use thiserror::Error;

use crate::corpus::{DialectLabel, SlotTag};

#[derive(Debug, Error, PartialEq)]
pub enum PredictionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("instance id {0:?} appears more than once")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPredictionRow {
    pub instance_id: String,
    pub intent: String,
    pub slots: Vec<SlotTag>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialectPredictionRow {
    pub instance_id: String,
    pub dialect: DialectLabel,
}

pub fn write_joint_predictions(rows: &[JointPredictionRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let tags: Vec<String> = r.slots.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}\t{}\t{}", r.instance_id, r.intent, tags.join(" "));
    }
    out
}

pub fn write_dialect_predictions(rows: &[DialectPredictionRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{}\t{}", r.instance_id, r.dialect);
    }
    out
}

fn rows<'a>(source: &'a str, columns: usize) -> impl Iterator<Item = Result<(usize, Vec<&'a str>), PredictionError>> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(move |(i, l)| {
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != columns {
                return Err(PredictionError::Parse {
                    line: i + 1,
                    message: format!("expected {columns} columns, got {}", cols.len()),
                });
            }
            Ok((i + 1, cols))
        })
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), PredictionError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(PredictionError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

pub fn parse_joint_predictions(source: &str) -> Result<Vec<JointPredictionRow>, PredictionError> {
    let out = rows(source, 3)
        .map(|r| {
            let (line, cols) = r?;
            let slots = cols[2]
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<SlotTag>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| PredictionError::Parse { line, message: e.to_string() })?;
            Ok(JointPredictionRow {
                instance_id: cols[0].to_string(),
                intent: cols[1].to_string(),
                slots,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(out.iter().map(|r| r.instance_id.as_str()))?;
    Ok(out)
}

pub fn parse_dialect_predictions(source: &str) -> Result<Vec<DialectPredictionRow>, PredictionError> {
    let out = rows(source, 2)
        .map(|r| {
            let (line, cols) = r?;
            Ok(DialectPredictionRow {
                instance_id: cols[0].to_string(),
                dialect: cols[1]
                    .parse()
                    .map_err(|e: crate::corpus::CorpusError| PredictionError::Parse { line, message: e.to_string() })?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(out.iter().map(|r| r.instance_id.as_str()))?;
    Ok(out)
}
