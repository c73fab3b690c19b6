//! CSV readers for loss files and datasets.
//!
//! Loss files have header `loss` or `loss,group`. Dataset files have header
//! `f1,...,fd,label` with an optional trailing `group` column.

use std::fs::File;
use std::path::Path;

use risk_core::learners::{Dataset, Row};
use risk_core::LossVector;

use crate::error::{CliError, Result};

/// Losses with optional group tags, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct LossFile {
    pub losses: LossVector,
    pub groups: Option<Vec<String>>,
}

impl LossFile {
    /// `(group, loss)` pairs; untagged files form a single group.
    pub fn tagged(&self) -> Vec<(String, f64)> {
        let xs = self.losses.as_slice();
        match &self.groups {
            Some(g) => g.iter().cloned().zip(xs.iter().copied()).collect(),
            None => xs.iter().map(|&x| (String::new(), x)).collect(),
        }
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, e.to_string())
}

fn number(path: &Path, line: u64, column: &str, field: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(x) => Err(parse_err(path, line, format!("{column}: non-finite value {x}"))),
        Err(_) => Err(parse_err(path, line, format!("{column}: cannot parse {field:?} as a number"))),
    }
}

fn headers(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|e| csv_err(path, e))?;
    Ok(h.iter().map(str::to_owned).collect())
}

pub fn read_losses(path: &Path) -> Result<LossFile> {
    let mut rdr = open(path)?;
    let header = headers(path, &mut rdr)?;
    let grouped = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["loss"] => false,
        ["loss", "group"] => true,
        _ => {
            return Err(parse_err(
                path,
                1,
                format!("expected header `loss` or `loss,group`, got `{}`", header.join(",")),
            ))
        }
    };
    let width = 1 + usize::from(grouped);
    let mut losses = Vec::new();
    let mut groups = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(parse_err(path, line, format!("expected {width} fields, got {}", rec.len())));
        }
        losses.push(number(path, line, "loss", &rec[0])?);
        if grouped {
            groups.push(rec[1].to_owned());
        }
    }
    if losses.is_empty() {
        return Err(parse_err(path, 1, "no loss records"));
    }
    let losses = LossVector::new(losses).map_err(|e| CliError::invalid(path.display().to_string(), e))?;
    Ok(LossFile { losses, groups: grouped.then_some(groups) })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut rdr = open(path)?;
    let header = headers(path, &mut rdr)?;
    let grouped = header.last().is_some_and(|h| h == "group");
    let dim = header.len().saturating_sub(1 + usize::from(grouped));
    let expected: Vec<String> = (1..=dim)
        .map(|i| format!("f{i}"))
        .chain(["label".to_owned()])
        .chain(grouped.then(|| "group".to_owned()))
        .collect();
    if dim == 0 || header != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header `f1,...,fd,label[,group]`, got `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(path, line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let features = (0..dim).map(|i| number(path, line, &header[i], &rec[i])).collect::<Result<Vec<_>>>()?;
        let label = number(path, line, "label", &rec[dim])?;
        let group = grouped.then(|| rec[dim + 1].to_owned());
        rows.push(Row { features, label, group });
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data records"));
    }
    Dataset::new(rows).map_err(|e| CliError::invalid(path.display().to_string(), e))
}
