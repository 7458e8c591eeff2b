//! CSV feature files: header `id,f0,f1,...,f{d-1}[,label]`, one sample per line.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{DomainTag, FeatureMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CsvData {
    pub features: FeatureMatrix,
    pub labels: Option<Array1<f64>>,
    /// Rows dropped for unparsable or non-finite values.
    pub rejected: Vec<RejectedRow>,
}

pub fn load_csv(path: &Path, domain: DomainTag) -> Result<CsvData> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(0, format!("{other:?}")),
        })?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "empty file: missing header".into())),
    };
    if header.get(0).map(str::trim) != Some("id") {
        return Err(parse_err(1, "header must start with `id`".into()));
    }
    let has_label = header.iter().last().map(str::trim) == Some("label");
    let width = header.len();
    let dim = width - 1 - usize::from(has_label);
    if dim == 0 {
        return Err(parse_err(1, "header declares no feature columns".into()));
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rejected = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("ragged row: {} fields, header has {width}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(dim + 1);
        let mut reason = None;
        for (k, cell) in record.iter().enumerate().skip(1) {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => {
                    reason = Some(format!("non-finite value in column {k}"));
                    break;
                }
                Err(_) => {
                    reason = Some(format!("non-numeric value `{cell}` in column {k}"));
                    break;
                }
            }
        }
        if reason.is_none() && has_label && !(-3.0..=3.0).contains(&row[dim]) {
            reason = Some(format!("label {} outside [-3, 3]", row[dim]));
        }
        if let Some(reason) = reason {
            rejected.push(RejectedRow { line, reason });
            continue;
        }
        if has_label {
            labels.push(row[dim]);
        }
        values.extend_from_slice(&row[..dim]);
        ids.push(record[0].trim().to_string());
    }
    let n = ids.len();
    let values = Array2::from_shape_vec((n, dim), values).expect("row widths checked");
    Ok(CsvData {
        features: FeatureMatrix::new(ids, values, domain)?,
        labels: has_label.then(|| Array1::from(labels)),
        rejected,
    })
}

pub fn write_csv(path: &Path, features: &FeatureMatrix, labels: Option<&Array1<f64>>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != features.len() {
            return Err(Error::InvalidShape("labels do not match feature rows".into()));
        }
    }
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidInput(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..features.dim()).map(|j| format!("f{j}")));
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(io)?;
    for (i, row) in features.values.rows().into_iter().enumerate() {
        let mut rec = vec![features.ids[i].clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
