use std::path::Path;

use crate::data::SeriesMatrix;
use crate::error::{Error, Result};

/// Loads a numeric CSV as a time series, one row per step, one column
/// per feature. Handles LF and CRLF. Rejects ragged rows, non-numeric
/// cells (with 1-based row/column positions) and empty inputs.
pub fn load_series_csv(path: &Path, has_header: bool) -> Result<SeriesMatrix> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::CsvFormat {
            path: display.clone(),
            row: 0,
            col: 0,
            detail: e.to_string(),
        })?;

    let header_rows = usize::from(has_header);
    let mut features = 0usize;
    let mut values = Vec::new();
    let mut t_steps = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1 + header_rows;
        let record = record.map_err(|e| Error::CsvFormat {
            path: display.clone(),
            row,
            col: 0,
            detail: e.to_string(),
        })?;
        if t_steps == 0 {
            features = record.len();
        }
        t_steps += 1;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::CsvFormat {
                path: display.clone(),
                row,
                col: c + 1,
                detail: format!("cell {:?} is not a number", field),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvFormat {
                    path: display.clone(),
                    row,
                    col: c + 1,
                    detail: format!("cell {:?} is not finite", field),
                });
            }
            values.push(v);
        }
    }

    if t_steps == 0 || features == 0 {
        return Err(Error::CsvFormat {
            path: display,
            row: header_rows,
            col: 0,
            detail: "no data rows".into(),
        });
    }
    SeriesMatrix::new(t_steps, features, values)
}
