//! Shared plumbing for the numeric CSV files the tools read and write.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{AppError, AppResult};

/// Numeric rows of a CSV file, with the header (if any) detected by a
/// non-numeric first row. Every row must have `width` fields when given.
pub struct NumericTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_numeric(path: &Path, width: Option<usize>) -> AppResult<NumericTable> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut header = None;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AppError::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        let row_no = rows.len() + 1;
        if let Some(w) = width {
            if record.len() != w {
                return Err(AppError::ColumnCount {
                    path: path.to_path_buf(),
                    row: row_no,
                    found: record.len(),
                    expected: w,
                });
            }
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().map_err(|_| AppError::NotNumeric {
                    path: path.to_path_buf(),
                    row: row_no,
                    col: c + 1,
                    text: f.to_owned(),
                })
            })
            .collect::<AppResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}

pub fn create(path: &Path) -> AppResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

pub fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

pub fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |e| AppError::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
