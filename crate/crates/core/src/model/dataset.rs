use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("ragged row {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("non-numeric cell at ({line},{col}): {cell:?}")]
    NonNumeric { line: u64, col: usize, cell: String },
    #[error("non-finite value at ({line},{col})")]
    NonFinite { line: u64, col: usize },
}

/// Dense row-major matrix of finite feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from equal-length rows. Positions in errors are 1-based.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, DatasetError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            let line = i as u64 + 1;
            if row.len() != cols {
                return Err(DatasetError::Ragged { line, expected: cols, found: row.len() });
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { line, col: col + 1 });
            }
            values.extend_from_slice(row);
        }
        Ok(Dataset { rows: rows.len(), cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copy of the dataset with `extra` constant zero columns appended.
    pub fn with_padding_columns(&self, extra: usize) -> Dataset {
        let cols = self.cols + extra;
        let mut values = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            values.extend_from_slice(self.row(i));
            values.extend(std::iter::repeat_n(0.0, extra));
        }
        Dataset { rows: self.rows, cols, values }
    }
}

/// Parses a comma-separated numeric table. Reported line numbers count
/// physical lines, header included.
pub fn load_dataset(text: &str, has_header: bool) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut cols = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DatasetError::Ragged { line, expected, found: record.len() });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 =
                cell.parse().map_err(|_| DatasetError::NonNumeric { line, col: c + 1, cell: cell.to_string() })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { line, col: c + 1 });
            }
            values.push(v);
        }
        rows += 1;
    }
    Ok(Dataset { rows, cols: cols.unwrap_or(0), values })
}
