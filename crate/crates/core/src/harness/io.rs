use crate::error::{Error, Result};
use crate::sample::Sample;
use nalgebra::DMatrix;
use std::path::Path;

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a leading header row is allowed
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Config(format!("{}: row {}: {e}", path.display(), line + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: no numeric rows", path.display())));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Config(format!("{}: ragged rows", path.display())));
    }
    Ok(rows)
}

/// A numeric matrix from CSV, one row per line; an optional header row is skipped.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_rows(path)?;
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(n, p, rows.into_iter().flatten()))
}

/// A sample from CSV, one point per row.
pub fn read_sample_csv(path: &Path) -> Result<Sample> {
    let rows = read_rows(path)?;
    let (n, d) = (rows.len(), rows[0].len());
    Ok(Sample::new(n, d, rows.into_iter().flatten().collect()))
}
