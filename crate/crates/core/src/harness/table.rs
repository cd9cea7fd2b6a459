use crate::error::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Version of the CSV layout written by [`ResultTable`].
pub const CSV_SCHEMA: u32 = 1;

/// One value of one metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema: u32,
    pub experiment: String,
    pub family: String,
    pub estimator: String,
    /// `θ` coordinates joined by `;`.
    pub theta: String,
    pub n: usize,
    pub reps: usize,
    pub eps: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    /// Theoretical value, when one is known.
    pub reference: Option<f64>,
    /// A published tabulated value, for rows where it differs from theory.
    pub tabulated: Option<f64>,
    /// Whether `value` disagrees with `tabulated` beyond three standard errors.
    pub discrepancy: Option<bool>,
    pub seed: u64,
}

/// Builder context shared by the rows of one experiment cell.
#[derive(Clone, Debug)]
pub struct RowContext {
    pub experiment: String,
    pub family: String,
    pub estimator: String,
    pub theta: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub eps: Option<f64>,
    pub seed: u64,
}

impl RowContext {
    pub fn row(&self, metric: &str, value: f64, stderr: Option<f64>, reference: Option<f64>) -> ResultRow {
        ResultRow {
            schema: CSV_SCHEMA,
            experiment: self.experiment.clone(),
            family: self.family.clone(),
            estimator: self.estimator.clone(),
            theta: format_theta(&self.theta),
            n: self.n,
            reps: self.reps,
            eps: self.eps,
            metric: metric.to_string(),
            value,
            stderr,
            reference,
            tabulated: None,
            discrepancy: None,
            seed: self.seed,
        }
    }
}

pub fn format_theta(theta: &[f64]) -> String {
    theta.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Rows with the given estimator, `n` and metric.
    pub fn find(&self, estimator: &str, n: usize, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.n == n && r.metric == metric)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "schema", "experiment", "family", "estimator", "theta", "n", "reps", "eps", "metric", "value", "stderr",
                "reference", "tabulated", "discrepancy", "seed",
            ])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
