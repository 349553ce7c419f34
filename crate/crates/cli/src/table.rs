//! Feature tables read for prediction, where the label column is optional.

use std::path::Path;

use anyhow::{bail, Context, Result};
use pptree::Dataset;

pub struct FeatureTable {
    pub headers: csv::StringRecord,
    pub records: Vec<csv::StringRecord>,
    /// Row-major feature values, label column excluded.
    pub features: Vec<f64>,
    pub n_features: usize,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.records.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// The features with a placeholder label, for range computations.
    pub fn unlabeled(&self) -> Result<Dataset> {
        Ok(Dataset::new(
            self.features.clone(),
            self.n_features,
            vec![1; self.n_rows()],
        )?)
    }
}

/// Reads every column except `label_column` (when present) as a feature.
pub fn read_features(path: &Path, label_column: &str) -> Result<FeatureTable> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let columns: Vec<usize> = (0..headers.len())
        .filter(|&j| &headers[j] != label_column)
        .collect();
    if columns.is_empty() {
        bail!("{}: no feature columns", path.display());
    }
    let mut records = vec![];
    let mut features = vec![];
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        for &j in &columns {
            let cell = record.get(j).unwrap_or("").trim();
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .with_context(|| {
                    format!(
                        "{}: row {}, column {:?}: not a number: {cell:?}",
                        path.display(),
                        i + 1,
                        &headers[j]
                    )
                })?;
            features.push(value);
        }
        records.push(record);
    }
    if records.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(FeatureTable {
        headers,
        records,
        features,
        n_features: columns.len(),
    })
}
