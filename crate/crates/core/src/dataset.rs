//! Row-major feature matrix with integer class labels.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Class identifier. Classes are numbered `1..=G`.
pub type ClassId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<ClassId>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset whose class names are the decimal ids `1..=G`, with
    /// `G` the largest label.
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<ClassId>) -> Result<Self> {
        let g = labels.iter().copied().max().unwrap_or(0);
        let names = (1..=g).map(|c| c.to_string()).collect();
        Self::with_class_names(features, n_features, labels, names)
    }

    pub fn with_class_names(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<ClassId>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::invalid(format!(
                "{} feature values do not form {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features + 1,
                pos % n_features + 1
            )));
        }
        let g = class_names.len() as ClassId;
        if let Some(bad) = labels.iter().find(|&&l| l == 0 || l > g) {
            return Err(Error::invalid(format!("label {bad} outside 1..={g}")));
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            class_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    /// Names indexed by `class id - 1`.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Number of declared classes (`G`), present or not.
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Sorted ids of the classes that actually occur.
    pub fn present_classes(&self) -> Vec<ClassId> {
        let mut seen = vec![false; self.class_names.len() + 1];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..seen.len() as ClassId)
            .filter(|&c| seen[c as usize])
            .collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels,
            class_names: self.class_names.clone(),
        }
    }

    /// Per-feature `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.n_features];
        for row in self.rows() {
            for (j, &v) in row.iter().enumerate() {
                b[j].0 = b[j].0.min(v);
                b[j].1 = b[j].1.max(v);
            }
        }
        b
    }

    /// Writes `x1,...,xp,label` CSV using the class names as labels.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.n_features).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, &label) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.class_names[label as usize - 1].clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    }
}
