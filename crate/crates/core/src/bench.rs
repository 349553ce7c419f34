//! Repeated holdout evaluation.
//!
//! Every repetition draws a fresh train/test split of each dataset, fits
//! every model on the training part and records the test misclassification
//! rate. All models in one repetition see the same split. Repetition `r` of
//! dataset `d` seeds its split from [`repetition_seed`]`(seed, d, r)`, so a
//! report depends only on the spec, never on scheduling.
//!
//! Spec files are JSON:
//!
//! ```json
//! {
//!   "datasets": [
//!     {"name": "basic3", "simulate": {"scenario": "basic", "k": 3, "n": 300, "seed": 1}},
//!     {"name": "wine", "csv": {"path": "wine.csv", "label_column": "class"}}
//!   ],
//!   "models": [
//!     {"variant": "original", "config": {"rule": 1}},
//!     {"name": "mod2-ns5", "variant": "mod2", "config": {"min_node_size": 5}}
//!   ],
//!   "train_fraction": 0.6666666666666666,
//!   "repetitions": 200,
//!   "seed": 1,
//!   "stratified": false
//! }
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::simulate::{simulate, SimSpec};
use crate::tree::{fit, FitConfig, Variant};

pub const DEFAULT_TRAIN_FRACTION: f64 = 2.0 / 3.0;
pub const DEFAULT_REPETITIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Simulate(SimSpec),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
}

fn default_label_column() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub variant: Variant,
    #[serde(default)]
    pub config: FitConfig,
}

impl ModelEntry {
    pub fn new(variant: Variant, config: FitConfig) -> Self {
        ModelEntry {
            name: None,
            variant,
            config,
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.variant.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub datasets: Vec<DatasetEntry>,
    pub models: Vec<ModelEntry>,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stratified: bool,
}

fn default_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie in (0, 1)"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.datasets.is_empty() || self.models.is_empty() {
            return Err(Error::invalid(
                "a benchmark needs at least one dataset and one model",
            ));
        }
        for m in &self.models {
            m.config.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bench spec: {e}")))
    }

    /// Reads a spec file; relative CSV paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut spec.datasets {
            if let DatasetSource::Csv(csv) = &mut d.source {
                if csv.path.is_relative() {
                    csv.path = base.join(&csv.path);
                }
            }
        }
        Ok(spec)
    }
}

/// Reads `x..., label` CSV. Classes are numbered in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::Csv {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    read_csv(file, label_column).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv {
            path: shown,
            message,
        },
        other => other,
    })
}

pub fn read_csv<R: std::io::Read>(input: R, label_column: &str) -> Result<Dataset> {
    let csv_err = |message: String| Error::Csv {
        path: "<input>".into(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(csv_err("empty file".into()));
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| csv_err(format!("no label column {label_column:?}")))?;
    let p = headers.len() - 1;
    if p == 0 {
        return Err(csv_err("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut labels: Vec<ClassId> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(format!("row {row}: {e}")))?;
        for (j, cell) in rec.iter().enumerate() {
            let column = &headers[j];
            if j == label_idx {
                if cell.is_empty() {
                    return Err(csv_err(format!("row {row}: missing label")));
                }
                let id = match names.iter().position(|n| n == cell) {
                    Some(k) => k,
                    None => {
                        names.push(cell.to_string());
                        names.len() - 1
                    }
                };
                labels.push(id as ClassId + 1);
            } else {
                if cell.is_empty() {
                    return Err(csv_err(format!(
                        "row {row}, column {column:?}: blank feature cell"
                    )));
                }
                let v: f64 = cell.parse().map_err(|_| {
                    csv_err(format!(
                        "row {row}, column {column:?}: non-numeric value {cell:?}"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(csv_err(format!(
                        "row {row}, column {column:?}: non-finite value"
                    )));
                }
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(csv_err("no data rows".into()));
    }
    Dataset::with_class_names(features, p, labels, names)
}

/// Train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Holdout {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn train_size(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Uniform split without replacement; `floor(n * fraction)` rows train.
/// Stratified splits apply the same rule per class, keeping at least one
/// row of every class in training.
pub fn holdout_indices(
    labels: &[ClassId],
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<Holdout> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratified {
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut by_class: Vec<Vec<usize>> = vec![vec![]; max + 1];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l as usize].push(i);
        }
        for mut idx in by_class.into_iter().filter(|v| !v.is_empty()) {
            idx.shuffle(&mut rng);
            let k = train_size(idx.len(), fraction).max(1);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.shuffle(&mut rng);
        let k = train_size(idx.len(), fraction);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid(format!(
            "a {fraction} split of {} rows leaves an empty part",
            labels.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Holdout { train, test })
}

pub fn holdout_split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let h = holdout_indices(data.labels(), fraction, seed, false)?;
    Ok((data.subset(&h.train), data.subset(&h.test)))
}

pub fn error_rate(predictions: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("no predictions"));
    }
    let wrong = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p != t)
        .count();
    Ok(wrong as f64 / truth.len() as f64)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Split seed of repetition `rep` on dataset number `dataset`:
/// `mix(mix(mix(seed) ^ dataset) ^ rep)` with the SplitMix64 finalizer.
pub fn repetition_seed(seed: u64, dataset: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ dataset as u64) ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub dataset: String,
    pub model: String,
    pub repetition: usize,
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub model: String,
    pub variant: Variant,
    /// Mean test error over successful repetitions; `None` if all failed.
    pub mean_error: Option<f64>,
    pub sd_error: Option<f64>,
    pub repetitions: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub train_fraction: f64,
    pub rows: Vec<BenchRow>,
    pub records: Vec<RepRecord>,
}

impl BenchReport {
    pub fn row(&self, dataset: &str, model: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.model == model)
    }

    /// Summary table: `dataset,model,variant,mean_error,sd_error,repetitions,failed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv {
            path: "<report>".into(),
            message: e.to_string(),
        };
        w.write_record([
            "dataset",
            "model",
            "variant",
            "mean_error",
            "sd_error",
            "repetitions",
            "failed",
        ])
        .map_err(err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.model.clone(),
                r.variant.to_string(),
                opt(r.mean_error),
                opt(r.sd_error),
                r.repetitions.to_string(),
                r.failed.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per repetition: `dataset,model,repetition,error,failure`.
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv {
            path: "<report>".into(),
            message: e.to_string(),
        };
        w.write_record(["dataset", "model", "repetition", "error", "failure"])
            .map_err(err)?;
        for r in &self.records {
            w.write_record([
                r.dataset.clone(),
                r.model.clone(),
                r.repetition.to_string(),
                r.error.map(|e| e.to_string()).unwrap_or_default(),
                r.failure.clone().unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

pub fn resolve_dataset(entry: &DatasetEntry) -> Result<Dataset> {
    match &entry.source {
        DatasetSource::Simulate(spec) => simulate(spec),
        DatasetSource::Csv(src) => load_csv(&src.path, &src.label_column),
    }
}

pub fn run_benchmark(spec: &BenchSpec, exec: Execution) -> Result<BenchReport> {
    spec.validate()?;
    let datasets = spec
        .datasets
        .iter()
        .map(|d| resolve_dataset(d).map(|data| (d.name.clone(), data)))
        .collect::<Result<Vec<_>>>()?;
    run_on(&datasets, spec, exec)
}

/// Runs the protocol on already-loaded datasets; `spec.datasets` is ignored.
pub fn run_on(
    datasets: &[(String, Dataset)],
    spec: &BenchSpec,
    exec: Execution,
) -> Result<BenchReport> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) || spec.repetitions == 0 {
        return Err(Error::invalid(
            "train_fraction must lie in (0, 1) and repetitions >= 1",
        ));
    }
    let reps = spec.repetitions;
    let tasks = datasets.len() * reps;
    let outcomes: Vec<Vec<std::result::Result<f64, String>>> = exec.map(tasks, |t| {
        let (d, r) = (t / reps, t % reps);
        let data = &datasets[d].1;
        let seed = repetition_seed(spec.seed, d, r);
        let split = match holdout_indices(data.labels(), spec.train_fraction, seed, spec.stratified)
        {
            Ok(h) => h,
            Err(e) => return vec![Err(e.to_string()); spec.models.len()],
        };
        let train = data.subset(&split.train);
        let test = data.subset(&split.test);
        spec.models
            .iter()
            .map(|m| {
                let tree = fit(&train, m.variant, &m.config).map_err(|e| e.to_string())?;
                let preds = tree.predict_dataset(&test).map_err(|e| e.to_string())?;
                error_rate(&preds, test.labels()).map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (d, (dname, _)) in datasets.iter().enumerate() {
        for (m, model) in spec.models.iter().enumerate() {
            let mname = model.label();
            let mut ok = Vec::new();
            for r in 0..reps {
                let outcome = &outcomes[d * reps + r][m];
                records.push(RepRecord {
                    dataset: dname.clone(),
                    model: mname.clone(),
                    repetition: r,
                    error: outcome.as_ref().ok().copied(),
                    failure: outcome.as_ref().err().cloned(),
                });
                if let Ok(e) = outcome {
                    ok.push(*e);
                }
            }
            let (mean, sd) = mean_sd(&ok);
            rows.push(BenchRow {
                dataset: dname.clone(),
                model: mname,
                variant: model.variant,
                mean_error: mean,
                sd_error: sd,
                repetitions: ok.len(),
                failed: reps - ok.len(),
            });
        }
    }
    Ok(BenchReport {
        seed: spec.seed,
        train_fraction: spec.train_fraction,
        rows,
        records,
    })
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(sd))
}
