//! Decision-boundary diagnostics.
//!
//! In two dimensions a fitted tree is evaluated on a regular lattice over the
//! data domain; lattice cells whose 4-neighbourhood contains another label
//! form the border. In more dimensions a lattice is unaffordable, so points
//! are sampled uniformly in the box and a point is on the border when one of
//! its 8 nearest sampled neighbours disagrees with it. Border points and
//! principal-component scores can be exported for external tour tools.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::projection::canonical_sign;
use crate::tree::FittedTree;

pub const DEFAULT_RESOLUTION: usize = 201;
/// Fraction of the data range added on each side of the grid box.
pub const BBOX_MARGIN: f64 = 0.1;
/// Neighbours consulted by the sampled border rule.
pub const BORDER_NEIGHBOURS: usize = 8;

/// Data range per feature widened by [`BBOX_MARGIN`] on each side. A
/// constant feature gets a unit-width box around its value.
pub fn data_bbox(data: &Dataset) -> Vec<(f64, f64)> {
    data.bounds()
        .into_iter()
        .map(|(lo, hi)| {
            let w = hi - lo;
            if w > 0.0 {
                (lo - BBOX_MARGIN * w, hi + BBOX_MARGIN * w)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub bbox: Vec<(f64, f64)>,
    pub resolution: usize,
    /// Row-major: index `row * resolution + col`, `col` along x1, `row` along x2.
    pub labels: Vec<ClassId>,
    pub border_mask: Vec<bool>,
}

impl BoundaryGrid {
    fn coord(&self, axis: usize, k: usize) -> f64 {
        let (lo, hi) = self.bbox[axis];
        if k + 1 == self.resolution {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (self.resolution - 1) as f64
        }
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let (row, col) = (index / self.resolution, index % self.resolution);
        [self.coord(0, col), self.coord(1, row)]
    }

    pub fn label_at(&self, row: usize, col: usize) -> ClassId {
        self.labels[row * self.resolution + col]
    }

    pub fn cell_width(&self) -> [f64; 2] {
        let r = (self.resolution - 1) as f64;
        [
            (self.bbox[0].1 - self.bbox[0].0) / r,
            (self.bbox[1].1 - self.bbox[1].0) / r,
        ]
    }

    /// `x1,x2,label,is_border`, one line per lattice point in row-major order.
    pub fn write_csv<W: Write>(&self, out: W, names: Option<&FittedTree>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv {
            path: "<grid>".into(),
            message: e.to_string(),
        };
        w.write_record(["x1", "x2", "label", "is_border"])
            .map_err(err)?;
        for (i, (&label, &border)) in self.labels.iter().zip(&self.border_mask).enumerate() {
            let [x1, x2] = self.point(i);
            let name = names.map_or_else(|| label.to_string(), |t| t.class_name(label));
            w.write_record([
                format!("{x1:?}"),
                format!("{x2:?}"),
                name,
                (border as u8).to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Predicts `tree` on a `resolution × resolution` lattice spanning `bbox`.
pub fn boundary_grid(
    tree: &FittedTree,
    bbox: &[(f64, f64)],
    resolution: usize,
    exec: Execution,
) -> Result<BoundaryGrid> {
    if bbox.len() != 2 || tree.n_features != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: if bbox.len() != 2 {
                bbox.len()
            } else {
                tree.n_features
            },
        });
    }
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    if bbox
        .iter()
        .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo >= hi)
    {
        return Err(Error::invalid(
            "bounding box needs finite min < max on each axis",
        ));
    }
    let mut grid = BoundaryGrid {
        bbox: bbox.to_vec(),
        resolution,
        labels: vec![],
        border_mask: vec![],
    };
    let rows: Vec<Vec<ClassId>> = exec.map(resolution, |row| {
        (0..resolution)
            .map(|col| {
                let x = grid.point(row * resolution + col);
                tree.predict(&x).expect("2-feature tree")
            })
            .collect()
    });
    grid.labels = rows.concat();
    grid.border_mask = border_mask(&grid.labels, resolution);
    Ok(grid)
}

fn border_mask(labels: &[ClassId], res: usize) -> Vec<bool> {
    let at = |r: usize, c: usize| labels[r * res + c];
    (0..res * res)
        .map(|i| {
            let (r, c) = (i / res, i % res);
            let me = at(r, c);
            (r > 0 && at(r - 1, c) != me)
                || (r + 1 < res && at(r + 1, c) != me)
                || (c > 0 && at(r, c - 1) != me)
                || (c + 1 < res && at(r, c + 1) != me)
        })
        .collect()
}

/// Coordinates of the lattice points flagged as border.
pub fn border_points(grid: &BoundaryGrid) -> Vec<[f64; 2]> {
    grid.border_mask
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| grid.point(i))
        .collect()
}

/// Uniform sample of a `p`-dimensional box labelled by a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledBoundary {
    pub n_features: usize,
    /// Row-major `n × p`.
    pub points: Vec<f64>,
    pub labels: Vec<ClassId>,
    pub border: Vec<bool>,
}

impl SampledBoundary {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_features..(i + 1) * self.n_features]
    }

    /// The border subset as a dataset, labelled by predicted class.
    pub fn border_dataset(&self, names: &[String]) -> Result<Dataset> {
        let mut features = vec![];
        let mut labels = vec![];
        for i in (0..self.labels.len()).filter(|&i| self.border[i]) {
            features.extend_from_slice(self.point(i));
            labels.push(self.labels[i]);
        }
        Dataset::with_class_names(features, self.n_features, labels, names.to_vec())
    }

    /// `x1..xp,label,is_border`.
    pub fn write_csv<W: Write>(&self, out: W, tree: &FittedTree) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv {
            path: "<sample>".into(),
            message: e.to_string(),
        };
        let mut header: Vec<String> = (1..=self.n_features).map(|j| format!("x{j}")).collect();
        header.extend(["label".into(), "is_border".into()]);
        w.write_record(&header).map_err(err)?;
        for i in 0..self.labels.len() {
            let mut rec: Vec<String> = self.point(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(tree.class_name(self.labels[i]));
            rec.push((self.border[i] as u8).to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `n` points uniformly in `bbox` and flags those whose
/// [`BORDER_NEIGHBOURS`] nearest neighbours (in box-normalized coordinates)
/// include another predicted label.
pub fn sampled_boundary(
    tree: &FittedTree,
    bbox: &[(f64, f64)],
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<SampledBoundary> {
    let p = tree.n_features;
    if bbox.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: bbox.len(),
        });
    }
    if n <= BORDER_NEIGHBOURS {
        return Err(Error::invalid(format!(
            "need more than {BORDER_NEIGHBOURS} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
    let points: Vec<f64> = unit
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let (lo, hi) = bbox[i % p];
            lo + u * (hi - lo)
        })
        .collect();
    let labels: Vec<ClassId> = exec.map(n, |i| {
        tree.predict(&points[i * p..(i + 1) * p]).expect("dims")
    });
    let border = exec.map(n, |i| {
        let me = &unit[i * p..(i + 1) * p];
        let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(BORDER_NEIGHBOURS + 1);
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = unit[j * p..(j + 1) * p]
                .iter()
                .zip(me)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            if nearest.len() < BORDER_NEIGHBOURS || d < nearest[nearest.len() - 1].0 {
                let at = nearest.partition_point(|e| e.0 <= d);
                nearest.insert(at, (d, j));
                nearest.truncate(BORDER_NEIGHBOURS);
            }
        }
        nearest.iter().any(|&(_, j)| labels[j] != labels[i])
    });
    Ok(SampledBoundary {
        n_features: p,
        points,
        labels,
        border,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k` orthonormal directions, leading first.
    pub components: Vec<Vec<f64>>,
    /// Row-major `n × k`.
    pub scores: Vec<f64>,
    pub variance_explained: Vec<f64>,
}

impl Pca {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn score_row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.k()..(i + 1) * self.k()]
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((a, v), m)| a * (v - m))
                    .sum()
            })
            .collect()
    }
}

/// Principal components of `data`'s features via the sample covariance.
pub fn pca_reduce(data: &Dataset, k: usize) -> Result<Pca> {
    let (n, p) = (data.n_rows(), data.n_features());
    if k == 0 || n < 2 || k > (n - 1).min(p) {
        return Err(Error::invalid(format!(
            "cannot extract {k} components from {n} rows of {p} features"
        )));
    }
    let mut mean = vec![0.0; p];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let mut cov = DMatrix::zeros(p, p);
    for row in data.rows() {
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    cov /= (n - 1) as f64;
    let total = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Vec::with_capacity(k);
    let mut variance_explained = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        canonical_sign(&mut v);
        components.push(v);
        let ev = eig.eigenvalues[j].max(0.0);
        variance_explained.push(if total > 0.0 { ev / total } else { 0.0 });
    }
    let mut pca = Pca {
        mean,
        components,
        scores: vec![],
        variance_explained,
    };
    pca.scores = data.rows().flat_map(|row| pca.transform(row)).collect();
    Ok(pca)
}
