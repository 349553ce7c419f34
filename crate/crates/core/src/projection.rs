//! Class scatter matrices and the LDA/PDA projection pursuit index.
//!
//! For a unit direction `a`, with between-group scatter `B` and within-group
//! scatter `W`, the LDA index is
//!
//! ```text
//! I(a) = 1 - a'Wa / a'(B + W)a
//! ```
//!
//! PDA replaces `W` by `W_l = (1 - l) W + l diag(W)`. Both indices are
//! maximized by the leading eigenvector of `B v = t (B + W_l) v`, which is
//! solved through a Cholesky reduction to a symmetric eigenproblem.
//!
//! Features are centered and scaled per call before solving; the direction
//! is mapped back to the raw feature scale afterwards. Both indices are
//! invariant under per-feature affine rescaling, so this only affects
//! conditioning. Zero-variance features carry no information and get a zero
//! coefficient.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Largest condition estimate of `B + W` accepted under LDA.
pub const MAX_CONDITION: f64 = 1e12;
/// Smallest `a'(B + W)a` accepted by [`index_value`].
pub const MIN_TOTAL_VARIATION: f64 = 1e-12;
/// Default PDA penalty.
pub const DEFAULT_PDA_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    pub between: DMatrix<f64>,
    pub within: DMatrix<f64>,
    pub total_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Lda,
    Pda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub kind: IndexKind,
    #[serde(default)]
    pub lambda: f64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig::lda()
    }
}

impl IndexConfig {
    pub fn lda() -> Self {
        IndexConfig {
            kind: IndexKind::Lda,
            lambda: 0.0,
        }
    }

    pub fn pda(lambda: f64) -> Result<Self> {
        let cfg = IndexConfig {
            kind: IndexKind::Pda,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            IndexKind::Lda if self.lambda != 0.0 => {
                Err(Error::invalid("lambda must be 0 under the LDA index"))
            }
            IndexKind::Pda if !(0.0..1.0).contains(&self.lambda) => Err(Error::invalid(format!(
                "PDA lambda {} outside [0, 1)",
                self.lambda
            ))),
            _ => Ok(()),
        }
    }

    fn penalty(&self) -> f64 {
        match self.kind {
            IndexKind::Lda => 0.0,
            IndexKind::Pda => self.lambda,
        }
    }
}

/// A unit projection direction and the index it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub alpha: Vec<f64>,
    pub index_value: f64,
}

impl Projection {
    pub fn project(&self, x: &[f64]) -> f64 {
        dot(&self.alpha, x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Between/within scatter of `data` grouped by class label.
pub fn class_scatter(data: &Dataset) -> Result<ScatterPair> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let groups: Vec<usize> = data.labels().iter().map(|&l| l as usize - 1).collect();
    let grouping = Grouping::new(data, &rows, &groups)?;
    Ok(grouping.scatter(None))
}

/// Projection pursuit index of `alpha` (any nonzero scale).
pub fn index_value(alpha: &[f64], scatter: &ScatterPair, cfg: &IndexConfig) -> Result<f64> {
    let p = scatter.between.nrows();
    if alpha.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: alpha.len(),
        });
    }
    let a = DVector::from_column_slice(alpha);
    let b = quad_form(&scatter.between, &a);
    let w = penalized_quad_form(&scatter.within, &a, cfg.penalty());
    let total = b + w;
    if total.is_nan() || total < MIN_TOTAL_VARIATION {
        return Err(Error::AnnihilatingProjection(total));
    }
    Ok((1.0 - w / total).clamp(0.0, 1.0))
}

/// Direction maximizing the index over all classes of `data`.
pub fn optimal_projection(data: &Dataset, cfg: &IndexConfig) -> Result<Projection> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let groups: Vec<usize> = data.labels().iter().map(|&l| l as usize - 1).collect();
    Grouping::new(data, &rows, &groups)?.optimal_projection(cfg)
}

fn quad_form(m: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    (a.transpose() * m * a)[(0, 0)]
}

fn penalized_quad_form(w: &DMatrix<f64>, a: &DVector<f64>, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return quad_form(w, a);
    }
    let diag: f64 = (0..a.len()).map(|j| w[(j, j)] * a[j] * a[j]).sum();
    (1.0 - lambda) * quad_form(w, a) + lambda * diag
}

fn penalized_within(w: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    if lambda == 0.0 {
        return w.clone();
    }
    let mut out = w * (1.0 - lambda);
    for j in 0..w.nrows() {
        out[(j, j)] += lambda * w[(j, j)];
    }
    out
}

/// Flips `v` so that its first nonzero coordinate is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn first_nonzero(v: &[f64]) -> usize {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter()
        .position(|x| x.abs() > 1e-12 * scale)
        .unwrap_or(v.len())
}

/// A set of rows assigned to dense group indices `0..n_groups`.
pub(crate) struct Grouping<'a> {
    data: &'a Dataset,
    rows: &'a [usize],
    groups: &'a [usize],
    n_groups: usize,
    counts: Vec<usize>,
}

struct Standardizer {
    active: Vec<usize>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl<'a> Grouping<'a> {
    pub(crate) fn new(data: &'a Dataset, rows: &'a [usize], groups: &'a [usize]) -> Result<Self> {
        debug_assert_eq!(rows.len(), groups.len());
        let n_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
        let mut counts = vec![0usize; n_groups];
        for &g in groups {
            counts[g] += 1;
        }
        let nonempty = counts.iter().filter(|&&c| c > 0).count();
        if nonempty < 2 {
            return Err(Error::DegenerateGrouping(format!(
                "{nonempty} nonempty group(s) among {} rows; need at least 2",
                rows.len()
            )));
        }
        Ok(Grouping {
            data,
            rows,
            groups,
            n_groups,
            counts,
        })
    }

    fn standardizer(&self) -> Standardizer {
        let p = self.data.n_features();
        let n = self.rows.len() as f64;
        let mut center = vec![0.0; p];
        for &r in self.rows {
            for (c, x) in center.iter_mut().zip(self.data.row(r)) {
                *c += x;
            }
        }
        center.iter_mut().for_each(|c| *c /= n);
        let mut ss = vec![0.0; p];
        for &r in self.rows {
            for (j, x) in self.data.row(r).iter().enumerate() {
                ss[j] += (x - center[j]).powi(2);
            }
        }
        let mut std = Standardizer {
            active: vec![],
            center: vec![],
            scale: vec![],
        };
        for j in 0..p {
            let sd = if n > 1.0 {
                (ss[j] / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            if sd > 0.0 && sd > 1e-12 * center[j].abs() {
                std.active.push(j);
                std.center.push(center[j]);
                std.scale.push(sd);
            }
        }
        std
    }

    /// Scatter on the raw features, or on the standardized active features.
    fn scatter(&self, std: Option<&Standardizer>) -> ScatterPair {
        let p = std.map_or(self.data.n_features(), |s| s.active.len());
        let value = |r: usize, k: usize| -> f64 {
            let row = self.data.row(r);
            match std {
                Some(s) => (row[s.active[k]] - s.center[k]) / s.scale[k],
                None => row[k],
            }
        };

        let mut means = vec![vec![0.0; p]; self.n_groups];
        let mut grand = vec![0.0; p];
        for (&r, &g) in self.rows.iter().zip(self.groups) {
            for k in 0..p {
                let v = value(r, k);
                means[g][k] += v;
                grand[k] += v;
            }
        }
        let n = self.rows.len() as f64;
        grand.iter_mut().for_each(|v| *v /= n);
        for (g, m) in means.iter_mut().enumerate() {
            if self.counts[g] > 0 {
                let c = self.counts[g] as f64;
                m.iter_mut().for_each(|v| *v /= c);
            }
        }

        let mut within = DMatrix::zeros(p, p);
        let mut dev = vec![0.0; p];
        for (&r, &g) in self.rows.iter().zip(self.groups) {
            for k in 0..p {
                dev[k] = value(r, k) - means[g][k];
            }
            for a in 0..p {
                for b in a..p {
                    within[(a, b)] += dev[a] * dev[b];
                }
            }
        }
        let mut between = DMatrix::zeros(p, p);
        for (g, m) in means.iter().enumerate() {
            if self.counts[g] == 0 {
                continue;
            }
            let c = self.counts[g] as f64;
            for a in 0..p {
                for b in a..p {
                    between[(a, b)] += c * (m[a] - grand[a]) * (m[b] - grand[b]);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                within[(a, b)] = within[(b, a)];
                between[(a, b)] = between[(b, a)];
            }
        }
        ScatterPair {
            between,
            within,
            total_count: self.rows.len(),
        }
    }

    pub(crate) fn optimal_projection(&self, cfg: &IndexConfig) -> Result<Projection> {
        cfg.validate()?;
        let p = self.data.n_features();
        let std = self.standardizer();
        if std.active.is_empty() {
            return Err(Error::AnnihilatingProjection(0.0));
        }
        let scatter = self.scatter(Some(&std));
        let pa = std.active.len();
        let lambda = cfg.penalty();
        let w_pen = penalized_within(&scatter.within, lambda);
        let total = &scatter.between + &w_pen;

        let spectrum = SymmetricEigen::new(total.clone()).eigenvalues;
        let hi = spectrum.max();
        let lo = spectrum.min();
        if hi.is_nan() || hi <= 0.0 {
            return Err(Error::AnnihilatingProjection(hi.max(0.0)));
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cfg.kind == IndexKind::Lda && condition > MAX_CONDITION {
            return Err(Error::NearSingular { condition });
        }

        let eps = 1e-10 * total.trace() / pa as f64;
        let regularized = &total + DMatrix::identity(pa, pa) * eps;
        let chol = Cholesky::new(regularized).ok_or(Error::NearSingular { condition })?;
        let l = chol.l();
        let lb = l
            .solve_lower_triangular(&scatter.between)
            .ok_or(Error::NearSingular { condition })?;
        let m = l
            .solve_lower_triangular(&lb.transpose())
            .ok_or(Error::NearSingular { condition })?;
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let top = eig.eigenvalues.max();
        let lt = l.transpose();

        // Leading eigenspace may be degenerate: take each candidate back to the
        // raw scale, canonicalize, keep the one whose first nonzero coordinate
        // comes earliest.
        let tol = 1e-12 * top.abs().max(1.0);
        let mut best: Option<Vec<f64>> = None;
        for (k, &theta) in eig.eigenvalues.iter().enumerate() {
            if theta < top - tol {
                continue;
            }
            let u = eig.eigenvectors.column(k).into_owned();
            let Some(v) = lt.solve_upper_triangular(&u) else {
                continue;
            };
            let mut alpha = vec![0.0; p];
            for (i, &j) in std.active.iter().enumerate() {
                alpha[j] = v[i] / std.scale[i];
            }
            let norm = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm <= 0.0 {
                continue;
            }
            alpha.iter_mut().for_each(|x| *x /= norm);
            canonical_sign(&mut alpha);
            best = match best {
                Some(b) if first_nonzero(&b) <= first_nonzero(&alpha) => Some(b),
                _ => Some(alpha),
            };
        }
        let alpha = best.ok_or(Error::NearSingular { condition })?;

        let std_alpha: Vec<f64> = std
            .active
            .iter()
            .zip(&std.scale)
            .map(|(&j, s)| alpha[j] * s)
            .collect();
        let index_value = index_value(&std_alpha, &scatter, cfg)?;
        Ok(Projection { alpha, index_value })
    }
}
