//! Entropy-split trees: projected (`Mod2`) and axis-aligned baseline.

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::projection::Grouping;

use super::entropy::{best_entropy_split, entropy, EntropySplit, TIE_TOLERANCE};
use super::{
    classes_in, majority, FitConfig, FittedTree, NodeRule, StopReason, TreeNode, Variant, Warnings,
};

pub fn fit_mod2(data: &Dataset, cfg: &FitConfig) -> Result<FittedTree> {
    grow(data, cfg, Variant::Mod2)
}

pub fn fit_axis_baseline(data: &Dataset, cfg: &FitConfig) -> Result<FittedTree> {
    grow(data, cfg, Variant::AxisBaseline)
}

fn grow(data: &Dataset, cfg: &FitConfig, variant: Variant) -> Result<FittedTree> {
    cfg.validate()?;
    if data.n_rows() < 2 {
        return Err(Error::invalid(format!("{variant} needs at least 2 rows")));
    }
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut builder = Builder {
        data,
        cfg,
        variant,
        warnings: Warnings::default(),
    };
    let root = builder.node(&rows, 0, String::new());
    Ok(FittedTree {
        root,
        n_features: data.n_features(),
        classes: classes_in(data, &rows),
        class_names: data.class_names().to_vec(),
        variant,
        config: *cfg,
        warnings: builder.warnings.into_inner(),
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    cfg: &'a FitConfig,
    variant: Variant,
    warnings: Warnings,
}

struct Cut {
    alpha: Vec<f64>,
    split: EntropySplit,
}

impl Builder<'_> {
    fn node(&mut self, rows: &[usize], depth: usize, path: String) -> TreeNode {
        let classes = classes_in(self.data, rows);
        if classes.len() == 1 {
            return TreeNode::leaf(classes[0], StopReason::Pure);
        }
        let label = majority(self.data, rows);
        if rows.len() < self.cfg.min_node_size {
            return TreeNode::leaf(label, StopReason::MinNodeSize);
        }
        if depth >= self.cfg.max_depth {
            return TreeNode::leaf(label, StopReason::MaxDepth);
        }

        let cut = match self.variant {
            Variant::AxisBaseline => self.axis_cut(rows),
            _ => self.projected_cut(rows, &classes).or_else(|e| {
                self.warnings.push(&path, format!("{e}; axis fallback"));
                self.axis_cut(rows)
            }),
        };
        let cut = match cut {
            Ok(cut) => cut,
            Err(e) => {
                self.warnings
                    .push(&path, format!("{e}; majority leaf {label}"));
                return TreeNode::leaf(label, StopReason::Degenerate);
            }
        };

        let parent = node_entropy(self.data, rows, &classes);
        debug_assert!(cut.split.combined <= parent + TIE_TOLERANCE);
        if parent - cut.split.combined < self.cfg.entropy_threshold {
            return TreeNode::leaf(label, StopReason::EntropyReduction);
        }

        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| project(&cut.alpha, self.data.row(r)) < cut.split.c);
        debug_assert!(!left.is_empty() && !right.is_empty());
        TreeNode::Internal {
            left: Box::new(self.node(&left, depth + 1, format!("{path}L"))),
            right: Box::new(self.node(&right, depth + 1, format!("{path}R"))),
            alpha: cut.alpha,
            c: cut.split.c,
            rule: NodeRule::Entropy,
        }
    }

    fn projected_cut(&self, rows: &[usize], classes: &[ClassId]) -> Result<Cut> {
        let groups: Vec<usize> = rows
            .iter()
            .map(|&r| {
                classes
                    .binary_search(&self.data.label(r))
                    .expect("class present")
            })
            .collect();
        let proj = Grouping::new(self.data, rows, &groups)?.optimal_projection(&self.cfg.index)?;
        let z: Vec<f64> = rows
            .iter()
            .map(|&r| proj.project(self.data.row(r)))
            .collect();
        let split = best_entropy_split(&z, &self.labels(rows))?;
        Ok(Cut {
            alpha: proj.alpha,
            split,
        })
    }

    /// Best single-feature cut; ties keep the lowest feature index.
    fn axis_cut(&self, rows: &[usize]) -> Result<Cut> {
        let labels = self.labels(rows);
        let mut best: Option<(usize, EntropySplit)> = None;
        for j in 0..self.data.n_features() {
            let z: Vec<f64> = rows.iter().map(|&r| self.data.row(r)[j]).collect();
            let split = match best_entropy_split(&z, &labels) {
                Ok(s) => s,
                Err(Error::NoCandidateSplits) => continue,
                Err(e) => return Err(e),
            };
            if best
                .as_ref()
                .is_none_or(|(_, b)| split.combined < b.combined - TIE_TOLERANCE)
            {
                best = Some((j, split));
            }
        }
        let (j, split) = best.ok_or(Error::NoCandidateSplits)?;
        let mut alpha = vec![0.0; self.data.n_features()];
        alpha[j] = 1.0;
        Ok(Cut { alpha, split })
    }

    fn labels(&self, rows: &[usize]) -> Vec<ClassId> {
        rows.iter().map(|&r| self.data.label(r)).collect()
    }
}

fn project(alpha: &[f64], x: &[f64]) -> f64 {
    crate::projection::dot(alpha, x)
}

fn node_entropy(data: &Dataset, rows: &[usize], classes: &[ClassId]) -> f64 {
    let mut counts = vec![0usize; classes.len()];
    for &r in rows {
        counts[classes
            .binary_search(&data.label(r))
            .expect("class present")] += 1;
    }
    entropy(&counts).expect("nonempty node")
}
