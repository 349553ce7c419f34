//! The original PPtree growth procedure and its class-subsetting variant.

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::projection::{Grouping, Projection};
use crate::split_rules::{split_value, summarize_group};

use super::{
    classes_in, majority, FitConfig, FittedTree, NodeRule, StopReason, TreeNode, Variant, Warnings,
};

/// Binary relabeling of a node's classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperGroups {
    /// Classes whose projected mean lies below the midpoint.
    pub low: Vec<ClassId>,
    pub high: Vec<ClassId>,
}

/// Splits classes at the midpoint of the two most distant projected means.
/// A class whose mean equals the midpoint joins `high`.
pub fn relabel_supergroups(means: &[(ClassId, f64)]) -> Result<SuperGroups> {
    if means.len() < 2 {
        return Err(Error::DegenerateGrouping(format!(
            "{} class(es)",
            means.len()
        )));
    }
    if means.iter().any(|(_, m)| !m.is_finite()) {
        return Err(Error::invalid("non-finite projected class mean"));
    }
    let lo = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let mp = (lo + hi) / 2.0;
    let (low, high): (Vec<&(ClassId, f64)>, Vec<_>) = means.iter().partition(|(_, m)| *m < mp);
    if low.is_empty() || high.is_empty() {
        return Err(Error::NoSeparation);
    }
    Ok(SuperGroups {
        low: low.into_iter().map(|m| m.0).collect(),
        high: high.into_iter().map(|m| m.0).collect(),
    })
}

pub fn fit_original(data: &Dataset, cfg: &FitConfig) -> Result<FittedTree> {
    grow(data, cfg, Variant::Original)
}

pub fn fit_mod1(data: &Dataset, cfg: &FitConfig) -> Result<FittedTree> {
    grow(data, cfg, Variant::Mod1)
}

fn grow(data: &Dataset, cfg: &FitConfig, variant: Variant) -> Result<FittedTree> {
    cfg.validate()?;
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let classes = classes_in(data, &rows);
    if classes.len() < 2 {
        return Err(Error::DegenerateGrouping(format!(
            "{variant} needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    if data.n_rows() < 2 * classes.len() {
        return Err(Error::invalid(format!(
            "{variant} needs at least 2 rows per class on average ({} rows, {} classes)",
            data.n_rows(),
            classes.len()
        )));
    }
    let mut builder = Builder {
        data,
        cfg,
        variant,
        warnings: Warnings::default(),
    };
    let root = builder.node(&rows, String::new());
    Ok(FittedTree {
        root,
        n_features: data.n_features(),
        classes,
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

impl Builder<'_> {
    fn node(&mut self, rows: &[usize], path: String) -> TreeNode {
        let classes = classes_in(self.data, rows);
        if classes.len() == 1 {
            return TreeNode::leaf(classes[0], StopReason::Pure);
        }
        match self.split(rows, &classes, &path) {
            Ok(split) => {
                let left_rows = self.rows_of(rows, &split.left);
                let right_rows = self.rows_of(rows, &split.right);
                TreeNode::Internal {
                    alpha: split.alpha,
                    c: split.c,
                    rule: NodeRule::Table(split.rule),
                    left: Box::new(self.node(&left_rows, format!("{path}L"))),
                    right: Box::new(self.node(&right_rows, format!("{path}R"))),
                }
            }
            Err(e) => {
                let label = majority(self.data, rows);
                self.warnings
                    .push(&path, format!("{e}; majority leaf {label}"));
                TreeNode::leaf(label, StopReason::Degenerate)
            }
        }
    }

    fn rows_of(&self, rows: &[usize], classes: &[ClassId]) -> Vec<usize> {
        rows.iter()
            .copied()
            .filter(|&r| classes.contains(&self.data.label(r)))
            .collect()
    }

    fn split(&mut self, rows: &[usize], classes: &[ClassId], path: &str) -> Result<NodeSplit> {
        // Step 1: separate all classes at the node.
        let groups: Vec<usize> = rows
            .iter()
            .map(|&r| {
                classes
                    .binary_search(&self.data.label(r))
                    .expect("class present")
            })
            .collect();
        let first = Grouping::new(self.data, rows, &groups)?.optimal_projection(&self.cfg.index)?;
        let means = class_means(self.data, rows, classes, &first);

        // Step 2: relabel into two super-classes.
        let sg = relabel_supergroups(&means)?;

        // Step 3: second projection and split value, either on the super-classes
        // or on the closest cross-boundary pair.
        let (low_members, high_members) = match self.variant {
            Variant::Mod1 => {
                let mean_of = |c: &ClassId| means.iter().find(|m| m.0 == *c).unwrap().1;
                let a = *sg
                    .low
                    .iter()
                    .max_by(|x, y| mean_of(x).total_cmp(&mean_of(y)))
                    .unwrap();
                let b = *sg
                    .high
                    .iter()
                    .min_by(|x, y| mean_of(x).total_cmp(&mean_of(y)))
                    .unwrap();
                (vec![a], vec![b])
            }
            _ => (sg.low.clone(), sg.high.clone()),
        };
        let mut sub_rows = Vec::new();
        let mut sub_groups = Vec::new();
        for &r in rows {
            let l = self.data.label(r);
            if low_members.contains(&l) {
                sub_rows.push(r);
                sub_groups.push(0);
            } else if high_members.contains(&l) {
                sub_rows.push(r);
                sub_groups.push(1);
            }
        }
        let second = Grouping::new(self.data, &sub_rows, &sub_groups)?
            .optimal_projection(&self.cfg.index)?;
        let mut z = [Vec::new(), Vec::new()];
        for (&r, &g) in sub_rows.iter().zip(&sub_groups) {
            z[g].push(second.project(self.data.row(r)));
        }
        let low_stats = summarize_group(&z[0])?;
        let high_stats = summarize_group(&z[1])?;

        // The super-class with the smaller projected mean goes left; on a tie,
        // the one holding the smaller class id.
        let low_first = if low_stats.mean != high_stats.mean {
            low_stats.mean < high_stats.mean
        } else {
            sg.low.iter().min() < sg.high.iter().min()
        };
        let (g1, g2, left, right) = if low_first {
            (low_stats, high_stats, sg.low, sg.high)
        } else {
            (high_stats, low_stats, sg.high, sg.low)
        };
        let value = split_value(self.cfg.rule, &g1, &g2);
        if value.fell_back(self.cfg.rule) {
            self.warnings.push(
                path,
                format!(
                    "{} has a zero weight denominator; used {}",
                    self.cfg.rule, value.applied
                ),
            );
        }
        Ok(NodeSplit {
            alpha: second.alpha,
            c: value.c,
            rule: value.applied,
            left,
            right,
        })
    }
}

struct NodeSplit {
    alpha: Vec<f64>,
    c: f64,
    rule: crate::split_rules::SplitRule,
    left: Vec<ClassId>,
    right: Vec<ClassId>,
}

fn class_means(
    data: &Dataset,
    rows: &[usize],
    classes: &[ClassId],
    proj: &Projection,
) -> Vec<(ClassId, f64)> {
    let mut sums = vec![(0.0, 0usize); classes.len()];
    for &r in rows {
        let k = classes
            .binary_search(&data.label(r))
            .expect("class present");
        sums[k].0 += proj.project(data.row(r));
        sums[k].1 += 1;
    }
    classes
        .iter()
        .zip(sums)
        .map(|(&c, (s, n))| (c, s / n as f64))
        .collect()
}
