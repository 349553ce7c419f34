//! Projection pursuit classification trees.
//!
//! Four growth procedures share one node type:
//!
//! * [`Variant::Original`]: each node finds the projection separating all of
//!   its classes, splits the classes into two super-classes at the midpoint
//!   of the two most distant projected means, re-optimizes a projection for
//!   the two super-classes and places the split by one of the eight
//!   [`SplitRule`]s. Every class ends in exactly one leaf.
//! * [`Variant::Mod1`]: as `Original`, but the second projection and the
//!   split value use only the closest pair of classes across the super-class
//!   boundary.
//! * [`Variant::Mod2`]: each node projects its data and cuts at the midpoint
//!   minimizing the weighted child entropy; recursion stops on purity, node
//!   size, entropy reduction or depth.
//! * [`Variant::AxisBaseline`]: `Mod2` restricted to coordinate directions.
//!
//! Internal nodes send `x` left iff `alpha . x < c`.

mod document;
mod entropy;
mod multisplit;
mod pp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::projection::{dot, IndexConfig};
use crate::split_rules::SplitRule;

pub use document::MODEL_VERSION;
pub use entropy::{best_entropy_split, entropy, EntropySplit};
pub use multisplit::{fit_axis_baseline, fit_mod2};
pub use pp::{fit_mod1, fit_original, relabel_supergroups, SuperGroups};

/// Default minimum node size for entropy trees.
pub const DEFAULT_MIN_NODE_SIZE: usize = 10;
/// Default minimum entropy reduction for entropy trees.
pub const DEFAULT_ENTROPY_THRESHOLD: f64 = 0.01;
pub const DEFAULT_MAX_DEPTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Mod1,
    Mod2,
    #[serde(alias = "axis", alias = "baseline")]
    AxisBaseline,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::AxisBaseline,
        Variant::Original,
        Variant::Mod1,
        Variant::Mod2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Mod1 => "mod1",
            Variant::Mod2 => "mod2",
            Variant::AxisBaseline => "axis_baseline",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" | "pptree" => Ok(Variant::Original),
            "mod1" => Ok(Variant::Mod1),
            "mod2" => Ok(Variant::Mod2),
            "axis_baseline" | "axis-baseline" | "axis" | "baseline" => Ok(Variant::AxisBaseline),
            other => Err(Error::invalid(format!(
                "unknown variant {other:?} (expected original, mod1, mod2 or axis_baseline)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub index: IndexConfig,
    /// Split rule for `Original` and `Mod1`.
    pub rule: SplitRule,
    /// Entropy trees stop on nodes with fewer rows than this.
    pub min_node_size: usize,
    /// Entropy trees stop when the entropy reduction falls below this.
    pub entropy_threshold: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            index: IndexConfig::lda(),
            rule: SplitRule::MEAN,
            min_node_size: DEFAULT_MIN_NODE_SIZE,
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            max_depth: DEFAULT_MAX_DEPTH,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.index.validate()?;
        if self.min_node_size == 0 {
            return Err(Error::invalid("min_node_size must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if !(self.entropy_threshold >= 0.0 && self.entropy_threshold.is_finite()) {
            return Err(Error::invalid(
                "entropy_threshold must be a finite value >= 0",
            ));
        }
        Ok(())
    }
}

/// How an internal node chose its split value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRule {
    Table(SplitRule),
    Entropy,
}

impl Serialize for NodeRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NodeRule::Table(r) => s.serialize_u8(r.id()),
            NodeRule::Entropy => s.serialize_str("entropy"),
        }
    }
}

impl<'de> Deserialize<'de> for NodeRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(u8),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Id(id) => SplitRule::new(id)
                .map(NodeRule::Table)
                .map_err(serde::de::Error::custom),
            Raw::Name(n) if n == "entropy" => Ok(NodeRule::Entropy),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("unknown rule {n:?}"))),
        }
    }
}

/// Why growth stopped at a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Pure,
    MinNodeSize,
    EntropyReduction,
    MaxDepth,
    /// No usable projection or split; labelled by majority.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        alpha: Vec<f64>,
        c: f64,
        rule: NodeRule,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: ClassId,
        stop: StopReason,
    },
}

impl TreeNode {
    pub fn leaf(label: ClassId, stop: StopReason) -> Self {
        TreeNode::Leaf { label, stop }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn n_internal(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.n_internal() + right.n_internal(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaf labels in left-to-right order.
    pub fn leaf_labels(&self) -> Vec<ClassId> {
        let mut out = vec![];
        self.visit_leaves(&mut |label, _| out.push(label));
        out
    }

    pub fn visit_leaves(&self, f: &mut impl FnMut(ClassId, StopReason)) {
        match self {
            TreeNode::Leaf { label, stop } => f(*label, *stop),
            TreeNode::Internal { left, right, .. } => {
                left.visit_leaves(f);
                right.visit_leaves(f);
            }
        }
    }

    fn route(&self, x: &[f64]) -> ClassId {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Internal {
                    alpha,
                    c,
                    left,
                    right,
                    ..
                } => {
                    node = if dot(alpha, x) < *c { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTree {
    pub root: TreeNode,
    pub n_features: usize,
    /// Sorted ids of the classes seen in training.
    pub classes: Vec<ClassId>,
    /// Names indexed by `class id - 1`.
    #[serde(default)]
    pub class_names: Vec<String>,
    pub variant: Variant,
    pub config: FitConfig,
    /// Fallbacks taken while growing, one line each.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FittedTree {
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self.root.route(x))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<ClassId>> {
        if data.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: data.n_features(),
            });
        }
        Ok(data.rows().map(|x| self.root.route(x)).collect())
    }

    pub fn class_name(&self, id: ClassId) -> String {
        self.class_names
            .get(id as usize - 1)
            .cloned()
            .unwrap_or_else(|| id.to_string())
    }

    pub fn n_internal(&self) -> usize {
        self.root.n_internal()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }
}

/// Fits `variant` on `data`.
pub fn fit(data: &Dataset, variant: Variant, cfg: &FitConfig) -> Result<FittedTree> {
    match variant {
        Variant::Original => fit_original(data, cfg),
        Variant::Mod1 => fit_mod1(data, cfg),
        Variant::Mod2 => fit_mod2(data, cfg),
        Variant::AxisBaseline => fit_axis_baseline(data, cfg),
    }
}

/// Most frequent class among `rows`; ties go to the smallest id.
pub(crate) fn majority(data: &Dataset, rows: &[usize]) -> ClassId {
    let mut counts = vec![0usize; data.n_classes() + 1];
    for &r in rows {
        counts[data.label(r) as usize] += 1;
    }
    let mut best = 1;
    for c in 1..counts.len() {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best as ClassId
}

/// Sorted distinct classes among `rows`.
pub(crate) fn classes_in(data: &Dataset, rows: &[usize]) -> Vec<ClassId> {
    let mut seen = vec![false; data.n_classes() + 1];
    for &r in rows {
        seen[data.label(r) as usize] = true;
    }
    (1..seen.len())
        .filter(|&c| seen[c])
        .map(|c| c as ClassId)
        .collect()
}

/// Warnings collected during growth, tagged by node path (`L`/`R` from the root).
#[derive(Default)]
pub(crate) struct Warnings(Vec<String>);

impl Warnings {
    pub(crate) fn push(&mut self, path: &str, msg: impl fmt::Display) {
        let at = if path.is_empty() { "root" } else { path };
        log::debug!("node {at}: {msg}");
        self.0.push(format!("node {at}: {msg}"));
    }

    pub(crate) fn into_inner(self) -> Vec<String> {
        self.0
    }
}
