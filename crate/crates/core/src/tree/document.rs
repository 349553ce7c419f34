//! Versioned JSON model documents.
//!
//! ```json
//! {"version": 1, "variant": "mod2", "classes": [1, 2], "class_names": ["a", "b"],
//!  "n_features": 2, "config": {...}, "warnings": [],
//!  "root": {"alpha": [0.7, 0.7], "c": 0.1, "rule": "entropy",
//!           "left": {"label": 1, "stop": "pure"}, "right": {...}}}
//! ```
//!
//! `rule` is a split rule id `1..=8` or `"entropy"`. Floats are written in
//! shortest round-trip form, so reading a document back is bit-exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FitConfig, FittedTree, TreeNode, Variant};
use crate::dataset::ClassId;

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct DocumentRef<'a> {
    version: u32,
    variant: Variant,
    classes: &'a [ClassId],
    class_names: &'a [String],
    n_features: usize,
    config: &'a FitConfig,
    warnings: &'a [String],
    root: &'a TreeNode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u32,
    variant: Variant,
    classes: Vec<ClassId>,
    #[serde(default)]
    class_names: Vec<String>,
    n_features: usize,
    #[serde(default)]
    config: FitConfig,
    #[serde(default)]
    warnings: Vec<String>,
    root: TreeNode,
}

impl FittedTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.document()).expect("tree documents always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("tree documents always serialize")
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.document()).expect("tree documents always serialize")
    }

    fn document(&self) -> DocumentRef<'_> {
        DocumentRef {
            version: MODEL_VERSION,
            variant: self.variant,
            classes: &self.classes,
            class_names: &self.class_names,
            n_features: self.n_features,
            config: &self.config,
            warnings: &self.warnings,
            root: &self.root,
        }
    }

    pub fn from_json(text: &str) -> Result<FittedTree> {
        if text.trim().is_empty() {
            return Err(Error::Model("empty document".into()));
        }
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<FittedTree> {
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            Some(v) => return Err(Error::Model(format!("unsupported version {v}"))),
            None => return Err(Error::Model("missing version".into())),
        }
        let doc: Document =
            serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))?;
        debug_assert_eq!(doc.version, MODEL_VERSION);
        let tree = FittedTree {
            root: doc.root,
            n_features: doc.n_features,
            classes: doc.classes,
            class_names: doc.class_names,
            variant: doc.variant,
            config: doc.config,
            warnings: doc.warnings,
        };
        validate(&tree)?;
        Ok(tree)
    }
}

fn validate(tree: &FittedTree) -> Result<()> {
    if tree.n_features == 0 {
        return Err(Error::Model("n_features must be positive".into()));
    }
    if tree.classes.is_empty() {
        return Err(Error::Model("no classes".into()));
    }
    tree.config
        .validate()
        .map_err(|e| Error::Model(e.to_string()))?;
    let mut stack = vec![&tree.root];
    while let Some(node) = stack.pop() {
        match node {
            TreeNode::Leaf { label, .. } => {
                if !tree.classes.contains(label) {
                    return Err(Error::Model(format!(
                        "leaf label {label} is not a known class"
                    )));
                }
            }
            TreeNode::Internal {
                alpha,
                c,
                left,
                right,
                ..
            } => {
                if alpha.len() != tree.n_features {
                    return Err(Error::Model(format!(
                        "projection of length {} in a {}-feature model",
                        alpha.len(),
                        tree.n_features
                    )));
                }
                if !c.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
                    return Err(Error::Model("non-finite split parameters".into()));
                }
                stack.push(left);
                stack.push(right);
            }
        }
    }
    Ok(())
}
