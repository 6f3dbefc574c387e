//! JSON model documents with canonical node numbering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::validate::{topological_order, validate_dag};
use super::{DsModel, DsNode, ModelConfig, NodeId, NodeStats, Prediction, SplitRule, Task};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TaskTag {
    Classification,
    Regression,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ModelDoc {
    format_version: u32,
    task: TaskTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
    num_features: usize,
    #[serde(default)]
    schema_fingerprint: Option<String>,
    config: ModelConfig,
    root: NodeId,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: NodeId,
    parents: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<SplitRule>,
    children: Vec<NodeId>,
    terminal: bool,
    stats: NodeStats,
    prediction: f64,
}

impl DsModel {
    /// Copy with node ids renumbered 0.. in topological order (FIFO Kahn
    /// from the root, children in rule order). Unreachable nodes are dropped.
    pub fn canonicalize(&self) -> Result<DsModel> {
        let order = topological_order(self).ok_or_else(|| Error::Model("graph has a cycle".into()))?;
        let mut reachable = BTreeSet::from([self.root]);
        for id in &order {
            if reachable.contains(id) {
                reachable.extend(self.nodes[id].children.iter().copied());
            }
        }
        let renumber: BTreeMap<NodeId, NodeId> = order
            .iter()
            .filter(|id| reachable.contains(id))
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let nodes = renumber
            .iter()
            .map(|(&old, &new)| {
                let n = &self.nodes[&old];
                let mut parents: Vec<NodeId> = n.parents.iter().filter_map(|p| renumber.get(p).copied()).collect();
                parents.sort_unstable();
                (
                    new,
                    DsNode {
                        id: new,
                        parents,
                        rule: n.rule.clone(),
                        children: n.children.iter().map(|c| renumber[c]).collect(),
                        terminal: n.terminal,
                        stats: n.stats.clone(),
                        prediction: n.prediction,
                    },
                )
            })
            .collect();
        Ok(DsModel {
            task: self.task,
            num_features: self.num_features,
            schema_fingerprint: self.schema_fingerprint.clone(),
            config: self.config,
            root: renumber[&self.root],
            nodes,
        })
    }

    pub(crate) fn to_doc(&self) -> Result<ModelDoc> {
        let m = self.canonicalize()?;
        let (task, num_classes) = match m.task {
            Task::Classification { num_classes } => (TaskTag::Classification, Some(num_classes)),
            Task::Regression => (TaskTag::Regression, None),
        };
        Ok(ModelDoc {
            format_version: FORMAT_VERSION,
            task,
            num_classes,
            num_features: m.num_features,
            schema_fingerprint: Some(m.schema_fingerprint.clone()),
            config: m.config,
            root: m.root,
            nodes: m
                .nodes
                .into_values()
                .map(|n| NodeDoc {
                    id: n.id,
                    parents: n.parents,
                    rule: n.rule,
                    children: n.children,
                    terminal: n.terminal,
                    stats: n.stats,
                    prediction: n.prediction.as_f64(),
                })
                .collect(),
        })
    }

    pub(crate) fn from_doc(doc: ModelDoc) -> Result<DsModel> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "format_version {} not supported (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let schema_fingerprint = doc
            .schema_fingerprint
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Model("schema_fingerprint missing".into()))?;
        let task = match (doc.task, doc.num_classes) {
            (TaskTag::Classification, Some(k)) => Task::Classification { num_classes: k },
            (TaskTag::Classification, None) => {
                return Err(Error::Model("classification model without num_classes".into()))
            }
            (TaskTag::Regression, _) => Task::Regression,
        };
        let ids: BTreeSet<NodeId> = doc.nodes.iter().map(|n| n.id).collect();
        if ids.len() != doc.nodes.len() {
            return Err(Error::Model("duplicate node ids".into()));
        }
        if !ids.contains(&doc.root) {
            return Err(Error::Model(format!("dangling reference: root {}", doc.root)));
        }
        let mut nodes = BTreeMap::new();
        for n in doc.nodes {
            if let Some(bad) = n.children.iter().chain(&n.parents).find(|r| !ids.contains(r)) {
                return Err(Error::Model(format!("dangling reference: node {} -> {bad}", n.id)));
            }
            let prediction = match task {
                Task::Classification { num_classes } => {
                    let p = n.prediction;
                    if p < 0.0 || p.fract() != 0.0 || p as usize >= num_classes {
                        return Err(Error::Model(format!("node {}: invalid class prediction {p}", n.id)));
                    }
                    Prediction::Class(p as u32)
                }
                Task::Regression => Prediction::Value(n.prediction),
            };
            let mut parents = n.parents;
            parents.sort_unstable();
            parents.dedup();
            nodes.insert(
                n.id,
                DsNode {
                    id: n.id,
                    parents,
                    rule: n.rule,
                    children: n.children,
                    terminal: n.terminal,
                    stats: n.stats,
                    prediction,
                },
            );
        }
        let model = DsModel {
            task,
            num_features: doc.num_features,
            schema_fingerprint,
            config: doc.config,
            root: doc.root,
            nodes,
        };
        let report = validate_dag(&model);
        if let Some(first) = report.first() {
            return Err(Error::Model(format!("{first} ({} violations)", report.len())));
        }
        Ok(model)
    }

    /// Canonical JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc()?)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<DsModel> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DsModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_leaf_model;
    use super::*;

    #[test]
    fn roundtrip_is_byte_stable() {
        let m = two_leaf_model();
        let text = m.to_json().unwrap();
        let back = DsModel::from_json(&text).unwrap();
        assert_eq!(back, m.canonicalize().unwrap());
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn dangling_child_rejected() {
        let text = two_leaf_model()
            .to_json()
            .unwrap()
            .replace("\"children\": [\n        1,", "\"children\": [\n        9,");
        let err = DsModel::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("dangling"), "{err}");
    }

    #[test]
    fn version_and_fingerprint_checked() {
        let text = two_leaf_model().to_json().unwrap();
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(DsModel::from_json(&bumped)
            .unwrap_err()
            .to_string()
            .contains("format_version"));
        let stripped = text.replace("\"schema_fingerprint\": \"test\",", "");
        assert!(DsModel::from_json(&stripped)
            .unwrap_err()
            .to_string()
            .contains("fingerprint"));
    }

    #[test]
    fn canonical_ids_follow_topology() {
        let mut m = two_leaf_model();
        // relabel 0 -> 10, 1 -> 5, 2 -> 7
        let map = |id: NodeId| [10, 5, 7][id];
        m.nodes = m
            .nodes
            .into_values()
            .map(|mut n| {
                n.id = map(n.id);
                n.parents = n.parents.into_iter().map(map).collect();
                n.children = n.children.into_iter().map(map).collect();
                (n.id, n)
            })
            .collect();
        m.root = 10;
        let c = m.canonicalize().unwrap();
        assert_eq!(c, two_leaf_model());
    }
}
