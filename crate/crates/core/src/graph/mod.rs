//! The decision graph: nodes, routing rules, prediction and structure checks.

pub(crate) mod io;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::stats::TestFamily;

pub use io::FORMAT_VERSION;
pub use validate::{validate_dag, Violation};

pub type NodeId = usize;

/// Per-node routing rule. Child ordinals index the node's `children` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// `value <= threshold` goes to child 0, everything else to child 1.
    Threshold { feature: usize, value: f64 },
    /// `code == category` goes to child 0, every other code to child 1.
    OneVsRest { feature: usize, category: u32 },
    /// Code → child ordinal, sorted by code. Codes absent from the map were
    /// not seen at this node during training.
    CategoryMap { feature: usize, map: Vec<(u32, usize)> },
    /// Interval `i` is `[boundaries[i-1], boundaries[i])`, with open ends at
    /// both extremes; `targets[i]` is its child ordinal.
    RangePartition {
        feature: usize,
        boundaries: Vec<f64>,
        targets: Vec<usize>,
    },
}

impl SplitRule {
    pub fn feature(&self) -> usize {
        match self {
            SplitRule::Threshold { feature, .. }
            | SplitRule::OneVsRest { feature, .. }
            | SplitRule::CategoryMap { feature, .. }
            | SplitRule::RangePartition { feature, .. } => *feature,
        }
    }

    /// Number of children the rule routes to.
    pub fn arity(&self) -> usize {
        match self {
            SplitRule::Threshold { .. } | SplitRule::OneVsRest { .. } => 2,
            SplitRule::CategoryMap { map, .. } => map.iter().map(|&(_, o)| o + 1).max().unwrap_or(0),
            SplitRule::RangePartition { targets, .. } => targets.iter().map(|&o| o + 1).max().unwrap_or(0),
        }
    }

    /// Child ordinal for a feature value; `None` for a category this node
    /// never saw.
    pub fn route(&self, value: f64) -> Option<usize> {
        match self {
            SplitRule::Threshold { value: t, .. } => Some(if value <= *t { 0 } else { 1 }),
            SplitRule::OneVsRest { category, .. } => Some(if value == f64::from(*category) { 0 } else { 1 }),
            SplitRule::CategoryMap { map, .. } => {
                if value < 0.0 || value.fract() != 0.0 {
                    return None;
                }
                let code = value as u32;
                map.binary_search_by_key(&code, |&(c, _)| c).ok().map(|i| map[i].1)
            }
            SplitRule::RangePartition {
                boundaries, targets, ..
            } => {
                let idx = boundaries.partition_point(|&b| b <= value);
                targets.get(idx).copied()
            }
        }
    }
}

/// Label statistics of the training samples that reached a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeStats {
    Class { histogram: Vec<u64> },
    Real { count: u64, mean: f64, m2: f64 },
}

impl NodeStats {
    pub fn from_labels(values: impl Iterator<Item = f64>, task: Task) -> NodeStats {
        match task {
            Task::Classification { num_classes } => {
                let mut histogram = vec![0u64; num_classes];
                for v in values {
                    histogram[v as usize] += 1;
                }
                NodeStats::Class { histogram }
            }
            Task::Regression => {
                let values: Vec<f64> = values.collect();
                let m = crate::stats::Moments::from_slice(&values);
                NodeStats::Real {
                    count: m.n as u64,
                    mean: m.mean,
                    m2: m.m2,
                }
            }
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            NodeStats::Class { histogram } => histogram.iter().sum(),
            NodeStats::Real { count, .. } => *count,
        }
    }

    /// Majority class (lowest code on ties) or mean.
    pub fn prediction(&self) -> Prediction {
        match self {
            NodeStats::Class { histogram } => {
                let mut best = 0;
                for (c, &n) in histogram.iter().enumerate() {
                    if n > histogram[best] {
                        best = c;
                    }
                }
                Prediction::Class(best as u32)
            }
            NodeStats::Real { mean, .. } => Prediction::Value(*mean),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Class(u32),
    Value(f64),
}

impl Prediction {
    pub fn as_f64(self) -> f64 {
        match self {
            Prediction::Class(c) => f64::from(c),
            Prediction::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification { num_classes: usize },
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Exhaustive binary split search.
    Exact,
    /// Correlation-guided multi-way split with range merging.
    Scalable,
    /// Depth-limited impurity tree (baseline only).
    Greedy,
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SplitMode::Exact),
            "scalable" => Ok(SplitMode::Scalable),
            "greedy" => Ok(SplitMode::Greedy),
            other => Err(Error::invalid(format!("unknown split mode `{other}`"))),
        }
    }
}

/// Training settings recorded with a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub p_lim: f64,
    pub test_family: TestFamily,
    pub split_mode: SplitMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsNode {
    pub id: NodeId,
    /// Sorted, without duplicates.
    pub parents: Vec<NodeId>,
    pub rule: Option<SplitRule>,
    pub children: Vec<NodeId>,
    pub terminal: bool,
    pub stats: NodeStats,
    pub prediction: Prediction,
}

impl DsNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A trained decision graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DsModel {
    pub task: Task,
    pub num_features: usize,
    pub schema_fingerprint: String,
    pub config: ModelConfig,
    pub root: NodeId,
    pub nodes: BTreeMap<NodeId, DsNode>,
}

/// Shape summary printed by `ds inspect`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSummary {
    pub nodes: usize,
    pub depth: usize,
    pub leaves: usize,
    pub max_fanin: usize,
}

impl std::fmt::Display for GraphSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "nodes={} depth={} leaves={} max_fanin={}",
            self.nodes, self.depth, self.leaves, self.max_fanin
        )
    }
}

impl DsModel {
    pub fn node(&self, id: NodeId) -> Option<&DsNode> {
        self.nodes.get(&id)
    }

    fn walk(&self, value: impl Fn(usize) -> f64) -> Result<&DsNode> {
        let mut node = self
            .nodes
            .get(&self.root)
            .ok_or_else(|| Error::Model("root node missing".into()))?;
        for _ in 0..=self.nodes.len() {
            let Some(rule) = &node.rule else {
                return Ok(node);
            };
            let ordinal = match rule.route(value(rule.feature())) {
                Some(o) => o,
                None => self.heaviest_child(node)?,
            };
            let child = *node
                .children
                .get(ordinal)
                .ok_or_else(|| Error::Model(format!("node {} has no child {ordinal}", node.id)))?;
            node = self
                .nodes
                .get(&child)
                .ok_or_else(|| Error::Model(format!("dangling child {child}")))?;
        }
        Err(Error::Model("routing did not terminate; graph has a cycle".into()))
    }

    fn heaviest_child(&self, node: &DsNode) -> Result<usize> {
        let mut best: Option<(usize, u64)> = None;
        for (ordinal, id) in node.children.iter().enumerate() {
            let count = self
                .nodes
                .get(id)
                .ok_or_else(|| Error::Model(format!("dangling child {id}")))?
                .stats
                .count();
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((ordinal, count));
            }
        }
        best.map(|(o, _)| o)
            .ok_or_else(|| Error::Model(format!("node {} has a rule but no children", node.id)))
    }

    /// Leaf reached by a row, as a node id.
    pub fn leaf_for(&self, row: &[f64]) -> Result<NodeId> {
        self.check_arity(row.len())?;
        self.walk(|f| row[f]).map(|n| n.id)
    }

    fn check_arity(&self, len: usize) -> Result<()> {
        if len != self.num_features {
            return Err(Error::invalid(format!(
                "sample has {len} features, model expects {}",
                self.num_features
            )));
        }
        Ok(())
    }

    /// Routes one sample (categorical codes given as exact integers) to a leaf.
    pub fn predict_one(&self, row: &[f64]) -> Result<Prediction> {
        self.check_arity(row.len())?;
        self.walk(|f| row[f]).map(|n| n.prediction)
    }

    pub(crate) fn predict_row(&self, table: &FeatureTable, row: usize) -> Result<Prediction> {
        self.walk(|f| table.column(f).value(row)).map(|n| n.prediction)
    }

    pub fn predict_batch(&self, table: &FeatureTable) -> Result<Vec<Prediction>> {
        let found = table.schema().fingerprint();
        if found != self.schema_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.schema_fingerprint.clone(),
                found,
            });
        }
        (0..table.row_count()).map(|r| self.predict_row(table, r)).collect()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &DsNode> {
        self.nodes.values().filter(|n| n.is_leaf())
    }

    /// Length in edges of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let order = match validate::topological_order(self) {
            Some(o) => o,
            None => return 0,
        };
        let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
        depth.insert(self.root, 0);
        let mut max = 0;
        for id in order {
            let Some(&d) = depth.get(&id) else { continue };
            max = max.max(d);
            for c in &self.nodes[&id].children {
                let e = depth.entry(*c).or_insert(0);
                *e = (*e).max(d + 1);
            }
        }
        max
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            nodes: self.nodes.len(),
            depth: self.depth(),
            leaves: self.leaves().count(),
            max_fanin: self.nodes.values().map(|n| n.parents.len()).max().unwrap_or(0),
        }
    }

    /// True when every non-root node has exactly one parent.
    pub fn is_tree(&self) -> bool {
        self.nodes.values().all(|n| n.id == self.root || n.parents.len() == 1)
    }
}
