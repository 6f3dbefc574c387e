//! The training loop: split every open leaf, merge similar leaves, repeat
//! while the cross-node impurity keeps falling.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{LeafData, SplitContext};
use crate::data::{Dataset, SampleIndexSet};
use crate::error::{Error, Result};
use crate::graph::{DsModel, DsNode, ModelConfig, NodeId, NodeStats, SplitMode, Task};
use crate::merging::{merge_leaves, LeafPool, MergeCandidateFilter, RangeAnnotation};
use crate::splitting::{best_binary_split, scalable_split, CandidateSplit};
use crate::stats::TestFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub p_lim: f64,
    pub family: TestFamily,
    pub split_mode: SplitMode,
    /// `false` trains the merge-free ablation.
    pub merge_enabled: bool,
    pub min_samples_split: usize,
    pub impurity_tolerance: f64,
    pub max_iterations: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            p_lim: 0.05,
            family: TestFamily::Parametric,
            split_mode: SplitMode::Exact,
            merge_enabled: true,
            min_samples_split: 2,
            impurity_tolerance: 1e-12,
            max_iterations: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_lim > 0.0 && self.p_lim < 1.0) {
            return Err(Error::invalid(format!("p_lim must lie in (0, 1), got {}", self.p_lim)));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be at least 2"));
        }
        if self.impurity_tolerance.is_nan() || self.impurity_tolerance < 0.0 {
            return Err(Error::invalid("impurity_tolerance must be nonnegative"));
        }
        if self.split_mode == SplitMode::Greedy {
            return Err(Error::invalid(
                "greedy mode is only available through the baseline tree",
            ));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            p_lim: self.p_lim,
            test_family: self.family,
            split_mode: self.split_mode,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub leaves_after_split: usize,
    pub leaves_after_merge: usize,
    pub impurity: f64,
    /// Whether impurity fell by more than the tolerance; the loop stops
    /// after the first iteration where it did not.
    pub improved: bool,
}

/// Leaf counts and impurity per iteration. Record 0 is the single root.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "leaves_after_split", "leaves_after_merge", "impurity"])?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.leaves_after_split.to_string(),
                r.leaves_after_merge.to_string(),
                r.impurity.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("trace", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }
}

/// Sample-weighted impurity over leaves: Gini for class histograms,
/// population variance for real labels.
pub fn cross_node_impurity<'s>(leaves: impl IntoIterator<Item = &'s NodeStats>) -> Result<f64> {
    let mut total = 0u64;
    let mut acc = 0.0;
    for s in leaves {
        let n = s.count();
        total += n;
        if n == 0 {
            continue;
        }
        let nf = n as f64;
        acc += match s {
            NodeStats::Class { histogram } => {
                let gini: f64 = histogram
                    .iter()
                    .map(|&c| {
                        let f = c as f64 / nf;
                        f * (1.0 - f)
                    })
                    .sum();
                nf * gini
            }
            NodeStats::Real { m2, .. } => *m2,
        };
    }
    if total == 0 {
        return Err(Error::invalid("impurity needs at least one sample"));
    }
    Ok(acc / total as f64)
}

/// Growing graph plus the samples held by each current leaf.
struct Graph {
    task: Task,
    nodes: BTreeMap<NodeId, DsNode>,
    leaf_data: BTreeMap<NodeId, LeafData>,
    next: NodeId,
    root: NodeId,
}

impl Graph {
    fn add_leaf(&mut self, ctx: &SplitContext<'_>, parents: Vec<NodeId>, rows: SampleIndexSet) -> NodeId {
        let id = self.next;
        self.next += 1;
        let stats = ctx.stats(&rows);
        self.nodes.insert(
            id,
            DsNode {
                id,
                parents,
                rule: None,
                children: Vec::new(),
                terminal: false,
                prediction: stats.prediction(),
                stats,
            },
        );
        self.leaf_data.insert(id, ctx.leaf(rows));
        id
    }

    fn attach(&mut self, ctx: &SplitContext<'_>, id: NodeId, split: CandidateSplit) {
        self.leaf_data.remove(&id);
        let children: Vec<NodeId> = split
            .parts
            .into_iter()
            .map(|rows| self.add_leaf(ctx, vec![id], rows))
            .collect();
        let node = self.nodes.get_mut(&id).expect("split node");
        node.rule = Some(split.rule);
        node.children = children;
        node.terminal = false;
    }

    fn leaf_ids(&self) -> Vec<NodeId> {
        self.leaf_data.keys().copied().collect()
    }

    fn impurity(&self) -> Result<f64> {
        cross_node_impurity(self.leaf_data.keys().map(|id| &self.nodes[id].stats))
    }
}

/// The graph seen as a pool of mergeable leaves.
struct GraphPool<'g, 'c, 'a> {
    graph: &'g mut Graph,
    ctx: &'c SplitContext<'a>,
}

impl LeafPool for GraphPool<'_, '_, '_> {
    fn sample_count(&self, leaf: NodeId) -> usize {
        self.graph.leaf_data[&leaf].len()
    }

    fn similarity(&self, a: NodeId, b: NodeId) -> f64 {
        self.graph.leaf_data[&a].p_value(&self.graph.leaf_data[&b])
    }

    fn range(&self, _leaf: NodeId) -> Option<RangeAnnotation> {
        None
    }

    /// Fuses two leaves: parents are united, every parent edge to either
    /// leaf is re-pointed to the new node, and the terminal flag is cleared.
    fn merge(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let g = &mut *self.graph;
        for id in [a, b] {
            match g.nodes.get(&id) {
                Some(n) if n.is_leaf() => {}
                Some(_) => return Err(Error::Invariant(format!("node {id} is not a leaf"))),
                None => return Err(Error::Invariant(format!("node {id} does not exist"))),
            }
        }
        let na = g.nodes.remove(&a).expect("checked");
        let nb = g.nodes.remove(&b).expect("checked");
        let da = g.leaf_data.remove(&a).expect("leaf data");
        let db = g.leaf_data.remove(&b).expect("leaf data");
        let mut parents: Vec<NodeId> = na.parents.iter().chain(&nb.parents).copied().collect();
        parents.sort_unstable();
        parents.dedup();
        let id = g.next;
        g.next += 1;
        for p in &parents {
            let parent = g.nodes.get_mut(p).expect("parent exists");
            for c in &mut parent.children {
                if *c == a || *c == b {
                    *c = id;
                }
            }
        }
        let data = da.union(&db, self.ctx);
        let stats = self.ctx.stats(&data.rows);
        g.nodes.insert(
            id,
            DsNode {
                id,
                parents,
                rule: None,
                children: Vec::new(),
                terminal: false,
                prediction: stats.prediction(),
                stats,
            },
        );
        g.leaf_data.insert(id, data);
        Ok(id)
    }
}

/// Runs the training loop one iteration at a time.
pub struct Trainer<'a> {
    ctx: SplitContext<'a>,
    config: TrainConfig,
    graph: Graph,
    trace: TrainTrace,
    done: bool,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if data.row_count() == 0 {
            return Err(Error::invalid("cannot train on an empty dataset"));
        }
        if data.num_features() == 0 {
            return Err(Error::invalid("dataset has no features"));
        }
        let ctx = SplitContext::new(data, config.family)?;
        let mut graph = Graph {
            task: ctx.task(),
            nodes: BTreeMap::new(),
            leaf_data: BTreeMap::new(),
            next: 0,
            root: 0,
        };
        graph.root = graph.add_leaf(&ctx, Vec::new(), SampleIndexSet::all(data.row_count()));
        let impurity = graph.impurity()?;
        let trace = TrainTrace {
            records: vec![TraceRecord {
                iteration: 0,
                leaves_after_split: 1,
                leaves_after_merge: 1,
                impurity,
                improved: true,
            }],
        };
        Ok(Trainer {
            ctx,
            config,
            graph,
            trace,
            done: false,
        })
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn open_leaves(&self) -> Vec<NodeId> {
        self.graph
            .leaf_data
            .keys()
            .copied()
            .filter(|id| !self.graph.nodes[id].terminal)
            .collect()
    }

    /// One split-and-merge iteration. Returns `None` once training has stopped.
    pub fn step(&mut self) -> Result<Option<TraceRecord>> {
        if self.done {
            return Ok(None);
        }
        let open = self.open_leaves();
        let iteration = self.trace.records.len();
        let capped = self.config.max_iterations.is_some_and(|m| iteration > m);
        if open.is_empty() || capped {
            self.done = true;
            return Ok(None);
        }
        let ctx = &self.ctx;
        let graph = &self.graph;
        let config = self.config;
        let outcomes: Vec<Result<Option<CandidateSplit>>> = open
            .par_iter()
            .map(|id| {
                let rows = &graph.leaf_data[id].rows;
                if rows.len() < config.min_samples_split {
                    return Ok(None);
                }
                match config.split_mode {
                    SplitMode::Exact => Ok(best_binary_split(rows, ctx, config.p_lim)),
                    SplitMode::Scalable => scalable_split(rows, ctx, config.p_lim),
                    SplitMode::Greedy => Err(Error::invalid("greedy mode is not a training mode")),
                }
            })
            .collect();
        for (id, outcome) in open.into_iter().zip(outcomes) {
            match outcome? {
                Some(split) if split.parts.len() >= 2 => self.graph.attach(&self.ctx, id, split),
                _ => self.graph.nodes.get_mut(&id).expect("leaf").terminal = true,
            }
        }
        let leaves_after_split = self.graph.leaf_data.len();
        if self.config.merge_enabled {
            let leaves = self.graph.leaf_ids();
            let mut pool = GraphPool {
                graph: &mut self.graph,
                ctx: &self.ctx,
            };
            merge_leaves(&mut pool, leaves, self.config.p_lim, MergeCandidateFilter::All)?;
        }
        let impurity = self.graph.impurity()?;
        let previous = self.trace.records.last().expect("initial record").impurity;
        let improved = impurity < previous - self.config.impurity_tolerance;
        let record = TraceRecord {
            iteration,
            leaves_after_split,
            leaves_after_merge: self.graph.leaf_data.len(),
            impurity,
            improved,
        };
        self.trace.records.push(record);
        if !improved {
            self.done = true;
        }
        log::debug!(
            "iteration {iteration}: {leaves_after_split} leaves after split, {} after merge, impurity {impurity:.6}",
            record.leaves_after_merge
        );
        Ok(Some(record))
    }

    /// Current graph as a model (node ids as assigned during training).
    pub fn snapshot(&self) -> DsModel {
        DsModel {
            task: self.graph.task,
            num_features: self.ctx.dataset().num_features(),
            schema_fingerprint: self.ctx.dataset().schema().fingerprint(),
            config: self.config.model_config(),
            root: self.graph.root,
            nodes: self.graph.nodes.clone(),
        }
    }

    /// Rows held by each current leaf.
    pub fn leaf_rows(&self) -> impl Iterator<Item = (NodeId, &SampleIndexSet)> {
        self.graph.leaf_data.iter().map(|(&id, d)| (id, &d.rows))
    }

    pub fn trace(&self) -> &TrainTrace {
        &self.trace
    }

    /// Runs to completion and returns the canonically numbered model.
    pub fn finish(mut self) -> Result<(DsModel, TrainTrace)> {
        while self.step()?.is_some() {}
        let model = self.snapshot().canonicalize()?;
        Ok((model, self.trace))
    }
}

pub fn train(data: &Dataset, config: TrainConfig) -> Result<(DsModel, TrainTrace)> {
    Trainer::new(data, config)?.finish()
}
