//! Depth-limited greedy impurity tree, the reference model for comparisons.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::context::{dense_ranks, task_of};
use crate::data::{Column, Dataset, SampleIndexSet};
use crate::error::{Error, Result};
use crate::graph::{DsModel, DsNode, ModelConfig, NodeId, NodeStats, SplitMode, SplitRule, Task};
use crate::stats::TestFamily;

/// Impurity bookkeeping for one side of a cut: Gini mass for classes,
/// shifted sums of squares for real labels.
#[derive(Clone)]
enum Side {
    Class {
        counts: Vec<u64>,
        n: u64,
        sum_sq_counts: u64,
    },
    Real {
        n: u64,
        sum: f64,
        sq: f64,
    },
}

impl Side {
    fn empty(task: Task) -> Side {
        match task {
            Task::Classification { num_classes } => Side::Class {
                counts: vec![0; num_classes],
                n: 0,
                sum_sq_counts: 0,
            },
            Task::Regression => Side::Real {
                n: 0,
                sum: 0.0,
                sq: 0.0,
            },
        }
    }

    #[inline]
    fn add(&mut self, y: f64, shift: f64) {
        match self {
            Side::Class {
                counts,
                n,
                sum_sq_counts,
            } => {
                let c = &mut counts[y as usize];
                *sum_sq_counts += 2 * *c + 1;
                *c += 1;
                *n += 1;
            }
            Side::Real { n, sum, sq } => {
                let d = y - shift;
                *n += 1;
                *sum += d;
                *sq += d * d;
            }
        }
    }

    /// Sample-weighted impurity: n·Gini or the sum of squared deviations.
    fn mass(&self) -> f64 {
        match self {
            Side::Class { n, sum_sq_counts, .. } => {
                if *n == 0 {
                    0.0
                } else {
                    *n as f64 - *sum_sq_counts as f64 / *n as f64
                }
            }
            Side::Real { n, sum, sq } => {
                if *n == 0 {
                    0.0
                } else {
                    (sq - sum * sum / *n as f64).max(0.0)
                }
            }
        }
    }

    fn minus(&self, other: &Side) -> Side {
        match (self, other) {
            (Side::Class { counts, n, .. }, Side::Class { counts: oc, n: on, .. }) => {
                let counts: Vec<u64> = counts.iter().zip(oc).map(|(a, b)| a - b).collect();
                let sum_sq_counts = counts.iter().map(|c| c * c).sum();
                Side::Class {
                    counts,
                    n: n - on,
                    sum_sq_counts,
                }
            }
            (Side::Real { n, sum, sq }, Side::Real { n: on, sum: os, sq: oq }) => Side::Real {
                n: n - on,
                sum: sum - os,
                sq: sq - oq,
            },
            _ => unreachable!("sides of one task"),
        }
    }
}

struct Builder<'a> {
    data: &'a Dataset,
    task: Task,
    ranks: Vec<Option<Vec<u32>>>,
}

impl Builder<'_> {
    fn label(&self, r: u32) -> f64 {
        self.data.label_values()[r as usize]
    }

    fn side(&self, rows: &[u32], shift: f64) -> Side {
        let mut s = Side::empty(self.task);
        for &r in rows {
            s.add(self.label(r), shift);
        }
        s
    }

    /// Best cut of one feature as (impurity mass, rule).
    fn best_for_feature(&self, f: usize, rows: &[u32], shift: f64, total: &Side) -> Option<(f64, SplitRule)> {
        let n = rows.len();
        let mut best: Option<(f64, SplitRule)> = None;
        let mut consider = |mass: f64, rule: SplitRule| {
            if best.as_ref().is_none_or(|(m, _)| mass < *m) {
                best = Some((mass, rule));
            }
        };
        match self.data.column(f) {
            Column::Continuous(values) => {
                let ranks = self.ranks[f].as_ref().expect("continuous ranks");
                let mut order = rows.to_vec();
                order.sort_unstable_by_key(|&r| ranks[r as usize]);
                let mut left = Side::empty(self.task);
                for i in 1..n {
                    left.add(self.label(order[i - 1]), shift);
                    let (a, b) = (order[i - 1] as usize, order[i] as usize);
                    if ranks[a] != ranks[b] {
                        let right = total.minus(&left);
                        consider(
                            left.mass() + right.mass(),
                            SplitRule::Threshold {
                                feature: f,
                                value: values[a],
                            },
                        );
                    }
                }
            }
            Column::Categorical(codes) => {
                let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
                for &r in rows {
                    groups.entry(codes[r as usize]).or_default().push(r);
                }
                if groups.len() < 2 {
                    return None;
                }
                for (code, members) in groups {
                    let left = self.side(&members, shift);
                    let right = total.minus(&left);
                    consider(
                        left.mass() + right.mass(),
                        SplitRule::OneVsRest {
                            feature: f,
                            category: code,
                        },
                    );
                }
            }
        }
        best
    }

    fn best_split(&self, rows: &[u32]) -> Option<SplitRule> {
        let n = rows.len() as f64;
        let shift = match self.task {
            Task::Classification { .. } => 0.0,
            Task::Regression => rows.iter().map(|&r| self.label(r)).sum::<f64>() / n,
        };
        let total = self.side(rows, shift);
        let parent = total.mass();
        let per_feature: Vec<Option<(f64, SplitRule)>> = (0..self.data.num_features())
            .into_par_iter()
            .map(|f| self.best_for_feature(f, rows, shift, &total))
            .collect();
        let mut best: Option<(f64, SplitRule)> = None;
        for (mass, rule) in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|(m, _)| mass < *m) {
                best = Some((mass, rule));
            }
        }
        let tolerance = 1e-12 * parent.abs().max(1.0);
        best.filter(|(m, _)| *m < parent - tolerance).map(|(_, r)| r)
    }
}

/// Greedy binary tree grown breadth-first to `max_depth`, each node taking the
/// cut with the lowest weighted Gini (classes) or squared error (reals).
pub fn greedy_tree(data: &Dataset, max_depth: usize) -> Result<DsModel> {
    if data.row_count() == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let task = task_of(data);
    let ranks = data
        .features()
        .columns()
        .iter()
        .map(|c| match c {
            Column::Continuous(v) => Some(dense_ranks(v)),
            Column::Categorical(_) => None,
        })
        .collect();
    let builder = Builder { data, task, ranks };
    let stats = |rows: &[u32]| NodeStats::from_labels(rows.iter().map(|&r| builder.label(r)), task);
    let mut nodes: BTreeMap<NodeId, DsNode> = BTreeMap::new();
    let mut queue: VecDeque<(NodeId, Vec<u32>, usize)> = VecDeque::new();
    let all = SampleIndexSet::all(data.row_count()).as_slice().to_vec();
    let root_stats = stats(&all);
    nodes.insert(
        0,
        DsNode {
            id: 0,
            parents: vec![],
            rule: None,
            children: vec![],
            terminal: true,
            prediction: root_stats.prediction(),
            stats: root_stats,
        },
    );
    queue.push_back((0, all, 0));
    let mut next = 1;
    while let Some((id, rows, depth)) = queue.pop_front() {
        if depth >= max_depth || rows.len() < 2 {
            continue;
        }
        let Some(rule) = builder.best_split(&rows) else {
            continue;
        };
        let column = data.column(rule.feature());
        let (left, right): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&r| rule.route(column.value(r as usize)) == Some(0));
        let mut children = Vec::with_capacity(2);
        for part in [left, right] {
            let s = stats(&part);
            nodes.insert(
                next,
                DsNode {
                    id: next,
                    parents: vec![id],
                    rule: None,
                    children: vec![],
                    terminal: true,
                    prediction: s.prediction(),
                    stats: s,
                },
            );
            children.push(next);
            queue.push_back((next, part, depth + 1));
            next += 1;
        }
        let node = nodes.get_mut(&id).expect("queued node");
        node.rule = Some(rule);
        node.children = children;
        node.terminal = false;
    }
    Ok(DsModel {
        task,
        num_features: data.num_features(),
        schema_fingerprint: data.schema().fingerprint(),
        config: ModelConfig {
            p_lim: 1.0,
            test_family: TestFamily::Parametric,
            split_mode: SplitMode::Greedy,
            seed: 0,
        },
        root: 0,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureDescriptor, LabelDescriptor, Labels, Schema};
    use crate::graph::{validate_dag, Prediction};

    #[test]
    fn xor_is_solved_at_depth_two() {
        let schema = Schema::new(
            vec![FeatureDescriptor::continuous("a"), FeatureDescriptor::continuous("b")],
            LabelDescriptor::class("y", 2),
        )
        .unwrap();
        let d = Dataset::new(
            schema,
            vec![
                Column::Continuous(vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0]),
                Column::Continuous(vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]),
            ],
            Labels::Class(vec![0, 1, 1, 0, 0, 1]),
        )
        .unwrap();
        let m = greedy_tree(&d, 2).unwrap();
        assert!(validate_dag(&m).is_empty());
        assert!(m.depth() <= 2);
        for r in 0..6 {
            assert_eq!(
                m.predict_one(&d.features().row(r)).unwrap(),
                Prediction::Class(d.label_values()[r] as u32)
            );
        }
        assert_eq!(greedy_tree(&d, 0).unwrap().nodes.len(), 1);
    }

    #[test]
    fn regression_split_reduces_error() {
        let schema = Schema::new(vec![FeatureDescriptor::categorical("c", 3)], LabelDescriptor::real("y")).unwrap();
        let d = Dataset::new(
            schema,
            vec![Column::Categorical(vec![0, 1, 2, 0, 1, 2])],
            Labels::Real(vec![1.0, 5.0, 1.0, 1.0, 5.0, 1.0]),
        )
        .unwrap();
        let m = greedy_tree(&d, 1).unwrap();
        assert_eq!(
            m.nodes[&0].rule,
            Some(SplitRule::OneVsRest {
                feature: 0,
                category: 1
            })
        );
    }
}
